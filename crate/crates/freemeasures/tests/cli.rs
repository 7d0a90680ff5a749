use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_freemeasures"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, stdout, stderr) = run(args);
    let v = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout} {stderr}"));
    (code, v)
}

#[test]
fn classify_reports_inner_and_outer_classes() {
    let (code, v) = json(&[
        "partitions",
        "classify",
        "--partition",
        "((1,6,7)(2,5)(3)(4)(8)(9,10))",
    ]);
    assert_eq!(code, 0);
    let r = &v["records"][0];
    assert_eq!(r["outer"], "((1,6,7)(8)(9,10))");
    assert_eq!(r["inner"], "((2,5)(3)(4))");
    assert_eq!(v["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(v["command"]
        .as_str()
        .unwrap()
        .starts_with("partitions classify"));
}

#[test]
fn moments_of_free_poisson() {
    let (code, v) = json(&[
        "cumulants",
        "to-moments",
        "--process",
        "free_poisson",
        "--order",
        "4",
    ]);
    assert_eq!(code, 0);
    let values: Vec<&str> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["1/1", "2/1", "5/1", "14/1"]);
    let (_, v) = json(&["cumulants", "from-moments", "--moments", "0,1,0,2,0,5"]);
    let values: Vec<&str> = v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["0/1", "1/1", "0/1", "0/1", "0/1", "0/1"]);
}

#[test]
fn suite_passes_with_zero_residuals() {
    let (code, v) = json(&[
        "verify",
        "suite",
        "--process",
        "free_poisson",
        "--k-max",
        "4",
    ]);
    assert_eq!(code, 0);
    let records = v["records"].as_array().unwrap();
    assert!(records.len() > 100);
    assert!(records
        .iter()
        .all(|r| r["residual"] == "0/1" && r["pass"] == true));
}

#[test]
fn enumeration_and_lattice_operations() {
    let (code, v) = json(&["partitions", "enumerate", "--k", "4", "--lattice", "nc"]);
    assert_eq!(code, 0);
    assert_eq!(v["records"].as_array().unwrap().len(), 14);
    let (_, v) = json(&["partitions", "enumerate", "--k", "4"]);
    assert_eq!(v["records"].as_array().unwrap().len(), 15);
    let (_, v) = json(&["partitions", "mobius", "--partition", "((1)(2)(3)(4))"]);
    assert_eq!(v["records"][0]["mobius"], "-5/1");
    let (_, v) = json(&[
        "partitions",
        "mobius",
        "--partition",
        "((1)(2)(3)(4))",
        "--lattice",
        "full",
    ]);
    assert_eq!(v["records"][0]["mobius"], "-6/1");
    let (_, v) = json(&["partitions", "kreweras", "--partition", "((1,2)(3))"]);
    assert_eq!(v["records"][0]["complement"], "((1)(2,3))");
}

#[test]
fn exact_checks_and_examples() {
    for process in ["free_poisson", "semicircular", "custom:1/2,1/3,1/5,1/7"] {
        let (code, v) = json(&[
            "verify",
            "main-theorem",
            "--process",
            process,
            "--partition",
            "((1,4)(2,3))",
        ]);
        assert_eq!(code, 0, "{process}");
        assert_eq!(v["records"].as_array().unwrap().len(), 2);
    }
    for process in ["free_poisson", "brownian"] {
        let (code, _) = json(&[
            "verify",
            "examples",
            "--process",
            process,
            "--k-max",
            "3",
            "--t",
            "3/2",
        ]);
        assert_eq!(code, 0, "{process}");
    }
    let (code, v) = json(&[
        "verify",
        "formula",
        "--process",
        "free_poisson",
        "--partition",
        "((1,3)(2,4))",
    ]);
    assert_eq!(code, 0);
    assert!(v["records"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["limit"] == "0/1"));
}

#[test]
fn csv_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let p = path.to_str().unwrap();
    let (code, stdout, _) = run(&[
        "partitions",
        "enumerate",
        "--k",
        "3",
        "--output",
        "csv",
        "--out",
        p,
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("partition,blocks,noncrossing"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        run(&["partitions", "classify", "--partition", "((1,2)"]).0,
        2
    );
    assert_eq!(run(&["verify", "suite", "--process", "nonsense"]).0, 2);
    assert_eq!(
        run(&[
            "verify",
            "suite",
            "--process",
            "free_poisson",
            "--k-max",
            "9"
        ])
        .0,
        2
    );
    assert_eq!(
        run(&[
            "simulate",
            "calibrate",
            "--process",
            "custom:1,2",
            "--dim",
            "10"
        ])
        .0,
        2
    );
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn failing_checks_exit_with_one() {
    // A crossing partition has no nested-collapse factorisation.
    let (code, v) = json(&[
        "verify",
        "main-theorem",
        "--process",
        "free_poisson",
        "--partition",
        "((1,3)(2,4))",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["records"][0]["pass"], false);
    // An unreachable bound makes the final point fail.
    let (code, v) = json(&[
        "simulate",
        "main-theorem",
        "--dim",
        "40",
        "--n",
        "4",
        "--reps",
        "1",
        "--trials",
        "1",
        "--bound",
        "0",
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["records"][0]["pass"], false);
}

#[test]
fn simulation_reports_replay_identically() {
    let args = [
        "simulate",
        "calibrate",
        "--process",
        "free_poisson",
        "--dim",
        "40",
        "--trials",
        "8",
        "--seed",
        "5",
        "--n",
        "2",
    ];
    let (code, first, _) = run(&args);
    assert!(code == 0 || code == 1);
    let (_, second, _) = run(&args);
    assert_eq!(first, second);
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["seed"], 5);
    let replay: Vec<String> = v["command"]
        .as_str()
        .unwrap()
        .split(' ')
        .map(|s| s.trim_matches('"').to_string())
        .collect();
    let (_, third, _) = run(&replay.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(first, third);

    let (code, v) = json(&[
        "simulate",
        "proj-decay",
        "--k",
        "1",
        "--dim",
        "128",
        "--trials",
        "6",
        "--meshes",
        "2,8",
    ]);
    assert_eq!(code, 0);
    let rows = v["records"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["N"], 8);
}
