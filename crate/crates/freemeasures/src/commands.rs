use freemeasures_core::cumulants::{univariate_cumulants, univariate_moments};
use freemeasures_core::measures::{
    diagonal_identity_check, example_formulas_check, identity_suite, limit_expect,
    main_theorem_residual, tuple_of_arity, uniform_formula, CheckRecord, ExampleProcess,
    ExampleResidual, MeasureKind, Order, SuiteOptions,
};
use freemeasures_core::partitions::{
    mobius, noncrossing_partitions, set_partitions, Lattice, Partition,
};
use freemeasures_core::processes::{ProcessSpec, Subdivision};
use freemeasures_core::scalar::{self, ExactScalar};
use freemeasures_sim::experiments::{
    calibrate, default_calibration_words, lem_proj_decay, main_theorem_trend, summarize, SweepRow,
    ZModel,
};
use freemeasures_sim::MatrixEnsembleConfig;
use num_traits::Zero;
use serde::Serialize;

use crate::report::Report;
use crate::{
    Command, CumulantsCmd, KindArg, LatticeArg, OrderArg, Outcome, OutputArgs, PartitionsCmd,
    SimulateCmd, VerifyCmd,
};

type CmdResult = Result<Outcome, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_partition(text: &str) -> Result<Partition, String> {
    text.parse().map_err(err)
}

fn parse_process(text: &str) -> Result<ProcessSpec, String> {
    ProcessSpec::parse(text).map_err(err)
}

fn parse_time(text: &str) -> Result<ExactScalar, String> {
    let t = scalar::parse(text).map_err(err)?;
    if t <= ExactScalar::zero() {
        return Err(format!("t must be positive, got {text}"));
    }
    Ok(t)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| format!("bad {what} entry {s:?}"))
        })
        .collect()
}

fn lattice(l: LatticeArg) -> Lattice {
    match l {
        LatticeArg::Full => Lattice::Full,
        LatticeArg::Nc => Lattice::Noncrossing,
    }
}

fn lattice_name(l: LatticeArg) -> &'static str {
    match l {
        LatticeArg::Full => "full",
        LatticeArg::Nc => "noncrossing",
    }
}

fn classes(list: &[Vec<usize>]) -> String {
    let parts: String = list
        .iter()
        .map(|b| {
            let items: Vec<String> = b.iter().map(|e| (e + 1).to_string()).collect();
            format!("({})", items.join(","))
        })
        .collect();
    format!("({parts})")
}

fn finish<T: Serialize>(
    command: String,
    seed: Option<u64>,
    records: Vec<T>,
    output: &OutputArgs,
    pass: bool,
) -> CmdResult {
    Report::new(command, seed, records).emit(output.output, output.out.as_deref())?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

pub(crate) fn dispatch(command: Command, line: String) -> CmdResult {
    match command {
        Command::Partitions(c) => partitions(c, line),
        Command::Cumulants(c) => cumulants(c, line),
        Command::Verify(c) => verify(c, line),
        Command::Simulate(c) => simulate(c, line),
    }
}

#[derive(Serialize)]
struct EnumerateRecord {
    partition: String,
    blocks: usize,
    noncrossing: bool,
}

#[derive(Serialize)]
struct MobiusRecord {
    lower: String,
    upper: String,
    lattice: &'static str,
    mobius: String,
}

#[derive(Serialize)]
struct KrewerasRecord {
    partition: String,
    complement: String,
    double_complement: String,
}

#[derive(Serialize)]
struct ClassifyRecord {
    partition: String,
    noncrossing: bool,
    outer: String,
    inner: String,
    outer_count: usize,
    inner_count: usize,
}

fn partitions(cmd: PartitionsCmd, line: String) -> CmdResult {
    match cmd {
        PartitionsCmd::Enumerate { k, lattice, output } => {
            let list = match lattice {
                LatticeArg::Full => set_partitions(k),
                LatticeArg::Nc => noncrossing_partitions(k),
            }
            .map_err(err)?;
            let records: Vec<EnumerateRecord> = list
                .iter()
                .map(|p| EnumerateRecord {
                    partition: p.to_string(),
                    blocks: p.block_count(),
                    noncrossing: p.is_noncrossing(),
                })
                .collect();
            finish(line, None, records, &output, true)
        }
        PartitionsCmd::Mobius {
            partition,
            upper,
            lattice: l,
            output,
        } => {
            let lower = parse_partition(&partition)?;
            let upper = match upper {
                Some(u) => parse_partition(&u)?,
                None => Partition::one(lower.k()),
            };
            let m = mobius(&lower, &upper, lattice(l)).map_err(err)?;
            let record = MobiusRecord {
                lower: lower.to_string(),
                upper: upper.to_string(),
                lattice: lattice_name(l),
                mobius: scalar::format(&m),
            };
            finish(line, None, vec![record], &output, true)
        }
        PartitionsCmd::Kreweras { partition, output } => {
            let p = parse_partition(&partition)?;
            let k = p.kreweras().map_err(err)?;
            let kk = k.kreweras().map_err(err)?;
            let record = KrewerasRecord {
                partition: p.to_string(),
                complement: k.to_string(),
                double_complement: kk.to_string(),
            };
            finish(line, None, vec![record], &output, true)
        }
        PartitionsCmd::Classify { partition, output } => {
            let p = parse_partition(&partition)?;
            let split = p.classify().map_err(err)?;
            let record = ClassifyRecord {
                partition: p.to_string(),
                noncrossing: p.is_noncrossing(),
                outer: classes(split.outer()),
                inner: classes(split.inner()),
                outer_count: split.outer_count(),
                inner_count: split.inner_count(),
            };
            finish(line, None, vec![record], &output, true)
        }
    }
}

#[derive(Serialize)]
struct SequenceRecord {
    order: usize,
    value: String,
}

fn sequence(values: &[ExactScalar]) -> Vec<SequenceRecord> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| SequenceRecord {
            order: i + 1,
            value: scalar::format(v),
        })
        .collect()
}

fn cumulants(cmd: CumulantsCmd, line: String) -> CmdResult {
    match cmd {
        CumulantsCmd::ToMoments {
            process,
            order,
            output,
        } => {
            let spec = parse_process(&process)?;
            if order == 0 {
                return Err("order must be at least 1".into());
            }
            let r = (1..=order)
                .map(|n| spec.word_cumulant(&vec![0; n]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let m = univariate_moments(&r).map_err(err)?;
            finish(line, None, sequence(&m), &output, true)
        }
        CumulantsCmd::FromMoments { moments, output } => {
            let m = moments
                .split(',')
                .map(scalar::parse)
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let r = univariate_cumulants(&m).map_err(err)?;
            finish(line, None, sequence(&r), &output, true)
        }
    }
}

fn example_process(name: &str) -> Result<ExampleProcess, String> {
    match name.trim() {
        "free_poisson" | "poisson" => Ok(ExampleProcess::FreePoisson),
        "brownian" | "semicircular" => Ok(ExampleProcess::Brownian),
        other => Err(format!(
            "examples exist for free_poisson and brownian, not {other:?}"
        )),
    }
}

fn example_records(
    check: &str,
    partition: String,
    which: ExampleProcess,
    limit: &str,
    result: Result<ExampleResidual, String>,
) -> Vec<CheckRecord> {
    let rec = |suffix: &str, r: Result<ExactScalar, String>| match r {
        Ok(v) => CheckRecord::from_result(
            format!("{check}_{suffix}"),
            partition.clone(),
            which.name(),
            limit,
            Ok(v),
        ),
        Err(e) => CheckRecord {
            check: format!("{check}_{suffix}"),
            partition: partition.clone(),
            process: which.name().into(),
            subdivision: limit.into(),
            residual: None,
            pass: false,
            error: Some(e),
        },
    };
    match result {
        Ok(res) => vec![
            rec("L1", Ok(res.l1)),
            rec(
                "L2",
                res.l2
                    .ok_or_else(|| "L2 arity exceeds the product guard".to_string()),
            ),
        ],
        Err(e) => vec![rec("L1", Err(e.clone())), rec("L2", Err(e))],
    }
}

#[derive(Serialize)]
struct FormulaRecord {
    kind: String,
    partition: String,
    process: String,
    t: String,
    power_of_n: i64,
    coefficient: String,
    limit: String,
    pass: bool,
}

fn verify(cmd: VerifyCmd, line: String) -> CmdResult {
    match cmd {
        VerifyCmd::Suite {
            process,
            k_max,
            output,
        } => {
            let spec = parse_process(&process)?;
            let records = identity_suite(&spec, k_max, &SuiteOptions::default()).map_err(err)?;
            report_checks(line, records, &output)
        }
        VerifyCmd::MainTheorem {
            process,
            partition,
            t,
            order,
            output,
        } => {
            let spec = parse_process(&process)?;
            let p = parse_partition(&partition)?;
            let t = parse_time(&t)?;
            let orders: &[Order] = match order {
                OrderArg::L1 => &[Order::L1],
                OrderArg::L2 => &[Order::L2],
                OrderArg::Both => &[Order::L1, Order::L2],
            };
            let tuple = tuple_of_arity(&spec, p.k()).map_err(err)?;
            let limit = format!("limit(t={})", scalar::format(&t));
            let records = orders
                .iter()
                .map(|&o| {
                    CheckRecord::from_result(
                        format!("main_theorem_{o}"),
                        p.to_string(),
                        spec.to_string(),
                        limit.clone(),
                        main_theorem_residual(&p, &tuple, o, &t),
                    )
                })
                .collect();
            report_checks(line, records, &output)
        }
        VerifyCmd::Examples {
            process,
            k_max,
            t,
            output,
        } => {
            let which = example_process(&process)?;
            let t = parse_time(&t)?;
            if k_max == 0 {
                return Err("k-max must be at least 1".into());
            }
            let limit = format!("limit(t={})", scalar::format(&t));
            let mut records = Vec::new();
            for k in 1..=k_max {
                for p in noncrossing_partitions(k).map_err(err)? {
                    let res = example_formulas_check(which, &p, &t).map_err(err);
                    records.extend(example_records(
                        "example",
                        p.to_string(),
                        which,
                        &limit,
                        res,
                    ));
                }
                let res = diagonal_identity_check(which, k, &t).map_err(err);
                records.extend(example_records(
                    "diagonal_identity",
                    Partition::one(k).to_string(),
                    which,
                    &limit,
                    res,
                ));
            }
            report_checks(line, records, &output)
        }
        VerifyCmd::Formula {
            process,
            partition,
            t,
            kind,
            output,
        } => {
            let spec = parse_process(&process)?;
            let p = parse_partition(&partition)?;
            let t = parse_time(&t)?;
            let kind = match kind {
                KindArg::St => MeasureKind::St,
                KindArg::Pr => MeasureKind::Pr,
            };
            let tuple = tuple_of_arity(&spec, p.k()).map_err(err)?;
            let f = uniform_formula(kind, &p, &tuple, &t).map_err(err)?;
            let lim = limit_expect(kind, &p, &tuple, &t).map_err(err)?;
            let pass = f.limit().as_ref() == Some(&lim);
            let records: Vec<FormulaRecord> = f
                .coefficient_rows()
                .into_iter()
                .map(|(power, c)| FormulaRecord {
                    kind: kind.to_string(),
                    partition: p.to_string(),
                    process: spec.to_string(),
                    t: scalar::format(&t),
                    power_of_n: power,
                    coefficient: scalar::format(&c),
                    limit: scalar::format(&lim),
                    pass,
                })
                .collect();
            finish(line, None, records, &output, pass)
        }
    }
}

fn report_checks(line: String, records: Vec<CheckRecord>, output: &OutputArgs) -> CmdResult {
    let pass = records.iter().all(|r| r.pass);
    for r in records.iter().filter(|r| !r.pass) {
        eprintln!(
            "FAIL {} {} {} {}: {}",
            r.check,
            r.partition,
            r.process,
            r.subdivision,
            r.error
                .clone()
                .or_else(|| r.residual.as_ref().map(scalar::format))
                .unwrap_or_default()
        );
    }
    finish(line, None, records, output, pass)
}

fn parse_points(text: &str) -> Result<Vec<(usize, usize)>, String> {
    text.split(',')
        .map(|pair| {
            let (d, n) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("point {pair:?} is not d:N"))?;
            let d = d
                .trim()
                .parse()
                .map_err(|_| format!("bad dimension in {pair:?}"))?;
            let n = n.trim().parse().map_err(|_| format!("bad N in {pair:?}"))?;
            Ok((d, n))
        })
        .collect()
}

fn sweep_pass(rows: &[SweepRow]) -> bool {
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "FAIL {} d={} N={}: estimate {} reference {:?}",
            r.quantity, r.d, r.n, r.estimate, r.reference
        );
    }
    rows.iter().all(|r| r.pass)
}

fn simulate(cmd: SimulateCmd, line: String) -> CmdResult {
    match cmd {
        SimulateCmd::Calibrate {
            process,
            dim,
            trials,
            seed,
            n,
            t,
            output,
        } => {
            let spec = parse_process(&process)?;
            let t = parse_time(&t)?;
            let model = MatrixEnsembleConfig::model_for(&spec).map_err(err)?;
            let cfg = MatrixEnsembleConfig::new(dim, trials, seed, model).map_err(err)?;
            let s = Subdivision::uniform(t, n).map_err(err)?;
            let rows = calibrate(&spec, &s, &cfg, &default_calibration_words(n)).map_err(err)?;
            let pass = sweep_pass(&rows);
            finish(line, Some(seed), rows, &output, pass)
        }
        SimulateCmd::MainTheorem {
            process,
            partition,
            points,
            dim,
            n,
            reps,
            trials,
            seed,
            t,
            bound,
            output,
        } => {
            let spec = parse_process(&process)?;
            let p = parse_partition(&partition)?;
            let t = parse_time(&t)?;
            let points = match (dim, n) {
                (Some(d), Some(n)) => vec![(d, n)],
                _ => parse_points(&points)?,
            };
            if reps == 0 {
                return Err("reps must be at least 1".into());
            }
            let trend =
                main_theorem_trend(&p, &spec, &t, &points, reps, trials, seed).map_err(err)?;
            let last = trend.len().saturating_sub(1);
            let rows: Vec<SweepRow> = trend
                .iter()
                .enumerate()
                .map(|(j, point)| {
                    let decreasing = j == 0 || point.median < trend[j - 1].median;
                    let bounded = j != last || point.median < bound;
                    SweepRow {
                        quantity: format!("main_theorem_residual {p}"),
                        d: point.d,
                        n: point.n,
                        trial_count: trials * reps,
                        estimate: point.median,
                        stderr: summarize(&point.repetitions).stderr,
                        reference: None,
                        pass: decreasing && bounded,
                        seed,
                    }
                })
                .collect();
            let pass = sweep_pass(&rows);
            finish(line, Some(seed), rows, &output, pass)
        }
        SimulateCmd::ProjDecay {
            k,
            dim,
            trials,
            seed,
            meshes,
            output,
        } => {
            let meshes: Vec<usize> = parse_list(&meshes, "mesh")?;
            let rows = lem_proj_decay(dim, trials, seed, k, &meshes, ZModel::CenteredGaussian)
                .map_err(err)?;
            let pass = sweep_pass(&rows);
            finish(line, Some(seed), rows, &output, pass)
        }
    }
}
