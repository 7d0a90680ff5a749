//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use freemeasures_core::cumulants::moments_from_cumulants;
use freemeasures_core::cumulants::{univariate_moments, CumulantFunctional};
use freemeasures_core::measures::{
    diagonal_identity_check, diagonal_nesting_residual, example_formulas_check, expect_pr,
    expect_st, inner_peeling_residual, inner_singleton_norm, limit_expect_st,
    main_theorem_residual, standard_subdivisions, tuple_of_arity, uniform_formula, ExampleProcess,
    MeasureKind, Order,
};
use freemeasures_core::partitions::{
    bell_number, catalan_number, mobius, noncrossing_partitions, set_partitions, Lattice, Partition,
};
use freemeasures_core::processes::{
    increment_cumulants, make_custom, make_free_poisson, make_semicircular,
    validate_substitution_rule, ProcessSpec, Subdivision,
};
use freemeasures_core::scalar::{self, int, ratio, ExactScalar};
use freemeasures_sim::experiments::{
    calibrate, lem_proj_decay, main_theorem_trend, trend_passes, ZModel,
};
use freemeasures_sim::{MatrixEnsembleConfig, Model};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn fixtures() -> Vec<(&'static str, ProcessSpec)> {
    vec![
        ("free_poisson(1)", make_free_poisson(int(1)).unwrap()),
        ("semicircular", make_semicircular()),
        (
            "custom(1/2,1/3,1/5,1/7)",
            make_custom(vec![ratio(1, 2), ratio(1, 3), ratio(1, 5), ratio(1, 7)]).unwrap(),
        ),
    ]
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn zero(x: ExactScalar, what: impl FnOnce() -> String) -> Result<(), String> {
    ensure(x.is_zero(), || {
        format!("{}: residual {}", what(), scalar::format(&x))
    })
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Restricted growth strings of length `k`.
fn rgs(k: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, k: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=max + 1 {
            prefix.push(v);
            grow(prefix, k, max.max(v), out);
            prefix.pop();
        }
    }
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    grow(&mut vec![0], k, 0, &mut out);
    out
}

fn crosses(labels: &[usize]) -> bool {
    let k = labels.len();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                for d in c + 1..k {
                    if labels[a] == labels[c] && labels[b] == labels[d] && labels[a] != labels[b] {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn bell_triangle(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 1..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            next.push(next.last().unwrap() + x);
        }
        row = next;
    }
    if n == 0 {
        1
    } else {
        *row.last().unwrap()
    }
}

fn lattice_counts() -> Outcome {
    let mut catalan = 1u64;
    for k in 1..=8usize {
        catalan = catalan * 2 * (2 * k as u64 - 1) / (k as u64 + 1);
        let oracle: Vec<Vec<usize>> = rgs(k);
        let all: BTreeSet<Vec<usize>> = set_partitions(k)
            .map_err(e)?
            .iter()
            .map(|p| p.labels().to_vec())
            .collect();
        let nc: BTreeSet<Vec<usize>> = noncrossing_partitions(k)
            .map_err(e)?
            .iter()
            .map(|p| p.labels().to_vec())
            .collect();
        let oracle_all: BTreeSet<Vec<usize>> = oracle.iter().cloned().collect();
        let oracle_nc: BTreeSet<Vec<usize>> =
            oracle.iter().filter(|l| !crosses(l)).cloned().collect();
        ensure(all == oracle_all, || {
            format!("set partitions of {k} differ")
        })?;
        ensure(nc == oracle_nc, || {
            format!("noncrossing partitions of {k} differ")
        })?;
        ensure(all.len() as u64 == bell_triangle(k), || {
            format!("Bell({k})")
        })?;
        ensure(nc.len() as u64 == catalan, || format!("Catalan({k})"))?;
        ensure(bell_number(k) == bell_triangle(k).into(), || {
            format!("bell_number({k})")
        })?;
        ensure(catalan_number(k) == catalan.into(), || {
            format!("catalan_number({k})")
        })?;
    }
    Ok("k ≤ 8, Bell(8) = 4140, Catalan(8) = 1430".into())
}

fn roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..100 {
        let k = 1 + trial % 6;
        let r = CumulantFunctional::from_fn(k, |_| {
            Ok(ratio(rng.random_range(-6..=6), rng.random_range(1..=7)))
        })
        .map_err(e)?;
        let back = r.to_moments().map_err(e)?.to_cumulants().map_err(e)?;
        for mask in 1usize..1 << k {
            let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            ensure(back.get(&subset) == r.get(&subset), || {
                format!("trial {trial}, subset {subset:?}")
            })?;
        }
    }
    let poisson = univariate_moments(&vec![int(1); 5]).map_err(e)?;
    let semi = univariate_moments(&[int(0), int(1), int(0), int(0), int(0)]).map_err(e)?;
    ensure(poisson == [1, 2, 5, 14, 42].map(int), || {
        format!("free Poisson moments {poisson:?}")
    })?;
    ensure(semi == [0, 1, 0, 2, 0].map(int), || {
        format!("semicircular moments {semi:?}")
    })?;
    Ok("100 random functionals, arity ≤ 6".into())
}

fn engine_vs_brute_force() -> Outcome {
    let mut checked = 0;
    for (name, spec) in fixtures() {
        for k in 1..=4 {
            let tuple = tuple_of_arity(&spec, k).map_err(e)?;
            let parts = set_partitions(k).map_err(e)?;
            let mut subs: Vec<Subdivision> = (1..=6)
                .map(|n| Subdivision::uniform(int(1), n).unwrap())
                .collect();
            subs.push(
                Subdivision::from_lengths(vec![ratio(1, 3), ratio(1, 2), ratio(1, 6), ratio(2, 3)])
                    .unwrap(),
            );
            for s in &subs {
                let n = s.n();
                let intervals = s.intervals();
                // τ(X(I_{i_1}) ⋯ X(I_{i_k})) for every index tuple, keyed by tuple.
                let mut moments: Vec<(Vec<usize>, ExactScalar)> = Vec::new();
                let mut idx = vec![0usize; k];
                loop {
                    let chosen: Vec<_> = idx.iter().map(|&i| intervals[i].clone()).collect();
                    let r = increment_cumulants(&tuple, &chosen).map_err(e)?;
                    moments.push((idx.clone(), moments_from_cumulants(&r, None).map_err(e)?));
                    let mut pos = 0;
                    while pos < k && idx[pos] == n - 1 {
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == k {
                        break;
                    }
                    idx[pos] += 1;
                }
                for p in &parts {
                    let mut st = ExactScalar::zero();
                    let mut pr = ExactScalar::zero();
                    for (i, m) in &moments {
                        let constant_on_blocks = p
                            .blocks()
                            .iter()
                            .all(|b| b.iter().all(|&x| i[x] == i[b[0]]));
                        if constant_on_blocks {
                            pr += m;
                        }
                        let kernel = Partition::from_labels(i);
                        if &kernel == p {
                            st += m;
                        }
                    }
                    let got_st = expect_st(p, s, &tuple).map_err(e)?;
                    let got_pr = expect_pr(p, s, &tuple).map_err(e)?;
                    ensure(got_st == st, || format!("St {p} {name} N={n}"))?;
                    ensure(got_pr == pr, || format!("Pr {p} {name} N={n}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (π, process, subdivision) cases"))
}

fn finite_inversion() -> Outcome {
    let mut checked = 0;
    for (name, spec) in fixtures() {
        let tuple = tuple_of_arity(&spec, 4).map_err(e)?;
        for s in standard_subdivisions() {
            for p in set_partitions(4).map_err(e)? {
                let mut pr_sum = ExactScalar::zero();
                let mut st_sum = ExactScalar::zero();
                for q in p.coarsenings() {
                    pr_sum += expect_st(&q, &s, &tuple).map_err(e)?;
                    st_sum += mobius(&p, &q, Lattice::Full).map_err(e)?
                        * expect_pr(&q, &s, &tuple).map_err(e)?;
                }
                zero(expect_pr(&p, &s, &tuple).map_err(e)? - pr_sum, || {
                    format!("Pr = ΣSt, {p} {name}")
                })?;
                zero(expect_st(&p, &s, &tuple).map_err(e)? - st_sum, || {
                    format!("Möbius, {p} {name}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases over P(4)"))
}

fn limit_formula() -> Outcome {
    let times = [int(1), ratio(3, 2)];
    for (name, spec) in fixtures() {
        for k in 1..=5 {
            let tuple = tuple_of_arity(&spec, k).map_err(e)?;
            let r = tuple.unit_cumulants().map_err(e)?;
            for p in noncrossing_partitions(k).map_err(e)? {
                for t in &times {
                    let expected =
                        scalar::pow(t, p.block_count()) * r.product_over(&p).map_err(e)?;
                    zero(
                        limit_expect_st(&p, &tuple, t).map_err(e)? - expected,
                        || format!("{p} {name}"),
                    )?;
                }
            }
        }
        let tuple = tuple_of_arity(&spec, 4).map_err(e)?;
        for p in set_partitions(4)
            .map_err(e)?
            .into_iter()
            .filter(|p| !p.is_noncrossing())
        {
            let f = uniform_formula(MeasureKind::St, &p, &tuple, &int(1)).map_err(e)?;
            zero(f.constant_term(), || format!("constant term of {p} {name}"))?;
        }
    }
    Ok("NC(k), k ≤ 5; crossing P(4) closed forms vanish in the limit".into())
}

fn main_theorem() -> Outcome {
    let t = int(1);
    let mut l1 = 0;
    let mut l2 = 0;
    let mut gate = 0;
    for (name, spec) in fixtures() {
        for k in 1..=5 {
            let tuple = tuple_of_arity(&spec, k).map_err(e)?;
            for p in noncrossing_partitions(k).map_err(e)? {
                zero(
                    main_theorem_residual(&p, &tuple, Order::L1, &t).map_err(e)?,
                    || format!("L1 {p} {name}"),
                )?;
                l1 += 1;
            }
        }
        for k in 1..=4 {
            let tuple = tuple_of_arity(&spec, k).map_err(e)?;
            let report = validate_substitution_rule(&tuple, 6).map_err(e)?;
            ensure(report.passed(), || {
                format!("substitution rule fails for {name}: {:?}", report.failures)
            })?;
            gate += report.patterns_checked;
            for p in noncrossing_partitions(k).map_err(e)? {
                zero(
                    main_theorem_residual(&p, &tuple, Order::L2, &t).map_err(e)?,
                    || format!("L2 {p} {name}"),
                )?;
                l2 += 1;
            }
        }
    }
    Ok(format!(
        "{l1} L1 and {l2} L2 residuals, {gate} substitution patterns"
    ))
}

fn examples() -> Outcome {
    let mut checked = 0;
    for which in [ExampleProcess::FreePoisson, ExampleProcess::Brownian] {
        for t in [int(1), ratio(3, 2)] {
            for p in noncrossing_partitions(4).map_err(e)? {
                let res = example_formulas_check(which, &p, &t).map_err(e)?;
                ensure(res.l2.is_some(), || format!("no L2 residual for {p}"))?;
                ensure(res.is_zero(), || format!("{} {p}: {res:?}", which.name()))?;
                checked += 1;
            }
            for n in 1..=4 {
                let res = diagonal_identity_check(which, n, &t).map_err(e)?;
                ensure(res.is_zero(), || format!("{} Δ_{n}: {res:?}", which.name()))?;
            }
        }
    }
    Ok(format!("{checked} partitions of NC(4) in L1 and L2"))
}

fn compositions(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (1..=k)
        .flat_map(|first| {
            compositions(k - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn peeling_singletons_nesting() -> Outcome {
    let t = ratio(3, 2);
    let (mut peel, mut single, mut nest) = (0, 0, 0);
    let mut specs = fixtures();
    specs.push((
        "custom(0,1/3,1/5,1/7)",
        make_custom(vec![int(0), ratio(1, 3), ratio(1, 5), ratio(1, 7)]).unwrap(),
    ));
    for (name, spec) in specs {
        for k in 1..=4 {
            let tuple = tuple_of_arity(&spec, k).map_err(e)?;
            for p in noncrossing_partitions(k).map_err(e)? {
                let split = p.classify().map_err(e)?;
                for class in 0..split.inner_count() {
                    for order in [Order::L1, Order::L2] {
                        let r = inner_peeling_residual(&p, class, &tuple, order, &t).map_err(e)?;
                        zero(r, || format!("peeling {p} class {class} {order} {name}"))?;
                        peel += 1;
                    }
                }
                if tuple.is_centered().map_err(e)? && split.inner().iter().any(|c| c.len() == 1) {
                    zero(inner_singleton_norm(&p, &tuple, &t).map_err(e)?, || {
                        format!("singleton {p} {name}")
                    })?;
                    single += 1;
                }
            }
            for sizes in compositions(k) {
                for order in [Order::L1, Order::L2] {
                    let r = diagonal_nesting_residual(&sizes, &tuple, order, &t).map_err(e)?;
                    zero(r, || format!("nesting {sizes:?} {order} {name}"))?;
                    nest += 1;
                }
            }
        }
    }
    ensure(single > 0, || "no inner singleton was checked".into())?;
    Ok(format!(
        "{peel} peeling, {single} inner-singleton, {nest} nesting residuals"
    ))
}

fn matrix_calibration() -> Outcome {
    let spec = make_free_poisson(int(1)).unwrap();
    let s = Subdivision::uniform(int(1), 1).unwrap();
    let cfg = MatrixEnsembleConfig::new(400, 200, 7, Model::PoissonSps).map_err(e)?;
    let rows = calibrate(&spec, &s, &cfg, &[vec![0, 0], vec![0, 0, 0]]).map_err(e)?;
    let detail: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:.4} ± {:.4} vs {}",
                r.estimate,
                r.stderr,
                r.reference.unwrap_or(f64::NAN)
            )
        })
        .collect();
    ensure(
        rows[0].reference == Some(2.0) && rows[1].reference == Some(5.0),
        || "wrong references".into(),
    )?;
    ensure(
        rows.iter()
            .all(|r| (r.estimate - r.reference.unwrap()).abs() <= 3.0 * r.stderr),
        || detail.join("; "),
    )?;
    Ok(format!("m2, m3: {}", detail.join("; ")))
}

fn matrix_main_theorem() -> Outcome {
    let spec = make_free_poisson(int(1)).unwrap();
    let p: Partition = "((1,3)(2))".parse().map_err(e)?;
    let points = [(150, 20), (300, 40), (600, 80)];
    let trend = main_theorem_trend(&p, &spec, &int(1), &points, 5, 4, 2024).map_err(e)?;
    let detail: Vec<String> = trend
        .iter()
        .map(|t| format!("({}, {}) {:.4}", t.d, t.n, t.median))
        .collect();
    ensure(trend_passes(&trend, 0.2), || detail.join(", "))?;
    Ok(format!("medians {}", detail.join(", ")))
}

fn proj_decay() -> Outcome {
    let mut detail = Vec::new();
    for k in [1, 2] {
        let rows = lem_proj_decay(512, 20, 17, k, &[2, 4, 8, 16, 32], ZModel::CenteredGaussian)
            .map_err(e)?;
        let line: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.estimate)).collect();
        ensure(rows.iter().all(|r| r.pass), || {
            format!("k={k}: {}", line.join(" "))
        })?;
        ensure(
            rows.windows(2).all(|w| w[1].estimate < w[0].estimate),
            || format!("k={k} not decreasing"),
        )?;
        detail.push(format!("k={k}: {}", line.join(" ")));
    }
    Ok(detail.join("; "))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "lattice counts",
            lattice_counts,
            Some(Duration::from_secs(10)),
        ),
        ("moment-cumulant roundtrip", roundtrip, None),
        (
            "engine vs brute force",
            engine_vs_brute_force,
            Some(Duration::from_secs(60)),
        ),
        (
            "finite inversion and Möbius consistency",
            finite_inversion,
            None,
        ),
        (
            "limit of St is t^|π| R_π; crossing constant terms vanish",
            limit_formula,
            None,
        ),
        (
            "Main Theorem L1 (k ≤ 5) and L2 (k ≤ 4)",
            main_theorem,
            Some(Duration::from_secs(600)),
        ),
        ("free Poisson and Brownian examples", examples, None),
        (
            "inner peeling, inner singletons, diagonal nesting",
            peeling_singletons_nesting,
            None,
        ),
        (
            "matrix calibration m2 = 2, m3 = 5",
            matrix_calibration,
            Some(Duration::from_secs(120)),
        ),
        (
            "matrix Main Theorem residual trend",
            matrix_main_theorem,
            None,
        ),
        ("projection norm decay, k = 1, 2", proj_decay, None),
    ];
    let total = criteria.len();
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, budget) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; took {elapsed:.1?}, budget {limit:?}"));
            }
        }
        match &outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1}s]", elapsed.as_secs_f64()),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why} [{:.1}s]", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {total} criteria passed", total - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
