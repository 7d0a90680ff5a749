//! Monte Carlo sweeps: trace calibration against the exact engine, the Main
//! Theorem residual, projection decay, and the free sandwich identity.

use freemeasures_core::cumulants::moments_from_cumulants;
use freemeasures_core::measures::{limit_expect_st, tuple_of_arity};
use freemeasures_core::partitions::Partition;
use freemeasures_core::processes::{increment_cumulants, ProcessSpec, Subdivision};
use freemeasures_core::scalar::{self, ExactScalar};
use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{Matrix, C64};
use crate::ensemble::{
    gue, hermitian_gaussian, largest_remainder_ranks, sample_increments, trial_rng,
    MatrixEnsembleConfig, Model,
};
use crate::error::{Result, SimError};
use crate::operators::{pr_matrix, st_matrix, st_matrix_with_powers};

/// One CSV/JSON row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub quantity: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub trial_count: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub reference: Option<f64>,
    pub pass: bool,
    pub seed: u64,
}

/// Mean, standard error and median of a sample, reduced in sample order.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            stderr: f64::NAN,
            median: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Summary {
        mean,
        stderr,
        median,
    }
}

/// `|estimate - reference| ≤ max(3·stderr, 1e-3)`.
pub fn within_band(estimate: f64, stderr: f64, reference: f64) -> bool {
    (estimate - reference).abs() <= (3.0 * stderr).max(1e-3)
}

fn run_trials<T: Send>(
    trials: usize,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// `X(I_1)^n`, `n ≤ 4`, and with two or more intervals a few mixed words.
pub fn default_calibration_words(n_intervals: usize) -> Vec<Vec<usize>> {
    let mut words = vec![vec![0], vec![0, 0], vec![0, 0, 0], vec![0, 0, 0, 0]];
    if n_intervals >= 2 {
        words.extend([
            vec![0, 1],
            vec![0, 1, 0, 1],
            vec![0, 0, 1, 1],
            vec![1, 0, 1],
        ]);
    }
    words
}

/// Exact `τ(X(I_{v_1}) ⋯ X(I_{v_k}))` from the increment cumulants.
pub fn exact_word_moment(
    spec: &ProcessSpec,
    s: &Subdivision,
    word: &[usize],
) -> Result<ExactScalar> {
    let tuple = tuple_of_arity(spec, word.len())?;
    let intervals = s.intervals();
    if let Some(&bad) = word.iter().find(|&&v| v >= intervals.len()) {
        return Err(SimError::Precondition(format!(
            "interval {bad} out of range"
        )));
    }
    let chosen: Vec<_> = word.iter().map(|&v| intervals[v].clone()).collect();
    Ok(moments_from_cumulants(
        &increment_cumulants(&tuple, &chosen)?,
        None,
    )?)
}

fn word_label(word: &[usize]) -> String {
    let parts: Vec<String> = word.iter().map(|v| format!("X{}", v + 1)).collect();
    format!("tau({})", parts.join(" "))
}

/// Mean normalised traces of words of increments against the exact values.
pub fn calibrate(
    spec: &ProcessSpec,
    s: &Subdivision,
    cfg: &MatrixEnsembleConfig,
    words: &[Vec<usize>],
) -> Result<Vec<SweepRow>> {
    let references: Vec<f64> = words
        .iter()
        .map(|w| exact_word_moment(spec, s, w).map(|x| scalar::to_f64(&x)))
        .collect::<Result<_>>()?;
    let per_trial = run_trials(cfg.trials, |trial| {
        let inc = sample_increments(spec, s, cfg, trial)?;
        words
            .iter()
            .map(|w| Ok(inc.word_trace(w)?.re))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(words
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let values: Vec<f64> = per_trial.iter().map(|v| v[j]).collect();
            let sum = summarize(&values);
            SweepRow {
                quantity: word_label(w),
                d: cfg.dim,
                n: s.n(),
                trial_count: cfg.trials,
                estimate: sum.mean,
                stderr: sum.stderr,
                reference: Some(references[j]),
                pass: within_band(sum.mean, sum.stderr, references[j]),
                seed: cfg.seed,
            }
        })
        .collect())
}

/// Per-trial relative residuals of the Main Theorem and traces of `St_π`.
#[derive(Clone, Debug, PartialEq)]
pub struct MainTheoremEstimate {
    pub relative_residuals: Vec<f64>,
    pub residual: Summary,
    pub traces: Vec<f64>,
    pub trace: Summary,
    /// `lim τ(St_π(t))` from the exact engine.
    pub reference: f64,
}

/// `‖L - R‖_F / ‖L‖_F` with `L = St_π(X)` and
/// `R = ∏_i R(C_i; X(t)) · ψ(Δ(B_1), .., Δ(B_o))`, where `Δ(B_j)` is the
/// diagonal measure on `|B_j|` copies of the increments.
pub fn main_theorem_matrix_residual(
    p: &Partition,
    spec: &ProcessSpec,
    cfg: &MatrixEnsembleConfig,
    s: &Subdivision,
) -> Result<MainTheoremEstimate> {
    if cfg.model != Model::PoissonSps {
        return Err(SimError::IncompatibleModel {
            model: cfg.model.to_string(),
            process: "the Main Theorem residual (s p s model only)".into(),
        });
    }
    let split = p.classify()?;
    let tuple = tuple_of_arity(spec, p.k())?;
    let r = tuple.unit_cumulants()?;
    let t = s.t();
    let coeff = split
        .inner()
        .iter()
        .fold(scalar::one(), |acc, c| acc * t * r.get(c));
    let coeff = scalar::to_f64(&coeff);
    let outer_sizes: Vec<usize> = split.outer().iter().map(Vec::len).collect();
    let psi = Partition::zero(outer_sizes.len());
    let reference = scalar::to_f64(&limit_expect_st(p, &tuple, t)?);
    let per_trial = run_trials(cfg.trials, |trial| {
        let inc = sample_increments(spec, s, cfg, trial)?;
        let lhs = st_matrix(p, &inc)?;
        let rhs = st_matrix_with_powers(&psi, &outer_sizes, &inc)?;
        let diff = inc.combine(&[(1.0, &lhs), (-coeff, &rhs)])?;
        let num = inc.norm(&diff)?;
        let den = inc.norm(&lhs)?;
        let rel = if num == 0.0 { 0.0 } else { num / den };
        Ok((rel, inc.trace(&lhs)?.re))
    })?;
    let relative_residuals: Vec<f64> = per_trial.iter().map(|x| x.0).collect();
    let traces: Vec<f64> = per_trial.iter().map(|x| x.1).collect();
    Ok(MainTheoremEstimate {
        residual: summarize(&relative_residuals),
        trace: summarize(&traces),
        relative_residuals,
        traces,
        reference,
    })
}

/// One `(d, N)` point of a residual trend: the median over repetitions of
/// the per-repetition mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub repetitions: Vec<f64>,
    pub median: f64,
}

/// Repetition `r` uses master seed `seed + r`.
pub fn main_theorem_trend(
    p: &Partition,
    spec: &ProcessSpec,
    t: &ExactScalar,
    points: &[(usize, usize)],
    repetitions: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrendPoint>> {
    points
        .iter()
        .map(|&(d, n)| {
            let s = Subdivision::uniform(t.clone(), n)?;
            let reps = (0..repetitions as u64)
                .map(|r| {
                    let cfg = MatrixEnsembleConfig::new(
                        d,
                        trials,
                        seed.wrapping_add(r),
                        Model::PoissonSps,
                    )?;
                    Ok(main_theorem_matrix_residual(p, spec, &cfg, &s)?
                        .residual
                        .mean)
                })
                .collect::<Result<Vec<f64>>>()?;
            let median = summarize(&reps).median;
            Ok(TrendPoint {
                d,
                n,
                repetitions: reps,
                median,
            })
        })
        .collect()
}

/// Strictly decreasing medians ending below `final_bound`.
pub fn trend_passes(points: &[TrendPoint], final_bound: f64) -> bool {
    points.windows(2).all(|w| w[1].median < w[0].median)
        && points.last().is_some_and(|p| p.median < final_bound)
}

/// How the blocks `Z_{i,j}` are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZModel {
    /// Independent GUE matrices (centered).
    CenteredGaussian,
    /// `Z = 1`, which is not centered.
    Identity,
}

/// Largest singular value by power iteration on `B^* B`.
pub fn largest_singular_value<R: Rng>(b: &Matrix, rng: &mut R) -> f64 {
    let n = b.ncols();
    if n == 0 {
        return 0.0;
    }
    let bh = b.t().mapv(|x| x.conj());
    let mut v: Array1<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let mut estimate = 0.0;
    for _ in 0..1000 {
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.mapv_inplace(|x| x / norm);
        let w = bh.dot(&b.dot(&v));
        let next = v
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>();
        v = w;
        if (next - estimate).abs() <= 1e-12 * next.abs() {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0).sqrt()
}

/// `δ^{1/2k} (4c)^k`, the envelope for `‖Σ_i p_i Z_{i,1} p_i ⋯ Z_{i,k} p_i‖`
/// when `‖Z_{i,j}‖ ≤ c`.
pub fn projection_envelope(mesh: f64, k: usize, c: f64) -> f64 {
    mesh.powf(1.0 / (2.0 * k as f64)) * (4.0 * c).powi(k as i32)
}

/// Norm of `Σ_i p_i Z_{i,1} p_i Z_{i,2} ⋯ Z_{i,k} p_i` for `N` equal
/// projections, one row per `N`. Only the `p_i`-block of each `Z_{i,j}`
/// enters, so only that block is sampled (a GUE block of variance `1/d`).
pub fn lem_proj_decay(
    dim: usize,
    trials: usize,
    seed: u64,
    k: usize,
    meshes: &[usize],
    z: ZModel,
) -> Result<Vec<SweepRow>> {
    if z == ZModel::Identity {
        return Err(SimError::Precondition(
            "the blocks Z_{i,j} must be centered".into(),
        ));
    }
    if k == 0 || dim < 2 || trials == 0 {
        return Err(SimError::Config(
            "need k ≥ 1, dim ≥ 2 and trials ≥ 1".into(),
        ));
    }
    let c = 2.0;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let weights = vec![scalar::ratio(1, n as i64); n];
        let ranks = largest_remainder_ranks(&weights, dim)?;
        let values = run_trials(trials, |trial| {
            let mut rng = trial_rng(seed, (n as u64) << 32 | trial);
            let mut best: f64 = 0.0;
            for &r in &ranks {
                let mut prod: Option<Matrix> = None;
                for _ in 0..k {
                    let block = hermitian_gaussian(r, 1.0 / dim as f64, &mut rng);
                    prod = Some(match prod {
                        None => block,
                        Some(m) => m.dot(&block),
                    });
                }
                let b = prod.expect("k ≥ 1");
                best = best.max(largest_singular_value(&b, &mut rng));
            }
            Ok(best)
        })?;
        let sum = summarize(&values);
        let envelope = projection_envelope(1.0 / n as f64, k, c);
        let monotone = rows.last().is_none_or(|prev| {
            sum.mean <= prev.estimate + 2.0 * (sum.stderr.powi(2) + prev.stderr.powi(2)).sqrt()
        });
        rows.push(SweepRow {
            quantity: format!("proj_norm_k{k}"),
            d: dim,
            n,
            trial_count: trials,
            estimate: sum.mean,
            stderr: sum.stderr,
            reference: Some(envelope),
            pass: monotone && sum.mean <= envelope,
            seed,
        });
    }
    Ok(rows)
}

/// `‖Σ_i X_i Z X_i - τ_d(Z) Δ_2‖_F / √d` with `Z = G + 1`, `G` an independent GUE.
pub fn corollary_matrix_residual(
    spec: &ProcessSpec,
    cfg: &MatrixEnsembleConfig,
    s: &Subdivision,
) -> Result<Summary> {
    let values = run_trials(cfg.trials, |trial| {
        let inc = sample_increments(spec, s, cfg, trial)?;
        let mut rng = trial_rng(cfg.seed ^ 0x5a5a_5a5a, trial);
        let mut z = gue(cfg.dim, &mut rng);
        for i in 0..cfg.dim {
            z[[i, i]] += C64::new(1.0, 0.0);
        }
        let tau_z = z.diag().sum().re / cfg.dim as f64;
        let sandwich = inc.conjugation_sum(&z)?;
        let delta2 = pr_matrix(&Partition::one(2), &inc)?;
        let diff = inc.combine(&[(1.0, &sandwich), (-tau_z, &delta2)])?;
        inc.norm(&diff)
    })?;
    Ok(summarize(&values))
}

/// The sandwich residual along a list of `N`, one row each; a row passes
/// when its mean is below the previous one.
pub fn corollary_trend(
    spec: &ProcessSpec,
    cfg: &MatrixEnsembleConfig,
    t: &ExactScalar,
    ns: &[usize],
) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let s = Subdivision::uniform(t.clone(), n)?;
        let sum = corollary_matrix_residual(spec, cfg, &s)?;
        let pass = rows.last().is_none_or(|prev| sum.mean < prev.estimate);
        rows.push(SweepRow {
            quantity: "sandwich_residual".into(),
            d: cfg.dim,
            n,
            trial_count: cfg.trials,
            estimate: sum.mean,
            stderr: sum.stderr,
            reference: Some(0.0),
            pass,
            seed: cfg.seed,
        });
    }
    Ok(rows)
}
