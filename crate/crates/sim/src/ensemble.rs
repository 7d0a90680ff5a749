use std::fmt;
use std::str::FromStr;

use freemeasures_core::processes::{Law, ProcessSpec, Subdivision};
use freemeasures_core::scalar::{self, ExactScalar};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blocks::{BlockMatrix, Matrix, C64};
use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `X(I) = s p(I) s`; free Poisson only.
    PoissonSps,
    /// Independent GUE increments scaled by `√|I|`; semicircular only.
    GaussianIncrements,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::PoissonSps => "poisson_sps",
            Model::GaussianIncrements => "gaussian_increments",
        })
    }
}

impl FromStr for Model {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson_sps" => Ok(Model::PoissonSps),
            "gaussian_increments" => Ok(Model::GaussianIncrements),
            other => Err(SimError::Config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEnsembleConfig {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub model: Model,
}

impl MatrixEnsembleConfig {
    pub fn new(dim: usize, trials: usize, seed: u64, model: Model) -> Result<Self> {
        if dim < 2 {
            return Err(SimError::Config(format!(
                "dim must be at least 2, got {dim}"
            )));
        }
        if trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        Ok(Self {
            dim,
            trials,
            seed,
            model,
        })
    }

    /// The model matching a process, if there is one.
    pub fn model_for(spec: &ProcessSpec) -> Result<Model> {
        match single_law(spec)? {
            SingleLaw::Poisson(_) => Ok(Model::PoissonSps),
            SingleLaw::Semicircular => Ok(Model::GaussianIncrements),
        }
    }
}

/// Independent stream per trial: ChaCha8 keyed by the master seed, stream = trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Hermitian `d × d` with independent complex Gaussian entries, `E|h_ij|² = 1/d`.
pub fn gue<R: Rng>(d: usize, rng: &mut R) -> Matrix {
    hermitian_gaussian(d, 1.0 / d as f64, rng)
}

/// Hermitian `n × n` with `E|h_ij|² = variance`.
pub fn hermitian_gaussian<R: Rng>(d: usize, variance: f64, rng: &mut R) -> Matrix {
    let diag_sd = variance.sqrt();
    let off_sd = (0.5 * variance).sqrt();
    let mut h = Matrix::zeros((d, d));
    for i in 0..d {
        let x: f64 = rng.sample(StandardNormal);
        h[[i, i]] = C64::new(x * diag_sd, 0.0);
        for j in i + 1..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(re * off_sd, im * off_sd);
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
    h
}

pub fn is_hermitian(m: &Matrix, tol: f64) -> bool {
    let d = m.nrows();
    m.ncols() == d && (0..d).all(|i| (i..d).all(|j| (m[[i, j]] - m[[j, i]].conj()).norm() <= tol))
}

/// Integer sizes summing to `d` and proportional to `weights` (which sum to
/// at most 1); each is within 1 of its target `w·d`. A final slack entry
/// takes the rest when the weights sum below 1.
pub fn largest_remainder_ranks(weights: &[ExactScalar], d: usize) -> Result<Vec<usize>> {
    let total: ExactScalar = weights.iter().sum();
    if total > scalar::one() || weights.iter().any(|w| w.is_zero() || *w < scalar::zero()) {
        return Err(SimError::Precondition(format!(
            "projection weights must be positive with sum at most 1, got sum {}",
            scalar::format(&total)
        )));
    }
    let mut targets: Vec<ExactScalar> = weights.iter().map(|w| w * scalar::int(d as i64)).collect();
    let slack = scalar::one() - &total;
    if !slack.is_zero() {
        targets.push(slack * scalar::int(d as i64));
    }
    let mut ranks: Vec<usize> = targets
        .iter()
        .map(|t| t.floor().to_integer().to_usize().expect("bounded by d"))
        .collect();
    let assigned: usize = ranks.iter().sum();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let remainder = |i: usize| &targets[i] - targets[i].floor();
    order.sort_by(|&a, &b| remainder(b).cmp(&remainder(a)).then(a.cmp(&b)));
    for &i in order.iter().take(d - assigned) {
        ranks[i] += 1;
    }
    Ok(ranks)
}

pub(crate) enum SingleLaw {
    Poisson(ExactScalar),
    Semicircular,
}

/// The one-component law behind a tuple of identical copies.
pub(crate) fn single_law(spec: &ProcessSpec) -> Result<SingleLaw> {
    match spec.law() {
        Law::FreePoisson { rate } => Ok(SingleLaw::Poisson(rate.clone())),
        Law::Semicircular => Ok(SingleLaw::Semicircular),
        Law::Identical { base, .. } => single_law(base),
        Law::Reindexed { base, .. } if base.k() == 1 => single_law(base),
        _ => Err(SimError::IncompatibleModel {
            model: "any matrix model".into(),
            process: spec.to_string(),
        }),
    }
}

pub(crate) enum Repr {
    /// `X_i = s p_i s`, kept as `s`, `A = s²` in blocks, and the block sizes
    /// (interval ranks followed by an optional slack block).
    Sandwich { s: Matrix, a: BlockMatrix },
    /// One dense matrix per interval.
    Dense { increments: Vec<Matrix> },
}

/// Sampled increments `X(I_1), .., X(I_N)` of one process; every component
/// of an identical tuple reads the same matrices.
pub struct IncrementSet {
    pub(crate) model: Model,
    pub(crate) subdivision: Subdivision,
    pub(crate) dim: usize,
    pub(crate) ranks: Vec<usize>,
    pub(crate) repr: Repr,
}

/// Draws the increments of trial `trial`; deterministic in `(cfg.seed, trial)`.
pub fn sample_increments(
    spec: &ProcessSpec,
    s: &Subdivision,
    cfg: &MatrixEnsembleConfig,
    trial: u64,
) -> Result<IncrementSet> {
    let law = single_law(spec)?;
    let d = cfg.dim;
    let mut rng = trial_rng(cfg.seed, trial);
    match (cfg.model, law) {
        (Model::PoissonSps, SingleLaw::Poisson(rate)) => {
            let weights: Vec<ExactScalar> = s.lengths().iter().map(|l| l * &rate).collect();
            let ranks = largest_remainder_ranks(&weights, d).map_err(|_| {
                SimError::Precondition(format!(
                    "s p s model needs rate·t ≤ 1, got {}",
                    scalar::format(&(&rate * s.t()))
                ))
            })?;
            let sm = gue(d, &mut rng);
            let a = BlockMatrix::from_dense(&sm.dot(&sm), &ranks);
            let n = s.n();
            Ok(IncrementSet {
                model: cfg.model,
                subdivision: s.clone(),
                dim: d,
                ranks: ranks[..n].to_vec(),
                repr: Repr::Sandwich { s: sm, a },
            })
        }
        (Model::GaussianIncrements, SingleLaw::Semicircular) => {
            let increments = s
                .lengths()
                .iter()
                .map(|l| gue(d, &mut rng).mapv(|x| x * scalar::to_f64(l).sqrt()))
                .collect();
            Ok(IncrementSet {
                model: cfg.model,
                subdivision: s.clone(),
                dim: d,
                ranks: Vec::new(),
                repr: Repr::Dense { increments },
            })
        }
        (model, _) => Err(SimError::IncompatibleModel {
            model: model.to_string(),
            process: spec.to_string(),
        }),
    }
}

impl IncrementSet {
    pub fn model(&self) -> Model {
        self.model
    }

    pub fn subdivision(&self) -> &Subdivision {
        &self.subdivision
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.subdivision.n()
    }

    /// Ranks of the projections `p_i` (s p s model only).
    pub fn ranks(&self) -> Option<&[usize]> {
        match self.repr {
            Repr::Sandwich { .. } => Some(&self.ranks),
            Repr::Dense { .. } => None,
        }
    }

    /// The diagonal projection `p_i` (s p s model only).
    pub fn projection(&self, i: usize) -> Option<Matrix> {
        let ranks = self.ranks()?;
        let start: usize = ranks[..i].iter().sum();
        let mut p = Matrix::zeros((self.dim, self.dim));
        for j in start..start + ranks[i] {
            p[[j, j]] = C64::one();
        }
        Some(p)
    }

    /// The GUE factor `s` (s p s model only).
    pub fn s(&self) -> Option<&Matrix> {
        match &self.repr {
            Repr::Sandwich { s, .. } => Some(s),
            Repr::Dense { .. } => None,
        }
    }

    /// `X(I_i)` as a dense matrix.
    pub fn increment(&self, i: usize) -> Matrix {
        match &self.repr {
            Repr::Sandwich { s, .. } => {
                let start: usize = self.ranks[..i].iter().sum();
                let cols = s.slice(ndarray::s![.., start..start + self.ranks[i]]);
                let rows = s.slice(ndarray::s![start..start + self.ranks[i], ..]);
                cols.dot(&rows)
            }
            Repr::Dense { increments } => increments[i].clone(),
        }
    }

    /// `Σ_i X(I_i) = X([0, t))` as a dense matrix.
    pub fn total(&self) -> Matrix {
        let mut acc = Matrix::zeros((self.dim, self.dim));
        for i in 0..self.n() {
            acc += &self.increment(i);
        }
        acc
    }
}
