use num_traits::Zero;

use super::formula::UniformFormula;
use crate::error::{Error, Result};
use crate::partitions::{shared_noncrossing, shared_set_partitions, Partition};
use crate::processes::{check_time, ProcessSpec, Subdivision};
use crate::scalar::{self, ExactScalar};

/// `St_π` (index tuples with kernel exactly `π`) or `Pr_π` (kernel at least `π`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    St,
    Pr,
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureKind::St => "St",
            MeasureKind::Pr => "Pr",
        })
    }
}

/// Largest block count of `p` accepted by [`expect_st`] on a general subdivision.
pub const MAX_ST_BLOCKS: usize = 8;
/// Largest number of subdivision intervals accepted by the finite evaluators.
pub const MAX_INTERVALS: usize = 4096;

pub(crate) fn check_arity(p: &Partition, spec: &ProcessSpec) -> Result<()> {
    if p.k() != spec.k() {
        return Err(Error::Dimension {
            expected: spec.k(),
            found: p.k(),
        });
    }
    Ok(())
}

fn check_intervals(s: &Subdivision) -> Result<()> {
    if s.n() > MAX_INTERVALS {
        return Err(Error::SizeGuard {
            what: "subdivision size N",
            value: s.n(),
            limit: MAX_INTERVALS,
        });
    }
    Ok(())
}

/// Memoized power sums `P(m) = Σ_j ℓ_j^m`.
struct PowerSums<'a> {
    s: &'a Subdivision,
    cache: Vec<Option<ExactScalar>>,
}

impl<'a> PowerSums<'a> {
    fn new(s: &'a Subdivision) -> Self {
        Self {
            s,
            cache: Vec::new(),
        }
    }

    fn get(&mut self, m: usize) -> ExactScalar {
        if self.cache.len() <= m {
            self.cache.resize(m + 1, None);
        }
        self.cache[m]
            .get_or_insert_with(|| self.s.power_sum(m))
            .clone()
    }
}

/// Number of `ρ`-blocks inside each block of `p` (requires `ρ ≤ p`).
fn blocks_per_block(rho: &Partition, p: &Partition) -> Vec<usize> {
    let mut m = vec![0; p.block_count()];
    for b in rho.blocks() {
        m[p.block_of(b[0])] += 1;
    }
    m
}

/// `μ(0̂, θ) = ∏_{G ∈ θ} (-1)^{|G|-1} (|G|-1)!` in the full lattice.
fn mobius_from_bottom(theta: &Partition) -> ExactScalar {
    let mut acc = scalar::one();
    for g in theta.blocks() {
        let n = g.len();
        for j in 1..n {
            acc *= scalar::int(j as i64);
        }
        if n % 2 == 0 {
            acc = -acc;
        }
    }
    acc
}

/// `Σ_{w injective} ∏_β ℓ_{w(β)}^{m_β}`, by inclusion-exclusion over the
/// kernel `θ` of `w`: `Σ_θ μ(0̂, θ) ∏_{G ∈ θ} P(Σ_{β ∈ G} m_β)`.
fn injective_weight(
    m: &[usize],
    thetas: &[(Partition, ExactScalar)],
    sums: &mut PowerSums<'_>,
) -> ExactScalar {
    let mut total = ExactScalar::zero();
    for (theta, mu) in thetas {
        let mut term = mu.clone();
        for g in theta.blocks() {
            let exponent: usize = g.iter().map(|&b| m[b]).sum();
            term *= sums.get(exponent);
        }
        total += term;
    }
    total
}

/// `τ(St_p(X, S))` exactly.
pub fn expect_st(p: &Partition, s: &Subdivision, spec: &ProcessSpec) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_intervals(s)?;
    let b = p.block_count();
    if b > MAX_ST_BLOCKS {
        return Err(Error::SizeGuard {
            what: "blocks of St partition",
            value: b,
            limit: MAX_ST_BLOCKS,
        });
    }
    if b > s.n() {
        return Ok(ExactScalar::zero());
    }
    let r = spec.unit_cumulants()?;
    let thetas: Vec<(Partition, ExactScalar)> = shared_set_partitions(b)?
        .iter()
        .map(|t| (t.clone(), mobius_from_bottom(t)))
        .collect();
    let mut sums = PowerSums::new(s);
    let mut total = ExactScalar::zero();
    for rho in shared_noncrossing(p.k())?.iter() {
        if !rho.refines_unchecked(p) {
            continue;
        }
        let r_rho = r.product_over(rho)?;
        if r_rho.is_zero() {
            continue;
        }
        let m = blocks_per_block(rho, p);
        total += r_rho * injective_weight(&m, &thetas, &mut sums);
    }
    Ok(total)
}

/// `τ(Pr_p(X, S))` exactly.
pub fn expect_pr(p: &Partition, s: &Subdivision, spec: &ProcessSpec) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_intervals(s)?;
    let r = spec.unit_cumulants()?;
    let mut sums = PowerSums::new(s);
    let mut total = ExactScalar::zero();
    for rho in shared_noncrossing(p.k())?.iter() {
        let r_rho = r.product_over(rho)?;
        if r_rho.is_zero() {
            continue;
        }
        let joined = rho.join(p)?;
        let m = blocks_per_block(rho, &joined);
        let mut weight = scalar::one();
        for mg in m {
            weight *= sums.get(mg);
        }
        total += r_rho * weight;
    }
    Ok(total)
}

/// `τ` of either measure on a finite subdivision.
pub fn expect(
    kind: MeasureKind,
    p: &Partition,
    s: &Subdivision,
    spec: &ProcessSpec,
) -> Result<ExactScalar> {
    match kind {
        MeasureKind::St => expect_st(p, s, spec),
        MeasureKind::Pr => expect_pr(p, s, spec),
    }
}

/// `lim τ(St_p(X, t)) = t^{|p|} R_p(X)` for noncrossing `p`, else `0`.
pub fn limit_expect_st(p: &Partition, spec: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_time(t)?;
    if !p.is_noncrossing() {
        return Ok(ExactScalar::zero());
    }
    let r = spec.unit_cumulants()?;
    Ok(scalar::pow(t, p.block_count()) * r.product_over(p)?)
}

/// `lim τ(Pr_p(X, t)) = Σ_{σ ∈ NC(k), σ ≥ p} t^{|σ|} R_σ(X)`.
pub fn limit_expect_pr(p: &Partition, spec: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_time(t)?;
    let r = spec.unit_cumulants()?;
    let mut total = ExactScalar::zero();
    for sigma in shared_noncrossing(p.k())?.iter() {
        if p.refines_unchecked(sigma) {
            total += scalar::pow(t, sigma.block_count()) * r.product_over(sigma)?;
        }
    }
    Ok(total)
}

pub fn limit_expect(
    kind: MeasureKind,
    p: &Partition,
    spec: &ProcessSpec,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    match kind {
        MeasureKind::St => limit_expect_st(p, spec, t),
        MeasureKind::Pr => limit_expect_pr(p, spec, t),
    }
}

/// Closed form in `N` of `τ(St_p)` or `τ(Pr_p)` over the uniform subdivision
/// of `[0, t)`.
///
/// St: `Σ_{ρ ≤ p} R_ρ t^{|ρ|} N^{\underline{|p|}} N^{-|ρ|}`.
/// Pr: `Σ_ρ R_ρ t^{|ρ|} N^{|ρ ∨ p| - |ρ|}`.
pub fn uniform_formula(
    kind: MeasureKind,
    p: &Partition,
    spec: &ProcessSpec,
    t: &ExactScalar,
) -> Result<UniformFormula> {
    check_arity(p, spec)?;
    check_time(t)?;
    let r = spec.unit_cumulants()?;
    let mut f = UniformFormula::new();
    for rho in shared_noncrossing(p.k())?.iter() {
        let blocks = rho.block_count() as i64;
        let coeff = r.product_over(rho)? * scalar::pow(t, rho.block_count());
        match kind {
            MeasureKind::St => {
                if rho.refines_unchecked(p) {
                    f.push(p.block_count(), -blocks, coeff);
                }
            }
            MeasureKind::Pr => {
                let joined = rho.join(p)?.block_count() as i64;
                f.push(0, joined - blocks, coeff);
            }
        }
    }
    Ok(f)
}

/// Finite value, uniform closed form and limit of one expectation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationReport {
    pub kind: MeasureKind,
    pub partition: Partition,
    pub subdivision: Subdivision,
    pub finite_value: ExactScalar,
    /// Closed form over the uniform subdivision of `[0, t)` with the same `t`.
    pub uniform_formula: UniformFormula,
    pub limit_value: ExactScalar,
}

impl ExpectationReport {
    /// For uniform subdivisions the closed form reproduces the finite value,
    /// and in all cases its `N → ∞` limit is the limit value.
    pub fn is_consistent(&self) -> bool {
        let finite_ok = !self.subdivision.is_uniform()
            || self.uniform_formula.eval(self.subdivision.n()) == self.finite_value;
        finite_ok && self.uniform_formula.limit().as_ref() == Some(&self.limit_value)
    }
}

pub fn expectation_report(
    kind: MeasureKind,
    p: &Partition,
    s: &Subdivision,
    spec: &ProcessSpec,
) -> Result<ExpectationReport> {
    Ok(ExpectationReport {
        kind,
        partition: p.clone(),
        subdivision: s.clone(),
        finite_value: expect(kind, p, s, spec)?,
        uniform_formula: uniform_formula(kind, p, spec, s.t())?,
        limit_value: limit_expect(kind, p, spec, s.t())?,
    })
}
