use num_traits::Zero;

use super::engine::{expect_st, MeasureKind};
use crate::error::{Error, Result};
use crate::partitions::{shared_noncrossing, shared_set_partitions, Partition};
use crate::processes::{check_time, reindexed, ProcessSpec, Subdivision};
use crate::scalar::{self, ExactScalar};

/// Largest total arity of a product of measures.
pub const MAX_PRODUCT_ARITY: usize = 8;

/// Whether `σ` restricted to each factor's support is exactly (St) or at
/// least (Pr) that factor's partition.
fn admissible(sigma: &Partition, factors: &[(Partition, MeasureKind)], offsets: &[usize]) -> bool {
    factors.iter().zip(offsets).all(|((p, kind), &start)| {
        let support: Vec<usize> = (start..start + p.k()).collect();
        let local = sigma.restrict(&support);
        match kind {
            MeasureKind::St => &local == p,
            MeasureKind::Pr => p.refines_unchecked(&local),
        }
    })
}

fn layout(factors: &[(Partition, MeasureKind)], spec: &ProcessSpec) -> Result<Vec<usize>> {
    let mut offsets = Vec::with_capacity(factors.len());
    let mut total = 0;
    for (p, _) in factors {
        offsets.push(total);
        total += p.k();
    }
    if total != spec.k() {
        return Err(Error::Dimension {
            expected: spec.k(),
            found: total,
        });
    }
    if total > MAX_PRODUCT_ARITY {
        return Err(Error::SizeGuard {
            what: "total arity of product",
            value: total,
            limit: MAX_PRODUCT_ARITY,
        });
    }
    Ok(offsets)
}

/// `τ(∏_i M_i(C_i; X, S))` for factors `M_i ∈ {St_{p_i}, Pr_{p_i}}` on
/// consecutive supports `C_i`, expanded as `Σ_σ τ(St_σ(X, S))` over the
/// `σ ∈ 𝒫(K)` admitted by every factor.
pub fn expect_product_of_st(
    factors: &[(Partition, MeasureKind)],
    spec: &ProcessSpec,
    s: &Subdivision,
) -> Result<ExactScalar> {
    let offsets = layout(factors, spec)?;
    if spec.k() == 0 {
        return Ok(scalar::one());
    }
    let mut total = ExactScalar::zero();
    for sigma in shared_set_partitions(spec.k())?.iter() {
        if admissible(sigma, factors, &offsets) {
            total += expect_st(sigma, s, spec)?;
        }
    }
    Ok(total)
}

/// Limit of [`expect_product_of_st`] as the mesh goes to zero: only
/// noncrossing `σ` survive, each contributing `t^{|σ|} R_σ`.
pub fn limit_expect_product(
    factors: &[(Partition, MeasureKind)],
    spec: &ProcessSpec,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    let offsets = layout(factors, spec)?;
    check_time(t)?;
    let r = spec.unit_cumulants()?;
    let mut total = ExactScalar::zero();
    for sigma in shared_noncrossing(spec.k())?.iter() {
        if !admissible(sigma, factors, &offsets) {
            continue;
        }
        let r_sigma = r.product_over(sigma)?;
        if !r_sigma.is_zero() {
            total += scalar::pow(t, sigma.block_count()) * r_sigma;
        }
    }
    Ok(total)
}

/// `St_p` or `Pr_p` applied to the listed components of a base tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub partition: Partition,
    pub kind: MeasureKind,
    pub components: Vec<usize>,
}

impl Factor {
    pub fn new(partition: Partition, kind: MeasureKind, components: Vec<usize>) -> Result<Self> {
        if partition.k() != components.len() {
            return Err(Error::Dimension {
                expected: partition.k(),
                found: components.len(),
            });
        }
        Ok(Self {
            partition,
            kind,
            components,
        })
    }

    pub fn st(partition: Partition, components: Vec<usize>) -> Result<Self> {
        Self::new(partition, MeasureKind::St, components)
    }

    pub fn pr(partition: Partition, components: Vec<usize>) -> Result<Self> {
        Self::new(partition, MeasureKind::Pr, components)
    }

    /// For self-adjoint components, `(Σ_v X_{v_1} ⋯ X_{v_k})^* = Σ_v X_{v_k} ⋯ X_{v_1}`.
    pub fn adjoint(&self) -> Self {
        Self {
            partition: self.partition.opposite(),
            kind: self.kind,
            components: self.components.iter().rev().copied().collect(),
        }
    }
}

/// `coeff · F_1 ⋯ F_n`; with no factors, the scalar `coeff`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: ExactScalar,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn scalar(coeff: ExactScalar) -> Self {
        Self {
            coeff,
            factors: Vec::new(),
        }
    }

    pub fn single(coeff: ExactScalar, factor: Factor) -> Self {
        Self {
            coeff,
            factors: vec![factor],
        }
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        Monomial {
            coeff: &self.coeff * &other.coeff,
            factors: self.factors.iter().chain(&other.factors).cloned().collect(),
        }
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial {
            coeff: self.coeff.clone(),
            factors: self.factors.iter().rev().map(Factor::adjoint).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.factors.iter().map(|f| f.components.len()).sum()
    }

    /// Limit of `τ` of this monomial over the base tuple at time `t`.
    pub fn limit_expect(&self, base: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
        if self.factors.is_empty() || self.coeff.is_zero() {
            return Ok(self.coeff.clone());
        }
        let (spec, factors) = self.flatten(base)?;
        Ok(&self.coeff * limit_expect_product(&factors, &spec, t)?)
    }

    /// Finite `τ` of this monomial over the base tuple on a subdivision.
    pub fn expect(&self, base: &ProcessSpec, s: &Subdivision) -> Result<ExactScalar> {
        if self.factors.is_empty() || self.coeff.is_zero() {
            return Ok(self.coeff.clone());
        }
        let (spec, factors) = self.flatten(base)?;
        Ok(&self.coeff * expect_product_of_st(&factors, &spec, s)?)
    }

    fn flatten(&self, base: &ProcessSpec) -> Result<(ProcessSpec, Vec<(Partition, MeasureKind)>)> {
        let components: Vec<usize> = self
            .factors
            .iter()
            .flat_map(|f| f.components.iter().copied())
            .collect();
        let spec = reindexed(base, &components)?;
        let factors = self
            .factors
            .iter()
            .map(|f| (f.partition.clone(), f.kind))
            .collect();
        Ok((spec, factors))
    }
}

/// A finite sum of monomials in the measures of a base tuple.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OperatorPolynomial {
    pub terms: Vec<Monomial>,
}

impl OperatorPolynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn monomial(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }

    pub fn minus(&self, other: &OperatorPolynomial) -> Self {
        let negated = other.terms.iter().map(|m| Monomial {
            coeff: -m.coeff.clone(),
            factors: m.factors.clone(),
        });
        Self {
            terms: self.terms.iter().cloned().chain(negated).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self.terms.iter().map(Monomial::adjoint).collect(),
        }
    }

    pub fn times(&self, other: &OperatorPolynomial) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.times(b));
            }
        }
        Self { terms }
    }

    pub fn limit_expect(&self, base: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
        self.terms.iter().map(|m| m.limit_expect(base, t)).sum()
    }

    pub fn expect(&self, base: &ProcessSpec, s: &Subdivision) -> Result<ExactScalar> {
        self.terms.iter().map(|m| m.expect(base, s)).sum()
    }

    /// `lim τ(P P^*)`, the squared `L²` norm of the limit operator.
    pub fn l2_norm_sq(&self, base: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
        self.times(&self.adjoint()).limit_expect(base, t)
    }

    /// Largest arity among the monomials of `P P^*`.
    pub fn l2_arity(&self) -> usize {
        let max = self.terms.iter().map(Monomial::arity).max().unwrap_or(0);
        2 * max
    }
}
