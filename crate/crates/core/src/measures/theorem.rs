//! Residuals of the factorisation identities satisfied by the limit measures.
//!
//! `L1` compares expectations of both sides. `L2` evaluates `τ((L-R)(L-R)^*)`;
//! the state is faithful, so a zero `L2` residual is the operator identity.

use num_traits::Zero;

use super::engine::limit_expect_st;
use super::product::{Factor, Monomial, OperatorPolynomial, MAX_PRODUCT_ARITY};
use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::processes::{
    check_time, derived_diagonal_tuple, make_free_poisson, make_semicircular, make_tuple,
    reindexed, require_substitution_gate, ProcessSpec, TupleMode,
};
use crate::scalar::{self, ExactScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    L1,
    L2,
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Order::L1 => "L1",
            Order::L2 => "L2",
        })
    }
}

/// `k` components read cyclically from `spec` (identical copies for a single process).
pub fn tuple_of_arity(spec: &ProcessSpec, k: usize) -> Result<ProcessSpec> {
    if k == spec.k() {
        return Ok(spec.clone());
    }
    let positions: Vec<usize> = (0..k).map(|i| i % spec.k()).collect();
    reindexed(spec, &positions)
}

fn check_arity(p: &Partition, spec: &ProcessSpec) -> Result<()> {
    if p.k() != spec.k() {
        return Err(Error::Dimension {
            expected: spec.k(),
            found: p.k(),
        });
    }
    Ok(())
}

fn l2_guard(poly: &OperatorPolynomial) -> Result<()> {
    let arity = poly.l2_arity();
    if arity > MAX_PRODUCT_ARITY {
        return Err(Error::SizeGuard {
            what: "arity of (L-R)(L-R)*",
            value: arity,
            limit: MAX_PRODUCT_ARITY,
        });
    }
    Ok(())
}

/// `‖L - R‖²` in the limit, over the given base tuple.
pub fn l2_residual(
    lhs: &OperatorPolynomial,
    rhs: &OperatorPolynomial,
    base: &ProcessSpec,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    let diff = lhs.minus(rhs);
    l2_guard(&diff)?;
    diff.l2_norm_sq(base, t)
}

fn st(coeff: ExactScalar, p: Partition, components: Vec<usize>) -> Result<OperatorPolynomial> {
    Ok(OperatorPolynomial::monomial(Monomial::single(
        coeff,
        Factor::st(p, components)?,
    )))
}

fn st_or_scalar(
    coeff: ExactScalar,
    p: Partition,
    components: Vec<usize>,
) -> Result<OperatorPolynomial> {
    if p.k() == 0 {
        Ok(OperatorPolynomial::monomial(Monomial::scalar(coeff)))
    } else {
        st(coeff, p, components)
    }
}

/// `∏_{C inner} R(C; X(t))`.
fn inner_factor(p: &Partition, spec: &ProcessSpec, t: &ExactScalar) -> Result<ExactScalar> {
    let r = spec.unit_cumulants()?;
    let split = p.classify()?;
    Ok(split
        .inner()
        .iter()
        .fold(scalar::one(), |acc, c| acc * t * r.get(c)))
}

/// Residual of `St_π(X) = ∏_i R(C_i; X) · ψ(Δ(B_1; X), .., Δ(B_o; X))`.
///
/// L2 runs over the tuple `(X_1, .., X_k, Δ(B_1), .., Δ(B_o))` and requires
/// the substitution-rule gate for `X` to pass.
pub fn main_theorem_residual(
    p: &Partition,
    spec: &ProcessSpec,
    order: Order,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_time(t)?;
    let split = p.classify()?;
    let coeff = inner_factor(p, spec, t)?;
    let outer = split.outer().to_vec();
    let o = outer.len();
    match order {
        Order::L1 => {
            let derived = derived_diagonal_tuple(spec, &outer)?;
            Ok(limit_expect_st(p, spec, t)?
                - coeff * limit_expect_st(&Partition::zero(o), &derived, t)?)
        }
        Order::L2 => {
            let k = p.k();
            let lhs = st(scalar::one(), p.clone(), (0..k).collect())?;
            let rhs = st(coeff, Partition::zero(o), (k..k + o).collect())?;
            l2_guard(&lhs.minus(&rhs))?;
            require_substitution_gate(spec)?;
            let mut groups: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
            groups.extend(outer);
            let extended = derived_diagonal_tuple(spec, &groups)?;
            l2_residual(&lhs, &rhs, &extended, t)
        }
    }
}

/// Residual of `St_π(X) = R(C; X) · St_{π'}([k] \ C; X)` for the inner class
/// with the given index.
pub fn inner_peeling_residual(
    p: &Partition,
    class: usize,
    spec: &ProcessSpec,
    order: Order,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_time(t)?;
    let split = p.classify()?;
    let c = split
        .inner()
        .get(class)
        .ok_or_else(|| Error::Domain(format!("{p} has no inner class #{class}")))?
        .clone();
    let rest: Vec<usize> = (0..p.k()).filter(|i| !c.contains(i)).collect();
    let reduced = p.restrict(&rest);
    let coeff = t * spec.unit_cumulants()?.get(&c);
    match order {
        Order::L1 => {
            let sub = reindexed(spec, &rest)?;
            Ok(limit_expect_st(p, spec, t)? - coeff * limit_expect_st(&reduced, &sub, t)?)
        }
        Order::L2 => {
            let lhs = st(scalar::one(), p.clone(), (0..p.k()).collect())?;
            let rhs = st(coeff, reduced, rest)?;
            l2_residual(&lhs, &rhs, spec, t)
        }
    }
}

/// Residual of `Δ(Δ(B_1; X), .., Δ(B_n; X)) = Δ(X)` for the interval
/// partition with the given block sizes.
pub fn diagonal_nesting_residual(
    sizes: &[usize],
    spec: &ProcessSpec,
    order: Order,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    check_time(t)?;
    let sigma = Partition::interval(sizes);
    check_arity(&sigma, spec)?;
    let blocks = sigma.blocks().to_vec();
    let n = blocks.len();
    let k = spec.k();
    match order {
        Order::L1 => {
            let derived = derived_diagonal_tuple(spec, &blocks)?;
            Ok(limit_expect_st(&Partition::one(n), &derived, t)?
                - limit_expect_st(&Partition::one(k), spec, t)?)
        }
        Order::L2 => {
            let lhs = st(scalar::one(), Partition::one(n), (k..k + n).collect())?;
            let rhs = st(scalar::one(), Partition::one(k), (0..k).collect())?;
            l2_guard(&lhs.minus(&rhs))?;
            let mut groups: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
            groups.extend(blocks);
            let extended = derived_diagonal_tuple(spec, &groups)?;
            l2_residual(&lhs, &rhs, &extended, t)
        }
    }
}

/// Rate of the free Poisson process standing in for the free operator `Z`.
pub fn corollary_companion() -> ProcessSpec {
    make_free_poisson(scalar::ratio(1, 3)).expect("positive rate")
}

/// Residual of `lim Σ_i X_i Z X_i = τ(Z) Δ_2(X)` with `Z = W(t)` for a free
/// Poisson process `W` free from `X` (the first component of `spec`).
///
/// `Σ_{i,j} X_i W_j X_i` is `Pr_{(13)(2)}(X, W, X)`.
pub fn corollary_residual(
    spec: &ProcessSpec,
    order: Order,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    check_time(t)?;
    let x = reindexed(spec, &[0])?;
    let w = corollary_companion();
    let tau_z = limit_expect_st(&Partition::one(1), &w, t)?;
    let family = make_tuple(TupleMode::free(vec![x, w]))?;
    let sandwich: Partition = "((1,3)(2))".parse()?;
    let lhs = OperatorPolynomial::monomial(Monomial::single(
        scalar::one(),
        Factor::pr(sandwich, vec![0, 1, 0])?,
    ));
    let rhs = st(tau_z, Partition::one(2), vec![0, 0])?;
    match order {
        Order::L1 => Ok(lhs.limit_expect(&family, t)? - rhs.limit_expect(&family, t)?),
        Order::L2 => l2_residual(&lhs, &rhs, &family, t),
    }
}

/// `‖St_π(X)‖²`, which vanishes when `X` is centered and `π` has an inner singleton.
pub fn inner_singleton_norm(
    p: &Partition,
    spec: &ProcessSpec,
    t: &ExactScalar,
) -> Result<ExactScalar> {
    check_arity(p, spec)?;
    check_time(t)?;
    let split = p.classify()?;
    if !split.inner().iter().any(|c| c.len() == 1) {
        return Err(Error::Domain(format!("{p} has no inner singleton")));
    }
    if !spec.is_centered()? {
        return Err(Error::Domain(format!("{spec} is not centered")));
    }
    let poly = st(scalar::one(), p.clone(), (0..p.k()).collect())?;
    l2_guard(&poly)?;
    poly.l2_norm_sq(spec, t)
}

/// The two processes whose measures have explicit descriptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExampleProcess {
    FreePoisson,
    Brownian,
}

impl ExampleProcess {
    pub fn spec(self) -> ProcessSpec {
        match self {
            ExampleProcess::FreePoisson => make_free_poisson(scalar::one()).expect("positive rate"),
            ExampleProcess::Brownian => make_semicircular(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExampleProcess::FreePoisson => "free_poisson",
            ExampleProcess::Brownian => "brownian",
        }
    }
}

/// L1 residual, and L2 residual when the arity allows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleResidual {
    pub l1: ExactScalar,
    pub l2: Option<ExactScalar>,
}

impl ExampleResidual {
    pub fn is_zero(&self) -> bool {
        self.l1.is_zero() && self.l2.as_ref().is_none_or(Zero::is_zero)
    }
}

fn residual_pair(
    lhs: &OperatorPolynomial,
    rhs: &OperatorPolynomial,
    base: &ProcessSpec,
    t: &ExactScalar,
) -> Result<ExampleResidual> {
    let l1 = lhs.limit_expect(base, t)? - rhs.limit_expect(base, t)?;
    let l2 = if lhs.minus(rhs).l2_arity() <= MAX_PRODUCT_ARITY {
        Some(l2_residual(lhs, rhs, base, t)?)
    } else {
        None
    };
    Ok(ExampleResidual { l1, l2 })
}

/// The explicit right-hand side for `St_π(t)`:
/// free Poisson `t^{i(π)} ψ_{o(π)}(t)`; Brownian `0` if a class has more than
/// two elements or an inner singleton exists, else `t^{#pairs} ψ_{#singletons}(t)`.
pub fn example_rhs(
    which: ExampleProcess,
    p: &Partition,
    t: &ExactScalar,
) -> Result<OperatorPolynomial> {
    let split = p.classify()?;
    match which {
        ExampleProcess::FreePoisson => {
            let o = split.outer_count();
            st_or_scalar(
                scalar::pow(t, split.inner_count()),
                Partition::zero(o),
                vec![0; o],
            )
        }
        ExampleProcess::Brownian => {
            let large = p.blocks().iter().any(|b| b.len() > 2);
            let inner_singleton = split.inner().iter().any(|c| c.len() == 1);
            if large || inner_singleton {
                return Ok(OperatorPolynomial::default());
            }
            let pairs = p.blocks().iter().filter(|b| b.len() == 2).count();
            let singles = p.k() - 2 * pairs;
            st_or_scalar(
                scalar::pow(t, pairs),
                Partition::zero(singles),
                vec![0; singles],
            )
        }
    }
}

/// Residuals of `St_π(t)` against [`example_rhs`].
pub fn example_formulas_check(
    which: ExampleProcess,
    p: &Partition,
    t: &ExactScalar,
) -> Result<ExampleResidual> {
    check_time(t)?;
    let base = which.spec();
    let lhs = st(scalar::one(), p.clone(), vec![0; p.k()])?;
    let rhs = example_rhs(which, p, t)?;
    residual_pair(&lhs, &rhs, &base, t)
}

/// Residuals of the diagonal measures: `Δ_n = X` for the free Poisson
/// process; `Δ_1 = X`, `Δ_2 = t`, `Δ_n = 0` for `n > 2` in the Brownian case.
pub fn diagonal_identity_check(
    which: ExampleProcess,
    n: usize,
    t: &ExactScalar,
) -> Result<ExampleResidual> {
    check_time(t)?;
    if n == 0 {
        return Err(Error::Domain("diagonal measure needs n ≥ 1".into()));
    }
    let base = which.spec();
    let lhs = st(scalar::one(), Partition::one(n), vec![0; n])?;
    let x = st(scalar::one(), Partition::one(1), vec![0])?;
    let rhs = match (which, n) {
        (ExampleProcess::FreePoisson, _) | (ExampleProcess::Brownian, 1) => x,
        (ExampleProcess::Brownian, 2) => OperatorPolynomial::monomial(Monomial::scalar(t.clone())),
        (ExampleProcess::Brownian, _) => OperatorPolynomial::default(),
    };
    residual_pair(&lhs, &rhs, &base, t)
}
