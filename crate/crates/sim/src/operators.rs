//! `Pr_π` and `St_π` over sampled increments.
//!
//! In the s p s model every operator that occurs is `s U s` for some `U`,
//! and `(s U s)(s V s) = s (U A V) s` with `A = s²`; only `U` is stored, cut
//! into blocks along the projection ranges. The Gaussian model works with
//! dense matrices.

use freemeasures_core::partitions::{mobius, Lattice, Partition};
use freemeasures_core::scalar;
use ndarray::s;
use num_traits::{One, Zero};

use crate::blocks::{inner_product, trace_of_product, BlockMatrix, Matrix, C64};
use crate::ensemble::{IncrementSet, Repr};
use crate::error::{Result, SimError};

/// Budget for the direct sum over index tuples: `N^{|π|} · k` products.
pub const BRUTE_FORCE_LIMIT: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Dense(Matrix),
    /// `s U s`, holding `U`.
    Sandwich(BlockMatrix),
}

fn identity(n: usize) -> Matrix {
    Matrix::from_diag_elem(n, C64::one())
}

/// `acc ← acc · x`, where `None` is the identity.
fn push(acc: &mut Option<Matrix>, x: &Matrix) {
    *acc = Some(match acc.take() {
        None => x.clone(),
        Some(m) => m.dot(x),
    });
}

impl IncrementSet {
    fn mismatch() -> SimError {
        SimError::Precondition("operator does not belong to this increment set".into())
    }

    /// `τ_d(T) = tr(T)/d`.
    pub fn trace(&self, op: &Operator) -> Result<C64> {
        let d = self.dim as f64;
        match (op, &self.repr) {
            (Operator::Dense(m), Repr::Dense { .. }) => Ok(m.diag().sum() / d),
            (Operator::Sandwich(u), Repr::Sandwich { a, .. }) => Ok(u.trace_with(a) / d),
            _ => Err(Self::mismatch()),
        }
    }

    /// `‖T‖_F / √d`.
    pub fn norm(&self, op: &Operator) -> Result<f64> {
        let d = self.dim as f64;
        let sq = match (op, &self.repr) {
            (Operator::Dense(m), Repr::Dense { .. }) => m.iter().map(|x| x.norm_sqr()).sum::<f64>(),
            // ‖sUs‖² = tr(U A U* A) = ⟨UA, AU⟩.
            (Operator::Sandwich(u), Repr::Sandwich { a, .. }) => {
                u.mul(a).inner_product(&a.mul(u)).re
            }
            _ => return Err(Self::mismatch()),
        };
        Ok((sq.max(0.0) / d).sqrt())
    }

    pub fn to_dense(&self, op: &Operator) -> Result<Matrix> {
        match (op, &self.repr) {
            (Operator::Dense(m), Repr::Dense { .. }) => Ok(m.clone()),
            (Operator::Sandwich(u), Repr::Sandwich { s, .. }) => Ok(s.dot(&u.to_dense()).dot(s)),
            _ => Err(Self::mismatch()),
        }
    }

    /// `Σ_j c_j T_j`.
    pub fn combine(&self, terms: &[(f64, &Operator)]) -> Result<Operator> {
        match &self.repr {
            Repr::Dense { .. } => {
                let mut acc = Matrix::zeros((self.dim, self.dim));
                for (c, op) in terms {
                    let Operator::Dense(m) = op else {
                        return Err(Self::mismatch());
                    };
                    acc.scaled_add(C64::new(*c, 0.0), m);
                }
                Ok(Operator::Dense(acc))
            }
            Repr::Sandwich { a, .. } => {
                let mut acc = BlockMatrix::zeros(a.sizes());
                for (c, op) in terms {
                    let Operator::Sandwich(u) = op else {
                        return Err(Self::mismatch());
                    };
                    acc.add_scaled(*c, u);
                }
                Ok(Operator::Sandwich(acc))
            }
        }
    }

    pub fn product(&self, x: &Operator, y: &Operator) -> Result<Operator> {
        match (x, y, &self.repr) {
            (Operator::Dense(p), Operator::Dense(q), Repr::Dense { .. }) => {
                Ok(Operator::Dense(p.dot(q)))
            }
            (Operator::Sandwich(u), Operator::Sandwich(v), Repr::Sandwich { a, .. }) => {
                Ok(Operator::Sandwich(u.mul(a).mul(v)))
            }
            _ => Err(Self::mismatch()),
        }
    }

    /// `Σ_i X(I_i) Z X(I_i)` for an arbitrary `d × d` matrix `Z`.
    pub fn conjugation_sum(&self, z: &Matrix) -> Result<Operator> {
        match &self.repr {
            Repr::Dense { increments } => {
                let mut acc = Matrix::zeros((self.dim, self.dim));
                for x in increments {
                    acc += &x.dot(z).dot(x);
                }
                Ok(Operator::Dense(acc))
            }
            Repr::Sandwich { s, a } => {
                // Σ_i s p_i (s Z s) p_i s.
                let zs = z.dot(s);
                let mut start = 0;
                let mut diag = Vec::with_capacity(a.n());
                for (i, &r) in a.sizes().iter().enumerate() {
                    let block = if i < self.n() {
                        let rows = s.slice(s![start..start + r, ..]);
                        Some(rows.dot(&zs.slice(s![.., start..start + r])))
                    } else {
                        None
                    };
                    diag.push(block);
                    start += r;
                }
                Ok(Operator::Sandwich(BlockMatrix::diagonal(a.sizes(), diag)))
            }
        }
    }

    /// `τ_d(X(I_{v_1}) ⋯ X(I_{v_k}))`.
    pub fn word_trace(&self, word: &[usize]) -> Result<C64> {
        if word.is_empty() {
            return Ok(C64::one());
        }
        if let Some(&bad) = word.iter().find(|&&v| v >= self.n()) {
            return Err(SimError::Precondition(format!(
                "interval {bad} out of range"
            )));
        }
        let d = self.dim as f64;
        let k = word.len();
        let factors: Vec<Matrix> = match &self.repr {
            Repr::Dense { increments } => word.iter().map(|&v| increments[v].clone()).collect(),
            // tr(s p_{v1} A p_{v2} ⋯ A p_{vk} s) = tr(A_{vk v1} A_{v1 v2} ⋯ A_{v(k-1) vk}).
            Repr::Sandwich { a, .. } => (0..k)
                .map(|j| {
                    let prev = word[(j + k - 1) % k];
                    a.block(prev, word[j]).cloned().expect("A is full")
                })
                .collect(),
        };
        let mut acc: Option<Matrix> = None;
        for f in &factors[..k - 1] {
            push(&mut acc, f);
        }
        let last = &factors[k - 1];
        Ok(match acc {
            None => last.diag().sum() / d,
            Some(m) => trace_of_product(&m, last) / d,
        })
    }

    /// `Σ_i X_i^{b_1} G_1 X_i^{b_2} ⋯ G_{m-1} X_i^{b_m}`; a `None` gap is the identity.
    fn block_sum(&self, powers: &[usize], gaps: &[Option<Operator>]) -> Result<Operator> {
        match &self.repr {
            Repr::Dense { increments } => {
                let mut acc_sum = Matrix::zeros((self.dim, self.dim));
                for x in increments {
                    let mut acc: Option<Matrix> = None;
                    for (j, &b) in powers.iter().enumerate() {
                        if j > 0 {
                            match &gaps[j - 1] {
                                None => {}
                                Some(Operator::Dense(g)) => push(&mut acc, g),
                                Some(_) => return Err(Self::mismatch()),
                            }
                        }
                        for _ in 0..b {
                            push(&mut acc, x);
                        }
                    }
                    acc_sum += &acc.expect("at least one factor");
                }
                Ok(Operator::Dense(acc_sum))
            }
            Repr::Sandwich { a, .. } => {
                // Block i: X_i^b = s (p_i A)^{b-1} p_i s, and between two
                // letters sits p_i A p_i or p_i A U A p_i.
                let mut mids = Vec::with_capacity(gaps.len());
                for g in gaps {
                    mids.push(match g {
                        None => None,
                        Some(Operator::Sandwich(u)) => Some(a.diagonal_of_conjugation(u)),
                        Some(_) => return Err(Self::mismatch()),
                    });
                }
                let mut diag = Vec::with_capacity(a.n());
                for i in 0..a.n() {
                    if i >= self.n() {
                        diag.push(None);
                        continue;
                    }
                    let aii = a.block(i, i).expect("A is full");
                    let mut acc: Option<Matrix> = None;
                    for (j, &b) in powers.iter().enumerate() {
                        if j > 0 {
                            match &mids[j - 1] {
                                None => push(&mut acc, aii),
                                Some(m) => push(&mut acc, &m[i]),
                            }
                        }
                        for _ in 1..b {
                            push(&mut acc, aii);
                        }
                    }
                    diag.push(Some(acc.unwrap_or_else(|| identity(aii.nrows()))));
                }
                Ok(Operator::Sandwich(BlockMatrix::diagonal(a.sizes(), diag)))
            }
        }
    }

    /// `X_{v_1}^{b_1} ⋯ X_{v_k}^{b_k}` added into `acc`.
    fn add_word(&self, acc: &mut Operator, v: &[usize], powers: &[usize]) -> Result<()> {
        match (&self.repr, acc) {
            (Repr::Dense { increments }, Operator::Dense(sum)) => {
                let mut prod: Option<Matrix> = None;
                for (&i, &b) in v.iter().zip(powers) {
                    for _ in 0..b {
                        push(&mut prod, &increments[i]);
                    }
                }
                *sum += &prod.expect("nonempty word");
                Ok(())
            }
            (Repr::Sandwich { a, .. }, Operator::Sandwich(u)) => {
                let mut prod: Option<Matrix> = None;
                for (j, (&i, &b)) in v.iter().zip(powers).enumerate() {
                    if j > 0 {
                        push(&mut prod, a.block(v[j - 1], i).expect("A is full"));
                    }
                    for _ in 1..b {
                        push(&mut prod, a.block(i, i).expect("A is full"));
                    }
                }
                let first = v[0];
                let last = v[v.len() - 1];
                let block = prod.unwrap_or_else(|| identity(a.sizes()[first]));
                u.add_to_block(first, last, &block);
                Ok(())
            }
            _ => Err(Self::mismatch()),
        }
    }

    fn zero_operator(&self) -> Operator {
        match &self.repr {
            Repr::Dense { .. } => Operator::Dense(Matrix::zeros((self.dim, self.dim))),
            Repr::Sandwich { a, .. } => Operator::Sandwich(BlockMatrix::zeros(a.sizes())),
        }
    }
}

fn check_powers(p: &Partition, powers: &[usize]) -> Result<()> {
    if p.k() == 0 || powers.len() != p.k() || powers.contains(&0) {
        return Err(SimError::Precondition(format!(
            "need one positive power per point of {p}, got {powers:?}"
        )));
    }
    Ok(())
}

/// Collapses the positions `lo..hi`, which hold whole blocks of a
/// noncrossing partition: each block is summed over `i` with the collapsed
/// gaps between its letters, innermost first.
fn collapse(
    p: &Partition,
    powers: &[usize],
    inc: &IncrementSet,
    lo: usize,
    hi: usize,
) -> Result<Option<Operator>> {
    let mut result: Option<Operator> = None;
    let mut j = lo;
    while j < hi {
        let block = &p.blocks()[p.block_of(j)];
        let mut gaps = Vec::with_capacity(block.len() - 1);
        for w in block.windows(2) {
            gaps.push(collapse(p, powers, inc, w[0] + 1, w[1])?);
        }
        let block_powers: Vec<usize> = block.iter().map(|&m| powers[m]).collect();
        let summed = inc.block_sum(&block_powers, &gaps)?;
        result = Some(match result {
            None => summed,
            Some(prev) => inc.product(&prev, &summed)?,
        });
        j = block[block.len() - 1] + 1;
    }
    Ok(result)
}

/// `Σ_{v ∈ [N]^k_{≥π}} X_{v_1}^{b_1} ⋯ X_{v_k}^{b_k}` summed tuple by tuple.
pub fn pr_matrix_direct(p: &Partition, powers: &[usize], inc: &IncrementSet) -> Result<Operator> {
    check_powers(p, powers)?;
    let limit = BRUTE_FORCE_LIMIT / p.k();
    let tuples = p
        .kernel_indices_geq(inc.n(), limit)
        .map_err(|_| SimError::SizeGuard {
            what: "N^|π|·k matrix products",
            value: inc
                .n()
                .saturating_pow(p.block_count() as u32)
                .saturating_mul(p.k()),
            limit: BRUTE_FORCE_LIMIT,
        })?;
    let mut acc = inc.zero_operator();
    for v in tuples {
        inc.add_word(&mut acc, &v, powers)?;
    }
    Ok(acc)
}

/// `Pr_π` where point `j` carries the increment power `b_j` (the diagonal
/// component `Δ` of `b_j` copies). Noncrossing `π` uses nested collapse,
/// crossing `π` the direct sum.
pub fn pr_matrix_with_powers(
    p: &Partition,
    powers: &[usize],
    inc: &IncrementSet,
) -> Result<Operator> {
    check_powers(p, powers)?;
    if !p.is_noncrossing() {
        return pr_matrix_direct(p, powers, inc);
    }
    Ok(collapse(p, powers, inc, 0, p.k())?.expect("k ≥ 1"))
}

/// `St_π = Σ_{σ ≥ π} μ(π, σ) Pr_σ` over the full partition lattice.
pub fn st_matrix_with_powers(
    p: &Partition,
    powers: &[usize],
    inc: &IncrementSet,
) -> Result<Operator> {
    check_powers(p, powers)?;
    let mut terms = Vec::new();
    for sigma in p.coarsenings() {
        let mu = scalar::to_f64(&mobius(p, &sigma, Lattice::Full)?);
        if mu.is_zero() {
            continue;
        }
        terms.push((mu, pr_matrix_with_powers(&sigma, powers, inc)?));
    }
    let refs: Vec<(f64, &Operator)> = terms.iter().map(|(c, op)| (*c, op)).collect();
    inc.combine(&refs)
}

pub fn pr_matrix(p: &Partition, inc: &IncrementSet) -> Result<Operator> {
    pr_matrix_with_powers(p, &vec![1; p.k()], inc)
}

pub fn st_matrix(p: &Partition, inc: &IncrementSet) -> Result<Operator> {
    st_matrix_with_powers(p, &vec![1; p.k()], inc)
}

/// `‖X - Y‖_F / ‖X‖_F` for dense matrices; `0` when both vanish.
pub fn relative_difference(x: &Matrix, y: &Matrix) -> f64 {
    let diff = x - y;
    let num = inner_product(&diff, &diff).re.sqrt();
    let den = inner_product(x, x).re.sqrt();
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
