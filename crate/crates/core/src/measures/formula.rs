use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::scalar::{self, ExactScalar};

/// One term `coeff · N^{\underline{falling}} · N^{exponent}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaTerm {
    pub falling: usize,
    pub exponent: i64,
    pub coeff: ExactScalar,
}

/// Closed form of an expectation over the uniform subdivision with `N`
/// intervals, valid for every `N ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UniformFormula {
    terms: Vec<FormulaTerm>,
}

/// Signed Stirling numbers of the first kind: `x^{\underline m} = Σ_i s(m, i) x^i`.
pub fn stirling_first(m: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::from(1)];
    for j in 0..m {
        // Multiply by (x - j).
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (i, c) in row.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * BigInt::from(j);
        }
        row = next;
    }
    row
}

fn falling(n: usize, m: usize) -> ExactScalar {
    (0..m).fold(scalar::one(), |acc, j| {
        acc * scalar::int(n as i64 - j as i64)
    })
}

fn int_pow(n: usize, e: i64) -> ExactScalar {
    let base = scalar::int(n as i64);
    let p = scalar::pow(&base, e.unsigned_abs() as usize);
    if e >= 0 {
        p
    } else {
        scalar::one() / p
    }
}

impl UniformFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, falling: usize, exponent: i64, coeff: ExactScalar) {
        if coeff.is_zero() {
            return;
        }
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| t.falling == falling && t.exponent == exponent)
        {
            t.coeff += coeff;
        } else {
            self.terms.push(FormulaTerm {
                falling,
                exponent,
                coeff,
            });
        }
    }

    pub fn terms(&self) -> &[FormulaTerm] {
        &self.terms
    }

    /// Value at a given `N`.
    pub fn eval(&self, n: usize) -> ExactScalar {
        self.terms
            .iter()
            .map(|t| &t.coeff * falling(n, t.falling) * int_pow(n, t.exponent))
            .sum()
    }

    /// Expansion as a Laurent polynomial in `N`: power ↦ coefficient, zero
    /// coefficients dropped.
    pub fn laurent(&self) -> BTreeMap<i64, ExactScalar> {
        let mut out: BTreeMap<i64, ExactScalar> = BTreeMap::new();
        for t in &self.terms {
            for (i, s) in stirling_first(t.falling).into_iter().enumerate() {
                if s.is_zero() {
                    continue;
                }
                let c = &t.coeff * ExactScalar::from_integer(s);
                *out.entry(i as i64 + t.exponent)
                    .or_insert_with(scalar::zero) += c;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// The `N → ∞` limit; `None` if the formula grows with `N`.
    pub fn limit(&self) -> Option<ExactScalar> {
        let l = self.laurent();
        if l.keys().any(|&p| p > 0) {
            return None;
        }
        Some(l.get(&0).cloned().unwrap_or_else(scalar::zero))
    }

    /// Coefficient of `N^0`.
    pub fn constant_term(&self) -> ExactScalar {
        self.laurent().get(&0).cloned().unwrap_or_else(scalar::zero)
    }

    /// Rows `(power of N, coefficient)` in decreasing power.
    pub fn coefficient_rows(&self) -> Vec<(i64, ExactScalar)> {
        self.laurent().into_iter().rev().collect()
    }
}

impl fmt::Display for UniformFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.coefficient_rows();
        if rows.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = rows
            .iter()
            .map(|(p, c)| format!("({})N^{}", scalar::format(c), p))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    #[test]
    fn stirling_rows() {
        let s: Vec<i64> = stirling_first(3)
            .into_iter()
            .map(|x| i64::try_from(x).unwrap())
            .collect();
        assert_eq!(s, vec![0, 2, -3, 1]);
        assert_eq!(stirling_first(0), vec![BigInt::from(1)]);
    }

    #[test]
    fn two_point_formulas() {
        // N(N-1)/N^2 = 1 - 1/N.
        let mut f = UniformFormula::new();
        f.push(2, -2, int(1));
        assert_eq!(f.eval(4), ratio(3, 4));
        assert_eq!(f.limit(), Some(int(1)));
        assert_eq!(f.laurent().get(&-1), Some(&int(-1)));
        f.push(0, 1, int(1));
        assert_eq!(f.limit(), None);
        assert_eq!(f.constant_term(), int(1));
    }
}
