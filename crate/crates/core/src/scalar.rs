//! Exact rational scalars and their text form.
//!
//! Every expectation computed by the engine is an [`ExactScalar`]. The text
//! form is always `p/q` (denominator printed even when it is 1) so reports can
//! be compared byte for byte.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type ExactScalar = BigRational;

pub fn int(n: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> ExactScalar {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> ExactScalar {
    ExactScalar::zero()
}

pub fn one() -> ExactScalar {
    ExactScalar::one()
}

/// `x^n` for a non-negative exponent.
pub fn pow(x: &ExactScalar, n: usize) -> ExactScalar {
    let mut acc = one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Formats as `p/q`.
pub fn format(x: &ExactScalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q`, `p`, or a terminating decimal such as `0.25`.
pub fn parse(text: &str) -> Result<ExactScalar> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mut value = BigRational::from_integer(whole.abs()) + BigRational::new(frac, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// Lossy conversion used only for reporting next to floating-point estimates.
pub fn to_f64(x: &ExactScalar) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter writing scalars as `"p/q"` strings.
pub mod serde_text {
    use super::ExactScalar;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &ExactScalar, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactScalar, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Polynomials in one variable with exact coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<ExactScalar>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn monomial(coeff: ExactScalar, degree: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(coeff, degree);
        p
    }

    pub fn add_term(&mut self, coeff: ExactScalar, degree: usize) {
        if self.coeffs.len() <= degree {
            self.coeffs.resize(degree + 1, zero());
        }
        self.coeffs[degree] += coeff;
        self.trim();
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[ExactScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, degree: usize) -> ExactScalar {
        self.coeffs.get(degree).cloned().unwrap_or_else(zero)
    }

    pub fn eval(&self, x: &ExactScalar) -> ExactScalar {
        self.coeffs.iter().rev().fold(zero(), |acc, c| acc * x + c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| format!("({})t^{}", format(c), d))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_always_carries_denominator() {
        assert_eq!(format(&int(0)), "0/1");
        assert_eq!(format(&ratio(6, 4)), "3/2");
        assert_eq!(format(&ratio(-1, 3)), "-1/3");
    }

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse("1/1").unwrap(), int(1));
        assert_eq!(parse(" 10/4 ").unwrap(), ratio(5, 2));
        assert_eq!(parse("-7").unwrap(), int(-7));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
    }

    #[test]
    fn polynomial_evaluation_and_trimming() {
        let mut p = Polynomial::zero();
        p.add_term(int(2), 2);
        p.add_term(int(1), 0);
        assert_eq!(p.eval(&int(3)), int(19));
        p.add_term(int(-2), 2);
        assert_eq!(p.coeffs().len(), 1);
        assert!(Polynomial::monomial(zero(), 4).is_zero());
    }
}
