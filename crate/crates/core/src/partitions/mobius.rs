use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{catalan_number, Partition};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// Which lattice a Möbius function is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lattice {
    Full,
    Noncrossing,
}

fn check(lower: &Partition, upper: &Partition, lattice: Lattice) -> Result<()> {
    if !lower.refines(upper)? {
        return Err(Error::NotComparable {
            lower: lower.to_string(),
            upper: upper.to_string(),
        });
    }
    if lattice == Lattice::Noncrossing {
        lower.require_noncrossing()?;
        upper.require_noncrossing()?;
    }
    Ok(())
}

/// Isomorphism type of the interval `[lower, upper]`: the multiset of sizes
/// `n ≥ 2` such that the interval is a product of `[0̂_n, 1̂_n]` lattices.
///
/// Full lattice: `n` counts the lower blocks inside each upper block.
/// Noncrossing: `[σ_B, 1̂_B]` is anti-isomorphic to `[0̂, K(σ_B)]`, so the
/// factors are the block sizes of the relative Kreweras complements.
fn interval_type(lower: &Partition, upper: &Partition, lattice: Lattice) -> Vec<usize> {
    let mut sizes = Vec::new();
    for block in upper.blocks() {
        let local = lower.restrict(block);
        match lattice {
            Lattice::Full => sizes.push(local.block_count()),
            Lattice::Noncrossing => {
                let complement = local.kreweras().expect("restriction of NC is NC");
                sizes.extend(complement.blocks().iter().map(Vec::len));
            }
        }
    }
    sizes.retain(|&n| n >= 2);
    sizes.sort_unstable();
    sizes
}

type Cache = Mutex<HashMap<(Lattice, Vec<usize>), ExactScalar>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Möbius function `μ(lower, upper)` of the chosen lattice, from
/// `μ(x,x) = 1`, `μ(x,y) = -Σ_{x ≤ z < y} μ(x,z)`, memoized on the interval type.
pub fn mobius(lower: &Partition, upper: &Partition, lattice: Lattice) -> Result<ExactScalar> {
    check(lower, upper, lattice)?;
    Ok(mobius_memo(lower, upper, lattice))
}

fn mobius_memo(lower: &Partition, upper: &Partition, lattice: Lattice) -> ExactScalar {
    let key = (lattice, interval_type(lower, upper, lattice));
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return v.clone();
    }
    let value = if key.1.is_empty() {
        ExactScalar::one()
    } else {
        let mut sum = ExactScalar::zero();
        for z in lower
            .interval_to(upper, lattice)
            .expect("checked comparable")
        {
            if &z != upper {
                sum += mobius_memo(lower, &z, lattice);
            }
        }
        -sum
    };
    cache().lock().unwrap().insert(key, value.clone());
    value
}

/// The defining recursion on the actual interval with no shared memo.
pub fn mobius_by_recursion(
    lower: &Partition,
    upper: &Partition,
    lattice: Lattice,
) -> Result<ExactScalar> {
    check(lower, upper, lattice)?;
    let mut elements = lower.interval_to(upper, lattice)?;
    // Finer elements first: more blocks means lower in the lattice.
    elements.sort_by_key(|z| std::cmp::Reverse(z.block_count()));
    let mut values: Vec<ExactScalar> = Vec::with_capacity(elements.len());
    for (i, z) in elements.iter().enumerate() {
        let v = if z == lower {
            ExactScalar::one()
        } else {
            let mut sum = ExactScalar::zero();
            for (w, vw) in elements[..i].iter().zip(&values) {
                if w.refines_unchecked(z) {
                    sum += vw;
                }
            }
            -sum
        };
        values.push(v);
    }
    let idx = elements.iter().position(|z| z == upper).unwrap();
    Ok(values[idx].clone())
}

/// Product formulas: `(-1)^{n-1}(n-1)!` per factor in the full lattice,
/// `(-1)^{n-1} Cat_{n-1}` per factor in the noncrossing lattice.
pub fn mobius_closed_form(
    lower: &Partition,
    upper: &Partition,
    lattice: Lattice,
) -> Result<ExactScalar> {
    check(lower, upper, lattice)?;
    let mut acc = BigInt::one();
    for n in interval_type(lower, upper, lattice) {
        let magnitude: BigInt = match lattice {
            Lattice::Full => (1..n).map(BigInt::from).product(),
            Lattice::Noncrossing => BigInt::from(catalan_number(n - 1)),
        };
        acc *= magnitude;
        if (n - 1) % 2 == 1 {
            acc = -acc;
        }
    }
    Ok(BigRational::from_integer(acc))
}
