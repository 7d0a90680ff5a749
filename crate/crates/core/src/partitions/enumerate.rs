use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::One;

use super::Partition;
use crate::error::{Error, Result};

/// Upper bounds on the ground-set size accepted by the enumerators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_full: usize,
    pub max_noncrossing: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_full: 10,
            max_noncrossing: 12,
        }
    }
}

/// Restricted growth strings of length `k`, lexicographic. With
/// `noncrossing`, an element may join an existing block only if every element
/// since that block's last member belongs to a block opened after it.
pub(crate) fn rgs_all(k: usize, noncrossing: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = Vec::with_capacity(k);
    let mut last = Vec::with_capacity(k);
    let mut first = Vec::with_capacity(k);
    extend(k, noncrossing, &mut labels, &mut first, &mut last, &mut out);
    out
}

fn extend(
    k: usize,
    noncrossing: bool,
    labels: &mut Vec<usize>,
    first: &mut Vec<usize>,
    last: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let i = labels.len();
    if i == k {
        out.push(labels.clone());
        return;
    }
    let open = first.len();
    for b in 0..=open {
        if b < open && noncrossing {
            let prev = last[b];
            if (prev + 1..i).any(|j| first[labels[j]] < prev) {
                continue;
            }
        }
        let saved = if b < open { Some(last[b]) } else { None };
        if b == open {
            first.push(i);
            last.push(i);
        } else {
            last[b] = i;
        }
        labels.push(b);
        extend(k, noncrossing, labels, first, last, out);
        labels.pop();
        match saved {
            Some(prev) => last[b] = prev,
            None => {
                first.pop();
                last.pop();
            }
        }
    }
}

fn guard(k: usize, limit: usize) -> Result<()> {
    if k == 0 || k > limit {
        return Err(Error::SizeGuard {
            what: "ground-set size k",
            value: k,
            limit,
        });
    }
    Ok(())
}

/// All of `𝒫(k)` in restricted-growth-string lexicographic order.
pub fn set_partitions(k: usize) -> Result<Vec<Partition>> {
    set_partitions_with(k, &EnumerationLimits::default())
}

pub fn set_partitions_with(k: usize, limits: &EnumerationLimits) -> Result<Vec<Partition>> {
    guard(k, limits.max_full)?;
    Ok(rgs_all(k, false)
        .iter()
        .map(|l| Partition::from_labels(l))
        .collect())
}

/// All of `NC(k)`, in the same order as [`set_partitions`].
pub fn noncrossing_partitions(k: usize) -> Result<Vec<Partition>> {
    noncrossing_partitions_with(k, &EnumerationLimits::default())
}

pub fn noncrossing_partitions_with(k: usize, limits: &EnumerationLimits) -> Result<Vec<Partition>> {
    guard(k, limits.max_noncrossing)?;
    Ok(rgs_all(k, true)
        .iter()
        .map(|l| Partition::from_labels(l))
        .collect())
}

type Shared = Mutex<HashMap<(usize, bool), Arc<Vec<Partition>>>>;

fn shared(k: usize, noncrossing: bool) -> Result<Arc<Vec<Partition>>> {
    static CACHE: OnceLock<Shared> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&(k, noncrossing)) {
        return Ok(hit.clone());
    }
    let list = if noncrossing {
        noncrossing_partitions(k)?
    } else {
        set_partitions(k)?
    };
    let list = Arc::new(list);
    cache.lock().unwrap().insert((k, noncrossing), list.clone());
    Ok(list)
}

/// Memoized [`set_partitions`].
pub fn shared_set_partitions(k: usize) -> Result<Arc<Vec<Partition>>> {
    shared(k, false)
}

/// Memoized [`noncrossing_partitions`].
pub fn shared_noncrossing(k: usize) -> Result<Arc<Vec<Partition>>> {
    shared(k, true)
}

pub fn bell_number(n: usize) -> BigUint {
    // Bell triangle.
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![row.last().unwrap().clone()];
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0].clone()
}

pub fn catalan_number(n: usize) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..n {
        c = c * BigUint::from(2 * (2 * i + 1)) / BigUint::from(i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(set_partitions(1).unwrap(), vec![Partition::one(1)]);
        assert_eq!(set_partitions(3).unwrap().len(), 5);
        assert_eq!(set_partitions(4).unwrap().len(), 15);
        assert_eq!(noncrossing_partitions(1).unwrap().len(), 1);
        assert_eq!(noncrossing_partitions(4).unwrap().len(), 14);
        assert_eq!(noncrossing_partitions(5).unwrap().len(), 42);
    }

    #[test]
    fn order_is_lexicographic_on_growth_strings() {
        let all = set_partitions(4).unwrap();
        assert!(all.windows(2).all(|w| w[0].labels() < w[1].labels()));
        assert_eq!(all[0], Partition::one(4));
        assert_eq!(*all.last().unwrap(), Partition::zero(4));
    }

    #[test]
    fn noncrossing_is_filtered_full_lattice() {
        for k in 1..=7 {
            let filtered: Vec<Partition> = set_partitions(k)
                .unwrap()
                .into_iter()
                .filter(Partition::is_noncrossing)
                .collect();
            assert_eq!(noncrossing_partitions(k).unwrap(), filtered);
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(set_partitions(0), Err(Error::SizeGuard { .. })));
        assert!(matches!(set_partitions(11), Err(Error::SizeGuard { .. })));
        assert!(matches!(
            noncrossing_partitions(13),
            Err(Error::SizeGuard { .. })
        ));
        let wide = EnumerationLimits {
            max_full: 11,
            max_noncrossing: 12,
        };
        assert_eq!(set_partitions_with(3, &wide).unwrap().len(), 5);
    }

    #[test]
    fn number_sequences() {
        let bell: Vec<u64> = (0..9).map(|n| bell_number(n).try_into().unwrap()).collect();
        assert_eq!(bell, vec![1, 1, 2, 5, 15, 52, 203, 877, 4140]);
        let cat: Vec<u64> = (0..9)
            .map(|n| catalan_number(n).try_into().unwrap())
            .collect();
        assert_eq!(cat, vec![1, 1, 2, 5, 14, 42, 132, 429, 1430]);
    }
}
