//! Set partitions of `[k]`, the noncrossing sublattice, and the lattice
//! operations the measure engine is built on.
//!
//! A [`Partition`] is stored as its restricted growth string (the label of
//! each element, blocks numbered by first appearance) together with the
//! canonical block list. Elements are 0-based in the API and 1-based in the
//! text syntax `((1,3)(2))`.

mod classes;
mod enumerate;
mod mobius;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

pub use classes::ClassSplit;
pub use enumerate::{
    bell_number, catalan_number, noncrossing_partitions, noncrossing_partitions_with,
    set_partitions, set_partitions_with, shared_noncrossing, shared_set_partitions,
    EnumerationLimits,
};
pub use mobius::{mobius, mobius_by_recursion, mobius_closed_form, Lattice};

/// A set partition of `{0, .., k-1}` in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from arbitrary block labels, one per element.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        let mut canonical = Vec::with_capacity(labels.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let next = relabel.len();
            let c = *relabel.entry(*l).or_insert(next);
            if c == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[c].push(i);
            canonical.push(c);
        }
        Self {
            labels: canonical,
            blocks,
        }
    }

    /// Builds a partition of `{0, .., k-1}` from 0-based blocks.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Parse("empty block".into()));
            }
            for &e in block {
                if e >= k {
                    return Err(Error::Parse(format!("element {} outside [{}]", e + 1, k)));
                }
                if labels[e] != usize::MAX {
                    return Err(Error::Parse(format!("element {} repeated", e + 1)));
                }
                labels[e] = b;
            }
        }
        if let Some(missing) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Parse(format!("element {} missing", missing + 1)));
        }
        Ok(Self::from_labels(&labels))
    }

    /// The partition with no elements; only produced by restriction to an empty set.
    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            blocks: Vec::new(),
        }
    }

    /// `0̂_k`, all singletons.
    pub fn zero(k: usize) -> Self {
        Self::from_labels(&(0..k).collect::<Vec<_>>())
    }

    /// `1̂_k`, a single block.
    pub fn one(k: usize) -> Self {
        Self::from_labels(&vec![0; k])
    }

    /// Interval partition with consecutive blocks of the given sizes.
    pub fn interval(sizes: &[usize]) -> Self {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &n)| std::iter::repeat_n(b, n))
            .collect();
        Self::from_labels(&labels)
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    /// Number of blocks, `|π|`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Restricted growth string: the block index of every element.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_of(&self, element: usize) -> usize {
        self.labels[element]
    }

    pub fn is_noncrossing(&self) -> bool {
        for block in &self.blocks {
            for pair in block.windows(2) {
                let (a, c) = (pair[0], pair[1]);
                for b in a + 1..c {
                    let other = &self.blocks[self.labels[b]];
                    if other[0] < a || *other.last().unwrap() > c {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// True if every block is a run of consecutive elements.
    pub fn is_interval(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.last().unwrap() - b[0] + 1 == b.len())
    }

    fn check_same_k(&self, other: &Partition) -> Result<()> {
        if self.k() != other.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                found: other.k(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_noncrossing(&self) -> Result<()> {
        if self.is_noncrossing() {
            Ok(())
        } else {
            Err(Error::Crossing(self.to_string()))
        }
    }

    /// Lattice order `self ≤ other`: every block of `self` sits inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        self.check_same_k(other)?;
        Ok(self.refines_unchecked(other))
    }

    pub(crate) fn refines_unchecked(&self, other: &Partition) -> bool {
        self.blocks.iter().all(|block| {
            let l = other.labels[block[0]];
            block.iter().all(|&e| other.labels[e] == l)
        })
    }

    /// Common refinement (blockwise intersections).
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.check_same_k(other)?;
        let n = other.block_count().max(1);
        let keys: Vec<usize> = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(a, b)| a * n + b)
            .collect();
        Ok(Partition::from_labels(&keys))
    }

    /// Finest common coarsening.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_same_k(other)?;
        let mut parent: Vec<usize> = (0..self.k()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for block in self.blocks.iter().chain(other.blocks.iter()) {
            for pair in block.windows(2) {
                let (a, b) = (find(&mut parent, pair[0]), find(&mut parent, pair[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let roots: Vec<usize> = (0..self.k()).map(|i| find(&mut parent, i)).collect();
        Ok(Partition::from_labels(&roots))
    }

    /// Kreweras complement, computed as the cycle decomposition of `π⁻¹γ`
    /// with `γ = (0 1 .. k-1)` and each block read as an increasing cycle.
    pub fn kreweras(&self) -> Result<Partition> {
        self.require_noncrossing()?;
        let k = self.k();
        let mut inverse = vec![0; k];
        for block in &self.blocks {
            for j in 0..block.len() {
                let next = block[(j + 1) % block.len()];
                inverse[next] = block[j];
            }
        }
        let mut labels = vec![usize::MAX; k];
        let mut cycle = 0;
        for start in 0..k {
            if labels[start] != usize::MAX {
                continue;
            }
            let mut x = start;
            while labels[x] == usize::MAX {
                labels[x] = cycle;
                x = inverse[(x + 1) % k];
            }
            cycle += 1;
        }
        Ok(Partition::from_labels(&labels))
    }

    /// `π^op`: the partition read backwards, `i ↦ k-1-i`.
    pub fn opposite(&self) -> Partition {
        let reversed: Vec<usize> = self.labels.iter().rev().copied().collect();
        Partition::from_labels(&reversed)
    }

    /// `π + σ`: `σ` shifted past the elements of `π`.
    pub fn concat(&self, other: &Partition) -> Partition {
        let shift = self.block_count();
        let labels: Vec<usize> = self
            .labels
            .iter()
            .copied()
            .chain(other.labels.iter().map(|l| l + shift))
            .collect();
        Partition::from_labels(&labels)
    }

    /// Concatenation of a list of partitions, `π_1 + .. + π_n`.
    pub fn concat_all<'a>(parts: impl IntoIterator<Item = &'a Partition>) -> Partition {
        parts
            .into_iter()
            .fold(Partition::empty(), |acc, p| acc.concat(p))
    }

    /// Restriction to an increasing list of elements, re-indexed to `0..len`.
    pub fn restrict(&self, subset: &[usize]) -> Partition {
        let labels: Vec<usize> = subset.iter().map(|&e| self.labels[e]).collect();
        Partition::from_labels(&labels)
    }

    /// All `σ ≥ self` in the full lattice, in canonical order.
    pub fn coarsenings(&self) -> Vec<Partition> {
        let mut out: Vec<Partition> = enumerate::rgs_all(self.block_count(), false)
            .into_iter()
            .map(|theta| {
                let labels: Vec<usize> = self.labels.iter().map(|&l| theta[l]).collect();
                Partition::from_labels(&labels)
            })
            .collect();
        out.sort();
        out
    }

    /// All `z` with `self ≤ z ≤ upper` in the chosen lattice.
    pub fn interval_to(&self, upper: &Partition, lattice: Lattice) -> Result<Vec<Partition>> {
        if !self.refines(upper)? {
            return Err(Error::NotComparable {
                lower: self.to_string(),
                upper: upper.to_string(),
            });
        }
        Ok(self
            .coarsenings()
            .into_iter()
            .filter(|z| z.refines_unchecked(upper))
            .filter(|z| lattice == Lattice::Full || z.is_noncrossing())
            .collect())
    }

    /// Splits a noncrossing partition into outer and inner classes.
    pub fn classify(&self) -> Result<ClassSplit> {
        ClassSplit::new(self)
    }

    /// `(|[N]^k_π|, |[N]^k_{≥π}|)`: index tuples with kernel exactly `π`, and
    /// tuples constant on the blocks of `π`.
    pub fn kernel_index_counts(&self, n: usize) -> (BigUint, BigUint) {
        let b = self.block_count();
        let mut exact = BigUint::one();
        for i in 0..b {
            if i >= n {
                exact = BigUint::from(0u32);
                break;
            }
            exact *= BigUint::from(n - i);
        }
        let geq = num_traits::pow(BigUint::from(n), b);
        (exact, geq)
    }

    /// Index tuples `v ∈ [N]^k` (0-based) with `v_i = v_j ⇔ i ~ j`.
    pub fn kernel_indices_exact(&self, n: usize, limit: usize) -> Result<Vec<Vec<usize>>> {
        self.kernel_indices(n, limit, true)
    }

    /// Index tuples `v ∈ [N]^k` (0-based) with `i ~ j ⇒ v_i = v_j`.
    pub fn kernel_indices_geq(&self, n: usize, limit: usize) -> Result<Vec<Vec<usize>>> {
        self.kernel_indices(n, limit, false)
    }

    fn kernel_indices(&self, n: usize, limit: usize, distinct: bool) -> Result<Vec<Vec<usize>>> {
        let b = self.block_count();
        let total = n.checked_pow(b as u32).unwrap_or(usize::MAX);
        if total > limit {
            return Err(Error::SizeGuard {
                what: "N^|π| index tuples",
                value: total,
                limit,
            });
        }
        let mut out = Vec::new();
        let mut assignment = vec![0usize; b];
        for code in 0..total {
            let mut c = code;
            for slot in assignment.iter_mut() {
                *slot = c % n;
                c /= n;
            }
            if distinct {
                let mut seen = assignment.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != b {
                    continue;
                }
            }
            out.push(self.labels.iter().map(|&l| assignment[l]).collect());
        }
        Ok(out)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for block in &self.blocks {
            let items: Vec<String> = block.iter().map(|e| (e + 1).to_string()).collect();
            write!(f, "({})", items.join(","))?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses `((1,6,7)(2,5)(3)(4)(8)(9,10))`; whitespace is ignored and the
    /// outer parentheses are optional.
    fn from_str(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |why: &str| Error::Parse(format!("partition {text:?}: {why}"));
        let mut body = s.as_str();
        if body.starts_with("((") && body.ends_with("))") {
            body = &body[1..body.len() - 1];
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut rest = body;
        while !rest.is_empty() {
            rest = rest.strip_prefix(',').unwrap_or(rest);
            let inner = rest.strip_prefix('(').ok_or_else(|| bad("expected '('"))?;
            let close = inner
                .find(')')
                .ok_or_else(|| bad("unbalanced parentheses"))?;
            let block = inner[..close]
                .split(',')
                .map(|e| match e.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(bad("elements must be positive integers")),
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
            rest = &inner[close + 1..];
        }
        if blocks.is_empty() {
            return Err(bad("no blocks"));
        }
        let k = blocks.iter().flatten().max().map_or(0, |m| m + 1);
        Partition::from_blocks(k, &blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let text = "((1,6,7)(2,5)(3)(4)(8)(9,10))";
        assert_eq!(p(text).to_string(), text);
        assert_eq!(p(" ( (2, 3) (1) ) ").to_string(), "((1)(2,3))");
        assert_eq!(p("(1,2)(3)"), p("((1,2)(3))"));
        assert_eq!(p("((1,2,3))"), Partition::one(3));
        assert!("((1,3))".parse::<Partition>().is_err());
        assert!("((1,2)(2))".parse::<Partition>().is_err());
        assert!("((0))".parse::<Partition>().is_err());
        assert!("(1,2".parse::<Partition>().is_err());
    }

    #[test]
    fn canonical_form_orders_blocks_by_minimum() {
        let q = Partition::from_labels(&[5, 3, 5, 3]);
        assert_eq!(q.labels(), &[0, 1, 0, 1]);
        assert_eq!(q.blocks(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn crossing_detection() {
        assert!(!p("((1,3)(2,4))").is_noncrossing());
        assert!(p("((1,6,7)(2,5)(3)(4)(8)(9,10))").is_noncrossing());
        assert!(Partition::one(6).is_noncrossing());
        assert!(Partition::zero(6).is_noncrossing());
        assert!(!p("((1,4)(2,5)(3))").is_noncrossing());
    }

    #[test]
    fn refinement_order() {
        let a = p("((1,2)(3))");
        let b = p("((1)(2,3))");
        assert!(!a.refines(&b).unwrap());
        assert!(!b.refines(&a).unwrap());
        assert!(Partition::zero(3).refines(&a).unwrap());
        assert!(a.refines(&Partition::one(3)).unwrap());
        assert!(matches!(
            a.refines(&Partition::one(4)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn meet_and_join() {
        let a = p("((1,2)(3))");
        let b = p("((1)(2,3))");
        assert_eq!(a.meet(&b).unwrap(), Partition::zero(3));
        assert_eq!(a.join(&b).unwrap(), Partition::one(3));
        assert_eq!(a.meet(&a).unwrap(), a);
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(
            p("((1,2)(3,4))").join(&p("((1)(2,3)(4))")).unwrap(),
            Partition::one(4)
        );
    }

    #[test]
    fn kreweras_examples() {
        for k in 1..6 {
            assert_eq!(Partition::zero(k).kreweras().unwrap(), Partition::one(k));
            assert_eq!(Partition::one(k).kreweras().unwrap(), Partition::zero(k));
        }
        assert_eq!(p("((1,2)(3))").kreweras().unwrap(), p("((1)(2,3))"));
        assert!(matches!(
            p("((1,3)(2,4))").kreweras(),
            Err(Error::Crossing(_))
        ));
    }

    #[test]
    fn opposite_and_concat() {
        assert_eq!(p("((1,2)(3))").opposite(), p("((1)(2,3))"));
        assert_eq!(
            Partition::one(2).concat(&Partition::one(2)),
            p("((1,2)(3,4))")
        );
        let q = p("((1,6,7)(2,5)(3)(4)(8)(9,10))");
        assert_eq!(q.opposite().opposite(), q);
    }

    #[test]
    fn restriction_reindexes() {
        let q = p("((1,6,7)(2,5)(3)(4)(8)(9,10))");
        assert_eq!(q.restrict(&[1, 2, 3, 4]), p("((1,4)(2)(3))"));
        assert_eq!(q.restrict(&[]), Partition::empty());
    }

    #[test]
    fn coarsenings_and_intervals() {
        assert_eq!(Partition::zero(3).coarsenings().len(), 5);
        assert_eq!(Partition::one(3).coarsenings(), vec![Partition::one(3)]);
        let lower = Partition::zero(4);
        let upper = Partition::one(4);
        assert_eq!(lower.interval_to(&upper, Lattice::Full).unwrap().len(), 15);
        assert_eq!(
            lower
                .interval_to(&upper, Lattice::Noncrossing)
                .unwrap()
                .len(),
            14
        );
        assert!(matches!(
            upper.interval_to(&lower, Lattice::Full),
            Err(Error::NotComparable { .. })
        ));
    }

    #[test]
    fn kernel_counts() {
        let (exact, geq) = Partition::one(4).kernel_index_counts(5);
        assert_eq!((exact, geq), (BigUint::from(5u32), BigUint::from(5u32)));
        let (exact, geq) = Partition::zero(2).kernel_index_counts(3);
        assert_eq!((exact, geq), (BigUint::from(6u32), BigUint::from(9u32)));
        let (exact, _) = Partition::zero(4).kernel_index_counts(3);
        assert_eq!(exact, BigUint::from(0u32));
    }

    #[test]
    fn kernel_iterators_match_counts() {
        let q = p("((1,3)(2))");
        let exact = q.kernel_indices_exact(4, 1000).unwrap();
        let geq = q.kernel_indices_geq(4, 1000).unwrap();
        assert_eq!(exact.len(), 12);
        assert_eq!(geq.len(), 16);
        for v in &exact {
            assert_eq!(v[0], v[2]);
            assert_ne!(v[0], v[1]);
        }
        assert!(matches!(
            Partition::zero(5).kernel_indices_geq(10, 1000),
            Err(Error::SizeGuard { .. })
        ));
    }
}
