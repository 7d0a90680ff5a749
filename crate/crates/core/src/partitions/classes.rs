use super::Partition;
use crate::error::Result;

/// Outer/inner decomposition of a noncrossing partition.
///
/// A block is inner when another block has elements on both sides of it;
/// otherwise it is outer. Outer blocks are listed in increasing order, each
/// with the set of elements it spans (`min..=max`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSplit {
    source: Partition,
    outer: Vec<Vec<usize>>,
    inner: Vec<Vec<usize>>,
    covered: Vec<Vec<usize>>,
}

impl ClassSplit {
    pub fn new(p: &Partition) -> Result<Self> {
        p.require_noncrossing()?;
        let blocks = p.blocks();
        let enclosed = |b: &Vec<usize>| {
            let (lo, hi) = (b[0], *b.last().unwrap());
            blocks
                .iter()
                .any(|c| c != b && c[0] < lo && *c.last().unwrap() > hi)
        };
        let (inner, outer): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
            blocks.iter().cloned().partition(|b| enclosed(b));
        let covered = outer
            .iter()
            .map(|b| (b[0]..=*b.last().unwrap()).collect())
            .collect();
        Ok(Self {
            source: p.clone(),
            outer,
            inner,
            covered,
        })
    }

    pub fn source(&self) -> &Partition {
        &self.source
    }

    pub fn outer(&self) -> &[Vec<usize>] {
        &self.outer
    }

    pub fn inner(&self) -> &[Vec<usize>] {
        &self.inner
    }

    /// `o(π)`.
    pub fn outer_count(&self) -> usize {
        self.outer.len()
    }

    /// `i(π)`.
    pub fn inner_count(&self) -> usize {
        self.inner.len()
    }

    /// The span of each outer block; these are consecutive runs tiling `[k]`.
    pub fn covered_sets(&self) -> &[Vec<usize>] {
        &self.covered
    }

    /// Index of the outer block whose span contains `element`.
    pub fn covering_outer(&self, element: usize) -> usize {
        self.covered
            .iter()
            .position(|c| c.contains(&element))
            .expect("covered sets tile the ground set")
    }

    /// Elements strictly covered by outer block `i`.
    pub fn strictly_covered(&self, i: usize) -> Vec<usize> {
        self.covered[i]
            .iter()
            .copied()
            .filter(|e| !self.outer[i].contains(e))
            .collect()
    }

    /// The source restricted to the elements strictly covered by outer block `i`.
    pub fn inner_of(&self, i: usize) -> Partition {
        self.source.restrict(&self.strictly_covered(i))
    }

    /// Outer block `i` together with everything it covers, re-indexed.
    pub fn inner_closure(&self, i: usize) -> Partition {
        self.source.restrict(&self.covered[i])
    }

    /// `C(π)`: all elements lying in inner blocks, increasing.
    pub fn inner_support(&self) -> Vec<usize> {
        let mut support: Vec<usize> = self.inner.iter().flatten().copied().collect();
        support.sort_unstable();
        support
    }

    /// The source restricted to `C(π)`.
    pub fn inner_partition(&self) -> Partition {
        self.source.restrict(&self.inner_support())
    }

    /// Union of the outer blocks, increasing.
    pub fn outer_support(&self) -> Vec<usize> {
        let mut support: Vec<usize> = self.outer.iter().flatten().copied().collect();
        support.sort_unstable();
        support
    }

    /// The partition `(B_1, .., B_o)` of the outer support, re-indexed.
    pub fn outer_partition(&self) -> Partition {
        self.source.restrict(&self.outer_support())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::partitions::noncrossing_partitions;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn introduction_example() {
        let split = p("((1,6,7)(2,5)(3)(4)(8)(9,10))").classify().unwrap();
        assert_eq!(split.inner(), &[vec![1, 4], vec![2], vec![3]]);
        assert_eq!(split.outer(), &[vec![0, 5, 6], vec![7], vec![8, 9]]);
        assert_eq!(split.outer_count() + split.inner_count(), 6);
        assert_eq!(split.covered_sets()[0], (0..7).collect::<Vec<_>>());
        assert_eq!(split.inner_of(0), p("((1,4)(2)(3))"));
        assert_eq!(split.inner_of(1), Partition::empty());
        assert_eq!(split.inner_support(), vec![1, 2, 3, 4]);
        assert_eq!(split.outer_partition(), p("((1,2,3)(4)(5,6))"));
    }

    #[test]
    fn full_block_has_no_inner_classes() {
        let split = Partition::one(5).classify().unwrap();
        assert_eq!(split.outer_count(), 1);
        assert_eq!(split.inner_count(), 0);
    }

    #[test]
    fn single_cover() {
        let split = p("((1,3)(2))").classify().unwrap();
        assert_eq!(split.outer(), &[vec![0, 2]]);
        assert_eq!(split.inner(), &[vec![1]]);
    }

    #[test]
    fn crossing_rejected() {
        assert!(matches!(
            p("((1,3)(2,4))").classify(),
            Err(Error::Crossing(_))
        ));
    }

    #[test]
    fn inner_classes_sit_in_exactly_one_span() {
        for k in 1..=8 {
            for q in noncrossing_partitions(k).unwrap() {
                let split = q.classify().unwrap();
                for c in split.inner() {
                    let hits = split
                        .covered_sets()
                        .iter()
                        .filter(|cov| c.iter().all(|e| cov.contains(e)))
                        .count();
                    assert_eq!(hits, 1, "{q}");
                }
                // Outer spans tile [k] with consecutive runs.
                let tiled: Vec<usize> = split.covered_sets().iter().flatten().copied().collect();
                assert_eq!(tiled, (0..k).collect::<Vec<_>>(), "{q}");
                // Dropping inner classes leaves an interval partition of the spans.
                let spans = Partition::from_labels(
                    &(0..k).map(|e| split.covering_outer(e)).collect::<Vec<_>>(),
                );
                assert!(spans.is_interval());
                assert!(split.outer_partition().is_noncrossing());
            }
        }
    }
}
