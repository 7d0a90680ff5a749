//! Tuples of processes with free, stationary increments, specified by their
//! joint free cumulants per unit time.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cumulants::{moments_from_cumulants, CumulantFunctional, FunctionalJson};
use crate::error::{Error, Result};
use crate::partitions::{shared_noncrossing, Partition};
use crate::scalar::{self, ExactScalar};

/// How the unit-time cumulant of a word of components is obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Law {
    /// One component with `r_n = rate` for every `n`.
    FreePoisson { rate: ExactScalar },
    /// One component with `r_2 = 1` and all other cumulants zero.
    Semicircular,
    /// One component with the listed `r_1, r_2, ..`; longer words are undefined.
    Custom(Vec<ExactScalar>),
    /// `k` copies of the same one-component process.
    Identical { base: Box<ProcessSpec>, k: usize },
    /// Freely independent families placed side by side.
    FreeFamily(Vec<ProcessSpec>),
    /// An explicit table; only increasing words (subsets) are defined.
    Table(CumulantFunctional),
    /// Diagonal components `Δ(X_G)`, one per group of base components.
    Derived {
        base: Box<ProcessSpec>,
        groups: Vec<Vec<usize>>,
    },
    /// Component `i` is base component `positions[i]`; repeats allowed.
    Reindexed {
        base: Box<ProcessSpec>,
        positions: Vec<usize>,
    },
}

/// A consistent `k`-tuple, given by its unit-time cumulants.
#[derive(Clone, Debug)]
pub struct ProcessSpec {
    k: usize,
    law: Law,
    labels: Vec<String>,
    unit: OnceLock<Arc<CumulantFunctional>>,
}

impl PartialEq for ProcessSpec {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.law == other.law
    }
}

impl Eq for ProcessSpec {}

fn default_labels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("X{i}")).collect()
}

impl ProcessSpec {
    fn new(k: usize, law: Law) -> Self {
        Self {
            k,
            law,
            labels: default_labels(k),
            unit: OnceLock::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Unit-time joint cumulant `κ(X_{w_1}, .., X_{w_n})` of a word of component indices.
    pub fn word_cumulant(&self, word: &[usize]) -> Result<ExactScalar> {
        if word.is_empty() {
            return Err(Error::UndefinedCumulant(Vec::new()));
        }
        if let Some(&bad) = word.iter().find(|&&c| c >= self.k) {
            return Err(Error::Dimension {
                expected: self.k,
                found: bad + 1,
            });
        }
        match &self.law {
            Law::FreePoisson { rate } => Ok(rate.clone()),
            Law::Semicircular => Ok(scalar::int(i64::from(word.len() == 2))),
            Law::Custom(r) => Ok(r.get(word.len() - 1).cloned().unwrap_or_else(scalar::zero)),
            Law::Identical { base, .. } => base.word_cumulant(&vec![0; word.len()]),
            Law::FreeFamily(members) => {
                let locate = |c: usize| {
                    let mut offset = 0;
                    for (m, member) in members.iter().enumerate() {
                        if c < offset + member.k {
                            return (m, c - offset);
                        }
                        offset += member.k;
                    }
                    unreachable!("component checked against k")
                };
                let (family, _) = locate(word[0]);
                let mut local = Vec::with_capacity(word.len());
                for &c in word {
                    let (m, i) = locate(c);
                    if m != family {
                        return Ok(ExactScalar::zero());
                    }
                    local.push(i);
                }
                members[family].word_cumulant(&local)
            }
            Law::Table(r) => {
                if word.windows(2).all(|w| w[0] < w[1]) {
                    Ok(r.get(word).clone())
                } else {
                    Err(Error::UndefinedCumulant(word.to_vec()))
                }
            }
            Law::Derived { base, groups } => {
                let flat: Vec<usize> = word
                    .iter()
                    .flat_map(|&c| groups[c].iter().copied())
                    .collect();
                base.word_cumulant(&flat)
            }
            Law::Reindexed { base, positions } => {
                let mapped: Vec<usize> = word.iter().map(|&c| positions[c]).collect();
                base.word_cumulant(&mapped)
            }
        }
    }

    /// `R(B; X)` per unit time for every nonempty `B ⊆ [k]`, computed once.
    pub fn unit_cumulants(&self) -> Result<Arc<CumulantFunctional>> {
        if let Some(r) = self.unit.get() {
            return Ok(r.clone());
        }
        let mut r = CumulantFunctional::from_fn(self.k, |b| self.word_cumulant(b))?;
        if let Law::FreeFamily(members) = &self.law {
            let sizes: Vec<usize> = members.iter().map(ProcessSpec::k).collect();
            r = r.with_freeness(Partition::interval(&sizes))?;
        }
        Ok(self.unit.get_or_init(|| Arc::new(r)).clone())
    }

    /// True when every first cumulant vanishes.
    pub fn is_centered(&self) -> Result<bool> {
        for i in 0..self.k {
            if !self.word_cumulant(&[i])?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn descriptor(&self) -> ProcessDescriptor {
        match &self.law {
            Law::FreePoisson { rate } => ProcessDescriptor::FreePoisson {
                rate: scalar::format(rate),
            },
            Law::Semicircular => ProcessDescriptor::Semicircular,
            Law::Custom(r) => ProcessDescriptor::Custom {
                cumulants: CustomCumulants::Sequence(r.iter().map(scalar::format).collect()),
            },
            Law::Identical { base, k } => ProcessDescriptor::Tuple {
                mode: TupleMode::Identical,
                k: Some(*k),
                base: Some(Box::new(base.descriptor())),
                components: None,
            },
            Law::FreeFamily(members) => ProcessDescriptor::Tuple {
                mode: TupleMode::Free,
                k: None,
                base: None,
                components: Some(members.iter().map(ProcessSpec::descriptor).collect()),
            },
            Law::Table(r) => ProcessDescriptor::Custom {
                cumulants: CustomCumulants::Table(r.to_json()),
            },
            Law::Derived { base, groups } => ProcessDescriptor::Derived {
                base: Box::new(base.descriptor()),
                groups: groups
                    .iter()
                    .map(|g| g.iter().map(|i| i + 1).collect())
                    .collect(),
            },
            Law::Reindexed { base, positions } => ProcessDescriptor::Derived {
                base: Box::new(base.descriptor()),
                groups: positions.iter().map(|&i| vec![i + 1]).collect(),
            },
        }
    }

    pub fn from_descriptor(d: &ProcessDescriptor) -> Result<Self> {
        match d {
            ProcessDescriptor::FreePoisson { rate } => make_free_poisson(scalar::parse(rate)?),
            ProcessDescriptor::Semicircular => Ok(make_semicircular()),
            ProcessDescriptor::Custom { cumulants } => match cumulants {
                CustomCumulants::Sequence(values) => make_custom(
                    values
                        .iter()
                        .map(|v| scalar::parse(v))
                        .collect::<Result<Vec<_>>>()?,
                ),
                CustomCumulants::Table(json) => make_table(CumulantFunctional::from_json(json)?),
            },
            ProcessDescriptor::Tuple {
                mode,
                k,
                base,
                components,
            } => match mode {
                TupleMode::Identical => {
                    let base = base
                        .as_ref()
                        .ok_or_else(|| Error::InvalidSpec("identical tuple needs a base".into()))?;
                    let k =
                        k.ok_or_else(|| Error::InvalidSpec("identical tuple needs k".into()))?;
                    make_tuple(TupleMode::identical(Self::from_descriptor(base)?, k))
                }
                TupleMode::Free => {
                    let members = components
                        .as_ref()
                        .ok_or_else(|| Error::InvalidSpec("free tuple needs components".into()))?
                        .iter()
                        .map(Self::from_descriptor)
                        .collect::<Result<Vec<_>>>()?;
                    make_tuple(TupleMode::free(members))
                }
            },
            ProcessDescriptor::Derived { base, groups } => {
                let groups = groups
                    .iter()
                    .map(|g| {
                        g.iter()
                            .map(|&i| {
                                i.checked_sub(1)
                                    .ok_or_else(|| Error::InvalidSpec("groups are 1-based".into()))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                derived_diagonal_tuple(&Self::from_descriptor(base)?, &groups)
            }
        }
    }

    /// Parses either a JSON descriptor or a shorthand: `poisson`, `poisson:1/2`,
    /// `semicircular`, `custom:1/2,1/3,..`, optionally followed by `xK` for
    /// `K` identical copies (e.g. `semicircular x3`).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            let d: ProcessDescriptor =
                serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            return Self::from_descriptor(&d);
        }
        let (body, copies) = match text.rsplit_once('x') {
            Some((body, n)) if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) => {
                let n: usize = n.parse().map_err(|_| Error::Parse(text.into()))?;
                (body.trim(), Some(n))
            }
            _ => (text, None),
        };
        let (name, arg) = match body.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (body, None),
        };
        let base = match (name, arg) {
            ("poisson" | "free_poisson", None) => make_free_poisson(scalar::one())?,
            ("poisson" | "free_poisson", Some(rate)) => make_free_poisson(scalar::parse(rate)?)?,
            ("semicircular" | "brownian", None) => make_semicircular(),
            ("custom", Some(list)) => make_custom(
                list.split(',')
                    .map(scalar::parse)
                    .collect::<Result<Vec<_>>>()?,
            )?,
            _ => return Err(Error::Parse(format!("unknown process {text:?}"))),
        };
        match copies {
            Some(k) => make_tuple(TupleMode::identical(base, k)),
            None => Ok(base),
        }
    }
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::FreePoisson { rate } => write!(f, "free_poisson({})", scalar::format(rate)),
            Law::Semicircular => write!(f, "semicircular"),
            Law::Custom(r) => {
                let parts: Vec<String> = r.iter().map(scalar::format).collect();
                write!(f, "custom({})", parts.join(","))
            }
            Law::Identical { base, k } => write!(f, "{base}x{k}"),
            Law::FreeFamily(members) => {
                let parts: Vec<String> = members.iter().map(ToString::to_string).collect();
                write!(f, "free[{}]", parts.join(";"))
            }
            Law::Table(r) => write!(
                f,
                "table({})",
                serde_json::to_string(&r.to_json()).unwrap_or_default()
            ),
            Law::Derived { base, groups } => {
                write!(f, "derived({base};")?;
                for g in groups {
                    let items: Vec<String> = g.iter().map(|i| (i + 1).to_string()).collect();
                    write!(f, "{{{}}}", items.join(","))?;
                }
                write!(f, ")")
            }
            Law::Reindexed { base, positions } => {
                let items: Vec<String> = positions.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "reindexed({base};{})", items.join(","))
            }
        }
    }
}

/// JSON process descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProcessDescriptor {
    FreePoisson {
        rate: String,
    },
    Semicircular,
    Tuple {
        mode: TupleMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<ProcessDescriptor>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        components: Option<Vec<ProcessDescriptor>>,
    },
    Custom {
        cumulants: CustomCumulants,
    },
    Derived {
        base: Box<ProcessDescriptor>,
        groups: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CustomCumulants {
    Sequence(Vec<String>),
    Table(FunctionalJson),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleMode {
    Identical,
    Free,
}

/// Argument of [`make_tuple`].
pub enum TupleSpec {
    IdenticalCopies { base: ProcessSpec, k: usize },
    FreeFamily(Vec<ProcessSpec>),
}

impl TupleMode {
    pub fn identical(base: ProcessSpec, k: usize) -> TupleSpec {
        TupleSpec::IdenticalCopies { base, k }
    }

    pub fn free(members: Vec<ProcessSpec>) -> TupleSpec {
        TupleSpec::FreeFamily(members)
    }
}

pub fn make_free_poisson(rate: ExactScalar) -> Result<ProcessSpec> {
    if !rate.is_positive() {
        return Err(Error::InvalidSpec(format!(
            "free Poisson rate must be positive, got {}",
            scalar::format(&rate)
        )));
    }
    Ok(ProcessSpec::new(1, Law::FreePoisson { rate }))
}

pub fn make_semicircular() -> ProcessSpec {
    ProcessSpec::new(1, Law::Semicircular)
}

/// One component with free cumulants `r_1, .., r_n` per unit time and
/// `r_m = 0` for `m > n` (so `custom:0,1` is the semicircular law).
pub fn make_custom(cumulants: Vec<ExactScalar>) -> Result<ProcessSpec> {
    if cumulants.is_empty() {
        return Err(Error::InvalidSpec(
            "custom process needs at least r_1".into(),
        ));
    }
    Ok(ProcessSpec::new(1, Law::Custom(cumulants)))
}

/// A `k`-tuple given by an explicit subset-indexed cumulant table.
pub fn make_table(r: CumulantFunctional) -> Result<ProcessSpec> {
    Ok(ProcessSpec::new(r.k(), Law::Table(r)))
}

pub fn make_tuple(spec: TupleSpec) -> Result<ProcessSpec> {
    match spec {
        TupleSpec::IdenticalCopies { base, k } => {
            if base.k != 1 {
                return Err(Error::InvalidSpec(format!(
                    "identical copies need a one-component base, got {} components",
                    base.k
                )));
            }
            if k == 0 {
                return Err(Error::InvalidSpec("tuple needs at least one copy".into()));
            }
            if k == 1 {
                return Ok(base);
            }
            Ok(ProcessSpec::new(
                k,
                Law::Identical {
                    base: Box::new(base),
                    k,
                },
            ))
        }
        TupleSpec::FreeFamily(members) => {
            if members.is_empty() {
                return Err(Error::InvalidSpec("free family needs a member".into()));
            }
            if members.len() == 1 {
                return Ok(members.into_iter().next().unwrap());
            }
            let k = members.iter().map(ProcessSpec::k).sum();
            let labels = members
                .iter()
                .enumerate()
                .flat_map(|(m, s)| s.labels.iter().map(move |l| format!("{l}.{}", m + 1)))
                .collect();
            Ok(ProcessSpec {
                labels,
                ..ProcessSpec::new(k, Law::FreeFamily(members))
            })
        }
    }
}

/// Half-open interval `[start, end)` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    start: ExactScalar,
    end: ExactScalar,
}

impl Interval {
    pub fn new(start: ExactScalar, end: ExactScalar) -> Result<Self> {
        if start.is_negative() || end <= start {
            return Err(Error::InvalidInterval {
                start: scalar::format(&start),
                end: scalar::format(&end),
            });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> &ExactScalar {
        &self.start
    }

    pub fn end(&self) -> &ExactScalar {
        &self.end
    }

    pub fn length(&self) -> ExactScalar {
        &self.end - &self.start
    }
}

/// `|J_1 ∩ .. ∩ J_n|`.
pub fn intersection_length<'a>(intervals: impl IntoIterator<Item = &'a Interval>) -> ExactScalar {
    let mut it = intervals.into_iter();
    let Some(first) = it.next() else {
        return ExactScalar::zero();
    };
    let (mut lo, mut hi) = (first.start.clone(), first.end.clone());
    for j in it {
        if j.start > lo {
            lo = j.start.clone();
        }
        if j.end < hi {
            hi = j.end.clone();
        }
    }
    if hi > lo {
        hi - lo
    } else {
        ExactScalar::zero()
    }
}

/// Ordered subdivision `I_1, .., I_N` of `[0, t)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subdivision {
    t: ExactScalar,
    lengths: Vec<ExactScalar>,
}

impl Subdivision {
    pub fn from_lengths(lengths: Vec<ExactScalar>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidSubdivision("no intervals".into()));
        }
        if let Some(bad) = lengths.iter().find(|l| !l.is_positive()) {
            return Err(Error::InvalidSubdivision(format!(
                "length {} is not positive",
                scalar::format(bad)
            )));
        }
        let t = lengths.iter().sum();
        Ok(Self { t, lengths })
    }

    /// `N` intervals of length `t/N`.
    pub fn uniform(t: ExactScalar, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSubdivision("N must be positive".into()));
        }
        let len = &t / scalar::int(n as i64);
        Self::from_lengths(vec![len; n])
    }

    pub fn t(&self) -> &ExactScalar {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[ExactScalar] {
        &self.lengths
    }

    /// `δ(S) = max ℓ_j`.
    pub fn mesh(&self) -> ExactScalar {
        self.lengths.iter().max().cloned().unwrap()
    }

    pub fn is_uniform(&self) -> bool {
        self.lengths.windows(2).all(|w| w[0] == w[1])
    }

    /// `Σ_j ℓ_j^m`.
    pub fn power_sum(&self, m: usize) -> ExactScalar {
        self.lengths.iter().map(|l| scalar::pow(l, m)).sum()
    }

    pub fn intervals(&self) -> Vec<Interval> {
        let mut start = ExactScalar::zero();
        self.lengths
            .iter()
            .map(|l| {
                let end = &start + l;
                let j = Interval {
                    start: start.clone(),
                    end: end.clone(),
                };
                start = end;
                j
            })
            .collect()
    }
}

impl fmt::Display for Subdivision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_uniform() {
            write!(f, "uniform(t={},N={})", scalar::format(&self.t), self.n())
        } else {
            let parts: Vec<String> = self.lengths.iter().map(scalar::format).collect();
            write!(f, "[{}]", parts.join(","))
        }
    }
}

fn check_intervals(spec: &ProcessSpec, intervals: &[Interval]) -> Result<()> {
    if intervals.len() != spec.k {
        return Err(Error::Dimension {
            expected: spec.k,
            found: intervals.len(),
        });
    }
    Ok(())
}

/// `R_π(X_1(J_1), .., X_k(J_k)) = ∏_{B ∈ π} |∩_{i ∈ B} J_i| · R_π(X)`.
pub fn increment_cumulant(
    spec: &ProcessSpec,
    p: &Partition,
    intervals: &[Interval],
) -> Result<ExactScalar> {
    check_intervals(spec, intervals)?;
    if p.k() != spec.k {
        return Err(Error::Dimension {
            expected: spec.k,
            found: p.k(),
        });
    }
    p.require_noncrossing()?;
    let r = spec.unit_cumulants()?;
    let mut acc = scalar::one();
    for block in p.blocks() {
        let len = intersection_length(block.iter().map(|&i| &intervals[i]));
        if len.is_zero() {
            return Ok(len);
        }
        acc *= len * r.get(block);
    }
    Ok(acc)
}

/// The whole cumulant functional of `(X_1(J_1), .., X_k(J_k))`.
pub fn increment_cumulants(
    spec: &ProcessSpec,
    intervals: &[Interval],
) -> Result<CumulantFunctional> {
    check_intervals(spec, intervals)?;
    let r = spec.unit_cumulants()?;
    CumulantFunctional::from_fn(spec.k, |b| {
        Ok(intersection_length(b.iter().map(|&i| &intervals[i])) * r.get(b))
    })
}

/// `(Δ(X_{G_1}), .., Δ(X_{G_m}))`, whose joint cumulant on a word of groups is
/// the base cumulant of the concatenated word. The rule is checked against
/// the direct moment expansion for the requested groups before it is used.
pub fn derived_diagonal_tuple(spec: &ProcessSpec, groups: &[Vec<usize>]) -> Result<ProcessSpec> {
    if groups.is_empty() {
        return Err(Error::InvalidSpec("derived tuple needs a group".into()));
    }
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidSpec("empty group".into()));
        }
        if let Some(&bad) = g.iter().find(|&&i| i >= spec.k) {
            return Err(Error::Dimension {
                expected: spec.k,
                found: bad + 1,
            });
        }
    }
    let derived = ProcessSpec::new(
        groups.len(),
        Law::Derived {
            base: Box::new(spec.clone()),
            groups: groups.to_vec(),
        },
    );
    if !substitution_rule_holds(spec, groups)? {
        return Err(Error::SubstitutionRule(groups.to_vec()));
    }
    Ok(derived)
}

/// The tuple `(X_{c_1}, .., X_{c_n})` read off `spec` at the listed components.
pub fn reindexed(spec: &ProcessSpec, positions: &[usize]) -> Result<ProcessSpec> {
    if positions.is_empty() {
        return Err(Error::InvalidSpec("reindexing needs a component".into()));
    }
    if let Some(&bad) = positions.iter().find(|&&i| i >= spec.k) {
        return Err(Error::Dimension {
            expected: spec.k,
            found: bad + 1,
        });
    }
    let labels = positions.iter().map(|&i| spec.labels[i].clone()).collect();
    Ok(ProcessSpec {
        labels,
        ..ProcessSpec::new(
            positions.len(),
            Law::Reindexed {
                base: Box::new(spec.clone()),
                positions: positions.to_vec(),
            },
        )
    })
}

/// Longest concatenated word covered by the substitution-rule gate.
pub const GATE_WORD_LENGTH: usize = 6;

/// Outcome of checking the substitution rule on every group pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionReport {
    pub patterns_checked: usize,
    pub failures: Vec<Vec<Vec<usize>>>,
}

impl SubstitutionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `τ(Δ(G_1, t) ⋯ Δ(G_m, t))` two ways, compared as polynomials in `t`:
/// directly as `Σ_{τ ∈ NC(l), τ ≥ σ} t^{|τ|} R_τ(Y)` over the concatenated
/// word `Y`, and as `Σ_{ρ ∈ NC(m)} t^{|ρ|} R_ρ` from the materialized
/// cumulants of the derived tuple. The two sums are also checked at `t = 1`
/// against the moment-cumulant transform.
pub fn substitution_rule_holds(spec: &ProcessSpec, groups: &[Vec<usize>]) -> Result<bool> {
    let word: Vec<usize> = groups.iter().flatten().copied().collect();
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let sigma = Partition::interval(&sizes);
    let m = groups.len();

    let mut direct = scalar::Polynomial::zero();
    let mut letters = Vec::with_capacity(word.len());
    for tau in shared_noncrossing(word.len())?.iter() {
        if !sigma.refines_unchecked(tau) {
            continue;
        }
        let mut value = scalar::one();
        for block in tau.blocks() {
            letters.clear();
            letters.extend(block.iter().map(|&i| word[i]));
            value *= spec.word_cumulant(&letters)?;
            if value.is_zero() {
                break;
            }
        }
        direct.add_term(value, tau.block_count());
    }

    let derived = ProcessSpec::new(
        m,
        Law::Derived {
            base: Box::new(spec.clone()),
            groups: groups.to_vec(),
        },
    );
    let unit = derived.unit_cumulants()?;
    let mut via_derived = scalar::Polynomial::zero();
    for rho in shared_noncrossing(m)?.iter() {
        via_derived.add_term(unit.product_over(rho)?, rho.block_count());
    }
    if via_derived != direct {
        return Ok(false);
    }
    Ok(moments_from_cumulants(&unit, None)? == direct.eval(&scalar::one()))
}

/// Every sequence of nonempty increasing groups of `[k]` with total length at most `max_len`.
pub fn group_patterns(k: usize, max_len: usize) -> Vec<Vec<Vec<usize>>> {
    let subsets: Vec<Vec<usize>> = (1usize..1 << k)
        .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    fn grow(
        subsets: &[Vec<usize>],
        budget: usize,
        current: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        for s in subsets.iter().filter(|s| s.len() <= budget) {
            current.push(s.clone());
            out.push(current.clone());
            grow(subsets, budget - s.len(), current, out);
            current.pop();
        }
    }
    grow(&subsets, max_len, &mut current, &mut out);
    out
}

/// Checks the substitution rule on every group pattern over `spec` with
/// total word length at most `max_len`.
pub fn validate_substitution_rule(
    spec: &ProcessSpec,
    max_len: usize,
) -> Result<SubstitutionReport> {
    use rayon::prelude::*;
    let patterns = group_patterns(spec.k, max_len);
    let outcomes: Vec<Result<bool>> = patterns
        .par_iter()
        .map(|g| substitution_rule_holds(spec, g))
        .collect();
    let mut failures = Vec::new();
    for (g, ok) in patterns.iter().zip(outcomes) {
        if !ok? {
            failures.push(g.clone());
        }
    }
    Ok(SubstitutionReport {
        patterns_checked: patterns.len(),
        failures,
    })
}

fn gate_cache() -> &'static Mutex<HashMap<String, bool>> {
    static CACHE: OnceLock<Mutex<HashMap<String, bool>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Runs (once per spec) [`validate_substitution_rule`] at the gate length and
/// fails if any pattern disagrees.
pub fn require_substitution_gate(spec: &ProcessSpec) -> Result<()> {
    let key = spec.to_string();
    let cached = gate_cache().lock().unwrap().get(&key).copied();
    let passed = match cached {
        Some(p) => p,
        None => {
            let report = validate_substitution_rule(spec, GATE_WORD_LENGTH)?;
            gate_cache().lock().unwrap().insert(key, report.passed());
            report.passed()
        }
    };
    if passed {
        Ok(())
    } else {
        Err(Error::SubstitutionRule(Vec::new()))
    }
}

/// `X_i` at unit time as a single-variable sequence `r_1, .., r_n` (for tests
/// and reporting); components of multi-component specs must be picked first.
pub fn univariate_cumulants(spec: &ProcessSpec, n: usize) -> Result<Vec<ExactScalar>> {
    if spec.k != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: spec.k,
        });
    }
    (1..=n)
        .map(|len| spec.word_cumulant(&vec![0; len]))
        .collect()
}

/// Whether `t` is a valid time horizon.
pub fn check_time(t: &ExactScalar) -> Result<()> {
    if t.is_positive() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "time must be positive, got {}",
            scalar::format(t)
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::univariate_moments;
    use crate::scalar::{int, ratio};

    fn custom() -> ProcessSpec {
        let primes = [2, 3, 5, 7, 11, 13, 17, 19];
        make_custom(primes.iter().map(|&p| ratio(1, p)).collect()).unwrap()
    }

    #[test]
    fn free_poisson_cumulants_and_moments() {
        let x = make_free_poisson(int(1)).unwrap();
        assert_eq!(univariate_cumulants(&x, 3).unwrap(), vec![int(1); 3]);
        let m = univariate_moments(&univariate_cumulants(&x, 3).unwrap()).unwrap();
        assert_eq!(m[2], int(5));
        assert!(make_free_poisson(int(0)).is_err());
        assert!(make_free_poisson(int(-1)).is_err());
    }

    #[test]
    fn semicircular_cumulants() {
        let s = make_semicircular();
        assert_eq!(
            univariate_cumulants(&s, 4).unwrap(),
            vec![int(0), int(1), int(0), int(0)]
        );
        let m = univariate_moments(&univariate_cumulants(&s, 5).unwrap()).unwrap();
        assert_eq!(m[3], int(2));
        assert_eq!(m[4], int(0));
        assert!(s.is_centered().unwrap());
    }

    #[test]
    fn tuples() {
        let s3 = make_tuple(TupleMode::identical(make_semicircular(), 3)).unwrap();
        assert_eq!(s3.unit_cumulants().unwrap().get(&[0, 2]), &int(1));
        let fam = make_tuple(TupleMode::free(vec![
            make_free_poisson(int(1)).unwrap(),
            make_free_poisson(int(1)).unwrap(),
        ]))
        .unwrap();
        let r = fam.unit_cumulants().unwrap();
        assert_eq!(r.get(&[0, 1]), &int(0));
        assert_eq!(r.get(&[1]), &int(1));
        assert!(r.mixed_cumulants_vanish());
        let single = make_tuple(TupleMode::identical(custom(), 1)).unwrap();
        assert_eq!(single, custom());
    }

    #[test]
    fn custom_cumulants_vanish_past_their_length() {
        let c = custom();
        assert_eq!(c.word_cumulant(&[0; 9]).unwrap(), int(0));
        let semi = make_custom(vec![int(0), int(1)]).unwrap();
        for n in 1..=6 {
            assert_eq!(
                semi.word_cumulant(&vec![0; n]).unwrap(),
                make_semicircular().word_cumulant(&vec![0; n]).unwrap()
            );
        }
    }

    #[test]
    fn increment_scaling() {
        let x = make_tuple(TupleMode::identical(make_free_poisson(int(1)).unwrap(), 2)).unwrap();
        let j = |a, b| Interval::new(a, b).unwrap();
        let top = Partition::one(2);
        // Disjoint intervals.
        let disjoint = [j(int(0), ratio(1, 2)), j(ratio(1, 2), int(1))];
        assert_eq!(increment_cumulant(&x, &top, &disjoint).unwrap(), int(0));
        // Nested intervals.
        let s = make_tuple(TupleMode::identical(make_semicircular(), 2)).unwrap();
        let nested = [j(ratio(1, 4), ratio(1, 2)), j(int(0), int(1))];
        assert_eq!(increment_cumulant(&s, &top, &nested).unwrap(), ratio(1, 4));
        // Equal intervals of length ℓ.
        let c3 = make_tuple(TupleMode::identical(custom(), 3)).unwrap();
        let same = vec![j(ratio(1, 3), int(1)); 3];
        assert_eq!(
            increment_cumulant(&c3, &Partition::one(3), &same).unwrap(),
            ratio(2, 3) * ratio(1, 5)
        );
        let zero = Partition::zero(3);
        assert_eq!(
            increment_cumulant(&c3, &zero, &same).unwrap(),
            scalar::pow(&(ratio(2, 3) * ratio(1, 2)), 3)
        );
        assert!(Interval::new(int(1), int(1)).is_err());
        assert!(Interval::new(int(-1), int(1)).is_err());
    }

    #[test]
    fn scaling_is_additive_in_length() {
        let c2 = make_tuple(TupleMode::identical(custom(), 2)).unwrap();
        let top = Partition::one(2);
        let j =
            |a: ExactScalar, b: ExactScalar| vec![Interval::new(a.clone(), b.clone()).unwrap(); 2];
        let left = increment_cumulant(&c2, &top, &j(int(0), ratio(2, 5))).unwrap();
        let right = increment_cumulant(&c2, &top, &j(ratio(2, 5), ratio(3, 2))).unwrap();
        let whole = increment_cumulant(&c2, &top, &j(int(0), ratio(3, 2))).unwrap();
        assert_eq!(left + right, whole);
    }

    #[test]
    fn subdivisions() {
        let s = Subdivision::uniform(ratio(3, 2), 3).unwrap();
        assert_eq!(s.mesh(), ratio(1, 2));
        assert_eq!(s.power_sum(2), ratio(3, 4));
        assert!(s.is_uniform());
        let u = Subdivision::from_lengths(vec![ratio(1, 2), ratio(1, 4), ratio(3, 4)]).unwrap();
        assert_eq!(u.t(), &ratio(3, 2));
        assert_eq!(u.intervals()[2].start(), &ratio(3, 4));
        assert!(Subdivision::from_lengths(vec![int(1), int(0)]).is_err());
        assert!(Subdivision::uniform(int(1), 0).is_err());
    }

    #[test]
    fn derived_tuples() {
        let c = make_tuple(TupleMode::identical(custom(), 2)).unwrap();
        let d = derived_diagonal_tuple(&c, &[vec![0, 1]]).unwrap();
        assert_eq!(d.word_cumulant(&[0]).unwrap(), ratio(1, 3));
        let p = make_tuple(TupleMode::identical(make_free_poisson(int(1)).unwrap(), 3)).unwrap();
        let dp = derived_diagonal_tuple(&p, &[vec![0, 2], vec![1]]).unwrap();
        let r = dp.unit_cumulants().unwrap();
        assert!([&[0][..], &[1], &[0, 1]]
            .iter()
            .all(|b| r.get(b) == &int(1)));
        let s = make_tuple(TupleMode::identical(make_semicircular(), 2)).unwrap();
        let ds = derived_diagonal_tuple(&s, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(ds.word_cumulant(&[0, 1]).unwrap(), int(0));
        assert!(derived_diagonal_tuple(&s, &[vec![]]).is_err());
        assert!(derived_diagonal_tuple(&s, &[vec![2]]).is_err());
    }

    #[test]
    fn nested_derivation_matches_flat() {
        let x = make_tuple(TupleMode::identical(custom(), 4)).unwrap();
        let inner = derived_diagonal_tuple(&x, &[vec![0, 1], vec![2], vec![3]]).unwrap();
        let nested = derived_diagonal_tuple(&inner, &[vec![0, 1, 2]]).unwrap();
        let flat = derived_diagonal_tuple(&x, &[vec![0, 1, 2, 3]]).unwrap();
        for n in 1..=2 {
            assert_eq!(
                nested.word_cumulant(&vec![0; n]).unwrap(),
                flat.word_cumulant(&vec![0; n]).unwrap()
            );
        }
    }

    #[test]
    fn substitution_gate_small() {
        let c = make_tuple(TupleMode::identical(custom(), 2)).unwrap();
        let report = validate_substitution_rule(&c, 4).unwrap();
        assert!(report.passed());
        assert_eq!(report.patterns_checked, group_patterns(2, 4).len());
        // Subsets of [2] by size: 2 singletons, 1 pair.
        assert_eq!(group_patterns(2, 1).len(), 2);
        assert_eq!(group_patterns(2, 2).len(), 2 + 4 + 1);
    }

    #[test]
    fn descriptors_roundtrip() {
        let specs = vec![
            make_free_poisson(ratio(1, 2)).unwrap(),
            make_semicircular(),
            custom(),
            make_tuple(TupleMode::identical(make_semicircular(), 3)).unwrap(),
            make_tuple(TupleMode::free(vec![
                custom(),
                make_free_poisson(int(1)).unwrap(),
            ]))
            .unwrap(),
            make_table(CumulantFunctional::from_fn(2, |b| Ok(int(b.len() as i64))).unwrap())
                .unwrap(),
        ];
        for s in specs {
            let json = serde_json::to_string(&s.descriptor()).unwrap();
            assert_eq!(ProcessSpec::parse(&json).unwrap(), s, "{json}");
        }
        let p = ProcessSpec::parse(r#"{"type": "free_poisson", "rate": "1/1"}"#).unwrap();
        assert_eq!(p, make_free_poisson(int(1)).unwrap());
        let t = ProcessSpec::parse(
            r#"{"type": "tuple", "mode": "identical", "k": 3, "base": {"type": "semicircular"}}"#,
        )
        .unwrap();
        assert_eq!(t.k(), 3);
    }

    #[test]
    fn shorthand() {
        assert_eq!(
            ProcessSpec::parse("poisson").unwrap(),
            make_free_poisson(int(1)).unwrap()
        );
        assert_eq!(
            ProcessSpec::parse("poisson:1/3").unwrap(),
            make_free_poisson(ratio(1, 3)).unwrap()
        );
        assert_eq!(ProcessSpec::parse("semicircular x3").unwrap().k(), 3);
        assert_eq!(ProcessSpec::parse("custom:1/2,1/3x2").unwrap().k(), 2);
        assert!(ProcessSpec::parse("gamma").is_err());
    }
}
