//! Joint moments and joint free cumulants of a `k`-tuple, stored per subset
//! of positions, and the noncrossing Möbius transforms between them.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{mobius, shared_noncrossing, Lattice, Partition};
use crate::scalar::{self, ExactScalar};

/// Largest arity a subset table may have (`2^k` entries).
pub const MAX_ARITY: usize = 16;

fn positions(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize)
        .filter(|i| mask >> i & 1 == 1)
        .collect()
}

fn mask_of(subset: &[usize]) -> usize {
    subset.iter().fold(0, |m, &i| m | 1 << i)
}

/// Values indexed by nonempty subsets of `{0, .., k-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct SubsetTable {
    k: usize,
    values: Vec<ExactScalar>,
}

impl SubsetTable {
    fn build(k: usize, mut f: impl FnMut(&[usize]) -> Result<ExactScalar>) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::SizeGuard {
                what: "functional arity",
                value: k,
                limit: MAX_ARITY,
            });
        }
        let mut values = vec![ExactScalar::zero(); 1 << k];
        for (mask, slot) in values.iter_mut().enumerate().skip(1) {
            *slot = f(&positions(mask))?;
        }
        Ok(Self { k, values })
    }

    fn get(&self, subset: &[usize]) -> &ExactScalar {
        &self.values[mask_of(subset)]
    }

    /// `∏_{B ∈ π} value(B)`.
    fn product_over(&self, p: &Partition) -> ExactScalar {
        let mut acc = scalar::one();
        for block in p.blocks() {
            let v = &self.values[mask_of(block)];
            if v.is_zero() {
                return ExactScalar::zero();
            }
            acc *= v;
        }
        acc
    }

    fn check_arity(&self, p: &Partition) -> Result<()> {
        if p.k() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                found: p.k(),
            });
        }
        Ok(())
    }

    fn to_json(&self) -> FunctionalJson {
        let values = self
            .values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(mask, v)| {
                let key: Vec<String> = positions(mask)
                    .iter()
                    .map(|i| (i + 1).to_string())
                    .collect();
                (key.join(","), scalar::format(v))
            })
            .collect();
        FunctionalJson { k: self.k, values }
    }

    fn from_json(json: &FunctionalJson) -> Result<Self> {
        let mut parsed: BTreeMap<usize, ExactScalar> = BTreeMap::new();
        for (key, value) in &json.values {
            let mut subset = Vec::new();
            for item in key.split(',') {
                let i: usize = item
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad subset key {key:?}")))?;
                if i == 0 || i > json.k {
                    return Err(Error::Parse(format!(
                        "subset key {key:?} outside [{}]",
                        json.k
                    )));
                }
                subset.push(i - 1);
            }
            parsed.insert(mask_of(&subset), scalar::parse(value)?);
        }
        Self::build(json.k, |subset| {
            parsed.get(&mask_of(subset)).cloned().ok_or_else(|| {
                let key: Vec<String> = subset.iter().map(|i| (i + 1).to_string()).collect();
                Error::Parse(format!("missing value for subset {}", key.join(",")))
            })
        })
    }
}

/// Wire form: `{"k": 3, "values": {"1": "1/1", "1,3": "1/2", ..}}`, 1-based keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalJson {
    pub k: usize,
    pub values: BTreeMap<String, String>,
}

/// `M(B; A)` for every nonempty `B ⊆ [k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MomentFunctional {
    table: SubsetTable,
}

impl MomentFunctional {
    pub fn from_fn(k: usize, f: impl FnMut(&[usize]) -> Result<ExactScalar>) -> Result<Self> {
        Ok(Self {
            table: SubsetTable::build(k, f)?,
        })
    }

    /// Moments of a single variable repeated `k` times: `M(B) = m_{|B|}`.
    pub fn univariate(moments: &[ExactScalar]) -> Result<Self> {
        Self::from_fn(moments.len(), |b| Ok(moments[b.len() - 1].clone()))
    }

    pub fn k(&self) -> usize {
        self.table.k
    }

    pub fn get(&self, subset: &[usize]) -> &ExactScalar {
        self.table.get(subset)
    }

    /// `M_π = ∏_{B ∈ π} M(B)`.
    pub fn product_over(&self, p: &Partition) -> Result<ExactScalar> {
        self.table.check_arity(p)?;
        Ok(self.table.product_over(p))
    }

    /// Free cumulants of every sub-word, by Möbius inversion on each subset.
    pub fn to_cumulants(&self) -> Result<CumulantFunctional> {
        let table = SubsetTable::build(self.k(), |subset| {
            let n = subset.len();
            let top = Partition::one(n);
            let mut acc = ExactScalar::zero();
            for sigma in shared_noncrossing(n)?.iter() {
                let mu = mobius(sigma, &top, Lattice::Noncrossing)?;
                acc += mu * lifted_product(&self.table, subset, sigma);
            }
            Ok(acc)
        })?;
        Ok(CumulantFunctional::from_table(table))
    }

    pub fn to_json(&self) -> FunctionalJson {
        self.table.to_json()
    }

    pub fn from_json(json: &FunctionalJson) -> Result<Self> {
        Ok(Self {
            table: SubsetTable::from_json(json)?,
        })
    }
}

/// `∏_{V ∈ σ} table(subset[V])`, where `σ` partitions the positions of `subset`.
fn lifted_product(table: &SubsetTable, subset: &[usize], sigma: &Partition) -> ExactScalar {
    let mut acc = scalar::one();
    for block in sigma.blocks() {
        let mask = block.iter().fold(0, |m, &v| m | 1 << subset[v]);
        let v = &table.values[mask];
        if v.is_zero() {
            return ExactScalar::zero();
        }
        acc *= v;
    }
    acc
}

/// `R(B; A)` for every nonempty `B ⊆ [k]`, with optional freeness and norm data.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CumulantFunctional {
    table: SubsetTable,
    freeness: Option<Partition>,
    norms: Option<Vec<ExactScalar>>,
}

impl CumulantFunctional {
    fn from_table(table: SubsetTable) -> Self {
        Self {
            table,
            freeness: None,
            norms: None,
        }
    }

    pub fn from_fn(k: usize, f: impl FnMut(&[usize]) -> Result<ExactScalar>) -> Result<Self> {
        Ok(Self::from_table(SubsetTable::build(k, f)?))
    }

    /// A single variable repeated `k` times: `R(B) = r_{|B|}`.
    pub fn univariate(cumulants: &[ExactScalar]) -> Result<Self> {
        Self::from_fn(cumulants.len(), |b| Ok(cumulants[b.len() - 1].clone()))
    }

    /// Declares which positions belong to mutually free families.
    pub fn with_freeness(mut self, families: Partition) -> Result<Self> {
        self.table.check_arity(&families)?;
        self.freeness = Some(families);
        Ok(self)
    }

    /// Declares operator norms `‖A_i‖`, one per position.
    pub fn with_norms(mut self, norms: Vec<ExactScalar>) -> Result<Self> {
        if norms.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                found: norms.len(),
            });
        }
        self.norms = Some(norms);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.table.k
    }

    pub fn freeness(&self) -> Option<&Partition> {
        self.freeness.as_ref()
    }

    pub fn get(&self, subset: &[usize]) -> &ExactScalar {
        self.table.get(subset)
    }

    /// `R_π = ∏_{B ∈ π} R(B)`.
    pub fn product_over(&self, p: &Partition) -> Result<ExactScalar> {
        self.table.check_arity(p)?;
        Ok(self.table.product_over(p))
    }

    /// Every `R(B)` multiplied by `c`: the cumulants at time `c` of a process
    /// whose unit-time cumulants are `self`.
    pub fn scaled(&self, c: &ExactScalar) -> Self {
        let mut out = self.clone();
        for v in out.table.values.iter_mut() {
            *v *= c;
        }
        out
    }

    /// Moments of every sub-word: `M(B) = Σ_{σ ∈ NC(B)} R_σ`.
    pub fn to_moments(&self) -> Result<MomentFunctional> {
        let table = SubsetTable::build(self.k(), |subset| {
            let mut acc = ExactScalar::zero();
            for sigma in shared_noncrossing(subset.len())?.iter() {
                acc += lifted_product(&self.table, subset, sigma);
            }
            Ok(acc)
        })?;
        Ok(MomentFunctional { table })
    }

    /// True iff `R(B) = 0` for every `B` meeting two declared free families.
    /// Without a declared split the check holds vacuously.
    pub fn mixed_cumulants_vanish(&self) -> bool {
        let Some(families) = &self.freeness else {
            return true;
        };
        self.table
            .values
            .iter()
            .enumerate()
            .skip(1)
            .all(|(mask, v)| {
                let pos = positions(mask);
                let first = families.block_of(pos[0]);
                let mixed = pos.iter().any(|&i| families.block_of(i) != first);
                !mixed || v.is_zero()
            })
    }

    /// `|R(B)| ≤ 16^{|B|} ∏_{i ∈ B} ‖A_i‖` for every `B`; `None` without declared norms.
    pub fn norm_bound_holds(&self) -> Option<bool> {
        let norms = self.norms.as_ref()?;
        let sixteen = scalar::int(16);
        Some(
            self.table
                .values
                .iter()
                .enumerate()
                .skip(1)
                .all(|(mask, v)| {
                    let bound = positions(mask)
                        .iter()
                        .fold(scalar::one(), |acc, &i| acc * &sixteen * &norms[i]);
                    v.abs() <= bound
                }),
        )
    }

    pub fn to_json(&self) -> FunctionalJson {
        self.table.to_json()
    }

    pub fn from_json(json: &FunctionalJson) -> Result<Self> {
        Ok(Self::from_table(SubsetTable::from_json(json)?))
    }
}

/// `M_π = Σ_{σ ∈ NC(k), σ ≤ π} R_σ`; with no partition, the full moment `M = M_{1̂}`.
pub fn moments_from_cumulants(
    r: &CumulantFunctional,
    p: Option<&Partition>,
) -> Result<ExactScalar> {
    let top = p.cloned().unwrap_or_else(|| Partition::one(r.k()));
    r.table.check_arity(&top)?;
    top.require_noncrossing()?;
    let mut acc = ExactScalar::zero();
    for sigma in shared_noncrossing(r.k())?.iter() {
        if sigma.refines_unchecked(&top) {
            acc += r.table.product_over(sigma);
        }
    }
    Ok(acc)
}

/// `R_π = Σ_{σ ∈ NC(k), σ ≤ π} μ(σ, π) M_σ`; with no partition, `R = R_{1̂}`.
pub fn cumulants_from_moments(m: &MomentFunctional, p: Option<&Partition>) -> Result<ExactScalar> {
    let top = p.cloned().unwrap_or_else(|| Partition::one(m.k()));
    m.table.check_arity(&top)?;
    top.require_noncrossing()?;
    let mut acc = ExactScalar::zero();
    for sigma in shared_noncrossing(m.k())?.iter() {
        if sigma.refines_unchecked(&top) {
            acc += mobius(sigma, &top, Lattice::Noncrossing)? * m.table.product_over(sigma);
        }
    }
    Ok(acc)
}

/// `R(B) = 0` whenever `B` meets two free families.
pub fn mixed_cumulant_vanishing_check(r: &CumulantFunctional) -> bool {
    r.mixed_cumulants_vanish()
}

/// Moments `m_1 .. m_n` of one variable with free cumulants `r_1 .. r_n`.
pub fn univariate_moments(cumulants: &[ExactScalar]) -> Result<Vec<ExactScalar>> {
    (1..=cumulants.len())
        .map(|n| moments_from_cumulants(&CumulantFunctional::univariate(&cumulants[..n])?, None))
        .collect()
}

/// Free cumulants `r_1 .. r_n` of one variable with moments `m_1 .. m_n`.
pub fn univariate_cumulants(moments: &[ExactScalar]) -> Result<Vec<ExactScalar>> {
    (1..=moments.len())
        .map(|n| cumulants_from_moments(&MomentFunctional::univariate(&moments[..n])?, None))
        .collect()
}
