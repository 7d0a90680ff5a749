use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{expect_pr, expect_st, MeasureKind};
use super::product::{expect_product_of_st, MAX_PRODUCT_ARITY};
use super::theorem::{
    corollary_residual, diagonal_nesting_residual, inner_peeling_residual, inner_singleton_norm,
    main_theorem_residual, tuple_of_arity, Order,
};
use crate::error::{Error, Result};
use crate::partitions::{mobius, shared_noncrossing, shared_set_partitions, Lattice, Partition};
use crate::processes::{ProcessSpec, Subdivision};
use crate::scalar::{self, ExactScalar};

/// One exact check; it passes when the residual is exactly zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub partition: String,
    pub process: String,
    pub subdivision: String,
    #[serde(with = "optional_scalar")]
    pub residual: Option<ExactScalar>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod optional_scalar {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::{self, ExactScalar};

    pub fn serialize<S: Serializer>(x: &Option<ExactScalar>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&scalar::format(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ExactScalar>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| scalar::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl CheckRecord {
    pub fn from_result(
        check: impl Into<String>,
        partition: impl Into<String>,
        process: impl Into<String>,
        subdivision: impl Into<String>,
        result: Result<ExactScalar>,
    ) -> Self {
        let (residual, pass, error) = match result {
            Ok(r) => {
                let pass = r.is_zero();
                (Some(r), pass, None)
            }
            Err(e) => (None, false, Some(e.to_string())),
        };
        Self {
            check: check.into(),
            partition: partition.into(),
            process: process.into(),
            subdivision: subdivision.into(),
            residual,
            pass,
            error,
        }
    }
}

/// Subdivisions and times the suite sweeps.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub subdivisions: Vec<Subdivision>,
    pub times: Vec<ExactScalar>,
    /// Also record the factorisation of `St_π` into inner cumulants and outer diagonals.
    pub main_theorem: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            subdivisions: standard_subdivisions(),
            times: standard_times(),
            main_theorem: true,
        }
    }
}

/// Two uniform subdivisions and one uneven one of `[0, 3/2)`.
pub fn standard_subdivisions() -> Vec<Subdivision> {
    vec![
        Subdivision::uniform(scalar::one(), 3).expect("valid"),
        Subdivision::from_lengths(vec![
            scalar::ratio(1, 2),
            scalar::ratio(1, 4),
            scalar::ratio(3, 4),
        ])
        .expect("valid"),
        Subdivision::uniform(scalar::int(2), 5).expect("valid"),
    ]
}

pub fn standard_times() -> Vec<ExactScalar> {
    vec![scalar::one(), scalar::ratio(3, 2)]
}

/// Largest `k` accepted by [`identity_suite`].
pub const MAX_SUITE_K: usize = 5;

enum Cell {
    StPr(Partition, usize),
    Mobius(Partition, usize),
    Product(Partition, usize),
    Peeling(Partition, usize, Order, usize),
    Nesting(Vec<usize>, Order, usize),
    Sandwich(Order, usize),
    InnerSingleton(Partition, usize),
    MainTheorem(Partition, Order, usize),
}

fn compositions(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=k {
        for mut rest in compositions(k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn orders_for(arity: usize) -> Vec<Order> {
    if 2 * arity <= MAX_PRODUCT_ARITY {
        vec![Order::L1, Order::L2]
    } else {
        vec![Order::L1]
    }
}

fn plan(spec: &ProcessSpec, k_max: usize, options: &SuiteOptions) -> Result<Vec<Cell>> {
    let centered = spec.is_centered()?;
    let mut cells = Vec::new();
    for k in 1..=k_max {
        for p in shared_set_partitions(k)?.iter() {
            for s in 0..options.subdivisions.len() {
                cells.push(Cell::StPr(p.clone(), s));
                cells.push(Cell::Mobius(p.clone(), s));
            }
        }
        for p in shared_noncrossing(k)?.iter() {
            for s in 0..options.subdivisions.len() {
                cells.push(Cell::Product(p.clone(), s));
            }
            let split = p.classify()?;
            for t in 0..options.times.len() {
                for order in orders_for(k) {
                    for class in 0..split.inner_count() {
                        cells.push(Cell::Peeling(p.clone(), class, order, t));
                    }
                    if options.main_theorem {
                        cells.push(Cell::MainTheorem(p.clone(), order, t));
                    }
                }
                let has_inner_singleton = split.inner().iter().any(|c| c.len() == 1);
                if centered && has_inner_singleton && 2 * k <= MAX_PRODUCT_ARITY {
                    cells.push(Cell::InnerSingleton(p.clone(), t));
                }
            }
        }
        for sizes in compositions(k) {
            for t in 0..options.times.len() {
                for order in orders_for(k) {
                    cells.push(Cell::Nesting(sizes.clone(), order, t));
                }
            }
        }
    }
    for t in 0..options.times.len() {
        for order in orders_for(3) {
            cells.push(Cell::Sandwich(order, t));
        }
    }
    Ok(cells)
}

fn limit_label(t: &ExactScalar) -> String {
    format!("limit(t={})", scalar::format(t))
}

fn st_pr_inversion(p: &Partition, s: &Subdivision, x: &ProcessSpec) -> Result<ExactScalar> {
    let mut sum = ExactScalar::zero();
    for sigma in p.coarsenings() {
        sum += expect_st(&sigma, s, x)?;
    }
    Ok(expect_pr(p, s, x)? - sum)
}

fn mobius_inversion(p: &Partition, s: &Subdivision, x: &ProcessSpec) -> Result<ExactScalar> {
    let mut sum = ExactScalar::zero();
    for sigma in p.coarsenings() {
        sum += mobius(p, &sigma, Lattice::Full)? * expect_pr(&sigma, s, x)?;
    }
    Ok(expect_st(p, s, x)? - sum)
}

/// `τ(Pr_π(S)) - τ(∏_i Pr_{𝓘'_i(π)}(S))` with the factors on the covered sets.
fn product_over_outer(p: &Partition, s: &Subdivision, x: &ProcessSpec) -> Result<ExactScalar> {
    let split = p.classify()?;
    let factors: Vec<(Partition, MeasureKind)> = (0..split.outer_count())
        .map(|i| (split.inner_closure(i), MeasureKind::Pr))
        .collect();
    Ok(expect_pr(p, s, x)? - expect_product_of_st(&factors, x, s)?)
}

fn evaluate(cell: &Cell, spec: &ProcessSpec, options: &SuiteOptions) -> CheckRecord {
    let name = spec.to_string();
    let tuple = |k: usize| tuple_of_arity(spec, k);
    let sub = |i: usize| &options.subdivisions[i];
    let time = |i: usize| &options.times[i];
    match cell {
        Cell::StPr(p, s) => CheckRecord::from_result(
            "st_pr_inversion",
            p.to_string(),
            name,
            sub(*s).to_string(),
            tuple(p.k()).and_then(|x| st_pr_inversion(p, sub(*s), &x)),
        ),
        Cell::Mobius(p, s) => CheckRecord::from_result(
            "mobius_inversion",
            p.to_string(),
            name,
            sub(*s).to_string(),
            tuple(p.k()).and_then(|x| mobius_inversion(p, sub(*s), &x)),
        ),
        Cell::Product(p, s) => CheckRecord::from_result(
            "outer_product",
            p.to_string(),
            name,
            sub(*s).to_string(),
            tuple(p.k()).and_then(|x| product_over_outer(p, sub(*s), &x)),
        ),
        Cell::Peeling(p, class, order, t) => CheckRecord::from_result(
            format!("inner_peeling_{order}"),
            format!("{p} class {}", class + 1),
            name,
            limit_label(time(*t)),
            tuple(p.k()).and_then(|x| inner_peeling_residual(p, *class, &x, *order, time(*t))),
        ),
        Cell::Nesting(sizes, order, t) => CheckRecord::from_result(
            format!("diagonal_nesting_{order}"),
            Partition::interval(sizes).to_string(),
            name,
            limit_label(time(*t)),
            tuple(sizes.iter().sum())
                .and_then(|x| diagonal_nesting_residual(sizes, &x, *order, time(*t))),
        ),
        Cell::Sandwich(order, t) => CheckRecord::from_result(
            format!("free_sandwich_{order}"),
            "((1,3)(2))",
            name,
            limit_label(time(*t)),
            corollary_residual(spec, *order, time(*t)),
        ),
        Cell::InnerSingleton(p, t) => CheckRecord::from_result(
            "inner_singleton_L2",
            p.to_string(),
            name,
            limit_label(time(*t)),
            tuple(p.k()).and_then(|x| inner_singleton_norm(p, &x, time(*t))),
        ),
        Cell::MainTheorem(p, order, t) => CheckRecord::from_result(
            format!("main_theorem_{order}"),
            p.to_string(),
            name,
            limit_label(time(*t)),
            tuple(p.k()).and_then(|x| main_theorem_residual(p, &x, *order, time(*t))),
        ),
    }
}

/// Runs every exact identity check for `π` of size up to `k_max`. Cells are
/// evaluated in parallel; records come back in a fixed order.
pub fn identity_suite(
    spec: &ProcessSpec,
    k_max: usize,
    options: &SuiteOptions,
) -> Result<Vec<CheckRecord>> {
    if k_max == 0 || k_max > MAX_SUITE_K {
        return Err(Error::SizeGuard {
            what: "suite k_max",
            value: k_max,
            limit: MAX_SUITE_K,
        });
    }
    let cells = plan(spec, k_max, options)?;
    Ok(cells
        .par_iter()
        .map(|cell| evaluate(cell, spec, options))
        .collect())
}
