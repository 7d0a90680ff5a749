//! Exact expectations of `St_π` and `Pr_π` over finite subdivisions, their
//! mesh-to-zero limits, products of such measures, and residual checkers for
//! the identities relating them.

pub mod engine;
pub mod formula;
pub mod product;
pub mod suite;
pub mod theorem;

pub use engine::{
    expect, expect_pr, expect_st, expectation_report, limit_expect, limit_expect_pr,
    limit_expect_st, uniform_formula, ExpectationReport, MeasureKind,
};
pub use formula::UniformFormula;
pub use product::{
    expect_product_of_st, limit_expect_product, Factor, Monomial, OperatorPolynomial,
};
pub use suite::{identity_suite, standard_subdivisions, standard_times, CheckRecord, SuiteOptions};
pub use theorem::{
    corollary_residual, diagonal_identity_check, diagonal_nesting_residual, example_formulas_check,
    inner_peeling_residual, inner_singleton_norm, main_theorem_residual, tuple_of_arity,
    ExampleProcess, ExampleResidual, Order,
};
