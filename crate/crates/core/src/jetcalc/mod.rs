//! Exact small-β series calculus over jet variables.
//!
//! Everything here is exact rational arithmetic: the same inputs always
//! produce bit-identical outputs.

mod compile;
mod existence;
mod expand;
mod jet;
mod recipe;
mod series;

use thiserror::Error;

pub use compile::{compile_recipe, SolutionFamily, INTENSITY_EXPONENTS};
pub use existence::{check_existence, Admissibility, ExistenceReport};
pub use expand::{expand_elementary, expand_elementary_with_max, psi_limit, psi_series, Substitution};
pub use jet::{jet_var_name, parse_rational, rational_to_f64, JetPolynomial, Monomial};
pub use recipe::{
    rational_str, BranchingRecipe, ElementaryBranching, RecipeEntry, Rescaling, Sign, Type2Convention,
    DEFAULT_MAX_POWER,
};
pub use series::{BetaSeries, SeriesFn};

/// Exact rational coefficient type.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("{function:?} needs a nonzero constant (or unit, for log) leading term, found {leading}")]
    NonUnitLeadingTerm { function: SeriesFn, leading: String },
    #[error("unsupported branching: {0}")]
    UnsupportedKind(String),
    #[error("expansion order {requested} is too low; at least {needed} is required")]
    InsufficientOrder { requested: i32, needed: i32 },
    #[error("coefficient of β^{order} does not vanish: {polynomial}")]
    DivergentTerm { order: i32, polynomial: JetPolynomial },
    #[error("no recipe exists: {constraint}")]
    Infeasible { constraint: String },
    #[error("recipe is not unique: {0}")]
    UnderDetermined(Box<SolutionFamily>),
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot parse `{input}`: {message}")]
    Parse { input: String, message: String },
}
