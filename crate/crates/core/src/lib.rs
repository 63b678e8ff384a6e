//! Stochastic solvers for semilinear parabolic PDEs built from branching
//! particle systems whose particles carry signed delta-derivative tags.
//!
//! The crate has two halves that meet in the middle:
//!
//! * [`jetcalc`] works symbolically. It expands branching functions in the
//!   particle mass `β`, extracts the limiting nonlinearity `ψ`, and inverts
//!   that map to compile a target nonlinearity into a branching recipe.
//! * [`engine`] works numerically. It simulates the tagged branching
//!   diffusion and turns exit ensembles into estimates of the PDE solution,
//!   which [`oracle`] cross-checks with deterministic solvers.
//!
//! [`functions`] supplies boundary data with closed-form derivatives and
//! [`harness`] drives experiments from JSON configs.

pub mod engine;
pub mod functions;
pub mod harness;
pub mod jetcalc;
pub mod oracle;
