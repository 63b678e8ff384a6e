use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::functions::BoundaryFunction;
use crate::jetcalc::{BranchingRecipe, Rescaling};

pub const DEFAULT_POPULATION_CAP: u64 = 1_000_000;
/// Fraction of replicas allowed to hit the population cap.
pub const DEFAULT_FAILURE_BUDGET: f64 = 1e-3;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Binary branching at unit rate; solves `∂ₜv = ½∂ₓ²v + v² − v`.
    #[serde(rename = "mckean")]
    McKean,
    /// Tagged branching at rate `k_β` with mass-`β` particles.
    Super,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::McKean => "mckean",
            Mode::Super => "super",
        })
    }
}

/// How derivative-shift events act on particle tags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivTagConvention {
    /// `exp(−∂ₓ log z)` adds a derivative and keeps the sign,
    /// `exp(+∂ₓ log z)` adds a derivative and flips it.
    #[default]
    Paired,
    /// The opposite assignment.
    Swapped,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorBars {
    #[default]
    DeltaMethod,
    Bootstrap {
        #[serde(default = "default_resamples")]
        resamples: usize,
    },
}

fn default_resamples() -> usize {
    DEFAULT_BOOTSTRAP_RESAMPLES
}

fn default_true() -> bool {
    true
}

fn default_cap() -> u64 {
    DEFAULT_POPULATION_CAP
}

fn default_budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}

fn default_rescaling() -> Rescaling {
    Rescaling::TypeI
}

/// Everything needed to produce one estimate at one space-time point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<BranchingRecipe>,
    /// Particle mass; ignored in McKean mode.
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_rescaling")]
    pub rescaling: Rescaling,
    pub x: f64,
    pub horizon: f64,
    /// Target boundary datum `g` for the rescaled solution.
    pub boundary: BoundaryFunction,
    /// Replace `g` by the exit datum `f` whose rescaled image is `g`.
    #[serde(default = "default_true")]
    pub invert_boundary: bool,
    pub replicas: u64,
    #[serde(default = "default_cap")]
    pub population_cap: u64,
    #[serde(default = "default_budget")]
    pub failure_budget: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub error_bars: ErrorBars,
    #[serde(default)]
    pub deriv_tag_convention: DerivTagConvention,
    /// Run even when the existence check does not certify the recipe.
    #[serde(default)]
    pub allow_inadmissible: bool,
}

impl RunSpec {
    pub fn mckean(x: f64, horizon: f64, boundary: BoundaryFunction, replicas: u64, master_seed: u64) -> Self {
        RunSpec {
            mode: Mode::McKean,
            recipe: None,
            beta: 0.0,
            rescaling: Rescaling::TypeI,
            x,
            horizon,
            boundary,
            invert_boundary: false,
            replicas,
            population_cap: DEFAULT_POPULATION_CAP,
            failure_budget: DEFAULT_FAILURE_BUDGET,
            master_seed,
            error_bars: ErrorBars::DeltaMethod,
            deriv_tag_convention: DerivTagConvention::Paired,
            allow_inadmissible: false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn superprocess(
        recipe: BranchingRecipe,
        beta: f64,
        rescaling: Rescaling,
        x: f64,
        horizon: f64,
        boundary: BoundaryFunction,
        replicas: u64,
        master_seed: u64,
    ) -> Self {
        RunSpec {
            mode: Mode::Super,
            recipe: Some(recipe),
            beta,
            rescaling,
            invert_boundary: true,
            ..Self::mckean(x, horizon, boundary, replicas, master_seed)
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidSpec(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !self.x.is_finite() {
            return bad("start position must be finite".into());
        }
        if self.replicas == 0 {
            return bad("at least one replica is required".into());
        }
        if self.population_cap == 0 {
            return bad("population cap must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.failure_budget) {
            return bad(format!("failure budget must lie in [0, 1), got {}", self.failure_budget));
        }
        self.boundary.validate()?;
        if self.mode == Mode::Super {
            if self.recipe.is_none() {
                return bad("super mode requires a recipe".into());
            }
            if !(self.beta > 0.0 && self.beta.is_finite()) {
                return bad(format!("super mode requires β > 0, got {}", self.beta));
            }
        }
        if let ErrorBars::Bootstrap { resamples } = self.error_bars {
            if resamples < 2 {
                return bad("bootstrap needs at least two resamples".into());
            }
        }
        Ok(())
    }
}
