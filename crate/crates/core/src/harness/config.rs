use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::engine::{DerivTagConvention, ErrorBars, Mode, RunSpec, DEFAULT_FAILURE_BUDGET, DEFAULT_POPULATION_CAP};
use crate::functions::BoundaryFunction;
use crate::jetcalc::{compile_recipe, BranchingRecipe, ElementaryBranching, JetPolynomial, Rescaling};
use crate::oracle::{Grid1D, SemilinearSpec};

fn default_rescaling() -> Rescaling {
    Rescaling::TypeI
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

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineOptions {
    #[serde(default = "default_cap")]
    pub population_cap: u64,
    #[serde(default = "default_budget")]
    pub failure_budget: f64,
    #[serde(default)]
    pub error_bars: ErrorBars,
    #[serde(default)]
    pub deriv_tag_convention: DerivTagConvention,
    #[serde(default)]
    pub allow_inadmissible: bool,
    #[serde(default = "default_true")]
    pub invert_boundary: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            population_cap: DEFAULT_POPULATION_CAP,
            failure_budget: DEFAULT_FAILURE_BUDGET,
            error_bars: ErrorBars::default(),
            deriv_tag_convention: DerivTagConvention::default(),
            allow_inadmissible: false,
            invert_boundary: true,
        }
    }
}

/// A preset name (`heat`, `kpp`, `prop2`, `prop3`) or explicit terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EquationSpec {
    Preset(String),
    Terms(SemilinearSpec),
}

impl EquationSpec {
    pub fn resolve(&self) -> Result<SemilinearSpec, HarnessError> {
        match self {
            EquationSpec::Preset(name) => SemilinearSpec::preset(name)
                .ok_or_else(|| HarnessError::Config(format!("unknown equation preset `{name}`"))),
            EquationSpec::Terms(s) => Ok(s.clone()),
        }
    }
}

fn default_points() -> usize {
    512
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    /// Method of lines on a periodic grid with the boundary datum as initial data.
    Pde {
        equation: EquationSpec,
        #[serde(default = "default_points")]
        points: usize,
        /// Defaults to `4π/ω` for cosine data.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        /// Defaults to the stability limit `0.4·h²`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
    /// Spatially constant data only.
    Ode { equation: EquationSpec },
    /// Pure diffusion: `E e^{−βf(x+W_t)}` by Gauss–Hermite quadrature,
    /// rescaled like the Monte Carlo estimate.
    HeatQuadrature,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn default_z() -> f64 {
    3.0
}

/// Which sweep rows count toward pass/fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceScope {
    /// Only the β → 0 extrapolation.
    #[default]
    Extrapolated,
    /// Every individual β.
    PerBeta,
    Both,
}

/// Pass when `|estimate − reference| ≤ z·stderr + abs + rel·|reference|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default)]
    pub abs: f64,
    #[serde(default)]
    pub rel: f64,
    #[serde(default)]
    pub scope: ToleranceScope,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { z: 3.0, abs: 0.0, rel: 0.0, scope: ToleranceScope::default() }
    }
}

impl Tolerance {
    pub fn bound(&self, stderr: f64, reference: f64) -> f64 {
        self.z * stderr + self.abs + self.rel * reference.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<BranchingRecipe>,
    /// Target nonlinearity `ψ`, compiled against `ansatz` when no recipe is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<Vec<String>>,
    #[serde(default = "default_rescaling")]
    pub rescaling: Rescaling,
    pub boundary: BoundaryFunction,
    pub x: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub betas: Vec<f64>,
    pub replicas: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerance: Tolerance,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A validated configuration with the recipe compiled, plus its hash.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub hash: String,
}

pub fn parse_ansatz(items: &[String]) -> Result<Vec<ElementaryBranching>, HarnessError> {
    items
        .iter()
        .map(|s| s.trim().parse::<ElementaryBranching>().map_err(|e| HarnessError::Config(e.to_string())))
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))
    }

    /// Applies overrides, compiles a target into a recipe, validates, and
    /// hashes the result. The hash ignores worker count and output location,
    /// which do not affect results.
    pub fn resolve(
        mut self,
        overrides: &Overrides,
        env_workers: Option<usize>,
    ) -> Result<ResolvedConfig, HarnessError> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        let workers = overrides.workers.or(self.workers).or(env_workers).unwrap_or(0);
        let out = overrides.out.clone().or_else(|| self.output.dir.clone());
        if self.mode == Mode::Super && self.recipe.is_none() {
            let (Some(target), Some(ansatz)) = (&self.target, &self.ansatz) else {
                return Err(HarnessError::Config("super mode needs `recipe` or both `target` and `ansatz`".into()));
            };
            let poly: JetPolynomial =
                target.parse().map_err(|e: crate::jetcalc::JetError| HarnessError::Config(e.to_string()))?;
            self.recipe = Some(compile_recipe(&poly, &parse_ansatz(ansatz)?, self.rescaling)?);
        }
        if self.x.is_empty() {
            return Err(HarnessError::Config("`x` must list at least one evaluation point".into()));
        }
        if self.mode == Mode::Super && self.betas.is_empty() {
            return Err(HarnessError::Config("super mode needs a nonempty `betas` list".into()));
        }
        if self.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(HarnessError::Config("every β must be positive".into()));
        }
        let tol = self.tolerance;
        if !(tol.z >= 0.0 && tol.abs >= 0.0 && tol.rel >= 0.0) {
            return Err(HarnessError::Config("tolerances must be nonnegative".into()));
        }
        for spec in self.run_specs_unchecked() {
            spec.validate()?;
        }
        let mut canonical = self.clone();
        canonical.workers = None;
        canonical.output = OutputConfig::default();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        let hash = hex::encode(Sha256::digest(&json));
        Ok(ResolvedConfig { config: canonical, workers, out, hash })
    }

    fn run_specs_unchecked(&self) -> Vec<RunSpec> {
        let betas: Vec<Option<f64>> =
            if self.mode == Mode::McKean { vec![None] } else { self.betas.iter().copied().map(Some).collect() };
        let mut specs = Vec::new();
        for &x in &self.x {
            for &b in &betas {
                specs.push(self.run_spec(x, b));
            }
        }
        specs
    }

    pub fn run_spec(&self, x: f64, beta: Option<f64>) -> RunSpec {
        RunSpec {
            mode: self.mode,
            recipe: if self.mode == Mode::Super { self.recipe.clone() } else { None },
            beta: beta.unwrap_or(0.0),
            rescaling: self.rescaling,
            x,
            horizon: self.t,
            boundary: self.boundary.clone(),
            invert_boundary: self.engine.invert_boundary && self.mode == Mode::Super,
            replicas: self.replicas,
            population_cap: self.engine.population_cap,
            failure_budget: self.engine.failure_budget,
            master_seed: self.seed,
            error_bars: self.engine.error_bars,
            deriv_tag_convention: self.engine.deriv_tag_convention,
            allow_inadmissible: self.engine.allow_inadmissible,
        }
    }
}

impl ResolvedConfig {
    /// `(x, β)` pairs in output order; β is `None` in McKean mode.
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        let c = &self.config;
        let betas: Vec<Option<f64>> =
            if c.mode == Mode::McKean { vec![None] } else { c.betas.iter().copied().map(Some).collect() };
        c.x.iter().flat_map(|&x| betas.iter().map(move |&b| (x, b))).collect()
    }

    pub fn oracle_grid(&self, points: usize, period: Option<f64>) -> Result<Grid1D, HarnessError> {
        let period = match (period, &self.config.boundary) {
            (Some(p), _) => p,
            (None, BoundaryFunction::Cosine { omega, .. }) if *omega != 0.0 => 4.0 * std::f64::consts::PI / omega.abs(),
            _ => return Err(HarnessError::Config("oracle.period is required for non-cosine data".into())),
        };
        Ok(Grid1D::new(period, points)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "mode": "mckean",
        "boundary": {"family": "constant", "c": 0.5},
        "x": [0.0],
        "t": 1.0,
        "replicas": 100
    }"#;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"t\"", "\"horizon\": 1.0, \"t\"");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(HarnessError::Config(_))));
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let a = c.clone().resolve(&Overrides::default(), None).unwrap();
        let b = c
            .clone()
            .resolve(&Overrides { workers: Some(4), out: Some("elsewhere".into()), ..Default::default() }, None)
            .unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(b.workers, 4);
        let s = c.resolve(&Overrides { seed: Some(9), ..Default::default() }, None).unwrap();
        assert_ne!(a.hash, s.hash);
    }

    #[test]
    fn worker_precedence() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.clone().resolve(&Overrides::default(), Some(3)).unwrap().workers, 3);
        c.workers = Some(2);
        assert_eq!(c.clone().resolve(&Overrides::default(), Some(3)).unwrap().workers, 2);
        let o = Overrides { workers: Some(5), ..Default::default() };
        assert_eq!(c.resolve(&o, Some(3)).unwrap().workers, 5);
    }

    #[test]
    fn target_is_compiled() {
        let text = r#"{
            "mode": "super",
            "target": "-u^3",
            "ansatz": ["power2", "reciprocal"],
            "rescaling": "type2-paper",
            "boundary": {"family": "constant", "c": 0.2},
            "x": [0.0], "t": 0.25, "betas": [0.4, 0.2], "replicas": 10
        }"#;
        let r = ExperimentConfig::from_json(text).unwrap().resolve(&Overrides::default(), None).unwrap();
        let recipe = r.config.recipe.unwrap();
        assert_eq!(recipe.intensity_exponent(), 2);
        assert_eq!(recipe.to_string(), "{power2: 1/10, reciprocal: 9/10}, k = (5/2)·β^-2");
    }

    #[test]
    fn empty_beta_list_is_a_config_error() {
        let text = MINIMAL.replace("\"mckean\"", "\"super\"").replace("\"replicas\"", "\"recipe\": {\"entries\": [{\"branching\": {\"kind\": \"power\", \"m\": 1}, \"probability\": \"1\"}], \"intensity_coeff\": \"1\", \"intensity_exponent\": 1}, \"replicas\"");
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert!(matches!(c.resolve(&Overrides::default(), None), Err(HarnessError::Config(_))));
    }
}
