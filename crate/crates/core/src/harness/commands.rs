use serde::{Deserialize, Serialize};

use super::config::{OracleConfig, ResolvedConfig, Tolerance, ToleranceScope};
use super::HarnessError;
use crate::engine::{estimate, extrapolate_beta, BetaPoint, EstimateReport, FitReport, Mode, CSV_HEADER};
use crate::functions::{invert_boundary, BoundaryFunction, DerivativeSource, Window};
use crate::jetcalc::{
    check_existence, compile_recipe, expand_elementary, psi_limit, BranchingRecipe, ElementaryBranching, JetPolynomial,
    Rescaling,
};
use crate::oracle::{heat_expectation, solve_homogeneous_ode, solve_semilinear, FieldSolution};

pub const ORACLE_CSV_HEADER: &str = "x,t,beta,u";
const COMPARE_CSV_HEADER: &str = "x,t,beta,u_hat,stderr_u,u_oracle,diff,z,bound,pass";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// What a subcommand prints and which files it would write.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<OutputFile>,
    pub assertion_failures: usize,
}

impl CommandOutput {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile { name: name.to_string(), contents });
    }
}

fn hash_line(hash: &str) -> String {
    format!("# config_sha256={hash}\n")
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn expand_cmd(branching: &str, rescaling: Rescaling, order: i32) -> Result<String, HarnessError> {
    let e: ElementaryBranching = branching.parse()?;
    let s = expand_elementary(e, rescaling, order)?;
    Ok(format!("{e} [{rescaling}]: {s}\n"))
}

/// Exact limiting nonlinearity; `order` defaults to `m + 2`.
pub fn psi_cmd(
    recipe: &BranchingRecipe,
    rescaling: Rescaling,
    order: Option<i32>,
) -> Result<JetPolynomial, HarnessError> {
    let order = order.unwrap_or(recipe.intensity_exponent() as i32 + 2);
    Ok(psi_limit(recipe, rescaling, order)?)
}

pub fn compile_cmd(
    target: &str,
    ansatz: &[ElementaryBranching],
    rescaling: Rescaling,
) -> Result<BranchingRecipe, HarnessError> {
    let poly: JetPolynomial = target.parse()?;
    Ok(compile_recipe(&poly, ansatz, rescaling)?)
}

pub fn exist_check(recipe: &BranchingRecipe, boundary: &BoundaryFunction, window: Option<Window>) -> String {
    json(&check_existence(recipe, boundary, window))
}

#[derive(Serialize)]
struct RunRecord<'a> {
    config_sha256: &'a str,
    config: &'a super::ExperimentConfig,
    estimates: &'a [EstimateReport],
}

fn estimate_all(cfg: &ResolvedConfig) -> Result<Vec<EstimateReport>, HarnessError> {
    cfg.points()
        .into_iter()
        .map(|(x, b)| estimate(&cfg.config.run_spec(x, b), cfg.workers).map_err(HarnessError::from))
        .collect()
}

pub fn estimates_csv(hash: &str, reports: &[EstimateReport]) -> String {
    let mut s = hash_line(hash);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// `run-mckean` / `run-super`: one estimate per `(x, β)`.
pub fn run(cfg: &ResolvedConfig, mode: Mode) -> Result<CommandOutput, HarnessError> {
    if cfg.config.mode != mode {
        return Err(HarnessError::Config(format!("config mode is `{}`, command expects `{mode}`", cfg.config.mode)));
    }
    let reports = estimate_all(cfg)?;
    let mut out = CommandOutput::default();
    let csv = estimates_csv(&cfg.hash, &reports);
    out.stdout = csv.clone();
    out.file("estimates.csv", csv);
    out.file("estimates.json", json(&RunRecord { config_sha256: &cfg.hash, config: &cfg.config, estimates: &reports }));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub x: f64,
    pub t: f64,
    /// `0` when the reference does not depend on β.
    pub beta: f64,
    pub u: f64,
}

fn rescale(r: Rescaling, beta: f64, v: f64) -> f64 {
    match r {
        Rescaling::TypeI => (1.0 - v) / beta,
        Rescaling::TypeII(_) => (1.0 / v - v) / (2.0 * beta),
    }
}

/// Reference values for every evaluation point, plus the full field for PDE oracles.
pub fn oracle_rows(cfg: &ResolvedConfig) -> Result<(Vec<OracleRow>, Option<FieldSolution>), HarnessError> {
    let c = &cfg.config;
    let Some(oc) = &c.oracle else {
        return Err(HarnessError::Config("config has no `oracle` block".into()));
    };
    match oc {
        OracleConfig::Pde { equation, points, period, dt } => {
            let grid = cfg.oracle_grid(*points, *period)?;
            let dt = dt.unwrap_or_else(|| grid.max_stable_dt());
            let field = solve_semilinear(&equation.resolve()?, &c.boundary, c.t, grid, dt)?;
            let rows = c.x.iter().map(|&x| OracleRow { x, t: c.t, beta: 0.0, u: field.interpolate(x) }).collect();
            Ok((rows, Some(field)))
        }
        OracleConfig::Ode { equation } => {
            let BoundaryFunction::Constant { c: u0 } = c.boundary else {
                return Err(HarnessError::Config("the ODE oracle needs constant boundary data".into()));
            };
            let u = solve_homogeneous_ode(&equation.resolve()?, u0, c.t)?;
            Ok((c.x.iter().map(|&x| OracleRow { x, t: c.t, beta: 0.0, u }).collect(), None))
        }
        OracleConfig::HeatQuadrature => {
            if c.mode != Mode::Super {
                return Err(HarnessError::Config("heat quadrature applies to super mode".into()));
            }
            let mut rows = Vec::new();
            for (x, b) in cfg.points() {
                let beta = b.expect("super mode has β");
                let window = Window::around(x, c.t);
                let v = if c.engine.invert_boundary {
                    let f = invert_boundary(&c.boundary, beta, c.rescaling, Some(window))?;
                    heat_expectation(|y| (-beta * f.value(y)).exp(), x, c.t)
                } else {
                    heat_expectation(|y| (-beta * c.boundary.value(y)).exp(), x, c.t)
                };
                rows.push(OracleRow { x, t: c.t, beta, u: rescale(c.rescaling, beta, v) });
            }
            Ok((rows, None))
        }
    }
}

fn oracle_csv(hash: &str, rows: &[OracleRow]) -> String {
    let mut s = hash_line(hash);
    s.push_str(ORACLE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.x, r.t, r.beta, r.u));
    }
    s
}

pub fn oracle(cfg: &ResolvedConfig) -> Result<CommandOutput, HarnessError> {
    let (rows, field) = oracle_rows(cfg)?;
    let mut out = CommandOutput::default();
    let csv = oracle_csv(&cfg.hash, &rows);
    out.stdout = csv.clone();
    out.file("oracle.csv", csv);
    if let Some(f) = field {
        let mut s = hash_line(&cfg.hash);
        s.push_str(&f.to_csv());
        out.file("oracle_field.csv", s);
    }
    #[derive(Serialize)]
    struct Record<'a> {
        config_sha256: &'a str,
        oracle: &'a Option<OracleConfig>,
        rows: &'a [OracleRow],
    }
    out.file("oracle.json", json(&Record { config_sha256: &cfg.hash, oracle: &cfg.config.oracle, rows: &rows }));
    Ok(out)
}

/// Splits the `# config_sha256=` line from the body of one of our CSV files.
fn split_hash(text: &str) -> Result<(String, &str), HarnessError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let hash = first
        .strip_prefix("# config_sha256=")
        .ok_or_else(|| HarnessError::Config("CSV lacks a `# config_sha256=` header line".into()))?;
    Ok((hash.trim().to_string(), rest))
}

#[derive(Deserialize)]
struct McRow {
    x: f64,
    t: f64,
    beta: f64,
    u_hat: f64,
    stderr_u: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(body: &str) -> Result<Vec<T>, HarnessError> {
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| HarnessError::Config(format!("malformed CSV: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub x: f64,
    pub t: f64,
    pub beta: f64,
    pub u_hat: f64,
    pub stderr_u: f64,
    pub u_oracle: f64,
    pub diff: f64,
    pub z: f64,
    pub bound: f64,
    pub pass: bool,
}

fn judge(x: f64, t: f64, beta: f64, u_hat: f64, stderr_u: f64, u_oracle: f64, tol: &Tolerance) -> CompareRow {
    let diff = u_hat - u_oracle;
    let z = if stderr_u > 0.0 {
        diff.abs() / stderr_u
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let bound = tol.bound(stderr_u, u_oracle);
    CompareRow { x, t, beta, u_hat, stderr_u, u_oracle, diff, z, bound, pass: diff.abs() <= bound }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Joins estimate rows with oracle rows on `(x, t)` and β (oracle β = 0
/// matches every β).
pub fn compare_csv(mc: &str, oracle: &str, tol: &Tolerance) -> Result<(String, Vec<CompareRow>), HarnessError> {
    let (h1, mc_body) = split_hash(mc)?;
    let (h2, or_body) = split_hash(oracle)?;
    if h1 != h2 {
        return Err(HarnessError::Config(format!("config hash mismatch: estimates {h1}, oracle {h2}")));
    }
    let mc_rows: Vec<McRow> = read_rows(mc_body)?;
    let or_rows: Vec<OracleRow> = read_rows(or_body)?;
    let mut rows = Vec::new();
    for m in &mc_rows {
        let hit = or_rows
            .iter()
            .find(|o| same(o.x, m.x) && same(o.t, m.t) && (o.beta == 0.0 || same(o.beta, m.beta)))
            .ok_or_else(|| HarnessError::Config(format!("no oracle row for x={}, t={}, β={}", m.x, m.t, m.beta)))?;
        rows.push(judge(m.x, m.t, m.beta, m.u_hat, m.stderr_u, hit.u, tol));
    }
    Ok((h1, rows))
}

pub fn compare(mc: &str, oracle: &str, tol: &Tolerance) -> Result<CommandOutput, HarnessError> {
    let (hash, rows) = compare_csv(mc, oracle, tol)?;
    let mut csv = hash_line(&hash);
    csv.push_str(COMPARE_CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.x, r.t, r.beta, r.u_hat, r.stderr_u, r.u_oracle, r.diff, r.z, r.bound, r.pass
        ));
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    let mut out = CommandOutput { stdout: csv.clone(), assertion_failures: failures, ..Default::default() };
    out.stdout.push_str(&format!("{} of {} rows within tolerance\n", rows.len() - failures, rows.len()));
    out.file("compare.csv", csv);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub t: f64,
    pub fit: FitReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolated: Option<CompareRow>,
    pub per_beta: Vec<CompareRow>,
    pub pass: Option<bool>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config_sha256: &'a str,
    config: &'a super::ExperimentConfig,
    tolerance: &'a Tolerance,
    rows: &'a [SweepRow],
    pass: Option<bool>,
}

/// β ladder at every `x`, extrapolation to β = 0 and comparison with the oracle.
pub fn sweep(cfg: &ResolvedConfig) -> Result<CommandOutput, HarnessError> {
    let c = &cfg.config;
    if c.mode != Mode::Super {
        return Err(HarnessError::Config("sweep runs super mode configurations".into()));
    }
    if c.betas.len() < 2 {
        return Err(HarnessError::Config(format!("sweep needs at least two β values, got {}", c.betas.len())));
    }
    let reports = estimate_all(cfg)?;
    let oracle = match &c.oracle {
        Some(_) => Some(oracle_rows(cfg)?.0),
        None => None,
    };
    let lookup = |x: f64, beta: f64| -> Option<f64> {
        oracle
            .as_ref()
            .and_then(|rows| rows.iter().find(|o| same(o.x, x) && (o.beta == 0.0 || same(o.beta, beta))).map(|o| o.u))
    };
    let tol = c.tolerance;
    let mut rows = Vec::new();
    for &x in &c.x {
        let here: Vec<&EstimateReport> = reports.iter().filter(|r| r.x == x).collect();
        let points: Vec<BetaPoint> =
            here.iter().map(|r| BetaPoint { beta: r.beta, u_hat: r.u_hat, stderr_u: r.stderr_u }).collect();
        let fit = extrapolate_beta(&points)?;
        let per_beta: Vec<CompareRow> = here
            .iter()
            .filter_map(|r| lookup(x, r.beta).map(|u| judge(x, c.t, r.beta, r.u_hat, r.stderr_u, u, &tol)))
            .collect();
        // The β-independent reference is the β → 0 target.
        let extrapolated = lookup(x, 0.0).map(|u| judge(x, c.t, 0.0, fit.u0, fit.stderr_u0, u, &tol));
        let checks: Vec<bool> = match tol.scope {
            ToleranceScope::Extrapolated => extrapolated.iter().map(|r| r.pass).collect(),
            ToleranceScope::PerBeta => per_beta.iter().map(|r| r.pass).collect(),
            ToleranceScope::Both => extrapolated.iter().chain(&per_beta).map(|r| r.pass).collect(),
        };
        let pass = (!checks.is_empty()).then(|| checks.iter().all(|&p| p));
        rows.push(SweepRow { x, t: c.t, fit, extrapolated, per_beta, pass });
    }
    let failures = rows.iter().filter(|r| r.pass == Some(false)).count();
    let overall = rows.iter().try_fold(true, |acc, r| r.pass.map(|p| acc && p));
    let mut out = CommandOutput { assertion_failures: failures, ..Default::default() };
    out.file("sweep.csv", estimates_csv(&cfg.hash, &reports));
    out.file(
        "sweep_summary.json",
        json(&SweepSummary { config_sha256: &cfg.hash, config: c, tolerance: &tol, rows: &rows, pass: overall }),
    );
    let mut s = String::from("x,u0,stderr_u0,oracle,diff,bound,pass\n");
    for r in &rows {
        match &r.extrapolated {
            Some(e) => s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.x, r.fit.u0, r.fit.stderr_u0, e.u_oracle, e.diff, e.bound, e.pass
            )),
            None => s.push_str(&format!("{:.16e},{:.16e},{:.16e},,,,\n", r.x, r.fit.u0, r.fit.stderr_u0)),
        }
    }
    out.stdout = s;
    Ok(out)
}
