//! Deterministic reference solutions for `∂ₜu = ½∂ₓ²u + N(u, ∂ₓu)`.

mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{BoundaryFunction, DerivativeSource};

pub use quadrature::{gauss_hermite, heat_expectation, GAUSS_HERMITE_NODES};

pub const BLOW_UP_THRESHOLD: f64 = 1e6;
/// Explicit stability bound `dt ≤ 0.4·h²` for diffusion coefficient ½.
pub const STABILITY_FACTOR: f64 = 0.4;
pub const ODE_RTOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("solution exceeded {BLOW_UP_THRESHOLD:e} at t = {t}")]
    BlowUpDetected { t: f64 },
    #[error("dt = {dt} exceeds the explicit bound {bound} = 0.4·h²")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("grids or checkpoints differ: {0}")]
    GridMismatch(String),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
}

/// Periodic uniform grid `xᵢ = i·L/M`, `i = 0..M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    period: f64,
    points: usize,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 16;

    pub fn new(period: f64, points: usize) -> Result<Self, OracleError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(OracleError::InvalidInput(format!("period must be positive, got {period}")));
        }
        if points < Self::MIN_POINTS {
            return Err(OracleError::InvalidInput(format!("need at least {} points, got {points}", Self::MIN_POINTS)));
        }
        Ok(Grid1D { period, points })
    }

    /// Period `4π/ω`, two wavelengths of a cosine with frequency `ω`.
    pub fn for_frequency(omega: f64, points: usize) -> Result<Self, OracleError> {
        Self::new(4.0 * std::f64::consts::PI / omega.abs(), points)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn max_stable_dt(&self) -> f64 {
        STABILITY_FACTOR * self.spacing().powi(2)
    }
}

/// `coef·u^pow_u·(∂ₓu)^pow_ux`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearTerm {
    pub coef: f64,
    pub pow_u: u32,
    pub pow_ux: u32,
}

/// Diffusion `½∂ₓ²` plus a polynomial nonlinearity in `u` and `∂ₓu`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemilinearSpec {
    pub terms: Vec<NonlinearTerm>,
}

impl SemilinearSpec {
    pub fn new(terms: Vec<NonlinearTerm>) -> Self {
        SemilinearSpec { terms }
    }

    pub fn heat() -> Self {
        Self::default()
    }

    /// `v² − v`
    pub fn kpp() -> Self {
        Self::new(vec![term(1.0, 2, 0), term(-1.0, 1, 0)])
    }

    /// `−2u² − ½(∂ₓu)²`
    pub fn prop2() -> Self {
        Self::new(vec![term(-2.0, 2, 0), term(-0.5, 0, 2)])
    }

    /// `+u³`
    pub fn prop3() -> Self {
        Self::new(vec![term(1.0, 3, 0)])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "heat" => Some(Self::heat()),
            "kpp" => Some(Self::kpp()),
            "prop2" => Some(Self::prop2()),
            "prop3" => Some(Self::prop3()),
            _ => None,
        }
    }

    pub fn nonlinearity(&self, u: f64, ux: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * u.powi(t.pow_u as i32) * ux.powi(t.pow_ux as i32)).sum()
    }

    /// Nonlinearity for spatially constant data (`∂ₓu = 0`).
    fn homogeneous(&self, u: f64) -> f64 {
        self.terms.iter().filter(|t| t.pow_ux == 0).map(|t| t.coef * u.powi(t.pow_u as i32)).sum()
    }
}

fn term(coef: f64, pow_u: u32, pow_ux: u32) -> NonlinearTerm {
    NonlinearTerm { coef, pow_u, pow_ux }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSolution {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl FieldSolution {
    pub fn at(&self, checkpoint: usize) -> &[f64] {
        &self.values[checkpoint]
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("at least one checkpoint")
    }

    /// Linear interpolation of the last checkpoint at an arbitrary `x`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.grid.spacing();
        let m = self.grid.points();
        let s = x.rem_euclid(self.grid.period()) / h;
        let i = (s.floor() as usize).min(m - 1);
        let w = s - i as f64;
        let u = self.last();
        (1.0 - w) * u[i] + w * u[(i + 1) % m]
    }

    /// Rows `t,x,u` for every checkpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,u\n");
        for (t, row) in self.times.iter().zip(&self.values) {
            for (i, u) in row.iter().enumerate() {
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, self.grid.x(i), u));
            }
        }
        out
    }
}

fn rhs(spec: &SemilinearSpec, grid: &Grid1D, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    let h = grid.spacing();
    let (ih2, i2h) = (0.5 / (h * h), 0.5 / h);
    for i in 0..m {
        let (l, r) = (u[(i + m - 1) % m], u[(i + 1) % m]);
        out[i] = ih2 * (l - 2.0 * u[i] + r) + spec.nonlinearity(u[i], i2h * (r - l));
    }
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(m: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; m]), tmp: vec![0.0; m] }
    }

    fn step(&mut self, spec: &SemilinearSpec, grid: &Grid1D, u: &mut [f64], dt: f64) {
        let Rk4 { k, tmp } = self;
        rhs(spec, grid, u, &mut k[0]);
        for (s, c) in [0.5, 0.5, 1.0].into_iter().enumerate() {
            for i in 0..u.len() {
                tmp[i] = u[i] + c * dt * k[s][i];
            }
            rhs(spec, grid, tmp, &mut k[s + 1]);
        }
        for i in 0..u.len() {
            u[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
}

/// Method of lines with classical RK4 in time, returning the field at `T`.
pub fn solve_semilinear(
    spec: &SemilinearSpec,
    u0: &BoundaryFunction,
    t_end: f64,
    grid: Grid1D,
    dt: f64,
) -> Result<FieldSolution, OracleError> {
    solve_semilinear_at(spec, u0, &[t_end], grid, dt)
}

/// Like [`solve_semilinear`] with several checkpoints; steps are shortened
/// so that every checkpoint is hit exactly.
pub fn solve_semilinear_at(
    spec: &SemilinearSpec,
    u0: &BoundaryFunction,
    checkpoints: &[f64],
    grid: Grid1D,
    dt: f64,
) -> Result<FieldSolution, OracleError> {
    let bound = grid.max_stable_dt();
    if !(dt > 0.0) || dt > bound {
        return Err(OracleError::StabilityViolation { dt, bound });
    }
    if checkpoints.is_empty() || checkpoints.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(OracleError::InvalidInput("checkpoints must be finite and nonnegative".into()));
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(OracleError::InvalidInput("checkpoints must be nondecreasing".into()));
    }
    u0.validate().map_err(|e| OracleError::InvalidInput(e.to_string()))?;
    let mut u: Vec<f64> = grid.nodes().iter().map(|&x| u0.value(x)).collect();
    let mut rk = Rk4::new(u.len());
    let mut t = 0.0;
    let mut values = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        let span = target - t;
        let steps = (span / dt).ceil().max(0.0) as usize;
        for s in 0..steps {
            let h = span / steps as f64;
            rk.step(spec, &grid, &mut u, h);
            let now = t + h * (s + 1) as f64;
            if u.iter().any(|v| !(v.abs() <= BLOW_UP_THRESHOLD)) {
                return Err(OracleError::BlowUpDetected { t: now });
            }
        }
        t = target;
        values.push(u.clone());
    }
    Ok(FieldSolution { grid, times: checkpoints.to_vec(), values })
}

/// Spatially constant solution `u' = N(u, 0)` by adaptive Dormand–Prince 5(4).
pub fn solve_homogeneous_ode(spec: &SemilinearSpec, u0: f64, t_end: f64) -> Result<f64, OracleError> {
    if !(t_end >= 0.0 && t_end.is_finite() && u0.is_finite()) {
        return Err(OracleError::InvalidInput("u0 and T must be finite, T ≥ 0".into()));
    }
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] =
        [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
    let f = |u: f64| spec.homogeneous(u);
    let (mut t, mut u) = (0.0, u0);
    let mut h = (t_end * 1e-3).max(1e-12);
    let rtol = ODE_RTOL * 1e-2;
    let atol = 1e-16;
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [0.0; 7];
        k[0] = f(u);
        for s in 1..7 {
            let du: f64 = (0..s).map(|j| A[s - 1][j] * k[j]).sum();
            k[s] = f(u + h * du);
        }
        let next = u + h * (0..6).map(|j| A[5][j] * k[j]).sum::<f64>();
        let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = atol + rtol * u.abs().max(next.abs());
        let ratio = if next.is_finite() { err.abs() / scale } else { f64::INFINITY };
        if ratio <= 1.0 {
            t += h;
            u = next;
            if u.abs() > BLOW_UP_THRESHOLD {
                return Err(OracleError::BlowUpDetected { t });
            }
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-15 * t.max(1.0) {
            return Err(OracleError::BlowUpDetected { t });
        }
    }
    Ok(u)
}

/// Discrete `(L∞, L²)` norms of `a − b`; `L²` is the root mean square per
/// checkpoint, and both are maximized over checkpoints.
pub fn error_norms(a: &FieldSolution, b: &FieldSolution) -> Result<(f64, f64), OracleError> {
    if a.grid != b.grid {
        return Err(OracleError::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    if a.times != b.times {
        return Err(OracleError::GridMismatch(format!("checkpoints {:?} vs {:?}", a.times, b.times)));
    }
    let (mut linf, mut l2) = (0.0f64, 0.0f64);
    for (x, y) in a.values.iter().zip(&b.values) {
        let mut sq = 0.0;
        for (p, q) in x.iter().zip(y) {
            let d = (p - q).abs();
            linf = linf.max(d);
            sq += d * d;
        }
        l2 = l2.max((sq / x.len() as f64).sqrt());
    }
    Ok((linf, l2))
}

/// Exact heat-flow solution `e^{−ω²T/2}·cos(ωx)` sampled like `solve_semilinear`.
pub fn heat_cosine_exact(omega: f64, t_end: f64, grid: Grid1D) -> FieldSolution {
    let decay = (-0.5 * omega * omega * t_end).exp();
    let row = grid.nodes().iter().map(|x| decay * (omega * x).cos()).collect();
    FieldSolution { grid, times: vec![t_end], values: vec![row] }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub points: usize,
    pub dt: f64,
    pub linf: f64,
    pub l2: f64,
    /// `L∞` error of the previous (coarser) grid divided by this one.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub omega: f64,
    pub t: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Heat equation with `cos(ωx)` data on successively refined grids.
pub fn heat_convergence(omega: f64, t_end: f64, points: &[usize]) -> Result<ConvergenceReport, OracleError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &m in points {
        let grid = Grid1D::for_frequency(omega, m)?;
        let dt = grid.max_stable_dt();
        let num = solve_semilinear(&SemilinearSpec::heat(), &BoundaryFunction::cosine(1.0, omega), t_end, grid, dt)?;
        let (linf, l2) = error_norms(&num, &heat_cosine_exact(omega, t_end, grid))?;
        let ratio = rows.last().map(|r| r.linf / linf);
        rows.push(ConvergenceRow { points: m, dt, linf, l2, ratio });
    }
    Ok(ConvergenceReport { omega, t: t_end, rows })
}

/// `(1 − E e^{−βf(x+W_t)})/β` for the pure-diffusion superprocess, by
/// Gauss–Hermite quadrature.
pub fn identity_recipe_oracle(f: &dyn DerivativeSource, beta: f64, x: f64, t: f64) -> f64 {
    (1.0 - heat_expectation(|y| (-beta * f.value(y)).exp(), x, t)) / beta
}
