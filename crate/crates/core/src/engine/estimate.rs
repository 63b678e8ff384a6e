use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replica::{exit_functional_mckean, exit_functional_super, replica_stream, run_with, Mechanism};
use super::spec::{ErrorBars, Mode, RunSpec};
use super::stats::{merge_accumulators, EstimatorAccumulator};
use super::EngineError;
use crate::functions::{invert_boundary, DerivativeSource, Window};
use crate::jetcalc::{check_existence, Admissibility, Rescaling};

/// Replicas per reduction chunk. Chunks are accumulated sequentially and
/// merged in index order, so the result does not depend on scheduling.
const CHUNK: usize = 4096;

pub const CSV_HEADER: &str = "x,t,mode,beta,N,v_hat,u_hat,stderr_u,mean_pop,max_deriv_order,seed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mean_population: f64,
    pub extinction_fraction: f64,
    pub max_deriv_order: u32,
    pub mean_events: f64,
    pub failed_replicas: u64,
    /// Existence-check status for super runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<Admissibility>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mode: Mode,
    pub x: f64,
    pub t: f64,
    pub beta: f64,
    pub v_hat: f64,
    pub stderr_v: f64,
    pub u_hat: f64,
    pub stderr_u: f64,
    /// Bootstrap percentile interval for `u`, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_u: Option<(f64, f64)>,
    #[serde(rename = "N")]
    pub n: u64,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

impl EstimateReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            self.x,
            self.t,
            self.mode,
            self.beta,
            self.n,
            self.v_hat,
            self.u_hat,
            self.stderr_u,
            self.diagnostics.mean_population,
            self.diagnostics.max_deriv_order,
            self.seed
        )
    }
}

struct Sample {
    value: f64,
    population: usize,
    events: u64,
    max_deriv: u32,
}

fn rescale(spec: &RunSpec, v: f64) -> Result<f64, EngineError> {
    match (spec.mode, spec.rescaling) {
        (Mode::McKean, _) => Ok(v),
        (Mode::Super, Rescaling::TypeI) => Ok((1.0 - v) / spec.beta),
        (Mode::Super, Rescaling::TypeII(_)) => {
            if v <= 0.0 {
                Err(EngineError::DegenerateEstimate { v_hat: v })
            } else {
                Ok((1.0 / v - v) / (2.0 * spec.beta))
            }
        }
    }
}

fn rescale_stderr(spec: &RunSpec, v: f64, se: f64) -> f64 {
    match (spec.mode, spec.rescaling) {
        (Mode::McKean, _) => se,
        (Mode::Super, Rescaling::TypeI) => se / spec.beta,
        (Mode::Super, Rescaling::TypeII(_)) => (v.powi(-2) + 1.0) / (2.0 * spec.beta) * se,
    }
}

/// Monte Carlo estimate of `v = E[functional]` and the rescaled solution `u`
/// at `(spec.x, spec.horizon)`. `workers = 0` uses every available core;
/// the output is identical for every worker count.
pub fn estimate(spec: &RunSpec, workers: usize) -> Result<EstimateReport, EngineError> {
    spec.validate()?;
    let window = Window::around(spec.x, spec.horizon);
    let mut admissibility = None;
    let source: Box<dyn DerivativeSource> = match spec.mode {
        Mode::McKean => Box::new(spec.boundary.clone()),
        Mode::Super => {
            let recipe = spec.recipe.as_ref().expect("validated");
            let report = check_existence(recipe, &spec.boundary, Some(window));
            if report.status != Admissibility::Admissible && !spec.allow_inadmissible {
                return Err(EngineError::NotAdmissible { status: report.status, reason: report.reason });
            }
            admissibility = Some(report.status);
            if spec.invert_boundary {
                Box::new(invert_boundary(&spec.boundary, spec.beta, spec.rescaling, Some(window))?)
            } else {
                Box::new(spec.boundary.clone())
            }
        }
    };
    let mech = Mechanism::from_spec(spec);
    let simulate = |i: u64| -> Option<Sample> {
        let mut rng = replica_stream(spec.master_seed, i);
        let o = run_with(&mech, spec, &mut rng).ok()?;
        let value = match spec.mode {
            Mode::McKean => exit_functional_mckean(&o, source.as_ref()),
            Mode::Super => (-exit_functional_super(&o, source.as_ref(), spec.beta)).exp(),
        };
        Some(Sample { value, population: o.exits.len(), events: o.event_count, max_deriv: o.max_deriv_order })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EngineError::InvalidSpec(format!("cannot start worker pool: {e}")))?;
    let samples: Vec<Option<Sample>> = pool.install(|| (0..spec.replicas).into_par_iter().map(simulate).collect());

    let failed = samples.iter().filter(|s| s.is_none()).count() as u64;
    if failed as f64 > spec.failure_budget * spec.replicas as f64 {
        return Err(EngineError::PopulationCapExceeded { cap: spec.population_cap, failed, replicas: spec.replicas });
    }

    let mut acc = EstimatorAccumulator::new();
    let (mut pop, mut events, mut extinct, mut max_deriv) = (0.0, 0.0, 0u64, 0u32);
    let mut values = Vec::with_capacity(samples.len());
    for (k, chunk) in samples.chunks(CHUNK).enumerate() {
        let mut part = EstimatorAccumulator::new();
        for (j, s) in chunk.iter().enumerate() {
            if let Some(s) = s {
                part.push((k * CHUNK + j) as u64, s.value);
                pop += s.population as f64;
                events += s.events as f64;
                extinct += (s.population == 0) as u64;
                max_deriv = max_deriv.max(s.max_deriv);
                values.push(s.value);
            }
        }
        acc = merge_accumulators(&acc, &part);
    }
    let n = acc.count();
    if n == 0 {
        return Err(EngineError::PopulationCapExceeded { cap: spec.population_cap, failed, replicas: spec.replicas });
    }
    let v_hat = acc.mean();
    let stderr_v = acc.stderr();
    let u_hat = rescale(spec, v_hat)?;
    let (stderr_u, ci_u) = match spec.error_bars {
        ErrorBars::DeltaMethod => (rescale_stderr(spec, v_hat, stderr_v), None),
        ErrorBars::Bootstrap { resamples } => bootstrap(spec, &values, resamples)?,
    };
    let nf = n as f64;
    Ok(EstimateReport {
        mode: spec.mode,
        x: spec.x,
        t: spec.horizon,
        beta: if spec.mode == Mode::Super { spec.beta } else { 0.0 },
        v_hat,
        stderr_v,
        u_hat,
        stderr_u,
        ci_u,
        n,
        seed: spec.master_seed,
        diagnostics: Diagnostics {
            mean_population: pop / nf,
            extinction_fraction: extinct as f64 / nf,
            max_deriv_order: max_deriv,
            mean_events: events / nf,
            failed_replicas: failed,
            admissibility,
        },
    })
}

/// Percentile bootstrap of `u`; the resampling stream is reserved index
/// `u64::MAX` of the master seed.
fn bootstrap(spec: &RunSpec, values: &[f64], resamples: usize) -> Result<(f64, Option<(f64, f64)>), EngineError> {
    let mut rng = replica_stream(spec.master_seed, u64::MAX);
    let n = values.len();
    let mut us = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.random_range(0..n)];
        }
        us.push(rescale(spec, sum / n as f64)?);
    }
    let mean = us.iter().sum::<f64>() / resamples as f64;
    let sd = (us.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt();
    us.sort_by(f64::total_cmp);
    let at = |q: f64| us[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok((sd, Some((at(0.025), at(0.975)))))
}
