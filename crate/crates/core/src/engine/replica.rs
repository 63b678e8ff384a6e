use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spec::{DerivTagConvention, Mode, RunSpec};
use super::EngineError;
use crate::functions::DerivativeSource;
use crate::jetcalc::{rational_to_f64, ElementaryBranching, Sign};

/// Term `σ·δ⁽ⁿ⁾` carried by a particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParticleTag {
    pub sign: i8,
    pub deriv_order: u32,
}

impl ParticleTag {
    pub const ROOT: ParticleTag = ParticleTag { sign: 1, deriv_order: 0 };

    fn flipped(self) -> Self {
        ParticleTag { sign: -self.sign, ..self }
    }

    fn differentiated(self, flip: bool) -> Self {
        ParticleTag { sign: if flip { -self.sign } else { self.sign }, deriv_order: self.deriv_order + 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: f64,
    pub tag: ParticleTag,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub exits: Vec<Particle>,
    pub event_count: u64,
    pub max_deriv_order: u32,
}

/// Random stream of replica `index`: a pure function of `(master_seed, index)`.
pub fn replica_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Branching table in floating point, with cumulative probabilities.
pub(crate) struct Mechanism {
    rate: f64,
    cumulative: Vec<f64>,
    branchings: Vec<ElementaryBranching>,
    convention: DerivTagConvention,
}

impl Mechanism {
    pub(crate) fn from_spec(spec: &RunSpec) -> Self {
        match (spec.mode, &spec.recipe) {
            (Mode::Super, Some(r)) => {
                let mut acc = 0.0;
                let mut cumulative = Vec::new();
                let mut branchings = Vec::new();
                for e in r.entries() {
                    acc += rational_to_f64(&e.probability);
                    cumulative.push(acc);
                    branchings.push(e.branching);
                }
                if let Some(last) = cumulative.last_mut() {
                    *last = f64::INFINITY;
                }
                Mechanism {
                    rate: r.intensity(spec.beta),
                    cumulative,
                    branchings,
                    convention: spec.deriv_tag_convention,
                }
            }
            _ => Mechanism {
                rate: 1.0,
                cumulative: vec![f64::INFINITY],
                branchings: vec![ElementaryBranching::power(2)],
                convention: DerivTagConvention::Paired,
            },
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> ElementaryBranching {
        if self.branchings.len() == 1 {
            return self.branchings[0];
        }
        let u: f64 = rng.random();
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.branchings.len() - 1);
        self.branchings[i]
    }

    /// Whether a derivative shift with this sign also flips σ.
    fn shift_flips(&self, sign: Sign) -> bool {
        match self.convention {
            DerivTagConvention::Paired => sign == Sign::Plus,
            DerivTagConvention::Swapped => sign == Sign::Minus,
        }
    }
}

/// Simulates one branching tree over `[0, horizon]` starting from a single
/// `(+1, 0)` particle at `spec.x`.
pub fn run_replica<R: Rng>(spec: &RunSpec, rng: &mut R) -> Result<ReplicaOutcome, EngineError> {
    run_with(&Mechanism::from_spec(spec), spec, rng)
}

pub(crate) fn run_with<R: Rng>(mech: &Mechanism, spec: &RunSpec, rng: &mut R) -> Result<ReplicaOutcome, EngineError> {
    let horizon = spec.horizon;
    let cap = spec.population_cap;
    let clock =
        Exp::new(mech.rate).map_err(|e| EngineError::InvalidSpec(format!("branching rate {}: {e}", mech.rate)))?;
    let mut out = ReplicaOutcome::default();
    // (position, elapsed time, tag)
    let mut stack: Vec<(f64, f64, ParticleTag)> = vec![(spec.x, 0.0, ParticleTag::ROOT)];
    while let Some((x, s, tag)) = stack.pop() {
        let wait: f64 = clock.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        if s + wait >= horizon {
            let x = x + z * (horizon - s).sqrt();
            out.max_deriv_order = out.max_deriv_order.max(tag.deriv_order);
            out.exits.push(Particle { x, tag });
        } else {
            let x = x + z * wait.sqrt();
            let s = s + wait;
            out.event_count += 1;
            match mech.sample(rng) {
                ElementaryBranching::Power { m } => {
                    for _ in 0..m {
                        stack.push((x, s, tag));
                    }
                }
                ElementaryBranching::Reciprocal => stack.push((x, s, tag.flipped())),
                ElementaryBranching::DerivShift { sign } => {
                    stack.push((x, s, tag.differentiated(mech.shift_flips(sign))))
                }
            }
        }
        if (out.exits.len() + stack.len()) as u64 > cap {
            return Err(EngineError::PopulationCapExceeded { cap, failed: 1, replicas: 1 });
        }
    }
    Ok(out)
}

/// `β·Σᵢ σᵢ·(−1)^{nᵢ}·f^{(nᵢ)}(xᵢ)`.
pub fn exit_functional_super(o: &ReplicaOutcome, f: &dyn DerivativeSource, beta: f64) -> f64 {
    let mut total = 0.0;
    for p in &o.exits {
        let n = p.tag.deriv_order as usize;
        let d = if n == 0 { f.value(p.x) } else { f.derivatives(p.x, n)[n] };
        let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        total += p.tag.sign as f64 * parity * d;
    }
    beta * total
}

/// `∏ᵢ g(xᵢ)`.
pub fn exit_functional_mckean(o: &ReplicaOutcome, g: &dyn DerivativeSource) -> f64 {
    o.exits.iter().map(|p| g.value(p.x)).product()
}
