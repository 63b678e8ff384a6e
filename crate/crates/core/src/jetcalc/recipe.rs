//! Branching recipes: weighted elementary branchings plus the intensity law
//! `k_β = c·β^(−m)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::jet::{parse_rational, rational_to_f64};
use super::{JetError, Rational};

/// Largest `Power(m)` accepted unless a caller raises it explicitly.
pub const DEFAULT_MAX_POWER: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// One elementary transition of a particle at a branching event.
///
/// In terms of the substituted variable `z`:
/// * `Power(m)`: `z ↦ z^m` (m identical copies, `m = 0` kills the particle),
/// * `Reciprocal`: `z ↦ 1/z` (sign flip),
/// * `DerivShift(s)`: `z ↦ exp(s·∂ₓ log z)` (one more derivative on the tag).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementaryBranching {
    Power { m: u32 },
    Reciprocal,
    DerivShift { sign: Sign },
}

impl ElementaryBranching {
    pub fn power(m: u32) -> Self {
        ElementaryBranching::Power { m }
    }

    pub fn deriv_shift(sign: Sign) -> Self {
        ElementaryBranching::DerivShift { sign }
    }

    /// Number of offspring particles this transition produces.
    pub fn offspring(self) -> u32 {
        match self {
            ElementaryBranching::Power { m } => m,
            _ => 1,
        }
    }

    /// Same branching topology without sign or derivative changes.
    pub fn envelope(self) -> Self {
        ElementaryBranching::power(self.offspring())
    }

    pub fn check_supported(self, max_power: u32) -> Result<(), JetError> {
        match self {
            ElementaryBranching::Power { m } if m > max_power => {
                Err(JetError::UnsupportedKind(format!("power{m} exceeds the configured maximum power{max_power}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ElementaryBranching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementaryBranching::Power { m } => write!(f, "power{m}"),
            ElementaryBranching::Reciprocal => f.write_str("reciprocal"),
            ElementaryBranching::DerivShift { sign: Sign::Plus } => f.write_str("dshift+"),
            ElementaryBranching::DerivShift { sign: Sign::Minus } => f.write_str("dshift-"),
        }
    }
}

impl FromStr for ElementaryBranching {
    type Err = JetError;

    /// Accepts `power<m>`, `reciprocal`/`recip`, `dshift+`/`dshift-`.
    fn from_str(s: &str) -> Result<Self, JetError> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || JetError::UnsupportedKind(format!("unknown elementary branching `{s}`"));
        if let Some(m) = t.strip_prefix("power") {
            return m.parse().map(ElementaryBranching::power).map_err(|_| bad());
        }
        match t.as_str() {
            "reciprocal" | "recip" => Ok(ElementaryBranching::Reciprocal),
            "dshift+" | "derivshift+" => Ok(ElementaryBranching::deriv_shift(Sign::Plus)),
            "dshift-" | "derivshift-" => Ok(ElementaryBranching::deriv_shift(Sign::Minus)),
            _ => Err(bad()),
        }
    }
}

/// Convention for the type II substitution `z = e^{−βw}` expressed through
/// `u = sinh(βw)/β`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Type2Convention {
    /// `z = 2√(1+β²u²) − 2βu`, `1/z = 2√(1+β²u²) + 2βu` (the printed forms,
    /// which are not mutual reciprocals).
    #[default]
    PaperLiteral,
    /// `z = √(1+β²u²) − βu` with `1/z` its exact reciprocal.
    ReciprocalConsistent,
}

/// How the log-Laplace functional `w` is mapped to the PDE solution `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rescaling {
    /// `u = (1 − e^{−βw})/β`.
    TypeI,
    /// `u = (e^{βw} − e^{−βw})/(2β)`.
    TypeII(Type2Convention),
}

impl Rescaling {
    /// Maps `w` to `u` for mass `beta`.
    pub fn forward(self, w: f64, beta: f64) -> f64 {
        match self {
            Rescaling::TypeI => -(-beta * w).exp_m1() / beta,
            Rescaling::TypeII(_) => (beta * w).sinh() / beta,
        }
    }
}

impl fmt::Display for Rescaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rescaling::TypeI => "type1",
            Rescaling::TypeII(Type2Convention::PaperLiteral) => "type2-paper",
            Rescaling::TypeII(Type2Convention::ReciprocalConsistent) => "type2-consistent",
        })
    }
}

impl FromStr for Rescaling {
    type Err = JetError;
    fn from_str(s: &str) -> Result<Self, JetError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "type1" | "typei" | "i" => Ok(Rescaling::TypeI),
            "type2" | "type2-paper" | "typeii" | "ii" => Ok(Rescaling::TypeII(Type2Convention::PaperLiteral)),
            "type2-consistent" => Ok(Rescaling::TypeII(Type2Convention::ReciprocalConsistent)),
            other => Err(JetError::UnsupportedKind(format!("unknown rescaling `{other}`"))),
        }
    }
}

impl Serialize for Rescaling {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rescaling {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod rational_str {
    use super::*;

    pub fn to_string(r: &Rational) -> String {
        r.to_string()
    }

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("`{s}` is not an exact rational")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeEntry {
    pub branching: ElementaryBranching,
    #[serde(with = "rational_str")]
    pub probability: Rational,
}

/// A validated branching recipe: probabilities are nonnegative and sum to
/// exactly one, and the intensity coefficient is positive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRecipe", into = "RawRecipe")]
pub struct BranchingRecipe {
    entries: Vec<RecipeEntry>,
    intensity_coeff: Rational,
    intensity_exponent: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecipe {
    entries: Vec<RecipeEntry>,
    #[serde(with = "rational_str")]
    intensity_coeff: Rational,
    intensity_exponent: u32,
}

impl TryFrom<RawRecipe> for BranchingRecipe {
    type Error = JetError;
    fn try_from(r: RawRecipe) -> Result<Self, JetError> {
        BranchingRecipe::new(r.entries, r.intensity_coeff, r.intensity_exponent)
    }
}

impl From<BranchingRecipe> for RawRecipe {
    fn from(r: BranchingRecipe) -> Self {
        RawRecipe { entries: r.entries, intensity_coeff: r.intensity_coeff, intensity_exponent: r.intensity_exponent }
    }
}

impl BranchingRecipe {
    pub fn new(
        entries: Vec<RecipeEntry>,
        intensity_coeff: Rational,
        intensity_exponent: u32,
    ) -> Result<Self, JetError> {
        if entries.is_empty() {
            return Err(JetError::InvalidRecipe("recipe has no entries".into()));
        }
        if let Some(e) = entries.iter().find(|e| e.probability.is_negative()) {
            return Err(JetError::InvalidRecipe(format!("negative probability for {}", e.branching)));
        }
        let total: Rational = entries.iter().map(|e| e.probability.clone()).sum();
        if !total.is_one() {
            return Err(JetError::InvalidRecipe(format!(
                "probabilities sum to {} instead of 1",
                rational_str::to_string(&total)
            )));
        }
        if !intensity_coeff.is_positive() {
            return Err(JetError::InvalidRecipe("intensity coefficient must be positive".into()));
        }
        Ok(BranchingRecipe { entries, intensity_coeff, intensity_exponent })
    }

    /// Convenience constructor from `(branching, num, den)` triples.
    pub fn from_parts(parts: &[(ElementaryBranching, i64, i64)], c: Rational, m: u32) -> Result<Self, JetError> {
        let entries = parts
            .iter()
            .map(|&(b, n, d)| RecipeEntry {
                branching: b,
                probability: Rational::new(BigInt::from(n), BigInt::from(d)),
            })
            .collect();
        Self::new(entries, c, m)
    }

    /// `{power1: 1}`: every event replaces a particle by an identical copy.
    pub fn identity(c: Rational, m: u32) -> Self {
        Self::from_parts(&[(ElementaryBranching::power(1), 1, 1)], c, m).expect("identity recipe is valid")
    }

    pub fn entries(&self) -> &[RecipeEntry] {
        &self.entries
    }

    pub fn intensity_coeff(&self) -> &Rational {
        &self.intensity_coeff
    }

    pub fn intensity_exponent(&self) -> u32 {
        self.intensity_exponent
    }

    /// `k_β = c·β^(−m)`.
    pub fn intensity(&self, beta: f64) -> f64 {
        rational_to_f64(&self.intensity_coeff) * beta.powi(-(self.intensity_exponent as i32))
    }

    /// Mean offspring number `μ = Σ pᵢ·offspring(bᵢ)`.
    pub fn mean_offspring(&self) -> f64 {
        self.entries.iter().map(|e| rational_to_f64(&e.probability) * e.branching.offspring() as f64).sum()
    }

    pub fn check_supported(&self, max_power: u32) -> Result<(), JetError> {
        self.entries.iter().try_for_each(|e| e.branching.check_supported(max_power))
    }

    /// Recipe with the same topology and no sign/derivative changes; entries
    /// that collapse to the same power are merged.
    pub fn envelope(&self) -> BranchingRecipe {
        let mut merged: Vec<RecipeEntry> = Vec::new();
        for e in &self.entries {
            let b = e.branching.envelope();
            match merged.iter_mut().find(|x| x.branching == b) {
                Some(x) => x.probability += e.probability.clone(),
                None => merged.push(RecipeEntry { branching: b, probability: e.probability.clone() }),
            }
        }
        merged.retain(|e| !e.probability.is_zero());
        merged.sort_by_key(|e| e.branching);
        BranchingRecipe {
            entries: merged,
            intensity_coeff: self.intensity_coeff.clone(),
            intensity_exponent: self.intensity_exponent,
        }
    }
}

impl fmt::Display for BranchingRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("{}: {}", e.branching, rational_str::to_string(&e.probability)))
            .collect();
        write!(
            f,
            "{{{}}}, k = ({})·β^-{}",
            parts.join(", "),
            rational_str::to_string(&self.intensity_coeff),
            self.intensity_exponent
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn validation() {
        let p2 = ElementaryBranching::power(2);
        assert!(BranchingRecipe::from_parts(&[], r(1, 1), 0).is_err());
        assert!(BranchingRecipe::from_parts(&[(p2, 1, 2)], r(1, 1), 0).is_err());
        assert!(
            BranchingRecipe::from_parts(&[(p2, 3, 2), (ElementaryBranching::Reciprocal, -1, 2)], r(1, 1), 0).is_err()
        );
        assert!(BranchingRecipe::from_parts(&[(p2, 1, 1)], r(0, 1), 0).is_err());
        assert!(BranchingRecipe::from_parts(&[(p2, 1, 1)], r(5, 2), 2).is_ok());
    }

    #[test]
    fn json_uses_exact_fractions() {
        let rec = BranchingRecipe::from_parts(
            &[(ElementaryBranching::power(2), 1, 10), (ElementaryBranching::Reciprocal, 9, 10)],
            r(5, 2),
            2,
        )
        .unwrap();
        let js = serde_json::to_string(&rec).unwrap();
        assert!(js.contains("\"1/10\""), "{js}");
        assert!(js.contains("\"5/2\""), "{js}");
        let back: BranchingRecipe = serde_json::from_str(&js).unwrap();
        assert_eq!(back, rec);
        let bad = js.replace("\"9/10\"", "\"8/10\"");
        assert!(serde_json::from_str::<BranchingRecipe>(&bad).is_err());
        let unknown = js.replacen('{', "{\"extra\":1,", 1);
        assert!(serde_json::from_str::<BranchingRecipe>(&unknown).is_err());
    }

    #[test]
    fn envelope_merges_topology() {
        let rec = BranchingRecipe::from_parts(
            &[
                (ElementaryBranching::deriv_shift(Sign::Plus), 1, 4),
                (ElementaryBranching::deriv_shift(Sign::Minus), 1, 4),
                (ElementaryBranching::power(2), 1, 2),
            ],
            r(4, 1),
            1,
        )
        .unwrap();
        let env = rec.envelope();
        assert_eq!(env.entries().len(), 2);
        assert_eq!(env.entries()[0].branching, ElementaryBranching::power(1));
        assert_eq!(env.entries()[0].probability, r(1, 2));
        assert!((rec.mean_offspring() - 1.5).abs() < 1e-15);
        assert!((rec.intensity(0.2) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for s in ["power0", "power3", "reciprocal", "dshift+", "dshift-"] {
            let b: ElementaryBranching = s.parse().unwrap();
            assert_eq!(b.to_string(), s);
        }
        assert!("power".parse::<ElementaryBranching>().is_err());
        assert!("split".parse::<ElementaryBranching>().is_err());
        for s in ["type1", "type2-paper", "type2-consistent"] {
            assert_eq!(s.parse::<Rescaling>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn rescaling_forward_small_beta() {
        let w = 0.7;
        for kind in [Rescaling::TypeI, Rescaling::TypeII(Type2Convention::PaperLiteral)] {
            assert!((kind.forward(w, 1e-6) - w).abs() < 1e-5);
        }
        assert!((Rescaling::TypeI.forward(1.0, 0.5) - (1.0 - (-0.5f64).exp()) / 0.5).abs() < 1e-15);
    }
}
