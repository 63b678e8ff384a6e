//! Sufficient existence check through the enveloping measure-valued process.

use serde::{Deserialize, Serialize};

use super::recipe::BranchingRecipe;
use crate::functions::{BoundaryFunction, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    Admissible,
    Inadmissible,
    /// The envelope falls outside the supported `−bz − cz²` form, so the
    /// sufficient condition cannot be evaluated.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub status: Admissibility,
    pub envelope: BranchingRecipe,
    pub max_offspring: u32,
    /// `Σₙ sup |f⁽ⁿ⁾|` over the evaluation window; `None` when infinite.
    pub derivative_sum_bound: Option<f64>,
    /// Human-readable explanation of the decisive condition.
    pub reason: String,
}

/// Builds the envelope of `recipe` and applies the sufficient condition:
/// at most quadratic enveloping generating function and a finite
/// derivative-sum bound for `f` on `window`.
pub fn check_existence(recipe: &BranchingRecipe, f: &BoundaryFunction, window: Option<Window>) -> ExistenceReport {
    let envelope = recipe.envelope();
    let max_offspring = envelope.entries().iter().map(|e| e.branching.offspring()).max().unwrap_or(0);
    let bound = f.derivative_sum_bound(window);
    let finite = bound.is_finite().then_some(bound);
    let (status, reason) = if max_offspring > 2 {
        (
            Admissibility::Unknown,
            format!(
                "enveloping branching has {max_offspring} offspring; only at most quadratic mechanisms are supported"
            ),
        )
    } else if finite.is_none() {
        (Admissibility::Inadmissible, "Σₙ sup|f⁽ⁿ⁾| diverges for the boundary function".to_string())
    } else {
        (Admissibility::Admissible, format!("envelope is at most quadratic and Σₙ sup|f⁽ⁿ⁾| ≤ {bound}"))
    };
    ExistenceReport { status, envelope, max_offspring, derivative_sum_bound: finite, reason }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcalc::recipe::ElementaryBranching;
    use crate::jetcalc::Rational;

    fn prop3() -> BranchingRecipe {
        BranchingRecipe::from_parts(
            &[(ElementaryBranching::power(2), 1, 10), (ElementaryBranching::Reciprocal, 9, 10)],
            Rational::new(5.into(), 2.into()),
            2,
        )
        .unwrap()
    }

    #[test]
    fn cosine_contraction_is_admissible() {
        let rep = check_existence(&prop3(), &BoundaryFunction::cosine(0.2, 0.5), None);
        assert_eq!(rep.status, Admissibility::Admissible);
        assert!((rep.derivative_sum_bound.unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(rep.max_offspring, 2);
    }

    #[test]
    fn fast_cosine_is_rejected() {
        let rep = check_existence(&prop3(), &BoundaryFunction::cosine(0.2, 1.5), None);
        assert_eq!(rep.status, Admissibility::Inadmissible);
        assert_eq!(rep.derivative_sum_bound, None);
    }

    #[test]
    fn cubic_branching_is_unknown() {
        let rec = BranchingRecipe::from_parts(
            &[(ElementaryBranching::power(3), 1, 2), (ElementaryBranching::power(0), 1, 2)],
            Rational::new(1.into(), 1.into()),
            1,
        )
        .unwrap();
        let rep = check_existence(&rec, &BoundaryFunction::cosine(0.2, 0.5), None);
        assert_eq!(rep.status, Admissibility::Unknown);
    }
}
