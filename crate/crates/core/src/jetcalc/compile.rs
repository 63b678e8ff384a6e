//! Inverse of [`psi_limit`](super::psi_limit): find probabilities and an
//! intensity law whose limiting nonlinearity is a given target.
//!
//! With `qᵢ = c·pᵢ` and `d = c` every requirement is linear in `(q, d)`:
//! normalization `Σqᵢ = d`, cancellation of each negative-order coefficient,
//! and equality of the `β⁰` coefficient with the target. The system is solved
//! exactly; the sign conditions `qᵢ ≥ 0`, `d > 0` are checked afterwards.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::expand::psi_components;
use super::jet::{JetPolynomial, Monomial};
use super::recipe::{rational_str, BranchingRecipe, ElementaryBranching, RecipeEntry, Rescaling, DEFAULT_MAX_POWER};
use super::{JetError, Rational};

/// Intensity exponents tried, smallest first.
pub const INTENSITY_EXPONENTS: [u32; 4] = [0, 1, 2, 3];

/// A one-parameter-or-more family of exact solutions for an underdetermined
/// compile, expressed over the unknowns `(p₁, …, p_n, c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionFamily {
    pub intensity_exponent: u32,
    /// A feasible member if one was found.
    pub representative: Option<BranchingRecipe>,
    /// Particular solution of the linear system in `(q₁, …, q_n, d)`.
    pub particular: Vec<Rational>,
    /// Basis of the null space in the same coordinates.
    pub null_basis: Vec<Vec<Rational>>,
}

impl fmt::Display for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[Rational]| v.iter().map(rational_str::to_string).collect::<Vec<_>>().join(", ");
        write!(f, "m={}: (q; c) = ({})", self.intensity_exponent, show(&self.particular))?;
        for (i, n) in self.null_basis.iter().enumerate() {
            write!(f, " + t{}·({})", i + 1, show(n))?;
        }
        if let Some(r) = &self.representative {
            write!(f, "; representative {r}")?;
        }
        Ok(())
    }
}

struct Equation {
    coeffs: Vec<Rational>,
    rhs: Rational,
    label: String,
}

/// Incremental reduced row echelon form; reports the first constraint that
/// makes the system inconsistent.
struct Echelon {
    n: usize,
    rows: Vec<(usize, Vec<Rational>, Rational)>,
}

impl Echelon {
    fn new(n: usize) -> Self {
        Echelon { n, rows: Vec::new() }
    }

    /// Returns `false` when the equation contradicts the ones already added.
    fn push(&mut self, eq: &Equation) -> bool {
        let mut c = eq.coeffs.clone();
        let mut rhs = eq.rhs.clone();
        for (piv, row, r) in &self.rows {
            if !c[*piv].is_zero() {
                let f = c[*piv].clone();
                for j in 0..self.n {
                    c[j] -= &f * &row[j];
                }
                rhs -= &f * r;
            }
        }
        let Some(piv) = c.iter().position(|x| !x.is_zero()) else {
            return rhs.is_zero();
        };
        let inv = c[piv].recip();
        for x in c.iter_mut() {
            *x *= &inv;
        }
        rhs *= &inv;
        for (_, row, r) in self.rows.iter_mut() {
            if !row[piv].is_zero() {
                let f = row[piv].clone();
                for j in 0..self.n {
                    row[j] -= &f * &c[j];
                }
                *r -= &f * &rhs;
            }
        }
        self.rows.push((piv, c, rhs));
        true
    }

    fn solution_family(&self) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let pivots: Vec<usize> = self.rows.iter().map(|(p, _, _)| *p).collect();
        let free: Vec<usize> = (0..self.n).filter(|j| !pivots.contains(j)).collect();
        let mut particular = vec![Rational::zero(); self.n];
        for (p, _, r) in &self.rows {
            particular[*p] = r.clone();
        }
        let null_basis = free
            .iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.n];
                v[f] = Rational::one();
                for (p, row, _) in &self.rows {
                    v[*p] = -row[f].clone();
                }
                v
            })
            .collect();
        (particular, null_basis)
    }
}

fn build_equations(
    target: &JetPolynomial,
    ansatz: &[ElementaryBranching],
    r: Rescaling,
    m: u32,
) -> Result<Vec<Equation>, JetError> {
    let order = m as i32 + 2;
    let comps = psi_components(ansatz, r, m, order)?;
    let n = ansatz.len();
    let mut eqs = Vec::new();

    let mut norm = vec![Rational::one(); n + 1];
    norm[n] = -Rational::one();
    eqs.push(Equation { coeffs: norm, rhs: Rational::zero(), label: "probabilities sum to 1".into() });

    let lowest =
        comps.per_entry.iter().map(|s| s.lowest_order()).chain([comps.offset.lowest_order()]).min().unwrap_or(0);
    for j in lowest..=0 {
        let pieces: Vec<JetPolynomial> =
            comps.per_entry.iter().chain([&comps.offset]).map(|s| s.coeff(j).unwrap_or_default()).collect();
        let mut monomials: Vec<Monomial> = pieces.iter().flat_map(|p| p.terms().map(|(m, _)| m.clone())).collect();
        if j == 0 {
            monomials.extend(target.terms().map(|(m, _)| m.clone()));
        }
        monomials.sort();
        monomials.dedup();
        for mono in monomials {
            let coeffs: Vec<Rational> = pieces.iter().map(|p| p.coeff(&mono)).collect();
            let name = JetPolynomial::term(Rational::one(), mono.clone()).to_string();
            let (rhs, label) = if j == 0 {
                (target.coeff(&mono), format!("β^0 coefficient of {name} matches the target"))
            } else {
                (Rational::zero(), format!("β^{j} coefficient of {name} cancels"))
            };
            eqs.push(Equation { coeffs, rhs, label });
        }
    }
    Ok(eqs)
}

/// Checks sign constraints on `(q, d)`; returns the violated one if any.
fn sign_violation(sol: &[Rational], ansatz: &[ElementaryBranching]) -> Option<String> {
    let n = ansatz.len();
    if !sol[n].is_positive() {
        return Some(format!("intensity coefficient c > 0 (solution has c = {})", rational_str::to_string(&sol[n])));
    }
    for (i, e) in ansatz.iter().enumerate() {
        if sol[i].is_negative() {
            let p = &sol[i] / &sol[n];
            return Some(format!("probability of {e} ≥ 0 (solution has p = {})", rational_str::to_string(&p)));
        }
    }
    None
}

fn to_recipe(sol: &[Rational], ansatz: &[ElementaryBranching], m: u32) -> Result<BranchingRecipe, JetError> {
    let n = ansatz.len();
    let c = sol[n].clone();
    let entries = ansatz.iter().zip(sol).map(|(&b, q)| RecipeEntry { branching: b, probability: q / &c }).collect();
    BranchingRecipe::new(entries, c, m)
}

/// Search a one-dimensional family `x₀ + t·v` for a member satisfying the
/// sign constraints, taking the midpoint of the feasible interval.
fn feasible_on_line(x0: &[Rational], v: &[Rational], ansatz: &[ElementaryBranching]) -> Option<Vec<Rational>> {
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for (a, b) in x0.iter().zip(v) {
        if b.is_zero() {
            continue;
        }
        let bound = -a / b;
        if b.is_positive() {
            if lo.as_ref().is_none_or(|l| bound > *l) {
                lo = Some(bound);
            }
        } else if hi.as_ref().is_none_or(|h| bound < *h) {
            hi = Some(bound);
        }
    }
    let t = match (lo, hi) {
        (Some(l), Some(h)) => (l + h) / Rational::from_integer(2.into()),
        (Some(l), None) => l + Rational::one(),
        (None, Some(h)) => h - Rational::one(),
        (None, None) => Rational::zero(),
    };
    let x: Vec<Rational> = x0.iter().zip(v).map(|(a, b)| a + &t * b).collect();
    sign_violation(&x, ansatz).is_none().then_some(x)
}

/// Compiles a target nonlinearity `ψ` into a branching recipe built from the
/// given elementary branchings.
pub fn compile_recipe(
    target: &JetPolynomial,
    ansatz: &[ElementaryBranching],
    r: Rescaling,
) -> Result<BranchingRecipe, JetError> {
    if ansatz.is_empty() {
        return Err(JetError::InvalidInput("ansatz is empty".into()));
    }
    if !target.constant_term().is_zero() {
        return Err(JetError::InvalidInput(format!("target `{target}` has a constant term")));
    }
    for e in ansatz {
        e.check_supported(DEFAULT_MAX_POWER)?;
    }
    let n = ansatz.len();
    let mut failures = Vec::new();
    for m in INTENSITY_EXPONENTS {
        let eqs = build_equations(target, ansatz, r, m)?;
        let mut ech = Echelon::new(n + 1);
        if let Some(bad) = eqs.iter().find(|eq| !ech.push(eq)) {
            failures.push(format!("m={m}: inconsistent with earlier constraints: {}", bad.label));
            continue;
        }
        let (particular, null_basis) = ech.solution_family();
        if null_basis.is_empty() {
            match sign_violation(&particular, ansatz) {
                None => return to_recipe(&particular, ansatz, m),
                Some(v) => {
                    failures.push(format!("m={m}: {v}"));
                    continue;
                }
            }
        }
        let representative = if sign_violation(&particular, ansatz).is_none() {
            Some(particular.clone())
        } else if null_basis.len() == 1 {
            feasible_on_line(&particular, &null_basis[0], ansatz)
        } else {
            null_basis.iter().find_map(|v| feasible_on_line(&particular, v, ansatz))
        };
        match representative {
            Some(sol) => {
                let representative = Some(to_recipe(&sol, ansatz, m)?);
                return Err(JetError::UnderDetermined(Box::new(SolutionFamily {
                    intensity_exponent: m,
                    representative,
                    particular,
                    null_basis,
                })));
            }
            None => failures
                .push(format!("m={m}: no member of the {}-parameter solution family is nonnegative", null_basis.len())),
        }
    }
    Err(JetError::Infeasible { constraint: failures.join("; ") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcalc::expand::psi_limit;
    use crate::jetcalc::recipe::{Sign, Type2Convention};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn poly(s: &str) -> JetPolynomial {
        s.parse().unwrap()
    }

    fn probs(rec: &BranchingRecipe) -> Vec<Rational> {
        rec.entries().iter().map(|e| e.probability.clone()).collect()
    }

    #[test]
    fn prop3_recipe_from_cubic_target() {
        let ansatz = [ElementaryBranching::power(2), ElementaryBranching::Reciprocal];
        let rec = compile_recipe(&poly("-u^3"), &ansatz, Rescaling::TypeII(Type2Convention::PaperLiteral)).unwrap();
        assert_eq!(probs(&rec), vec![r(1, 10), r(9, 10)]);
        assert_eq!(rec.intensity_coeff(), &r(5, 2));
        assert_eq!(rec.intensity_exponent(), 2);
    }

    #[test]
    fn death_split_from_square() {
        let ansatz = [ElementaryBranching::power(0), ElementaryBranching::power(2)];
        let rec = compile_recipe(&poly("u^2"), &ansatz, Rescaling::TypeI).unwrap();
        assert_eq!(probs(&rec), vec![r(1, 2), r(1, 2)]);
        assert_eq!(rec.intensity_coeff(), &r(2, 1));
        assert_eq!(rec.intensity_exponent(), 1);
        assert_eq!(psi_limit(&rec, Rescaling::TypeI, 3).unwrap(), poly("u^2"));
    }

    #[test]
    fn derivative_recipe_from_its_own_limit() {
        let ansatz = [
            ElementaryBranching::deriv_shift(Sign::Plus),
            ElementaryBranching::deriv_shift(Sign::Minus),
            ElementaryBranching::power(2),
        ];
        let rec = compile_recipe(&poly("2*u^2 + ux^2"), &ansatz, Rescaling::TypeI).unwrap();
        assert_eq!(probs(&rec), vec![r(1, 4), r(1, 4), r(1, 2)]);
        assert_eq!(rec.intensity_coeff(), &r(4, 1));
        assert_eq!(rec.intensity_exponent(), 1);
    }

    #[test]
    fn negative_square_is_infeasible() {
        let ansatz = [ElementaryBranching::power(0), ElementaryBranching::power(2)];
        match compile_recipe(&poly("-u^2"), &ansatz, Rescaling::TypeI) {
            Err(JetError::Infeasible { constraint }) => {
                assert!(constraint.contains("m=1"), "{constraint}");
                assert!(constraint.contains("≥ 0") || constraint.contains("> 0"), "{constraint}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unmatched_monomial_names_constraint() {
        let ansatz = [ElementaryBranching::power(0), ElementaryBranching::power(2)];
        match compile_recipe(&poly("ux^2"), &ansatz, Rescaling::TypeI) {
            Err(JetError::Infeasible { constraint }) => assert!(constraint.contains("ux^2"), "{constraint}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn redundant_ansatz_is_underdetermined() {
        let ansatz = [ElementaryBranching::power(0), ElementaryBranching::power(1), ElementaryBranching::power(2)];
        match compile_recipe(&poly("u^2"), &ansatz, Rescaling::TypeI) {
            Err(JetError::UnderDetermined(fam)) => {
                assert_eq!(fam.intensity_exponent, 1);
                assert_eq!(fam.null_basis.len(), 1);
                let rep = fam.representative.expect("feasible member");
                assert_eq!(psi_limit(&rep, Rescaling::TypeI, 3).unwrap(), poly("u^2"));
            }
            other => panic!("expected underdetermined, got {other:?}"),
        }
    }

    #[test]
    fn input_checks() {
        assert!(matches!(compile_recipe(&poly("u^2"), &[], Rescaling::TypeI), Err(JetError::InvalidInput(_))));
        assert!(matches!(
            compile_recipe(&poly("u^2 + 1"), &[ElementaryBranching::power(2)], Rescaling::TypeI),
            Err(JetError::InvalidInput(_))
        ));
    }
}
