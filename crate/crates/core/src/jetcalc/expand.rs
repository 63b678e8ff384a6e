//! Small-β expansion of branching functions and extraction of the limiting
//! nonlinearity `ψ`.
//!
//! Under rescaling I the substituted variable is `z = 1 − βu`. Under
//! rescaling II the pair `(z, 1/z)` is built from `√(1+β²u²) ∓ βu`, either
//! exactly or with the extra factor 2 of the printed expansions (see
//! [`Type2Convention`]). `ψ` is reported in the convention
//! `∂ₜu = ½∂ₓ²u − ψ(u)`.

use num_bigint::BigInt;
use num_traits::One;

use super::jet::JetPolynomial;
use super::recipe::{BranchingRecipe, ElementaryBranching, Rescaling, Type2Convention, DEFAULT_MAX_POWER};
use super::series::{BetaSeries, SeriesFn};
use super::{JetError, Rational};

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The substituted variable and its (convention-dependent) reciprocal image.
#[derive(Clone, Debug)]
pub struct Substitution {
    pub z: BetaSeries,
    pub z_inv: BetaSeries,
}

impl Substitution {
    pub fn new(r: Rescaling, order: i32) -> Result<Self, JetError> {
        let u = JetPolynomial::var(0);
        match r {
            Rescaling::TypeI => {
                let z = BetaSeries::new(0, vec![JetPolynomial::one(), -&u], order);
                let z_inv = z.compose(SeriesFn::Inverse)?;
                Ok(Substitution { z, z_inv })
            }
            Rescaling::TypeII(conv) => {
                let scale = match conv {
                    Type2Convention::PaperLiteral => rat(2),
                    Type2Convention::ReciprocalConsistent => rat(1),
                };
                let root = BetaSeries::monomial(u.pow(2), 2, order).compose(SeriesFn::Sqrt1p)?;
                let lin = BetaSeries::monomial(u, 1, order);
                Ok(Substitution { z: root.sub(&lin).scale(&scale), z_inv: root.add(&lin).scale(&scale) })
            }
        }
    }

    /// Image of `z` under `e`.
    pub fn apply(&self, e: ElementaryBranching) -> Result<BetaSeries, JetError> {
        apply_to(e, &self.z, &self.z_inv)
    }

    /// Image of `1/z` under `e`, i.e. the same transition with the roles of
    /// `z` and `1/z` exchanged.
    pub fn apply_dual(&self, e: ElementaryBranching) -> Result<BetaSeries, JetError> {
        apply_to(e, &self.z_inv, &self.z)
    }
}

fn apply_to(e: ElementaryBranching, z: &BetaSeries, z_inv: &BetaSeries) -> Result<BetaSeries, JetError> {
    match e {
        ElementaryBranching::Power { m } => Ok(z.pow(m)),
        ElementaryBranching::Reciprocal => Ok(z_inv.clone()),
        ElementaryBranching::DerivShift { sign } => {
            let dlog = z.log_derivative()?;
            dlog.scale(&rat(sign.as_i32() as i64)).compose(SeriesFn::Exp)
        }
    }
}

fn require_order(order: i32, needed: i32) -> Result<(), JetError> {
    if order < needed {
        Err(JetError::InsufficientOrder { requested: order, needed })
    } else {
        Ok(())
    }
}

/// Expansion of the image of `z` under `e` to order `order` in `β`.
pub fn expand_elementary(e: ElementaryBranching, r: Rescaling, order: i32) -> Result<BetaSeries, JetError> {
    expand_elementary_with_max(e, r, order, DEFAULT_MAX_POWER)
}

pub fn expand_elementary_with_max(
    e: ElementaryBranching,
    r: Rescaling,
    order: i32,
    max_power: u32,
) -> Result<BetaSeries, JetError> {
    require_order(order, 2)?;
    e.check_supported(max_power)?;
    Substitution::new(r, order)?.apply(e)
}

/// Per-entry pieces of `ψ_β` for intensity exponent `m` and unit intensity
/// coefficient: `ψ_β = c·(Σ pᵢ Aᵢ + B)`.
pub(crate) struct PsiComponents {
    pub per_entry: Vec<BetaSeries>,
    pub offset: BetaSeries,
}

pub(crate) fn psi_components(
    ansatz: &[ElementaryBranching],
    r: Rescaling,
    m: u32,
    order: i32,
) -> Result<PsiComponents, JetError> {
    let sub = Substitution::new(r, order)?;
    let m = m as i32;
    match r {
        Rescaling::TypeI => {
            // (k/β)(φ(z) − z)
            let per_entry =
                ansatz.iter().map(|&e| Ok(sub.apply(e)?.shift(-m - 1))).collect::<Result<Vec<_>, JetError>>()?;
            let offset = sub.z.scale(&-Rational::one()).shift(-m - 1);
            Ok(PsiComponents { per_entry, offset })
        }
        Rescaling::TypeII(_) => {
            // k((φ(z) − φ(1/z))/(2β) − u)
            let half = Rational::new(BigInt::one(), BigInt::from(2));
            let per_entry = ansatz
                .iter()
                .map(|&e| Ok(sub.apply(e)?.sub(&sub.apply_dual(e)?).scale(&half).shift(-m - 1)))
                .collect::<Result<Vec<_>, JetError>>()?;
            let offset = BetaSeries::monomial(-JetPolynomial::var(0), -m, order - m - 1);
            Ok(PsiComponents { per_entry, offset })
        }
    }
}

/// The full `ψ_β` series of a recipe (before taking `β → 0`).
pub fn psi_series(recipe: &BranchingRecipe, r: Rescaling, order: i32) -> Result<BetaSeries, JetError> {
    recipe.check_supported(DEFAULT_MAX_POWER)?;
    let ansatz: Vec<_> = recipe.entries().iter().map(|e| e.branching).collect();
    let comps = psi_components(&ansatz, r, recipe.intensity_exponent(), order)?;
    let mut acc = comps.offset;
    for (a, e) in comps.per_entry.iter().zip(recipe.entries()) {
        acc = acc.add(&a.scale(&e.probability));
    }
    Ok(acc.scale(recipe.intensity_coeff()))
}

/// Limiting nonlinearity `ψ = lim_{β→0} ψ_β` of a recipe.
///
/// Fails with [`JetError::DivergentTerm`] when a negative power of `β`
/// survives, i.e. the recipe has no rescaling limit.
pub fn psi_limit(recipe: &BranchingRecipe, r: Rescaling, order: i32) -> Result<JetPolynomial, JetError> {
    let m = recipe.intensity_exponent() as i32;
    require_order(order, m + 2)?;
    let series = psi_series(recipe, r, order)?;
    for j in series.lowest_order()..0 {
        let c = series.coeff(j).unwrap_or_default();
        if !c.is_zero() {
            return Err(JetError::DivergentTerm { order: j, polynomial: c });
        }
    }
    Ok(series.coeff(0).unwrap_or_default())
}
