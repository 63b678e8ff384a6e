use num_bigint::BigInt;
use proptest::prelude::*;
use superbranch::functions::{invert_boundary, BoundaryFunction, DerivativeSource};
use superbranch::jetcalc::{
    compile_recipe, expand_elementary, psi_limit, BetaSeries, ElementaryBranching, JetPolynomial, Monomial, Rational,
    Rescaling, Sign, Type2Convention,
};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `z`, `1/z` (or its printed counterpart) and `∂ₓz` evaluated directly.
fn direct(r: Rescaling, beta: f64, u: &[f64]) -> (f64, f64, f64) {
    let (u0, u1) = (u[0], u[1]);
    match r {
        Rescaling::TypeI => {
            let z = 1.0 - beta * u0;
            (z, 1.0 / z, -beta * u1)
        }
        Rescaling::TypeII(conv) => {
            let s = (1.0 + beta * beta * u0 * u0).sqrt();
            let k = if conv == Type2Convention::PaperLiteral { 2.0 } else { 1.0 };
            (k * (s - beta * u0), k * (s + beta * u0), k * (beta * beta * u0 * u1 / s - beta * u1))
        }
    }
}

fn direct_elementary(e: ElementaryBranching, r: Rescaling, beta: f64, u: &[f64]) -> f64 {
    let (z, zinv, dz) = direct(r, beta, u);
    match e {
        ElementaryBranching::Power { m } => z.powi(m as i32),
        ElementaryBranching::Reciprocal => zinv,
        ElementaryBranching::DerivShift { sign } => (sign.as_i32() as f64 * dz / z).exp(),
    }
}

fn elementaries() -> Vec<ElementaryBranching> {
    vec![
        ElementaryBranching::power(0),
        ElementaryBranching::power(1),
        ElementaryBranching::power(2),
        ElementaryBranching::power(3),
        ElementaryBranching::Reciprocal,
        ElementaryBranching::deriv_shift(Sign::Plus),
        ElementaryBranching::deriv_shift(Sign::Minus),
    ]
}

const RESCALINGS: [Rescaling; 3] = [
    Rescaling::TypeI,
    Rescaling::TypeII(Type2Convention::PaperLiteral),
    Rescaling::TypeII(Type2Convention::ReciprocalConsistent),
];

fn small_poly() -> impl Strategy<Value = JetPolynomial> {
    prop::collection::vec((-5i64..=5, 1i64..=4, 0u32..=2, 0u32..=2), 1..4).prop_map(|terms| {
        terms.into_iter().fold(JetPolynomial::zero(), |acc, (n, d, a, b)| {
            acc + JetPolynomial::term(rat(n, d), Monomial::new(vec![a, b]))
        })
    })
}

fn series() -> impl Strategy<Value = BetaSeries> {
    (prop::collection::vec(small_poly(), 1..4), -1i32..=1, 2i32..=4)
        .prop_map(|(coeffs, lowest, trunc)| BetaSeries::new(lowest, coeffs, trunc))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_respects_truncation(a in series(), b in series(), k in 0i32..=3) {
        let full = a.mul(&b).truncate(k);
        let cut = a.truncate(k - b.lowest_order()).mul(&b.truncate(k - a.lowest_order())).truncate(k);
        for j in a.lowest_order() + b.lowest_order()..=k.min(full.truncation_order()) {
            prop_assert_eq!(full.coeff(j), cut.coeff(j), "order {}", j);
        }
    }

    #[test]
    fn total_derivative_is_a_derivation(p in small_poly(), q in small_poly()) {
        let lhs = (p.clone() * q.clone()).total_derivative();
        let rhs = p.total_derivative() * q.clone() + p * q.total_derivative();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn expansions_converge_at_order(u0 in 0.2f64..0.9, u1 in 0.2f64..0.9, k in 2i32..=3) {
        let u = [u0, -u1, 0.0, 0.0, 0.0];
        for r in RESCALINGS {
            for e in elementaries() {
                let s = expand_elementary(e, r, k).unwrap();
                let err = |b: f64| (s.eval(b, &u) - direct_elementary(e, r, b, &u)).abs();
                let (e1, e2) = (err(1e-2), err(5e-3));
                if e1 < 1e-14 && e2 < 1e-14 {
                    continue;
                }
                let order = (e1 / e2).log2();
                prop_assert!(order >= k as f64 + 0.8, "{} {} K={}: errors {:e} {:e}", e, r, k, e1, e2);
            }
        }
    }

    #[test]
    fn compile_inverts_psi(n in 1i64..=12, d in 1i64..=7, family in 0usize..3) {
        let a = rat(n, d);
        let u0sq = JetPolynomial::var(0).pow(2);
        let u1sq = JetPolynomial::var(1).pow(2);
        let (target, ansatz, r) = match family {
            0 => (u0sq.scale(&a), vec![ElementaryBranching::power(0), ElementaryBranching::power(2)], Rescaling::TypeI),
            1 => (
                u0sq.scale(&a) + u1sq.scale(&(a.clone() / rat(2, 1))),
                vec![
                    ElementaryBranching::deriv_shift(Sign::Plus),
                    ElementaryBranching::deriv_shift(Sign::Minus),
                    ElementaryBranching::power(2),
                ],
                Rescaling::TypeI,
            ),
            _ => (
                JetPolynomial::var(0).pow(3).scale(&-a),
                vec![ElementaryBranching::power(2), ElementaryBranching::Reciprocal],
                Rescaling::TypeII(Type2Convention::PaperLiteral),
            ),
        };
        let recipe = compile_recipe(&target, &ansatz, r).unwrap();
        let back = psi_limit(&recipe, r, recipe.intensity_exponent() as i32 + 2).unwrap();
        prop_assert_eq!(back, target);
    }

    #[test]
    fn inversion_round_trips(a in 0.05f64..0.5, omega in 0.1f64..1.0, beta in 0.05f64..1.0, x in -10.0f64..10.0, type2 in any::<bool>()) {
        let g = BoundaryFunction::cosine_with_offset(0.1, a, omega);
        let r = if type2 { Rescaling::TypeII(Type2Convention::PaperLiteral) } else { Rescaling::TypeI };
        prop_assume!(type2 || beta * (0.1 + a) < 0.95);
        let f = invert_boundary(&g, beta, r, None).unwrap();
        let back = r.forward(f.value(x), beta);
        prop_assert!((back - g.value(x)).abs() < 1e-12);
    }

    #[test]
    fn cosine_derivatives_match_differences(a in 0.1f64..2.0, omega in 0.1f64..2.0, x in -5.0f64..5.0, n in 0usize..6) {
        let g = BoundaryFunction::cosine(a, omega);
        let h = 1e-4;
        let fd = (g.eval_derivative(n, x + h) - g.eval_derivative(n, x - h)) / (2.0 * h);
        let scale = a * omega.powi(n as i32 + 1);
        prop_assert!((fd - g.eval_derivative(n + 1, x)).abs() <= 1e-6 * scale.max(1e-3));
    }
}

#[test]
fn inversion_round_trip_grid() {
    let g = BoundaryFunction::cosine_with_offset(0.1, 0.2, 0.5);
    for r in RESCALINGS {
        let f = invert_boundary(&g, 0.4, r, None).unwrap();
        for i in 0..100 {
            let x = -20.0 + 0.4 * i as f64;
            assert!((r.forward(f.value(x), 0.4) - g.value(x)).abs() < 1e-12);
        }
    }
}
