use decoupler_core::instances::random_model;
use decoupler_core::polyfunc::{
    parse_polynomial, MultiPolynomial, VectorPolyJson, VectorPolynomial,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn poly(num_vars: usize) -> impl Strategy<Value = MultiPolynomial> {
    prop::collection::vec(
        (prop::collection::vec(0u32..4, num_vars), -20i32..=20),
        0..8,
    )
    .prop_map(move |terms| {
        MultiPolynomial::from_f64_terms(
            num_vars,
            terms.into_iter().map(|(e, c)| (e, c as f64 / 4.0)),
        )
        .unwrap()
    })
}

fn point(num_vars: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, num_vars)
}

proptest! {
    #[test]
    fn display_parses_back_exactly(p in poly(3)) {
        let text = p.to_string();
        prop_assert_eq!(parse_polynomial(&text, 3).unwrap(), p);
    }

    #[test]
    fn json_round_trip(p in poly(2), q in poly(2)) {
        let f = VectorPolynomial::new(vec![p, q]).unwrap();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back: VectorPolyJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(VectorPolynomial::from_json(&back).unwrap(), f);
    }

    #[test]
    fn mixed_partials_commute(p in poly(3), j in 0usize..3, k in 0usize..3) {
        let a = p.differentiate(j).unwrap().differentiate(k).unwrap();
        let b = p.differentiate(k).unwrap().differentiate(j).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn differentiation_is_linear(p in poly(2), q in poly(2), j in 0usize..2) {
        let lhs = (&p + &q).differentiate(j).unwrap();
        let rhs = &p.differentiate(j).unwrap() + &q.differentiate(j).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_is_additive(p in poly(2), q in poly(2), x in point(2)) {
        let sum = (&p + &q).evaluate(&x).unwrap();
        let parts = p.evaluate(&x).unwrap() + q.evaluate(&x).unwrap();
        prop_assert!((sum - parts).abs() <= 1e-9 * (1.0 + parts.abs()));
    }

    #[test]
    fn expansion_agrees_with_composition(seed in any::<u64>(), x in point(3)) {
        let model = random_model(2, 3, 3, 3, seed);
        let f = model.expand().unwrap();
        let lhs = f.evaluate(&x).unwrap();
        let rhs = model.evaluate(&x).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }
}

/// `J(x) = W diag(g′(Vᵀx)) Vᵀ` written out by hand.
fn chain_rule_jacobian(
    model: &decoupler_core::polyfunc::DecoupledModel,
    x: &[f64],
) -> DMatrix<f64> {
    let (w, v) = (model.w(), model.v());
    let z = v.transpose() * DMatrix::from_column_slice(x.len(), 1, x);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        model.num_branches(),
        model
            .g()
            .iter()
            .enumerate()
            .map(|(i, g)| g.derivative().evaluate(z[i])),
    ));
    w * d * v.transpose()
}

#[test]
fn chain_rule_and_hessian_symmetry_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..50u64 {
        let (n, m, r) = (
            rng.random_range(1..4),
            rng.random_range(1..4),
            rng.random_range(1..5),
        );
        let model = random_model(n, m, r, rng.random_range(1..5), 1000 + trial);
        let f = model.expand().unwrap();
        let eval = f.evaluator();
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();

        let expected = chain_rule_jacobian(&model, &x);
        let got = eval.jacobian(&x).unwrap();
        let scale = 1.0 + expected.norm();
        assert!((got - &expected).norm() <= 1e-10 * scale, "trial {trial}");

        let h = eval.hessian(&x).unwrap();
        let hm = model.hessian_at(&x).unwrap();
        let hscale = 1.0 + hm.frobenius_norm();
        assert!(h.distance(&hm) <= 1e-10 * hscale, "trial {trial}");
        for i in 0..n {
            for j in 0..m {
                for k in 0..m {
                    assert_eq!(h.get(&[i, j, k]), h.get(&[i, k, j]));
                }
            }
        }
    }
}

#[test]
fn text_input_counts_variables_from_indices() {
    let f = VectorPolynomial::parse_lines("x1^2 + x3\n\n# comment\n2*x2", None).unwrap();
    assert_eq!((f.num_outputs(), f.num_vars()), (2, 3));
    assert_eq!(f.evaluate(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, 4.0]);
}
