use std::f64::consts::E;

use pmi_sos::penalty::{
    FML_TOL, a_const, choose_k, concat_poly, fml_decompose, jackson_error_bound, penalty_poly, q_eval,
    verification_grid,
};
use pmi_sos::{PenaltySpec, ShiftMode, UniPoly};
use proptest::prelude::*;

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

#[test]
fn concat_poly_is_flat_at_both_ends() {
    for k in 1..=6 {
        let tol = 1e-9 * factorial(2 * k + 1);
        let mut d = concat_poly(k);
        for i in 1..=k {
            d = d.derivative();
            assert!(d.eval(0.0).abs() <= tol, "k={k} i={i} at 0");
            assert!(d.eval(1.0).abs() <= tol, "k={k} i={i} at 1");
        }
    }
}

#[test]
fn concat_poly_range_and_symmetry() {
    let reflect = UniPoly::new(vec![1.0, -1.0]);
    for k in 0..=6 {
        let c = concat_poly(k);
        // Horner rounding bound on [0, 1]: gamma_(2d) * sum |c_i|
        let two_d = 2.0 * c.degree() as f64 * f64::EPSILON;
        let slack = two_d / (1.0 - two_d) * c.coefs().iter().map(|v| v.abs()).sum::<f64>();
        for i in 0..10_000 {
            let t = i as f64 / 9_999.0;
            let v = c.eval(t);
            assert!((-slack..=1.0 + slack).contains(&v), "k={k} t={t} c={v}");
        }
        let sum = c.add(&c.compose(&reflect));
        let resid = sum.sub(&UniPoly::new(vec![1.0]));
        assert!(resid.max_abs_coef() <= 1e-10, "k={k}");
    }
}

#[test]
fn penalty_sandwich_sweep() {
    for lambda in [-1.0, -0.5, -0.1] {
        for n in [1.0, 10.0] {
            for v in [20u32, 40, 80] {
                let k = choose_k(-lambda, v).unwrap();
                let spec = PenaltySpec::new(lambda, n, k, v).unwrap();
                let p = penalty_poly(&spec, ShiftMode::Theoretical).unwrap();
                let jb = jackson_error_bound(&spec);
                for t in verification_grid(&spec) {
                    let q = q_eval(&spec, t).unwrap();
                    let pt = p.eval(t);
                    assert!(q >= -1e-10 && pt - q >= -1e-10, "{spec:?} t={t}");
                    assert!(pt - q <= jb, "{spec:?} t={t}");
                }
            }
        }
    }
}

#[test]
fn choose_k_meets_its_guarantee() {
    for lambda in [-1.0f64, -0.5, -0.1] {
        for v in [20u32, 40, 80] {
            let d = lambda.abs();
            let k = choose_k(d, v).unwrap();
            let kf = k as f64;
            let lhs = 4f64.powf(kf) * factorial(k) / (d.powf(kf) * (v as f64 - kf).powf(kf));
            assert!(lhs <= E * E * a_const().powf(d * v as f64), "lambda={lambda} v={v} k={k}");
        }
    }
}

fn square(c: &[f64]) -> UniPoly {
    let p = UniPoly::new(c.to_vec());
    p.mul(&p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fml_round_trip(
        a in prop::collection::vec(-1.0..1.0f64, 1..4),
        b in prop::collection::vec(-1.0..1.0f64, 0..3),
        c in 0.0..0.5f64,
    ) {
        let one_minus_t2 = UniPoly::new(vec![1.0, 0.0, -1.0]);
        let h = square(&a).add(&one_minus_t2.mul(&square(&b))).add(&UniPoly::new(vec![c]));
        let d = fml_decompose(&h).unwrap();
        let back = d.h1.add(&one_minus_t2.mul(&d.h2));
        prop_assert!(back.sub(&h).max_abs_coef() <= FML_TOL);
        prop_assert!(d.residual <= FML_TOL);
    }
}
