mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use zcmvn::simplex::{
    alpha_transform, alpha_transform_simplex, helmert_submatrix, inverse_alpha_transform,
    jacobian_alpha, jacobian_simplex,
};
use zcmvn::Composition;

const ALPHAS: [f64; 5] = [-1.0, -0.5, 0.5, 1.0, 2.0];

#[test]
fn helmert_orthonormal_up_to_fifteen_parts() {
    for parts in 2..=15 {
        let h = helmert_submatrix(parts).unwrap();
        let m = h.matrix();
        let gram = m * m.transpose();
        assert!((gram - DMatrix::identity(parts - 1, parts - 1)).amax() < 1e-12);
        let ones = nalgebra::DVector::from_element(parts, 1.0);
        assert!((m * ones).amax() < 1e-12);
    }
}

#[test]
fn simplex_jacobian_matches_finite_differences() {
    let mut rng = rng(101);
    for &alpha in &ALPHAS {
        for k in 0..100 {
            let parts = 3 + k % 4;
            let x = random_interior(parts, &mut rng, 0.05);
            let xd = &x.parts()[..parts - 1];
            let fd = fd_jacobian(simplex_map(alpha), xd, 1e-6).determinant().abs();
            let formula = jacobian_simplex(&x, alpha).unwrap();
            assert!(((fd - formula) / formula).abs() < 1e-5, "alpha {alpha}: {fd} vs {formula}");
        }
    }
}

#[test]
fn centred_jacobian_matches_finite_differences() {
    let mut rng = rng(102);
    for &alpha in &ALPHAS {
        for k in 0..100 {
            let parts = 3 + k % 4;
            let x = random_interior(parts, &mut rng, 0.05);
            let xd = &x.parts()[..parts - 1];
            let fd = fd_jacobian(centred_map(alpha, parts), xd, 1e-6).determinant().abs();
            let formula = jacobian_alpha(&x, alpha).unwrap();
            assert!(((fd - formula) / formula).abs() < 1e-5, "alpha {alpha}: {fd} vs {formula}");
        }
    }
}

#[test]
fn jacobian_ratio() {
    let mut rng = rng(103);
    for &alpha in &ALPHAS {
        for parts in 2..8 {
            let x = random_interior(parts, &mut rng, 0.01);
            let d = (parts - 1) as f64;
            let ratio = jacobian_alpha(&x, alpha).unwrap() / jacobian_simplex(&x, alpha).unwrap();
            let want = (parts as f64).powf(d + 0.5) / alpha.abs().powf(d);
            assert!(((ratio - want) / want).abs() < 1e-12);
        }
    }
}

#[test]
fn centred_map_oracle_agrees_with_forward_transform() {
    let mut rng = rng(104);
    for &alpha in &ALPHAS {
        let x = random_interior(5, &mut rng, 0.02);
        let y = alpha_transform(&x, alpha).unwrap();
        let oracle = centred_map(alpha, 5)(&x.parts()[..4]);
        for (a, b) in y.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

fn interior_composition(parts: usize) -> impl Strategy<Value = Composition> {
    prop::collection::vec(0.01f64..1.0, parts).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        Composition::new(raw.iter().map(|r| r / s).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn round_trip_is_identity(
        x in (2usize..10).prop_flat_map(interior_composition),
        alpha in prop::sample::select(ALPHAS.to_vec()),
    ) {
        let y = alpha_transform(&x, alpha).unwrap();
        let back = inverse_alpha_transform(&y, alpha).unwrap();
        prop_assert!(!back.outside_simplex);
        for (a, b) in back.parts.iter().zip(x.parts()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_transform_stays_in_simplex(
        x in (2usize..10).prop_flat_map(interior_composition),
        alpha in -3.0f64..3.0,
    ) {
        prop_assume!(alpha.abs() > 1e-3);
        let u = alpha_transform_simplex(&x, alpha).unwrap();
        prop_assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(u.iter().all(|&p| p > 0.0));
    }
}
