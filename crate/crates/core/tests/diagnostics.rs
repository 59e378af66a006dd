mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use zcmvn::diagnostics::{
    chi_square_discrepancy, expected_zero_table, mc_pvalue, simulate_compositions, zero_rates,
};
use zcmvn::gaussian::{mvn_logpdf, std_normal_log_tail};
use zcmvn::simplex::AlphaTransform;
use zcmvn::MvnParams;

fn isotropic(d: usize, var: f64) -> MvnParams {
    MvnParams::new(DVector::zeros(d), DMatrix::identity(d, d) * var).unwrap()
}

#[test]
fn isotropic_model_has_equal_rates() {
    for parts in [3, 4, 5] {
        let n = 200_000;
        let rates = zero_rates(&isotropic(parts - 1, 1.0), parts, n, 5).unwrap();
        let mean = rates.iter().sum::<f64>() / parts as f64;
        let se = (mean * (1.0 - mean) / n as f64).sqrt();
        for r in &rates {
            assert!((r - mean).abs() < 5.0 * se, "{rates:?}");
        }
    }
}

#[test]
fn tiny_covariance_at_an_interior_point_has_no_zeros() {
    let x = zcmvn::Composition::new(vec![0.3, 0.3, 0.4]).unwrap();
    let y = AlphaTransform::new(3, 1.0).unwrap().forward(&x).unwrap();
    let model = MvnParams::new(y, DMatrix::identity(2, 2) * 1e-12).unwrap();
    assert!(zero_rates(&model, 3, 10_000, 1).unwrap().iter().all(|&r| r == 0.0));
    let data = simulate_compositions(1000, &model, 3, 1).unwrap();
    assert_eq!(data.n_face(), 0);
}

fn rate_spread(n_sims: usize, seeds: std::ops::Range<u64>) -> f64 {
    let model = skewed_model();
    let draws: Vec<f64> = seeds.map(|s| zero_rates(&model, 3, n_sims, s).unwrap()[1]).collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    draws.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64
}

/// Standard error shrinks as `1/√n_sims`: the variance ratio between
/// `n = 10⁴` and `n = 10⁶` is close to 100.
#[test]
fn monte_carlo_error_scales_with_sample_size() {
    let small = rate_spread(10_000, 0..40);
    let large = rate_spread(1_000_000, 100..140);
    let ratio = small / large;
    // Ratio of two sample variances with 39 degrees of freedom each.
    assert!(ratio > 40.0 && ratio < 250.0, "ratio {ratio}");
}

#[test]
fn disjoint_seeds_agree_within_four_standard_errors() {
    let n = 1_000_000;
    let a = zero_rates(&skewed_model(), 3, n, 1).unwrap();
    let b = zero_rates(&skewed_model(), 3, n, 2).unwrap();
    for (p, q) in a.iter().zip(&b) {
        let se = ((p * (1.0 - p) + q * (1.0 - q)) / n as f64).sqrt();
        assert!((p - q).abs() < 4.0 * se.max(1e-9));
    }
}

#[test]
fn rates_match_simulated_datasets() {
    let n = 50_000;
    let rates = zero_rates(&skewed_model(), 3, n, 9).unwrap();
    let data = simulate_compositions(n, &skewed_model(), 3, 9).unwrap();
    let counts = data.zero_counts();
    for (r, c) in rates.iter().zip(counts) {
        assert_eq!((r * n as f64).round() as usize, c);
    }
}

#[test]
fn expected_table_is_linear_in_sample_size() {
    let a = expected_zero_table(&skewed_model(), 3, 28, 10_000, 3).unwrap();
    let b = expected_zero_table(&skewed_model(), 3, 56, 10_000, 3).unwrap();
    let z = expected_zero_table(&skewed_model(), 3, 0, 10_000, 3).unwrap();
    for i in 0..3 {
        assert_eq!(b.expected_counts[i], 2.0 * a.expected_counts[i]);
        assert_eq!(z.expected_counts[i], 0.0);
    }
}

/// Hand computation over a ten-part sparse table: three cells reach the 0.5
/// floor and the remaining seven are pooled.
#[test]
fn chi_square_over_a_sparse_table() {
    let observed = [0, 1, 0, 4, 0, 0, 0, 0, 0, 0];
    let expected = [0.593, 0.547, 2.106, 2.151, 0.002, 0.0, 0.0, 0.0, 0.137, 0.0];
    let want = (0.0f64 - 0.593).powi(2) / 0.593
        + (1.0f64 - 0.547).powi(2) / 0.547
        + (0.0f64 - 2.106).powi(2) / 2.106
        + (4.0f64 - 2.151).powi(2) / 2.151
        + (0.0f64 - 0.139).powi(2) / 0.139;
    let got = chi_square_discrepancy(&observed, &expected).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}

#[test]
fn impossible_zeros_give_the_smallest_pvalue() {
    // Component 1 almost never hits zero under the skewed model.
    let rates = zero_rates(&skewed_model(), 3, 100_000, 4).unwrap();
    assert!(rates[1] < 0.1);
    let p = mc_pvalue(&skewed_model(), 3, &[0, 200, 0], 200, 99, 10_000, 4).unwrap();
    assert_eq!(p, 1.0 / 100.0);
}

#[test]
fn pvalue_is_deterministic() {
    let data = simulate_compositions(100, &skewed_model(), 3, 12).unwrap();
    let obs = data.zero_counts();
    let a = mc_pvalue(&skewed_model(), 3, &obs, 100, 99, 10_000, 5).unwrap();
    let b = mc_pvalue(&skewed_model(), 3, &obs, 100, 99, 10_000, 5).unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0 && a <= 1.0);
}

#[test]
fn log_tail_is_monotone_and_complementary() {
    let mut last = 0.0;
    for k in -600..=600 {
        let a = k as f64 * 0.01;
        let v = std_normal_log_tail(a);
        assert!(v < last || k == -600);
        last = v;
        let total = v.exp() + std_normal_log_tail(-a).exp();
        assert!((total - 1.0).abs() < 1e-12, "a = {a}");
    }
}

#[test]
fn bivariate_density_integrates_to_one() {
    let params =
        MvnParams::from_slices(&[0.3, -0.2], &[&[0.5, 0.2], &[0.2, 0.8]]).unwrap();
    let h = 0.02;
    let mut total = 0.0;
    for i in 0..600 {
        for j in 0..600 {
            let y = DVector::from_vec(vec![-6.0 + (i as f64 + 0.5) * h, -6.0 + (j as f64 + 0.5) * h]);
            total += mvn_logpdf(&y, &params).unwrap().exp() * h * h;
        }
    }
    assert!((total - 1.0).abs() < 1e-3);
}
