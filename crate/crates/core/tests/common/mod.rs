//! Independent oracles shared by the integration tests. Nothing here calls
//! into the Cholesky-based kernels of the crate.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zcmvn::Composition;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = intervals.iter().map(|i| i.2 .0).sum();
        let err: f64 = intervals.iter().map(|i| i.2 .1).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            return total;
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
    panic!("quadrature did not converge");
}

/// `∫_a^∞ f`, through `t = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let t = a + s / (1.0 - s);
            f(t) / ((1.0 - s) * (1.0 - s))
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// Normal density from an explicitly inverted covariance.
pub fn naive_mvn_pdf(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = y.len() as i32;
    let inv = cov.clone().try_inverse().expect("invertible");
    let r = y - mean;
    let q = (r.transpose() * inv * &r)[(0, 0)];
    (-0.5 * q).exp() / ((2.0 * PI).powi(d) * cov.determinant()).sqrt()
}

pub fn naive_mvn_logpdf(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = y.len() as i32;
    let inv = cov.clone().try_inverse().expect("invertible");
    let r = y - mean;
    let q = (r.transpose() * inv * &r)[(0, 0)];
    -0.5 * q - 0.5 * ((2.0 * PI).powi(d) * cov.determinant()).ln()
}

/// Line integral of the normal density along `{t ŷ : t ≥ |y|}`.
pub fn ray_integral(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let c1 = y.norm();
    let dir = y / c1;
    integrate_to_infinity(|t| naive_mvn_pdf(&(&dir * t), mean, cov), c1, 1e-12)
}

pub fn random_spd<R: Rng>(d: usize, rng: &mut R, ridge: f64, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0) * scale);
    &a * a.transpose() + DMatrix::identity(d, d) * ridge
}

/// Random composition with every part at least `floor`.
pub fn random_interior<R: Rng>(parts: usize, rng: &mut R, floor: f64) -> Composition {
    let raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let slack = 1.0 - floor * parts as f64;
    Composition::new(raw.iter().map(|r| floor + slack * r / sum).collect()).unwrap()
}

/// Random composition with exactly one zero part, at `zero`.
pub fn random_face<R: Rng>(parts: usize, zero: usize, rng: &mut R) -> Composition {
    let mut raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.05..1.0)).collect();
    raw[zero] = 0.0;
    zcmvn::simplex::closure(&raw).unwrap()
}

pub fn random_unit<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Central-difference Jacobian of `map: R^n -> R^n`.
pub fn fd_jacobian<F: Fn(&[f64]) -> Vec<f64>>(map: F, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[k] += h;
        down[k] -= h;
        let (fu, fd) = (map(&up), map(&down));
        for i in 0..n {
            j[(i, k)] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    j
}

/// The stay-in-the-simplex map written on the first d coordinates, with
/// the last part implied by the unit sum.
pub fn simplex_map(alpha: f64) -> impl Fn(&[f64]) -> Vec<f64> {
    move |xd: &[f64]| {
        let last = 1.0 - xd.iter().sum::<f64>();
        let s: f64 = xd.iter().map(|x| x.powf(alpha)).sum::<f64>() + last.powf(alpha);
        xd.iter().map(|x| x.powf(alpha) / s).collect()
    }
}

/// The centred α-transformation on the first d coordinates, with the
/// Helmert rows written out independently of the crate.
pub fn centred_map(alpha: f64, parts: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    move |xd: &[f64]| {
        let mut x = xd.to_vec();
        x.push(1.0 - xd.iter().sum::<f64>());
        let s: f64 = x.iter().map(|v| v.powf(alpha)).sum();
        let z: Vec<f64> = x
            .iter()
            .map(|v| (parts as f64 * v.powf(alpha) / s - 1.0) / alpha)
            .collect();
        (1..parts)
            .map(|i| {
                let k = i as f64;
                let head: f64 = z[..i].iter().sum();
                (head - k * z[i]) / (k * (k + 1.0)).sqrt()
            })
            .collect()
    }
}

/// Closed-form maximum-likelihood mean and covariance (divisor n).
pub fn mvn_mle(points: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let d = points[0].len();
    let n = points.len() as f64;
    let mean = points.iter().fold(DVector::zeros(d), |a, p| a + p) / n;
    let mut cov = DMatrix::zeros(d, d);
    for p in points {
        let r = p - &mean;
        cov += &r * r.transpose();
    }
    (mean, cov / n)
}

/// Latent parameters of a model with heavy boundary mass on the third part.
pub fn skewed_model_mean() -> [f64; 2] {
    [0.625, 0.821]
}

pub fn skewed_model_cov() -> [[f64; 2]; 2] {
    [[0.149, -0.200], [-0.200, 1.523]]
}

pub fn skewed_model() -> zcmvn::MvnParams {
    let m = skewed_model_mean();
    let c = skewed_model_cov();
    zcmvn::MvnParams::from_slices(&m, &[&c[0], &c[1]]).unwrap()
}
