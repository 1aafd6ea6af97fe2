#![allow(dead_code)]

use cvqkd_core::gaussian::CovarianceMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// Williamson spectrum through the symmetric matrix `√Σ Ωᵀ Σ Ω √Σ`, whose
/// eigenvalues are `ν²`, each twice.
pub fn williamson_oracle(sigma: &DMatrix<f64>) -> Vec<f64> {
    let d = sigma.nrows();
    let mut om = DMatrix::zeros(d, d);
    for k in 0..d / 2 {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let m = &root * om.transpose() * sigma * &om * &root;
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Two-mode spectrum from the invariants `Δ = a² + b² − 2c²` and `det Σ = (ab − c²)²`.
pub fn invariant_oracle(a: f64, b: f64, c: f64) -> (f64, f64) {
    let delta = a * a + b * b - 2.0 * c * c;
    let det = (a * b - c * c).powi(2);
    let root = (delta * delta - 4.0 * det).max(0.0).sqrt();
    (((delta + root) / 2.0).sqrt(), ((delta - root) / 2.0).sqrt())
}

pub fn entropy_oracle(nu: f64) -> f64 {
    let x = (nu + 1.0) / 2.0;
    let y = (nu - 1.0) / 2.0;
    let t = if y > 0.0 { y * y.ln() } else { 0.0 };
    (x * x.ln() - t) / std::f64::consts::LN_2
}

pub fn rotation(theta: f64, mode: usize, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (c, s) = (theta.cos(), theta.sin());
    let k = 2 * mode;
    m[(k, k)] = c;
    m[(k, k + 1)] = s;
    m[(k + 1, k)] = -s;
    m[(k + 1, k + 1)] = c;
    m
}

pub fn squeezer(r: f64, mode: usize, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * mode, 2 * mode)] = (-r).exp();
    m[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    m
}

pub fn mixer(t: f64, i: usize, j: usize, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    for k in 0..2 {
        m[(2 * i + k, 2 * i + k)] = a;
        m[(2 * i + k, 2 * j + k)] = b;
        m[(2 * j + k, 2 * i + k)] = -b;
        m[(2 * j + k, 2 * j + k)] = a;
    }
    m
}

/// Physical two-mode state `S (ν₁·1 ⊕ ν₂·1) Sᵀ` with a random symplectic `S`.
#[derive(Debug, Clone)]
pub struct RandomState {
    pub nus: (f64, f64),
    pub sigma: DMatrix<f64>,
}

pub fn two_mode_state() -> impl Strategy<Value = RandomState> {
    (
        1.0..8.0f64,
        1.0..8.0f64,
        proptest::array::uniform4(0.0..std::f64::consts::TAU),
        proptest::array::uniform2(-1.0..1.0f64),
        0.0..1.0f64,
    )
        .prop_map(|(n1, n2, th, r, t)| {
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![n1, n1, n2, n2]));
            let s = rotation(th[0], 0, 2)
                * squeezer(r[0], 0, 2)
                * mixer(t, 0, 1, 2)
                * rotation(th[1], 1, 2)
                * squeezer(r[1], 1, 2)
                * rotation(th[2], 0, 2)
                * rotation(th[3], 1, 2);
            let sigma = &s * d * s.transpose();
            RandomState { nus: (n1, n2), sigma: (&sigma + sigma.transpose()) * 0.5 }
        })
}

/// Standard-form coefficients of a physical two-mode state: TMSVS(V) through a
/// lossy, noisy channel, optionally with extra thermal noise on Alice.
pub fn standard_form_triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (1.0..60.0f64, 0.001..1.0f64, 0.0..2.0f64, 0.0..2.0f64).prop_map(|(v, t, xi, extra)| {
        (v + extra, t * (v - 1.0) + 1.0 + xi, (t * (v * v - 1.0)).sqrt())
    })
}

pub fn cov(m: DMatrix<f64>) -> CovarianceMatrix {
    CovarianceMatrix::new(m).expect("valid covariance matrix")
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Deterministic sample of `n` values from a strategy.
pub fn draw<S: Strategy>(strategy: S, n: usize, seed: u8) -> Vec<S::Value> {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..n).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}
