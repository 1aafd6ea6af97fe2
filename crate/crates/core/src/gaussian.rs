//! Covariance matrices, symplectic transforms, spectra, entropies and
//! partial measurements.
//!
//! Conventions: shot-noise units (vacuum variance 1), quadrature ordering
//! `(q1, p1, q2, p2, ...)`, and `Ω = ⊕ [[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, Matrix2, Schur, SymmetricEigen, SVD};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance on `|Σ - Σᵀ|`.
    pub symmetry: f64,
    /// Absolute slack allowed below 1 on each symplectic eigenvalue.
    pub physicality: f64,
    /// Allowed mismatch between the two moduli of a ±iν pair.
    pub pairing: f64,
    /// Smallest variance accepted as a homodyne pivot.
    pub degenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { symmetry: 1e-12, physicality: 1e-9, pairing: 1e-8, degenerate: 1e-12 }
    }
}

/// Quadrature selected by a homodyne measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    pub fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// A `2N x 2N` real symmetric matrix in shot-noise units.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<f64>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn symmetry_deviation(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m).max(1.0);
    let mut dev = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev / scale
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl CovarianceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, &Tolerances::default())
    }

    pub fn with_tolerance(m: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.nrows() == 0 || m.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: m.nrows() + m.nrows() % 2, got: m.nrows() });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unphysical("non-finite entry".into()));
        }
        let dev = symmetry_deviation(&m);
        if dev > tol.symmetry {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(Self { m })
    }

    pub fn from_row_slice(n_modes: usize, data: &[f64]) -> Result<Self> {
        let d = 2 * n_modes;
        if data.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: data.len() });
        }
        Self::new(DMatrix::from_row_slice(d, d, data))
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self { m: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    /// Single-mode thermal state with variance `v` on both quadratures.
    pub fn thermal(v: f64) -> Result<Self> {
        if !(v >= 1.0) {
            return Err(crate::error::invalid("v", format!("thermal variance must be >= 1, got {v}")));
        }
        Ok(Self { m: DMatrix::identity(2, 2) * v })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self { m: symmetrize(m) }
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// The 2x2 block coupling `mode_i` and `mode_j`.
    pub fn block(&self, mode_i: usize, mode_j: usize) -> Matrix2<f64> {
        let (r, c) = (2 * mode_i, 2 * mode_j);
        Matrix2::new(self.m[(r, c)], self.m[(r, c + 1)], self.m[(r + 1, c)], self.m[(r + 1, c + 1)])
    }

    /// Reduced state on the listed modes, in the listed order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        let n = self.n_modes();
        if modes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if let Some(&bad) = modes.iter().find(|&&k| k >= n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad + 1 });
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let d = idx.len();
        Ok(Self { m: DMatrix::from_fn(d, d, |i, j| self.m[(idx[i], idx[j])]) })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.m - &other.m))
    }

    pub fn is_physical(&self) -> Result<bool> {
        let tol = Tolerances::default();
        let nus = symplectic_eigenvalues_with(self, &tol)?;
        Ok(nus.iter().all(|&nu| nu >= 1.0 - tol.physicality))
    }
}

/// The symplectic form `Ω` on `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    m: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }
}

pub fn omega(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(crate::error::invalid("n_modes", "must be at least 1"));
    }
    Ok(SymplecticForm { m: omega_matrix(n_modes) })
}

fn omega_matrix(n_modes: usize) -> DMatrix<f64> {
    let d = 2 * n_modes;
    let mut m = DMatrix::zeros(d, d);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// A matrix `S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    m: DMatrix<f64>,
}

pub const SYMPLECTIC_TOLERANCE: f64 = 1e-10;

impl SymplecticOp {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let dev = symplectic_deviation(&m);
        if dev >= SYMPLECTIC_TOLERANCE {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(Self { m })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self { m: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &SymplecticOp) -> Result<SymplecticOp> {
        if self.m.nrows() != other.m.nrows() {
            return Err(Error::DimensionMismatch { expected: self.m.nrows(), got: other.m.nrows() });
        }
        Ok(SymplecticOp { m: &other.m * &self.m })
    }

    /// `‖S Ω Sᵀ − Ω‖∞` as an entrywise maximum.
    pub fn deviation(&self) -> f64 {
        symplectic_deviation(&self.m)
    }
}

fn symplectic_deviation(m: &DMatrix<f64>) -> f64 {
    let om = omega_matrix(m.nrows() / 2);
    max_abs(&(m * &om * m.transpose() - om))
}

pub fn direct_sum(a: &CovarianceMatrix, b: &CovarianceMatrix) -> CovarianceMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut m = DMatrix::zeros(da + db, da + db);
    m.view_mut((0, 0), (da, da)).copy_from(&a.m);
    m.view_mut((da, da), (db, db)).copy_from(&b.m);
    CovarianceMatrix { m }
}

pub fn apply_symplectic(s: &SymplecticOp, sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.m.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), got: s.m.nrows() });
    }
    let dev = s.deviation();
    if dev >= SYMPLECTIC_TOLERANCE {
        return Err(Error::NotSymplectic(dev));
    }
    Ok(CovarianceMatrix::from_matrix_unchecked(&s.m * &sigma.m * s.m.transpose()))
}

/// Beamsplitter of power transmittance `t` mixing `mode_i` and `mode_j`.
pub fn beamsplitter(t: f64, mode_i: usize, mode_j: usize, n_modes: usize) -> Result<SymplecticOp> {
    if !(0.0..=1.0).contains(&t) {
        return Err(crate::error::invalid("transmittance", format!("must lie in [0, 1], got {t}")));
    }
    if mode_i == mode_j {
        return Err(crate::error::invalid("mode_j", "beamsplitter needs two distinct modes"));
    }
    if mode_i >= n_modes || mode_j >= n_modes {
        return Err(Error::DimensionMismatch { expected: n_modes, got: mode_i.max(mode_j) + 1 });
    }
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for k in 0..2 {
        let (i, j) = (2 * mode_i + k, 2 * mode_j + k);
        m[(i, i)] = st;
        m[(i, j)] = sr;
        m[(j, i)] = -sr;
        m[(j, j)] = st;
    }
    Ok(SymplecticOp { m })
}

pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    symplectic_eigenvalues_with(sigma, &Tolerances::default())
}

/// Moduli of the eigenvalues of `iΩΣ`, paired and sorted descending.
pub fn symplectic_eigenvalues_with(sigma: &CovarianceMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let n = sigma.n_modes();
    let eig = SymmetricEigen::try_new(sigma.m.clone(), f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
    let moduli = if eig.eigenvalues.iter().all(|&l| l > 0.0) {
        // Singular values of the antisymmetric Σ^½ Ω Σ^½ come in equal pairs.
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let k = &root * omega_matrix(n) * &root;
        let svd = SVD::try_new(k, false, false, f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
        svd.singular_values.iter().copied().collect::<Vec<f64>>()
    } else {
        let m = omega_matrix(n) * &sigma.m;
        let schur = Schur::try_new(m, f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?;
        schur.complex_eigenvalues().iter().map(|z| z.norm()).collect()
    };
    let mut moduli = moduli;
    moduli.sort_by(|a, b| b.total_cmp(a));
    let mut nus = Vec::with_capacity(n);
    for pair in moduli.chunks_exact(2) {
        let mismatch = (pair[0] - pair[1]).abs() / pair[0].max(1.0);
        if mismatch >= tol.pairing {
            return Err(Error::EigenPairing(mismatch));
        }
        nus.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(nus)
}

/// Closed-form spectrum of `[[a·1, c·σz], [c·σz, b·1]]`.
pub fn two_mode_symplectic_eigenvalues(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let disc = (a + b).powi(2) - 4.0 * c * c;
    if !(disc >= 0.0) {
        return Err(Error::Unphysical(format!("(a+b)^2 < 4c^2 for a={a}, b={b}, c={c}")));
    }
    let z = disc.sqrt();
    Ok((0.5 * (z + (b - a)), 0.5 * (z - (b - a))))
}

/// Entropy in bits of a thermal mode with symplectic eigenvalue `nu`.
pub fn entropy_g(nu: f64) -> f64 {
    if nu - 1.0 < 1e-12 {
        return 0.0;
    }
    let plus = 0.5 * (nu + 1.0);
    let minus = 0.5 * (nu - 1.0);
    plus * plus.log2() - minus * minus.log2()
}

pub fn von_neumann_entropy(sigma: &CovarianceMatrix) -> Result<f64> {
    von_neumann_entropy_with(sigma, &Tolerances::default())
}

pub fn von_neumann_entropy_with(sigma: &CovarianceMatrix, tol: &Tolerances) -> Result<f64> {
    let nus = symplectic_eigenvalues_with(sigma, tol)?;
    entropy_of_spectrum(&nus, tol)
}

pub(crate) fn entropy_of_spectrum(nus: &[f64], tol: &Tolerances) -> Result<f64> {
    let mut s = 0.0;
    for &nu in nus {
        if nu < 1.0 - tol.physicality {
            return Err(Error::Unphysical(format!("symplectic eigenvalue {nu} < 1")));
        }
        s += entropy_g(nu);
    }
    Ok(s)
}

struct Split {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    b: Matrix2<f64>,
}

fn split_mode(sigma: &CovarianceMatrix, mode: usize) -> Result<Split> {
    let n = sigma.n_modes();
    if n < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    if mode >= n {
        return Err(Error::DimensionMismatch { expected: n, got: mode + 1 });
    }
    let rest: Vec<usize> = (0..2 * n).filter(|&i| i / 2 != mode).collect();
    let d = rest.len();
    let m = &sigma.m;
    Ok(Split {
        a: DMatrix::from_fn(d, d, |i, j| m[(rest[i], rest[j])]),
        c: DMatrix::from_fn(d, 2, |i, j| m[(rest[i], 2 * mode + j)]),
        b: sigma.block(mode, mode),
    })
}

/// State of the remaining modes after measuring one quadrature of `measured_mode`.
pub fn partial_homodyne(sigma: &CovarianceMatrix, measured_mode: usize, quadrature: Quadrature) -> Result<CovarianceMatrix> {
    partial_homodyne_with(sigma, measured_mode, quadrature, &Tolerances::default())
}

pub fn partial_homodyne_with(
    sigma: &CovarianceMatrix,
    measured_mode: usize,
    quadrature: Quadrature,
    tol: &Tolerances,
) -> Result<CovarianceMatrix> {
    let split = split_mode(sigma, measured_mode)?;
    let k = quadrature.offset();
    let v_b = split.b[(k, k)];
    if v_b <= tol.degenerate {
        return Err(Error::Degenerate(format!("measured variance {v_b} is not positive")));
    }
    let col = split.c.column(k);
    Ok(CovarianceMatrix::from_matrix_unchecked(split.a - (&col * col.transpose()) / v_b))
}

/// State of the remaining modes after measuring both quadratures of `measured_mode`.
pub fn partial_heterodyne(sigma: &CovarianceMatrix, measured_mode: usize) -> Result<CovarianceMatrix> {
    let split = split_mode(sigma, measured_mode)?;
    let inv = (split.b + Matrix2::identity())
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("Σ_B + 1 is singular".into()))?;
    let inv = DMatrix::from_column_slice(2, 2, inv.as_slice());
    Ok(CovarianceMatrix::from_matrix_unchecked(&split.a - &split.c * inv * split.c.transpose()))
}
