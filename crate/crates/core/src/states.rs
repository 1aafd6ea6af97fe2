//! Canonical protocol states. Mode order is always `(Alice, Bob, ancillas...)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{apply_symplectic, beamsplitter, direct_sum, CovarianceMatrix};

/// Gaussian modulation with quadrature-operator variance `v_mod`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    pub v_mod: f64,
}

impl ModulationSpec {
    pub fn new(v_mod: f64) -> Result<Self> {
        if !(v_mod >= 0.0 && v_mod.is_finite()) {
            return Err(invalid("v_mod", format!("must be finite and >= 0, got {v_mod}")));
        }
        Ok(Self { v_mod })
    }

    /// `V = V_mod + 1`.
    pub fn v(&self) -> f64 {
        self.v_mod + 1.0
    }

    /// Variance of each sampled component, `V_mod / 4`.
    pub fn component_variance(&self) -> f64 {
        self.v_mod / 4.0
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.v_mod / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    Homodyne,
    Heterodyne,
}

impl DetectionMode {
    pub fn mu(self) -> f64 {
        match self {
            DetectionMode::Homodyne => 1.0,
            DetectionMode::Heterodyne => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectionMode::Homodyne => "homodyne",
            DetectionMode::Heterodyne => "heterodyne",
        }
    }
}

/// Split of the total link into a channel part and a receiver part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDecomposition {
    pub t_ch: f64,
    pub eta_coup: f64,
    pub eta_det: f64,
    pub xi_ch: f64,
    pub xi_rec: f64,
}

impl ChannelDecomposition {
    pub fn t_rec(&self) -> f64 {
        self.eta_coup * self.eta_det
    }
}

/// Total transmittance and output-referred excess noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub t: f64,
    pub xi: f64,
    pub decomposition: Option<ChannelDecomposition>,
}

impl ChannelParams {
    pub fn new(t: f64, xi: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(invalid("t", format!("transmittance must lie in (0, 1], got {t}")));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(invalid("xi", format!("excess noise must be finite and >= 0, got {xi}")));
        }
        Ok(Self { t, xi, decomposition: None })
    }

    pub fn from_decomposition(d: ChannelDecomposition) -> Result<Self> {
        for (name, v) in [("t_ch", d.t_ch), ("eta_coup", d.eta_coup), ("eta_det", d.eta_det)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        for (name, v) in [("xi_ch", d.xi_ch), ("xi_rec", d.xi_rec)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        let mut c = Self::new(d.t_ch * d.t_rec(), d.xi_ch + d.xi_rec)?;
        c.decomposition = Some(d);
        Ok(c)
    }
}

/// `[[a·1, c·σz], [c·σz, b·1]]`.
pub fn standard_form(a: f64, b: f64, c: f64) -> CovarianceMatrix {
    CovarianceMatrix::from_matrix_unchecked(DMatrix::from_row_slice(
        4,
        4,
        &[a, 0., c, 0., 0., a, 0., -c, c, 0., b, 0., 0., -c, 0., b],
    ))
}

/// Two-mode squeezed vacuum with variance `v` on each mode.
pub fn tmsvs(v: f64) -> Result<CovarianceMatrix> {
    if !(v >= 1.0 && v.is_finite()) {
        return Err(invalid("v", format!("must be finite and >= 1, got {v}")));
    }
    Ok(standard_form(v, v, (v * v - 1.0).sqrt()))
}

fn check_channel(sigma: &CovarianceMatrix, t: f64, xi: f64) -> Result<()> {
    if sigma.n_modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: sigma.n_modes() });
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("t", format!("transmittance must lie in (0, 1], got {t}")));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(invalid("xi", format!("excess noise must be finite and >= 0, got {xi}")));
    }
    Ok(())
}

/// Sends Bob's mode through a lossy channel with output excess noise `xi`.
pub fn noisy_channel(sigma: &CovarianceMatrix, t: f64, xi: f64) -> Result<CovarianceMatrix> {
    check_channel(sigma, t, xi)?;
    let mut m = sigma.matrix().clone();
    let st = t.sqrt();
    for i in 0..2 {
        for j in 2..4 {
            m[(i, j)] *= st;
            m[(j, i)] *= st;
        }
    }
    for i in 2..4 {
        for j in 2..4 {
            m[(i, j)] *= t;
        }
        m[(i, i)] += 1.0 - t + xi;
    }
    Ok(CovarianceMatrix::from_matrix_unchecked(m))
}

/// Same channel built by mixing Bob with a thermal ancilla of variance
/// `1 + xi/(1-t)` on a beamsplitter. Falls back to the closed form at `t = 1`.
pub fn noisy_channel_dilated(sigma: &CovarianceMatrix, t: f64, xi: f64) -> Result<CovarianceMatrix> {
    check_channel(sigma, t, xi)?;
    if t == 1.0 {
        return noisy_channel(sigma, t, xi);
    }
    let ancilla = CovarianceMatrix::thermal(1.0 + xi / (1.0 - t))?;
    let total = direct_sum(sigma, &ancilla);
    let out = apply_symplectic(&beamsplitter(t, 1, 2, 3)?, &total)?;
    out.reduced(&[0, 1])
}

/// Splits Bob's mode on a balanced beamsplitter with vacuum, giving modes `(A, B1, B2)`.
pub fn heterodyne_split(sigma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if sigma.n_modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: sigma.n_modes() });
    }
    let total = direct_sum(sigma, &CovarianceMatrix::vacuum(1));
    apply_symplectic(&beamsplitter(0.5, 1, 2, 3)?, &total)
}

fn check_alice_block(sigma: &CovarianceMatrix, expected: f64, name: &'static str) -> Result<()> {
    if sigma.n_modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: sigma.n_modes() });
    }
    let blk = sigma.block(0, 0);
    let tol = 1e-9 * expected.abs().max(1.0);
    let ok = (blk[(0, 0)] - expected).abs() <= tol
        && (blk[(1, 1)] - expected).abs() <= tol
        && blk[(0, 1)].abs() <= tol;
    if ok {
        Ok(())
    } else {
        Err(invalid(name, format!("Alice block must equal {expected}·1, got {blk}")))
    }
}

/// Rescales Alice's side of a prepare-and-measure matrix into the
/// entanglement-based picture: Alice block `(V_mod+1)·1`, correlations scaled
/// by `√((V_mod+2)/V_mod)` with the sign flipped on p.
pub fn pm_to_eb(sigma_pm: &CovarianceMatrix, v_mod: f64) -> Result<CovarianceMatrix> {
    if !(v_mod > 0.0 && v_mod.is_finite()) {
        return Err(invalid("v_mod", format!("must be > 0, got {v_mod}")));
    }
    check_alice_block(sigma_pm, v_mod, "sigma_pm")?;
    let s = ((v_mod + 2.0) / v_mod).sqrt();
    Ok(rescale_alice(sigma_pm, v_mod + 1.0, [s, -s]))
}

pub fn eb_to_pm(sigma_eb: &CovarianceMatrix, v_mod: f64) -> Result<CovarianceMatrix> {
    if !(v_mod > 0.0 && v_mod.is_finite()) {
        return Err(invalid("v_mod", format!("must be > 0, got {v_mod}")));
    }
    check_alice_block(sigma_eb, v_mod + 1.0, "sigma_eb")?;
    let s = (v_mod / (v_mod + 2.0)).sqrt();
    Ok(rescale_alice(sigma_eb, v_mod, [s, -s]))
}

fn rescale_alice(sigma: &CovarianceMatrix, alice_var: f64, row_scale: [f64; 2]) -> CovarianceMatrix {
    let mut m = sigma.matrix().clone();
    for (i, &k) in row_scale.iter().enumerate() {
        for j in 2..4 {
            m[(i, j)] *= k;
            m[(j, i)] *= k;
        }
    }
    m[(0, 0)] = alice_var;
    m[(1, 1)] = alice_var;
    m[(0, 1)] = 0.0;
    m[(1, 0)] = 0.0;
    CovarianceMatrix::from_matrix_unchecked(m)
}

/// Analytic prepare-and-measure matrix for Bob's homodyne data.
pub fn pm_matrix(v_mod: f64, t: f64, xi: f64) -> CovarianceMatrix {
    let c = t.sqrt() * v_mod;
    let b = t * v_mod + 1.0 + xi;
    CovarianceMatrix::from_matrix_unchecked(DMatrix::from_row_slice(
        4,
        4,
        &[v_mod, 0., c, 0., 0., v_mod, 0., c, c, 0., b, 0., 0., c, 0., b],
    ))
}
