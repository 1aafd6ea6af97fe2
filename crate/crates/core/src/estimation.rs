//! Parameter estimation from receiver voltages: shot-noise calibration,
//! variance route and covariance route to `(T, ξ)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::mc::SymbolRecord;
use crate::states::DetectionMode;

/// Streaming first and second moments of a pair `(x, y)` with exact merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CoMoments {
    pub n: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    pub fn merge(&mut self, o: &CoMoments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        self.m2x += o.m2x + dx * dx * na * nb / n;
        self.m2y += o.m2y + dy * dy * na * nb / n;
        self.cxy += o.cxy + dx * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.n += o.n;
    }

    pub fn var_x(&self) -> f64 {
        self.m2x / (self.n as f64 - 1.0)
    }

    pub fn var_y(&self) -> f64 {
        self.m2y / (self.n as f64 - 1.0)
    }

    pub fn cov(&self) -> f64 {
        self.cxy / (self.n as f64 - 1.0)
    }

    /// Non-centred `⟨x y⟩`.
    pub fn mean_xy(&self) -> f64 {
        self.cxy / self.n as f64 + self.mean_x * self.mean_y
    }

    /// Residual variance of `y` after linear regression on `x`.
    pub fn conditional_var_y(&self) -> f64 {
        let vx = self.var_x();
        if vx > 0.0 {
            self.var_y() - self.cov() * self.cov() / vx
        } else {
            self.var_y()
        }
    }
}

pub fn moments_of(values: &[f64]) -> CoMoments {
    let mut m = CoMoments::default();
    for &v in values {
        m.push(v, 0.0);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// V² per SNU.
    pub phi_hat: f64,
    /// Dark-noise variance, V².
    pub n_det_hat: f64,
    pub n_vacuum: usize,
    pub n_dark: usize,
}

impl Calibration {
    /// Identity calibration for data already in SNU.
    pub fn unit() -> Self {
        Self { phi_hat: 1.0, n_det_hat: 0.0, n_vacuum: 0, n_dark: 0 }
    }
}

pub fn calibrate_phi(vacuum_voltages: &[f64], dark_voltages: &[f64]) -> Result<Calibration> {
    for (what, f) in [("vacuum frame", vacuum_voltages), ("dark frame", dark_voltages)] {
        if f.len() < 2 {
            return Err(Error::InsufficientData { what, needed: 2, got: f.len() });
        }
    }
    let n_det = moments_of(dark_voltages).var_x();
    let phi = moments_of(vacuum_voltages).var_x() - n_det;
    if !(phi > 0.0) {
        return Err(Error::Calibration(format!("conversion factor {phi} is not positive")));
    }
    Ok(Calibration { phi_hat: phi, n_det_hat: n_det, n_vacuum: vacuum_voltages.len(), n_dark: dark_voltages.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationOptions {
    pub min_revealed: usize,
    /// Remove the calibrated dark-noise variance before converting to SNU.
    pub subtract_dark_noise: bool,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self { min_revealed: 1000, subtract_dark_noise: true }
    }
}

/// Per-quadrature accumulators: `x` is Alice's operator value `2q`, `y` Bob's voltage.
#[derive(Debug, Clone, Copy, Default)]
struct Branches {
    all: [CoMoments; 2],
    revealed: [CoMoments; 2],
}

fn accumulate(records: &[SymbolRecord], revealed_indices: &[usize]) -> Result<Branches> {
    let mut b = Branches::default();
    let mut next = revealed_indices.iter().peekable();
    for (i, r) in records.iter().enumerate() {
        let is_revealed = next.peek() == Some(&&i);
        if is_revealed {
            next.next();
        }
        let pairs = [(r.alice_q, r.bob_q, r.u_q), (r.alice_p, r.bob_p, r.u_p)];
        for (k, (a, bob, u)) in pairs.into_iter().enumerate() {
            if bob.is_none() {
                continue;
            }
            let u = u.ok_or_else(|| invalid("records", format!("record {i} has an outcome without a voltage")))?;
            b.all[k].push(2.0 * a, u);
            if is_revealed {
                b.revealed[k].push(2.0 * a, u);
            }
        }
    }
    if let Some(&bad) = next.next() {
        return Err(invalid("revealed_indices", format!("index {bad} is out of range or unsorted")));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub v_b: f64,
    pub v_cond: f64,
    pub v_b_q: f64,
    pub v_b_p: f64,
    pub v_cond_q: f64,
    pub v_cond_p: f64,
    pub se_v_b: f64,
    pub se_v_cond: f64,
    pub n_matched: u64,
    pub n_revealed: u64,
}

impl VarianceEstimate {
    /// `|V̂_q − V̂_p|` for total and conditional variances.
    pub fn asymmetry(&self) -> (f64, f64) {
        ((self.v_b_q - self.v_b_p).abs(), (self.v_cond_q - self.v_cond_p).abs())
    }
}

fn to_snu(var_u: f64, cal: &Calibration, opts: &EstimationOptions) -> f64 {
    let dark = if opts.subtract_dark_noise { cal.n_det_hat } else { 0.0 };
    (var_u - dark) / cal.phi_hat
}

fn branch_mean(vals: [Option<f64>; 2]) -> f64 {
    match vals {
        [Some(a), Some(b)] => 0.5 * (a + b),
        [Some(a), None] | [None, Some(a)] => a,
        [None, None] => f64::NAN,
    }
}

/// Total variance over all matched outcomes and conditional variance over the
/// revealed ones, both in SNU, averaged over the q and p branches.
pub fn estimate_variances(
    records: &[SymbolRecord],
    revealed_indices: &[usize],
    cal: &Calibration,
    opts: &EstimationOptions,
) -> Result<VarianceEstimate> {
    let b = accumulate(records, revealed_indices)?;
    let n_rev: u64 = b.revealed.iter().map(|m| m.n).sum();
    let n_all: u64 = b.all.iter().map(|m| m.n).sum();
    if (n_rev as usize) < opts.min_revealed.max(3) {
        return Err(Error::InsufficientData { what: "revealed symbols", needed: opts.min_revealed.max(3), got: n_rev as usize });
    }
    let vb = |k: usize| (b.all[k].n > 1).then(|| to_snu(b.all[k].var_y(), cal, opts));
    let vc = |k: usize| (b.revealed[k].n > 2).then(|| to_snu(b.revealed[k].conditional_var_y(), cal, opts));
    let v_b = branch_mean([vb(0), vb(1)]);
    let v_cond = branch_mean([vc(0), vc(1)]);
    let dark = if opts.subtract_dark_noise { cal.n_det_hat / cal.phi_hat } else { 0.0 };
    Ok(VarianceEstimate {
        v_b,
        v_cond,
        v_b_q: vb(0).unwrap_or(f64::NAN),
        v_b_p: vb(1).unwrap_or(f64::NAN),
        v_cond_q: vc(0).unwrap_or(f64::NAN),
        v_cond_p: vc(1).unwrap_or(f64::NAN),
        se_v_b: (v_b + dark) * (2.0 / n_all as f64).sqrt(),
        se_v_cond: (v_cond + dark) * (2.0 / n_rev as f64).sqrt(),
        n_matched: n_all,
        n_revealed: n_rev,
    })
}

/// `ξ̂ = μ(V̂_cond − 1)`, `T̂ = μ(V̂_B − V̂_cond)/V_mod`.
pub fn estimate_t_xi(v_b_hat: f64, v_cond_hat: f64, v_mod: f64, detection: DetectionMode) -> Result<(f64, f64)> {
    if !(v_mod > 0.0) {
        return Err(invalid("v_mod", format!("must be positive, got {v_mod}")));
    }
    let mu = detection.mu();
    Ok((mu * (v_b_hat - v_cond_hat) / v_mod, mu * (v_cond_hat - 1.0)))
}

pub fn snr_from_variances(v_b_hat: f64, v_cond_hat: f64) -> f64 {
    v_b_hat / v_cond_hat - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbEstimate {
    pub a_eb: f64,
    pub b_eb: f64,
    pub c_eb: f64,
    pub b_pm: f64,
    pub c_pm: f64,
    pub c_pm_q: f64,
    pub c_pm_p: f64,
    pub se_b_pm: f64,
    pub se_c_pm: f64,
}

impl EbEstimate {
    /// `T = μ (c_PM / V_mod)²` and `ξ = b_EB − T V_mod − 1`, with standard errors.
    pub fn t_xi(&self, v_mod: f64, detection: DetectionMode) -> ((f64, f64), (f64, f64)) {
        let mu = detection.mu();
        let t = mu * (self.c_pm / v_mod).powi(2);
        let se_t = 2.0 * mu * self.c_pm.abs() * self.se_c_pm / (v_mod * v_mod);
        let xi = self.b_eb - t * v_mod - 1.0;
        let se_xi = ((mu * self.se_b_pm).powi(2) + (v_mod * se_t).powi(2)).sqrt();
        ((t, se_t), (xi, se_xi))
    }
}

/// Entanglement-based coefficients estimated directly from data.
pub fn estimate_covariance_eb(
    records: &[SymbolRecord],
    revealed_indices: &[usize],
    cal: &Calibration,
    v_mod: f64,
    detection: DetectionMode,
    opts: &EstimationOptions,
) -> Result<EbEstimate> {
    if !(v_mod > 0.0) {
        return Err(invalid("v_mod", format!("must be positive, got {v_mod}")));
    }
    let b = accumulate(records, revealed_indices)?;
    let n_rev: u64 = b.revealed.iter().map(|m| m.n).sum();
    if (n_rev as usize) < opts.min_revealed.max(3) {
        return Err(Error::InsufficientData { what: "revealed symbols", needed: opts.min_revealed.max(3), got: n_rev as usize });
    }
    let mu = detection.mu();
    let sp = cal.phi_hat.sqrt();
    let bpm = |k: usize| (b.all[k].n > 1).then(|| to_snu(b.all[k].var_y(), cal, opts));
    let cpm = |k: usize| (b.revealed[k].n > 0).then(|| b.revealed[k].mean_xy() / sp);
    let b_pm = branch_mean([bpm(0), bpm(1)]);
    let c_pm = branch_mean([cpm(0), cpm(1)]);
    let n_all: u64 = b.all.iter().map(|m| m.n).sum();
    let se_c = ((v_mod * b_pm + c_pm * c_pm) / n_rev as f64).sqrt();
    Ok(EbEstimate {
        a_eb: v_mod + 1.0,
        b_eb: mu * b_pm - mu + 1.0,
        c_eb: (mu * (v_mod + 2.0) / v_mod).sqrt() * c_pm,
        b_pm,
        c_pm,
        c_pm_q: cpm(0).unwrap_or(f64::NAN),
        c_pm_p: cpm(1).unwrap_or(f64::NAN),
        se_b_pm: b_pm * (2.0 / n_all as f64).sqrt(),
        se_c_pm: se_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouteEstimate {
    pub t: f64,
    pub xi: f64,
    pub se_t: f64,
    pub se_xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleCounts {
    pub vacuum: usize,
    pub dark: usize,
    pub matched: u64,
    pub revealed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Symmetry {
    pub v_b_q: f64,
    pub v_b_p: f64,
    pub v_cond_q: f64,
    pub v_cond_p: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub phi_hat: f64,
    pub n_det_hat: f64,
    pub t_hat: f64,
    pub xi_hat: f64,
    pub se_t: f64,
    pub se_xi: f64,
    pub a_eb: f64,
    pub b_eb: f64,
    pub c_eb: f64,
    pub snr_hat: f64,
    pub v_b_hat: f64,
    pub v_cond_hat: f64,
    pub covariance_route: RouteEstimate,
    /// Both routes agree on `T` and `ξ` within their combined standard error.
    pub routes_agree: bool,
    pub symmetry: Symmetry,
    pub n_used: SampleCounts,
    pub warnings: Vec<String>,
}

/// Full pipeline on calibrated data. Negative `ξ̂` within three standard
/// errors is kept with a warning; further below zero it is an error.
pub fn estimate(
    records: &[SymbolRecord],
    revealed_indices: &[usize],
    cal: &Calibration,
    v_mod: f64,
    detection: DetectionMode,
    opts: &EstimationOptions,
) -> Result<EstimationResult> {
    let var = estimate_variances(records, revealed_indices, cal, opts)?;
    let (t_hat, xi_hat) = estimate_t_xi(var.v_b, var.v_cond, v_mod, detection)?;
    let mu = detection.mu();
    let se_xi = mu * var.se_v_cond;
    let se_t = mu * (var.se_v_b.powi(2) + var.se_v_cond.powi(2)).sqrt() / v_mod;
    let eb = estimate_covariance_eb(records, revealed_indices, cal, v_mod, detection, opts)?;
    let ((t2, se_t2), (xi2, se_xi2)) = eb.t_xi(v_mod, detection);
    let routes_agree = (t_hat - t2).abs() <= (se_t * se_t + se_t2 * se_t2).sqrt()
        && (xi_hat - xi2).abs() <= (se_xi * se_xi + se_xi2 * se_xi2).sqrt();

    let mut warnings = Vec::new();
    if xi_hat < 0.0 {
        if xi_hat < -3.0 * se_xi {
            return Err(Error::NegativeExcessNoise { xi: xi_hat, se: se_xi });
        }
        warnings.push(format!("negative excess noise estimate {xi_hat:.6} (within 3 standard errors of zero)"));
    }
    if t_hat > 1.0 + 3.0 * se_t {
        warnings.push(format!("transmittance estimate {t_hat:.6} exceeds 1"));
    }
    if !routes_agree {
        warnings.push("variance and covariance routes disagree beyond their combined standard error".into());
    }
    let (asym_b, asym_c) = var.asymmetry();
    let max_abs_diff = if asym_b.is_nan() { asym_c } else { asym_b.max(asym_c) };
    // five standard errors of a single-branch difference
    if max_abs_diff > 10.0 * var.se_v_b.max(var.se_v_cond) {
        warnings.push(format!("q/p branches differ by {max_abs_diff:.6} SNU; symmetric-channel assumption may not hold"));
    }

    Ok(EstimationResult {
        phi_hat: cal.phi_hat,
        n_det_hat: cal.n_det_hat,
        t_hat,
        xi_hat,
        se_t,
        se_xi,
        a_eb: eb.a_eb,
        b_eb: eb.b_eb,
        c_eb: eb.c_eb,
        snr_hat: snr_from_variances(var.v_b, var.v_cond),
        v_b_hat: var.v_b,
        v_cond_hat: var.v_cond,
        covariance_route: RouteEstimate { t: t2, xi: xi2, se_t: se_t2, se_xi: se_xi2 },
        routes_agree,
        symmetry: Symmetry { v_b_q: var.v_b_q, v_b_p: var.v_b_p, v_cond_q: var.v_cond_q, v_cond_p: var.v_cond_p, max_abs_diff },
        n_used: SampleCounts { vacuum: cal.n_vacuum, dark: cal.n_dark, matched: var.n_matched, revealed: var.n_revealed },
        warnings,
    })
}
