//! SNR, mutual information, Holevo bounds and the asymptotic secret-key rate
//! under reverse reconciliation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{
    apply_symplectic, beamsplitter, direct_sum, entropy_g, partial_heterodyne, partial_homodyne,
    two_mode_symplectic_eigenvalues, von_neumann_entropy, CovarianceMatrix, Quadrature, Tolerances,
};
use crate::noise::NoiseBudget;
use crate::states::{standard_form, tmsvs, ChannelParams, DetectionMode, ModulationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub modulation: ModulationSpec,
    pub detection: DetectionMode,
    pub beta: f64,
    pub fer: f64,
    pub nu_disclosed: f64,
    pub symbol_rate: f64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        ModulationSpec::new(self.modulation.v_mod)?;
        for (name, v) in [("beta", self.beta), ("fer", self.fer), ("nu_disclosed", self.nu_disclosed)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.symbol_rate >= 0.0 && self.symbol_rate.is_finite()) {
            return Err(invalid("symbol_rate", format!("must be finite and >= 0, got {}", self.symbol_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TrustAssumption {
    #[default]
    Strict,
    Loose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HolevoRoute {
    #[default]
    Purification,
    Cloner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reconciliation {
    #[default]
    Reverse,
    Direct,
}

/// Coefficients of `[[a·1, c·σz], [c·σz, b·1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn snr(channel: &ChannelParams, modulation: &ModulationSpec, detection: DetectionMode) -> f64 {
    let mu = detection.mu();
    (channel.t * modulation.v_mod / mu) / (1.0 + channel.xi / mu)
}

pub fn mutual_information(snr_value: f64, detection: DetectionMode) -> f64 {
    0.5 * detection.mu() * (1.0 + snr_value).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeRate {
    pub rate: f64,
    /// False when no positive fixed point exists and `rate` is 0.
    pub solvable: bool,
}

/// Largest non-negative solution of `R = β (μ/2) log2(1 + 2 R Eb/N0)`.
pub fn implicit_code_rate(beta: f64, detection: DetectionMode, eb_n0: f64) -> Result<CodeRate> {
    if !(0.0..1.0).contains(&beta) {
        return Err(invalid("beta", format!("must lie in [0, 1), got {beta}")));
    }
    if !(eb_n0 >= 0.0 && eb_n0.is_finite()) {
        return Err(invalid("eb_n0", format!("must be finite and >= 0, got {eb_n0}")));
    }
    let k = 0.5 * beta * detection.mu();
    let f = |r: f64| k * (1.0 + 2.0 * r * eb_n0).log2() - r;
    if 2.0 * k * eb_n0 <= std::f64::consts::LN_2 {
        return Ok(CodeRate { rate: 0.0, solvable: false });
    }
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Degenerate("code-rate bracket did not close".into()));
        }
    }
    let mut lo = hi / 2.0;
    while lo > 1e-300 && f(lo) <= 0.0 {
        lo /= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CodeRate { rate: 0.5 * (lo + hi), solvable: true })
}

/// Entanglement-based Alice–Bob matrix after the channel.
pub fn covariance_ab(channel: &ChannelParams, modulation: &ModulationSpec) -> (CovarianceMatrix, StandardForm) {
    let f = abc(channel.t, channel.xi, modulation.v());
    (standard_form(f.a, f.b, f.c), f)
}

fn abc(t: f64, xi: f64, v: f64) -> StandardForm {
    StandardForm { a: v, b: t * (v - 1.0) + 1.0 + xi, c: (t * (v * v - 1.0)).sqrt() }
}

/// Holevo bound from the standard-form coefficients of `Σ_AB`.
pub fn holevo_from_standard_form(f: StandardForm, detection: DetectionMode) -> Result<f64> {
    let StandardForm { a, b, c } = f;
    let tol = Tolerances::default();
    let (nu1, nu2) = two_mode_symplectic_eigenvalues(a, b, c)?;
    let nu3 = match detection {
        DetectionMode::Homodyne => {
            if !(b > 0.0) {
                return Err(Error::Degenerate(format!("Bob variance {b} is not positive")));
            }
            (a * (a - c * c / b)).sqrt()
        }
        DetectionMode::Heterodyne => a - c * c / (b + 1.0),
    };
    for nu in [nu1, nu2, nu3] {
        if !(nu >= 1.0 - tol.physicality) {
            return Err(Error::Unphysical(format!("symplectic eigenvalue {nu} < 1 for a={a}, b={b}, c={c}")));
        }
    }
    Ok(entropy_g(nu1) + entropy_g(nu2) - entropy_g(nu3))
}

/// Holevo bound via `S_E = S_AB` and Bob's conditional state.
pub fn holevo_purification(channel: &ChannelParams, modulation: &ModulationSpec, detection: DetectionMode) -> Result<f64> {
    let (_, f) = covariance_ab(channel, modulation);
    holevo_from_standard_form(f, detection)
}

/// Four-mode state `(A, B, E1, E2)` after Eve's beamsplitter.
pub fn cloner_state(channel: &ChannelParams, modulation: &ModulationSpec) -> Result<CovarianceMatrix> {
    if channel.t >= 1.0 {
        return Err(Error::ClonerUndefined);
    }
    let w = channel.xi / (1.0 - channel.t) + 1.0;
    let total = direct_sum(&tmsvs(modulation.v())?, &tmsvs(w)?);
    apply_symplectic(&beamsplitter(channel.t, 1, 2, 4)?, &total)
}

/// Holevo bound from the explicit entangling-cloner attack.
pub fn holevo_cloner(channel: &ChannelParams, modulation: &ModulationSpec, detection: DetectionMode) -> Result<f64> {
    let state = cloner_state(channel, modulation)?;
    let eve = state.reduced(&[2, 3])?;
    let (nu1, nu2) = two_mode_symplectic_eigenvalues(eve.get(0, 0), eve.get(2, 2), eve.get(0, 2))?;
    let s_e = entropy_g(nu1) + entropy_g(nu2);
    let bob_eve = state.reduced(&[1, 2, 3])?;
    let cond = match detection {
        DetectionMode::Homodyne => partial_homodyne(&bob_eve, 0, Quadrature::Q)?,
        DetectionMode::Heterodyne => partial_heterodyne(&bob_eve, 0)?,
    };
    Ok(s_e - von_neumann_entropy(&cond)?)
}

/// Channel seen by Eve: everything for `Strict`, only the channel part for `Loose`.
pub fn trusted_channel(channel: &ChannelParams, assumption: TrustAssumption) -> Result<ChannelParams> {
    match (assumption, channel.decomposition) {
        (TrustAssumption::Strict, Some(d)) => ChannelParams::new(d.t_ch * d.t_rec(), d.xi_ch + d.xi_rec),
        (TrustAssumption::Strict, None) => ChannelParams::new(channel.t, channel.xi),
        (TrustAssumption::Loose, Some(d)) => ChannelParams::new(d.t_ch, d.xi_ch),
        (TrustAssumption::Loose, None) => Err(Error::MissingDecomposition),
    }
}

pub fn covariance_trust(
    channel: &ChannelParams,
    modulation: &ModulationSpec,
    assumption: TrustAssumption,
) -> Result<CovarianceMatrix> {
    Ok(covariance_ab(&trusted_channel(channel, assumption)?, modulation).0)
}

pub fn holevo(
    channel: &ChannelParams,
    modulation: &ModulationSpec,
    detection: DetectionMode,
    assumption: TrustAssumption,
    route: HolevoRoute,
) -> Result<f64> {
    let ch = trusted_channel(channel, assumption)?;
    match route {
        HolevoRoute::Purification => holevo_purification(&ch, modulation, detection),
        HolevoRoute::Cloner => holevo_cloner(&ch, modulation, detection),
    }
}

pub fn holevo_direct(_channel: &ChannelParams, _modulation: &ModulationSpec, _detection: DetectionMode) -> Result<f64> {
    Err(Error::NotImplemented("direct reconciliation"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecretFraction {
    pub r: f64,
    /// Set when `r <= 0`: the protocol run must be aborted.
    pub abort: bool,
}

pub fn secret_fraction(i_ab: f64, chi: f64, protocol: &ProtocolParams) -> Result<SecretFraction> {
    protocol.validate()?;
    let r = (1.0 - protocol.fer) * (1.0 - protocol.nu_disclosed) * (protocol.beta * i_ab - chi);
    Ok(SecretFraction { r, abort: !(r > 0.0) })
}

pub fn key_rate(r: f64, symbol_rate: f64) -> f64 {
    symbol_rate * r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub snr: f64,
    pub i_ab: f64,
    pub chi_eb: f64,
    pub secret_fraction_r: f64,
    pub key_rate_k: f64,
    pub abort: bool,
    pub assumption: TrustAssumption,
    pub route: HolevoRoute,
    pub channel: ChannelParams,
    pub protocol: ProtocolParams,
    pub noise_budget: NoiseBudget,
}

pub fn evaluate(
    channel: &ChannelParams,
    protocol: &ProtocolParams,
    assumption: TrustAssumption,
    route: HolevoRoute,
    noise_budget: NoiseBudget,
) -> Result<KeyRateReport> {
    protocol.validate()?;
    let s = snr(channel, &protocol.modulation, protocol.detection);
    let i_ab = mutual_information(s, protocol.detection);
    let chi = holevo(channel, &protocol.modulation, protocol.detection, assumption, route)?;
    let sf = secret_fraction(i_ab, chi, protocol)?;
    Ok(KeyRateReport {
        snr: s,
        i_ab,
        chi_eb: chi,
        secret_fraction_r: sf.r,
        key_rate_k: key_rate(sf.r, protocol.symbol_rate),
        abort: sf.abort,
        assumption,
        route,
        channel: *channel,
        protocol: *protocol,
        noise_budget,
    })
}
