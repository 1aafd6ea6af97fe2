//! Hardware excess-noise models, noise-referral conventions and the
//! additive noise budget. All results are in SNU referred to Bob's input.

use std::f64::consts::PI;

use indexmap::IndexMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::states::DetectionMode;

/// Planck constant in J·s.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `num / den`, or zero when the numerator vanishes.
fn ratio_or_zero(num: f64, den: f64, name: &'static str) -> Result<f64> {
    if num == 0.0 {
        return Ok(0.0);
    }
    if !(den > 0.0) {
        return Err(invalid(name, format!("must be positive when the corresponding noise is nonzero (got denominator {den})")));
    }
    Ok(num / den)
}

pub fn xi_rin_signal(t: f64, v_mod: f64, rin_sig: f64, b: f64) -> f64 {
    t * v_mod * (rin_sig * b).sqrt()
}

pub fn xi_rin_lo(rin_lo: f64, b: f64, v_not_rin: f64) -> f64 {
    0.25 * rin_lo * b * v_not_rin
}

/// Upper bound on the modulation noise of a DAC-driven modulator.
pub fn xi_modulation(t: f64, v_mod: f64, amp_gain_g: f64, du_dac: f64, u_pi: f64) -> Result<f64> {
    let x = PI * ratio_or_zero(amp_gain_g * du_dac, u_pi, "u_pi")?;
    Ok(t * v_mod * (x + 0.5 * x * x).powi(2))
}

/// Modulation noise when the DAC range maps onto `U_π` (`g = U_π / U_DAC`).
pub fn xi_modulation_qpsk(t: f64, v_mod: f64, du_dac: f64, u_dac: f64) -> Result<f64> {
    xi_modulation(t, v_mod, 1.0, du_dac, u_dac)
}

/// Output amplitude of the nested Mach-Zehnder q/p modulator.
pub fn modulator_output(alpha_in: Complex64, phi1: f64, phi2: f64) -> Complex64 {
    0.5 * alpha_in * Complex64::new(phi1.cos(), phi2.cos())
}

/// Phase-noise-compensation residual, with `v_pt = 1 + ξ_PT`.
pub fn xi_pnc(v_mod: f64, v_pt: f64, pt_samples_n: u64, pt_photons: f64) -> Result<f64> {
    if pt_samples_n == 0 {
        return Err(invalid("pt_samples_n", "must be at least 1"));
    }
    if !(pt_photons > 0.0) {
        return Err(invalid("pt_photons", format!("must be positive, got {pt_photons}")));
    }
    Ok(0.5 * v_mod * v_pt / (pt_samples_n as f64 * pt_photons))
}

/// Upper bound on the pilot-tone phase error caused by sampling-time jitter.
pub fn xi_pt_phase(pt_photons: f64, pt_omega: f64, pt_dt: f64) -> f64 {
    let x = pt_omega * pt_dt;
    4.0 * pt_photons * (x + 0.5 * x * x).powi(2)
}

/// Optical bandwidth `b` expressed as a wavelength window around `lambda`.
pub fn wavelength_window(lambda: f64, b: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(b >= 0.0) {
        return Err(invalid("b", format!("must be >= 0, got {b}")));
    }
    Ok(lambda * lambda * b / SPEED_OF_LIGHT)
}

/// Raman noise from a spectral density in dBm/nm over a window `delta_lambda` in metres.
pub fn xi_raman(n_raman_dbm_per_nm: f64, delta_lambda: f64, tau: f64, f: f64) -> Result<f64> {
    let density = 10f64.powf(n_raman_dbm_per_nm / 10.0);
    ratio_or_zero(2.0 * delta_lambda * density * tau * 1e6, PLANCK_H * f, "f")
}

/// Residual signal and LO intensity noise leaking through a finite CMRR (linear ratio).
#[allow(clippy::too_many_arguments)]
pub fn xi_cmrr(
    mu: DetectionMode,
    cmrr: f64,
    v_mod: f64,
    tau: f64,
    f: f64,
    p_lo: f64,
    rin_sig: f64,
    rin_lo: f64,
    b: f64,
) -> Result<f64> {
    if !(cmrr > 0.0) {
        return Err(invalid("cmrr", format!("must be positive, got {cmrr}")));
    }
    if cmrr.is_infinite() {
        return Ok(0.0);
    }
    let hf = PLANCK_H * f;
    let sig = ratio_or_zero(hf * v_mod * v_mod * rin_sig * b, 4.0 * tau * p_lo, "p_lo")?;
    let lo = ratio_or_zero(tau * p_lo * rin_lo * b, hf, "f")?;
    Ok(mu.mu() * ((sig + lo) / (4.0 * cmrr * cmrr)))
}

/// Electronic noise of the balanced detector.
pub fn xi_detection(mu: DetectionMode, nep: f64, b: f64, tau: f64, f: f64, p_lo: f64) -> Result<f64> {
    let base = ratio_or_zero(nep * nep * b * tau, PLANCK_H * f * p_lo, "p_lo")?;
    Ok(mu.mu() * base)
}

/// Quantization plus intrinsic ADC noise.
#[allow(clippy::too_many_arguments)]
pub fn xi_adc(
    mu: DetectionMode,
    tau: f64,
    f: f64,
    ti_gain_g: f64,
    responsivity_rho: f64,
    p_lo: f64,
    adc_range_ru: f64,
    adc_bits_n: u32,
    v_adc_intr: f64,
) -> Result<f64> {
    if adc_bits_n == 0 {
        return Err(invalid("adc_bits_n", "must be at least 1"));
    }
    let quant = adc_range_ru * adc_range_ru / (12.0 * 4f64.powi(adc_bits_n as i32));
    let g2r2 = ti_gain_g * ti_gain_g * responsivity_rho * responsivity_rho;
    let base = ratio_or_zero(tau * (quant + v_adc_intr), PLANCK_H * f * g2r2 * p_lo, "p_lo")?;
    Ok(mu.mu() * base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Referral {
    ToInput,
    ToOutput,
}

/// Moves excess noise between channel input and output reference (`ξ_B = T ξ_A`).
pub fn noise_convention(xi: f64, t: f64, direction: Referral) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("t", format!("must lie in (0, 1], got {t}")));
    }
    Ok(match direction {
        Referral::ToOutput => t * xi,
        Referral::ToInput => xi / t,
    })
}

/// Input-referred channel noise `Ξ_ch = (1 − T_ch)/T_ch + ξ_A`.
pub fn big_xi_channel(t_ch: f64, xi_a: f64) -> Result<f64> {
    if !(t_ch > 0.0 && t_ch <= 1.0) {
        return Err(invalid("t_ch", format!("must lie in (0, 1], got {t_ch}")));
    }
    Ok((1.0 - t_ch) / t_ch + xi_a)
}

/// Detector noise `Ξ_det = (1 − η)/η + ν_el/η`.
pub fn big_xi_detection(eta_det: f64, nu_el: f64) -> Result<f64> {
    if !(eta_det > 0.0 && eta_det <= 1.0) {
        return Err(invalid("eta_det", format!("must lie in (0, 1], got {eta_det}")));
    }
    Ok((1.0 - eta_det) / eta_det + nu_el / eta_det)
}

/// Datasheet quantities in SI units. `cmrr` is held as a linear ratio; files give it in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHardware", into = "RawHardware")]
pub struct HardwareParams {
    pub rin_sig: f64,
    pub rin_lo: f64,
    pub bandwidth_b: f64,
    pub pulse_tau: f64,
    pub opt_freq_f: f64,
    pub p_lo: f64,
    pub cmrr: f64,
    pub nep: f64,
    pub responsivity_rho: f64,
    pub ti_gain_g: f64,
    pub adc_range_ru: f64,
    pub adc_bits_n: u32,
    pub v_adc_intr: f64,
    pub n_raman_dbm_per_nm: f64,
    pub delta_lambda: f64,
    pub amp_gain_g: f64,
    pub du_dac: f64,
    pub u_pi: f64,
    pub u_dac: f64,
    pub pt_omega: f64,
    pub pt_dt: f64,
    pub pt_photons: f64,
    pub pt_samples_n: u64,
}

/// Noise-free hardware: every noise source is switched off.
impl Default for HardwareParams {
    fn default() -> Self {
        Self {
            rin_sig: 0.0,
            rin_lo: 0.0,
            bandwidth_b: 0.0,
            pulse_tau: 0.0,
            opt_freq_f: 0.0,
            p_lo: 0.0,
            cmrr: f64::INFINITY,
            nep: 0.0,
            responsivity_rho: 0.0,
            ti_gain_g: 0.0,
            adc_range_ru: 0.0,
            adc_bits_n: 16,
            v_adc_intr: 0.0,
            n_raman_dbm_per_nm: f64::NEG_INFINITY,
            delta_lambda: 0.0,
            amp_gain_g: 0.0,
            du_dac: 0.0,
            u_pi: 0.0,
            u_dac: 0.0,
            pt_omega: 0.0,
            pt_dt: 0.0,
            pt_photons: 0.0,
            pt_samples_n: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawHardware {
    rin_sig: f64,
    rin_lo: f64,
    bandwidth_b: f64,
    pulse_tau: f64,
    opt_freq_f: f64,
    p_lo: f64,
    /// dB
    cmrr: f64,
    nep: f64,
    responsivity_rho: f64,
    ti_gain_g: f64,
    adc_range_ru: f64,
    adc_bits_n: u32,
    v_adc_intr: f64,
    n_raman_dbm_per_nm: f64,
    delta_lambda: f64,
    amp_gain_g: f64,
    du_dac: f64,
    u_pi: f64,
    u_dac: f64,
    pt_omega: f64,
    pt_dt: f64,
    pt_photons: f64,
    #[serde(alias = "pt_samples_N")]
    pt_samples_n: u64,
}

impl Default for RawHardware {
    fn default() -> Self {
        HardwareParams::default().into()
    }
}

pub fn cmrr_from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn cmrr_to_db(linear: f64) -> f64 {
    20.0 * linear.log10()
}

impl From<HardwareParams> for RawHardware {
    fn from(h: HardwareParams) -> Self {
        RawHardware {
            rin_sig: h.rin_sig,
            rin_lo: h.rin_lo,
            bandwidth_b: h.bandwidth_b,
            pulse_tau: h.pulse_tau,
            opt_freq_f: h.opt_freq_f,
            p_lo: h.p_lo,
            cmrr: cmrr_to_db(h.cmrr),
            nep: h.nep,
            responsivity_rho: h.responsivity_rho,
            ti_gain_g: h.ti_gain_g,
            adc_range_ru: h.adc_range_ru,
            adc_bits_n: h.adc_bits_n,
            v_adc_intr: h.v_adc_intr,
            n_raman_dbm_per_nm: h.n_raman_dbm_per_nm,
            delta_lambda: h.delta_lambda,
            amp_gain_g: h.amp_gain_g,
            du_dac: h.du_dac,
            u_pi: h.u_pi,
            u_dac: h.u_dac,
            pt_omega: h.pt_omega,
            pt_dt: h.pt_dt,
            pt_photons: h.pt_photons,
            pt_samples_n: h.pt_samples_n,
        }
    }
}

impl TryFrom<RawHardware> for HardwareParams {
    type Error = Error;

    fn try_from(r: RawHardware) -> Result<Self> {
        let h = HardwareParams {
            rin_sig: r.rin_sig,
            rin_lo: r.rin_lo,
            bandwidth_b: r.bandwidth_b,
            pulse_tau: r.pulse_tau,
            opt_freq_f: r.opt_freq_f,
            p_lo: r.p_lo,
            cmrr: cmrr_from_db(r.cmrr),
            nep: r.nep,
            responsivity_rho: r.responsivity_rho,
            ti_gain_g: r.ti_gain_g,
            adc_range_ru: r.adc_range_ru,
            adc_bits_n: r.adc_bits_n,
            v_adc_intr: r.v_adc_intr,
            n_raman_dbm_per_nm: r.n_raman_dbm_per_nm,
            delta_lambda: r.delta_lambda,
            amp_gain_g: r.amp_gain_g,
            du_dac: r.du_dac,
            u_pi: r.u_pi,
            u_dac: r.u_dac,
            pt_omega: r.pt_omega,
            pt_dt: r.pt_dt,
            pt_photons: r.pt_photons,
            pt_samples_n: r.pt_samples_n,
        };
        h.validate()?;
        Ok(h)
    }
}

impl HardwareParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    fn nonnegative(&self) -> [(&'static str, f64); 20] {
        [
            ("rin_sig", self.rin_sig),
            ("rin_lo", self.rin_lo),
            ("bandwidth_b", self.bandwidth_b),
            ("pulse_tau", self.pulse_tau),
            ("opt_freq_f", self.opt_freq_f),
            ("p_lo", self.p_lo),
            ("nep", self.nep),
            ("responsivity_rho", self.responsivity_rho),
            ("ti_gain_g", self.ti_gain_g),
            ("adc_range_ru", self.adc_range_ru),
            ("v_adc_intr", self.v_adc_intr),
            ("delta_lambda", self.delta_lambda),
            ("amp_gain_g", self.amp_gain_g),
            ("du_dac", self.du_dac),
            ("u_pi", self.u_pi),
            ("u_dac", self.u_dac),
            ("pt_omega", self.pt_omega),
            ("pt_dt", self.pt_dt),
            ("pt_photons", self.pt_photons),
            ("cmrr", self.cmrr),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.nonnegative() {
            if !(v >= 0.0) || (v.is_infinite() && name != "cmrr") {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.cmrr > 0.0) {
            return Err(invalid("cmrr", "must be positive"));
        }
        if self.adc_bits_n == 0 {
            return Err(invalid("adc_bits_n", "must be at least 1"));
        }
        if self.n_raman_dbm_per_nm.is_nan() || self.n_raman_dbm_per_nm == f64::INFINITY {
            return Err(invalid("n_raman_dbm_per_nm", "must be a real number or -inf"));
        }
        Ok(())
    }

    /// Sets a field by its file key. `cmrr` is taken in dB.
    pub fn set_by_name(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "rin_sig" => &mut self.rin_sig,
            "rin_lo" => &mut self.rin_lo,
            "bandwidth_b" => &mut self.bandwidth_b,
            "pulse_tau" => &mut self.pulse_tau,
            "opt_freq_f" => &mut self.opt_freq_f,
            "p_lo" => &mut self.p_lo,
            "cmrr" => {
                self.cmrr = cmrr_from_db(value);
                return self.validate();
            }
            "nep" => &mut self.nep,
            "responsivity_rho" => &mut self.responsivity_rho,
            "ti_gain_g" => &mut self.ti_gain_g,
            "adc_range_ru" => &mut self.adc_range_ru,
            "adc_bits_n" => {
                if value < 1.0 || value.fract() != 0.0 || value > 64.0 {
                    return Err(invalid("adc_bits_n", format!("must be an integer in [1, 64], got {value}")));
                }
                self.adc_bits_n = value as u32;
                return Ok(());
            }
            "v_adc_intr" => &mut self.v_adc_intr,
            "n_raman_dbm_per_nm" => &mut self.n_raman_dbm_per_nm,
            "delta_lambda" => &mut self.delta_lambda,
            "amp_gain_g" => &mut self.amp_gain_g,
            "du_dac" => &mut self.du_dac,
            "u_pi" => &mut self.u_pi,
            "u_dac" => &mut self.u_dac,
            "pt_omega" => &mut self.pt_omega,
            "pt_dt" => &mut self.pt_dt,
            "pt_photons" => &mut self.pt_photons,
            "pt_samples_n" | "pt_samples_N" => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(invalid("pt_samples_n", format!("must be a non-negative integer, got {value}")));
                }
                self.pt_samples_n = value as u64;
                return Ok(());
            }
            _ => return Err(Error::Parse(format!("unknown hardware parameter `{name}`"))),
        };
        *slot = value;
        self.validate()
    }

    pub fn has_pilot_tone(&self) -> bool {
        self.pt_photons > 0.0 && self.pt_samples_n > 0
    }
}

/// Named excess-noise contributions in SNU; the total is their sum.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NoiseBudget {
    components: IndexMap<String, f64>,
}

/// Components attributed to the receiver under the trusted-device split.
pub const RECEIVER_COMPONENTS: [&str; 3] = ["cmrr", "detection", "adc"];

impl NoiseBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.components.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.components.get(name).copied()
    }

    pub fn components(&self) -> &IndexMap<String, f64> {
        &self.components
    }

    pub fn total(&self) -> f64 {
        self.components.values().sum()
    }

    pub fn receiver_total(&self) -> f64 {
        RECEIVER_COMPONENTS.iter().filter_map(|k| self.get(k)).sum()
    }

    pub fn channel_total(&self) -> f64 {
        self.total() - self.receiver_total()
    }

    /// Hardware budget at transmittance `t`. `extra` components (for example
    /// untrusted channel noise) are appended and counted in the LO-RIN base variance.
    pub fn from_hardware(
        hw: &HardwareParams,
        t: f64,
        v_mod: f64,
        detection: DetectionMode,
        extra: &[(String, f64)],
    ) -> Result<Self> {
        hw.validate()?;
        let mut b = NoiseBudget::new();
        b.insert("rin_sig", xi_rin_signal(t, v_mod, hw.rin_sig, hw.bandwidth_b));
        b.insert("modulation", xi_modulation(t, v_mod, hw.amp_gain_g, hw.du_dac, hw.u_pi)?);
        let pnc = if hw.has_pilot_tone() {
            let pt = pilot_tone_budget(hw, detection)?;
            xi_pnc(v_mod, 1.0 + pt.total(), hw.pt_samples_n, hw.pt_photons)?
        } else {
            0.0
        };
        b.insert("pnc", pnc);
        b.insert("raman", xi_raman(hw.n_raman_dbm_per_nm, hw.delta_lambda, hw.pulse_tau, hw.opt_freq_f)?);
        b.insert(
            "cmrr",
            xi_cmrr(detection, hw.cmrr, v_mod, hw.pulse_tau, hw.opt_freq_f, hw.p_lo, hw.rin_sig, hw.rin_lo, hw.bandwidth_b)?,
        );
        b.insert("detection", xi_detection(detection, hw.nep, hw.bandwidth_b, hw.pulse_tau, hw.opt_freq_f, hw.p_lo)?);
        b.insert("adc", adc_term(hw, detection)?);
        for (name, v) in extra {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(invalid("extra", format!("component `{name}` must be finite and >= 0, got {v}")));
            }
            b.insert(name.clone(), *v);
        }
        let rin_lo = xi_rin_lo(hw.rin_lo, hw.bandwidth_b, 1.0 + b.total());
        b.components.shift_insert(1, "rin_lo".to_string(), rin_lo);
        Ok(b)
    }
}

fn adc_term(hw: &HardwareParams, detection: DetectionMode) -> Result<f64> {
    xi_adc(
        detection,
        hw.pulse_tau,
        hw.opt_freq_f,
        hw.ti_gain_g,
        hw.responsivity_rho,
        hw.p_lo,
        hw.adc_range_ru,
        hw.adc_bits_n,
        hw.v_adc_intr,
    )
}

/// Noise on the pilot tone as received by Bob. The tone's modulation term uses
/// `V_mod = 2 n_PT` at unit transmittance.
pub fn pilot_tone_budget(hw: &HardwareParams, detection: DetectionMode) -> Result<NoiseBudget> {
    let mut b = NoiseBudget::new();
    b.insert("modulation", xi_modulation(1.0, 2.0 * hw.pt_photons, hw.amp_gain_g, hw.du_dac, hw.u_pi)?);
    b.insert("phase", xi_pt_phase(hw.pt_photons, hw.pt_omega, hw.pt_dt));
    b.insert("raman", xi_raman(hw.n_raman_dbm_per_nm, hw.delta_lambda, hw.pulse_tau, hw.opt_freq_f)?);
    b.insert("detection", xi_detection(detection, hw.nep, hw.bandwidth_b, hw.pulse_tau, hw.opt_freq_f, hw.p_lo)?);
    b.insert("adc", adc_term(hw, detection)?);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rin_signal_examples() {
        assert_eq!(xi_rin_signal(1.0, 1.0, 1.0, 1.0), 1.0);
        assert!((xi_rin_signal(0.5, 10.0, 1e-15, 1e9) - 5e-3).abs() < 1e-17);
    }

    #[test]
    fn rin_lo_examples() {
        assert_eq!(xi_rin_lo(4.0, 1.0, 1.0), 1.0);
        assert!((xi_rin_lo(1e-15, 1e9, 11.0) - 2.75e-6).abs() < 1e-20);
    }

    #[test]
    fn modulation_example() {
        let g = 0.01 / PI;
        let v = xi_modulation(1.0, 4.0, g, 1.0, 1.0).unwrap();
        assert!((v - 4.0 * (0.01_f64 + 0.00005).powi(2)).abs() < 1e-18);
        assert_eq!(xi_modulation(1.0, 4.0, 1.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn modulator_blocks() {
        let a = Complex64::new(2.0, 0.0);
        assert!(modulator_output(a, PI / 2.0, PI / 2.0).norm() < 1e-15);
        let q = modulator_output(a, 0.0, PI / 2.0);
        assert!((q.re - 1.0).abs() < 1e-15 && q.im.abs() < 1e-15);
    }

    #[test]
    fn pnc_examples() {
        assert!((xi_pnc(10.0, 1.5, 10, 1000.0).unwrap() - 7.5e-4).abs() < 1e-18);
        assert!((xi_pnc(4.0, 1.0, 1, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(xi_pnc(1.0, 1.0, 1, 0.0).is_err());
    }

    #[test]
    fn pt_phase_examples() {
        assert_eq!(xi_pt_phase(1.0, 1.0, 1.0), 9.0);
        assert!((xi_pt_phase(1e4, 1e3, 1e-6) - 4.004001e-2).abs() < 1e-12);
    }

    #[test]
    fn cmrr_needs_lo() {
        let r = xi_cmrr(DetectionMode::Homodyne, 1e5, 10.0, 1e-8, 1.934e14, 0.0, 1e-15, 1e-15, 1e9);
        assert!(r.is_err());
        let inf = xi_cmrr(DetectionMode::Homodyne, f64::INFINITY, 10.0, 1e-8, 1.934e14, 1e-3, 1e-15, 1e-15, 1e9);
        assert_eq!(inf.unwrap(), 0.0);
    }

    #[test]
    fn cmrr_db_round_trip() {
        assert!((cmrr_from_db(100.0) - 1e5).abs() < 1e-9);
        assert!((cmrr_to_db(1e5) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn convention_examples() {
        assert_eq!(noise_convention(0.3, 1.0, Referral::ToOutput).unwrap(), 0.3);
        assert_eq!(big_xi_channel(0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn unknown_hardware_key_rejected() {
        assert!(HardwareParams::from_toml_str("nep = 1e-12\nbogus = 1\n").is_err());
        let h = HardwareParams::from_toml_str("nep = 1e-12\ncmrr = 100\n").unwrap();
        assert!((h.cmrr - 1e5).abs() < 1e-9);
    }

    #[test]
    fn default_budget_is_zero() {
        let b = NoiseBudget::from_hardware(&HardwareParams::default(), 0.5, 10.0, DetectionMode::Homodyne, &[]).unwrap();
        assert_eq!(b.total(), 0.0);
        assert_eq!(b.components().keys().next().map(String::as_str), Some("rin_sig"));
        assert_eq!(b.components().get_index(1).map(|(k, _)| k.as_str()), Some("rin_lo"));
    }
}
