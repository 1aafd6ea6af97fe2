use std::io::Write;

use cvqkd_core::estimation::{calibrate_phi, estimate, Calibration, EstimationOptions, EstimationResult};
use cvqkd_core::mc::{reveal_indices, simulate, AdcModel, CalibrationFrames, SimConfig, Simulation, SymbolRecord, RNG_ALGORITHM};
use cvqkd_core::noise::{HardwareParams, NoiseBudget};
use cvqkd_core::security::{evaluate, KeyRateReport, TrustAssumption};
use cvqkd_core::states::{ChannelParams, DetectionMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Scenario, SimulationSection, SweepSection};
use crate::CliError;

pub const SWEEP_SCHEMA: &str = "# cvqkd-sweep schema v1";

pub fn run_keyrate(s: &Scenario) -> Result<KeyRateReport, CliError> {
    let budget = s.budget()?;
    let channel = s.channel(&budget)?;
    Ok(evaluate(&channel, &s.protocol, s.security.assumption, s.security.route, budget)?)
}

impl SweepSection {
    pub fn validate(&self) -> Result<(), CliError> {
        let degenerate = self.steps == 1 && self.from == self.to;
        if self.steps < 2 && !degenerate {
            return Err(CliError::Config(format!("sweep needs at least 2 steps (or 1 with from == to), got {}", self.steps)));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::Config("sweep bounds must be finite".into()));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(CliError::Config("log sweeps need positive bounds".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let f = i as f64 / last;
                match i {
                    0 => self.from,
                    _ if i + 1 == self.steps => self.to,
                    _ if self.log => self.from * (self.to / self.from).powf(f),
                    _ => self.from + (self.to - self.from) * f,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: KeyRateReport,
}

/// Grid points run in parallel; rows come back in axis order.
pub fn run_sweep(base: &Scenario, axis: &SweepSection) -> Result<Vec<SweepRow>, CliError> {
    axis.validate()?;
    base.clone().set(&axis.param, axis.from)?;
    axis.values()
        .into_par_iter()
        .map(|value| {
            let mut s = base.clone();
            s.set(&axis.param, value)?;
            Ok(SweepRow { value, report: run_keyrate(&s)? })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(param: &str, rows: &[SweepRow], mut w: W) -> Result<(), CliError> {
    writeln!(w, "{SWEEP_SCHEMA}")?;
    let mut wr = csv::Writer::from_writer(w);
    let components: Vec<String> = rows
        .first()
        .map(|r| r.report.noise_budget.components().keys().cloned().collect())
        .unwrap_or_default();
    let mut header = vec![param.to_string(), "t".into()];
    header.extend(components.iter().map(|c| format!("xi_{c}")));
    header.extend(["xi_total", "snr", "i_ab", "chi_eb", "secret_fraction_r", "key_rate_k", "abort"].map(String::from));
    wr.write_record(&header)?;
    for row in rows {
        let r = &row.report;
        let mut rec = vec![row.value.to_string(), r.channel.t.to_string()];
        rec.extend(components.iter().map(|c| r.noise_budget.get(c).unwrap_or(0.0).to_string()));
        rec.extend([
            r.channel.xi.to_string(),
            r.snr.to_string(),
            r.i_ab.to_string(),
            r.chi_eb.to_string(),
            r.secret_fraction_r.to_string(),
            r.key_rate_k.to_string(),
            r.abort.to_string(),
        ]);
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn sim_config(s: &Scenario, sim: &SimulationSection) -> Result<SimConfig, CliError> {
    let budget = s.budget()?;
    let channel = s.channel(&budget)?;
    let mut c = SimConfig::new(sim.symbols, sim.seed, s.protocol.modulation, channel, s.protocol.detection);
    c.phi_conversion = sim.phi;
    c.n_det_dark = sim.phi * sim.xi_det;
    c.reveal_fraction = sim.reveal_fraction;
    c.n_calibration = sim.calibration_symbols.unwrap_or(sim.symbols);
    c.adc = match (sim.adc_bits, sim.adc_range) {
        (None, None) => None,
        (Some(bits), Some(range_ru)) => Some(AdcModel { range_ru, bits }),
        _ => return Err(CliError::Config("simulation.adc_bits and simulation.adc_range go together".into())),
    };
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimated {
    pub calibration: Calibration,
    pub phi_used: f64,
    pub estimate: EstimationResult,
    /// Key rate with `T̂` and `ξ̂` in place of the true channel.
    pub keyrate: Option<KeyRateReport>,
    pub warnings: Vec<String>,
}

pub fn estimate_and_rate(
    records: &[SymbolRecord],
    frames: &CalibrationFrames,
    revealed: &[usize],
    s: &Scenario,
    sim: &SimulationSection,
) -> Result<Estimated, CliError> {
    let calibration = calibrate_phi(&frames.vacuum, &frames.dark)?;
    let used = Calibration { phi_hat: sim.phi_assumed.unwrap_or(calibration.phi_hat), ..calibration };
    let opts = EstimationOptions { min_revealed: sim.min_revealed, subtract_dark_noise: sim.subtract_dark_noise };
    let est = estimate(records, revealed, &used, s.protocol.modulation.v_mod, s.protocol.detection, &opts)?;
    let mut warnings = est.warnings.clone();
    if sim.phi_assumed.is_some() {
        warnings.push(format!("conversion factor fixed at {} instead of the calibrated {}", used.phi_hat, calibration.phi_hat));
    }
    let keyrate = if est.t_hat > 0.0 {
        let t = est.t_hat.min(1.0);
        let xi = est.xi_hat.max(0.0);
        if t != est.t_hat || xi != est.xi_hat {
            warnings.push(format!("key rate evaluated at clamped estimates T = {t}, xi = {xi}"));
        }
        let mut budget = NoiseBudget::new();
        budget.insert("estimated", xi);
        let ch = ChannelParams::new(t, xi)?;
        // estimates carry no receiver split
        Some(evaluate(&ch, &s.protocol, TrustAssumption::Strict, s.security.route, budget)?)
    } else {
        warnings.push("no key rate: estimated transmittance is not positive".into());
        None
    };
    Ok(Estimated { calibration, phi_used: used.phi_hat, estimate: est, keyrate, warnings })
}

#[derive(Debug, Clone, Serialize)]
pub struct Truth {
    pub t: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Deltas {
    pub t: f64,
    pub xi: f64,
    /// Deviation in units of the reported standard error.
    pub t_in_se: f64,
    pub xi_in_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub rng: &'static str,
    pub seed: u64,
    pub symbols: usize,
    pub revealed: usize,
    pub detection: DetectionMode,
    pub v_mod: f64,
    pub phi: f64,
    pub n_det_dark: f64,
    pub truth: Truth,
    pub deltas: Deltas,
    pub keyrate_truth: KeyRateReport,
    #[serde(flatten)]
    pub estimated: Estimated,
}

/// Deviations beyond this many standard errors from the truth are flagged.
pub const TRUTH_TOLERANCE_SE: f64 = 5.0;

pub fn run_simulate(s: &Scenario, sim: &SimulationSection) -> Result<(Simulation, SimulationReport), CliError> {
    let cfg = sim_config(s, sim)?;
    let out = simulate(&cfg)?;
    let mut estimated = estimate_and_rate(&out.records, &out.frames, &out.revealed, s, sim)?;
    let e = &estimated.estimate;
    let truth = Truth { t: cfg.channel.t, xi: cfg.channel.xi };
    let deltas = Deltas {
        t: e.t_hat - truth.t,
        xi: e.xi_hat - truth.xi,
        t_in_se: (e.t_hat - truth.t) / e.se_t,
        xi_in_se: (e.xi_hat - truth.xi) / e.se_xi,
    };
    if deltas.t_in_se.abs() > TRUTH_TOLERANCE_SE || deltas.xi_in_se.abs() > TRUTH_TOLERANCE_SE {
        estimated.warnings.push(format!(
            "estimates deviate from the simulated truth by {:.1} (T) and {:.1} (xi) standard errors; check the calibration",
            deltas.t_in_se, deltas.xi_in_se
        ));
    }
    let keyrate_truth = run_keyrate(s)?;
    let report = SimulationReport {
        rng: RNG_ALGORITHM,
        seed: cfg.seed,
        symbols: cfg.n_symbols,
        revealed: out.revealed.len(),
        detection: cfg.detection,
        v_mod: cfg.modulation.v_mod,
        phi: cfg.phi_conversion,
        n_det_dark: cfg.n_det_dark,
        truth,
        deltas,
        keyrate_truth,
        estimated,
    };
    Ok((out, report))
}

pub fn revealed_for(n_records: usize, sim: &SimulationSection) -> Result<Vec<usize>, CliError> {
    Ok(reveal_indices(n_records, sim.reveal_fraction, sim.seed)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub t: f64,
    pub v_mod: f64,
    pub detection: DetectionMode,
    pub components: NoiseBudget,
    pub receiver_total: f64,
    pub channel_total: f64,
    pub total: f64,
}

pub fn run_budget(hw: &HardwareParams, t: f64, v_mod: f64, detection: DetectionMode, xi: f64) -> Result<BudgetReport, CliError> {
    let b = NoiseBudget::from_hardware(hw, t, v_mod, detection, &[("channel".to_string(), xi)])?;
    Ok(BudgetReport {
        t,
        v_mod,
        detection,
        receiver_total: b.receiver_total(),
        channel_total: b.channel_total(),
        total: b.total(),
        components: b,
    })
}
