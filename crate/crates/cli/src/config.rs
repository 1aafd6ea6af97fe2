//! Run configuration files.
//!
//! A config is a TOML document with the sections `[protocol]`, `[channel]`,
//! `[hardware]`, `[security]`, `[simulation]` and `[sweep]`, plus an optional
//! top-level `hardware_file`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use cvqkd_core::noise::{HardwareParams, NoiseBudget};
use cvqkd_core::security::{HolevoRoute, ProtocolParams, TrustAssumption};
use cvqkd_core::states::{ChannelDecomposition, ChannelParams, DetectionMode, ModulationSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_DIR_ENV: &str = "CVQKD_CONFIG_DIR";
pub const DEFAULT_CONFIG_NAME: &str = "cvqkd.toml";
pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Resolved relative to the directory of the config file.
    pub hardware_file: Option<PathBuf>,
    pub protocol: ProtocolSection,
    pub channel: ChannelSection,
    pub hardware: Option<HardwareParams>,
    pub security: SecuritySection,
    pub simulation: SimulationSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub v_mod: f64,
    pub detection: DetectionMode,
    pub beta: f64,
    pub fer: f64,
    pub nu_disclosed: f64,
    /// Symbols per second.
    pub symbol_rate: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self { v_mod: 10.0, detection: DetectionMode::Homodyne, beta: 0.95, fer: 0.0, nu_disclosed: 0.0, symbol_rate: 1e8 }
    }
}

/// `t` and `distance_km` are alternatives. With `eta_coup`/`eta_det` set,
/// they describe the fiber alone and the receiver efficiencies multiply in.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub t: Option<f64>,
    pub distance_km: Option<f64>,
    pub loss_db_per_km: Option<f64>,
    /// Untrusted excess noise at the channel output, SNU.
    pub xi: f64,
    pub eta_coup: Option<f64>,
    pub eta_det: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecuritySection {
    pub assumption: TrustAssumption,
    pub route: HolevoRoute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub symbols: usize,
    pub seed: u64,
    /// V² per SNU.
    pub phi: f64,
    /// Electronic noise in SNU; the dark-frame variance is `phi * xi_det`.
    pub xi_det: f64,
    pub reveal_fraction: f64,
    pub calibration_symbols: Option<usize>,
    pub adc_bits: Option<u32>,
    /// Full ADC range in volts.
    pub adc_range: Option<f64>,
    /// Use this conversion factor instead of the calibrated one.
    pub phi_assumed: Option<f64>,
    pub min_revealed: usize,
    pub subtract_dark_noise: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            symbols: 1_000_000,
            seed: 1,
            phi: 1.0,
            xi_det: 0.0,
            reveal_fraction: cvqkd_core::mc::DEFAULT_REVEAL_FRACTION,
            calibration_symbols: None,
            adc_bits: None,
            adc_range: None,
            phi_assumed: None,
            min_revealed: 1000,
            subtract_dark_noise: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default)]
    pub log: bool,
}

/// Everything needed for one key-rate evaluation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub protocol: ProtocolParams,
    pub hardware: HardwareParams,
    pub channel_xi: f64,
    pub t_fiber: f64,
    pub loss_db_per_km: f64,
    pub eta: Option<(f64, f64)>,
    pub security: SecuritySection,
}

impl Scenario {
    pub fn t_total(&self) -> f64 {
        match self.eta {
            Some((c, d)) => self.t_fiber * c * d,
            None => self.t_fiber,
        }
    }

    pub fn budget(&self) -> Result<NoiseBudget, CliError> {
        let extra = [("channel".to_string(), self.channel_xi)];
        Ok(NoiseBudget::from_hardware(
            &self.hardware,
            self.t_total(),
            self.protocol.modulation.v_mod,
            self.protocol.detection,
            &extra,
        )?)
    }

    /// Channel with total `ξ` from the budget; split into fiber and receiver
    /// parts when receiver efficiencies are configured.
    pub fn channel(&self, budget: &NoiseBudget) -> Result<ChannelParams, CliError> {
        Ok(match self.eta {
            Some((eta_coup, eta_det)) => ChannelParams::from_decomposition(ChannelDecomposition {
                t_ch: self.t_fiber,
                eta_coup,
                eta_det,
                xi_ch: budget.channel_total(),
                xi_rec: budget.receiver_total(),
            })?,
            None => ChannelParams::new(self.t_fiber, budget.total())?,
        })
    }

    /// Applies a sweep parameter. Hardware fields use their file names.
    pub fn set(&mut self, param: &str, value: f64) -> Result<(), CliError> {
        match param {
            "T" | "t" => self.t_fiber = value,
            "distance_km" => self.t_fiber = fiber_transmittance(value, self.loss_db_per_km),
            "xi" => self.channel_xi = value,
            "v_mod" => self.protocol.modulation = ModulationSpec::new(value)?,
            "beta" => self.protocol.beta = value,
            "fer" => self.protocol.fer = value,
            "nu_disclosed" => self.protocol.nu_disclosed = value,
            "eta_coup" | "eta_det" => {
                let (mut c, mut d) = self.eta.unwrap_or((1.0, 1.0));
                if param == "eta_coup" {
                    c = value
                } else {
                    d = value
                }
                self.eta = Some((c, d));
            }
            other => self
                .hardware
                .set_by_name(other, value)
                .map_err(|_| CliError::Config(format!("unknown sweep parameter `{other}`")))?,
        }
        Ok(())
    }
}

pub fn fiber_transmittance(distance_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config and loads its hardware file, if any.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(hw) = cfg.hardware_file.clone() {
            if cfg.hardware.is_some() {
                return Err(CliError::Config("give either `hardware_file` or a [hardware] section, not both".into()));
            }
            let hw = path.parent().map(|d| d.join(&hw)).unwrap_or(hw);
            cfg.hardware = Some(load_hardware(&hw)?);
            cfg.hardware_file = Some(hw);
        }
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let p = &self.protocol;
        let protocol = ProtocolParams {
            modulation: ModulationSpec::new(p.v_mod)?,
            detection: p.detection,
            beta: p.beta,
            fer: p.fer,
            nu_disclosed: p.nu_disclosed,
            symbol_rate: p.symbol_rate,
        };
        protocol.validate()?;
        let c = &self.channel;
        let loss_db_per_km = c.loss_db_per_km.unwrap_or(DEFAULT_LOSS_DB_PER_KM);
        if !(loss_db_per_km >= 0.0 && loss_db_per_km.is_finite()) {
            return Err(CliError::Config(format!("channel.loss_db_per_km must be >= 0, got {loss_db_per_km}")));
        }
        let t_fiber = match (c.t, c.distance_km) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either channel.t or channel.distance_km, not both".into())),
            (Some(t), None) => t,
            (None, Some(l)) => {
                if !(l >= 0.0) {
                    return Err(CliError::Config(format!("channel.distance_km must be >= 0, got {l}")));
                }
                fiber_transmittance(l, loss_db_per_km)
            }
            (None, None) => 1.0,
        };
        let eta = match (c.eta_coup, c.eta_det) {
            (None, None) => None,
            (a, b) => Some((a.unwrap_or(1.0), b.unwrap_or(1.0))),
        };
        let s = Scenario {
            protocol,
            hardware: self.hardware.clone().unwrap_or_default(),
            channel_xi: c.xi,
            t_fiber,
            loss_db_per_km,
            eta,
            security: self.security,
        };
        s.channel(&s.budget()?)?;
        Ok(s)
    }
}

pub fn load_hardware(path: &Path) -> Result<HardwareParams, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    HardwareParams::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Finds a config: an explicit path as given, else relative to
/// `$CVQKD_CONFIG_DIR`; with no path, `$CVQKD_CONFIG_DIR/cvqkd.toml`.
pub fn resolve_config_path(given: Option<&Path>, config_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    match (given, config_dir) {
        (Some(p), _) if p.exists() || p.is_absolute() => Ok(p.to_path_buf()),
        (Some(p), Some(dir)) if dir.join(p).exists() => Ok(dir.join(p)),
        (Some(p), _) => Err(CliError::Config(format!("config file {} not found", p.display()))),
        (None, Some(dir)) => Ok(dir.join(DEFAULT_CONFIG_NAME)),
        (None, None) => Err(CliError::Config(format!("no --config given and {CONFIG_DIR_ENV} is not set"))),
    }
}
