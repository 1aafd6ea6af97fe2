//! Symbol-level Monte-Carlo model of the prepare-and-measure protocol.
//!
//! - Alice draws each quadrature component from `N(0, V_mod/4)`; the operator
//!   mean sent on the channel is twice the component.
//! - Bob's outcomes are in operator SNU, then converted to voltages with the
//!   conversion factor `φ` and additive dark noise.
//! - Randomness comes from ChaCha20 with one stream per `(stage, chunk)`, so
//!   output is independent of thread count.

use std::io::{Read, Write};
use std::ops::Range;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::states::{ChannelParams, DetectionMode, ModulationSpec};

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha), seed_from_u64(seed), stream = stage << 48 | chunk";
pub const CHUNK_SIZE: usize = 1 << 16;
pub const DEFAULT_REVEAL_FRACTION: f64 = 0.1;

const STAGE_ALICE: u64 = 0;
const STAGE_MEASURE: u64 = 1;
const STAGE_VOLTAGE: u64 = 2;
const STAGE_VACUUM: u64 = 3;
const STAGE_DARK: u64 = 4;
const STAGE_REVEAL: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Q,
    P,
    Both,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Q => "q",
            Basis::P => "p",
            Basis::Both => "both",
        }
    }

    fn code(self) -> f64 {
        match self {
            Basis::Q => 0.0,
            Basis::P => 1.0,
            Basis::Both => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcModel {
    /// Full input range in volts, centred on zero.
    pub range_ru: f64,
    pub bits: u32,
}

impl AdcModel {
    pub fn lsb(&self) -> f64 {
        self.range_ru / 2f64.powi(self.bits as i32)
    }

    pub fn quantize(&self, u: f64) -> f64 {
        let half = 0.5 * self.range_ru;
        let lsb = self.lsb();
        ((u.clamp(-half, half) / lsb).round() * lsb).clamp(-half, half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_symbols: usize,
    pub seed: u64,
    pub modulation: ModulationSpec,
    pub channel: ChannelParams,
    pub detection: DetectionMode,
    /// V² per SNU.
    pub phi_conversion: f64,
    /// Dark-noise variance in V².
    pub n_det_dark: f64,
    pub adc: Option<AdcModel>,
    pub reveal_fraction: f64,
    pub n_calibration: usize,
}

impl SimConfig {
    pub fn new(
        n_symbols: usize,
        seed: u64,
        modulation: ModulationSpec,
        channel: ChannelParams,
        detection: DetectionMode,
    ) -> Self {
        Self {
            n_symbols,
            seed,
            modulation,
            channel,
            detection,
            phi_conversion: 1.0,
            n_det_dark: 0.0,
            adc: None,
            reveal_fraction: DEFAULT_REVEAL_FRACTION,
            n_calibration: n_symbols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_conversion > 0.0 && self.phi_conversion.is_finite()) {
            return Err(invalid("phi_conversion", format!("must be positive, got {}", self.phi_conversion)));
        }
        if !(self.n_det_dark >= 0.0 && self.n_det_dark.is_finite()) {
            return Err(invalid("n_det_dark", format!("must be finite and >= 0, got {}", self.n_det_dark)));
        }
        if !(0.0..=1.0).contains(&self.reveal_fraction) {
            return Err(invalid("reveal_fraction", format!("must lie in [0, 1], got {}", self.reveal_fraction)));
        }
        if let Some(adc) = self.adc {
            if !(adc.range_ru > 0.0) || adc.bits == 0 || adc.bits > 52 {
                return Err(invalid("adc", "range must be positive and bits in [1, 52]"));
            }
        }
        ModulationSpec::new(self.modulation.v_mod)?;
        ChannelParams::new(self.channel.t, self.channel.xi)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub alice_q: f64,
    pub alice_p: f64,
    pub basis: Basis,
    pub bob_q: Option<f64>,
    pub bob_p: Option<f64>,
    pub u_q: Option<f64>,
    pub u_p: Option<f64>,
}

fn stream_rng(seed: u64, stage: u64, chunk: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((stage << 48) | chunk as u64);
    rng
}

fn chunked<T, F>(n: usize, seed: u64, stage: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha20Rng, Range<usize>) -> Vec<T> + Sync,
{
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    let parts: Vec<Vec<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, stage, c);
            f(&mut rng, c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(n))
        })
        .collect();
    parts.into_iter().flatten().collect()
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Alice's quadrature components, each `N(0, V_mod/4)`.
pub fn sample_alice(config: &SimConfig) -> Vec<(f64, f64)> {
    let sd = config.modulation.component_variance().sqrt();
    chunked(config.n_symbols, config.seed, STAGE_ALICE, |rng, range| {
        range.map(|_| (sd * normal(rng), sd * normal(rng))).collect()
    })
}

/// Bob's outcomes in operator SNU. Homodyne picks q or p uniformly per symbol.
pub fn measure(symbols: &[(f64, f64)], channel: &ChannelParams, detection: DetectionMode, seed: u64) -> Vec<SymbolRecord> {
    let mu = detection.mu();
    let gain = (channel.t / mu).sqrt();
    let noise_sd = (1.0 + channel.xi / mu).sqrt();
    chunked(symbols.len(), seed, STAGE_MEASURE, |rng, range| {
        symbols[range]
            .iter()
            .map(|&(q, p)| {
                let mut r = SymbolRecord { alice_q: q, alice_p: p, basis: Basis::Both, bob_q: None, bob_p: None, u_q: None, u_p: None };
                match detection {
                    DetectionMode::Homodyne => {
                        if rng.random::<bool>() {
                            r.basis = Basis::Q;
                            r.bob_q = Some(gain * 2.0 * q + noise_sd * normal(rng));
                        } else {
                            r.basis = Basis::P;
                            r.bob_p = Some(gain * 2.0 * p + noise_sd * normal(rng));
                        }
                    }
                    DetectionMode::Heterodyne => {
                        r.bob_q = Some(gain * 2.0 * q + noise_sd * normal(rng));
                        r.bob_p = Some(gain * 2.0 * p + noise_sd * normal(rng));
                    }
                }
                r
            })
            .collect()
    })
}

fn voltage(x: f64, sqrt_phi: f64, dark_sd: f64, adc: Option<AdcModel>, rng: &mut ChaCha20Rng) -> f64 {
    let u = sqrt_phi * x + dark_sd * normal(rng);
    match adc {
        Some(a) => a.quantize(u),
        None => u,
    }
}

/// Fills the voltage fields: `U = √φ·x + N(0, n_det_dark)`, optionally quantized.
pub fn to_voltage(records: &mut [SymbolRecord], phi: f64, n_det_dark: f64, adc: Option<AdcModel>, seed: u64) {
    let (sp, sd) = (phi.sqrt(), n_det_dark.sqrt());
    let src: &[SymbolRecord] = records;
    let volts: Vec<(Option<f64>, Option<f64>)> = chunked(src.len(), seed, STAGE_VOLTAGE, |rng, range| {
        src[range]
            .iter()
            .map(|r| {
                let uq = r.bob_q.map(|x| voltage(x, sp, sd, adc, rng));
                let up = r.bob_p.map(|x| voltage(x, sp, sd, adc, rng));
                (uq, up)
            })
            .collect()
    });
    for (r, (uq, up)) in records.iter_mut().zip(volts) {
        r.u_q = uq;
        r.u_p = up;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationFrames {
    /// Signal input blocked, LO on: shot noise plus dark noise.
    pub vacuum: Vec<f64>,
    /// Signal and LO blocked: dark noise only.
    pub dark: Vec<f64>,
}

pub fn calibration_frames(config: &SimConfig) -> CalibrationFrames {
    let (sp, sd, adc) = (config.phi_conversion.sqrt(), config.n_det_dark.sqrt(), config.adc);
    let n = config.n_calibration;
    let vacuum = chunked(n, config.seed, STAGE_VACUUM, |rng, range| {
        range.map(|_| {
            let x = normal(rng);
            voltage(x, sp, sd, adc, rng)
        })
        .collect()
    });
    let dark = chunked(n, config.seed, STAGE_DARK, |rng, range| range.map(|_| voltage(0.0, sp, sd, adc, rng)).collect());
    CalibrationFrames { vacuum, dark }
}

/// Sorted indices of the symbols Alice discloses for parameter estimation.
pub fn reveal_indices(n_symbols: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid("reveal_fraction", format!("must lie in [0, 1], got {fraction}")));
    }
    let k = (fraction * n_symbols as f64).round() as usize;
    if k >= n_symbols {
        return Ok((0..n_symbols).collect());
    }
    let mut rng = stream_rng(seed, STAGE_REVEAL, 0);
    let mut idx = sample(&mut rng, n_symbols, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub records: Vec<SymbolRecord>,
    pub frames: CalibrationFrames,
    pub revealed: Vec<usize>,
}

pub fn simulate(config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    let alice = sample_alice(config);
    let mut records = measure(&alice, &config.channel, config.detection, config.seed);
    to_voltage(&mut records, config.phi_conversion, config.n_det_dark, config.adc, config.seed);
    Ok(Simulation {
        records,
        frames: calibration_frames(config),
        revealed: reveal_indices(config.n_symbols, config.reveal_fraction, config.seed)?,
    })
}

pub const CSV_HEADER: [&str; 7] = ["alice_q", "alice_p", "basis", "bob_q", "bob_p", "u_q", "u_p"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(records: &[SymbolRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        wr.write_record([
            r.alice_q.to_string(),
            r.alice_p.to_string(),
            r.basis.as_str().to_string(),
            opt(r.bob_q),
            opt(r.bob_p),
            opt(r.u_q),
            opt(r.u_p),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse(format!("record {line}: bad number `{s}`")))
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<SymbolRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected record header {:?}", header)));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let basis = match &row[2] {
            "q" => Basis::Q,
            "p" => Basis::P,
            "both" => Basis::Both,
            other => return Err(Error::Parse(format!("record {i}: unknown basis `{other}`"))),
        };
        let num = |k: usize| -> Result<f64> { parse_opt(&row[k], i)?.ok_or_else(|| Error::Parse(format!("record {i}: missing field {}", CSV_HEADER[k]))) };
        out.push(SymbolRecord {
            alice_q: num(0)?,
            alice_p: num(1)?,
            basis,
            bob_q: parse_opt(&row[3], i)?,
            bob_p: parse_opt(&row[4], i)?,
            u_q: parse_opt(&row[5], i)?,
            u_p: parse_opt(&row[6], i)?,
        });
    }
    Ok(out)
}

/// Binary dump magic; followed by a little-endian `u64` record count and
/// seven little-endian `f64` per record in CSV column order. The basis is
/// encoded as 0 (q), 1 (p) or 2 (both); missing values are NaN.
pub const BINARY_MAGIC: &[u8; 8] = b"CVQKDR01";

pub fn write_records_binary<W: Write>(records: &[SymbolRecord], mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Parse(e.to_string());
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_all(&(records.len() as u64).to_le_bytes()).map_err(io)?;
    for r in records {
        let nan = f64::NAN;
        for v in [
            r.alice_q,
            r.alice_p,
            r.basis.code(),
            r.bob_q.unwrap_or(nan),
            r.bob_p.unwrap_or(nan),
            r.u_q.unwrap_or(nan),
            r.u_p.unwrap_or(nan),
        ] {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_records_binary<R: Read>(mut r: R) -> Result<Vec<SymbolRecord>> {
    let io = |e: std::io::Error| Error::Parse(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse("not a record dump".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(io)?;
    let n = u64::from_le_bytes(buf) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    let some = |v: f64| if v.is_nan() { None } else { Some(v) };
    for i in 0..n {
        let mut v = [0f64; 7];
        for x in v.iter_mut() {
            r.read_exact(&mut buf).map_err(io)?;
            *x = f64::from_le_bytes(buf);
        }
        let basis = match v[2] as i64 {
            0 => Basis::Q,
            1 => Basis::P,
            2 => Basis::Both,
            _ => return Err(Error::Parse(format!("record {i}: bad basis code {}", v[2]))),
        };
        out.push(SymbolRecord { alice_q: v[0], alice_p: v[1], basis, bob_q: some(v[3]), bob_p: some(v[4]), u_q: some(v[5]), u_p: some(v[6]) });
    }
    Ok(out)
}

pub fn write_frames_csv<W: Write>(frames: &CalibrationFrames, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    wr.write_record(["vacuum_u", "dark_u"]).map_err(io)?;
    let n = frames.vacuum.len().max(frames.dark.len());
    for i in 0..n {
        wr.write_record([opt(frames.vacuum.get(i).copied()), opt(frames.dark.get(i).copied())]).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_frames_csv<R: Read>(r: R) -> Result<CalibrationFrames> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(["vacuum_u", "dark_u"]) {
        return Err(Error::Parse(format!("unexpected frame header {:?}", header)));
    }
    let mut frames = CalibrationFrames { vacuum: Vec::new(), dark: Vec::new() };
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(v) = parse_opt(&row[0], i)? {
            frames.vacuum.push(v);
        }
        if let Some(v) = parse_opt(&row[1], i)? {
            frames.dark.push(v);
        }
    }
    Ok(frames)
}
