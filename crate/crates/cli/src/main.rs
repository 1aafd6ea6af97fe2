use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvqkd_cli::commands::*;
use cvqkd_cli::config::{load_hardware, resolve_config_path, RunConfig, SweepSection, CONFIG_DIR_ENV};
use cvqkd_cli::{CliError, EXIT_ABORT, EXIT_OK};
use cvqkd_core::mc::{read_frames_csv, read_records_binary, read_records_csv, write_frames_csv, write_records_binary, write_records_csv, BINARY_MAGIC};
use cvqkd_core::security::KeyRateReport;
use cvqkd_core::states::DetectionMode;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Asymptotic key rates and parameter-estimation checks for Gaussian-modulated CV-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Common {
    /// Run config (TOML). Relative paths are also looked up in $CVQKD_CONFIG_DIR.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = CONFIG_DIR_ENV, hide_env_values = true)]
    config_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate at a single operating point.
    Keyrate {
        #[command(flatten)]
        common: Common,
    },
    /// Key rate over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        log: bool,
    },
    /// Monte-Carlo run followed by parameter estimation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        symbols: Option<usize>,
        /// Directory for records.csv (or records.bin), calibration.csv and report.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        binary: bool,
    },
    /// Parameter estimation on recorded data.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// CSV or binary record dump.
        #[arg(long)]
        records: PathBuf,
        /// Calibration frames CSV (vacuum_u, dark_u).
        #[arg(long)]
        calibration: PathBuf,
    },
    /// Excess-noise budget of a hardware file.
    Budget {
        #[arg(long)]
        hardware: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10.0)]
        v_mod: f64,
        #[arg(long, default_value = "homodyne")]
        detection: String,
        /// Untrusted channel excess noise added as its own component.
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cvqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let path = resolve_config_path(common.config.as_deref(), common.config_dir.as_deref())?;
    RunConfig::load(&path)
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, mut w: impl Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn keyrate_table(r: &KeyRateReport, mut w: impl Write) -> Result<(), CliError> {
    writeln!(w, "detection          {}", r.protocol.detection.name())?;
    writeln!(w, "T                  {}", r.channel.t)?;
    for (name, v) in r.noise_budget.components() {
        writeln!(w, "xi[{name}]{:pad$}{v:e}", "", pad = 15usize.saturating_sub(name.len()))?;
    }
    writeln!(w, "xi total           {}", r.channel.xi)?;
    writeln!(w, "SNR                {}", r.snr)?;
    writeln!(w, "I_AB   [bit/sym]   {}", r.i_ab)?;
    writeln!(w, "chi_EB [bit/sym]   {}", r.chi_eb)?;
    writeln!(w, "r      [bit/sym]   {}", r.secret_fraction_r)?;
    writeln!(w, "K      [bit/s]     {}", r.key_rate_k)?;
    writeln!(w, "abort              {}", r.abort)?;
    w.flush()?;
    Ok(())
}

fn abort_code(abort: bool) -> i32 {
    if abort {
        EXIT_ABORT
    } else {
        EXIT_OK
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Keyrate { common } => {
            let cfg = load(&common)?;
            let report = run_keyrate(&cfg.scenario()?)?;
            let out = sink(common.output.as_deref())?;
            match common.format.unwrap_or(Format::Table) {
                Format::Json => write_json(&report, out)?,
                Format::Table => keyrate_table(&report, out)?,
                Format::Csv => {
                    let row = SweepRow { value: report.channel.t, report: report.clone() };
                    write_sweep_csv("T", &[row], out)?;
                }
            }
            Ok(abort_code(report.abort))
        }
        Command::Sweep { common, param, from, to, steps, log } => {
            let cfg = load(&common)?;
            let base = cfg.sweep.clone();
            let axis = match (param, from, to, steps) {
                (Some(param), Some(from), Some(to), Some(steps)) => SweepSection { param, from, to, steps, log },
                (None, None, None, None) => {
                    let mut a = base.ok_or_else(|| CliError::Config("no sweep axis: pass --param/--from/--to/--steps or add [sweep]".into()))?;
                    a.log |= log;
                    a
                }
                _ => return Err(CliError::Config("--param, --from, --to and --steps go together".into())),
            };
            let rows = run_sweep(&cfg.scenario()?, &axis)?;
            let out = sink(common.output.as_deref())?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(&rows, out)?,
                _ => write_sweep_csv(&axis.param, &rows, out)?,
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { common, seed, symbols, out_dir, binary } => {
            let cfg = load(&common)?;
            let mut sim = cfg.simulation.clone();
            sim.seed = seed.unwrap_or(sim.seed);
            sim.symbols = symbols.unwrap_or(sim.symbols);
            let (out, report) = run_simulate(&cfg.scenario()?, &sim)?;
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                if binary {
                    let mut f = BufWriter::new(File::create(dir.join("records.bin"))?);
                    write_records_binary(&out.records, &mut f)?;
                    f.flush()?;
                } else {
                    write_records_csv(&out.records, BufWriter::new(File::create(dir.join("records.csv"))?))?;
                }
                write_frames_csv(&out.frames, BufWriter::new(File::create(dir.join("calibration.csv"))?))?;
                write_json(&report, BufWriter::new(File::create(dir.join("report.json"))?))?;
            }
            write_json(&report, sink(common.output.as_deref())?)?;
            for w in &report.estimated.warnings {
                eprintln!("warning: {w}");
            }
            Ok(abort_code(report.estimated.keyrate.as_ref().is_none_or(|k| k.abort)))
        }
        Command::Estimate { common, records, calibration } => {
            let cfg = load(&common)?;
            let mut head = [0u8; 8];
            let n = File::open(&records)?.read(&mut head)?;
            let f = BufReader::new(File::open(&records)?);
            let recs = if n == 8 && &head == BINARY_MAGIC { read_records_binary(f)? } else { read_records_csv(f)? };
            let frames = read_frames_csv(BufReader::new(File::open(&calibration)?))?;
            let revealed = revealed_for(recs.len(), &cfg.simulation)?;
            let est = estimate_and_rate(&recs, &frames, &revealed, &cfg.scenario()?, &cfg.simulation)?;
            write_json(&est, sink(common.output.as_deref())?)?;
            for w in &est.warnings {
                eprintln!("warning: {w}");
            }
            Ok(abort_code(est.keyrate.as_ref().is_none_or(|k| k.abort)))
        }
        Command::Budget { hardware, t, v_mod, detection, xi, format } => {
            let hw = load_hardware(&hardware)?;
            let detection = match detection.as_str() {
                "homodyne" => DetectionMode::Homodyne,
                "heterodyne" => DetectionMode::Heterodyne,
                other => return Err(CliError::Config(format!("unknown detection `{other}`"))),
            };
            let b = run_budget(&hw, t, v_mod, detection, xi)?;
            let mut out = sink(None)?;
            match format.unwrap_or(Format::Table) {
                Format::Json => write_json(&b, out)?,
                Format::Csv => {
                    let mut wr = csv::Writer::from_writer(out);
                    wr.write_record(["component", "xi_snu"])?;
                    for (k, v) in b.components.components() {
                        wr.write_record([k.as_str(), &v.to_string()])?;
                    }
                    wr.write_record(["total", &b.total.to_string()])?;
                    wr.flush()?;
                }
                Format::Table => {
                    for (k, v) in b.components.components() {
                        writeln!(out, "{k:<12} {v:e}")?;
                    }
                    writeln!(out, "{:<12} {:e}", "[receiver]", b.receiver_total)?;
                    writeln!(out, "{:<12} {:e}", "[other]", b.channel_total)?;
                    writeln!(out, "{:<12} {:e}", "[total]", b.total)?;
                    out.flush()?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}
