//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! (visible with `--nocapture`) before asserting.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{cov, draw, max_abs_diff, standard_form_triple, two_mode_state};
use cvqkd_core::estimation::{calibrate_phi, estimate, EstimationOptions};
use cvqkd_core::gaussian::*;
use cvqkd_core::mc::{simulate, SimConfig};
use cvqkd_core::noise::{wavelength_window, xi_adc, xi_cmrr, xi_detection, NoiseBudget};
use cvqkd_core::security::*;
use cvqkd_core::states::DetectionMode::{Heterodyne, Homodyne};
use cvqkd_core::states::*;
use cvqkd_core::units::{convert_quadrature, convert_variance, QuadratureUnit};
use nalgebra::DMatrix;

fn report(n: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {n:>2} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn channel_matrix(v_mod: f64, t: f64, xi: f64) -> DMatrix<f64> {
    let a = v_mod + 1.0;
    let b = t * v_mod + 1.0 + xi;
    let c = (t * (v_mod * v_mod + 2.0 * v_mod)).sqrt();
    DMatrix::from_row_slice(4, 4, &[a, 0., c, 0., 0., a, 0., -c, c, 0., b, 0., 0., -c, 0., b])
}

#[test]
fn criterion_01_holevo_route_equivalence() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut n = 0;
    for v_mod in [1.0, 5.0, 20.0] {
        for t in [0.1, 0.5, 0.9] {
            for xi in [0.0, 0.01, 0.1] {
                for det in [Homodyne, Heterodyne] {
                    let ch = ChannelParams::new(t, xi).unwrap();
                    let m = ModulationSpec::new(v_mod).unwrap();
                    let p = holevo_purification(&ch, &m, det).unwrap();
                    let c = holevo_cloner(&ch, &m, det).unwrap();
                    worst = worst.max((p - c).abs());
                    n += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, "Holevo routes agree", n == 54 && worst < 1e-9 && secs < 5.0, format!("{n} points, max |Δχ| = {worst:.2e} bits, {secs:.3} s"));
}

#[test]
fn criterion_02_closed_form_vs_generic_spectrum() {
    let mut worst = 0.0_f64;
    let triples = draw(standard_form_triple(), 1000, 11);
    for &(a, b, c) in &triples {
        let (n1, n2) = two_mode_symplectic_eigenvalues(a, b, c).unwrap();
        let generic = symplectic_eigenvalues(&standard_form(a, b, c)).unwrap();
        worst = worst.max((n1.max(n2) - generic[0]).abs()).max((n1.min(n2) - generic[1]).abs());
    }
    report(2, "closed-form vs generic symplectic eigenvalues", triples.len() == 1000 && worst < 1e-10, format!("1000 matrices, max deviation {worst:.2e}"));
}

#[test]
fn criterion_03_heterodyne_as_split_homodynes() {
    let mut worst = 0.0_f64;
    let samples = draw(two_mode_state(), 1000, 12);
    for st in &samples {
        let s = cov(st.sigma.clone());
        let split = heterodyne_split(&s).unwrap();
        let seq = partial_homodyne(&partial_homodyne(&split, 2, Quadrature::P).unwrap(), 1, Quadrature::Q).unwrap();
        worst = worst.max(seq.max_abs_diff(&partial_heterodyne(&s, 1).unwrap()));
    }
    report(3, "heterodyne equals beamsplitter + two homodynes", samples.len() == 1000 && worst < 1e-10, format!("1000 states, max entry deviation {worst:.2e}"));
}

#[test]
fn criterion_04_pm_eb_equivalence() {
    let (mut fwd, mut round) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    for v_mod in [0.5, 5.0, 30.0] {
        for t in [0.1, 0.6, 1.0] {
            for xi in [0.0, 0.05, 0.5] {
                let pm = pm_matrix(v_mod, t, xi);
                let eb = pm_to_eb(&pm, v_mod).unwrap();
                fwd = fwd.max(max_abs_diff(eb.matrix(), &channel_matrix(v_mod, t, xi)));
                round = round.max(eb_to_pm(&eb, v_mod).unwrap().max_abs_diff(&pm));
                n += 1;
            }
        }
    }
    report(4, "PM to EB mapping", n == 27 && fwd < 1e-12 && round < 1e-12, format!("{n} points, mapping {fwd:.2e}, round trip {round:.2e}"));
}

#[test]
fn criterion_05_heterodyne_construction() {
    let (mut layout, mut sub) = (0.0_f64, 0.0_f64);
    for v_mod in [1.0, 10.0, 40.0] {
        for t in [0.05, 0.5, 1.0] {
            for xi in [0.0, 0.02, 0.3] {
                let out = heterodyne_split(&noisy_channel(&tmsvs(v_mod + 1.0).unwrap(), t, xi).unwrap()).unwrap();
                let a = v_mod + 1.0;
                let c = (t / 2.0 * (v_mod * v_mod + 2.0 * v_mod)).sqrt();
                let b = t / 2.0 * v_mod + 1.0 + xi / 2.0;
                let d = -0.5 * (t * v_mod + xi);
                #[rustfmt::skip]
                let want = DMatrix::from_row_slice(6, 6, &[
                    a, 0., c, 0., -c, 0.,
                    0., a, 0., -c, 0., c,
                    c, 0., b, 0., d, 0.,
                    0., -c, 0., b, 0., d,
                    -c, 0., d, 0., b, 0.,
                    0., c, 0., d, 0., b,
                ]);
                layout = layout.max(max_abs_diff(out.matrix(), &want));
                sub = sub.max(max_abs_diff(out.reduced(&[0, 1]).unwrap().matrix(), &channel_matrix(v_mod, t / 2.0, xi / 2.0)));
            }
        }
    }
    report(5, "heterodyne split layout", layout < 1e-12 && sub < 1e-12, format!("6x6 layout {layout:.2e}, (A,B1) block {sub:.2e}"));
}

#[test]
fn criterion_06_pure_state_and_null_checks() {
    let mut tmsvs_max = 0.0_f64;
    for v in [1.0, 2.0, 11.0, 101.0, 1001.0] {
        tmsvs_max = tmsvs_max.max(von_neumann_entropy(&tmsvs(v).unwrap()).unwrap().abs());
    }
    let mut null_max = 0.0_f64;
    for det in [Homodyne, Heterodyne] {
        for v_mod in [1.0, 10.0, 50.0] {
            let ch = ChannelParams::new(1.0, 0.0).unwrap();
            null_max = null_max.max(holevo_purification(&ch, &ModulationSpec::new(v_mod).unwrap(), det).unwrap().abs());
        }
        for t in [0.1, 0.5, 0.9] {
            for route in [HolevoRoute::Purification, HolevoRoute::Cloner] {
                let ch = ChannelParams::new(t, 0.0).unwrap();
                let chi = holevo(&ch, &ModulationSpec::new(0.0).unwrap(), det, TrustAssumption::Strict, route).unwrap();
                null_max = null_max.max(chi.abs());
            }
        }
    }
    report(
        6,
        "pure-state entropy and null leakage",
        tmsvs_max == 0.0 && null_max < 1e-12,
        format!("max S(TMSVS) = {tmsvs_max:e}, max |χ| at null points = {null_max:.2e}"),
    );
}

#[test]
fn criterion_07_no_three_db_limit() {
    let mut rs = Vec::new();
    for det in [Homodyne, Heterodyne] {
        let p = ProtocolParams {
            modulation: ModulationSpec::new(10.0).unwrap(),
            detection: det,
            beta: 1.0,
            fer: 0.0,
            nu_disclosed: 0.0,
            symbol_rate: 1.0,
        };
        let ch = ChannelParams::new(0.05, 0.0).unwrap();
        let r = evaluate(&ch, &p, TrustAssumption::Strict, HolevoRoute::Purification, Default::default()).unwrap();
        rs.push(r.secret_fraction_r);
    }
    report(7, "positive key beyond 3 dB loss", rs.iter().all(|&r| r > 0.0), format!("T = 0.05: r_hom = {:.4e}, r_het = {:.4e}", rs[0], rs[1]));
}

#[test]
fn criterion_08_receiver_noise_doubles_with_mu() {
    let f = 193.4e12;
    let det = |m| xi_detection(m, 1e-12, 1e9, 1e-8, f, 1e-3).unwrap();
    let adc = |m| xi_adc(m, 1e-8, f, 1e4, 0.8, 1e-3, 2.0, 12, 1e-12).unwrap();
    let cmrr = |m| xi_cmrr(m, 1e5, 10.0, 1e-8, f, 1e-3, 1e-15, 1e-15, 1e9).unwrap();
    let doubled = det(Heterodyne) == 2.0 * det(Homodyne) && adc(Heterodyne) == 2.0 * adc(Homodyne) && cmrr(Heterodyne) == 2.0 * cmrr(Homodyne);
    let hw = cvqkd_core::noise::HardwareParams::from_toml_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/hardware.toml")).unwrap(),
    )
    .unwrap();
    let hom = NoiseBudget::from_hardware(&hw, 0.5, 10.0, Homodyne, &[]).unwrap();
    let het = NoiseBudget::from_hardware(&hw, 0.5, 10.0, Heterodyne, &[]).unwrap();
    let budget_doubled = ["detection", "adc", "cmrr"].iter().all(|k| het.get(k).unwrap() == 2.0 * hom.get(k).unwrap());
    let budget_same = ["rin_sig", "modulation", "raman"].iter().all(|k| het.get(k) == hom.get(k));
    let invariant = budget_same;
    let doubled = doubled && budget_doubled;
    report(
        8,
        "mu-doubling of receiver noise",
        doubled && invariant,
        format!("det {:.4e} -> {:.4e}, adc {:.4e} -> {:.4e}, cmrr {:.4e} -> {:.4e}", det(Homodyne), det(Heterodyne), adc(Homodyne), adc(Heterodyne), cmrr(Homodyne), cmrr(Heterodyne)),
    );
}

#[test]
fn criterion_09_raman_window() {
    let w = wavelength_window(1550e-9, 1e9).unwrap();
    let rel = (w - 8e-12).abs() / 8e-12;
    report(9, "Raman wavelength window", rel < 0.05, format!("{:.4} pm at 1550 nm / 1 GHz ({:.2}% from 8 pm)", w * 1e12, 100.0 * rel));
}

#[test]
fn criterion_10_monte_carlo_recovery() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let est = pool.install(|| {
        let mut cfg = SimConfig::new(1_000_000, 2024, ModulationSpec::new(10.0).unwrap(), ChannelParams::new(0.5, 0.05).unwrap(), Homodyne);
        cfg.phi_conversion = 2.5;
        cfg.n_det_dark = 2.5 * 0.1;
        cfg.reveal_fraction = 1.0;
        let sim = simulate(&cfg).unwrap();
        let cal = calibrate_phi(&sim.frames.vacuum, &sim.frames.dark).unwrap();
        estimate(&sim.records, &sim.revealed, &cal, 10.0, Homodyne, &EstimationOptions::default()).unwrap()
    });
    let secs = start.elapsed().as_secs_f64();
    let t_rel = (est.t_hat - 0.5).abs() / 0.5;
    let xi_abs = (est.xi_hat - 0.05).abs();
    let cr = est.covariance_route;
    let ok = t_rel <= 0.01 && xi_abs <= 0.01 && est.routes_agree && secs < 60.0;
    report(
        10,
        "Monte-Carlo estimation recovery",
        ok,
        format!(
            "T̂ = {:.5} ({:.3}%), ξ̂ = {:.5} (|Δ| {:.4}), covariance route T = {:.5}, ξ = {:.5}, agree = {}, {secs:.1} s on 1 thread",
            est.t_hat,
            100.0 * t_rel,
            est.xi_hat,
            xi_abs,
            cr.t,
            cr.xi,
            est.routes_agree
        ),
    );
}

#[test]
fn criterion_11_simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/simulate.toml");
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--seed", "99", "--symbols", "100000", "--out-dir", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["records.csv", "calibration.csv", "report.json"].iter().map(|f| std::fs::read(out_dir.join(f)).unwrap()).collect();
        (out.stdout, files)
    };
    let (a_out, a) = run("a");
    let (b_out, b) = run("b");
    let bytes: usize = a.iter().map(Vec::len).sum();
    report(11, "simulate output is byte-identical", a == b && a_out == b_out, format!("{bytes} bytes of dumps compared"));
}

#[test]
fn criterion_12_unit_round_trips() {
    let units = [QuadratureUnit::Snu, QuadratureUnit::Nu, QuadratureUnit::si(2.0 * std::f64::consts::PI * 193.4e12)];
    let mut worst = 0.0_f64;
    let mut square = 0.0_f64;
    for quad in [Quadrature::Q, Quadrature::P] {
        for &from in &units {
            for &via in &units {
                for x in [1.0, -0.37, 12.5] {
                    let y = convert_quadrature(convert_quadrature(x, quad, from, via).unwrap(), quad, via, from).unwrap();
                    worst = worst.max((y - x).abs() / x.abs());
                }
                let amp = convert_quadrature(1.0, quad, from, via).unwrap();
                let var = convert_variance(1.0, quad, from, via).unwrap();
                square = square.max((var - amp * amp).abs() / var);
            }
        }
        let chain = convert_quadrature(
            convert_quadrature(convert_quadrature(0.8, quad, units[0], units[1]).unwrap(), quad, units[1], units[2]).unwrap(),
            quad,
            units[2],
            units[0],
        )
        .unwrap();
        worst = worst.max((chain - 0.8).abs() / 0.8);
    }
    report(12, "unit conversions", worst < 1e-14 && square < 1e-14, format!("max round-trip error {worst:.2e}, variance vs amplitude² {square:.2e}"));
}
