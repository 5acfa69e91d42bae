//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs under `cargo test` with its own harness.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use cvqkd_core::channel::{rytov_variance, slant_path, LinkGeometry};
use cvqkd_core::config::{AxisSpec, ProtocolSpec, ReconciliationSpec, RunConfig};
use cvqkd_core::finite_size::{
    beta, fer, ReconciliationKind, ReconciliationModel, FER_COEFFICIENTS,
};
use cvqkd_core::gm::{skr_asymptotic_gm, DetectionKind, GmParams, NoiseBudget};
use cvqkd_core::psk::{zeta_weights, PskConfig, PskOrder};
use cvqkd_core::qam::thermal_correlation_terms;
use cvqkd_core::report::write_sweep_csv;
use cvqkd_core::sweep::{
    compare_protocols, evaluate_point, run_pass, run_sweep, thread_pool, ProtocolPlan, SweepPoint,
};
use cvqkd_core::{Decibel, Length, Transmittance};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

struct Outcome {
    ok: bool,
    detail: String,
}

/// Name, time limit and check.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn null_test() -> Outcome {
    let mut worst_holevo = f64::NEG_INFINITY;
    let mut worst_gap = 0.0f64;
    let one = Transmittance::new(1.0).unwrap();
    for kind in [DetectionKind::Homodyne, DetectionKind::Heterodyne] {
        for va in [0.5, 2.0, 5.0] {
            let r = skr_asymptotic_gm(
                GmParams::new(va).unwrap(),
                one,
                &NoiseBudget::noiseless(),
                kind,
                0.9,
            )
            .unwrap();
            worst_holevo = worst_holevo.max(r.holevo);
            worst_gap = worst_gap.max((r.skr_asymptotic - 0.9 * r.mutual_information).abs());
        }
    }
    outcome(
        worst_holevo <= 1e-9 && worst_gap <= 1e-9,
        format!("max S_BE = {worst_holevo:e}, max |SKR - beta*I_AB| = {worst_gap:e}"),
    )
}

fn symplectic_oracle() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = gm_case();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = strategy.new_tree(&mut runner).unwrap().current();
        let (outer, cond) = gm_spectra(&c);
        let (cf, _) = closed_form(&c);
        let oracle = [outer[0], outer[1], cond[0], cond[1]];
        for k in 0..4 {
            worst = worst.max((cf[k] - oracle[k]).abs() / oracle[k].max(1.0));
        }
    }
    outcome(
        worst <= 1e-8,
        format!("1000 configs, max relative eigenvalue gap {worst:e}"),
    )
}

fn psk_identity() -> Outcome {
    let mut worst_eig = 0.0f64;
    let mut worst_sum = 0.0f64;
    for order in [PskOrder::Two, PskOrder::Four, PskOrder::Eight] {
        for i in 1..=20 {
            let alpha = i as f64 * 0.05;
            let mut zeta = zeta_weights(&PskConfig::new(order, alpha).unwrap()).0;
            worst_sum = worst_sum.max((zeta.iter().sum::<f64>() - 1.0).abs());
            zeta.sort_by(|a, b| b.total_cmp(a));
            let fock = psk_fock_spectrum(order.states(), alpha, 30);
            for (z, f) in zeta.iter().zip(&fock) {
                worst_eig = worst_eig.max((z - f).abs());
            }
        }
    }
    outcome(
        worst_eig <= 1e-10 && worst_sum <= 1e-12,
        format!("max |zeta - fock| = {worst_eig:e}, max |sum - 1| = {worst_sum:e}"),
    )
}

fn qam_thermal() -> Outcome {
    let mut worst = 0.0f64;
    for va in [0.5, 2.0, 5.0] {
        let terms = match thermal_correlation_terms(0.5 * va) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("V_A = {va}: {e}")),
        };
        for t in [1.0, 0.1, 0.01] {
            let z = terms.z_star(Transmittance::new(t).unwrap(), 0.0);
            let exact = (t * (va * va + 2.0 * va)).sqrt();
            worst = worst.max((z - exact).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |Z* - sqrt(T(V^2+2V))| = {worst:e}"),
    )
}

fn channel_oracles() -> Outcome {
    let lambda = Length::from_nm(1550.0);
    let k = 2.0 * std::f64::consts::PI / lambda.m();
    let mut rytov = 0.0f64;
    for (l, cn2) in [(20e3, 1.7e-14), (20.4e3, 5e-15), (60e3, 3e-16)] {
        let numeric = rytov_variance(Length::from_m(l), |_| cn2, lambda).unwrap();
        let exact = 2.25 * 6.0 / 11.0 * cn2 * k.powf(7.0 / 6.0) * l.powf(11.0 / 6.0);
        rytov = rytov.max((numeric / exact - 1.0).abs());
    }
    let mut geom = 0.0f64;
    for alt in [200.0, 417.5, 1000.0] {
        for ogs in [0.0, 1.029] {
            for elev in 5..=90 {
                let g = LinkGeometry::new(Length::from_km(alt), elev as f64)
                    .with_ogs_altitude(Length::from_km(ogs));
                let p = slant_path(&g).unwrap();
                let re = g.earth_radius.m();
                let station = re + g.ogs_altitude.m();
                let total = ray_to_circle(station, re + g.satellite_altitude.m(), elev as f64);
                let atm = ray_to_circle(station, re + g.atmosphere_thickness.m(), elev as f64);
                geom = geom
                    .max((p.total_distance.m() / total - 1.0).abs())
                    .max((p.effective_atmosphere.m() / atm - 1.0).abs());
            }
        }
    }
    outcome(
        rytov <= 1e-9 && geom <= 1e-9,
        format!("Rytov rel. error {rytov:e}, slant path rel. error {geom:e}"),
    )
}

fn ordering() -> Outcome {
    let pool = thread_pool(None).unwrap();
    let mut cfg = RunConfig::default();
    cfg.sweep.altitude_km = AxisSpec::List(vec![500.0]);
    cfg.sweep.elevation_deg = vec![90.0];
    cfg.compare.protocols = vec![
        ProtocolSpec::default(),
        ProtocolSpec::qam(16),
        ProtocolSpec::qam(8),
        ProtocolSpec::psk(PskOrder::Eight),
        ProtocolSpec::psk(PskOrder::Four),
    ];
    let rows = match compare_protocols(&cfg, &pool) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let skr: Vec<f64> = rows.iter().map(|r| r.skr_bits_per_pulse.unwrap()).collect();
    let ordered = skr.windows(2).all(|w| w[0] > w[1]);

    let cfg = RunConfig {
        protocol: ProtocolSpec::psk(PskOrder::Two),
        ..Default::default()
    };
    let bpsk = run_sweep(&cfg, &pool).unwrap();
    let best_bpsk = bpsk
        .iter()
        .map(|r| r.skr_bits_per_pulse.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let labels: Vec<String> = rows
        .iter()
        .zip(&skr)
        .map(|(r, s)| format!("{} {s:.4e}", r.protocol))
        .collect();
    outcome(
        ordered && best_bpsk <= 0.0,
        format!(
            "{} ; 2-PSK max over {} points {best_bpsk:.3e}",
            labels.join(" > "),
            bpsk.len()
        ),
    )
}

/// Largest zenith altitude (1 km grid) with a positive finite-size key.
fn last_positive_altitude(aperture: f64) -> Option<f64> {
    let cfg = RunConfig {
        reconciliation: ReconciliationSpec::finite(ReconciliationKind::Md),
        ..Default::default()
    };
    let plan = ProtocolPlan::new(cfg.protocol, DetectionKind::Homodyne).unwrap();
    (150..=2000).rev().map(|h| h as f64).find(|&h| {
        let p = SweepPoint {
            altitude_km: h,
            elevation_deg: 90.0,
            receiver_aperture_m: aperture,
        };
        let r = evaluate_point(&cfg, &plan, p).unwrap();
        r.skr_bits_per_s.is_some_and(|s| s > 0.0)
    })
}

fn finite_size_boundaries() -> Outcome {
    let one = last_positive_altitude(1.0);
    let two = last_positive_altitude(2.0);
    let within =
        |got: Option<f64>, target: f64| got.is_some_and(|h| (h / target - 1.0).abs() <= 0.15);
    outcome(
        within(one, 375.0) && within(two, 850.0),
        format!("D_r = 1 m: {one:?} km (target 375), D_r = 2 m: {two:?} km (target 850)"),
    )
}

fn pass_budget() -> Outcome {
    let pool = thread_pool(None).unwrap();
    let report = match run_pass(&RunConfig::default(), &pool) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let get = |k: ReconciliationKind| {
        report
            .results
            .iter()
            .find(|(kind, _)| *kind == k)
            .map(|(_, r)| r.clone())
            .unwrap()
    };
    let md = get(ReconciliationKind::Md);
    let mlc = get(ReconciliationKind::MlcMsd);
    let band = |x: f64, target: f64| x >= 0.5 * target && x <= 2.0 * target;
    let lower = match (
        md.min_positive_elevation_deg,
        mlc.min_positive_elevation_deg,
    ) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    outcome(
        band(md.total_key_bits, 1.235e9)
            && band(mlc.total_key_bits, 385e6)
            && md.total_key_bits >= mlc.total_key_bits
            && lower,
        format!(
            "MD {:.4e} bits (min elev {:?}), MLC-MSD {:.4e} bits (min elev {:?}), duration {:.0} s",
            md.total_key_bits,
            md.min_positive_elevation_deg,
            mlc.total_key_bits,
            mlc.min_positive_elevation_deg,
            report.profile.duration_s()
        ),
    )
}

fn fit_sanity() -> Outcome {
    let zero = Decibel(0.0);
    let md = ReconciliationModel::md();
    let mlc = ReconciliationModel::mlc_msd();
    let direct = |c: [f64; 4]| c[0] + c[2];
    let b_md = beta(zero, &md).value;
    let b_mlc = beta(zero, &mlc).value;
    // the fit is centred where m2·SNR + m3 = 0, i.e. -15.3186 dB
    let [_, m2, m3] = FER_COEFFICIENTS;
    let centre = -m3 / m2;
    let f_centre = fer(Decibel(centre), &md).value;

    let mut in_range = true;
    for i in -400..=400 {
        let s = Decibel(i as f64 * 0.1);
        for m in [&md, &mlc] {
            in_range &= (0.0..=1.0).contains(&beta(s, m).value);
            in_range &= (0.0..=1.0).contains(&fer(s, m).value);
        }
    }
    let ok = (b_md - 0.8996).abs() <= 1e-4
        && (b_md - direct(md.beta_coefficients)).abs() <= 1e-12
        && (b_mlc - 0.9185).abs() <= 1e-4
        && (b_mlc - direct(mlc.beta_coefficients)).abs() <= 1e-12
        && (centre + 15.32).abs() < 0.005
        && (f_centre - 0.5).abs() <= 1e-6
        && in_range;
    outcome(
        ok,
        format!(
            "beta_MD(0) = {b_md:.5}, beta_MLC-MSD(0) = {b_mlc:.5}, FER({centre:.4} dB) = {f_centre}, reported values in [0,1]: {in_range}"
        ),
    )
}

fn determinism() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.sweep.receiver_aperture_m = vec![1.0, 2.0];
    let max = std::thread::available_parallelism()
        .map_or(8, |n| n.get())
        .max(8);
    let render = |workers: usize, compare: bool| -> Vec<u8> {
        let pool = thread_pool(Some(workers)).unwrap();
        let rows = if compare {
            compare_protocols(&cfg, &pool).unwrap()
        } else {
            run_sweep(&cfg, &pool).unwrap()
        };
        let mut buf = Vec::new();
        write_sweep_csv(
            &mut buf,
            if compare { "compare" } else { "sweep" },
            &cfg,
            &rows,
        )
        .unwrap();
        buf
    };
    let mut ok = true;
    for compare in [false, true] {
        let a = render(max, compare);
        let b = render(max, compare);
        let c = render(1, compare);
        ok &= a == b && a == c;
    }
    let lines = render(1, true).iter().filter(|&&b| b == b'\n').count();
    outcome(
        ok,
        format!(
            "sweep and compare CSV identical across runs with {max} and 1 workers ({lines} lines)"
        ),
    )
}

fn main() -> ExitCode {
    // the default test harness passes flags like --nocapture; nothing to parse
    let criteria: [Criterion; 10] = [
        (
            "lossless-noiseless null test",
            Duration::from_secs(1),
            null_test,
        ),
        (
            "symplectic oracle equivalence",
            Duration::from_secs(10),
            symplectic_oracle,
        ),
        (
            "PSK spectral identity",
            Duration::from_secs(10),
            psk_identity,
        ),
        (
            "QAM thermal-limit identity",
            Duration::from_secs(60),
            qam_thermal,
        ),
        (
            "channel-model oracles",
            Duration::from_secs(5),
            channel_oracles,
        ),
        ("protocol ordering", Duration::from_secs(120), ordering),
        (
            "finite-size altitude boundaries",
            Duration::from_secs(60),
            finite_size_boundaries,
        ),
        ("pass key budget", Duration::from_secs(120), pass_budget),
        ("fit-model sanity", Duration::from_secs(1), fit_sanity),
        ("determinism", Duration::from_secs(30), determinism),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let ok = out.ok && elapsed <= *budget;
        if !ok {
            failures += 1;
        }
        println!(
            "[{}] {:>2}. {name} ({:.2} s, limit {} s): {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
