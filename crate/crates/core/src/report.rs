//! CSV emission.
//!
//! Every file starts with `#` lines echoing the resolved configuration, then
//! a header row. Floats use the shortest representation that round-trips, so
//! identical inputs give identical bytes.

use std::io::Write;

use crate::config::{ReconciliationSpec, RunConfig};
use crate::error::{Error, Result};
use crate::finite_size::FER_FIT_BLOCK_LENGTH;
use crate::sweep::{PassReport, SweepRecord};

/// Shortest round-trip decimal form of `x`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Writes the `#` metadata block for `command`.
pub fn write_metadata<W: Write>(
    w: &mut W,
    command: &str,
    cfg: &RunConfig,
    finite_size: bool,
) -> Result<()> {
    writeln!(w, "# cvqkd {} {command}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    if finite_size {
        writeln!(
            w,
            "# note: FER fit was derived for block length {}; applied here with N = {} (conservative)",
            format_f64(FER_FIT_BLOCK_LENGTH),
            format_f64(cfg.finite_size.total_symbols)
        )
        .map_err(io)?;
    }
    writeln!(w, "# resolved config:").map_err(io)?;
    for line in cfg.to_json_pretty().lines() {
        writeln!(w, "# {line}").map_err(io)?;
    }
    Ok(())
}

pub const SWEEP_HEADER: [&str; 33] = [
    "protocol",
    "detection",
    "reconciliation",
    "altitude_km",
    "elevation_deg",
    "receiver_aperture_m",
    "ogs_altitude_km",
    "status",
    "far_field_excluded",
    "link_distance_km",
    "atmosphere_path_km",
    "far_field_km",
    "transmittance",
    "a_geo_db",
    "a_scat_db",
    "a_sci_db",
    "a_tot_db",
    "modulation_variance",
    "qam_nu",
    "channel_excess_snu",
    "detector_excess_snu",
    "detector_efficiency",
    "snr_db",
    "beta",
    "beta_valid",
    "fer",
    "fer_valid",
    "i_ab",
    "s_be",
    "delta_n",
    "skr_bits_per_pulse",
    "skr_bits_per_s",
    "skr_positive",
];

fn sweep_row(cfg: &RunConfig, r: &SweepRecord) -> Vec<String> {
    let skr = if r.delta_n.is_some() {
        r.skr_bits_per_s
    } else {
        r.skr_bits_per_pulse
    };
    let positive = skr.is_some_and(|s| s > 0.0);
    vec![
        r.protocol.clone(),
        r.detection.as_str().into(),
        r.reconciliation.into(),
        format_f64(r.point.altitude_km),
        format_f64(r.point.elevation_deg),
        format_f64(r.point.receiver_aperture_m),
        format_f64(r.ogs_altitude_km),
        r.status.as_str().into(),
        (r.status == crate::sweep::PointStatus::FarField).to_string(),
        format_f64(r.link_distance_km),
        format_f64(r.atmosphere_path_km),
        format_f64(r.far_field_km),
        opt(r.transmittance),
        opt(r.a_geo_db),
        opt(r.a_scat_db),
        opt(r.a_sci_db),
        opt(r.a_tot_db),
        format_f64(r.modulation_variance),
        opt(r.qam_nu),
        format_f64(cfg.noise.channel_excess),
        format_f64(cfg.noise.detector_excess),
        format_f64(cfg.noise.detector_efficiency),
        opt(r.snr_db),
        opt(r.beta),
        opt_bool(r.beta_valid),
        opt(r.fer),
        opt_bool(r.fer_valid),
        opt(r.i_ab),
        opt(r.s_be),
        opt(r.delta_n),
        opt(r.skr_bits_per_pulse),
        opt(r.skr_bits_per_s),
        positive.to_string(),
    ]
}

/// Writes sweep or comparison rows.
pub fn write_sweep_csv<W: Write>(
    mut w: W,
    command: &str,
    cfg: &RunConfig,
    records: &[SweepRecord],
) -> Result<()> {
    let finite = !matches!(cfg.reconciliation, ReconciliationSpec::Asymptotic { .. });
    write_metadata(&mut w, command, cfg, finite)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(SWEEP_HEADER).map_err(io)?;
    for r in records {
        csv.write_record(sweep_row(cfg, r)).map_err(io)?;
    }
    csv.flush().map_err(io)
}

/// SKR (bits/s) against time, one column per reconciliation model.
pub fn write_pass_series_csv<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    report: &PassReport,
) -> Result<()> {
    write_metadata(&mut w, "pass", cfg, true)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["time_s".to_string(), "elevation_deg".to_string()];
    header.extend(
        report
            .results
            .iter()
            .map(|(k, _)| format!("skr_{}_bits_per_s", k.as_str())),
    );
    csv.write_record(&header).map_err(io)?;
    for (i, s) in report.profile.samples().iter().enumerate() {
        let mut row = vec![format_f64(s.time_s), format_f64(s.elevation_deg)];
        row.extend(report.results.iter().map(|(_, r)| opt(r.skr_series[i].skr)));
        csv.write_record(&row).map_err(io)?;
    }
    csv.flush().map_err(io)
}

/// One row per reconciliation model with the accumulated key.
pub fn write_pass_summary_csv<W: Write>(
    mut w: W,
    cfg: &RunConfig,
    report: &PassReport,
) -> Result<()> {
    use crate::pass::BinStatus;
    write_metadata(&mut w, "pass", cfg, true)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "reconciliation",
        "duration_s",
        "total_key_bits",
        "min_positive_elevation_deg",
        "bins_evaluated",
        "bins_excluded",
        "bins_keyhole",
    ])
    .map_err(io)?;
    for (kind, r) in &report.results {
        let count = |s: BinStatus| r.bins.iter().filter(|b| b.status == s).count().to_string();
        csv.write_record([
            kind.as_str().to_string(),
            format_f64(report.profile.duration_s()),
            format_f64(r.total_key_bits),
            opt(r.min_positive_elevation_deg),
            count(BinStatus::Evaluated),
            count(BinStatus::Excluded),
            count(BinStatus::Keyhole),
        ])
        .map_err(io)?;
    }
    csv.flush().map_err(io)
}
