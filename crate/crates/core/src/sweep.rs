//! Evaluation of configured sweeps, protocol comparisons and passes.
//!
//! Points are evaluated on a rayon pool and collected in input order, so the
//! output does not depend on the number of workers.

use std::fs::File;

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{link_budget, slant_path};
use crate::config::{PassSource, ProtocolSpec, QamDistributionSpec, ReconciliationSpec, RunConfig};
use crate::error::{Error, Result};
use crate::finite_size::{skr_finite_gm, ReconciliationKind, ReconciliationModel};
use crate::gm::{skr_asymptotic_gm, DetectionKind, GmParams, SecurityResult};
use crate::pass::{
    integrate_key_bits, load_profile, synthesize_circular_pass, PassProfile, PassResult,
};
use crate::psk::{skr_asymptotic_psk, PskConfig};
use crate::qam::{optimize_nu, skr_asymptotic_qam, QamDistribution, QamModel};
use crate::quantities::{Length, Transmittance};

/// Builds a pool with `workers` threads, or rayon's default when `None`.
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

#[derive(Debug, Clone)]
enum ProtocolModel {
    Gm(GmParams),
    Psk(PskConfig),
    Qam(Box<QamModel>),
    QamOptimized { m: usize, alpha: f64 },
}

/// A protocol with its constellation-dependent numerics done up front.
#[derive(Debug, Clone)]
pub struct ProtocolPlan {
    pub spec: ProtocolSpec,
    pub detection: DetectionKind,
    model: ProtocolModel,
}

impl ProtocolPlan {
    pub fn new(spec: ProtocolSpec, detection: DetectionKind) -> Result<Self> {
        let model = match spec {
            ProtocolSpec::Gm {
                modulation_variance,
            } => ProtocolModel::Gm(GmParams::new(modulation_variance)?),
            ProtocolSpec::Psk {
                states,
                modulation_variance,
            } => ProtocolModel::Psk(PskConfig::from_modulation_variance(
                states,
                modulation_variance,
            )?),
            ProtocolSpec::Qam {
                points_per_quadrature: m,
                modulation_variance,
                distribution,
            } => {
                let alpha = (0.5 * modulation_variance).sqrt();
                match distribution {
                    QamDistributionSpec::Binomial => ProtocolModel::Qam(Box::new(QamModel::new(
                        m,
                        alpha,
                        QamDistribution::Binomial,
                    )?)),
                    QamDistributionSpec::DiscreteGaussian { nu } => ProtocolModel::Qam(Box::new(
                        QamModel::new(m, alpha, QamDistribution::DiscreteGaussian { nu })?,
                    )),
                    QamDistributionSpec::OptimizedGaussian => {
                        ProtocolModel::QamOptimized { m, alpha }
                    }
                }
            }
        };
        if let ProtocolModel::Qam(q) = &model {
            debug!("{}: Fock cutoff {}", spec.label(), q.terms.cutoff);
        }
        Ok(ProtocolPlan {
            spec,
            detection,
            model,
        })
    }
}

/// Outcome of one protocol evaluation at a given transmittance.
#[derive(Debug, Clone, PartialEq)]
struct Evaluation {
    security: SecurityResult,
    modulation_variance: f64,
    qam_nu: Option<f64>,
    finite: Option<crate::finite_size::FiniteSizeResult>,
}

fn evaluate_protocol(cfg: &RunConfig, plan: &ProtocolPlan, t: Transmittance) -> Result<Evaluation> {
    let noise = &cfg.noise;
    let det = plan.detection;
    if let Some(model) = cfg.reconciliation.model() {
        let ProtocolModel::Gm(params) = plan.model else {
            return Err(Error::Config(format!(
                "finite-size reconciliation is only available for GM, not {}",
                plan.spec.label()
            )));
        };
        return evaluate_finite_gm(cfg, params, det, &model, t);
    }
    let ReconciliationSpec::Asymptotic { beta } = cfg.reconciliation else {
        unreachable!("finite-size variants handled above")
    };
    let qam_noise = noise.channel_excess + noise.detector_excess;
    let (security, modulation_variance, qam_nu) = match &plan.model {
        ProtocolModel::Gm(p) => (
            skr_asymptotic_gm(*p, t, noise, det, beta)?,
            p.modulation_variance,
            None,
        ),
        ProtocolModel::Psk(p) => (
            skr_asymptotic_psk(p, t, noise, det, beta)?,
            p.modulation_variance(),
            None,
        ),
        ProtocolModel::Qam(q) => (
            skr_asymptotic_qam(q, t, qam_noise, det, beta)?,
            q.modulation_variance(),
            match q.distribution {
                QamDistribution::DiscreteGaussian { nu } => Some(nu),
                QamDistribution::Binomial => None,
            },
        ),
        ProtocolModel::QamOptimized { m, alpha } => {
            let best = optimize_nu(*m, *alpha, t, qam_noise, det, beta)?;
            let q = QamModel::new(
                *m,
                *alpha,
                QamDistribution::DiscreteGaussian { nu: best.nu },
            )?;
            (
                skr_asymptotic_qam(&q, t, qam_noise, det, beta)?,
                q.modulation_variance(),
                Some(best.nu),
            )
        }
    };
    Ok(Evaluation {
        security,
        modulation_variance,
        qam_nu,
        finite: None,
    })
}

fn evaluate_finite_gm(
    cfg: &RunConfig,
    params: GmParams,
    det: DetectionKind,
    model: &ReconciliationModel,
    t: Transmittance,
) -> Result<Evaluation> {
    let r = skr_finite_gm(
        params,
        t,
        &cfg.noise,
        det,
        model,
        &cfg.finite_size,
        cfg.skr_variant,
    )?;
    Ok(Evaluation {
        security: r.security.clone(),
        modulation_variance: params.modulation_variance,
        qam_nu: None,
        finite: Some(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Link shorter than the far-field distance; no rate computed.
    FarField,
    /// Reconciliation fit outside [0, 1]; no key.
    NoKey,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::FarField => "far_field",
            PointStatus::NoKey => "no_key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub altitude_km: f64,
    pub elevation_deg: f64,
    pub receiver_aperture_m: f64,
}

/// One output row. Optional fields are blank when not applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub protocol: String,
    pub detection: DetectionKind,
    pub reconciliation: &'static str,
    pub point: SweepPoint,
    pub ogs_altitude_km: f64,
    pub status: PointStatus,
    pub link_distance_km: f64,
    pub atmosphere_path_km: f64,
    pub far_field_km: f64,
    pub a_geo_db: Option<f64>,
    pub a_scat_db: Option<f64>,
    pub a_sci_db: Option<f64>,
    pub a_tot_db: Option<f64>,
    pub transmittance: Option<f64>,
    pub modulation_variance: f64,
    pub qam_nu: Option<f64>,
    pub snr_db: Option<f64>,
    pub beta: Option<f64>,
    pub beta_valid: Option<bool>,
    pub fer: Option<f64>,
    pub fer_valid: Option<bool>,
    pub i_ab: Option<f64>,
    pub s_be: Option<f64>,
    pub delta_n: Option<f64>,
    /// β·I_AB − S_BE in bits/pulse, with the fitted β for finite-size runs.
    pub skr_bits_per_pulse: Option<f64>,
    /// Finite-size key rate in bits/s.
    pub skr_bits_per_s: Option<f64>,
}

/// Sweep points, receiver aperture outermost, then altitude, then elevation.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    let altitudes = cfg.sweep.altitude_km.values()?;
    let mut out = Vec::new();
    for &d in &cfg.sweep.receiver_aperture_m {
        for &h in &altitudes {
            for &e in &cfg.sweep.elevation_deg {
                out.push(SweepPoint {
                    altitude_km: h,
                    elevation_deg: e,
                    receiver_aperture_m: d,
                });
            }
        }
    }
    Ok(out)
}

pub fn evaluate_point(
    cfg: &RunConfig,
    plan: &ProtocolPlan,
    point: SweepPoint,
) -> Result<SweepRecord> {
    let terminals = cfg.link.terminals(point.receiver_aperture_m);
    let geometry = cfg.link.geometry(
        point.altitude_km,
        point.elevation_deg,
        cfg.link.ogs_altitude_km,
    );
    let conditions = cfg.conditions.resolve(cfg.link.outage_probability);
    let path = slant_path(&geometry)?;
    let mut rec = SweepRecord {
        protocol: plan.spec.label(),
        detection: plan.detection,
        reconciliation: cfg.reconciliation.label(),
        point,
        ogs_altitude_km: cfg.link.ogs_altitude_km,
        status: PointStatus::Ok,
        link_distance_km: path.total_distance.km(),
        atmosphere_path_km: path.effective_atmosphere.km(),
        far_field_km: terminals.far_field_distance().km(),
        a_geo_db: None,
        a_scat_db: None,
        a_sci_db: None,
        a_tot_db: None,
        transmittance: None,
        modulation_variance: plan.spec.modulation_variance(),
        qam_nu: None,
        snr_db: None,
        beta: None,
        beta_valid: None,
        fer: None,
        fer_valid: None,
        i_ab: None,
        s_be: None,
        delta_n: None,
        skr_bits_per_pulse: None,
        skr_bits_per_s: None,
    };
    let budget = match link_budget(&geometry, &terminals, &conditions) {
        Err(Error::FarField { .. }) => {
            rec.status = PointStatus::FarField;
            return Ok(rec);
        }
        other => other?,
    };
    rec.a_geo_db = Some(budget.geometric.value());
    rec.a_scat_db = Some(budget.scattering.value());
    rec.a_sci_db = Some(budget.scintillation.value().abs());
    rec.a_tot_db = Some(budget.total.value());
    rec.transmittance = Some(budget.transmittance.value());

    let ev = evaluate_protocol(cfg, plan, budget.transmittance)?;
    rec.modulation_variance = ev.modulation_variance;
    rec.qam_nu = ev.qam_nu;
    rec.i_ab = Some(ev.security.mutual_information);
    rec.s_be = Some(ev.security.holevo);
    rec.skr_bits_per_pulse = Some(ev.security.skr_asymptotic);
    if let Some(f) = ev.finite {
        rec.snr_db = Some(f.snr.value());
        rec.beta = Some(f.beta.value);
        rec.beta_valid = Some(f.beta.valid);
        rec.fer = Some(f.fer.value);
        rec.fer_valid = Some(f.fer.valid);
        rec.delta_n = Some(f.privacy_penalty);
        rec.skr_bits_per_s = f.skr;
        if f.skr.is_none() {
            rec.status = PointStatus::NoKey;
        }
    } else if let ReconciliationSpec::Asymptotic { beta } = cfg.reconciliation {
        rec.beta = Some(beta);
    }
    Ok(rec)
}

/// Evaluates the configured protocol over the sweep grid.
pub fn run_sweep(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let plan = ProtocolPlan::new(cfg.protocol, cfg.detection_for(&cfg.protocol))?;
    let points = sweep_points(cfg)?;
    info!("sweep: {} points, {}", points.len(), plan.spec.label());
    pool.install(|| {
        points
            .par_iter()
            .map(|&p| evaluate_point(cfg, &plan, p))
            .collect()
    })
}

/// Evaluates every protocol in `compare.protocols` at every sweep point.
/// Rows are point-major, protocols in configured order.
pub fn compare_protocols(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    for p in &cfg.compare.protocols {
        cfg.check_protocol(p)?;
    }
    let plans: Vec<ProtocolPlan> = pool.install(|| {
        cfg.compare
            .protocols
            .par_iter()
            .map(|p| ProtocolPlan::new(*p, cfg.detection_for(p)))
            .collect::<Result<_>>()
    })?;
    let points = sweep_points(cfg)?;
    let jobs: Vec<(SweepPoint, &ProtocolPlan)> = points
        .iter()
        .flat_map(|&pt| plans.iter().map(move |pl| (pt, pl)))
        .collect();
    info!(
        "compare: {} points x {} protocols",
        points.len(),
        plans.len()
    );
    pool.install(|| {
        jobs.par_iter()
            .map(|&(pt, plan)| evaluate_point(cfg, plan, pt))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassReport {
    pub profile: PassProfile,
    pub results: Vec<(ReconciliationKind, PassResult)>,
}

pub fn pass_profile(cfg: &RunConfig) -> Result<PassProfile> {
    let spec = &cfg.pass;
    let ogs = Length::from_km(spec.ogs_altitude_km);
    match &spec.source {
        PassSource::Synthetic {
            max_elevation_deg,
            sample_dt_s,
        } => synthesize_circular_pass(
            Length::from_km(spec.altitude_km),
            *max_elevation_deg,
            *sample_dt_s,
            ogs,
        ),
        PassSource::File { path } => {
            let f = File::open(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            load_profile(f, ogs)
        }
    }
}

/// Finite-size GM key accumulated over the configured pass, once per
/// reconciliation model.
pub fn run_pass(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<PassReport> {
    cfg.validate()?;
    let profile = pass_profile(cfg)?;
    run_pass_with_profile(cfg, profile, pool)
}

pub fn run_pass_with_profile(
    cfg: &RunConfig,
    profile: PassProfile,
    pool: &rayon::ThreadPool,
) -> Result<PassReport> {
    let ProtocolSpec::Gm {
        modulation_variance,
    } = cfg.protocol
    else {
        return Err(Error::Config(format!(
            "pass analysis uses finite-size rates and needs the GM protocol, not {}",
            cfg.protocol.label()
        )));
    };
    let params = GmParams::new(modulation_variance)?;
    let det = cfg.detection_for(&cfg.protocol);
    let spec = &cfg.pass;
    let terminals = cfg.link.terminals(spec.receiver_aperture_m);
    let conditions = cfg.conditions.resolve(cfg.link.outage_probability);
    let settings = spec.settings();

    let mut results = Vec::with_capacity(spec.reconciliations.len());
    for &kind in &spec.reconciliations {
        let model = ReconciliationSpec::finite(kind)
            .model()
            .expect("finite-size reconciliation");
        let rate = |elevation: f64| -> Result<Option<f64>> {
            let geometry = cfg
                .link
                .geometry(spec.altitude_km, elevation, spec.ogs_altitude_km);
            let budget = match link_budget(&geometry, &terminals, &conditions) {
                Err(Error::FarField { .. }) => return Ok(None),
                other => other?,
            };
            let r = skr_finite_gm(
                params,
                budget.transmittance,
                &cfg.noise,
                det,
                &model,
                &cfg.finite_size,
                cfg.skr_variant,
            )?;
            Ok(r.skr)
        };
        let result = pool.install(|| integrate_key_bits(&profile, &settings, rate))?;
        info!("pass {}: {} bits", kind.as_str(), result.total_key_bits);
        results.push((kind, result));
    }
    Ok(PassReport { profile, results })
}
