//! JSON run configuration.
//!
//! Every field has a default, so `{"schema_version": 1}` is a complete
//! configuration: a Gaussian-modulation homodyne sweep over 200–1000 km at
//! 30°, 60° and 90° with a 1 m receiver in good conditions and β = 0.9.
//! Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::channel::{AtmosphericConditions, LinkGeometry, OpticalTerminals};
use crate::error::{Error, Result};
use crate::finite_size::{
    BetaForm, FiniteSizeParams, ReconciliationKind, ReconciliationModel, SkrVariant,
};
use crate::gm::{DetectionKind, NoiseBudget};
use crate::pass::PassSettings;
use crate::psk::PskOrder;
use crate::quantities::Length;

pub const SCHEMA_VERSION: u32 = 1;

fn default_gm_variance() -> f64 {
    5.0
}
fn default_psk_variance() -> f64 {
    0.5
}
fn default_qam_variance() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QamDistributionSpec {
    #[default]
    Binomial,
    DiscreteGaussian {
        nu: f64,
    },
    /// Discrete Gaussian with ν maximizing the key rate at each point.
    OptimizedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Gm {
        #[serde(default = "default_gm_variance")]
        modulation_variance: f64,
    },
    Psk {
        states: PskOrder,
        #[serde(default = "default_psk_variance")]
        modulation_variance: f64,
    },
    Qam {
        points_per_quadrature: usize,
        #[serde(default = "default_qam_variance")]
        modulation_variance: f64,
        #[serde(default)]
        distribution: QamDistributionSpec,
    },
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec::Gm {
            modulation_variance: default_gm_variance(),
        }
    }
}

impl ProtocolSpec {
    pub fn psk(states: PskOrder) -> Self {
        ProtocolSpec::Psk {
            states,
            modulation_variance: default_psk_variance(),
        }
    }

    pub fn qam(points_per_quadrature: usize) -> Self {
        ProtocolSpec::Qam {
            points_per_quadrature,
            modulation_variance: default_qam_variance(),
            distribution: QamDistributionSpec::Binomial,
        }
    }

    /// Short human-readable name, e.g. `GM`, `8-PSK`, `256-QAM`.
    pub fn label(&self) -> String {
        match self {
            ProtocolSpec::Gm { .. } => "GM".into(),
            ProtocolSpec::Psk { states, .. } => format!("{}-PSK", states.states()),
            ProtocolSpec::Qam {
                points_per_quadrature: m,
                ..
            } => format!("{}-QAM", m * m),
        }
    }

    pub fn modulation_variance(&self) -> f64 {
        match *self {
            ProtocolSpec::Gm {
                modulation_variance,
            }
            | ProtocolSpec::Psk {
                modulation_variance,
                ..
            }
            | ProtocolSpec::Qam {
                modulation_variance,
                ..
            } => modulation_variance,
        }
    }

    /// Homodyne for GM and PSK, heterodyne for QAM.
    pub fn default_detection(&self) -> DetectionKind {
        match self {
            ProtocolSpec::Qam { .. } => DetectionKind::Heterodyne,
            _ => DetectionKind::Homodyne,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, ProtocolSpec::Gm { .. })
    }

    fn validate(&self) -> Result<()> {
        let va = self.modulation_variance();
        if !(va > 0.0 && va.is_finite()) {
            return Err(Error::Config(format!(
                "{}: modulation_variance must be positive, got {va}",
                self.label()
            )));
        }
        if let ProtocolSpec::Qam {
            points_per_quadrature,
            distribution,
            ..
        } = self
        {
            if !(2..=32).contains(points_per_quadrature) {
                return Err(Error::Config(format!(
                    "QAM points_per_quadrature must lie in 2..=32, got {points_per_quadrature}"
                )));
            }
            if let QamDistributionSpec::DiscreteGaussian { nu } = distribution {
                if !(*nu > 0.0 && nu.is_finite()) {
                    return Err(Error::Config(format!("QAM nu must be positive, got {nu}")));
                }
            }
        }
        Ok(())
    }
}

/// Terminal optics and station geometry, in display units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSpec {
    pub wavelength_nm: f64,
    pub transmitter_aperture_m: f64,
    pub transmitter_efficiency: f64,
    pub receiver_efficiency: f64,
    pub pointing_loss: f64,
    pub ogs_altitude_km: f64,
    pub atmosphere_thickness_km: f64,
    pub earth_radius_km: f64,
    /// Scintillation outage probability threshold.
    pub outage_probability: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        LinkSpec {
            wavelength_nm: 1550.0,
            transmitter_aperture_m: 0.3,
            transmitter_efficiency: 0.9,
            receiver_efficiency: 0.9,
            pointing_loss: 0.1,
            ogs_altitude_km: 0.0,
            atmosphere_thickness_km: 20.0,
            earth_radius_km: 6371.0,
            outage_probability: 1e-6,
        }
    }
}

impl LinkSpec {
    pub fn terminals(&self, receiver_aperture_m: f64) -> OpticalTerminals {
        OpticalTerminals {
            wavelength: Length::from_nm(self.wavelength_nm),
            transmitter_aperture: Length::from_m(self.transmitter_aperture_m),
            receiver_aperture: Length::from_m(receiver_aperture_m),
            transmitter_efficiency: self.transmitter_efficiency,
            receiver_efficiency: self.receiver_efficiency,
            pointing_loss: self.pointing_loss,
        }
    }

    pub fn geometry(
        &self,
        altitude_km: f64,
        elevation_deg: f64,
        ogs_altitude_km: f64,
    ) -> LinkGeometry {
        LinkGeometry {
            earth_radius: Length::from_km(self.earth_radius_km),
            ogs_altitude: Length::from_km(ogs_altitude_km),
            satellite_altitude: Length::from_km(altitude_km),
            atmosphere_thickness: Length::from_km(self.atmosphere_thickness_km),
            elevation_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionsPreset {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConditions {
    pub visibility_km: f64,
    pub cn2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionsSpec {
    Preset(ConditionsPreset),
    Custom(CustomConditions),
}

impl Default for ConditionsSpec {
    fn default() -> Self {
        ConditionsSpec::Preset(ConditionsPreset::Good)
    }
}

impl ConditionsSpec {
    pub fn resolve(&self, outage_probability: f64) -> AtmosphericConditions {
        let base = match self {
            ConditionsSpec::Preset(ConditionsPreset::Good) => AtmosphericConditions::good(),
            ConditionsSpec::Preset(ConditionsPreset::Bad) => AtmosphericConditions::bad(),
            ConditionsSpec::Custom(c) => AtmosphericConditions {
                visibility: Length::from_km(c.visibility_km),
                cn2: c.cn2,
                outage_probability,
            },
        };
        AtmosphericConditions {
            outage_probability,
            ..base
        }
    }
}

fn default_beta() -> f64 {
    0.9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReconciliationSpec {
    /// Fixed efficiency, asymptotic key rate (bits/pulse).
    Asymptotic {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Finite-size key rate with the multidimensional-reconciliation fits.
    Md {
        #[serde(default)]
        beta_form: BetaForm,
    },
    /// Finite-size key rate with the multilevel-coding fits.
    MlcMsd {
        #[serde(default)]
        beta_form: BetaForm,
    },
}

impl Default for ReconciliationSpec {
    fn default() -> Self {
        ReconciliationSpec::Asymptotic {
            beta: default_beta(),
        }
    }
}

impl ReconciliationSpec {
    pub fn finite(kind: ReconciliationKind) -> Self {
        match kind {
            ReconciliationKind::Md => ReconciliationSpec::Md {
                beta_form: BetaForm::TwoExponential,
            },
            ReconciliationKind::MlcMsd => ReconciliationSpec::MlcMsd {
                beta_form: BetaForm::TwoExponential,
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ReconciliationSpec::Asymptotic { .. } => "asymptotic",
            ReconciliationSpec::Md { .. } => "md",
            ReconciliationSpec::MlcMsd { .. } => "mlc_msd",
        }
    }

    /// The fitted model, for the finite-size variants.
    pub fn model(&self) -> Option<ReconciliationModel> {
        match *self {
            ReconciliationSpec::Asymptotic { .. } => None,
            ReconciliationSpec::Md { beta_form } => Some(ReconciliationModel {
                beta_form,
                ..ReconciliationModel::md()
            }),
            ReconciliationSpec::MlcMsd { beta_form } => Some(ReconciliationModel {
                beta_form,
                ..ReconciliationModel::mlc_msd()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl AxisSpec {
    /// Expanded values; a range includes `stop` when it lies on the grid.
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            AxisSpec::List(ref v) => {
                if v.is_empty() {
                    return Err(Error::Config("axis list is empty".into()));
                }
                Ok(v.clone())
            }
            AxisSpec::Range { start, stop, step } => {
                if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
                    return Err(Error::Config(format!(
                        "bad range start={start} stop={stop} step={step}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if n > 1_000_000 {
                    return Err(Error::Config(format!("range has {n} points")));
                }
                Ok((0..n).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub altitude_km: AxisSpec,
    pub elevation_deg: Vec<f64>,
    pub receiver_aperture_m: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            altitude_km: AxisSpec::Range {
                start: 200.0,
                stop: 1000.0,
                step: 50.0,
            },
            elevation_deg: vec![30.0, 60.0, 90.0],
            receiver_aperture_m: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub protocols: Vec<ProtocolSpec>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            protocols: vec![
                ProtocolSpec::default(),
                ProtocolSpec::qam(16),
                ProtocolSpec::qam(8),
                ProtocolSpec::psk(PskOrder::Eight),
                ProtocolSpec::psk(PskOrder::Four),
                ProtocolSpec::psk(PskOrder::Two),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PassSource {
    /// Circular-orbit pass with the given peak elevation.
    Synthetic {
        max_elevation_deg: f64,
        sample_dt_s: f64,
    },
    /// Two-column CSV file of time_s, elevation_deg.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassSpec {
    pub source: PassSource,
    pub altitude_km: f64,
    pub ogs_altitude_km: f64,
    pub receiver_aperture_m: f64,
    pub bin_width_deg: f64,
    pub keyhole_ceiling_deg: Option<f64>,
    pub reconciliations: Vec<ReconciliationKind>,
}

impl Default for PassSpec {
    fn default() -> Self {
        PassSpec {
            source: PassSource::Synthetic {
                max_elevation_deg: 87.6,
                sample_dt_s: 1.0,
            },
            altitude_km: 417.5,
            ogs_altitude_km: 1.029,
            receiver_aperture_m: 2.0,
            bin_width_deg: 1.0,
            keyhole_ceiling_deg: None,
            reconciliations: vec![ReconciliationKind::Md, ReconciliationKind::MlcMsd],
        }
    }
}

impl PassSpec {
    pub fn settings(&self) -> PassSettings {
        PassSettings {
            bin_width_deg: self.bin_width_deg,
            keyhole_ceiling_deg: self.keyhole_ceiling_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub protocol: ProtocolSpec,
    /// Overrides the protocol's default detection when set.
    #[serde(default)]
    pub detection: Option<DetectionKind>,
    #[serde(default)]
    pub noise: NoiseBudget,
    #[serde(default)]
    pub link: LinkSpec,
    #[serde(default)]
    pub conditions: ConditionsSpec,
    #[serde(default)]
    pub reconciliation: ReconciliationSpec,
    #[serde(default)]
    pub finite_size: FiniteSizeParams,
    #[serde(default)]
    pub skr_variant: SkrVariant,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default)]
    pub pass: PassSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            protocol: ProtocolSpec::default(),
            detection: None,
            noise: NoiseBudget::default(),
            link: LinkSpec::default(),
            conditions: ConditionsSpec::default(),
            reconciliation: ReconciliationSpec::default(),
            finite_size: FiniteSizeParams::default(),
            skr_variant: SkrVariant::default(),
            sweep: SweepSpec::default(),
            compare: CompareSpec::default(),
            pass: PassSpec::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved configuration, defaults included.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn detection_for(&self, protocol: &ProtocolSpec) -> DetectionKind {
        self.detection
            .unwrap_or_else(|| protocol.default_detection())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.noise.validate()?;
        self.finite_size.validate()?;
        if let ReconciliationSpec::Asymptotic { beta } = self.reconciliation {
            if !(0.0..=1.0).contains(&beta) {
                return Err(Error::Config(format!(
                    "beta must lie in [0, 1], got {beta}"
                )));
            }
        }
        if let SkrVariant::Legacy { excluded_fraction } = self.skr_variant {
            if !(0.0..1.0).contains(&excluded_fraction) {
                return Err(Error::Config(format!(
                    "excluded_fraction must lie in [0, 1), got {excluded_fraction}"
                )));
            }
        }
        self.link.terminals(1.0).validate()?;
        self.conditions
            .resolve(self.link.outage_probability)
            .validate()?;
        self.check_protocol(&self.protocol)?;
        for p in &self.compare.protocols {
            p.validate()?;
            self.check_detector(p)?;
        }
        if self.compare.protocols.is_empty() {
            return Err(Error::Config("compare.protocols is empty".into()));
        }

        let altitudes = self.sweep.altitude_km.values()?;
        if self.sweep.elevation_deg.is_empty() || self.sweep.receiver_aperture_m.is_empty() {
            return Err(Error::Config("sweep axes must be non-empty".into()));
        }
        for &d in &self.sweep.receiver_aperture_m {
            self.link.terminals(d).validate()?;
        }
        for &h in &altitudes {
            for &e in &self.sweep.elevation_deg {
                self.link
                    .geometry(h, e, self.link.ogs_altitude_km)
                    .validate()?;
            }
        }

        let pass = &self.pass;
        self.pass.settings().validate()?;
        self.link.terminals(pass.receiver_aperture_m).validate()?;
        self.link
            .geometry(pass.altitude_km, 90.0, pass.ogs_altitude_km)
            .validate()?;
        if let PassSource::Synthetic {
            max_elevation_deg,
            sample_dt_s,
        } = pass.source
        {
            if !(max_elevation_deg > 0.0 && max_elevation_deg <= 90.0) {
                return Err(Error::Config(format!(
                    "pass max_elevation_deg must lie in (0, 90], got {max_elevation_deg}"
                )));
            }
            if !(sample_dt_s > 0.0) {
                return Err(Error::Config(format!(
                    "pass sample_dt_s must be positive, got {sample_dt_s}"
                )));
            }
        }
        if pass.reconciliations.is_empty() {
            return Err(Error::Config("pass.reconciliations is empty".into()));
        }
        Ok(())
    }

    /// Checks that `p` can be evaluated under this config. The compare list
    /// is only held to this when the comparison is actually run.
    pub fn check_protocol(&self, p: &ProtocolSpec) -> Result<()> {
        p.validate()?;
        self.check_detector(p)?;
        if !p.is_gaussian() && self.reconciliation.model().is_some() {
            return Err(Error::Config(format!(
                "finite-size reconciliation ({}) is only available for GM, not {}",
                self.reconciliation.label(),
                p.label()
            )));
        }
        Ok(())
    }

    fn check_detector(&self, p: &ProtocolSpec) -> Result<()> {
        if matches!(p, ProtocolSpec::Qam { .. }) && self.noise.detector_efficiency != 1.0 {
            return Err(Error::Config(
                "QAM has no detector model: detector_efficiency must be 1".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_reference_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.noise, NoiseBudget::daylight());
        assert_eq!(cfg.finite_size.total_symbols, 1e11);
        assert_eq!(cfg.finite_size.repetition_rate_hz, 50e6);
        assert_eq!(cfg.link.wavelength_nm, 1550.0);
        assert_eq!(cfg.link.transmitter_aperture_m, 0.3);
        assert_eq!(cfg.link.outage_probability, 1e-6);
        assert_eq!(cfg.sweep.altitude_km.values().unwrap().len(), 17);
        assert_eq!(cfg.protocol.modulation_variance(), 5.0);
        assert_eq!(cfg.detection_for(&cfg.protocol), DetectionKind::Homodyne);
    }

    #[test]
    fn protocol_defaults() {
        let cfg = RunConfig::from_json(
            r#"{"schema_version": 1, "protocol": {"kind": "qam", "points_per_quadrature": 8}}"#,
        )
        .unwrap();
        assert_eq!(cfg.protocol.modulation_variance(), 2.0);
        assert_eq!(cfg.protocol.label(), "64-QAM");
        assert_eq!(cfg.detection_for(&cfg.protocol), DetectionKind::Heterodyne);
        let psk = RunConfig::from_json(
            r#"{"schema_version": 1, "protocol": {"kind": "psk", "states": 8}}"#,
        )
        .unwrap();
        assert_eq!(psk.protocol.modulation_variance(), 0.5);
    }

    #[test]
    fn partial_overrides() {
        let cfg = RunConfig::from_json(
            r#"{"schema_version": 1, "noise": {"channel_excess": 0.01},
                "conditions": "bad", "finite_size": {"total_symbols": 1e9}}"#,
        )
        .unwrap();
        assert_eq!(cfg.noise.channel_excess, 0.01);
        assert_eq!(
            cfg.noise.detector_excess,
            NoiseBudget::daylight().detector_excess
        );
        assert_eq!(cfg.finite_size.discretisation, 5);
        let custom = RunConfig::from_json(
            r#"{"schema_version": 1, "conditions": {"visibility_km": 50, "cn2": 1e-15}}"#,
        )
        .unwrap();
        assert_eq!(custom.conditions.resolve(1e-6).cn2, 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            r#"{}"#,
            r#"{"schema_version": 2}"#,
            r#"{"schema_version": 1, "typo": 3}"#,
            r#"{"schema_version": 1, "noise": {"chanel_excess": 0.01}}"#,
            r#"{"schema_version": 1, "protocol": {"kind": "psk", "states": 3}}"#,
            r#"{"schema_version": 1, "protocol": {"kind": "psk", "states": 4},
                "reconciliation": {"kind": "md"}}"#,
            r#"{"schema_version": 1, "reconciliation": {"kind": "asymptotic", "beta": 1.5}}"#,
            r#"{"schema_version": 1, "sweep": {"elevation_deg": [95]}}"#,
            r#"{"schema_version": 1, "sweep": {"altitude_km": {"start": 5, "stop": 1, "step": 1}}}"#,
            "not json",
        ] {
            let e = RunConfig::from_json(text).unwrap_err();
            assert!(e.is_config_error(), "{text}: {e:?}");
        }
    }

    #[test]
    fn resolved_echo_round_trips() {
        let cfg = RunConfig::from_json(
            r#"{"schema_version": 1, "protocol": {"kind": "qam", "points_per_quadrature": 16,
                "distribution": {"kind": "discrete_gaussian", "nu": 0.2}},
                "sweep": {"altitude_km": [300, 400]}}"#,
        )
        .unwrap();
        let back = RunConfig::from_json(&cfg.to_json_pretty()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn range_axis_includes_stop() {
        let a = AxisSpec::Range {
            start: 200.0,
            stop: 1000.0,
            step: 50.0,
        };
        let v = a.values().unwrap();
        assert_eq!(v.first(), Some(&200.0));
        assert_eq!(v.last(), Some(&1000.0));
    }
}
