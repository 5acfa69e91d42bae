//! Finite-size key rate: fitted reconciliation efficiency and frame error
//! rate as functions of SNR, and the privacy-amplification penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gm::{
    channel_noise, covariance_pipeline, DetectionKind, GmParams, NoiseBudget, SecurityResult,
};
use crate::quantities::{Decibel, Transmittance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconciliationKind {
    /// Multidimensional reconciliation.
    Md,
    /// Multilevel coding with multistage decoding.
    MlcMsd,
}

impl ReconciliationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReconciliationKind::Md => "md",
            ReconciliationKind::MlcMsd => "mlc_msd",
        }
    }
}

/// How the β fit is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaForm {
    /// c₁·e^{c₂·SNR} + c₃·e^{c₄·SNR}.
    #[default]
    TwoExponential,
    /// c₁^{c₂·SNR} − c₃^{c₄·SNR}; undefined (invalid) for a negative base.
    PowerDifference,
}

pub const FER_COEFFICIENTS: [f64; 3] = [0.8218, -19.46, -298.1];
pub const MD_BETA_COEFFICIENTS: [f64; 4] = [-0.0825, 0.1834, 0.9821, -0.000_028_15];
pub const MLC_MSD_BETA_COEFFICIENTS: [f64; 4] = [0.9655, 0.000_150_7, -0.046_96, -0.2238];
/// Block length the FER fit was derived at.
pub const FER_FIT_BLOCK_LENGTH: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationModel {
    pub kind: ReconciliationKind,
    pub beta_coefficients: [f64; 4],
    pub fer_coefficients: [f64; 3],
    #[serde(default)]
    pub beta_form: BetaForm,
}

impl ReconciliationModel {
    pub fn md() -> Self {
        Self::for_kind(ReconciliationKind::Md)
    }

    pub fn mlc_msd() -> Self {
        Self::for_kind(ReconciliationKind::MlcMsd)
    }

    pub fn for_kind(kind: ReconciliationKind) -> Self {
        ReconciliationModel {
            kind,
            beta_coefficients: match kind {
                ReconciliationKind::Md => MD_BETA_COEFFICIENTS,
                ReconciliationKind::MlcMsd => MLC_MSD_BETA_COEFFICIENTS,
            },
            fer_coefficients: FER_COEFFICIENTS,
            beta_form: BetaForm::TwoExponential,
        }
    }
}

/// A fitted quantity, clamped to [0, 1] for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitValue {
    pub raw: f64,
    pub value: f64,
    /// False when `raw` fell outside [0, 1] or was not a number.
    pub valid: bool,
}

impl FitValue {
    fn from_raw(raw: f64) -> Self {
        let valid = (0.0..=1.0).contains(&raw);
        let value = if raw.is_nan() {
            0.0
        } else {
            raw.clamp(0.0, 1.0)
        };
        FitValue { raw, value, valid }
    }
}

/// SNR in dB, `10·log10(T|α|² / (|α|² + (1−T)χ_tot))`.
pub fn snr_db(alpha_sq: f64, t: Transmittance, chi_total: f64) -> Result<Decibel> {
    if !(alpha_sq > 0.0) {
        return Err(Error::param("alpha_sq", alpha_sq, "must be positive"));
    }
    let t = t.value();
    Ok(Decibel(
        10.0 * (t * alpha_sq / (alpha_sq + (1.0 - t) * chi_total)).log10(),
    ))
}

pub fn beta(snr: Decibel, model: &ReconciliationModel) -> FitValue {
    let [c1, c2, c3, c4] = model.beta_coefficients;
    let s = snr.value();
    let raw = match model.beta_form {
        BetaForm::TwoExponential => c1 * (c2 * s).exp() + c3 * (c4 * s).exp(),
        BetaForm::PowerDifference => c1.powf(c2 * s) - c3.powf(c4 * s),
    };
    FitValue::from_raw(raw)
}

/// `½(1 + m₁·atan(m₂·SNR + m₃))`.
pub fn fer(snr: Decibel, model: &ReconciliationModel) -> FitValue {
    let [m1, m2, m3] = model.fer_coefficients;
    FitValue::from_raw(0.5 * (1.0 + m1 * (m2 * snr.value() + m3).atan()))
}

/// Which form of the last privacy-penalty term to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyForm {
    /// `(4ε_s d/(ε√N))/√N`.
    #[default]
    DoubleRoot,
    /// `4ε_s d/(ε√N)`.
    SingleRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiniteSizeParams {
    pub repetition_rate_hz: f64,
    pub discretisation: u32,
    pub smoothing: f64,
    pub security: f64,
    pub total_symbols: f64,
    pub privacy_form: PrivacyForm,
}

impl Default for FiniteSizeParams {
    fn default() -> Self {
        FiniteSizeParams {
            repetition_rate_hz: 50e6,
            discretisation: 5,
            smoothing: 2e-10,
            security: 1e-9,
            total_symbols: 1e11,
            privacy_form: PrivacyForm::DoubleRoot,
        }
    }
}

impl FiniteSizeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("repetition_rate_hz", self.repetition_rate_hz),
            ("total_symbols", self.total_symbols),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be positive"));
            }
        }
        if self.discretisation == 0 {
            return Err(Error::param("discretisation", 0.0, "must be positive"));
        }
        for (name, v) in [("smoothing", self.smoothing), ("security", self.security)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(name, v, "must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

pub fn privacy_penalty(p: &FiniteSizeParams) -> f64 {
    let d = p.discretisation as f64;
    let root_n = p.total_symbols.sqrt();
    let last = 4.0 * p.smoothing * d / (p.security * root_n);
    let last = match p.privacy_form {
        PrivacyForm::DoubleRoot => last / root_n,
        PrivacyForm::SingleRoot => last,
    };
    (d + 1.0).powi(2) / root_n
        + 4.0 * (d + 1.0) * (2.0 / p.smoothing).log2().sqrt() / root_n
        + 2.0 * (2.0 / (p.security * p.security * p.smoothing)).log2() / root_n
        + last
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkrVariant {
    /// `f·[(1−FER)βI − S − δn]`.
    #[default]
    Amended,
    /// `f·(1−FER)(1−v)·[βI − S − δn]`, v the parameter-estimation fraction.
    Legacy { excluded_fraction: f64 },
}

/// Finite-size key rate in bits/s; negative values mean no key.
pub fn skr_finite(
    repetition_rate_hz: f64,
    fer: f64,
    beta: f64,
    mutual_information: f64,
    holevo: f64,
    privacy_penalty: f64,
    variant: SkrVariant,
) -> f64 {
    let f = repetition_rate_hz;
    match variant {
        SkrVariant::Amended => {
            f * ((1.0 - fer) * beta * mutual_information - holevo - privacy_penalty)
        }
        SkrVariant::Legacy { excluded_fraction } => {
            f * (1.0 - fer)
                * (1.0 - excluded_fraction)
                * (beta * mutual_information - holevo - privacy_penalty)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSizeResult {
    pub snr: Decibel,
    pub beta: FitValue,
    pub fer: FitValue,
    pub privacy_penalty: f64,
    pub security: SecurityResult,
    /// Bits/s; `None` when the β fit is outside [0, 1].
    pub skr: Option<f64>,
}

impl FiniteSizeResult {
    /// Key rate for accumulation: no key counts as zero, and so do negative rates.
    pub fn positive_skr(&self) -> f64 {
        self.skr.unwrap_or(0.0).max(0.0)
    }
}

/// Finite-size key rate of the Gaussian protocol.
///
/// An out-of-range FER is clamped and used (above the waterfall it is 0,
/// below it 1); an out-of-range β yields no key.
pub fn skr_finite_gm(
    params: GmParams,
    t: Transmittance,
    budget: &NoiseBudget,
    kind: DetectionKind,
    model: &ReconciliationModel,
    fs: &FiniteSizeParams,
    variant: SkrVariant,
) -> Result<FiniteSizeResult> {
    fs.validate()?;
    let noise = channel_noise(t, budget, kind)?;
    let snr = snr_db(0.5 * params.modulation_variance, t, noise.chi_total)?;
    let b = beta(snr, model);
    let f = fer(snr, model);
    let delta = privacy_penalty(fs);
    let security = covariance_pipeline(
        params.modulation_variance,
        params.correlation(),
        t,
        budget,
        kind,
        b.value,
    )?;
    let skr = b.valid.then(|| {
        skr_finite(
            fs.repetition_rate_hz,
            f.value,
            b.value,
            security.mutual_information,
            security.holevo,
            delta,
            variant,
        )
    });
    Ok(FiniteSizeResult {
        snr,
        beta: b,
        fer: f,
        privacy_penalty: delta,
        security,
        skr,
    })
}
