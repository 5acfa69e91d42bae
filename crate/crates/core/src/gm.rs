//! Gaussian-modulated coherent-state protocol under collective attacks with
//! reverse reconciliation and trusted detector noise.
//!
//! The Holevo bound is evaluated from the closed-form symplectic spectra of
//! the two-mode covariance matrix
//!
//! ```text
//! γ_AB = [ (V_A+1)·I           √T·Z·σz              ]
//!        [ √T·Z·σz             T(V_A+1+χ_line)·I    ]
//! ```
//!
//! and of the state conditioned on Bob's (homodyne or heterodyne) outcome.
//! The same machinery serves the PSK protocols, which only change `Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::Transmittance;

/// Per-source excess noise in daylight operation (SNU).
pub mod daylight_noise {
    pub const TIME_OF_ARRIVAL: f64 = 0.0060;
    pub const ATMOSPHERIC_LO_INTENSITY: f64 = 0.0100;
    pub const LO_INTENSITY: f64 = 0.0018;
    pub const MODULATION: f64 = 0.0005;
    pub const BACKGROUND: f64 = 0.0002;
    pub const SIGNAL_INTENSITY: f64 = 0.0001;

    pub const ELECTRONIC: f64 = 0.0130;
    pub const ADC: f64 = 0.0002;
    pub const DETECTOR_OVERLAP: f64 = 0.0001;
    pub const LO_SUBTRACTION: f64 = 0.0001;
    pub const LO_LEAKAGE: f64 = 0.0001;

    pub const CHANNEL: [f64; 6] = [
        TIME_OF_ARRIVAL,
        ATMOSPHERIC_LO_INTENSITY,
        LO_INTENSITY,
        MODULATION,
        BACKGROUND,
        SIGNAL_INTENSITY,
    ];
    pub const DETECTION: [f64; 5] = [
        ELECTRONIC,
        ADC,
        DETECTOR_OVERLAP,
        LO_SUBTRACTION,
        LO_LEAKAGE,
    ];
}

/// Channel and detector noise, in SNU, plus detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseBudget {
    pub channel_excess: f64,
    pub detector_excess: f64,
    pub detector_efficiency: f64,
}

impl NoiseBudget {
    /// Sum of the daylight noise sources with an ideal detector (η = 1).
    pub fn daylight() -> Self {
        NoiseBudget {
            channel_excess: daylight_noise::CHANNEL.iter().sum(),
            detector_excess: daylight_noise::DETECTION.iter().sum(),
            detector_efficiency: 1.0,
        }
    }

    pub fn noiseless() -> Self {
        NoiseBudget {
            channel_excess: 0.0,
            detector_excess: 0.0,
            detector_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.channel_excess >= 0.0) {
            return Err(Error::param(
                "channel_excess",
                self.channel_excess,
                "must be >= 0",
            ));
        }
        if !(self.detector_excess >= 0.0) {
            return Err(Error::param(
                "detector_excess",
                self.detector_excess,
                "must be >= 0",
            ));
        }
        let eta = self.detector_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param(
                "detector_efficiency",
                eta,
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

impl Default for NoiseBudget {
    fn default() -> Self {
        Self::daylight()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionKind {
    Homodyne,
    Heterodyne,
}

impl DetectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionKind::Homodyne => "homodyne",
            DetectionKind::Heterodyne => "heterodyne",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmParams {
    /// Alice's quadrature modulation variance V_A (SNU).
    pub modulation_variance: f64,
}

impl GmParams {
    pub fn new(modulation_variance: f64) -> Result<Self> {
        if !(modulation_variance > 0.0 && modulation_variance.is_finite()) {
            return Err(Error::param(
                "modulation_variance",
                modulation_variance,
                "must be positive",
            ));
        }
        Ok(GmParams {
            modulation_variance,
        })
    }

    /// Alice-Bob correlation for Gaussian modulation, `√(V_A² + 2V_A)`.
    pub fn correlation(&self) -> f64 {
        gaussian_correlation(self.modulation_variance)
    }
}

pub fn gaussian_correlation(modulation_variance: f64) -> f64 {
    let v = modulation_variance;
    (v * v + 2.0 * v).sqrt()
}

/// Input-referred noise terms for a given transmittance and detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelNoiseState {
    pub transmittance: f64,
    pub chi_line: f64,
    pub chi_det: f64,
    pub chi_total: f64,
}

pub fn channel_noise(
    t: Transmittance,
    budget: &NoiseBudget,
    kind: DetectionKind,
) -> Result<ChannelNoiseState> {
    budget.validate()?;
    let t = t.value();
    if t <= 0.0 {
        return Err(Error::param(
            "transmittance",
            t,
            "must be > 0 for a noise budget",
        ));
    }
    let eta = budget.detector_efficiency;
    let eps = budget.detector_excess;
    let chi_line = 1.0 / t - 1.0 + budget.channel_excess;
    let chi_det = match kind {
        DetectionKind::Homodyne => ((1.0 - eta) + eps) / eta,
        DetectionKind::Heterodyne => (1.0 + (1.0 - eta) + 2.0 * eps) / eta,
    };
    Ok(ChannelNoiseState {
        transmittance: t,
        chi_line,
        chi_det,
        chi_total: chi_line + chi_det / t,
    })
}

/// Von Neumann entropy of a thermal mode with mean photon number `x`, in bits.
pub fn g_function(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain {
            function: "g_function",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Entropy contribution of one symplectic eigenvalue, with the λ → 1 limit
/// taken as zero.
pub(crate) fn eigen_entropy(lambda: f64) -> f64 {
    let x = 0.5 * (lambda - 1.0);
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

pub fn mutual_information_gm(modulation_variance: f64, chi_total: f64, kind: DetectionKind) -> f64 {
    let hom = 0.5 * ((modulation_variance + 1.0 + chi_total) / (1.0 + chi_total)).log2();
    match kind {
        DetectionKind::Homodyne => hom,
        DetectionKind::Heterodyne => 2.0 * hom,
    }
}

/// Holevo bound and the four symplectic eigenvalues behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolevoBound {
    pub holevo: f64,
    /// λ₁, λ₂ of γ_AB, then λ₃, λ₄ of the conditional state.
    pub eigenvalues: [f64; 4],
}

/// Relative tolerance on λ ≥ 1.
pub(crate) const PHYSICALITY_TOL: f64 = 1e-9;

/// Two symplectic eigenvalues from `(λ₊ + λ₋)²` and `(λ₊ − λ₋)²`.
///
/// Callers pass both in factored form. Going through `λ₊² + λ₋²` and
/// `λ₊λ₋` instead cancels near a pure state and loses half the digits.
pub(crate) fn symplectic_pair(sum_sq: f64, diff_sq: f64, label: &str) -> Result<(f64, f64)> {
    if !(sum_sq >= 0.0) || diff_sq.is_nan() {
        return Err(Error::UnphysicalCovariance {
            detail: format!("{label}: (λ₊ + λ₋)² = {sum_sq}, (λ₊ − λ₋)² = {diff_sq}"),
        });
    }
    let sum = sum_sq.sqrt();
    let diff = diff_sq.max(0.0).sqrt();
    let plus = 0.5 * (sum + diff);
    let minus = 0.5 * (sum - diff);
    if !(minus >= 1.0 - PHYSICALITY_TOL * plus.max(1.0)) {
        return Err(Error::UnphysicalCovariance {
            detail: format!("{label}: symplectic eigenvalue {minus} < 1"),
        });
    }
    Ok((plus.max(1.0), minus.max(1.0)))
}

/// Eve's Holevo information on Bob's data.
///
/// `correlation` is the Z entering the off-diagonal block as `√T·Z`;
/// `chi_det` is the homodyne or heterodyne detector noise matching `kind`.
pub fn holevo_bound(
    modulation_variance: f64,
    t: Transmittance,
    chi_line: f64,
    chi_det: f64,
    correlation: f64,
    kind: DetectionKind,
) -> Result<HolevoBound> {
    let t = t.value();
    if t <= 0.0 {
        return Err(Error::param("transmittance", t, "must be > 0"));
    }
    let v = modulation_variance + 1.0;
    let z2 = correlation * correlation;
    // γ_AB = [[V, √T·Z σ_z], [√T·Z σ_z, G]] with G = T(V + χ_line)
    let g = t * (v + chi_line);
    let gap = v - g;
    // λ₁λ₂ = √det γ_AB
    let s = v * g - t * z2;
    let outer_sum_sq = (v + g).powi(2) - 4.0 * t * z2;
    let (l1, l2) = symplectic_pair(outer_sum_sq, gap * gap, "gamma_AB")?;

    // conditional state: λ₃² + λ₄² = C, λ₃λ₄ = √D, over Δ = T(V + χ_tot)
    let a = v * v + g * g - 2.0 * t * z2;
    let delta = g + chi_det;
    let (sum_sq, diff_sq) = match kind {
        DetectionKind::Homodyne => {
            let c = (a * chi_det + v * s + g) / delta;
            let d = s * (v + s * chi_det) / delta;
            if !(d >= 0.0) {
                return Err(Error::UnphysicalCovariance {
                    detail: format!("conditional state: D = {d} < 0"),
                });
            }
            let sum_sq = c + 2.0 * d.sqrt();
            // Δ²(C² − 4D), expanded in powers of χ_det so that every term
            // vanishes with the state's impurity
            let disc = (v * s - g).powi(2)
                + 2.0 * chi_det * gap * (gap * (v * s + g) + 2.0 * s * (s - 1.0))
                + (chi_det * gap).powi(2) * outer_sum_sq;
            (sum_sq, disc / (delta * delta * sum_sq))
        }
        DetectionKind::Heterodyne => {
            let c =
                (a * chi_det * chi_det + s * s + 1.0 + 2.0 * t * z2 + 2.0 * chi_det * (v * s + g))
                    / (delta * delta);
            let d_root = (v + s * chi_det) / delta;
            (
                c + 2.0 * d_root,
                ((chi_det * gap + s - 1.0) / delta).powi(2),
            )
        }
    };
    let (l3, l4) = symplectic_pair(sum_sq, diff_sq, "conditional state")?;

    let eigenvalues = [l1, l2, l3, l4];
    let holevo = eigen_entropy(l1) + eigen_entropy(l2) - eigen_entropy(l3) - eigen_entropy(l4);
    Ok(HolevoBound {
        holevo,
        eigenvalues,
    })
}

/// `β·I_AB − S_BE`; negative means no key.
pub fn skr_asymptotic(beta: f64, mutual_information: f64, holevo: f64) -> f64 {
    beta * mutual_information - holevo
}

/// Everything the asymptotic key-rate evaluation produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityResult {
    pub mutual_information: f64,
    pub holevo: f64,
    pub skr_asymptotic: f64,
    pub eigenvalues: Vec<f64>,
}

/// Asymptotic key rate (bits/pulse) of the Gaussian protocol.
pub fn skr_asymptotic_gm(
    params: GmParams,
    t: Transmittance,
    budget: &NoiseBudget,
    kind: DetectionKind,
    beta: f64,
) -> Result<SecurityResult> {
    covariance_pipeline(
        params.modulation_variance,
        params.correlation(),
        t,
        budget,
        kind,
        beta,
    )
}

/// Shared GM/PSK evaluation for a given correlation coefficient.
pub(crate) fn covariance_pipeline(
    modulation_variance: f64,
    correlation: f64,
    t: Transmittance,
    budget: &NoiseBudget,
    kind: DetectionKind,
    beta: f64,
) -> Result<SecurityResult> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", beta, "must lie in [0, 1]"));
    }
    let noise = channel_noise(t, budget, kind)?;
    let mi = mutual_information_gm(modulation_variance, noise.chi_total, kind);
    let hb = holevo_bound(
        modulation_variance,
        t,
        noise.chi_line,
        noise.chi_det,
        correlation,
        kind,
    )?;
    Ok(SecurityResult {
        mutual_information: mi,
        holevo: hb.holevo,
        skr_asymptotic: skr_asymptotic(beta, mi, hb.holevo),
        eigenvalues: hb.eigenvalues.to_vec(),
    })
}
