//! M-PSK discrete modulation (M = 2, 4, 8).
//!
//! The averaged state `τ = (1/M) Σ_k |α e^{2πik/M}⟩⟨α e^{2πik/M}|` is diagonal
//! in the M Fourier components of the Fock basis; its eigenvalues ζ_k are the
//! Poisson weights of the photon numbers congruent to k mod M. The
//! correlation coefficient Z_M built from them replaces the Gaussian Z in the
//! covariance-matrix pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gm::{covariance_pipeline, DetectionKind, NoiseBudget, SecurityResult};
use crate::quantities::Transmittance;

/// Closed-form weights below this value are recomputed from the Poisson
/// series, since the hyperbolic/trigonometric sums cancel.
const SERIES_FALLBACK_BELOW: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum PskOrder {
    Two,
    Four,
    Eight,
}

impl PskOrder {
    pub fn states(self) -> usize {
        match self {
            PskOrder::Two => 2,
            PskOrder::Four => 4,
            PskOrder::Eight => 8,
        }
    }
}

impl TryFrom<u32> for PskOrder {
    type Error = Error;
    fn try_from(m: u32) -> Result<Self> {
        match m {
            2 => Ok(PskOrder::Two),
            4 => Ok(PskOrder::Four),
            8 => Ok(PskOrder::Eight),
            _ => Err(Error::InvalidConstellation(format!(
                "PSK order must be 2, 4 or 8, got {m}"
            ))),
        }
    }
}

impl From<PskOrder> for u32 {
    fn from(o: PskOrder) -> u32 {
        o.states() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PskConfig {
    pub order: PskOrder,
    /// Coherent-state amplitude α, with α² = V_A/2.
    pub amplitude: f64,
}

impl PskConfig {
    pub fn new(order: PskOrder, amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::param("amplitude", amplitude, "must be positive"));
        }
        Ok(PskConfig { order, amplitude })
    }

    pub fn from_modulation_variance(order: PskOrder, modulation_variance: f64) -> Result<Self> {
        if !(modulation_variance > 0.0) {
            return Err(Error::param(
                "modulation_variance",
                modulation_variance,
                "must be positive",
            ));
        }
        Self::new(order, (0.5 * modulation_variance).sqrt())
    }

    pub fn modulation_variance(&self) -> f64 {
        2.0 * self.amplitude * self.amplitude
    }
}

/// Eigenvalues ζ_0..ζ_{M-1} of the averaged PSK state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaWeights(pub Vec<f64>);

impl ZetaWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// The printed hyperbolic/trigonometric expressions, with no fallback.
pub fn zeta_weights_closed_form(config: &PskConfig) -> Vec<f64> {
    let x = config.amplitude * config.amplitude;
    let e = (-x).exp();
    let (ch, sh, c, s) = (x.cosh(), x.sinh(), x.cos(), x.sin());
    match config.order {
        PskOrder::Two => vec![e * ch, e * sh],
        PskOrder::Four => vec![
            0.5 * e * (ch + c),
            0.5 * e * (sh + s),
            0.5 * e * (ch - c),
            0.5 * e * (sh - s),
        ],
        PskOrder::Eight => {
            let y = x / std::f64::consts::SQRT_2;
            let r2 = std::f64::consts::SQRT_2;
            let (cy, sy, chy, shy) = (y.cos(), y.sin(), y.cosh(), y.sinh());
            let q = 0.25 * e;
            let even0 = 2.0 * cy * chy;
            let odd1 = r2 * cy * shy + r2 * sy * chy;
            let even2 = 2.0 * sy * shy;
            let odd3a = r2 * cy * shy;
            let odd3b = r2 * sy * chy;
            vec![
                q * (ch + c + even0),
                q * (sh + s + odd1),
                q * (ch - c + even2),
                q * (sh - s - odd3a + odd3b),
                q * (ch + c - even0),
                q * (sh + s - odd1),
                q * (ch - c - even2),
                q * (sh - s + odd3a - odd3b),
            ]
        }
    }
}

/// `e^{-x} Σ_{n ≡ k (mod M)} xⁿ/n!`, summed until the terms vanish.
pub fn zeta_series(x: f64, states: usize, k: usize) -> f64 {
    let mut term = (-x).exp();
    let mut total = 0.0;
    let mut n = 0usize;
    loop {
        if n % states == k {
            total += term;
        }
        n += 1;
        term *= x / n as f64;
        if (n as f64) > x && (term <= total * 1e-18 || term == 0.0) && n > k {
            break;
        }
        if n > 10_000 {
            break;
        }
    }
    total
}

/// Spectral weights, using the closed forms and falling back to the series
/// for small weights where the closed forms lose relative accuracy.
pub fn zeta_weights(config: &PskConfig) -> ZetaWeights {
    let x = config.amplitude * config.amplitude;
    let m = config.order.states();
    let weights = zeta_weights_closed_form(config)
        .into_iter()
        .enumerate()
        .map(|(k, z)| {
            if z < SERIES_FALLBACK_BELOW {
                zeta_series(x, m, k)
            } else {
                z
            }
        })
        .collect();
    ZetaWeights(weights)
}

/// Correlation coefficient Z_M; the index k-1 wraps cyclically.
pub fn correlation_z(config: &PskConfig) -> Result<f64> {
    let zeta = zeta_weights(config);
    let z = zeta.as_slice();
    if let Some(index) = z.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::ZeroSpectralWeight { index });
    }
    let a2 = config.amplitude * config.amplitude;
    let ratio = |prev: f64, cur: f64| prev.powf(1.5) / cur.sqrt();
    let value = match config.order {
        PskOrder::Two => a2 * (ratio(z[0], z[1]) + ratio(z[1], z[0])),
        PskOrder::Four | PskOrder::Eight => {
            let m = z.len();
            2.0 * a2 * (0..m).map(|k| ratio(z[(k + m - 1) % m], z[k])).sum::<f64>()
        }
    };
    Ok(value)
}

/// Asymptotic key rate of M-PSK via the Gaussian covariance pipeline with
/// V_A = 2α² and Z = Z_M.
pub fn skr_asymptotic_psk(
    config: &PskConfig,
    t: Transmittance,
    budget: &NoiseBudget,
    kind: DetectionKind,
    beta: f64,
) -> Result<SecurityResult> {
    let z = correlation_z(config)?;
    covariance_pipeline(config.modulation_variance(), z, t, budget, kind, beta)
}
