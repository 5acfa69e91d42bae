use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstellationPoint {
    pub amplitude: Complex64,
    pub probability: f64,
}

/// A finite ensemble of coherent states with prior probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    points: Vec<ConstellationPoint>,
}

impl Constellation {
    pub fn new(points: Vec<ConstellationPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.probability >= 0.0) || !p.amplitude.norm_sqr().is_finite())
        {
            return Err(Error::InvalidConstellation(format!(
                "point {} has probability {}",
                p.amplitude, p.probability
            )));
        }
        let total: f64 = points.iter().map(|p| p.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConstellation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let c = Constellation { points };
        if !(c.mean_photon_number() > 0.0) {
            return Err(Error::InvalidConstellation(
                "mean photon number is zero".into(),
            ));
        }
        Ok(c)
    }

    /// Normalizes non-negative weights to probabilities.
    pub fn from_weights(points: impl IntoIterator<Item = (Complex64, f64)>) -> Result<Self> {
        let raw: Vec<_> = points.into_iter().collect();
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidConstellation(format!("total weight {total}")));
        }
        Self::new(
            raw.into_iter()
                .map(|(amplitude, w)| ConstellationPoint {
                    amplitude,
                    probability: w / total,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[ConstellationPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Σ p_k |α_k|².
    pub fn mean_photon_number(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.probability * p.amplitude.norm_sqr())
            .sum()
    }

    pub fn max_photon_number(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.amplitude.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// Effective quadrature modulation variance, 2 Σ p_k |α_k|².
    pub fn modulation_variance(&self) -> f64 {
        2.0 * self.mean_photon_number()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QamDistribution {
    Binomial,
    DiscreteGaussian { nu: f64 },
}

/// Binomial(n, 1/2) probabilities.
fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = 1.0f64;
    for k in 0..=n {
        row.push(c);
        c *= (n - k) as f64 / (k + 1) as f64;
    }
    let total: f64 = row.iter().sum();
    row.iter().map(|v| v / total).collect()
}

/// Square m×m QAM grid with per-quadrature spacing `α√2/√(m−1)`, centred on
/// the origin.
pub fn build_constellation(m: usize, alpha: f64, dist: QamDistribution) -> Result<Constellation> {
    if m < 2 {
        return Err(Error::InvalidConstellation(format!(
            "QAM needs m >= 2 points per quadrature, got {m}"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", alpha, "must be positive"));
    }
    let spacing = alpha * std::f64::consts::SQRT_2 / ((m - 1) as f64).sqrt();
    let centre = 0.5 * (m - 1) as f64;
    let coord = |k: usize| spacing * (k as f64 - centre);
    let points: Vec<(Complex64, f64)> = match dist {
        QamDistribution::Binomial => {
            let row = binomial_row(m - 1);
            (0..m)
                .flat_map(|k| (0..m).map(move |l| (k, l)))
                .map(|(k, l)| (Complex64::new(coord(k), coord(l)), row[k] * row[l]))
                .collect()
        }
        QamDistribution::DiscreteGaussian { nu } => {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::param("nu", nu, "must be positive"));
            }
            (0..m)
                .flat_map(|k| (0..m).map(move |l| (k, l)))
                .map(|(k, l)| {
                    let a = Complex64::new(coord(k), coord(l));
                    (a, (-nu * a.norm_sqr()).exp())
                })
                .collect()
        }
    };
    Constellation::from_weights(points)
}
