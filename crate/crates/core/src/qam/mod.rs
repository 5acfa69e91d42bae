//! M-QAM under the arbitrary-modulation security bound.
//!
//! The correlation coefficient is replaced by the lower bound
//!
//! ```text
//! Z* = 2√T·Tr(τ^{1/2} a τ^{1/2} a†) − √(2Tεw)
//! ```
//!
//! where τ is the averaged modulation state. Both the trace term and w depend
//! only on the constellation, so they are computed once per constellation
//! (in [`CorrelationTerms`]) and reused for every transmittance.

pub mod constellation;
pub mod fock;

use log::{debug, warn};
use serde::Serialize;

pub use constellation::{build_constellation, Constellation, ConstellationPoint, QamDistribution};
pub use fock::{coherent_state_vector, FockWorkspace};

use crate::error::{Error, Result};
use crate::gm::{eigen_entropy, symplectic_pair, DetectionKind, SecurityResult, PHYSICALITY_TOL};
use crate::numerics::golden_section_max;
use crate::quantities::Transmittance;

/// Accept a cutoff once Z* moves by less than this when it grows by
/// [`CUTOFF_STEP`].
pub const CUTOFF_CONVERGENCE_TOL: f64 = 1e-9;
pub const CUTOFF_STEP: usize = 10;
pub const MAX_CUTOFF: usize = 1024;

/// Constellation-dependent pieces of Z*, at a converged cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationTerms {
    /// Tr(τ^{1/2} a τ^{1/2} a†).
    pub trace_term: f64,
    /// The excess-noise weight w.
    pub excess_weight: f64,
    pub cutoff: usize,
}

impl CorrelationTerms {
    pub fn z_star(&self, t: Transmittance, excess_noise: f64) -> f64 {
        let t = t.value();
        2.0 * t.sqrt() * self.trace_term - (2.0 * t * excess_noise * self.excess_weight).sqrt()
    }
}

/// Initial cutoff for a constellation, `ceil(10 + 8·max|α_k|²)`.
pub fn initial_cutoff(c: &Constellation) -> usize {
    (10.0 + 8.0 * c.max_photon_number()).ceil() as usize
}

/// Evaluates at N and N+10, doubling N until Z* (at T = 1, ε ≤ ½) moves by
/// less than [`CUTOFF_CONVERGENCE_TOL`].
fn converge<F>(start: usize, eval: F) -> Result<CorrelationTerms>
where
    F: Fn(usize) -> Result<(f64, f64)>,
{
    let mut n = start.max(1);
    while n <= MAX_CUTOFF {
        let lo = eval(n);
        let hi = eval(n + CUTOFF_STEP);
        match (lo, hi) {
            (Ok((c0, w0)), Ok((c1, w1))) => {
                let delta = 2.0 * (c1 - c0).abs() + (w1.sqrt() - w0.sqrt()).abs();
                debug!("cutoff {n}: trace {c1}, w {w1}, delta {delta:e}");
                if delta < CUTOFF_CONVERGENCE_TOL {
                    return Ok(CorrelationTerms {
                        trace_term: c1,
                        excess_weight: w1,
                        cutoff: n + CUTOFF_STEP,
                    });
                }
            }
            (Err(Error::CutoffTooSmall { required, .. }), _) if required > n => {
                n = required;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
        n *= 2;
    }
    Err(Error::FockConvergence(format!(
        "Z* not converged to {CUTOFF_CONVERGENCE_TOL:e} below cutoff {MAX_CUTOFF}"
    )))
}

/// Trace term and w for a constellation at a converged cutoff.
pub fn correlation_terms(c: &Constellation) -> Result<CorrelationTerms> {
    converge(initial_cutoff(c), |n| {
        let ws = FockWorkspace::from_constellation(c, n)?;
        Ok((ws.trace_term(), ws.excess_weight(c)?))
    })
}

/// Terms for a thermal modulation state with mean photon number `n̄`.
///
/// A thermal τ is diagonal with ratio q = n̄/(n̄+1) between neighbouring
/// entries, so a_τ = a/√q exactly and every coherent state in the Gaussian
/// ensemble is an eigenvector of it: w vanishes.
pub fn thermal_correlation_terms(mean_photons: f64) -> Result<CorrelationTerms> {
    let q = mean_photons / (mean_photons + 1.0);
    let start = (fock::TRACE_DEFICIT_TOL.ln() / q.ln()).ceil().max(10.0) as usize;
    converge(start, |n| {
        let ws = FockWorkspace::thermal(mean_photons, n)?;
        Ok((ws.trace_term(), 0.0))
    })
}

/// Z* for a given channel. Negative values are returned as-is.
pub fn correlation_lower_bound(
    terms: &CorrelationTerms,
    t: Transmittance,
    excess_noise: f64,
) -> Result<f64> {
    if !(excess_noise >= 0.0) {
        return Err(Error::param("excess_noise", excess_noise, "must be >= 0"));
    }
    Ok(terms.z_star(t, excess_noise))
}

pub fn mutual_information_qam(
    modulation_variance: f64,
    t: Transmittance,
    excess_noise: f64,
    kind: DetectionKind,
) -> f64 {
    let t = t.value();
    let hom = 0.5 * (1.0 + t * modulation_variance / (2.0 + t * excess_noise)).log2();
    match kind {
        DetectionKind::Homodyne => hom,
        DetectionKind::Heterodyne => 2.0 * hom,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QamHolevo {
    pub holevo: f64,
    pub eigenvalues: [f64; 3],
}

/// Holevo bound from the three-eigenvalue spectrum of Γ*.
pub fn holevo_qam(
    modulation_variance: f64,
    t: Transmittance,
    excess_noise: f64,
    z_star: f64,
    kind: DetectionKind,
) -> Result<QamHolevo> {
    let t = t.value();
    let a = modulation_variance + 1.0;
    let b = 1.0 + t * modulation_variance + t * excess_noise;
    let c2 = z_star * z_star;
    let (l1, l2) = symplectic_pair((a + b).powi(2) - 4.0 * c2, (a - b).powi(2), "gamma*_AB")?;
    let l3 = match kind {
        DetectionKind::Homodyne => (a * (a - c2 / b)).sqrt(),
        DetectionKind::Heterodyne => a - c2 / (b + 1.0),
    };
    if !(l3 >= 1.0 - PHYSICALITY_TOL * a) {
        return Err(Error::UnphysicalCovariance {
            detail: format!("conditional eigenvalue {l3} < 1 (a = {a}, b = {b}, Z* = {z_star})"),
        });
    }
    let l3 = l3.max(1.0);
    Ok(QamHolevo {
        holevo: eigen_entropy(l1) + eigen_entropy(l2) - eigen_entropy(l3),
        eigenvalues: [l1, l2, l3],
    })
}

/// A QAM constellation together with its converged correlation terms.
#[derive(Debug, Clone, Serialize)]
pub struct QamModel {
    pub points_per_quadrature: usize,
    pub alpha: f64,
    pub distribution: QamDistribution,
    pub constellation: Constellation,
    pub terms: CorrelationTerms,
}

impl QamModel {
    pub fn new(m: usize, alpha: f64, distribution: QamDistribution) -> Result<Self> {
        let constellation = build_constellation(m, alpha, distribution)?;
        let terms = correlation_terms(&constellation)?;
        Ok(QamModel {
            points_per_quadrature: m,
            alpha,
            distribution,
            constellation,
            terms,
        })
    }

    /// Modulation variance seen by the security analysis, 2 Σ p_k |α_k|².
    pub fn modulation_variance(&self) -> f64 {
        self.constellation.modulation_variance()
    }
}

/// β·I_AB − S_BE for a QAM model. A negative Z* is replaced by zero, the
/// trivial bound on the correlation.
pub fn skr_asymptotic_qam(
    model: &QamModel,
    t: Transmittance,
    excess_noise: f64,
    kind: DetectionKind,
    beta: f64,
) -> Result<SecurityResult> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", beta, "must lie in [0, 1]"));
    }
    let va = model.modulation_variance();
    let z = correlation_lower_bound(&model.terms, t, excess_noise)?;
    if z < 0.0 {
        debug!("Z* = {z} < 0 at T = {}; using 0", t.value());
    }
    let hb = holevo_qam(va, t, excess_noise, z.max(0.0), kind)?;
    let mi = mutual_information_qam(va, t, excess_noise, kind);
    Ok(SecurityResult {
        mutual_information: mi,
        holevo: hb.holevo,
        skr_asymptotic: beta * mi - hb.holevo,
        eigenvalues: hb.eigenvalues.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuOptimum {
    pub nu: f64,
    pub skr: f64,
    /// No variation of the objective was seen; `nu` is the bracket midpoint.
    pub flat: bool,
}

pub const NU_RANGE: (f64, f64) = (1e-4, 10.0);

/// Maximizes the discrete-Gaussian QAM key rate over ν.
pub fn optimize_nu(
    m: usize,
    alpha: f64,
    t: Transmittance,
    excess_noise: f64,
    kind: DetectionKind,
    beta: f64,
) -> Result<NuOptimum> {
    let objective = |nu: f64| {
        let model = QamModel::new(m, alpha, QamDistribution::DiscreteGaussian { nu })?;
        Ok(skr_asymptotic_qam(&model, t, excess_noise, kind, beta)?.skr_asymptotic)
    };
    let best = golden_section_max(objective, NU_RANGE.0, NU_RANGE.1, 1e-4)?;
    if best.flat {
        warn!("key rate flat in nu over {NU_RANGE:?}; returning midpoint");
    }
    Ok(NuOptimum {
        nu: best.argmax,
        skr: best.value,
        flat: best.flat,
    })
}
