//! Truncated Fock-space representation of the modulation state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::constellation::Constellation;
use crate::error::{Error, Result};

/// Maximum truncated-norm deficit of a single coherent state.
pub const NORM_DEFICIT_TOL: f64 = 1e-12;
/// Maximum trace deficit of τ before renormalization.
pub const TRACE_DEFICIT_TOL: f64 = 1e-8;
/// Eigenvalues of τ down to this are clamped to zero; below it τ is rejected.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;
/// Eigenvalues of τ at or below this are outside its numerical support.
pub const PSEUDO_INVERSE_THRESHOLD: f64 = 1e-14;

type CMatrix = DMatrix<Complex64>;

/// Components e^{-|α|²/2} αⁿ/√(n!) for n = 0..=cutoff, not renormalized.
fn truncated_coherent(alpha: Complex64, cutoff: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(cutoff + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..=cutoff {
        v[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    v
}

/// Smallest cutoff whose truncated Poisson(|α|²) mass is within `tol` of 1.
pub fn required_cutoff(mean_photons: f64, tol: f64) -> usize {
    let mut term = (-mean_photons).exp();
    let mut mass = 0.0;
    let mut n = 0usize;
    loop {
        mass += term;
        if 1.0 - mass <= tol && (n as f64) >= mean_photons {
            return n;
        }
        n += 1;
        term *= mean_photons / n as f64;
        if n > 100_000 {
            return n;
        }
    }
}

/// Normalized coherent state in the Fock basis truncated at `cutoff`.
pub fn coherent_state_vector(alpha: Complex64, cutoff: usize) -> Result<DVector<Complex64>> {
    let v = truncated_coherent(alpha, cutoff);
    let norm2 = v.norm_squared();
    let deficit = 1.0 - norm2;
    if deficit > NORM_DEFICIT_TOL {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: required_cutoff(alpha.norm_sqr(), NORM_DEFICIT_TOL),
            deficit,
        });
    }
    Ok(v / Complex64::new(norm2.sqrt(), 0.0))
}

/// Annihilation operator with √n on the first superdiagonal.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// τ, its clamped spectrum and its square root at one cutoff.
#[derive(Debug, Clone)]
pub struct FockWorkspace {
    cutoff: usize,
    tau: CMatrix,
    spectrum: DVector<f64>,
    eigenvectors: CMatrix,
    tau_sqrt: CMatrix,
}

impl FockWorkspace {
    /// τ = Σ p_k |α_k⟩⟨α_k|, truncated at `cutoff`.
    pub fn from_constellation(c: &Constellation, cutoff: usize) -> Result<Self> {
        let dim = cutoff + 1;
        let mut tau = CMatrix::zeros(dim, dim);
        for p in c.points() {
            let v = truncated_coherent(p.amplitude, cutoff);
            tau.gerc(
                Complex64::new(p.probability, 0.0),
                &v,
                &v,
                Complex64::new(1.0, 0.0),
            );
        }
        let deficit = 1.0 - tau.trace().re;
        if deficit > TRACE_DEFICIT_TOL {
            return Err(Error::CutoffTooSmall {
                cutoff,
                required: required_cutoff(c.max_photon_number(), TRACE_DEFICIT_TOL),
                deficit,
            });
        }
        Self::from_density(tau, cutoff)
    }

    /// Thermal state with mean photon number `mean_photons`, the Gaussian
    /// limit of the modulation.
    pub fn thermal(mean_photons: f64, cutoff: usize) -> Result<Self> {
        if !(mean_photons > 0.0 && mean_photons.is_finite()) {
            return Err(Error::param(
                "mean_photons",
                mean_photons,
                "must be positive",
            ));
        }
        let q = mean_photons / (mean_photons + 1.0);
        let deficit = q.powi(cutoff as i32 + 1);
        if deficit > TRACE_DEFICIT_TOL {
            let required = (TRACE_DEFICIT_TOL.ln() / q.ln()).ceil() as usize;
            return Err(Error::CutoffTooSmall {
                cutoff,
                required,
                deficit,
            });
        }
        let diag = DVector::from_fn(cutoff + 1, |n, _| {
            Complex64::new((1.0 - q) * q.powi(n as i32), 0.0)
        });
        Self::from_density(CMatrix::from_diagonal(&diag), cutoff)
    }

    fn from_density(tau: CMatrix, cutoff: usize) -> Result<Self> {
        let eig = SymmetricEigen::new(tau);
        let min = eig.eigenvalues.min();
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::FockConvergence(format!(
                "density matrix has eigenvalue {min:e} at cutoff {cutoff}"
            )));
        }
        let mut spectrum = eig.eigenvalues.map(|l| l.max(0.0));
        let total = spectrum.sum();
        spectrum /= total;
        let u = eig.eigenvectors;
        let tau = spectral_function(&u, &spectrum, |l| l);
        let tau_sqrt = spectral_function(&u, &spectrum, f64::sqrt);
        Ok(FockWorkspace {
            cutoff,
            tau,
            spectrum,
            eigenvectors: u,
            tau_sqrt,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    pub fn tau_sqrt(&self) -> &CMatrix {
        &self.tau_sqrt
    }

    /// Eigenvalues of τ after clamping and renormalization, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.spectrum.iter().copied().collect();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Tr(τ^{1/2} a τ^{1/2} a†).
    pub fn trace_term(&self) -> f64 {
        let a = annihilation(self.cutoff);
        let left = &self.tau_sqrt * &a;
        let right = &self.tau_sqrt * a.adjoint();
        left.component_mul(&right.transpose()).sum().re
    }

    /// a_τ = τ^{1/2} a τ^{-1/2}, with the inverse taken on the support of τ.
    pub fn a_tau(&self) -> CMatrix {
        let inv_sqrt = spectral_function(&self.eigenvectors, &self.spectrum, |l| {
            if l > PSEUDO_INVERSE_THRESHOLD {
                1.0 / l.sqrt()
            } else {
                0.0
            }
        });
        &self.tau_sqrt * annihilation(self.cutoff) * inv_sqrt
    }

    /// w = Σ_k p_k (⟨α_k|a_τ† a_τ|α_k⟩ − |⟨α_k|a_τ|α_k⟩|²).
    pub fn excess_weight(&self, c: &Constellation) -> Result<f64> {
        let a_tau = self.a_tau();
        let mut w = 0.0;
        for p in c.points() {
            let raw = truncated_coherent(p.amplitude, self.cutoff);
            let v = &raw / Complex64::new(raw.norm(), 0.0);
            let av = &a_tau * &v;
            w += p.probability * (av.norm_squared() - v.dotc(&av).norm_sqr());
        }
        if w < -NEGATIVE_EIGEN_TOL {
            return Err(Error::FockConvergence(format!(
                "negative excess-noise weight w = {w:e} at cutoff {}",
                self.cutoff
            )));
        }
        Ok(w.max(0.0))
    }
}

fn spectral_function(u: &CMatrix, spectrum: &DVector<f64>, f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = u.clone();
    for (j, &l) in spectrum.iter().enumerate() {
        let s = f(l);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    scaled * u.adjoint()
}
