//! Independent reference computations shared by the integration tests.
//!
//! The oracles do not call into the crate's numerics: covariance matrices
//! are built explicitly and diagonalized, Fock matrices are summed term by
//! term, and slant ranges come from intersecting a ray with a circle.
//! `closed_form` is the crate side of the symplectic comparison.

#![allow(dead_code)]

use cvqkd_core::gm::{channel_noise, holevo_bound, DetectionKind, NoiseBudget};
use cvqkd_core::Transmittance;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// Symplectic form on `n` modes, (x₁, p₁, x₂, p₂, ...) ordering.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// Symplectic eigenvalues, descending. For γ > 0 the matrix
/// `γ^{1/2} Ω γ^{1/2}` is antisymmetric and `MᵀM` has each ν² twice.
pub fn symplectic_spectrum(gamma: &DMatrix<f64>) -> Vec<f64> {
    let n = gamma.nrows() / 2;
    let eig = SymmetricEigen::new(gamma.clone());
    assert!(
        eig.eigenvalues.iter().all(|&l| l > 0.0),
        "covariance not positive definite"
    );
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let m = &root * omega(n) * &root;
    let mut sq: Vec<f64> = SymmetricEigen::new(m.transpose() * &m)
        .eigenvalues
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sq.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn block(v: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal_element(2, 2, v)
}

fn sigma_z(c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[c, 0.0, 0.0, -c])
}

/// Two-mode state with local variances `a`, `b` and correlation `c·σ_z`.
pub fn two_mode(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(4, 4);
    g.view_mut((0, 0), (2, 2)).copy_from(&block(a));
    g.view_mut((2, 2), (2, 2)).copy_from(&block(b));
    g.view_mut((0, 2), (2, 2)).copy_from(&sigma_z(c));
    g.view_mut((2, 0), (2, 2)).copy_from(&sigma_z(c));
    g
}

#[derive(Debug, Clone, Copy)]
pub struct GmCase {
    pub va: f64,
    pub t: f64,
    pub eps_ch: f64,
    pub eps_det: f64,
    pub eta: f64,
    pub heterodyne: bool,
    pub z: f64,
}

/// Spectra of γ_AB and of Eve's purification conditioned on Bob's result,
/// from the entangling-cloner plus trusted-detector model: Bob's mode meets
/// one arm of an EPR pair of variance ν on a beam splitter of transmission
/// η before an ideal homodyne or heterodyne measurement.
pub fn gm_spectra(c: &GmCase) -> (Vec<f64>, Vec<f64>) {
    let v = c.va + 1.0;
    let chi_line = 1.0 / c.t - 1.0 + c.eps_ch;
    let vb = c.t * (v + chi_line);
    let ab = two_mode(v, vb, c.t.sqrt() * c.z);
    let outer = symplectic_spectrum(&ab);

    let nu = if c.eta < 1.0 {
        let extra = if c.heterodyne {
            2.0 * c.eps_det
        } else {
            c.eps_det
        };
        1.0 + extra / (1.0 - c.eta)
    } else {
        assert_eq!(c.eps_det, 0.0, "eta = 1 leaves no room for detector noise");
        1.0
    };
    // modes: A, B, F0, G
    let mut g = DMatrix::zeros(8, 8);
    g.view_mut((0, 0), (4, 4)).copy_from(&ab);
    g.view_mut((4, 4), (4, 4))
        .copy_from(&two_mode(nu, nu, (nu * nu - 1.0).sqrt()));
    let (s, r) = (c.eta.sqrt(), (1.0 - c.eta).sqrt());
    let mut bs = DMatrix::identity(8, 8);
    for q in 0..2 {
        let (b, f) = (2 + q, 4 + q);
        bs[(b, b)] = s;
        bs[(b, f)] = r;
        bs[(f, b)] = -r;
        bs[(f, f)] = s;
    }
    let g = &bs * g * bs.transpose();

    let rest = [0usize, 1, 4, 5, 6, 7];
    let meas = [2usize, 3];
    let ga = DMatrix::from_fn(6, 6, |i, j| g[(rest[i], rest[j])]);
    let gb = DMatrix::from_fn(2, 2, |i, j| g[(meas[i], meas[j])]);
    let sab = DMatrix::from_fn(6, 2, |i, j| g[(rest[i], meas[j])]);
    let inv = if c.heterodyne {
        (gb + DMatrix::identity(2, 2)).try_inverse().unwrap()
    } else {
        // Moore-Penrose inverse of diag(V_x, 0)
        DMatrix::from_row_slice(2, 2, &[1.0 / gb[(0, 0)], 0.0, 0.0, 0.0])
    };
    let cond = &ga - &sab * inv * sab.transpose();
    let cond = 0.5 * (&cond + cond.transpose());
    (outer, symplectic_spectrum(&cond))
}

/// Eigenvalues and Holevo bound from the crate's closed forms.
pub fn closed_form(c: &GmCase) -> ([f64; 4], f64) {
    let budget = NoiseBudget {
        channel_excess: c.eps_ch,
        detector_excess: c.eps_det,
        detector_efficiency: c.eta,
    };
    let kind = if c.heterodyne {
        DetectionKind::Heterodyne
    } else {
        DetectionKind::Homodyne
    };
    let t = Transmittance::new(c.t).unwrap();
    let n = channel_noise(t, &budget, kind).unwrap();
    let hb = holevo_bound(c.va, t, n.chi_line, n.chi_det, c.z, kind).unwrap();
    (hb.eigenvalues, hb.holevo)
}

/// Random physical configurations, T from 1e-5 to 1.
pub fn gm_case() -> impl Strategy<Value = GmCase> {
    (
        0.1f64..20.0,
        -5.0f64..0.0,
        0.0f64..0.1,
        0.0f64..0.1,
        0.4f64..0.999,
        any::<bool>(),
        0.5f64..=1.0,
    )
        .prop_map(|(va, lt, eps_ch, eps_det, eta, heterodyne, zf)| GmCase {
            va,
            t: 10f64.powf(lt),
            eps_ch,
            eps_det,
            eta,
            heterodyne,
            z: zf * (va * va + 2.0 * va).sqrt(),
        })
}

/// Bits of entropy of a Gaussian mode with symplectic eigenvalue `nu`.
pub fn mode_entropy(nu: f64) -> f64 {
    let x = 0.5 * (nu - 1.0);
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).log2() - x * x.log2()
    }
}

/// Nonzero eigenvalues of the truncated Fock density matrix of an M-PSK
/// mixture with real amplitude `alpha`, descending.
pub fn psk_fock_spectrum(states: usize, alpha: f64, cutoff: usize) -> Vec<f64> {
    // c_n = e^{-α²/2} α^n / √n!
    let mut c = vec![(-0.5 * alpha * alpha).exp()];
    for n in 1..cutoff {
        let prev = c[n - 1];
        c.push(prev * alpha / (n as f64).sqrt());
    }
    let phase_avg = |d: i64| -> f64 {
        (0..states)
            .map(|k| (2.0 * std::f64::consts::PI * (k as f64) * (d as f64) / states as f64).cos())
            .sum::<f64>()
            / states as f64
    };
    let rho = DMatrix::from_fn(cutoff, cutoff, |m, n| {
        c[m] * c[n] * phase_avg(m as i64 - n as i64)
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(rho)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev.truncate(states);
    ev
}

/// Length from a station at radius `r_station` along a ray at elevation
/// `elevation_deg` to the circle of radius `r_target`, by placing the station
/// at (0, r_station) and solving |p + s·u| = r_target for s > 0.
pub fn ray_to_circle(r_station: f64, r_target: f64, elevation_deg: f64) -> f64 {
    let e = elevation_deg.to_radians();
    let (px, py) = (0.0, r_station);
    let (ux, uy) = (e.cos(), e.sin());
    let b = px * ux + py * uy;
    let c = px * px + py * py - r_target * r_target;
    // s² + 2bs + c = 0 with c < 0; the positive root, written to avoid
    // cancellation when b > 0
    -c / (b + (b * b - c).sqrt())
}
