//! Satellite-to-ground optical channel: slant-path geometry plus geometric,
//! aerosol-scattering and scintillation losses, combined into one link
//! transmittance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;
use crate::quantities::{db_to_transmittance, Decibel, Length, Transmittance};

/// Tolerance for rounding noise in arcsine arguments.
const ARCSIN_SLACK: f64 = 1e-9;

/// `10 log10(e)`, the dB-per-neper factor.
const DB_PER_NEPER: f64 = 4.342_944_819_032_518;

/// Constant in the scintillation-margin expression, printed to four digits.
const SCINTILLATION_DB_FACTOR: f64 = 4.343;

/// Spherical-Earth geometry of a ground station looking at a satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub earth_radius: Length,
    pub ogs_altitude: Length,
    /// Satellite altitude; equals the link length at 90° elevation from sea level.
    pub satellite_altitude: Length,
    /// Thickness of the layer holding the bulk of the atmospheric mass.
    pub atmosphere_thickness: Length,
    pub elevation_deg: f64,
}

impl LinkGeometry {
    pub const EARTH_RADIUS: Length = Length::from_km(6371.0);
    pub const ATMOSPHERE_THICKNESS: Length = Length::from_km(20.0);

    /// Sea-level station, 20 km atmosphere.
    pub fn new(satellite_altitude: Length, elevation_deg: f64) -> Self {
        LinkGeometry {
            earth_radius: Self::EARTH_RADIUS,
            ogs_altitude: Length::from_m(0.0),
            satellite_altitude,
            atmosphere_thickness: Self::ATMOSPHERE_THICKNESS,
            elevation_deg,
        }
    }

    pub fn with_ogs_altitude(mut self, ogs_altitude: Length) -> Self {
        self.ogs_altitude = ogs_altitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let th = self.elevation_deg;
        if !(th > 0.0 && th <= 90.0) {
            return Err(Error::InvalidGeometry(format!(
                "elevation {th}° outside (0, 90]"
            )));
        }
        let (ogs, atm, sat) = (
            self.ogs_altitude.m(),
            self.atmosphere_thickness.m(),
            self.satellite_altitude.m(),
        );
        if !(ogs >= 0.0 && atm > ogs && sat > atm) {
            return Err(Error::InvalidGeometry(format!(
                "need satellite altitude ({sat} m) > atmosphere top ({atm} m) > OGS altitude ({ogs} m) >= 0"
            )));
        }
        if self.earth_radius.m() <= 0.0 {
            return Err(Error::InvalidGeometry(
                "earth radius must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Ground-station and satellite optics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalTerminals {
    pub wavelength: Length,
    pub transmitter_aperture: Length,
    pub receiver_aperture: Length,
    pub transmitter_efficiency: f64,
    pub receiver_efficiency: f64,
    /// Fractional power lost to pointing, acquisition and beam wander.
    pub pointing_loss: f64,
}

impl OpticalTerminals {
    /// 1550 nm, 0.3 m transmitter, 0.9/0.9 optics, 10% pointing loss.
    pub fn reference(receiver_aperture: Length) -> Self {
        OpticalTerminals {
            wavelength: Length::from_nm(1550.0),
            transmitter_aperture: Length::from_m(0.3),
            receiver_aperture,
            transmitter_efficiency: 0.9,
            receiver_efficiency: 0.9,
            pointing_loss: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength.m()),
            ("transmitter_aperture", self.transmitter_aperture.m()),
            ("receiver_aperture", self.receiver_aperture.m()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be positive"));
            }
        }
        for (name, v) in [
            ("transmitter_efficiency", self.transmitter_efficiency),
            ("receiver_efficiency", self.receiver_efficiency),
            ("pointing_loss", self.pointing_loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, v, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Shortest link for which the far-field loss formula holds, `D_r D_t / λ`.
    pub fn far_field_distance(&self) -> Length {
        Length::from_m(
            self.receiver_aperture.m() * self.transmitter_aperture.m() / self.wavelength.m(),
        )
    }
}

/// Aerosol visibility and turbulence strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphericConditions {
    pub visibility: Length,
    /// Refractive-index structure parameter in m^(-2/3), constant along the path.
    pub cn2: f64,
    /// Tolerated fraction of time the received power may fall below threshold.
    pub outage_probability: f64,
}

impl AtmosphericConditions {
    /// High visibility, weak turbulence: V = 200 km, C_n² = 1e-16.
    pub fn good() -> Self {
        AtmosphericConditions {
            visibility: Length::from_km(200.0),
            cn2: 1e-16,
            outage_probability: 1e-6,
        }
    }

    /// Low visibility, strong turbulence: V = 20 km, C_n² = 1e-13.
    pub fn bad() -> Self {
        AtmosphericConditions {
            visibility: Length::from_km(20.0),
            cn2: 1e-13,
            outage_probability: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.visibility.m() > 0.0) {
            return Err(Error::param(
                "visibility",
                self.visibility.km(),
                "must be positive",
            ));
        }
        if !(self.cn2 >= 0.0 && self.cn2.is_finite()) {
            return Err(Error::param("cn2", self.cn2, "must be finite and >= 0"));
        }
        let p = self.outage_probability;
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::param(
                "outage_probability",
                p,
                "must lie in (0, 0.5)",
            ));
        }
        Ok(())
    }
}

/// Slant distances through space and through the atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlantPath {
    pub total_distance: Length,
    pub effective_atmosphere: Length,
}

/// Distance from a station at radius `r_station` to the point at radius
/// `r_target` seen at elevation `elevation_deg`, via the Earth-centre angle
/// and the law of cosines.
fn slant_distance(r_station: f64, r_target: f64, elevation_deg: f64) -> Result<f64> {
    let th = elevation_deg.to_radians();
    let mut s = th.cos() * r_station / r_target;
    if s.abs() > 1.0 + ARCSIN_SLACK {
        return Err(Error::InvalidGeometry(format!(
            "arcsin argument {s} outside [-1, 1]"
        )));
    }
    s = s.clamp(-1.0, 1.0);
    // nadir angle at the target, then the angle subtended at the Earth's centre
    let central = (std::f64::consts::FRAC_PI_2 - th) - s.asin();
    // a² + b² - 2ab·cos c, rewritten to avoid cancellation near zenith
    let half_sin = (0.5 * central).sin();
    let sq = (r_target - r_station).powi(2) + 4.0 * r_target * r_station * half_sin * half_sin;
    Ok(sq.sqrt())
}

/// Total link length and the length of the path inside the atmosphere.
pub fn slant_path(geometry: &LinkGeometry) -> Result<SlantPath> {
    geometry.validate()?;
    let re = geometry.earth_radius.m();
    let station = re + geometry.ogs_altitude.m();
    let total = slant_distance(
        station,
        re + geometry.satellite_altitude.m(),
        geometry.elevation_deg,
    )?;
    let atm = slant_distance(
        station,
        re + geometry.atmosphere_thickness.m(),
        geometry.elevation_deg,
    )?;
    Ok(SlantPath {
        total_distance: Length::from_m(total),
        effective_atmosphere: Length::from_m(atm),
    })
}

/// Diffraction-limited free-space loss including terminal efficiencies.
///
/// Fails with [`Error::FarField`] when the link is shorter than
/// `D_r D_t / λ`; such configurations should be skipped, not evaluated.
pub fn geometric_loss(path: &SlantPath, terminals: &OpticalTerminals) -> Result<Decibel> {
    terminals.validate()?;
    let l = path.total_distance.m();
    let bound = terminals.far_field_distance().m();
    if l < bound {
        return Err(Error::FarField {
            distance_m: l,
            bound_m: bound,
        });
    }
    let lambda = terminals.wavelength.m();
    let dt = terminals.transmitter_aperture.m();
    let dr = terminals.receiver_aperture.m();
    let spread = (l * lambda / (dt * dr)).powi(2);
    let optics = terminals.transmitter_efficiency
        * (1.0 - terminals.pointing_loss)
        * terminals.receiver_efficiency;
    Ok(Decibel(10.0 * (spread / optics).log10()))
}

/// Kruse-Kim size-distribution exponent for visibility `v_km`.
pub fn kruse_kim_exponent(v_km: f64) -> f64 {
    if v_km >= 50.0 {
        1.6
    } else if v_km >= 6.0 {
        1.3
    } else if v_km >= 1.0 {
        0.16 * v_km + 0.34
    } else if v_km >= 0.5 {
        v_km - 0.5
    } else {
        0.0
    }
}

/// Mie-scattering attenuation per kilometre (returned as dB, meaning dB/km).
pub fn scattering_coefficient(wavelength: Length, visibility: Length) -> Result<Decibel> {
    let v = visibility.km();
    if !(v > 0.0) {
        return Err(Error::param("visibility", v, "must be positive"));
    }
    let p = kruse_kim_exponent(v);
    Ok(Decibel(
        DB_PER_NEPER * (3.912 / v) * (wavelength.nm() / 550.0).powf(-p),
    ))
}

/// Rytov variance for a path of length `path_length` with turbulence profile
/// `cn2(z)` (z measured from the transmitter side of the turbulent layer).
pub fn rytov_variance<F>(path_length: Length, cn2: F, wavelength: Length) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let l = path_length.m();
    let lambda = wavelength.m();
    if !(l > 0.0 && lambda > 0.0) {
        return Err(Error::param("path_length", l, "must be positive"));
    }
    let k = 2.0 * std::f64::consts::PI / lambda;
    // u = L - z = s^6 removes the (L - z)^(5/6) endpoint singularity:
    // int_0^L C(z)(L-z)^(5/6) dz = int_0^(L^(1/6)) 6 s^10 C(L - s^6) ds
    let upper = l.powf(1.0 / 6.0);
    let integral = numerics::integrate(
        |s| {
            let s2 = s * s;
            let s5 = s2 * s2 * s;
            6.0 * s5 * s5 * cn2(l - s5 * s)
        },
        0.0,
        upper,
        0.0,
        1e-13,
    )?;
    Ok(2.25 * k.powf(7.0 / 6.0) * integral.value)
}

/// Aperture-averaged scintillation index of a spherical wave.
pub fn scintillation_index(
    receiver_aperture: Length,
    wavelength: Length,
    path_length: Length,
    rytov: f64,
) -> f64 {
    let d2 = receiver_aperture.m().powi(2) * std::f64::consts::PI
        / (2.0 * wavelength.m() * path_length.m());
    let r65 = rytov.powf(6.0 / 5.0);
    let small_scale = 0.20 * rytov / (1.0 + 0.18 * d2 + 0.20 * r65).powf(7.0 / 6.0);
    let large_scale =
        0.21 * rytov * (1.0 + 0.24 * r65).powf(-5.0 / 6.0) / (1.0 + 0.90 * d2 + 0.21 * d2 * r65);
    (small_scale + large_scale).exp() - 1.0
}

/// Scintillation fade margin for outage probability `p_thr`.
///
/// Signed as printed: negative for small `p_thr`. The link budget applies
/// its magnitude as a loss.
pub fn scintillation_loss(scintillation_index: f64, p_thr: f64) -> Result<Decibel> {
    if !(p_thr > 0.0 && p_thr < 0.5) {
        return Err(Error::param(
            "outage_probability",
            p_thr,
            "must lie in (0, 0.5)",
        ));
    }
    if !(scintillation_index >= 0.0) {
        return Err(Error::param(
            "scintillation_index",
            scintillation_index,
            "must be >= 0",
        ));
    }
    let ln1p = scintillation_index.ln_1p();
    let q = statrs::function::erf::erf_inv(2.0 * p_thr - 1.0);
    Ok(Decibel(
        SCINTILLATION_DB_FACTOR * (q * (2.0 * ln1p).sqrt() - 0.5 * ln1p),
    ))
}

/// Every intermediate of a link evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub path: SlantPath,
    pub geometric: Decibel,
    /// Scattering coefficient times the in-atmosphere path length.
    pub scattering: Decibel,
    pub rytov_variance: f64,
    pub scintillation_index: f64,
    /// Signed scintillation margin; `|scintillation|` enters the total.
    pub scintillation: Decibel,
    pub total: Decibel,
    pub transmittance: Transmittance,
}

/// Evaluates the full link budget.
pub fn link_budget(
    geometry: &LinkGeometry,
    terminals: &OpticalTerminals,
    conditions: &AtmosphericConditions,
) -> Result<LinkBudget> {
    conditions.validate()?;
    let path = slant_path(geometry)?;
    let geometric = geometric_loss(&path, terminals)?;
    let scattering = Decibel(
        scattering_coefficient(terminals.wavelength, conditions.visibility)?.value()
            * path.effective_atmosphere.km(),
    );
    let cn2 = conditions.cn2;
    let rytov = rytov_variance(path.effective_atmosphere, |_| cn2, terminals.wavelength)?;
    let sci_index = scintillation_index(
        terminals.receiver_aperture,
        terminals.wavelength,
        path.effective_atmosphere,
        rytov,
    );
    let scintillation = scintillation_loss(sci_index, conditions.outage_probability)?;
    let total = Decibel(geometric.value() + scattering.value() + scintillation.value().abs());
    let transmittance = db_to_transmittance(total)?;
    Ok(LinkBudget {
        path,
        geometric,
        scattering,
        rytov_variance: rytov,
        scintillation_index: sci_index,
        scintillation,
        total,
        transmittance,
    })
}

/// Overall link transmittance `10^(-A_tot/10)`.
pub fn total_transmittance(
    geometry: &LinkGeometry,
    terminals: &OpticalTerminals,
    conditions: &AtmosphericConditions,
) -> Result<Transmittance> {
    link_budget(geometry, terminals, conditions).map(|b| b.transmittance)
}
