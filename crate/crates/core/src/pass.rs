//! Key accumulated over a satellite pass.
//!
//! The elevation profile is binned (1° by default), the key rate is evaluated
//! once per occupied bin at the bin centre, and each sample contributes its
//! trapezoidal share of time at its bin's rate. Negative rates count as zero.

use std::io::Read;

use log::debug;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::LinkGeometry;
use crate::error::{Error, Result};
use crate::quantities::Length;

/// Standard gravitational parameter of the Earth (m³/s²).
pub const EARTH_MU: f64 = 3.986_004_418e14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub time_s: f64,
    pub elevation_deg: f64,
}

/// Elevation versus time over one pass, with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassProfile {
    samples: Vec<ProfileSample>,
    pub ogs_altitude: Length,
}

impl PassProfile {
    pub fn new(samples: Vec<ProfileSample>, ogs_altitude: Length) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            let line = i as u64 + 1;
            check_sample(s, line)?;
            if i > 0 && !(s.time_s > samples[i - 1].time_s) {
                return Err(Error::Profile {
                    line,
                    message: format!("time {} not after {}", s.time_s, samples[i - 1].time_s),
                });
            }
        }
        Ok(PassProfile {
            samples,
            ogs_altitude,
        })
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn duration_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.time_s - a.time_s,
            _ => 0.0,
        }
    }

    /// Trapezoidal quadrature weight of each sample.
    pub fn dwell_weights(&self) -> Vec<f64> {
        let s = &self.samples;
        (0..s.len())
            .map(|i| {
                let before = if i > 0 {
                    s[i].time_s - s[i - 1].time_s
                } else {
                    0.0
                };
                let after = if i + 1 < s.len() {
                    s[i + 1].time_s - s[i].time_s
                } else {
                    0.0
                };
                0.5 * (before + after)
            })
            .collect()
    }
}

fn check_sample(s: &ProfileSample, line: u64) -> Result<()> {
    if !s.time_s.is_finite() {
        return Err(Error::Profile {
            line,
            message: format!("time {} is not finite", s.time_s),
        });
    }
    if !(s.elevation_deg > 0.0 && s.elevation_deg <= 90.0) {
        return Err(Error::Profile {
            line,
            message: format!("elevation {} outside (0, 90] degrees", s.elevation_deg),
        });
    }
    Ok(())
}

/// Reads `time_s,elevation_deg` records. A first line that does not parse as
/// numbers is taken as a header.
pub fn load_profile<R: Read>(source: R, ogs_altitude: Length) -> Result<PassProfile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(source);
    let mut samples: Vec<ProfileSample> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Profile {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Profile {
                line,
                message: format!(
                    "expected 2 fields (time_s, elevation_deg), found {}",
                    record.len()
                ),
            });
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        let (time_s, elevation_deg) = match parsed {
            (Ok(t), Ok(e)) => (t, e),
            _ if first => {
                first = false;
                continue;
            }
            _ => {
                return Err(Error::Profile {
                    line,
                    message: format!("cannot parse '{}', '{}' as numbers", &record[0], &record[1]),
                })
            }
        };
        first = false;
        let sample = ProfileSample {
            time_s,
            elevation_deg,
        };
        check_sample(&sample, line)?;
        if let Some(prev) = samples.last() {
            if !(time_s > prev.time_s) {
                return Err(Error::Profile {
                    line,
                    message: format!("time {time_s} not after {}", prev.time_s),
                });
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::Profile {
            line: 0,
            message: "profile has no samples".into(),
        });
    }
    Ok(PassProfile {
        samples,
        ogs_altitude,
    })
}

/// A pass of a circular orbit over a spherical, non-rotating Earth, centred on
/// t = 0 and sampled every `sample_dt_s` while above the horizon.
pub fn synthesize_circular_pass(
    altitude: Length,
    max_elevation_deg: f64,
    sample_dt_s: f64,
    ogs_altitude: Length,
) -> Result<PassProfile> {
    let geometry = LinkGeometry::new(altitude, max_elevation_deg).with_ogs_altitude(ogs_altitude);
    geometry.validate()?;
    if !(sample_dt_s > 0.0) {
        return Err(Error::param("sample_dt_s", sample_dt_s, "must be positive"));
    }
    let r_sat = geometry.earth_radius.m() + altitude.m();
    let r_ogs = geometry.earth_radius.m() + ogs_altitude.m();
    let elevation = |gamma: f64| {
        (r_sat * gamma.cos() - r_ogs)
            .atan2(r_sat * gamma.sin())
            .to_degrees()
    };

    // cross-track offset of the ground track giving the requested peak
    let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if elevation(mid) > max_elevation_deg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let psi0 = 0.5 * (lo + hi);
    let omega = (EARTH_MU / r_sat.powi(3)).sqrt();
    let horizon = (r_ogs / r_sat).acos();
    let half_span = (horizon.cos() / psi0.cos()).clamp(-1.0, 1.0).acos() / omega;
    let n = (half_span / sample_dt_s).floor() as i64;
    let samples = (-n..=n)
        .filter_map(|i| {
            let t = i as f64 * sample_dt_s;
            let gamma = (psi0.cos() * (omega * t).cos()).clamp(-1.0, 1.0).acos();
            let e = elevation(gamma).min(90.0);
            (e > 0.0).then_some(ProfileSample {
                time_s: t,
                elevation_deg: e,
            })
        })
        .collect();
    PassProfile::new(samples, ogs_altitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassSettings {
    pub bin_width_deg: f64,
    /// Elevations above this are untrackable and contribute no key.
    pub keyhole_ceiling_deg: Option<f64>,
}

impl Default for PassSettings {
    fn default() -> Self {
        PassSettings {
            bin_width_deg: 1.0,
            keyhole_ceiling_deg: None,
        }
    }
}

impl PassSettings {
    fn bin_count(&self) -> usize {
        (90.0 / self.bin_width_deg).ceil() as usize
    }

    pub fn bin_of(&self, elevation_deg: f64) -> usize {
        ((elevation_deg / self.bin_width_deg).floor() as usize).min(self.bin_count() - 1)
    }

    pub fn bin_centre(&self, bin: usize) -> f64 {
        ((bin as f64 + 0.5) * self.bin_width_deg).min(90.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width_deg > 0.0 && self.bin_width_deg <= 90.0) {
            return Err(Error::param(
                "bin_width_deg",
                self.bin_width_deg,
                "must lie in (0, 90]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStatus {
    Evaluated,
    /// The rate could not be evaluated (e.g. near field, invalid fit).
    Excluded,
    Keyhole,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSummary {
    pub bin: usize,
    pub centre_deg: f64,
    pub dwell_s: f64,
    pub skr: Option<f64>,
    pub status: BinStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassPoint {
    pub time_s: f64,
    pub elevation_deg: f64,
    /// Raw rate of the sample's bin (bits/s), possibly negative.
    pub skr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassResult {
    pub skr_series: Vec<PassPoint>,
    pub bins: Vec<BinSummary>,
    pub total_key_bits: f64,
    /// Lowest bin centre with a positive rate.
    pub min_positive_elevation_deg: Option<f64>,
}

/// Integrates key bits over a pass. `rate` maps an elevation (degrees) to a
/// key rate in bits/s, or `None` when no rate can be evaluated there.
pub fn integrate_key_bits<F>(
    profile: &PassProfile,
    settings: &PassSettings,
    rate: F,
) -> Result<PassResult>
where
    F: Fn(f64) -> Result<Option<f64>> + Sync,
{
    settings.validate()?;
    let weights = profile.dwell_weights();
    let sample_bins: Vec<usize> = profile
        .samples()
        .iter()
        .map(|s| settings.bin_of(s.elevation_deg))
        .collect();
    let mut occupied = sample_bins.clone();
    occupied.sort_unstable();
    occupied.dedup();

    let evaluated: Vec<(Option<f64>, BinStatus)> = occupied
        .par_iter()
        .map(|&bin| {
            let centre = settings.bin_centre(bin);
            if settings.keyhole_ceiling_deg.is_some_and(|c| centre > c) {
                return Ok((None, BinStatus::Keyhole));
            }
            Ok(match rate(centre)? {
                Some(r) => (Some(r), BinStatus::Evaluated),
                None => {
                    debug!("bin at {centre} deg excluded");
                    (None, BinStatus::Excluded)
                }
            })
        })
        .collect::<Result<_>>()?;
    let lookup = |bin: usize| {
        let idx = occupied.binary_search(&bin).expect("occupied bin");
        evaluated[idx]
    };

    let mut dwell = vec![0.0; occupied.len()];
    let mut total = 0.0;
    let mut series = Vec::with_capacity(weights.len());
    for ((s, &w), &bin) in profile.samples().iter().zip(&weights).zip(&sample_bins) {
        let (skr, _) = lookup(bin);
        dwell[occupied.binary_search(&bin).expect("occupied bin")] += w;
        total += skr.unwrap_or(0.0).max(0.0) * w;
        series.push(PassPoint {
            time_s: s.time_s,
            elevation_deg: s.elevation_deg,
            skr,
        });
    }
    let bins: Vec<BinSummary> = occupied
        .iter()
        .zip(&evaluated)
        .zip(&dwell)
        .map(|((&bin, &(skr, status)), &dwell_s)| BinSummary {
            bin,
            centre_deg: settings.bin_centre(bin),
            dwell_s,
            skr,
            status,
        })
        .collect();
    let min_positive_elevation_deg = bins
        .iter()
        .find(|b| b.skr.is_some_and(|r| r > 0.0))
        .map(|b| b.centre_deg);
    Ok(PassResult {
        skr_series: series,
        bins,
        total_key_bits: total,
        min_positive_elevation_deg,
    })
}
