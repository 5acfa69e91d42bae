//! Key-rate simulation for continuous-variable QKD over satellite-to-ground
//! optical downlinks.
//!
//! The crate models the downlink attenuation budget and evaluates asymptotic
//! and finite-size secret key rates for Gaussian, PSK and QAM modulated
//! coherent-state protocols, plus the total key accumulated over a pass.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod finite_size;
pub mod gm;
pub mod numerics;
pub mod pass;
pub mod psk;
pub mod qam;
pub mod quantities;
pub mod report;
pub mod sweep;

pub use config::{ProtocolSpec, ReconciliationSpec, RunConfig};
pub use error::{Error, Result};
pub use finite_size::{FiniteSizeParams, ReconciliationKind};
pub use gm::{DetectionKind, NoiseBudget, SecurityResult};
pub use quantities::{Decibel, Length, ShotNoiseUnits, Transmittance};
pub use sweep::{compare_protocols, run_pass, run_sweep, thread_pool, PassReport, SweepRecord};
