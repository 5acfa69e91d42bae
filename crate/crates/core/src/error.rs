use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("negative attenuation {0} dB is not a loss")]
    NegativeAttenuation(f64),

    #[error("transmittance {0} is a total blockage and has no finite dB value")]
    TotalBlockage(f64),

    #[error("invalid link geometry: {0}")]
    InvalidGeometry(String),

    #[error(
        "receiver not in the far field: link {distance_m:.1} m < D_r*D_t/lambda = {bound_m:.1} m"
    )]
    FarField { distance_m: f64, bound_m: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("unphysical covariance matrix: {detail}")]
    UnphysicalCovariance { detail: String },

    #[error("domain error in {function}: argument {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("correlation coefficient undefined: zero spectral weight zeta_{index}")]
    ZeroSpectralWeight { index: usize },

    #[error("Fock cutoff {cutoff} too small (truncated norm deficit {deficit:e}); need at least {required}")]
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        deficit: f64,
    },

    #[error("Fock computation did not converge: {0}")]
    FockConvergence(String),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("pass profile line {line}: {message}")]
    Profile { line: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Config/input problems, as opposed to failures inside the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidGeometry(_)
                | Error::InvalidConstellation(_)
                | Error::Profile { .. }
                | Error::Io(_)
        )
    }

    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
