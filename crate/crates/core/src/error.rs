use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("{what} = {value} is outside the valid domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter {name} = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("scan needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("mean count {mean} per point is too large to sample")]
    RateOverflow { mean: f64 },

    #[error("fringe fit is ill-conditioned: sample phases do not span the fringe")]
    IllConditioned,

    #[error("fitted mean level {mean_level} is not positive")]
    DegenerateData { mean_level: f64 },

    #[error("no fringe period can be identified in the data")]
    NoPeriod,

    #[error("analyzer grid is empty")]
    EmptyGrid,

    #[error("every analyzer grid point failed")]
    AllPointsFailed,

    #[error("bootstrap produced {succeeded} usable resamples out of {requested}")]
    BootstrapFailed { succeeded: usize, requested: usize },
}
