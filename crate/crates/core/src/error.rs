use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("immersion degenerate at grid point {index}: det g = {det:e} (mean {mean:e})")]
    ImmersionDegenerate { index: usize, det: f64, mean: f64 },

    #[error("point at distance {distance:e} from an inversion center (minimum {min:e})")]
    InversionSingularity { distance: f64, min: f64 },

    #[error("stereographic projection of the pole")]
    PoleSingularity,

    #[error("normal offset {offset:e} exceeds focal bound {bound:e}")]
    FocalRadiusExceeded { offset: f64, bound: f64 },

    #[error("target not in the tubular neighborhood of the base at grid point {index}: {reason}")]
    NotInNeighborhood { index: usize, reason: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("time step collapsed to {dt:e} (minimum {dt_min:e})")]
    StepCollapse { dt: f64, dt_min: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_) | Error::InvalidParameter(_) | Error::GridMismatch | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
