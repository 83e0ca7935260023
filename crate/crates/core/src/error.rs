use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("multiplier symbol is not finite at lattice frequency {xi:?}")]
    NonFiniteSymbol { xi: Vec<f64> },

    #[error("{what} has no closed form in dimension {dim}")]
    UnsupportedDimension { what: &'static str, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("blow-up detected at t = {t}")]
    BlowupDetected { t: f64 },

    #[error("fixed-point iteration does not contract (iteration {iteration}, ratio {ratio:.3e})")]
    NoContraction { iteration: usize, ratio: f64 },

    #[error("Duhamel integrand does not decay over the last quartile of [0, {t_inf}]")]
    TailNotDecaying { t_inf: f64 },

    #[error("no lattice modes with velocity squared in ({lo}, {hi})")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("exponential weight overflows: log-norm {log_norm:.1} is not representable")]
    OverflowRisk { log_norm: f64 },

    #[error("mass {boundary_mass:.3e} reached the periodic boundary layer")]
    WrapAround { boundary_mass: f64 },

    #[error("initial state leaks {outside_mass:.3e} mass outside its support region")]
    SupportLeak { outside_mass: f64 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
