//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModkgError {
    #[error("field contains non-finite samples")]
    NonFiniteField,

    #[error("symbol evaluated to a non-finite value at frequency {xi:?}")]
    NonFiniteSymbol { xi: [f64; 3] },

    #[error("invalid Lebesgue exponent {p}; need p >= 1 or p = inf")]
    InvalidExponent { p: f64 },

    #[error("grid does not resolve unit frequency boxes: dxi = {dxi} > 1/8")]
    UnresolvedWindow { dxi: f64 },

    #[error("band index {index:?} outside the retained range |k|_inf <= {kmax}")]
    BandOutOfRange { index: [i64; 3], kmax: i64 },

    #[error("spectral mass fraction {fraction:.3e} outside retained bands exceeds {threshold:.3e}")]
    SpectralLeakage { fraction: f64, threshold: f64 },

    #[error("Riesz order alpha = {alpha} outside (0, n) for n = {n}")]
    AlphaOutOfRange { alpha: f64, n: usize },

    #[error("interpolation parameter theta = {theta} outside [0, 1]")]
    ThetaOutOfRange { theta: f64 },

    #[error("trajectory has no frames")]
    EmptyTrajectory,

    #[error("Picard iteration did not contract: {sweeps} sweeps, last ratio {last_ratio:.3e}")]
    NoConvergence {
        sweeps: usize,
        last_ratio: f64,
        ratios: Vec<f64>,
    },

    #[error("parameters violate the hypothesis of {inequality}: {detail}")]
    HypothesisViolated { inequality: String, detail: String },

    #[error("decay window t = {t} exceeds the torus horizon L/4 = {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("power-law fit needs >= 3 points with nonzero variance")]
    DegenerateFit,

    #[error("grid specs do not match: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModkgError>;
