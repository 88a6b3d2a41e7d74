use thiserror::Error;

/// Errors surfaced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or otherwise out-of-domain numeric input.
    #[error("domain error: {0}")]
    Domain(String),

    /// A particle sits within the bump radius of the periodic boundary, so a
    /// deposited source would wrap around.
    #[error("particle at {position:?} is within bump radius {radius} of the periodic boundary (half-width {half_width})")]
    SourceWrapAround {
        position: Vec<f64>,
        radius: f64,
        half_width: f64,
    },

    /// Two grids with different geometry were combined.
    #[error("grid geometry mismatch: {0}")]
    GridMismatch(String),

    /// A runtime invariant backed by a theorem was violated beyond its slack.
    /// Signals integrator misconfiguration (e.g. too-large dt), not model
    /// failure; the run aborts with this diagnostic.
    #[error("invariant violated at t={t}: {name} = {value} exceeds bound {bound}")]
    InvariantViolated {
        name: &'static str,
        t: f64,
        value: f64,
        bound: f64,
    },

    /// Transport instance rejected (size mismatch, marginals, ...).
    #[error("transport error: {0}")]
    Transport(String),

    /// Exhaustive oracle asked to solve an instance beyond its size cap.
    #[error("instance too large for exhaustive search: {atoms} atoms per side (cap {cap})")]
    OracleTooLarge { atoms: usize, cap: usize },

    /// CFL condition violated in the finite-volume stepper.
    #[error("CFL violation: dt*max|u|/h = {number} > {limit}")]
    CflViolation { number: f64, limit: f64 },

    /// Negative density below the roundoff allowance.
    #[error("negative density {value} in cell {cell}")]
    NegativeDensity { value: f64, cell: usize },

    /// Crossing indicator tripped: the monokinetic ansatz left its regime.
    #[error("velocity crossing detected at t={t}: max|du/dx| = {slope} exceeds {limit}")]
    CrossingDetected { t: f64, slope: f64, limit: f64 },

    /// Configuration file problems, each with a distinct code.
    #[error("config error [{code}]: {message}")]
    Config { code: ConfigCode, message: String },

    /// Experiment preconditions (quadrature floor, row counts, ...).
    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("duhamel oracle: history does not cover t={t} (covered up to {covered})")]
    HistoryTooShort { t: f64, covered: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Distinct error codes for configuration failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigCode {
    UnknownKey,
    MissingKey,
    BadValue,
    BoxTooSmall,
}

impl std::fmt::Display for ConfigCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConfigCode::UnknownKey => "unknown-key",
            ConfigCode::MissingKey => "missing-key",
            ConfigCode::BadValue => "bad-value",
            ConfigCode::BoxTooSmall => "box-too-small",
        };
        f.write_str(s)
    }
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(code: ConfigCode, msg: impl Into<String>) -> Self {
        Error::Config {
            code,
            message: msg.into(),
        }
    }
}
