use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("level {level} exceeds the cap of {cap}")]
    LevelCap { level: u32, cap: u32 },

    #[error("shift of ({x}, {y}) along e{dir} leaves the working lattice")]
    OutOfDomain { x: i64, y: i64, dir: u8 },

    #[error("invalid directed state: ({x}, {y}) has no outgoing direction e{dir}")]
    InvalidState { x: i64, y: i64, dir: u8 },

    #[error("singular factor {factor} (condition estimate {cond:.3e})")]
    Singular { factor: &'static str, cond: f64 },

    #[error("{excluded} of {total} quadrature nodes excluded, above the reliability limit")]
    QuadratureReliability { excluded: usize, total: usize },

    #[error("fit needs at least 3 usable points, got {points}")]
    Fit { points: usize },

    #[error("entropy undefined: p_n = 0 where p_inf = {p_inf} at {entry}")]
    EntropyDomain { entry: String, p_inf: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, WalkError>;
