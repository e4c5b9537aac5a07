//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building or running a simulation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("degenerate denominator: Omega_c = 0, delta_e = 0 and gamma_e = 0 leave the susceptibility undefined")]
    DegenerateDenominator,

    #[error("control field is zero; group velocity limit is 0")]
    ZeroControlField,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("medium layers {first} and {second} overlap or are out of order")]
    LayerOverlap { first: String, second: String },

    #[error("modulation protocol invalid: {0}")]
    Protocol(String),

    #[error("pulse overlaps a medium layer: {0}")]
    PulseOverlapsMedium(String),

    #[error("time step {dt} violates the stability bound {bound} ({context})")]
    CflViolation { dt: f64, bound: f64, context: String },

    #[error("NaN detected at step {step} (t = {t}); diagnostic snapshot available")]
    NumericalFailure { step: usize, t: f64 },

    #[error("intensity went negative ({value}) at cell {cell}")]
    NegativeIntensity { cell: usize, value: f64 },

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("transmission scan did not converge: {0}")]
    NonConverged(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("peak detection ambiguous: {n} candidates within 10% of the maximum")]
    PeakAmbiguous { n: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
