use thiserror::Error;

/// Errors produced anywhere in the generation and analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice is degenerate or left-handed (det = {det})")]
    DegenerateLattice { det: f64 },

    #[error("element index {index} out of range for a table of {len} elements")]
    InvalidElement { index: usize, len: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid element table: {0}")]
    InvalidTable(String),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("soft-charge gradient vanished (|grad|^2 = {norm_sq:e}) with residual charge {charge}")]
    VanishingGradient { charge: i64, norm_sq: f64 },

    #[error(
        "no zero-charge assignment is reachable (residual {residual}, nearest achievable total charge {nearest})"
    )]
    InfeasibleRepair { residual: i64, nearest: i64 },

    #[error("cutoff {r_cut} exceeds half the smallest cell width ({half_width})")]
    CutoffExceedsCell { r_cut: f64, half_width: f64 },

    #[error("range {r_max} exceeds half the smallest cell width ({half_width})")]
    RangeExceedsCell { r_max: f64, half_width: f64 },

    #[error("weight mismatch at `{path}`: {reason}")]
    WeightMismatch { path: String, reason: String },

    #[error("sample is in the wrong element state: expected {expected}")]
    WrongElementState { expected: &'static str },

    #[error("no covalent radius for element `{0}`")]
    MissingRadius(String),

    #[error("structure has no non-ghost atoms")]
    EmptyStructure,

    #[error("zero target value at index {0}; MAPE is undefined")]
    ZeroTarget(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bad magic bytes in weight container")]
    BadMagic,

    #[error("weight container truncated while reading {0}")]
    Truncated(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
