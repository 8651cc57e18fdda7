//! Error type shared by all numerical modules.

use thiserror::Error;

/// Errors produced by grid construction, weight evaluation, cut-off
/// assembly, time integration, and diagnostics.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: spatial dimension must be >= 1")]
    InvalidDimension { dim: usize },

    #[error("degenerate radial interval: r_max = {r_max} must exceed r_obstacle = {r_obstacle}")]
    DegenerateInterval { r_obstacle: f64, r_max: f64 },

    #[error("too few cells: got {cells}, need at least {min}")]
    TooFewCells { cells: usize, min: usize },

    #[error("grid/field mismatch: field has {field_len} values, grid has {grid_len} nodes")]
    GridMismatch { field_len: usize, grid_len: usize },

    #[error("invalid obstacle radius {r0} for dimension {dim}")]
    InvalidObstacle { dim: usize, r0: f64 },

    #[error("dimension/domain mismatch: weight has (dim {weight_dim}, r0 {weight_r0}), grid has (dim {grid_dim}, r0 {grid_r0})")]
    DomainMismatch {
        weight_dim: usize,
        weight_r0: f64,
        grid_dim: usize,
        grid_r0: f64,
    },

    #[error("radius {r} outside weight domain [{r0}, inf)")]
    OutOfDomainRadius { r: f64, r0: f64 },

    #[error("out of domain: {what}")]
    OutOfDomain { what: String },

    #[error("cut-off exponent underflow: {detail} (powers ell, k too small for p' = {p_conj})")]
    ExponentUnderflow { detail: String, p_conj: f64 },

    #[error("initial data negativity violation: min value {min} at r = {r}")]
    NegativeData { min: f64, r: f64 },

    #[error("initial data boundary mismatch: |{which}({r})| = {value} must vanish at the obstacle node")]
    BoundaryMismatch { which: &'static str, r: f64, value: f64 },

    #[error("linear solve failure at step time {time}: {detail}")]
    LinearSolveFailure { time: f64, detail: String },

    #[error("non-finite field values at time {time}")]
    NonFinite { time: f64 },

    #[error("trajectory horizon {horizon} does not cover requested window [0, {requested}]")]
    HorizonExceeded { horizon: f64, requested: f64 },

    #[error("solution blew up at t = {t_blowup} inside the diagnostic window [0, {window}]")]
    BlowUpInsideWindow { t_blowup: f64, window: f64 },

    #[error("insufficient points: got {got}, need at least {min}")]
    InsufficientPoints { got: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
