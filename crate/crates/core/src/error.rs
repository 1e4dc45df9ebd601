use thiserror::Error;

use crate::expr::{EvalError, SyntaxError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lapse is not positive: beta({t}, {x}) = {value}")]
    NonPositiveLapse { t: f64, x: f64, value: f64 },
    #[error("spatial scale is not positive: a({t}, {x}) = {value}")]
    NonPositiveScale { t: f64, x: f64, value: f64 },
    #[error("bad guard region: {0}")]
    BadGuardRegion(String),
    #[error("cannot parse expression for {field}: {source}")]
    ExpressionParse { field: String, source: SyntaxError },
    #[error("cannot evaluate {field}: {source}")]
    Evaluation { field: String, source: EvalError },
    #[error("characteristic surface leaves the time range at x = {x} (sigma = {sigma})")]
    SurfaceLeavesDomain { x: f64, sigma: f64 },
    #[error("time grid too coarse: {nt} samples, need at least {required}")]
    GridTooCoarseInTime { nt: usize, required: usize },
    #[error("time step {dt} exceeds the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("boosted slice is not spacelike for velocity {w}")]
    SliceNotSpacelike { w: f64 },
    #[error("support escapes the box: {0}")]
    SupportEscapesBox(String),
    #[error("no Gronwall constant up to {c_max} makes the estimate hold")]
    NoConstantFound { c_max: f64 },
    #[error("surface node x = {x} at t = {t} lies outside the solution's time range")]
    SurfaceOutsideSolution { t: f64, x: f64 },
    #[error("lift width {delta_lift} reaches the auxiliary slice offset {offset}")]
    LiftTooWide { delta_lift: f64, offset: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
