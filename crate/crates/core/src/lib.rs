//! Linear hyperbolic systems on a two-dimensional globally hyperbolic
//! spacetime `ℝ × Σ` with metric `-β dt² + a² dx²`.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cauchy;
pub mod energy;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod goursat;
pub mod greens;
pub mod grid;
pub mod operators;
pub mod sections;
pub mod sobolev;
pub mod spectral;
pub mod stencil;

pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{SpacetimeFunction, TimeGrid};
pub use geometry::{make_spacetime, Spacetime1D, SpacetimeConfig};
pub use grid::GridFunction;
pub use operators::WaveOperatorSpec;
