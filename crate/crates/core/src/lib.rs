//! Pseudospectral simulation of the spatially periodic two-phase Muskat
//! problem in contour-integral form.
//!
//! The interface is the graph `y = f(t, x)` of a `2pi`-periodic function.
//! [`operators`] evaluates the nonlocal right-hand side both directly and
//! through its quasilinear decomposition, [`evolution`] integrates it in
//! time, [`flow`] rebuilds velocity and pressure off the interface, and
//! [`analysis`] provides the linearized spectrum and frozen-coefficient
//! localization diagnostics.

pub mod analysis;
pub mod error;
pub mod evolution;
mod fft;
pub mod field;
pub mod flow;
pub mod grid;
pub mod kernels;
pub mod operators;
mod parallel;
pub mod quadrature;
pub mod special;

pub use error::{MuskatError, Result};
pub use field::{trig_mode, SobolevIndex, SpectralField};
pub use grid::Grid;
pub use quadrature::{pv_integral, QuadratureRule, SingularityHandling};
pub use operators::{OperatorWorkspace, PhysicalParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
