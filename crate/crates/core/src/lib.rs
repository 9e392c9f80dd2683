//! Local limit approximations for bounded-step random walks on Z^d.
//!
//! * [`measure`]: step distributions, moments, covariance, support hull,
//!   maximality and aperiodicity.
//! * [`oracle`]: exact n-step distributions by convolution and by Fourier
//!   inversion.
//! * [`edgeworth`]: cumulants, Hermite factors and the order-n⁻¹ Edgeworth
//!   approximants.
//! * [`tilt`]: exponential tilting, the rate function and Gaussian tail
//!   bounds.
//! * [`harness`]: error sweeps, slope fits and reports.

pub mod edgeworth;
pub mod error;
pub mod harness;
pub mod measure;
pub mod oracle;
pub mod par;
pub mod tilt;

pub use error::{LcltError, Result};
