//! Numerical laboratory for wave breaking in the hyperelastic rod /
//! Camassa-Holm equation family
//!
//! ```text
//! u_t + gamma u u_x = -d/dx p * ( (3 - gamma)/2 u^2 + gamma/2 u_x^2 ),
//! p(x) = exp(-|x|)/2.
//! ```
//!
//! The crate provides, at desk scale:
//!
//! * [`params`] - the gamma-dependent constants of the breakdown criteria;
//! * [`field`] - periodic spectral calculus: derivatives, the Helmholtz
//!   inverse, Green-kernel convolution, norms and invariants;
//! * [`profiles`] - initial-data generators (peakons, Gaussians, extremal
//!   exponentials, smooth solitary waves, data built from a potential);
//! * [`criteria`] - the wave-breaking criterion battery with witnesses,
//!   margins, blowup-time upper bounds and localization intervals;
//! * [`solver`] - pseudospectral RK4 time evolution with invariant
//!   monitoring and slope-based breakdown detection;
//! * [`characteristics`] - flow-map tracing, the Lyapunov pair `A`/`B`,
//!   the Riccati envelope and the flow-map potential identities;
//! * [`cli`] - the batch front end behind the `rodbreak` binary.

pub mod characteristics;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod expr;
pub mod field;
pub mod params;
pub mod profiles;
pub mod solver;

pub use error::{Result, RodError};
