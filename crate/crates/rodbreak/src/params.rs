//! Model constants of the hyperelastic rod equation.
//!
//! Everything in this module is a function of the single parameter `gamma`
//! multiplying the nonlinear dispersive terms. The three derived quantities
//! are
//!
//! ```text
//! delta(gamma) = (sqrt(gamma)/4) (sqrt(12 - 3 gamma) - sqrt(gamma))     gamma in [0, 4]
//! a(gamma)     = largest root of a^2 + a = (3 - gamma)/gamma            gamma in (0, 4]
//! beta(gamma)  = (-1/2 + 3/gamma - sqrt(12 - 3 gamma)/(2 sqrt(gamma)))^(1/2)
//! ```
//!
//! and they are tied together by `gamma * a = 2 * delta` and `beta = |a|`.
//! All three are evaluated through the variable `s = 12/gamma - 3`, which
//! turns them into `a = (sqrt(s) - 1)/2`, `beta = |sqrt(s) - 1|/2` and keeps
//! them exact near the zero of `beta` at `gamma = 3` (where the radical form
//! would cancel catastrophically).

use crate::error::{Result, RodError};

fn s_of(gamma: f64) -> f64 {
    // s = 12/gamma - 3 >= 0 for gamma in (0, 4]; clamp rounding noise at gamma = 4.
    (12.0 / gamma - 3.0).max(0.0)
}

/// Constant of the convolution lower bound `(p +- beta p') * nl >= delta u^2`.
///
/// Defined for `gamma` in `[0, 4]`; negative for `gamma > 3`.
pub fn delta_of(gamma: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&gamma) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "[0, 4] (delta)",
        });
    }
    let g = gamma.sqrt();
    Ok(g / 4.0 * ((12.0 - 3.0 * gamma).max(0.0).sqrt() - g))
}

/// Coefficient of the local-in-space breakdown criterion, defined for
/// `gamma` in `[1, 4]` where it lies in `[0, 1]`.
///
/// `beta(1) = 1`, `beta(3) = 0`, `beta(4) = 1/2`; strictly decreasing on
/// `[1, 3]` and strictly increasing on `[3, 4]`.
pub fn beta_of(gamma: f64) -> Result<f64> {
    if !(1.0..=4.0).contains(&gamma) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "[1, 4] (beta)",
        });
    }
    Ok((s_of(gamma).sqrt() - 1.0).abs() / 2.0)
}

/// The same expression as [`beta_of`] extended to `(0, 4]`.
///
/// For `gamma < 1` the value exceeds 1, which puts it outside the range where
/// the pointwise criterion applies; it is still the constant entering the
/// slope criterion `u0'(x0) < -(beta/sqrt 2) ||u0||_H1`.
pub fn beta_extended(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 4.0) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "(0, 4] (extended beta)",
        });
    }
    Ok((s_of(gamma).sqrt() - 1.0).abs() / 2.0)
}

/// Largest real root of `a^2 + a = (3 - gamma)/gamma`.
///
/// Satisfies `gamma * a = 2 * delta(gamma)`; the root is negative for
/// `gamma > 3` and the discriminant becomes negative past `gamma = 4`.
pub fn extremal_root_of(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 4.0) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "(0, 4] (extremal root)",
        });
    }
    Ok((s_of(gamma).sqrt() - 1.0) / 2.0)
}

/// Bundle of the gamma-dependent constants for one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodParameters {
    pub gamma: f64,
    pub delta: f64,
    /// Present exactly when `gamma` lies in `[1, 4]`.
    pub beta: Option<f64>,
    pub extremal_root: f64,
}

impl RodParameters {
    /// Builds the constant set for `gamma` in `(0, 4]`.
    pub fn new(gamma: f64) -> Result<Self> {
        let delta = delta_of(gamma)?;
        let extremal_root = extremal_root_of(gamma)?;
        let beta = if (1.0..=4.0).contains(&gamma) {
            Some(beta_of(gamma)?)
        } else {
            None
        };
        Ok(Self {
            gamma,
            delta,
            beta,
            extremal_root,
        })
    }
}
