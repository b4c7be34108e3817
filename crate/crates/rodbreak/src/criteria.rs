//! Wave-breaking criterion battery.
//!
//! Each predicate inspects an initial datum `u0` and reports a
//! [`CriterionVerdict`]: whether its preconditions hold, whether it fires, a
//! witness point (or pair) and a signed margin. The margin is the extremal
//! quantity the criterion compares against zero, so `triggered` is always
//! equivalent to `margin < 0`.
//!
//! The pointwise criterion (`brandolese`) fires when `u0' + beta_gamma |u0|`
//! is negative somewhere; it subsumes the slope criterion (`sobolev_slope`),
//! the potential sign-split criterion (`constantin_sign`), the weighted-tail
//! criterion (`zhou_2004`) and, in the integrable case, is implied by the
//! sign condition (`mckean`). For data satisfying it, [`blowup_bound`]
//! extracts the quantitative consequences: an upper bound for the breakdown
//! time and an interval that must contain the breakdown point.
//!
//! Infima over the line are taken as minima over grid nodes; peakon-flagged
//! data use their analytic one-sided slopes instead of grid derivatives.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, RodError};
use crate::field::{
    derivative, fft_forward, invariants_of, potential, sample_at, GridFunction,
};
use crate::params::{beta_extended, beta_of};

/// Location(s) at which a criterion is realised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Point(f64),
    Pair(f64, f64),
}

/// Outcome of one criterion evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    pub name: String,
    /// Preconditions of the criterion hold for this datum.
    pub applicable: bool,
    /// The criterion fires; implies `applicable` and `margin < 0`.
    pub triggered: bool,
    pub witness: Option<Witness>,
    /// Signed distance to the threshold; negative exactly when triggered.
    pub margin: f64,
}

impl CriterionVerdict {
    fn new(name: &str, applicable: bool, margin: f64, witness: Option<Witness>) -> Self {
        Self {
            name: name.to_string(),
            applicable,
            triggered: applicable && margin < 0.0,
            witness,
            margin,
        }
    }
}

fn min_with_arg(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for (v, x) in values {
        if v < best.0 {
            best = (v, x);
        }
    }
    (best.0, best.1)
}

/// H1 norm of the datum; peakon-flagged data use the closed form
/// `sqrt(2) |c|` of the peaked profile.
fn h1_norm_of(u0: &GridFunction) -> f64 {
    match u0.peak() {
        Some(meta) => 2.0f64.sqrt() * meta.amplitude.abs(),
        None => invariants_of(u0, 0.0).h1_norm,
    }
}

/// Pointwise local-in-space criterion: fires when `u0'(x0) < -beta_gamma
/// |u0(x0)|` for some `x0`; margin is the grid minimum of `u0' + beta |u0|`.
pub fn brandolese(u0: &GridFunction, gamma: f64) -> Result<CriterionVerdict> {
    let beta = beta_of(gamma)?;
    if let Some(meta) = u0.peak() {
        // One-sided slopes at the peak are -|c| on the decaying side, so the
        // infimum of u0' + beta |u0| is (beta - 1)|c|, approached at the peak.
        let margin = (beta - 1.0) * meta.amplitude.abs();
        return Ok(CriterionVerdict::new(
            "brandolese",
            true,
            margin,
            Some(Witness::Point(meta.center)),
        ));
    }
    let slope = derivative(u0);
    let grid = u0.grid();
    let (margin, witness) = min_with_arg(
        u0.values()
            .iter()
            .zip(slope.values())
            .enumerate()
            .map(|(j, (&u, &du))| (du + beta * u.abs(), grid.node(j))),
    );
    Ok(CriterionVerdict::new(
        "brandolese",
        true,
        margin,
        Some(Witness::Point(witness)),
    ))
}

/// Slope criterion `u0'(x0) < -(beta_gamma / sqrt 2) ||u0||_H1`, with the
/// coefficient formula extended to `gamma` in `(0, 4]`. At `gamma = 1` this
/// is exactly the classical `-||u0||_H1 / sqrt 2` threshold.
pub fn sobolev_slope(u0: &GridFunction, gamma: f64) -> Result<CriterionVerdict> {
    let beta = beta_extended(gamma)?;
    let h1 = h1_norm_of(u0);
    let (min_slope, witness) = match u0.peak() {
        Some(meta) => (-meta.amplitude.abs(), meta.center),
        None => {
            let slope = derivative(u0);
            let grid = u0.grid();
            min_with_arg(
                slope
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(j, &du)| (du, grid.node(j))),
            )
        }
    };
    let margin = min_slope + beta / 2.0f64.sqrt() * h1;
    Ok(CriterionVerdict::new(
        "sobolev_slope",
        true,
        margin,
        Some(Witness::Point(witness)),
    ))
}

fn smooth_potential(u0: &GridFunction) -> Result<GridFunction> {
    potential(u0).map_err(|_| {
        RodError::Precondition(
            "criterion needs a grid potential; peaked data carry a point-measure potential".into(),
        )
    })
}

/// Potential sign-split criterion: `y0 = u0 - u0''` changes sign and is
/// nonnegative left and nonpositive right of some `x0`.
pub fn constantin_sign(u0: &GridFunction) -> Result<CriterionVerdict> {
    let y = smooth_potential(u0)?;
    let v = y.values();
    let n = v.len();
    let tol = 1e-10 * y.linf();

    // prefix/suffix extrema: pref_*[j] summarise v[..j], suf_*[j] summarise v[j..]
    let mut pref_min = vec![0.0; n + 1];
    let mut pref_max = vec![0.0; n + 1];
    pref_min[0] = f64::INFINITY;
    pref_max[0] = f64::NEG_INFINITY;
    for j in 0..n {
        pref_min[j + 1] = pref_min[j].min(v[j]);
        pref_max[j + 1] = pref_max[j].max(v[j]);
    }
    let mut suf_min = vec![0.0; n + 1];
    let mut suf_max = vec![0.0; n + 1];
    suf_min[n] = f64::INFINITY;
    suf_max[n] = f64::NEG_INFINITY;
    for j in (0..n).rev() {
        suf_min[j] = suf_min[j + 1].min(v[j]);
        suf_max[j] = suf_max[j + 1].max(v[j]);
    }

    // split before node j: slack of the four requirements
    //   left >= -tol, left reaches > tol, right <= tol, right reaches < -tol
    let mut best = f64::NEG_INFINITY;
    let mut best_j = 1;
    for j in 1..n {
        let score = (pref_min[j] + tol)
            .min(pref_max[j] - tol)
            .min(tol - suf_max[j])
            .min(-suf_min[j] - tol);
        if score > best {
            best = score;
            best_j = j;
        }
    }
    let margin = -best;
    let grid = u0.grid();
    let witness = if margin < 0.0 {
        Some(Witness::Point(grid.node(best_j) - 0.5 * grid.spacing()))
    } else {
        None
    };
    Ok(CriterionVerdict::new(
        "constantin_sign",
        true,
        margin,
        witness,
    ))
}

/// The two weighted tail integrals of the trigonometric interpolant of `y`,
///
/// ```text
/// ( int_{-L/2}^{x1} exp(xi)  y(xi) dxi ,  int_{x1}^{L/2} exp(-xi) y(xi) dxi )
/// ```
///
/// evaluated mode by mode in closed form (exact for the interpolant).
pub fn weighted_tail_integrals(y: &GridFunction, x1: f64) -> (f64, f64) {
    let grid = y.grid();
    let n = grid.point_count();
    let l = grid.length();
    let spectrum = fft_forward(y);
    // shifted coordinate theta = x + L/2 in [0, L]
    let theta1 = x1 + 0.5 * l;
    let e_x1 = x1.exp();
    let e_neg_x1 = (-x1).exp();
    let e_neg_half = (-0.5 * l).exp();

    let mut left = Complex64::new(0.0, 0.0);
    let mut right = Complex64::new(0.0, 0.0);
    for k in 0..=n / 2 {
        let omega = 2.0 * std::f64::consts::PI * k as f64 / l;
        let phase = Complex64::from_polar(1.0, omega * theta1);
        // int_0^Theta exp((1 + i w) theta) dtheta, folded with exp(-L/2)
        let left_term = (phase * e_x1 - e_neg_half) / Complex64::new(1.0, omega);
        // int_Theta^L exp((-1 + i w) theta) dtheta, folded with exp(+L/2)
        let right_term = (Complex64::new(e_neg_half, 0.0) - phase * e_neg_x1)
            / Complex64::new(-1.0, omega);
        let weight = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
        if k == n / 2 {
            // Nyquist mode enters as a cosine: take the real part of the
            // closed-form integral against the real coefficient.
            left += Complex64::new(spectrum[k].re * left_term.re, 0.0) * weight;
            right += Complex64::new(spectrum[k].re * right_term.re, 0.0) * weight;
        } else {
            left += (spectrum[k] * left_term).scale(weight);
            right += (spectrum[k] * right_term).scale(weight);
        }
    }
    (left.re / n as f64, right.re / n as f64)
}

fn require_line_mode(u0: &GridFunction) -> Result<()> {
    let n = u0.grid().point_count();
    let edge = n / 10;
    let scale = u0.linf();
    let boundary = u0.values()[..edge]
        .iter()
        .chain(&u0.values()[n - edge..])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if boundary > 1e-6 * scale {
        return Err(RodError::Precondition(
            "weighted tail integrals need decaying (line-mode) data".into(),
        ));
    }
    Ok(())
}

/// Weighted-tail criterion: fires when the potential has a zero `x1` with
/// positive `exp(xi)`-weighted mass on the left and negative
/// `exp(-xi)`-weighted mass on the right.
pub fn zhou_2004(u0: &GridFunction) -> Result<CriterionVerdict> {
    let y = smooth_potential(u0)?;
    require_line_mode(u0)?;
    let v = y.values();
    let grid = u0.grid();
    let tol = 1e-10 * y.linf();

    // zero crossings of the significant sign of y
    let mut crossings = Vec::new();
    let mut last: Option<(usize, i8)> = None;
    for (j, &val) in v.iter().enumerate() {
        let sig: i8 = if val > tol {
            1
        } else if val < -tol {
            -1
        } else {
            0
        };
        if sig != 0 {
            if let Some((jp, sp)) = last {
                if sp != sig {
                    let (xa, ya) = (grid.node(jp), v[jp]);
                    let (xb, yb) = (grid.node(j), v[j]);
                    crossings.push(xa + (xb - xa) * ya / (ya - yb));
                }
            }
            last = Some((j, sig));
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for &x1 in &crossings {
        let (left, right) = weighted_tail_integrals(&y, x1);
        let score = left.min(-right);
        if score > best {
            best = score;
            witness = Some(Witness::Point(x1));
        }
    }
    let margin = if crossings.is_empty() { 0.0 } else { -best };
    let witness = if margin < 0.0 { witness } else { None };
    Ok(CriterionVerdict::new("zhou_2004", true, margin, witness))
}

/// Sign condition on the potential: some `x1 < x2` with `y0(x1) > 0 >
/// y0(x2)`. Necessary and sufficient in the integrable case.
pub fn mckean(u0: &GridFunction) -> Result<CriterionVerdict> {
    let y = smooth_potential(u0)?;
    let v = y.values();
    let grid = u0.grid();
    let tol = 1e-10 * y.linf();
    let mut best = f64::NEG_INFINITY;
    let mut best_pair = (0usize, 0usize);
    let mut pref_max = f64::NEG_INFINITY;
    let mut pref_idx = 0usize;
    for (j, &val) in v.iter().enumerate() {
        if j > 0 {
            let score = pref_max.min(-val);
            if score > best {
                best = score;
                best_pair = (pref_idx, j);
            }
        }
        if val > pref_max {
            pref_max = val;
            pref_idx = j;
        }
    }
    let margin = tol - best;
    let witness = if margin < 0.0 {
        Some(Witness::Pair(
            grid.node(best_pair.0),
            grid.node(best_pair.1),
        ))
    } else {
        None
    };
    Ok(CriterionVerdict::new("mckean", true, margin, witness))
}

/// Odd-datum criterion: `u0` odd with `u0'(0) < 0`. Applicable only when the
/// sampled datum is antisymmetric about the origin.
pub fn odd_chh(u0: &GridFunction) -> CriterionVerdict {
    let v = u0.values();
    let n = v.len();
    let scale = u0.linf();
    let asymmetry = (0..n)
        .map(|j| (v[j] + v[(n - j) % n]).abs())
        .fold(0.0f64, f64::max);
    let applicable = u0.peak().is_none() && asymmetry < 1e-8 * scale && scale > 0.0;
    let slope_at_zero = derivative(u0).values()[n / 2];
    CriterionVerdict::new(
        "odd_chh",
        applicable,
        slope_at_zero,
        if applicable {
            Some(Witness::Point(0.0))
        } else {
            None
        },
    )
}

/// Nonlocal slope criteria outside `[0, 3]`: for `gamma < 0` breaking needs a
/// large positive slope, for `gamma > 3` a large negative one, against the
/// threshold `sqrt((gamma - 3)/gamma) ||u0||_H1 / sqrt 2`.
pub fn nonlocal_extended(u0: &GridFunction, gamma: f64) -> Result<CriterionVerdict> {
    if (0.0..=3.0).contains(&gamma) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "(-inf, 0) or (3, inf) (nonlocal criterion)",
        });
    }
    let threshold = ((gamma - 3.0) / gamma).sqrt() / 2.0f64.sqrt() * h1_norm_of(u0);
    let grid = u0.grid();
    let (margin, witness) = if gamma < 0.0 {
        let (neg_max, x) = match u0.peak() {
            Some(meta) => (-meta.amplitude.abs(), meta.center),
            None => {
                let slope = derivative(u0);
                min_with_arg(
                    slope
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(j, &du)| (-du, grid.node(j))),
                )
            }
        };
        // fires when max u0' exceeds +threshold
        (threshold + neg_max, x)
    } else {
        let (min_slope, x) = match u0.peak() {
            Some(meta) => (-meta.amplitude.abs(), meta.center),
            None => {
                let slope = derivative(u0);
                min_with_arg(
                    slope
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(j, &du)| (du, grid.node(j))),
                )
            }
        };
        (min_slope + threshold, x)
    };
    Ok(CriterionVerdict::new(
        "nonlocal_extended",
        true,
        margin,
        Some(Witness::Point(witness)),
    ))
}

/// Quantitative consequences of the pointwise criterion at a witness `x0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupBound {
    pub x0: f64,
    /// Initial decay rate of the slope along the witness characteristic.
    pub alpha0: f64,
    /// Time after which the slope is guaranteed below `-||u0||_H1`.
    pub t0: f64,
    /// Upper bound for the breakdown time.
    #[serde(rename = "T_upper")]
    pub t_upper: f64,
    /// Half-width of the interval around `x0` containing the breakdown
    /// point: `gamma ||u0||_H1 T_upper / sqrt 2`.
    pub localization_halfwidth: f64,
}

/// Bound recipe on extracted scalars; used by [`blowup_bound`] and directly
/// testable against hand-computed cases.
pub fn bound_from_scalars(
    u_at_x0: f64,
    slope_at_x0: f64,
    h1_norm: f64,
    gamma: f64,
    x0: f64,
) -> Result<BlowupBound> {
    let beta = beta_of(gamma)?;
    if !(slope_at_x0 < -beta * u_at_x0.abs()) {
        return Err(RodError::Precondition(format!(
            "pointwise criterion does not hold at x0 = {x0}: u0' = {slope_at_x0}, beta |u0| = {}",
            beta * u_at_x0.abs()
        )));
    }
    let alpha0 = 0.5 * gamma * (slope_at_x0 * slope_at_x0 - beta * beta * u_at_x0 * u_at_x0);
    let t0 = if slope_at_x0 <= -h1_norm {
        0.0
    } else {
        (slope_at_x0 + h1_norm) / alpha0
    };
    let t_upper = t0 + 4.0 / (gamma * h1_norm.max(slope_at_x0.abs()));
    Ok(BlowupBound {
        x0,
        alpha0,
        t0,
        t_upper,
        localization_halfwidth: gamma * h1_norm * t_upper / 2.0f64.sqrt(),
    })
}

/// Blowup-time upper bound and localization interval for a datum satisfying
/// the pointwise criterion at `x0`.
pub fn blowup_bound(u0: &GridFunction, gamma: f64, x0: f64) -> Result<BlowupBound> {
    let (u_at, slope_at) = match u0.peak() {
        Some(meta) => {
            // analytic peaked profile: slope is one-sided at the peak and
            // the decaying branch is the breaking side
            let d = x0 - meta.center;
            let value = meta.amplitude * (-d.abs()).exp();
            let slope = if d == 0.0 {
                -meta.amplitude.abs()
            } else {
                -d.signum() * value
            };
            (value, slope)
        }
        None => (sample_at(u0, x0), sample_at(&derivative(u0), x0)),
    };
    bound_from_scalars(u_at, slope_at, h1_norm_of(u0), gamma, x0)
}

/// Runs every criterion whose parameter domain contains `gamma` and whose
/// preconditions hold for the datum. The sign-pattern criteria
/// (`constantin_sign`, `zhou_2004`, `mckean`, `odd_chh`) are specific to the
/// integrable case and only run at `gamma = 1`.
pub fn battery(u0: &GridFunction, gamma: f64) -> Vec<CriterionVerdict> {
    let mut out = Vec::new();
    if (1.0..=4.0).contains(&gamma) {
        if let Ok(v) = brandolese(u0, gamma) {
            out.push(v);
        }
    }
    if gamma > 0.0 && gamma <= 4.0 {
        if let Ok(v) = sobolev_slope(u0, gamma) {
            out.push(v);
        }
    }
    if gamma == 1.0 {
        if let Ok(v) = constantin_sign(u0) {
            out.push(v);
        }
        if let Ok(v) = zhou_2004(u0) {
            out.push(v);
        }
        if let Ok(v) = mckean(u0) {
            out.push(v);
        }
        out.push(odd_chh(u0));
    }
    if gamma < 0.0 || gamma > 3.0 {
        if let Ok(v) = nonlocal_extended(u0, gamma) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::profiles::{from_potential, gaussian, odd_sine, peakon};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line_grid() -> Grid {
        Grid::new(40.0, 1024).unwrap()
    }

    #[test]
    fn brandolese_peakon_sits_on_the_boundary() {
        let g = Grid::new(80.0, 2048).unwrap();
        let u0 = peakon(1.0, 0.0, g).unwrap();
        let v = brandolese(&u0, 1.0).unwrap();
        assert!(!v.triggered);
        assert_abs_diff_eq!(v.margin, 0.0, epsilon = 1e-14);
        // at gamma = 3 (beta = 0) the same profile fires
        let v = brandolese(&u0, 3.0).unwrap();
        assert!(v.triggered);
        assert_abs_diff_eq!(v.margin, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn brandolese_minus_sine_witness_at_origin() {
        let g = Grid::new(2.0 * PI, 256).unwrap();
        let u0 = odd_sine(-1.0, 1, g).unwrap();
        let v = brandolese(&u0, 1.0).unwrap();
        assert!(v.triggered);
        assert_abs_diff_eq!(v.margin, -1.0, epsilon = 1e-12);
        match v.witness.unwrap() {
            Witness::Point(x) => assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12),
            _ => panic!("expected point witness"),
        }
    }

    #[test]
    fn brandolese_gaussian_margin_closed_form() {
        // min of (1 - 2x) exp(-x^2) is -exp(-1) at x = 1, which is a grid
        // node for L = 16, N = 4096.
        let g = Grid::new(16.0, 4096).unwrap();
        let u0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let v = brandolese(&u0, 1.0).unwrap();
        assert!(v.triggered);
        assert_abs_diff_eq!(v.margin, -(-1.0f64).exp(), epsilon = 1e-9);
        match v.witness.unwrap() {
            Witness::Point(x) => assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12),
            _ => panic!("expected point witness"),
        }
    }

    #[test]
    fn brandolese_margin_translation_and_reflection_invariant() {
        let g = line_grid();
        let u0 = gaussian(0.8, -2.0, 1.3, g).unwrap();
        let v = brandolese(&u0, 1.5).unwrap();

        // translate by an integer number of nodes
        let shift = 37;
        let n = g.point_count();
        let shifted: Vec<f64> = (0..n)
            .map(|j| u0.values()[(j + n - shift) % n])
            .collect();
        let us = GridFunction::new(g, shifted).unwrap();
        let vs = brandolese(&us, 1.5).unwrap();
        assert_abs_diff_eq!(v.margin, vs.margin, epsilon = 1e-12);

        // the mirror symmetry of the equation: u -> -u(-x), witness -> -witness
        let reflected: Vec<f64> = (0..n).map(|j| -u0.values()[(n - j) % n]).collect();
        let ur = GridFunction::new(g, reflected).unwrap();
        let vr = brandolese(&ur, 1.5).unwrap();
        assert_abs_diff_eq!(v.margin, vr.margin, epsilon = 1e-12);
        let (Witness::Point(x), Witness::Point(xr)) = (v.witness.unwrap(), vr.witness.unwrap())
        else {
            panic!("expected point witnesses");
        };
        assert_abs_diff_eq!(x, -xr, epsilon = 1e-9);
    }

    #[test]
    fn sobolev_slope_reduces_to_classical_threshold_at_gamma_one() {
        let g = Grid::new(16.0, 4096).unwrap();
        let u0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let v = sobolev_slope(&u0, 1.0).unwrap();
        // min slope -sqrt(2) exp(-1/2); threshold ||u0||_H1 / sqrt(2)
        let expected = -(2.0f64.sqrt()) * (-0.5f64).exp()
            + (2.0 * (PI / 2.0).sqrt()).sqrt() / 2.0f64.sqrt();
        assert!(!v.triggered);
        assert_abs_diff_eq!(v.margin, expected, epsilon = 1e-4);
        assert_abs_diff_eq!(v.margin, 0.261_750_874_220_934_8, epsilon = 1e-4);
        // the same datum does fire the pointwise criterion
        assert!(brandolese(&u0, 1.0).unwrap().triggered);
    }

    #[test]
    fn sobolev_slope_verdict_is_scale_invariant() {
        let g = line_grid();
        let u0 = gaussian(1.0, 1.0, 0.8, g).unwrap();
        for gamma in [0.5, 1.0, 2.5] {
            let v1 = sobolev_slope(&u0, gamma).unwrap();
            let scaled = GridFunction::new(g, u0.values().iter().map(|v| 3.7 * v).collect())
                .unwrap();
            let v2 = sobolev_slope(&scaled, gamma).unwrap();
            assert_eq!(v1.triggered, v2.triggered);
            assert_abs_diff_eq!(v2.margin, 3.7 * v1.margin, epsilon = 1e-9);
        }
    }

    #[test]
    fn constantin_sign_examples() {
        let g = line_grid();
        // one-signed potential: no trigger
        let y_pos = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let u = from_potential(&y_pos);
        assert!(!constantin_sign(&u).unwrap().triggered);

        // odd potential -x exp(-x^2): positive left, negative right
        let y_odd = GridFunction::from_fn(g, |x| -x * (-x * x).exp()).unwrap();
        let u = from_potential(&y_odd);
        let v = constantin_sign(&u).unwrap();
        assert!(v.triggered);
        match v.witness.unwrap() {
            Witness::Point(x) => assert!(x.abs() <= 2.0 * g.spacing()),
            _ => panic!("expected point witness"),
        }

        // reversed order: negative bump left, positive bump right
        let y_rev = GridFunction::from_fn(g, |x| {
            (-(x - 1.0) * (x - 1.0)).exp() - (-(x + 1.0) * (x + 1.0)).exp()
        })
        .unwrap();
        let u = from_potential(&y_rev);
        assert!(!constantin_sign(&u).unwrap().triggered);
    }

    #[test]
    fn criteria_reject_peaked_data() {
        let g = Grid::new(80.0, 1024).unwrap();
        let u0 = peakon(1.0, 0.0, g).unwrap();
        assert!(constantin_sign(&u0).is_err());
        assert!(zhou_2004(&u0).is_err());
        assert!(mckean(&u0).is_err());
    }

    #[test]
    fn zhou_triggers_on_odd_potential() {
        let g = Grid::new(40.0, 2048).unwrap();
        let y0 = GridFunction::from_fn(g, |x| -x * (-x * x).exp()).unwrap();
        let u0 = from_potential(&y0);
        let v = zhou_2004(&u0).unwrap();
        assert!(v.triggered);
        match v.witness.unwrap() {
            Witness::Point(x1) => assert!(x1.abs() < 2.0 * g.spacing()),
            _ => panic!("expected point witness"),
        }

        // nonnegative potential never fires
        let y_pos = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let u = from_potential(&y_pos);
        assert!(!zhou_2004(&u).unwrap().triggered);
    }

    #[test]
    fn zhou_rejects_torus_data() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let u0 = odd_sine(-1.0, 1, g).unwrap();
        assert!(matches!(zhou_2004(&u0), Err(RodError::Precondition(_))));
    }

    #[test]
    fn weighted_integrals_match_integration_by_parts_identities() {
        // At a zero x1 of y0, the weighted tails equal e^{x1}(u0 - u0')(x1)
        // and e^{-x1}(u0 + u0')(x1).
        let g = Grid::new(40.0, 2048).unwrap();
        let y0 = GridFunction::from_fn(g, |x| -x * (-x * x).exp()).unwrap();
        let u0 = from_potential(&y0);
        let du0 = derivative(&u0);
        let x1 = 0.0;
        let (left, right) = weighted_tail_integrals(&y0, x1);
        let id_left = x1.exp() * (sample_at(&u0, x1) - sample_at(&du0, x1));
        let id_right = (-x1).exp() * (sample_at(&u0, x1) + sample_at(&du0, x1));
        assert_abs_diff_eq!(left, id_left, epsilon = 1e-8);
        assert_abs_diff_eq!(right, id_right, epsilon = 1e-8);
    }

    #[test]
    fn mckean_examples() {
        let g = line_grid();
        let y_odd = GridFunction::from_fn(g, |x| -x * (-x * x).exp()).unwrap();
        let u = from_potential(&y_odd);
        let v = mckean(&u).unwrap();
        assert!(v.triggered);
        let Witness::Pair(x1, x2) = v.witness.unwrap() else {
            panic!("expected pair witness");
        };
        assert!(x1 < 0.0 && x2 > 0.0);

        let y_pos = gaussian(1.0, 0.0, 1.0, g).unwrap();
        assert!(!mckean(&from_potential(&y_pos)).unwrap().triggered);

        // u0 = exp(-x^2): potential (3 - 4x^2) exp(-x^2), positive at 0,
        // most negative at x = sqrt(7/2) ~ 1.32
        let u0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let v = mckean(&u0).unwrap();
        assert!(v.triggered);
        let Witness::Pair(x1, x2) = v.witness.unwrap() else {
            panic!("expected pair witness");
        };
        assert_abs_diff_eq!(x1, 0.0, epsilon = 2.0 * g.spacing());
        assert!(x2 > 0.866, "negative witness at {x2}");
        let y = potential(&u0).unwrap();
        assert!(sample_at(&y, x2) < 0.0);
    }

    #[test]
    fn odd_chh_examples() {
        let g = Grid::new(2.0 * PI, 128).unwrap();
        let minus_sine = odd_sine(-1.0, 1, g).unwrap();
        let v = odd_chh(&minus_sine);
        assert!(v.applicable && v.triggered);
        assert_abs_diff_eq!(v.margin, -1.0, epsilon = 1e-12);

        let plus_sine = odd_sine(1.0, 1, g).unwrap();
        let v = odd_chh(&plus_sine);
        assert!(v.applicable && !v.triggered);
        assert_abs_diff_eq!(v.margin, 1.0, epsilon = 1e-12);

        let even = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let v = odd_chh(&even);
        assert!(!v.applicable && !v.triggered);
    }

    #[test]
    fn nonlocal_constants() {
        let g = line_grid();
        let u0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let h1 = invariants_of(&u0, 0.0).h1_norm;
        let slope = derivative(&u0);
        let max_slope = slope.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_slope = slope.values().iter().cloned().fold(f64::INFINITY, f64::min);

        // gamma = -1: threshold constant sqrt(2)
        let v = nonlocal_extended(&u0, -1.0).unwrap();
        assert_abs_diff_eq!(v.margin, 2.0f64.sqrt() * h1 - max_slope, epsilon = 1e-12);

        // gamma = 6: threshold constant 1/2
        let v = nonlocal_extended(&u0, 6.0).unwrap();
        assert_abs_diff_eq!(v.margin, min_slope + 0.5 * h1, epsilon = 1e-12);

        // gamma = 4: coincides with the slope criterion
        let v = nonlocal_extended(&u0, 4.0).unwrap();
        let s = sobolev_slope(&u0, 4.0).unwrap();
        assert_abs_diff_eq!(v.margin, s.margin, epsilon = 1e-12);

        assert!(nonlocal_extended(&u0, 2.0).is_err());
        assert!(nonlocal_extended(&u0, 0.0).is_err());
        assert!(nonlocal_extended(&u0, 3.0).is_err());
    }

    #[test]
    fn bound_recipe_reference_cases() {
        // steep case: t0 = 0, T = 2
        let b = bound_from_scalars(0.0, -2.0, 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(b.alpha0, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.t0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.t_upper, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            b.localization_halfwidth,
            2.0 / 2.0f64.sqrt(),
            epsilon = 1e-14
        );

        // shallow case: t0 = 4, T = 8
        let b = bound_from_scalars(0.0, -0.5, 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(b.alpha0, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(b.t0, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.t_upper, 8.0, epsilon = 1e-15);

        // criterion not met
        assert!(bound_from_scalars(1.0, -0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gamma_three_fires_on_any_nonzero_decaying_datum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(60.0, 1024).unwrap();
        for _ in 0..20 {
            let a: f64 = rng.random_range(0.2..1.5);
            let c: f64 = rng.random_range(-6.0..6.0);
            let w: f64 = rng.random_range(0.5..2.5);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let u0 = gaussian(sign * a, c, w, g).unwrap();
            assert!(brandolese(&u0, 3.0).unwrap().triggered);
        }
    }

    #[test]
    fn battery_contents_depend_on_gamma() {
        let g = line_grid();
        let u0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let names = |gamma: f64| -> Vec<String> {
            battery(&u0, gamma).into_iter().map(|v| v.name).collect()
        };
        assert_eq!(
            names(1.0),
            vec![
                "brandolese",
                "sobolev_slope",
                "constantin_sign",
                "zhou_2004",
                "mckean",
                "odd_chh"
            ]
        );
        assert_eq!(names(2.0), vec!["brandolese", "sobolev_slope"]);
        assert_eq!(
            names(4.0),
            vec!["brandolese", "sobolev_slope", "nonlocal_extended"]
        );
        assert_eq!(names(-1.0), vec!["nonlocal_extended"]);
        assert_eq!(names(0.5), vec!["sobolev_slope"]);
    }

    #[test]
    fn verdict_serializes_to_flat_json() {
        let v = CriterionVerdict::new("mckean", true, -0.5, Some(Witness::Pair(-1.0, 1.0)));
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["name"], "mckean");
        assert_eq!(json["triggered"], true);
        assert_eq!(json["witness"], serde_json::json!([-1.0, 1.0]));
        let v = CriterionVerdict::new("brandolese", true, -0.3, Some(Witness::Point(1.0)));
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["witness"], serde_json::json!(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn bound_shrinks_with_steeper_slope(
            slope in -8.0f64..-1.5,
            steeper in 0.1f64..4.0,
            u_at in -0.5f64..0.5,
            gamma in 1.0f64..4.0,
        ) {
            let b1 = bound_from_scalars(u_at, slope, 1.0, gamma, 0.0).unwrap();
            let b2 = bound_from_scalars(u_at, slope - steeper, 1.0, gamma, 0.0).unwrap();
            prop_assert!(b2.t_upper <= b1.t_upper + 1e-12);
        }
    }
}
