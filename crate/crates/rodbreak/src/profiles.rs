//! Initial-data generators.
//!
//! Every special profile used by the criteria and the solver is built here:
//! peaked solitons, Gaussians, the exponentials that saturate the convolution
//! lower bound, data reconstructed from a prescribed potential, and the
//! smooth solitary waves that exist for `0 < gamma < 1`.

use crate::error::{Result, RodError};
use crate::field::{green_convolve, Grid, GridFunction, PeakonMeta};
use crate::params::extremal_root_of;

/// Periodisation of `exp(-r |x|)` over period `L`, evaluated at wrapped
/// distance `d`: `cosh(r (L/2 - |d|)) / sinh(r L / 2)`.
fn periodized_exponential(rate: f64, l: f64, d: f64) -> f64 {
    let d = (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
    (rate * (0.5 * l - d.abs())).cosh() / (rate * 0.5 * l).sinh()
}

/// Peaked soliton `c exp(-|x - x0|)`, periodised, carrying the nonsmooth-peak
/// marker so that the solver and the grid potential refuse it.
pub fn peakon(c: f64, x0: f64, grid: Grid) -> Result<GridFunction> {
    if !(c.is_finite() && x0.is_finite()) {
        return Err(RodError::Config("peakon parameters must be finite".into()));
    }
    let l = grid.length();
    let f = GridFunction::from_fn(grid, |x| c * periodized_exponential(1.0, l, x - x0))?;
    Ok(f.with_peak(PeakonMeta {
        center: x0,
        amplitude: c,
    }))
}

/// Gaussian bump `c exp(-((x - x0)/w)^2)`, periodised.
pub fn gaussian(c: f64, x0: f64, w: f64, grid: Grid) -> Result<GridFunction> {
    if !(w.is_finite() && w > 0.0) {
        return Err(RodError::Domain {
            name: "width",
            value: w,
            valid: "(0, inf)",
        });
    }
    if !(c.is_finite() && x0.is_finite()) {
        return Err(RodError::Config("gaussian parameters must be finite".into()));
    }
    let l = grid.length();
    GridFunction::from_fn(grid, |x| {
        (-3..=3)
            .map(|m| {
                let d = (x - x0 + m as f64 * l) / w;
                c * (-d * d).exp()
            })
            .sum()
    })
}

/// Odd sine datum `a sin(2 pi k x / L)`; on the `2 pi` torus with `k = 1`
/// this is `a sin(x)`.
pub fn odd_sine(amplitude: f64, mode: u32, grid: Grid) -> Result<GridFunction> {
    if mode == 0 {
        return Err(RodError::Config("odd_sine mode must be >= 1".into()));
    }
    if !amplitude.is_finite() {
        return Err(RodError::Config("odd_sine amplitude must be finite".into()));
    }
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
    GridFunction::from_fn(grid, |x| amplitude * (k * x).sin())
}

/// The exponential `exp(-|a| |x|)` with `a` the extremal root for `gamma`;
/// it saturates the convolution lower bound at the origin.
///
/// Rejected at `gamma = 3`, where the root vanishes and the profile would
/// degenerate to a constant.
pub fn extremal_profile(gamma: f64, grid: Grid) -> Result<GridFunction> {
    let a = extremal_root_of(gamma)?;
    if a == 0.0 {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "(0, 3) or (3, 4] (extremal profile degenerates at gamma = 3)",
        });
    }
    let rate = a.abs();
    let l = grid.length();
    GridFunction::from_fn(grid, |x| periodized_exponential(rate, l, x))
}

/// Reconstructs `u = p * y0` from a prescribed potential.
pub fn from_potential(y0: &GridFunction) -> GridFunction {
    green_convolve(y0)
}

/// Profile from a formula in `x`; see [`crate::expr`] for the grammar.
pub fn expression_profile(formula: &str, grid: Grid) -> Result<GridFunction> {
    let e = crate::expr::Expression::parse(formula)?;
    GridFunction::from_fn(grid, |x| e.eval(x))
        .map_err(|_| RodError::Config(format!("expression {formula:?} is not finite on the grid")))
}

// ---------------------------------------------------------------------------
// Smooth solitary waves for 0 < gamma < 1
// ---------------------------------------------------------------------------

/// Solitary-wave datum `c phi(x)` where the normalised profile solves
///
/// ```text
/// (phi')^2 (1 - gamma phi) = phi^2 (1 - phi),   phi(0) = 1,
/// ```
///
/// is even, positive, monotonically decreasing from its peak and decays like
/// `exp(-|x|)`. The wave `c phi(x - c t)` travels at speed `c`.
///
/// Construction: the quadrature `x(phi) = int_phi^1 dpsi / (psi sqrt((1 -
/// psi)/(1 - gamma psi)))` is evaluated with the square-root peak singularity
/// removed by the substitution `psi = 1 - s^2`, then inverted by monotone
/// cubic interpolation and resampled on the grid.
pub fn solitary_wave(gamma: f64, c: f64, grid: Grid) -> Result<GridFunction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(RodError::Domain {
            name: "gamma",
            value: gamma,
            valid: "(0, 1) (smooth solitary waves)",
        });
    }
    if !(c.is_finite() && c != 0.0) {
        return Err(RodError::Domain {
            name: "speed",
            value: c,
            valid: "nonzero finite",
        });
    }
    let profile = SolitaryProfile::build(gamma)?;
    let quarter = 0.25 * grid.length();
    if profile.half_width_at(0.01) > quarter {
        return Err(RodError::Resolution(format!(
            "solitary profile still carries more than 1% of its peak at L/4 = {quarter}"
        )));
    }
    GridFunction::from_fn(grid, |x| c * profile.eval(x.abs()))
}

/// Tabulated normalised solitary profile `phi` on `x >= 0`.
pub(crate) struct SolitaryProfile {
    #[cfg_attr(not(test), allow(dead_code))]
    gamma: f64,
    interp: MonotoneCubic,
    tail_x: f64,
    tail_phi: f64,
}

impl SolitaryProfile {
    pub(crate) fn build(gamma: f64) -> Result<Self> {
        // Head of the profile, phi in [1/2, 1]: integrate in s = sqrt(1 - psi),
        // where the integrand 2 sqrt(1 - gamma + gamma s^2) / (1 - s^2) is smooth.
        let head = |s: f64| 2.0 * (1.0 - gamma + gamma * s * s).sqrt() / (1.0 - s * s);
        // Tail, phi in (0, 1/2]: integrate in psi directly.
        let tail = |psi: f64| (1.0 - gamma * psi).sqrt() / (psi * (1.0 - psi).sqrt());

        let head_steps = 800;
        let tail_steps = 4000;
        let s_half = 0.5f64.sqrt();

        let mut xs = Vec::with_capacity(head_steps + tail_steps + 1);
        let mut phis = Vec::with_capacity(head_steps + tail_steps + 1);
        xs.push(0.0);
        phis.push(1.0);

        let mut x = 0.0;
        let mut s_prev = 0.0;
        for m in 1..=head_steps {
            let s = s_half * m as f64 / head_steps as f64;
            x += quad_adaptive(&head, s_prev, s, 1e-13);
            xs.push(x);
            phis.push(1.0 - s * s);
            s_prev = s;
        }

        let phi_end = 1e-16f64;
        let ratio = (phi_end / 0.5).powf(1.0 / tail_steps as f64);
        let mut phi_prev = 0.5;
        for m in 1..=tail_steps {
            let phi = 0.5 * ratio.powi(m as i32);
            x += quad_adaptive(&tail, phi, phi_prev, 1e-13);
            xs.push(x);
            phis.push(phi);
            phi_prev = phi;
        }

        let tail_x = *xs.last().unwrap();
        let tail_phi = *phis.last().unwrap();
        Ok(Self {
            gamma,
            interp: MonotoneCubic::new(xs, phis),
            tail_x,
            tail_phi,
        })
    }

    /// Profile value at `x >= 0`; past the table the exact `exp(-x)` decay
    /// rate is used.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x >= self.tail_x {
            self.tail_phi * (self.tail_x - x).exp()
        } else {
            self.interp.eval(x)
        }
    }

    /// Slope from the quadrature relation `phi' = -phi sqrt((1 - phi)/(1 -
    /// gamma phi))` (negative branch, `x > 0`).
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn slope(&self, x: f64) -> f64 {
        let phi = self.eval(x);
        -phi * ((1.0 - phi).max(0.0) / (1.0 - self.gamma * phi)).sqrt()
    }

    /// Distance from the peak at which the profile falls to `level` times
    /// its peak value.
    fn half_width_at(&self, level: f64) -> f64 {
        let xs = &self.interp.xs;
        let ys = &self.interp.ys;
        for i in 0..ys.len() {
            if ys[i] <= level {
                return xs[i];
            }
        }
        self.tail_x - (level / self.tail_phi).ln()
    }
}

// ---------------------------------------------------------------------------
// Quadrature and interpolation helpers
// ---------------------------------------------------------------------------

// 15-point Kronrod extension of 7-point Gauss (positive abscissae).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7-15 panel; returns (estimate, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive bisection driven by the Kronrod error estimate.
pub(crate) fn quad_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 24 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol.max(f64::EPSILON), 0)
}

/// Monotone (Fritsch-Carlson) cubic Hermite interpolant.
pub(crate) struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    pub(crate) fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 3, "need at least three table points");
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        let slopes: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            if slopes[i - 1] * slopes[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / slopes[i - 1] + w2 / slopes[i]);
            }
        }
        ds[0] = edge_slope(h[0], h[1], slopes[0], slopes[1]);
        ds[n - 1] = edge_slope(h[n - 2], h[n - 3], slopes[n - 2], slopes[n - 3]);
        Self { xs, ys, ds }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ds[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ds[n - 1] * (x - self.xs[n - 1]);
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.xs[hi] - self.xs[lo];
        let t = (x - self.xs[lo]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[lo] + h10 * h * self.ds[lo] + h01 * self.ys[hi] + h11 * h * self.ds[hi]
    }
}

/// Three-point boundary slope with the usual shape-preserving clamps.
fn edge_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 < 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{invariants_of, sample_at};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gk_panel_is_exact_on_smooth_integrands() {
        let (v, _) = gk15(&|x: f64| x * x * x * x, 0.0, 1.0);
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        let v = quad_adaptive(&|x: f64| x.exp(), 0.0, 1.0, 1e-14);
        assert_abs_diff_eq!(v, 1.0f64.exp() - 1.0, epsilon = 1e-13);
        // integrable square-root behaviour, handled by refinement
        let v = quad_adaptive(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn monotone_cubic_reproduces_smooth_data() {
        // shape-preserving slopes are second-order accurate, so the
        // interpolant converges cubically: ~1e-5 at this table spacing
        let xs: Vec<f64> = (0..80).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-x).exp()).collect();
        let interp = MonotoneCubic::new(xs, ys);
        for &x in &[0.013, 0.5, 1.77, 3.33] {
            assert_abs_diff_eq!(interp.eval(x), (-x as f64).exp(), epsilon = 5e-5);
        }
    }

    #[test]
    fn peakon_peak_value_and_metadata() {
        let g = Grid::new(80.0, 1024).unwrap();
        let f = peakon(1.5, 0.0, g).unwrap();
        let peak_node = g.point_count() / 2;
        assert_abs_diff_eq!(f.values()[peak_node], 1.5, epsilon = 1e-12);
        let meta = f.peak().unwrap();
        assert_eq!(meta.center, 0.0);
        assert_eq!(meta.amplitude, 1.5);
    }

    #[test]
    fn peakon_energy_is_twice_amplitude_squared() {
        // the spectral derivative of corner data carries O(h) ringing
        // energy, so this converges only first order in h
        let g = Grid::new(80.0, 524_288).unwrap();
        let f = peakon(1.0, 0.0, g).unwrap();
        let r = invariants_of(&f, 1.0);
        assert_abs_diff_eq!(r.e, 2.0, epsilon = 1e-4);
        // F = 4/3 for gamma = 1: both cubic integrals equal 2/3
        assert_abs_diff_eq!(r.f, 4.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn gaussian_shape_and_energy() {
        let g = Grid::new(40.0, 1024).unwrap();
        let f = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let peak_node = g.point_count() / 2;
        assert_abs_diff_eq!(f.values()[peak_node], 1.0, epsilon = 1e-12);
        // even about the centre
        let v = f.values();
        let n = g.point_count();
        for j in 1..n / 4 {
            assert_abs_diff_eq!(v[peak_node - j], v[peak_node + j], epsilon = 1e-12);
        }
        let r = invariants_of(&f, 1.0);
        assert_abs_diff_eq!(r.e, 2.0 * (PI / 2.0).sqrt(), epsilon = 1e-6);
        assert!(gaussian(1.0, 0.0, -1.0, g).is_err());
    }

    #[test]
    fn extremal_profile_decay_rates() {
        let g = Grid::new(80.0, 2048).unwrap();
        // gamma = 1 gives exp(-|x|)
        let f = extremal_profile(1.0, g).unwrap();
        let x = g.node(g.point_count() / 2 + 100);
        assert_abs_diff_eq!(sample_at(&f, x), (-x).exp(), epsilon = 1e-9);
        // gamma = 2 gives rate (sqrt(3) - 1)/2
        let f = extremal_profile(2.0, g).unwrap();
        let a = 0.366_025_403_784_438_6;
        assert_abs_diff_eq!(sample_at(&f, x), (-a * x).exp(), epsilon = 1e-9);
        // gamma = 4: root is -1/2, profile still decays at rate 1/2
        let f = extremal_profile(4.0, g).unwrap();
        assert_abs_diff_eq!(sample_at(&f, x), (-0.5 * x).exp(), epsilon = 1e-9);
        assert!(extremal_profile(3.0, g).is_err());
        assert!(extremal_profile(0.0, g).is_err());
    }

    #[test]
    fn from_potential_positive_kernel() {
        let g = Grid::new(60.0, 512).unwrap();
        let y0 = gaussian(1.0, 0.0, 1.0, g).unwrap();
        let u = from_potential(&y0);
        assert!(u.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn from_potential_narrow_bump_approaches_kernel() {
        // unit-mass bump of width 0.2: u should match exp(-|x|)/2 to ~2%
        // away from a width-sized neighbourhood of the origin
        let g = Grid::new(80.0, 4096).unwrap();
        let w = 0.2;
        let c = 1.0 / (w * PI.sqrt());
        let y0 = gaussian(c, 0.0, w, g).unwrap();
        let u = from_potential(&y0);
        for (x, v) in g.nodes().zip(u.values()) {
            if x.abs() >= 0.5 && x.abs() <= 10.0 {
                let kernel = 0.5 * (-x.abs()).exp();
                assert!(
                    (v - kernel).abs() <= 0.02 * kernel,
                    "x = {x}: {v} vs {kernel}"
                );
            }
        }
    }

    #[test]
    fn odd_sine_matches_sine_on_tau_torus() {
        let g = Grid::new(2.0 * PI, 256).unwrap();
        let f = odd_sine(-1.0, 1, g).unwrap();
        for (x, v) in g.nodes().zip(f.values()) {
            assert_abs_diff_eq!(*v, -x.sin(), epsilon = 1e-14);
        }
        assert!(odd_sine(1.0, 0, g).is_err());
    }

    #[test]
    fn expression_profile_evaluates_formula() {
        let g = Grid::new(40.0, 64).unwrap();
        let f = expression_profile("exp(-x^2) * (1 - 2*x)", g).unwrap();
        for (x, v) in g.nodes().zip(f.values()) {
            assert_abs_diff_eq!(*v, (-x * x).exp() * (1.0 - 2.0 * x), epsilon = 1e-13);
        }
        assert!(expression_profile("1/0 * x", g).is_err());
        assert!(expression_profile("nope(x)", g).is_err());
    }

    #[test]
    fn solitary_wave_shape() {
        let g = Grid::new(80.0, 1024).unwrap();
        let f = solitary_wave(0.5, 1.0, g).unwrap();
        let n = g.point_count();
        let peak = n / 2;
        // peak value c at x = 0
        assert_abs_diff_eq!(f.values()[peak], 1.0, epsilon = 1e-8);
        // even and monotone decreasing away from the peak
        for j in 1..n / 2 - 1 {
            assert_abs_diff_eq!(f.values()[peak - j], f.values()[peak + j], epsilon = 1e-10);
            assert!(f.values()[peak + j + 1] <= f.values()[peak + j] + 1e-12);
        }
        // decays below 1e-10 at the box edge
        assert!(f.values()[0].abs() < 1e-10);
    }

    #[test]
    fn solitary_wave_ode_residual_from_quadrature_relation() {
        let profile = SolitaryProfile::build(0.5).unwrap();
        for i in 0..400 {
            let x = 0.02 * i as f64;
            let phi = profile.eval(x);
            let dphi = profile.slope(x);
            let residual = dphi * dphi * (1.0 - 0.5 * phi) - phi * phi * (1.0 - phi);
            assert!(residual.abs() < 1e-8, "x = {x}: residual {residual}");
        }
    }

    #[test]
    fn solitary_wave_matches_independent_ode_integration() {
        // March dphi/dx = -phi sqrt((1 - phi)/(1 - gamma phi)) with RK4 from
        // the quadratic peak expansion and compare against the construction.
        let gamma = 0.5;
        let profile = SolitaryProfile::build(gamma).unwrap();
        let rhs = |phi: f64| {
            if phi >= 1.0 {
                0.0
            } else {
                -phi * ((1.0 - phi) / (1.0 - gamma * phi)).sqrt()
            }
        };
        let x0 = 1e-3;
        let mut phi = 1.0 - x0 * x0 / (4.0 * (1.0 - gamma));
        let dx = 1e-4;
        let mut x = x0;
        let mut max_err = 0.0f64;
        while x < 5.0 {
            let k1 = rhs(phi);
            let k2 = rhs(phi + 0.5 * dx * k1);
            let k3 = rhs(phi + 0.5 * dx * k2);
            let k4 = rhs(phi + dx * k3);
            phi += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x += dx;
            max_err = max_err.max((profile.eval(x) - phi).abs());
        }
        assert!(max_err < 1e-6, "max deviation {max_err}");
    }

    #[test]
    fn solitary_wave_domain_checks() {
        let g = Grid::new(80.0, 512).unwrap();
        assert!(solitary_wave(1.0, 1.0, g).is_err());
        assert!(solitary_wave(0.0, 1.0, g).is_err());
        assert!(solitary_wave(0.5, 0.0, g).is_err());
        // too small a box for the profile width
        let tiny = Grid::new(16.0, 64).unwrap();
        assert!(matches!(
            solitary_wave(0.5, 1.0, tiny),
            Err(RodError::Resolution(_))
        ));
    }
}
