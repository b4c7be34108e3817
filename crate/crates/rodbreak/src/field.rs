//! Discrete periodic function spaces and the nonlocal operators.
//!
//! All fields live on a uniform grid over `[-L/2, L/2)` and every operator is
//! spectral: differentiation multiplies Fourier modes by `i xi`, the Helmholtz
//! inverse `(1 - d^2/dx^2)^(-1)` divides them by `1 + xi^2`, which on the
//! periodic domain coincides with convolution against the periodised kernel
//! `p(x) = exp(-|x|)/2`. Problems posed on the whole line are embedded in a
//! large periodic box (default `L = 80`) with decaying data; the embedding
//! error is `O(exp(-L/2))` and far below every tolerance used here.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{self, Write};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, RodError};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    /// Creates a grid of period `length` with `n` nodes; `n` must be a power
    /// of two and at least 16.
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(RodError::InvalidGrid(format!(
                "period must be positive and finite, got {length}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(RodError::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Node `x_j = -L/2 + j h`.
    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Signed wavenumber of DFT bin `k`; the Nyquist bin gets `+pi N / L`.
    fn wavenumber(&self, k: usize) -> f64 {
        let k_signed = if k <= self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        2.0 * PI * k_signed / self.length
    }

    /// Index of the node closest to `x` (reduced modulo the period).
    pub fn nearest_node(&self, x: f64) -> usize {
        let h = self.spacing();
        let j = ((x + 0.5 * self.length) / h).round();
        (j.rem_euclid(self.n as f64)) as usize % self.n
    }
}

/// Marker carried by peaked profiles whose potential is a point measure and
/// whose slope at the peak only exists one-sidedly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakonMeta {
    /// Peak location.
    pub center: f64,
    /// Signed amplitude `c` of `c exp(-|x - center|)`.
    pub amplitude: f64,
}

/// Real samples on a [`Grid`]; the basic field type.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    peak: Option<PeakonMeta>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.point_count() {
            return Err(RodError::InvalidGrid(format!(
                "value count {} does not match grid point count {}",
                values.len(),
                grid.point_count()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(RodError::NonFinite("grid function samples".into()));
        }
        Ok(Self {
            grid,
            values,
            peak: None,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.point_count()],
            peak: None,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Peak metadata, present only on peakon profiles.
    pub fn peak(&self) -> Option<PeakonMeta> {
        self.peak
    }

    pub(crate) fn with_peak(mut self, meta: PeakonMeta) -> Self {
        self.peak = Some(meta);
        self
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        Self {
            grid,
            values,
            peak: None,
        }
    }

    /// Writes `x,<label>` CSV rows with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, w: &mut W, label: &str) -> io::Result<()> {
        writeln!(w, "x,{label}")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{},{}", fmt_g17(x), fmt_g17(*v))?;
        }
        Ok(())
    }
}

/// Formats a float with 17 significant digits (shortest exact form would not
/// be column-aligned; scientific keeps CSV output byte-stable).
pub(crate) fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn assert_same_grid(a: &GridFunction, b: &GridFunction) {
    assert_eq!(a.grid, b.grid, "grid mismatch between operands");
}

pub(crate) fn zip_map(a: &GridFunction, b: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
    assert_same_grid(a, b);
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| f(x, y))
        .collect();
    GridFunction::from_values_unchecked(a.grid, values)
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn map(a: &GridFunction, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_values_unchecked(a.grid, a.values.iter().map(|&x| f(x)).collect())
}

pub(crate) fn fft_forward(f: &GridFunction) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

pub(crate) fn fft_inverse_real(grid: Grid, mut spectrum: Vec<Complex64>) -> GridFunction {
    let n = spectrum.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spectrum));
    let scale = 1.0 / n as f64;
    let values = spectrum.iter().map(|c| c.re * scale).collect();
    GridFunction::from_values_unchecked(grid, values)
}

/// Applies a wavenumber multiplier to the spectrum of `f`.
fn apply_symbol(f: &GridFunction, symbol: impl Fn(f64, usize) -> Complex64) -> GridFunction {
    let mut spectrum = fft_forward(f);
    for (k, c) in spectrum.iter_mut().enumerate() {
        *c *= symbol(f.grid.wavenumber(k), k);
    }
    fft_inverse_real(f.grid, spectrum)
}

/// Trigonometric-interpolant derivative; exact on resolved Fourier modes.
/// The (sign-ambiguous) Nyquist mode is set to zero.
pub fn derivative(f: &GridFunction) -> GridFunction {
    let nyquist = f.grid.point_count() / 2;
    apply_symbol(f, |xi, k| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi)
        }
    })
}

/// Solves `g - g_xx = f` for the trigonometric interpolant: every Fourier
/// mode is divided by `1 + xi^2`.
pub fn helmholtz_solve(f: &GridFunction) -> GridFunction {
    apply_symbol(f, |xi, _| Complex64::new(1.0 / (1.0 + xi * xi), 0.0))
}

/// Convolution with the periodised Green kernel `exp(-|x|)/2` of `1 - d^2`.
///
/// Identical to [`helmholtz_solve`]; provided so criterion code can mirror
/// the `p * f` notation.
pub fn green_convolve(f: &GridFunction) -> GridFunction {
    helmholtz_solve(f)
}

/// The potential `y = f - f_xx`, evaluated as the exact spectral inverse of
/// [`helmholtz_solve`] (each mode multiplied by `1 + xi^2`).
///
/// Rejects peakon-flagged data: the potential of a peaked profile is a point
/// measure and has no grid representation.
pub fn potential(f: &GridFunction) -> Result<GridFunction> {
    if f.peak.is_some() {
        return Err(RodError::Precondition(
            "potential of a peaked profile is distributional; use the analytic metadata instead"
                .into(),
        ));
    }
    Ok(apply_symbol(f, |xi, _| {
        Complex64::new(1.0 + xi * xi, 0.0)
    }))
}

/// Zeroes all modes with `|k| > N/3` (two-thirds dealiasing of quadratic
/// products).
pub fn dealias_filter(f: &GridFunction) -> GridFunction {
    let n = f.grid.point_count();
    let cutoff = n / 3;
    let mut spectrum = fft_forward(f);
    for (k, c) in spectrum.iter_mut().enumerate() {
        let k_abs = if k <= n / 2 { k } else { n - k };
        if k_abs > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse_real(f.grid, spectrum)
}

/// Conserved functionals of a field: the quadratic energy `E`, the cubic
/// invariant `F` and the two norms derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    /// `E = integral of u^2 + u_x^2`.
    pub e: f64,
    /// `F = integral of u^3 + gamma u u_x^2`.
    pub f: f64,
    /// `sqrt(E)`.
    pub h1_norm: f64,
    /// `max |u|` over nodes.
    pub linf_norm: f64,
}

/// Evaluates `E`, `F` and the norms by the trapezoid rule on the periodic
/// grid (spectrally accurate for resolved data); `u_x` is the spectral
/// derivative.
pub fn invariants_of(f: &GridFunction, gamma: f64) -> InvariantReport {
    let h = f.grid.spacing();
    let ux = derivative(f);
    let mut e = 0.0;
    let mut cubic = 0.0;
    for (&u, &du) in f.values.iter().zip(ux.values()) {
        e += u * u + du * du;
        cubic += u * u * u + gamma * u * du * du;
    }
    e *= h;
    cubic *= h;
    InvariantReport {
        e,
        f: cubic,
        h1_norm: e.max(0.0).sqrt(),
        linf_norm: f.linf(),
    }
}

/// Band-limited interpolant of a grid function, reusable for many
/// off-node evaluations.
#[derive(Debug, Clone)]
pub struct Interpolant {
    grid: Grid,
    /// Forward DFT of the samples (unnormalised).
    spectrum: Vec<Complex64>,
}

impl Interpolant {
    pub fn new(f: &GridFunction) -> Self {
        Self {
            grid: f.grid,
            spectrum: fft_forward(f),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Evaluates the trigonometric interpolant at `x` (reduced mod `L`).
    /// The Nyquist mode is represented as a cosine so that the interpolant
    /// is real and reproduces the stored samples at the nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.point_count();
        let l = self.grid.length();
        // phase variable theta = 2 pi (x + L/2) / L
        let theta = 2.0 * PI * ((x + 0.5 * l) / l).rem_euclid(1.0);
        let mut acc = self.spectrum[0].re;
        for k in 1..n / 2 {
            let ph = Complex64::from_polar(1.0, k as f64 * theta);
            acc += 2.0 * (self.spectrum[k] * ph).re;
        }
        acc += self.spectrum[n / 2].re * (0.5 * n as f64 * theta).cos();
        acc / n as f64
    }
}

/// One-off band-limited evaluation of `f` at `x`.
pub fn sample_at(f: &GridFunction, x: f64) -> f64 {
    Interpolant::new(f).eval(x)
}
