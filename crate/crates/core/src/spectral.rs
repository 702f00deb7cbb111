//! Periodic spectral representation: uniform grid, discrete Fourier
//! transforms, spectral differentiation and evaluation of the truncated
//! Fourier series at arbitrary (off-grid) points.
//!
//! A field sampled on the grid is identified with the trigonometric
//! polynomial `sum_m c_m exp(i k_m (x - x0))`, `k_m = 2 pi m / L` for
//! `m = -n/2 .. n/2 - 1`. The unpaired Nyquist mode `-n/2` has no conjugate
//! partner and is zeroed during differentiation and off-grid evaluation.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{CoreError, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Uniform periodic grid with `n` nodes on `[x0, x0 + length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x0: f64,
    length: f64,
    n: usize,
}

impl Grid {
    /// Builds a grid; `n` must be a power of two `>= 8` and `length > 0`.
    pub fn new(x0: f64, length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(CoreError::BadGridLength(length));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::BadGridSize(n));
        }
        Ok(Grid { x0, length, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Node spacing `L / n`.
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// `j`-th collocation node.
    pub fn node(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed mode number for the FFT-order coefficient index.
    pub fn mode_number(&self, idx: usize) -> i64 {
        debug_assert!(idx < self.n);
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Wavenumber `2 pi m / L` of a signed mode number.
    pub fn wavenumber_of_mode(&self, m: i64) -> f64 {
        TWO_PI * m as f64 / self.length
    }

    /// Wavenumber of the FFT-order coefficient index.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.wavenumber_of_mode(self.mode_number(idx))
    }

    /// All wavenumbers in FFT coefficient order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|idx| self.wavenumber(idx)).collect()
    }

    /// Periodic wrap of `x` into `[x0, x0 + L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        self.x0 + (x - self.x0).rem_euclid(self.length)
    }
}

/// Complex wavefunction samples on a [`Grid`] at a fixed time.
#[derive(Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    time: f64,
    spectrum: OnceLock<Arc<Spectrum>>,
    eval: OnceLock<Arc<EvalContext>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        let f = Field {
            grid: self.grid,
            values: self.values.clone(),
            time: self.time,
            spectrum: OnceLock::new(),
            eval: OnceLock::new(),
        };
        if let Some(s) = self.spectrum.get() {
            let _ = f.spectrum.set(s.clone());
        }
        if let Some(e) = self.eval.get() {
            let _ = f.eval.set(e.clone());
        }
        f
    }
}

impl Field {
    /// Wraps samples into a field; every sample must be finite.
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(CoreError::Invalid(format!(
                "field has {} samples for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(CoreError::NonFinite { context: "field samples".into() });
        }
        Ok(Field { grid, values, time, spectrum: OnceLock::new(), eval: OnceLock::new() })
    }

    /// Samples a closed-form function on the grid nodes.
    pub fn sample(grid: Grid, time: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Field::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid {
        self.grid_copy_ref()
    }

    fn grid_copy_ref(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Returns a copy with a different time stamp (same samples).
    pub fn at_time(&self, time: f64) -> Field {
        let mut f = self.clone();
        f.time = time;
        f
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fourier coefficients of the field (cached after the first call).
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Arc::new(to_spectrum(self)))
    }

    pub(crate) fn eval_context(&self) -> &EvalContext {
        self.eval.get_or_init(|| Arc::new(EvalContext::new(self.spectrum())))
    }

    /// Evaluates the truncated Fourier series at an arbitrary point
    /// (periodically wrapped). `O(n)` per point.
    pub fn eval_at(&self, x: f64) -> Complex64 {
        self.eval_context().eval(x)
    }

    pub(crate) fn with_cached_spectrum(grid: Grid, values: Vec<Complex64>, time: f64, spec: Spectrum) -> Field {
        let f = Field { grid, values, time, spectrum: OnceLock::new(), eval: OnceLock::new() };
        let _ = f.spectrum.set(Arc::new(spec));
        f
    }
}

/// Fourier coefficients of a [`Field`], stored in FFT order
/// (index `idx` holds mode `idx` for `idx < n/2`, mode `idx - n` otherwise).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(CoreError::Invalid(format!(
                "spectrum has {} coefficients for a grid of {} nodes",
                coeffs.len(),
                grid.n()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = planner.lock().expect("fft planner poisoned");
    match direction {
        FftDirection::Forward => planner.plan_fft_forward(n),
        FftDirection::Inverse => planner.plan_fft_inverse(n),
    }
}

/// Forward transform: coefficients `c_m = (1/n) sum_j f_j exp(-2 pi i m j / n)`.
pub fn to_spectrum(f: &Field) -> Spectrum {
    if let Some(s) = f.spectrum.get() {
        return (**s).clone();
    }
    let n = f.grid.n();
    let mut buf = f.values.clone();
    plan(n, FftDirection::Forward).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    Spectrum { grid: f.grid, coeffs: buf }
}

/// Inverse transform back to collocation samples, stamped with `time`.
pub fn from_spectrum(s: &Spectrum, time: f64) -> Field {
    let mut buf = s.coeffs.clone();
    plan(s.grid.n(), FftDirection::Inverse).process(&mut buf);
    Field::with_cached_spectrum(s.grid, buf, time, s.clone())
}

/// Spectral derivative: coefficient-wise multiplication by `i k_m` with the
/// unpaired Nyquist mode zeroed.
pub fn spectral_derivative(f: &Field) -> Field {
    let s = derivative_spectrum(f.spectrum());
    from_spectrum(&s, f.time)
}

pub fn derivative_spectrum(s: &Spectrum) -> Spectrum {
    let n = s.grid.n();
    let mut coeffs = Vec::with_capacity(n);
    for (idx, c) in s.coeffs.iter().enumerate() {
        let m = s.grid.mode_number(idx);
        if m == -(n as i64) / 2 {
            coeffs.push(Complex64::new(0.0, 0.0));
        } else {
            let k = s.grid.wavenumber_of_mode(m);
            coeffs.push(Complex64::new(0.0, k) * c);
        }
    }
    Spectrum { grid: s.grid, coeffs }
}

/// Evaluates the truncated series of a bare spectrum at `x`.
pub fn eval_spectrum_at(s: &Spectrum, x: f64) -> Complex64 {
    EvalContext::new(s).eval(x)
}

/// True iff the outer `1/16` of nodes on each side stay below
/// `tol * max |values|`.
pub fn boundary_decay(f: &Field, tol: f64) -> bool {
    let n = f.grid.n();
    let edge = n / 16;
    let overall = f.max_abs();
    let edge_max = f
        .values
        .iter()
        .take(edge)
        .chain(f.values.iter().skip(n - edge))
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    edge_max <= tol * overall
}

/// Ratio of the largest coefficient modulus in the outer eighth of the mode
/// range to the overall maximum. Values above `1e-12` indicate that the grid
/// does not resolve the field down to rounding level.
pub fn tail_ratio(f: &Field) -> f64 {
    let s = f.spectrum();
    let n = f.grid.n();
    let cutoff = (7 * (n / 2)) / 8;
    let cmax = s.max_abs();
    if cmax == 0.0 {
        return 0.0;
    }
    let tail = s
        .coeffs
        .iter()
        .enumerate()
        .filter(|(idx, _)| s.grid.mode_number(*idx).unsigned_abs() as usize >= cutoff)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max);
    tail / cmax
}

/// Precomputed data for repeated series evaluation: paired value/derivative
/// coefficients and the significant mode band.
#[derive(Debug)]
pub(crate) struct EvalContext {
    grid: Grid,
    coeffs: Vec<Complex64>,
    dcoeffs: Vec<Complex64>,
    band: usize,
}

impl EvalContext {
    pub(crate) fn new(s: &Spectrum) -> Self {
        let n = s.grid.n();
        let half = n / 2;
        let mut dcoeffs = Vec::with_capacity(n);
        for (idx, c) in s.coeffs.iter().enumerate() {
            let m = s.grid.mode_number(idx);
            if m == -(n as i64) / 2 {
                dcoeffs.push(Complex64::new(0.0, 0.0));
            } else {
                dcoeffs.push(Complex64::new(0.0, s.grid.wavenumber_of_mode(m)) * c);
            }
        }
        // Modes below rounding level contribute nothing at the evaluation
        // tolerances; restricting to the significant band keeps the per-point
        // cost proportional to the actual spectral content.
        let cmax = s.max_abs();
        let floor = 1e-17 * cmax;
        let mut band = 0usize;
        for m in 1..half {
            if s.coeffs[m].norm() > floor || s.coeffs[n - m].norm() > floor {
                band = m;
            }
        }
        EvalContext { grid: s.grid, coeffs: s.coeffs.clone(), dcoeffs, band }
    }

    pub(crate) fn eval(&self, x: f64) -> Complex64 {
        self.sum(x, false).0
    }

    pub(crate) fn eval_with_derivative(&self, x: f64) -> (Complex64, Complex64) {
        self.sum(x, true)
    }

    fn sum(&self, x: f64, with_derivative: bool) -> (Complex64, Complex64) {
        let n = self.grid.n();
        let powers = PowerTable::new(&self.grid, x, self.band);
        let mut acc = self.coeffs[0];
        let mut dacc = Complex64::new(0.0, 0.0);
        for m in 1..=self.band {
            let p = powers.power(m);
            let q = p.conj();
            acc += self.coeffs[m] * p + self.coeffs[n - m] * q;
            if with_derivative {
                dacc += self.dcoeffs[m] * p + self.dcoeffs[n - m] * q;
            }
        }
        (acc, dacc)
    }
}

const POWER_BLOCK: usize = 64;

/// Unit powers `exp(i k_m (x - x0)) = w^m` via a two-level table: low powers
/// from direct trigonometric calls, block factors from compensated products
/// so that the phase error stays at rounding level uniformly in `m`.
struct PowerTable {
    low: Vec<Complex64>,
    blocks: Vec<Complex64>,
}

impl PowerTable {
    fn new(grid: &Grid, x: f64, band: usize) -> Self {
        let u = (x - grid.x0()).rem_euclid(grid.length());
        let len = grid.length();
        // r = u / L in double-double precision.
        let r_hi = u / len;
        let r_lo = f64::mul_add(-r_hi, len, u) / len;
        let unit = |m: f64| -> Complex64 {
            let hi = m * r_hi;
            let err = f64::mul_add(m, r_hi, -hi);
            let lo = f64::mul_add(m, r_lo, err);
            let mut f = hi.fract() + lo;
            f -= f.floor();
            let (s, c) = (TWO_PI * f).sin_cos();
            Complex64::new(c, s)
        };
        let nlow = POWER_BLOCK.min(band + 1);
        let low = (0..nlow).map(|l| unit(l as f64)).collect();
        let nblocks = band / POWER_BLOCK + 1;
        let blocks = (0..nblocks).map(|b| unit((b * POWER_BLOCK) as f64)).collect();
        PowerTable { low, blocks }
    }

    #[inline]
    fn power(&self, m: usize) -> Complex64 {
        self.blocks[m / POWER_BLOCK] * self.low[m % POWER_BLOCK]
    }
}
