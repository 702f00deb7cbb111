//! Closed-form descriptors for WKB initial data `a0(x) exp(i S0(x) / eps)`.
//!
//! Phase descriptors expose `S0`, `S0'` and `S0''` so that the classical flow
//! and the stationary-phase machinery can work with exact derivatives.

use num_complex::Complex64;

use crate::spectral::{spectral_derivative, Field, Grid};
use crate::{CoreError, Result};

/// Initial amplitude `a0` (real-valued).
#[derive(Debug, Clone)]
pub enum Amplitude {
    /// `a0(x) = exp(-width (x - center)^2)`.
    Gaussian { center: f64, width: f64 },
    Constant(f64),
    /// Samples on a grid, evaluated by trigonometric interpolation.
    Table(AmplitudeTable),
}

impl Amplitude {
    pub fn table(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let field = Field::new(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            0.0,
        )?;
        Ok(Amplitude::Table(AmplitudeTable { field }))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Amplitude::Gaussian { center, width } => {
                let z = x - center;
                (-width * z * z).exp()
            }
            Amplitude::Constant(c) => *c,
            Amplitude::Table(t) => {
                // exact at collocation nodes, trigonometric off the grid
                let grid = t.field.grid();
                let j = ((x - grid.x0()) / grid.dx()).round();
                if j >= 0.0 && (j as usize) < grid.n() && (x - grid.node(j as usize)).abs() < 1e-12
                {
                    t.field.values()[j as usize].re
                } else {
                    t.field.eval_at(x).re
                }
            }
        }
    }

    /// Interval on which `a0 >= threshold * max a0`, if the amplitude decays.
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        match self {
            Amplitude::Gaussian { center, width } => {
                let r = ((1.0 / threshold).ln() / width).sqrt();
                Some((center - r, center + r))
            }
            Amplitude::Constant(_) => None,
            Amplitude::Table(t) => {
                let grid = t.field.grid();
                let values: Vec<f64> = t.field.values().iter().map(|v| v.re.abs()).collect();
                let max = values.iter().fold(0.0f64, |a, &b| a.max(b));
                if max == 0.0 {
                    return None;
                }
                let cut = threshold * max;
                let first = values.iter().position(|&v| v >= cut)?;
                let last = values.iter().rposition(|&v| v >= cut)?;
                Some((grid.node(first), grid.node(last)))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    field: Field,
}

/// Initial phase `S0` with closed-form first and second derivatives.
#[derive(Debug, Clone)]
pub enum Phase {
    Zero,
    /// `S0(x) = k x`.
    Plane { k: f64 },
    /// `S0(x) = s x^2`.
    Quadratic { s: f64 },
    /// `S0(x) = -(1/alpha) ln cosh(alpha x - beta)`.
    LogCosh { alpha: f64, beta: f64 },
    /// Samples on a grid with spectral derivatives.
    Table(Box<PhaseTable>),
}

fn ln_cosh(z: f64) -> f64 {
    // stable for large |z|
    z.abs() + (-2.0 * z.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

impl Phase {
    pub fn table(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let value = Field::new(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            0.0,
        )?;
        let deriv = spectral_derivative(&value);
        let hess = spectral_derivative(&deriv);
        Ok(Phase::Table(Box::new(PhaseTable { value, deriv, hess })))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Plane { k } => k * x,
            Phase::Quadratic { s } => s * x * x,
            Phase::LogCosh { alpha, beta } => -ln_cosh(alpha * x - beta) / alpha,
            Phase::Table(t) => t.value.eval_at(x).re,
        }
    }

    /// `S0'(x)`.
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Plane { k } => *k,
            Phase::Quadratic { s } => 2.0 * s * x,
            Phase::LogCosh { alpha, beta } => -(alpha * x - beta).tanh(),
            Phase::Table(t) => t.deriv.eval_at(x).re,
        }
    }

    /// `S0''(x)`.
    pub fn hess(&self, x: f64) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Plane { .. } => 0.0,
            Phase::Quadratic { s } => 2.0 * s,
            Phase::LogCosh { alpha, beta } => {
                let c = (alpha * x - beta).cosh();
                -alpha / (c * c)
            }
            Phase::Table(t) => t.hess.eval_at(x).re,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseTable {
    value: Field,
    deriv: Field,
    hess: Field,
}

/// WKB initial data. With `wavepacket` set, the state is the
/// `eps^(-1/4)`-scaled coherent profile `eps^(-1/4) a0((x - x0)/sqrt(eps))
/// exp(i k (x - x0) / eps)` instead of the plain `a0 exp(i S0 / eps)`.
#[derive(Debug, Clone)]
pub struct WkbInitialData {
    pub amplitude: Amplitude,
    pub phase: Phase,
    pub wavepacket: bool,
}

impl WkbInitialData {
    pub fn new(amplitude: Amplitude, phase: Phase) -> Self {
        WkbInitialData { amplitude, phase, wavepacket: false }
    }

    pub fn wavepacket(amplitude: Amplitude, phase: Phase) -> Self {
        WkbInitialData { amplitude, phase, wavepacket: true }
    }

    /// Wavepacket parameters `(x0, k)`; errors unless the descriptors fit the
    /// coherent-state form.
    pub(crate) fn wavepacket_params(&self) -> Result<(f64, f64)> {
        let x0 = match &self.amplitude {
            Amplitude::Gaussian { center, .. } => *center,
            _ => {
                return Err(CoreError::Invalid(
                    "wavepacket data requires a gaussian amplitude profile".into(),
                ))
            }
        };
        let k = match &self.phase {
            Phase::Zero => 0.0,
            Phase::Plane { k } => *k,
            _ => {
                return Err(CoreError::Invalid(
                    "wavepacket data requires a zero or plane-wave phase".into(),
                ))
            }
        };
        Ok((x0, k))
    }

    /// Initial wavefunction value at `x`.
    pub fn psi0(&self, x: f64, epsilon: f64) -> Result<Complex64> {
        if self.wavepacket {
            let (x0, k) = self.wavepacket_params()?;
            let z = (x - x0) / epsilon.sqrt();
            let profile = match &self.amplitude {
                Amplitude::Gaussian { width, .. } => (-width * z * z).exp(),
                _ => unreachable!(),
            };
            let scale = epsilon.powf(-0.25);
            Ok(scale * profile * Complex64::new(0.0, k * (x - x0) / epsilon).exp())
        } else {
            let a = self.amplitude.eval(x);
            let s = self.phase.value(x);
            Ok(a * Complex64::new(0.0, s / epsilon).exp())
        }
    }

    /// Interval on which the initial density is at least
    /// `threshold^2 * max`, used for seed placement.
    pub fn support_window(&self, epsilon: f64, threshold: f64) -> Option<(f64, f64)> {
        if self.wavepacket {
            let (x0, _) = self.wavepacket_params().ok()?;
            let (lo, hi) = self.amplitude.support(threshold)?;
            let (zc, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            debug_assert!((zc - x0).abs() < 1e-12);
            let r = r * epsilon.sqrt();
            Some((x0 - r, x0 + r))
        } else {
            self.amplitude.support(threshold)
        }
    }
}
