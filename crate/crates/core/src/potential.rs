//! External potentials: zero, harmonic, or tabulated on a grid.

use num_complex::Complex64;

use crate::spectral::{spectral_derivative, Field, Grid};
use crate::Result;

/// Real-valued external potential `V(x)`.
#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    /// `V(x) = (omega^2 / 2) (x - center)^2`.
    Harmonic { center: f64, omega: f64 },
    /// Periodic potential given by samples on a grid; derivatives are
    /// computed spectrally and evaluated by trigonometric interpolation.
    Tabulated(Box<TabulatedPotential>),
}

impl Potential {
    pub fn harmonic(center: f64, omega: f64) -> Self {
        Potential::Harmonic { center, omega }
    }

    pub fn tabulated(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Ok(Potential::Tabulated(Box::new(TabulatedPotential::new(grid, values)?)))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic { center, omega } => {
                let z = x - center;
                0.5 * omega * omega * z * z
            }
            Potential::Tabulated(t) => t.value.eval_at(x).re,
        }
    }

    /// `V'(x)`.
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic { center, omega } => omega * omega * (x - center),
            Potential::Tabulated(t) => t.deriv.eval_at(x).re,
        }
    }

    /// `V''(x)`, used by the variational equations of the ray flow.
    pub fn hess(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic { omega, .. } => omega * omega,
            Potential::Tabulated(t) => t.hess.eval_at(x).re,
        }
    }

    /// Potential values at the nodes of `grid`.
    pub fn node_values(&self, grid: &Grid) -> Vec<f64> {
        match self {
            Potential::Tabulated(t) if t.value.grid() == grid => {
                t.value.values().iter().map(|v| v.re).collect()
            }
            _ => (0..grid.n()).map(|j| self.eval(grid.node(j))).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabulatedPotential {
    value: Field,
    deriv: Field,
    hess: Field,
}

impl TabulatedPotential {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let value = Field::new(
            grid,
            values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            0.0,
        )?;
        let deriv = spectral_derivative(&value);
        let hess = spectral_derivative(&deriv);
        Ok(TabulatedPotential { value, deriv, hess })
    }
}
