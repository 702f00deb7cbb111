//! Split-step Fourier propagator for `i eps d_t psi = -(eps^2/2) psi_xx + V psi`
//! with second-order Strang splitting, plus conserved quantities and the Bohm
//! potential.
//!
//! The splitting order is fixed as kinetic half step / full potential step /
//! kinetic half step, so that the zero-potential case collapses to the exact
//! free propagator.

use num_complex::Complex64;

use crate::potential::Potential;
use crate::spectral::{from_spectrum, spectral_derivative, tail_ratio, Field, Grid, Spectrum};
use crate::wkb::WkbInitialData;
use crate::{CoreError, Result};

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
}

impl SolverConfig {
    pub fn new(epsilon: f64, dt: f64, steps: usize, snapshot_stride: usize) -> Result<Self> {
        let cfg = SolverConfig { epsilon, dt, steps, snapshot_stride };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(CoreError::BadConfig(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_stride == 0 {
            return Err(CoreError::BadConfig("snapshot_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Samples the WKB initial state on the grid.
pub fn init_state(grid: Grid, data: &WkbInitialData, epsilon: f64) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        values.push(data.psi0(grid.node(j), epsilon)?);
    }
    Field::new(grid, values, 0.0)
}

/// Warns when the spectral tail of the field does not reach rounding level,
/// i.e. the grid does not resolve the oscillation scale.
pub fn resolution_warning(f: &Field) -> Option<String> {
    let ratio = tail_ratio(f);
    (ratio > 1e-12).then(|| {
        format!(
            "grid under-resolves the field: spectral tail at {ratio:.2e} of the peak (want <= 1e-12); increase the mode count"
        )
    })
}

/// Exact free propagation over `dt`: every Fourier coefficient is multiplied
/// by `exp(-i eps k^2 dt / 2)`.
pub fn kinetic_substep(f: &Field, epsilon: f64, dt: f64) -> Field {
    if dt == 0.0 {
        return f.clone();
    }
    let s = f.spectrum();
    let mut coeffs = s.coeffs().to_vec();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let k = s.grid().wavenumber(idx);
        *c *= Complex64::from_polar(1.0, -epsilon * k * k * dt / 2.0);
    }
    let spec = Spectrum::new(*f.grid(), coeffs).expect("grid unchanged");
    from_spectrum(&spec, f.time())
}

/// Pointwise multiplication by `exp(-i V(x_j) dt / eps)`.
pub fn potential_substep(f: &Field, v: &Potential, epsilon: f64, dt: f64) -> Field {
    if dt == 0.0 || v.is_zero() {
        return f.clone();
    }
    let vals = v.node_values(f.grid());
    let values = f
        .values()
        .iter()
        .zip(&vals)
        .map(|(psi, &vv)| psi * Complex64::from_polar(1.0, -vv * dt / epsilon))
        .collect();
    Field::new(*f.grid(), values, f.time()).expect("phase rotation preserves finiteness")
}

/// One Strang step: kinetic half, potential full, kinetic half. The returned
/// field is stamped `time + dt`.
pub fn strang_step(f: &Field, v: &Potential, epsilon: f64, dt: f64) -> Field {
    let t1 = f.time() + dt;
    let mut out = if v.is_zero() {
        kinetic_substep(f, epsilon, dt)
    } else {
        let a = kinetic_substep(f, epsilon, dt / 2.0);
        let b = potential_substep(&a, v, epsilon, dt);
        kinetic_substep(&b, epsilon, dt / 2.0)
    };
    out.set_time(t1);
    out
}

/// Repeated Strang stepping with snapshots every `snapshot_stride` steps
/// (the initial state and the final step are always included).
pub fn evolve(f: &Field, v: &Potential, cfg: &SolverConfig) -> Result<Vec<Field>> {
    cfg.validate()?;
    let t0 = f.time();
    let mut snapshots = vec![f.at_time(t0)];
    let mut cur = f.clone();
    for i in 0..cfg.steps {
        cur = strang_step(&cur, v, cfg.epsilon, cfg.dt);
        if !cur.is_finite() {
            return Err(CoreError::NonFinite { context: format!("evolve step {}", i + 1) });
        }
        if (i + 1) % cfg.snapshot_stride == 0 || i + 1 == cfg.steps {
            snapshots.push(cur.at_time(t0 + (i + 1) as f64 * cfg.dt));
        }
    }
    Ok(snapshots)
}

/// Total mass `int |psi|^2 dx` (uniform-grid Riemann sum, exact for
/// trigonometric polynomials).
pub fn mass(f: &Field) -> f64 {
    f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid().dx()
}

/// Total energy `(eps^2/2) int |psi_x|^2 dx + int V |psi|^2 dx`.
pub fn energy(f: &Field, v: &Potential, epsilon: f64) -> f64 {
    let d = spectral_derivative(f);
    let kinetic: f64 =
        d.values().iter().map(|c| c.norm_sqr()).sum::<f64>() * f.grid().dx() * epsilon * epsilon
            / 2.0;
    let pot: f64 = if v.is_zero() {
        0.0
    } else {
        let vals = v.node_values(f.grid());
        f.values().iter().zip(&vals).map(|(psi, &vv)| vv * psi.norm_sqr()).sum::<f64>()
            * f.grid().dx()
    };
    kinetic + pot
}

/// Density floor used to regularize divisions by `rho`:
/// `1e-28 * max rho` (squared rounding scale).
pub fn rho_floor(f: &Field) -> f64 {
    let max_rho = f.values().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    if max_rho == 0.0 {
        f64::MIN_POSITIVE
    } else {
        1e-28 * max_rho
    }
}

/// Splits the kinetic energy into the transport part `1/2 int rho u^2` and
/// the quantum part `(eps^2/2) int |grad sqrt(rho)|^2`. Nodes with density
/// below the floor are skipped in the transport sum.
pub fn kinetic_split(f: &Field, epsilon: f64) -> (f64, f64) {
    let d = spectral_derivative(f);
    let floor = rho_floor(f);
    let dx = f.grid().dx();
    let mut transport = 0.0;
    for (psi, dpsi) in f.values().iter().zip(d.values()) {
        let rho = psi.norm_sqr();
        if rho < floor {
            continue;
        }
        let current = epsilon * (dpsi * psi.conj()).im;
        transport += 0.5 * current * current / rho;
    }
    transport *= dx;

    let sqrt_rho = Field::new(
        *f.grid(),
        f.values().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        f.time(),
    )
    .expect("sqrt of finite density");
    let dsr = spectral_derivative(&sqrt_rho);
    let quantum: f64 = dsr.values().iter().map(|c| c.norm_sqr()).sum::<f64>()
        * dx
        * epsilon
        * epsilon
        / 2.0;
    (transport, quantum)
}

/// Bohm potential `-eps^2 / (2 sqrt(rho)) * Lap sqrt(rho)`, computed
/// spectrally from the `sqrt(rho)` samples. Nodes with density under the
/// floor are reported as `None`; if every node is under the floor the call
/// fails.
pub fn bohm_potential(f: &Field, epsilon: f64) -> Result<Vec<Option<f64>>> {
    let floor = rho_floor(f);
    let sqrt_rho = Field::new(
        *f.grid(),
        f.values().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        f.time(),
    )?;
    let lap = spectral_derivative(&spectral_derivative(&sqrt_rho));
    let mut any = false;
    let out = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(sqrt_rho.values())
        .map(|((psi, l), sr)| {
            if psi.norm_sqr() >= floor {
                any = true;
                Some(-epsilon * epsilon * l.re / (2.0 * sr.re))
            } else {
                None
            }
        })
        .collect();
    if !any {
        return Err(CoreError::AllNodesUnderFloor);
    }
    Ok(out)
}
