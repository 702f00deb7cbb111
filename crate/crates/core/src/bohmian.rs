//! Bohmian trajectories `dX/dt = u(t, X)` integrated against the evolving
//! solver field, with the audits the theory demands: push-forward of the
//! initial density, non-crossing, and the deviation-from-classical measure.

use rayon::prelude::*;

use crate::potential::Potential;
use crate::solver::{rho_floor, strang_step, SolverConfig};
use crate::spectral::Field;
use crate::{CoreError, Result};

/// Trajectory seeds `y_1 < ... < y_M` with the initial density as weights.
#[derive(Debug, Clone)]
pub struct SeedSet {
    seeds: Vec<f64>,
    weights: Vec<f64>,
    spacing: Option<f64>,
}

impl SeedSet {
    pub fn new(seeds: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if seeds.is_empty() || seeds.len() != weights.len() {
            return Err(CoreError::Invalid("seed and weight arrays must match and be non-empty".into()));
        }
        if seeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::Invalid("seeds must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(CoreError::Invalid("seed weights must be nonnegative".into()));
        }
        Ok(SeedSet { seeds, weights, spacing: None })
    }

    /// Uniform midpoint lattice over `[lo, hi]`, weighted by the initial
    /// density `|psi0|^2` of the given field.
    pub fn uniform_from_field(f0: &Field, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(hi > lo) {
            return Err(CoreError::Invalid("seed window must be ordered and count positive".into()));
        }
        let dy = (hi - lo) / count as f64;
        let seeds: Vec<f64> = (0..count).map(|i| lo + (i as f64 + 0.5) * dy).collect();
        let weights = seeds.iter().map(|&y| f0.eval_at(y).norm_sqr()).collect();
        Ok(SeedSet { seeds, weights, spacing: Some(dy) })
    }

    pub fn seeds(&self) -> &[f64] {
        &self.seeds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Restriction to every `stride`-th seed (used by the time-step audit).
    pub fn thin(&self, stride: usize) -> SeedSet {
        let stride = stride.max(1);
        SeedSet {
            seeds: self.seeds.iter().step_by(stride).copied().collect(),
            weights: self.weights.iter().step_by(stride).copied().collect(),
            spacing: self.spacing.map(|d| d * stride as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BundleKind {
    Bohmian { epsilon: f64 },
    Classical,
}

/// Trajectories `(X, P)` for a seed set over a time mesh; `x[i][k]` is the
/// position of seed `i` at `times[k]`. Classical bundles also carry the ray
/// Jacobian.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub kind: BundleKind,
    pub times: Vec<f64>,
    pub seeds: Vec<f64>,
    pub weights: Vec<f64>,
    pub seed_spacing: Option<f64>,
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub jac: Option<Vec<Vec<f64>>>,
}

impl TrajectoryBundle {
    pub fn seed_count(&self) -> usize {
        self.seeds.len()
    }

    pub fn time_count(&self) -> usize {
        self.times.len()
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&tt| (tt - t).abs() <= 1e-9)
    }
}

struct VelocityProbe<'a> {
    ctx: &'a crate::spectral::EvalContext,
    floor: f64,
    epsilon: f64,
}

impl<'a> VelocityProbe<'a> {
    fn new(f: &'a Field, epsilon: f64) -> Self {
        VelocityProbe { ctx: f.eval_context(), floor: rho_floor(f), epsilon }
    }

    fn velocity(&self, x: f64) -> f64 {
        let (psi, dpsi) = self.ctx.eval_with_derivative(x);
        self.epsilon * (dpsi * psi.conj()).im / (psi.norm_sqr() + self.floor)
    }
}

/// Quantum velocity `u = eps Im(psi_x conj(psi)) / (|psi|^2 + floor)` at an
/// arbitrary point, evaluated from the trigonometric interpolant. Finite even
/// at nodes of the wavefunction.
pub fn velocity_at(f: &Field, epsilon: f64, x: f64) -> f64 {
    VelocityProbe::new(f, epsilon).velocity(x)
}

/// The two half-step fields produced while advancing one RK4 step.
pub struct StepFields {
    pub half: Field,
    pub full: Field,
}

/// Advances every trajectory by one RK4 step against the field `f_t`.
/// The stage fields at `t + dt/2` and `t + dt` are produced by two half-step
/// Strang substeps (for zero potential this is the exact kinetic propagation)
/// and shared by all trajectories.
pub fn advance_trajectories(
    positions: &mut [f64],
    f_t: &Field,
    v: &Potential,
    epsilon: f64,
    dt: f64,
) -> Result<StepFields> {
    let half = strang_step(f_t, v, epsilon, dt / 2.0);
    let full = strang_step(&half, v, epsilon, dt / 2.0);
    let p0 = VelocityProbe::new(f_t, epsilon);
    let p1 = VelocityProbe::new(&half, epsilon);
    let p2 = VelocityProbe::new(&full, epsilon);

    let moved: Vec<f64> = positions
        .par_iter()
        .map(|&x| {
            let k1 = p0.velocity(x);
            let k2 = p1.velocity(x + 0.5 * dt * k1);
            let k3 = p1.velocity(x + 0.5 * dt * k2);
            let k4 = p2.velocity(x + dt * k3);
            x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        })
        .collect();
    for (i, &x) in moved.iter().enumerate() {
        if !x.is_finite() {
            return Err(CoreError::TrajectoryBlowup { seed_index: i, time: f_t.time() });
        }
    }
    positions.copy_from_slice(&moved);
    Ok(StepFields { half, full })
}

/// Output of a co-evolved field/trajectory run.
pub struct BohmianRun {
    pub bundle: TrajectoryBundle,
    pub snapshots: Vec<Field>,
}

/// Co-evolves the field and the Bohmian trajectories over the full time mesh,
/// recording `X` and `P = u(t, X)` at snapshot times.
pub fn run_bohmian(
    f0: &Field,
    v: &Potential,
    cfg: &SolverConfig,
    seeds: &SeedSet,
) -> Result<BohmianRun> {
    cfg.validate()?;
    let t0 = f0.time();
    let m = seeds.len();
    let mut positions = seeds.seeds().to_vec();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut ps: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut times = Vec::new();
    let mut snapshots = Vec::new();

    let record = |t: f64, positions: &[f64], field: &Field,
                      xs: &mut Vec<Vec<f64>>, ps: &mut Vec<Vec<f64>>,
                      times: &mut Vec<f64>, snapshots: &mut Vec<Field>| {
        let snap = field.at_time(t);
        let probe = VelocityProbe::new(&snap, cfg.epsilon);
        for i in 0..m {
            xs[i].push(positions[i]);
            ps[i].push(probe.velocity(positions[i]));
        }
        times.push(t);
        snapshots.push(snap);
    };

    record(t0, &positions, f0, &mut xs, &mut ps, &mut times, &mut snapshots);
    let mut cur = f0.clone();
    for step in 0..cfg.steps {
        let stage = advance_trajectories(&mut positions, &cur, v, cfg.epsilon, cfg.dt)?;
        cur = stage.full;
        if !cur.is_finite() {
            return Err(CoreError::NonFinite { context: format!("field at step {}", step + 1) });
        }
        if (step + 1) % cfg.snapshot_stride == 0 || step + 1 == cfg.steps {
            let t = t0 + (step + 1) as f64 * cfg.dt;
            record(t, &positions, &cur, &mut xs, &mut ps, &mut times, &mut snapshots);
        }
    }

    let bundle = TrajectoryBundle {
        kind: BundleKind::Bohmian { epsilon: cfg.epsilon },
        times,
        seeds: seeds.seeds().to_vec(),
        weights: seeds.weights().to_vec(),
        seed_spacing: seeds.spacing(),
        x: xs,
        p: ps,
        jac: None,
    };
    Ok(BohmianRun { bundle, snapshots })
}

/// Smooth test functions for the push-forward identity.
#[derive(Debug, Clone, Copy)]
pub enum TestFunction {
    One,
    Coordinate,
    /// `0.5 (1 + tanh((x - threshold) / width))`.
    SmoothedIndicator { threshold: f64, width: f64 },
    Gaussian { center: f64, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Coordinate => x,
            TestFunction::SmoothedIndicator { threshold, width } => {
                0.5 * (1.0 + ((x - threshold) / width).tanh())
            }
            TestFunction::Gaussian { center, width } => (-width * (x - center).powi(2)).exp(),
        }
    }
}

/// Push-forward identity check
/// `int sigma rho(t) dx = int sigma(X(t,y)) rho0(y) dy`:
/// the left side by grid quadrature of the field, the right side by seed
/// quadrature along the bundle. Returns `(lhs, rhs)`.
pub fn pushforward_check(
    bundle: &TrajectoryBundle,
    f_t: &Field,
    sigma: TestFunction,
) -> Result<(f64, f64)> {
    let k = bundle
        .time_index(f_t.time())
        .ok_or_else(|| CoreError::MismatchedMesh(format!("no snapshot at t = {}", f_t.time())))?;
    let dy = bundle
        .seed_spacing
        .ok_or_else(|| CoreError::Invalid("seed quadrature requires a uniform seed lattice".into()))?;
    let grid = f_t.grid();
    let lhs: f64 = f_t
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| sigma.eval(grid.node(j)) * v.norm_sqr())
        .sum::<f64>()
        * grid.dx();
    let rhs: f64 = bundle
        .x
        .iter()
        .zip(&bundle.weights)
        .map(|(row, &w)| sigma.eval(row[k]) * w)
        .sum::<f64>()
        * dy;
    Ok((lhs, rhs))
}

/// True iff the row ordering of the bundle is preserved at every snapshot
/// (up to `1e-9` slack); otherwise reports the first violating
/// `(time_index, seed_index)`.
pub fn non_crossing_audit(bundle: &TrajectoryBundle) -> (bool, Option<(usize, usize)>) {
    for k in 0..bundle.time_count() {
        for i in 0..bundle.seed_count().saturating_sub(1) {
            if bundle.x[i + 1][k] < bundle.x[i][k] - 1e-9 {
                return (false, Some((k, i)));
            }
        }
    }
    (true, None)
}

/// Fraction of lattice points `(seed, snapshot time in window)` at which the
/// phase-space deviation `|(X_b, P_b) - (X_c, P_c)|` is at least `delta`.
pub fn deviation_measure(
    bohmian: &TrajectoryBundle,
    classical: &TrajectoryBundle,
    delta: f64,
    t_window: (f64, f64),
) -> Result<f64> {
    if bohmian.time_count() != classical.time_count()
        || bohmian
            .times
            .iter()
            .zip(&classical.times)
            .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(CoreError::MismatchedMesh("snapshot times differ".into()));
    }
    if bohmian.seed_count() != classical.seed_count()
        || bohmian
            .seeds
            .iter()
            .zip(&classical.seeds)
            .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(CoreError::MismatchedMesh("seed sets differ".into()));
    }
    let (lo, hi) = t_window;
    let mut total = 0usize;
    let mut deviated = 0usize;
    for (k, &t) in bohmian.times.iter().enumerate() {
        if t < lo - 1e-12 || t > hi + 1e-12 {
            continue;
        }
        for i in 0..bohmian.seed_count() {
            total += 1;
            let dx = bohmian.x[i][k] - classical.x[i][k];
            let dp = bohmian.p[i][k] - classical.p[i][k];
            if dx.hypot(dp) >= delta {
                deviated += 1;
            }
        }
    }
    if total == 0 {
        return Err(CoreError::Invalid("deviation window contains no snapshot times".into()));
    }
    Ok(deviated as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::init_state;
    use crate::spectral::Grid;
    use crate::wkb::{Amplitude, Phase, WkbInitialData};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn velocity_of_wkb_state_is_the_phase_gradient() {
        let grid = Grid::new(-2.0, 5.0, 2048).unwrap();
        let eps = 1e-2;
        let s0 = Phase::LogCosh { alpha: 5.0, beta: 2.5 };
        let data = WkbInitialData::new(Amplitude::Gaussian { center: 0.5, width: 25.0 }, s0.clone());
        let f = init_state(grid, &data, eps).unwrap();
        for &x in &[0.35, 0.5, 0.65] {
            assert_abs_diff_eq!(velocity_at(&f, eps, x), s0.grad(x), epsilon = 1e-8);
        }
        // odd symmetry pins the center exactly
        assert_abs_diff_eq!(velocity_at(&f, eps, 0.5), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn velocity_of_plane_wave_is_constant() {
        let grid = Grid::new(0.0, std::f64::consts::TAU, 64).unwrap();
        let eps = 0.5;
        let k = eps * grid.wavenumber_of_mode(5);
        let f = Field::sample(grid, 0.0, |x| Complex64::from_polar(1.0, k * x / eps)).unwrap();
        for &x in &[0.3, 1.7, 4.4] {
            assert_abs_diff_eq!(velocity_at(&f, eps, x), k, epsilon = 1e-10);
        }
    }

    #[test]
    fn plane_wave_trajectories_drift_at_the_carrier_speed() {
        let grid = Grid::new(0.0, std::f64::consts::TAU, 128).unwrap();
        let eps = 0.5;
        let k = eps * grid.wavenumber_of_mode(5);
        let f0 = Field::sample(grid, 0.0, |x| Complex64::from_polar(1.0, k * x / eps)).unwrap();
        let cfg = SolverConfig::new(eps, 1e-3, 200, 200).unwrap();
        let seeds = SeedSet::new(vec![0.5, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        let run = run_bohmian(&f0, &Potential::Zero, &cfg, &seeds).unwrap();
        let t_end = cfg.t_end();
        for (i, &y) in seeds.seeds().iter().enumerate() {
            let x_end = run.bundle.x[i].last().unwrap();
            assert_abs_diff_eq!(*x_end, y + t_end * k, epsilon = 1e-8);
            assert_abs_diff_eq!(*run.bundle.p[i].last().unwrap(), k, epsilon = 1e-8);
        }
    }

    #[test]
    fn symmetric_seed_is_a_fixed_point() {
        let grid = Grid::new(-2.0, 5.0, 1024).unwrap();
        let eps = 1e-2;
        let data = WkbInitialData::new(
            Amplitude::Gaussian { center: 0.5, width: 25.0 },
            Phase::LogCosh { alpha: 5.0, beta: 2.5 },
        );
        let f0 = init_state(grid, &data, eps).unwrap();
        let cfg = SolverConfig::new(eps, 2e-4, 1500, 100).unwrap();
        let seeds = SeedSet::new(vec![0.3, 0.5, 0.7], vec![1.0, 1.0, 1.0]).unwrap();
        let run = run_bohmian(&f0, &Potential::Zero, &cfg, &seeds).unwrap();
        for &x in &run.bundle.x[1] {
            assert!((x - 0.5).abs() <= 1e-6, "center trajectory drifted to {x}");
        }
    }

    #[test]
    fn pushforward_at_time_zero() {
        let grid = Grid::new(-2.0, 5.0, 1024).unwrap();
        let eps = 1e-2;
        let data = WkbInitialData::new(Amplitude::Gaussian { center: 0.5, width: 25.0 }, Phase::Zero);
        let f0 = init_state(grid, &data, eps).unwrap();
        let seeds = SeedSet::uniform_from_field(&f0, -0.03, 1.03, 400).unwrap();
        let cfg = SolverConfig::new(eps, 1e-3, 0, 1).unwrap();
        let run = run_bohmian(&f0, &Potential::Zero, &cfg, &seeds).unwrap();

        let (lhs, rhs) = pushforward_check(&run.bundle, &run.snapshots[0], TestFunction::One).unwrap();
        let m = crate::solver::mass(&f0);
        assert!((lhs - m).abs() <= 1e-10 * m);
        assert!((lhs - rhs).abs() <= 1e-3 * m, "lhs {lhs} rhs {rhs}");

        let (lhs, rhs) =
            pushforward_check(&run.bundle, &run.snapshots[0], TestFunction::Coordinate).unwrap();
        assert!((lhs / m - 0.5).abs() <= 1e-2);
        assert!((lhs - rhs).abs() <= 1e-3 * m);
    }

    #[test]
    fn non_crossing_audit_cases() {
        let single = TrajectoryBundle {
            kind: BundleKind::Classical,
            times: vec![0.0, 1.0],
            seeds: vec![0.5],
            weights: vec![1.0],
            seed_spacing: None,
            x: vec![vec![0.5, 0.7]],
            p: vec![vec![0.0, 0.0]],
            jac: None,
        };
        assert_eq!(non_crossing_audit(&single), (true, None));

        let swapped = TrajectoryBundle {
            kind: BundleKind::Classical,
            times: vec![0.0, 1.0],
            seeds: vec![0.0, 1.0],
            weights: vec![1.0, 1.0],
            seed_spacing: None,
            x: vec![vec![0.0, 1.5], vec![1.0, 0.5]],
            p: vec![vec![0.0; 2]; 2],
            jac: None,
        };
        let (ok, first) = non_crossing_audit(&swapped);
        assert!(!ok);
        assert_eq!(first, Some((1, 0)));
    }

    #[test]
    fn deviation_of_identical_bundles_is_zero() {
        let b = TrajectoryBundle {
            kind: BundleKind::Bohmian { epsilon: 0.1 },
            times: vec![0.0, 0.5, 1.0],
            seeds: vec![0.0, 1.0],
            weights: vec![1.0, 1.0],
            seed_spacing: Some(1.0),
            x: vec![vec![0.0, 0.1, 0.2], vec![1.0, 1.1, 1.2]],
            p: vec![vec![0.2; 3]; 2],
            jac: None,
        };
        let mut c = b.clone();
        c.kind = BundleKind::Classical;
        assert_eq!(deviation_measure(&b, &c, 0.05, (0.0, 1.0)).unwrap(), 0.0);

        // mismatched meshes are rejected
        let mut shifted = c.clone();
        shifted.times[1] = 0.6;
        assert!(deviation_measure(&b, &shifted, 0.05, (0.0, 1.0)).is_err());
    }

    #[test]
    fn seed_set_validation() {
        assert!(SeedSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(SeedSet::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SeedSet::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        let s = SeedSet::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0; 4]).unwrap();
        assert_eq!(s.thin(2).seeds(), &[0.0, 2.0]);
    }
}
