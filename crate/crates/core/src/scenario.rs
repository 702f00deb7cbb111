//! Catalog of runnable case studies and the orchestration that co-evolves
//! fields, Bohmian trajectories, classical rays, conserved quantities and
//! the caustic scan for one scenario.

use std::fmt;
use std::str::FromStr;

use crate::bohmian::{run_bohmian, BundleKind, SeedSet, TrajectoryBundle};
use crate::classical::{caustic_onset, flow_free, flow_path, CausticReport};
use crate::potential::Potential;
use crate::solver::{energy, init_state, kinetic_split, mass, resolution_warning, SolverConfig};
use crate::spectral::{Field, Grid};
use crate::wkb::{Amplitude, Phase, WkbInitialData};
use crate::{CoreError, Result};

pub const SUPPORT_THRESHOLD: f64 = 1e-3;
/// Fixed step for classical ray integration.
pub const RAY_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Vortex,
    Wavepacket,
    HarmonicFocus,
    FreeCaustic,
    FreePlane,
    Rarefaction,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::Vortex,
        ScenarioName::Wavepacket,
        ScenarioName::HarmonicFocus,
        ScenarioName::FreeCaustic,
        ScenarioName::FreePlane,
        ScenarioName::Rarefaction,
    ];
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioName::Vortex => "vortex",
            ScenarioName::Wavepacket => "wavepacket",
            ScenarioName::HarmonicFocus => "harmonic_focus",
            ScenarioName::FreeCaustic => "free_caustic",
            ScenarioName::FreePlane => "free_plane",
            ScenarioName::Rarefaction => "rarefaction",
        };
        f.write_str(s)
    }
}

impl FromStr for ScenarioName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vortex" => Ok(ScenarioName::Vortex),
            "wavepacket" => Ok(ScenarioName::Wavepacket),
            "harmonic_focus" => Ok(ScenarioName::HarmonicFocus),
            "free_caustic" => Ok(ScenarioName::FreeCaustic),
            "free_plane" => Ok(ScenarioName::FreePlane),
            "rarefaction" => Ok(ScenarioName::Rarefaction),
            other => Err(CoreError::Invalid(format!(
                "unknown scenario '{other}' (expected one of vortex, wavepacket, harmonic_focus, free_caustic, free_plane, rarefaction)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedPlacement {
    /// Uniform over the interval where `a0 >= 1e-3 * max a0`.
    AmplitudeSupport,
    Window { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFlags {
    pub density: bool,
    pub branches: bool,
    pub measures: bool,
    pub audit_doubling: bool,
}

impl Default for OutputFlags {
    fn default() -> Self {
        OutputFlags { density: true, branches: true, measures: true, audit_doubling: true }
    }
}

/// Fully-resolved run parameters for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub epsilon: f64,
    pub x0: f64,
    pub length: f64,
    pub modes: usize,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
    pub seed_count: usize,
    pub seed_placement: SeedPlacement,
    pub outputs: OutputFlags,
}

impl ScenarioSpec {
    /// Catalog defaults. Domains are chosen so that the field stays below
    /// rounding level at the boundary over the whole run: `[-2, 3]` for the
    /// free and harmonic scenarios, `[-8, 8]` for the vortex case.
    pub fn catalog(name: ScenarioName) -> ScenarioSpec {
        use std::f64::consts::PI;
        match name {
            ScenarioName::Vortex => ScenarioSpec {
                name,
                epsilon: 1.0,
                x0: -8.0,
                length: 16.0,
                modes: 1 << 10,
                dt: 2.0 * PI / 10_000.0,
                steps: 10_000,
                snapshot_stride: 125,
                seed_count: 25,
                seed_placement: SeedPlacement::Window { lo: -3.0, hi: 3.0 },
                outputs: OutputFlags::default(),
            },
            ScenarioName::Wavepacket => ScenarioSpec {
                name,
                epsilon: 1e-3,
                x0: -2.0,
                length: 5.0,
                modes: 1 << 11,
                dt: 1e-4,
                steps: 10_000,
                snapshot_stride: 100,
                seed_count: 25,
                seed_placement: SeedPlacement::AmplitudeSupport,
                outputs: OutputFlags::default(),
            },
            ScenarioName::HarmonicFocus => ScenarioSpec {
                name,
                epsilon: 1e-3,
                x0: -2.0,
                length: 5.0,
                modes: 1 << 12,
                dt: PI / 10_000.0,
                steps: 10_000,
                snapshot_stride: 100,
                seed_count: 25,
                seed_placement: SeedPlacement::AmplitudeSupport,
                outputs: OutputFlags::default(),
            },
            ScenarioName::FreeCaustic => ScenarioSpec {
                name,
                epsilon: 1e-3,
                x0: -2.0,
                length: 5.0,
                modes: 1 << 12,
                dt: 6e-5,
                steps: 10_000,
                snapshot_stride: 50,
                seed_count: 40,
                seed_placement: SeedPlacement::AmplitudeSupport,
                outputs: OutputFlags::default(),
            },
            ScenarioName::FreePlane => ScenarioSpec {
                name,
                epsilon: 1e-2,
                x0: -2.0,
                length: 5.0,
                modes: 1 << 11,
                dt: 1e-4,
                steps: 5_000,
                snapshot_stride: 50,
                seed_count: 25,
                seed_placement: SeedPlacement::Window { lo: 0.0, hi: 1.0 },
                outputs: OutputFlags::default(),
            },
            ScenarioName::Rarefaction => ScenarioSpec {
                name,
                epsilon: 1e-2,
                x0: -2.0,
                length: 5.0,
                modes: 1 << 11,
                dt: 1e-4,
                steps: 5_000,
                snapshot_stride: 50,
                seed_count: 25,
                seed_placement: SeedPlacement::AmplitudeSupport,
                outputs: OutputFlags::default(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(CoreError::BadConfig(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.seed_count == 0 {
            return Err(CoreError::BadConfig("seed count must be positive".into()));
        }
        self.grid()?;
        self.solver_config()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.x0, self.length, self.modes)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        SolverConfig::new(self.epsilon, self.dt, self.steps, self.snapshot_stride)
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn potential(&self) -> Potential {
        match self.name {
            ScenarioName::Vortex => Potential::harmonic(0.0, 1.0),
            ScenarioName::HarmonicFocus => Potential::harmonic(0.5, 1.0),
            _ => Potential::Zero,
        }
    }

    pub fn is_free(&self) -> bool {
        self.potential().is_zero()
    }

    /// Initial phase `S0` (also the seed momentum of the classical flow).
    pub fn phase(&self) -> Phase {
        match self.name {
            ScenarioName::FreeCaustic => Phase::LogCosh { alpha: 5.0, beta: 2.5 },
            ScenarioName::FreePlane => Phase::Plane { k: self.snapped_plane_k() },
            ScenarioName::Rarefaction => Phase::Quadratic { s: 1.0 },
            _ => Phase::Zero,
        }
    }

    /// The plane-wave momentum closest to 1 that keeps `exp(i k x / eps)`
    /// periodic on the computational domain.
    pub fn snapped_plane_k(&self) -> f64 {
        let target = 1.0;
        let unit = std::f64::consts::TAU * self.epsilon / self.length;
        (target / unit).round() * unit
    }

    /// Initial amplitude `a0`; the vortex profile is tabulated on the grid.
    pub fn amplitude(&self) -> Result<Amplitude> {
        match self.name {
            ScenarioName::Vortex => {
                let grid = self.grid()?;
                let values = grid
                    .nodes()
                    .iter()
                    .map(|&x| (2.0 - 2.0 * x * x) * (-x * x / 2.0).exp())
                    .collect();
                Amplitude::table(grid, values)
            }
            ScenarioName::Wavepacket => Ok(Amplitude::Gaussian { center: 0.5, width: 1.0 }),
            ScenarioName::FreePlane => Ok(Amplitude::Constant(1.0)),
            _ => Ok(Amplitude::Gaussian { center: 0.5, width: 25.0 }),
        }
    }

    pub fn initial_data(&self) -> Result<WkbInitialData> {
        let amplitude = self.amplitude()?;
        let phase = self.phase();
        Ok(if matches!(self.name, ScenarioName::Wavepacket) {
            WkbInitialData::wavepacket(amplitude, phase)
        } else {
            WkbInitialData::new(amplitude, phase)
        })
    }

    pub fn initial_field(&self) -> Result<Field> {
        init_state(self.grid()?, &self.initial_data()?, self.epsilon)
    }

    pub fn seed_window(&self) -> Result<(f64, f64)> {
        match self.seed_placement {
            SeedPlacement::Window { lo, hi } => Ok((lo, hi)),
            SeedPlacement::AmplitudeSupport => self
                .initial_data()?
                .support_window(self.epsilon, SUPPORT_THRESHOLD)
                .ok_or_else(|| {
                    CoreError::Invalid(
                        "amplitude has no finite support; configure an explicit seed window"
                            .into(),
                    )
                }),
        }
    }

    pub fn seed_set(&self, f0: &Field) -> Result<SeedSet> {
        let (lo, hi) = self.seed_window()?;
        SeedSet::uniform_from_field(f0, lo, hi, self.seed_count)
    }
}

/// Classical ray bundle over the same seeds and snapshot times as a Bohmian
/// run; rows carry `(X, P)` and the Jacobian.
pub fn classical_bundle(
    spec: &ScenarioSpec,
    seeds: &SeedSet,
    times: &[f64],
) -> Result<TrajectoryBundle> {
    let s0 = spec.phase();
    let v = spec.potential();
    let m = seeds.len();
    let mut x = vec![Vec::with_capacity(times.len()); m];
    let mut p = vec![Vec::with_capacity(times.len()); m];
    let mut jac = vec![Vec::with_capacity(times.len()); m];
    for (i, &y) in seeds.seeds().iter().enumerate() {
        if v.is_zero() {
            for &t in times {
                let s = flow_free(t, y, &s0);
                x[i].push(s.x);
                p[i].push(s.p);
                jac[i].push(s.jac);
            }
        } else {
            for (s, _) in flow_path(y, &s0, &v, times, RAY_DT)? {
                x[i].push(s.x);
                p[i].push(s.p);
                jac[i].push(s.jac);
            }
        }
    }
    Ok(TrajectoryBundle {
        kind: BundleKind::Classical,
        times: times.to_vec(),
        seeds: seeds.seeds().to_vec(),
        weights: seeds.weights().to_vec(),
        seed_spacing: seeds.spacing(),
        x,
        p,
        jac: Some(jac),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ConservationRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub kinetic_transport: f64,
    pub kinetic_quantum: f64,
}

/// Everything one scenario run produces, ready for export.
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub bohmian: TrajectoryBundle,
    pub snapshots: Vec<Field>,
    pub classical: TrajectoryBundle,
    pub conservation: Vec<ConservationRow>,
    pub caustic: CausticReport,
    pub resolution_warning: Option<String>,
}

impl ScenarioRun {
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.conservation.iter().map(|r| r.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.conservation.iter().map(|r| r.energy))
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let scale = max.abs().max(min.abs()).max(f64::MIN_POSITIVE);
    (max - min) / scale
}

/// Runs one scenario: field plus Bohmian trajectories, the matching classical
/// bundle, conserved quantities per snapshot and the caustic scan.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun> {
    spec.validate()?;
    let f0 = spec.initial_field()?;
    let warning = resolution_warning(&f0);
    let seeds = spec.seed_set(&f0)?;
    let cfg = spec.solver_config()?;
    let v = spec.potential();

    let run = run_bohmian(&f0, &v, &cfg, &seeds)?;
    let classical = classical_bundle(spec, &seeds, &run.bundle.times)?;

    let conservation = run
        .snapshots
        .iter()
        .map(|f| {
            let (kt, kq) = kinetic_split(f, spec.epsilon);
            ConservationRow {
                t: f.time(),
                mass: mass(f),
                energy: energy(f, &v, spec.epsilon),
                kinetic_transport: kt,
                kinetic_quantum: kq,
            }
        })
        .collect();

    let (ylo, yhi) = spec.seed_window()?;
    let pad = 0.1 * (yhi - ylo);
    let caustic = caustic_onset(
        &spec.phase(),
        &v,
        (ylo - pad, yhi + pad),
        (0.0, spec.t_end()),
    )?;

    Ok(ScenarioRun {
        spec: spec.clone(),
        bohmian: run.bundle,
        snapshots: run.snapshots,
        classical,
        conservation,
        caustic,
        resolution_warning: warning,
    })
}

/// Re-runs a thinned subset of the bundle's seeds with `2 N_t` time steps and
/// returns the largest trajectory difference at the common snapshot times.
/// The thinned rows of the original bundle are exact restrictions because
/// trajectories do not interact.
pub fn doubling_audit(
    spec: &ScenarioSpec,
    f0: &Field,
    base: &TrajectoryBundle,
    thin: usize,
) -> Result<f64> {
    let thin = thin.max(1);
    let seeds: Vec<f64> = base.seeds.iter().step_by(thin).copied().collect();
    let weights: Vec<f64> = base.weights.iter().step_by(thin).copied().collect();
    let subset = SeedSet::new(seeds, weights)?;
    let cfg = SolverConfig::new(
        spec.epsilon,
        spec.dt / 2.0,
        spec.steps * 2,
        spec.snapshot_stride * 2,
    )?;
    let doubled = run_bohmian(f0, &spec.potential(), &cfg, &subset)?;
    if doubled.bundle.time_count() != base.time_count() {
        return Err(CoreError::MismatchedMesh("doubled run produced a different snapshot mesh".into()));
    }
    let mut max_diff = 0.0f64;
    for (i, row) in doubled.bundle.x.iter().enumerate() {
        let base_row = &base.x[i * thin];
        for (xa, xb) in row.iter().zip(base_row) {
            max_diff = max_diff.max((xa - xb).abs());
        }
    }
    Ok(max_diff)
}

/// Pre- and post-caustic deviation windows derived from the onset time:
/// `[0, 0.75 T*]` and `[1.5 T*, min(2.5 T*, t_end)]`.
pub fn deviation_windows(caustic: &CausticReport, t_end: f64) -> Option<((f64, f64), (f64, f64))> {
    if !caustic.has_caustic() {
        return None;
    }
    let t = caustic.t_star;
    let pre = (0.0, 0.75 * t);
    let post = (1.5 * t, (2.5 * t).min(t_end));
    (post.1 > post.0).then_some((pre, post))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trips_names() {
        for name in ScenarioName::ALL {
            let spec = ScenarioSpec::catalog(name);
            assert_eq!(spec.name, name);
            spec.validate().unwrap();
            let parsed: ScenarioName = name.to_string().parse().unwrap();
            assert_eq!(parsed, name);
        }
        assert!("no_such".parse::<ScenarioName>().is_err());
    }

    #[test]
    fn free_plane_momentum_is_on_the_lattice() {
        let spec = ScenarioSpec::catalog(ScenarioName::FreePlane);
        let k = spec.snapped_plane_k();
        let unit = std::f64::consts::TAU * spec.epsilon / spec.length;
        let m = k / unit;
        assert!((m - m.round()).abs() < 1e-9);
        assert!((k - 1.0).abs() < 0.01, "snapped momentum {k}");
    }

    #[test]
    fn seed_windows_track_the_amplitude_support() {
        let spec = ScenarioSpec::catalog(ScenarioName::FreeCaustic);
        let (lo, hi) = spec.seed_window().unwrap();
        let r = (1000.0f64.ln() / 25.0).sqrt();
        assert!((lo - (0.5 - r)).abs() < 1e-12);
        assert!((hi - (0.5 + r)).abs() < 1e-12);

        // wavepacket support scales with sqrt(eps)
        let wp = ScenarioSpec::catalog(ScenarioName::Wavepacket);
        let (lo, hi) = wp.seed_window().unwrap();
        let r = (1000.0f64.ln()).sqrt() * wp.epsilon.sqrt();
        assert!((hi - lo - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn vortex_initial_state_is_the_eigenstate_superposition() {
        let spec = ScenarioSpec::catalog(ScenarioName::Vortex);
        let f0 = spec.initial_field().unwrap();
        let grid = spec.grid().unwrap();
        for j in [100usize, 256, 512, 600, 800] {
            let x = grid.node(j);
            let expect = (2.0 - 2.0 * x * x) * (-x * x / 2.0).exp();
            assert!((f0.values()[j].re - expect).abs() <= 1e-10);
            assert!(f0.values()[j].im.abs() <= 1e-12);
        }
    }
}
