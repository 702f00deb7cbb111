//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line. Run with `--nocapture --test-threads=1` for a readable
//! report; the expensive caustic-scenario run is shared between criteria.

use std::sync::OnceLock;
use std::time::Instant;

use bohmsim_core::bohmian::{
    deviation_measure, non_crossing_audit, pushforward_check, run_bohmian, SeedSet, TestFunction,
};
use bohmsim_core::classical::{caustic_onset, flow_ode};
use bohmsim_core::measures::{
    atoms_moment, branch_set, limiting_bohmian_measure, limiting_wigner_measure, multiphase_eval,
    oscillatory_integral_oracle, torus_histogram,
};
use bohmsim_core::potential::Potential;
use bohmsim_core::scenario::{doubling_audit, run_scenario, ScenarioName, ScenarioRun, ScenarioSpec};
use bohmsim_core::solver::{evolve, init_state, SolverConfig};
use bohmsim_core::spectral::Grid;
use bohmsim_core::wkb::{Amplitude, Phase, WkbInitialData};
use bohmsim_core::Complex64;

const DELTA: f64 = 0.05;
const PRE_WINDOW: (f64, f64) = (0.0, 0.15);
const POST_WINDOW: (f64, f64) = (0.3, 0.5);
/// Post-caustic deviation floor frozen from the first verified run
/// (measured fraction 0.92 at eps = 1e-3 on the window above).
const POST_DEVIATION_FLOOR: f64 = 0.8;
/// Momentum-oscillation regression frozen from the first verified run
/// (measured max-min 2.11 on the leftmost deflected trajectory).
const P_OSCILLATION_FLOOR: f64 = 0.5;

struct TimedRun {
    run: ScenarioRun,
    seconds: f64,
}

fn free_caustic() -> &'static TimedRun {
    static RUN: OnceLock<TimedRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let spec = ScenarioSpec::catalog(ScenarioName::FreeCaustic);
        let start = Instant::now();
        let run = run_scenario(&spec).expect("free_caustic run");
        TimedRun { run, seconds: start.elapsed().as_secs_f64() }
    })
}

fn caustic_amplitude() -> Amplitude {
    Amplitude::Gaussian { center: 0.5, width: 25.0 }
}

fn caustic_phase() -> Phase {
    Phase::LogCosh { alpha: 5.0, beta: 2.5 }
}

fn criterion(number: u32, name: &str, checks: Vec<(String, bool)>) {
    let pass = checks.iter().all(|(_, ok)| *ok);
    let detail: Vec<String> = checks
        .iter()
        .map(|(msg, ok)| format!("{}{}", if *ok { "" } else { "FAILED: " }, msg))
        .collect();
    println!(
        "ACCEPTANCE {number} ({name}): {} [{}]",
        if pass { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    assert!(pass, "criterion {number} ({name}) failed: {}", detail.join("; "));
}

#[test]
fn acceptance_1_conservation_bars() {
    let timed = free_caustic();
    let mass = timed.run.mass_drift();
    let energy = timed.run.energy_drift();
    criterion(
        1,
        "conservation bars",
        vec![
            (format!("relative energy drift {energy:.2e} <= 1e-7"), energy <= 1e-7),
            (format!("relative mass drift {mass:.2e} <= 1e-10"), mass <= 1e-10),
            (
                format!("runtime {:.1} s <= 120 s at n = 2^12, N_t = 1e4", timed.seconds),
                timed.seconds <= 120.0,
            ),
        ],
    );
}

#[test]
fn acceptance_2_time_step_doubling() {
    let timed = free_caustic();
    let spec = &timed.run.spec;
    let f0 = spec.initial_field().expect("initial field");
    let diff = doubling_audit(spec, &f0, &timed.run.bohmian, 4).expect("doubled run");
    criterion(
        2,
        "time-step doubling",
        vec![(format!("N_t vs 2 N_t trajectory difference {diff:.2e} <= 1e-4"), diff <= 1e-4)],
    );
}

#[test]
fn acceptance_3_solver_vs_oracle_and_order() {
    // free evolution against the oscillatory-integral quadrature at
    // 20 sampled (t, x), eps = 1e-2
    let eps = 1e-2;
    let grid = Grid::new(-2.0, 5.0, 1 << 11).unwrap();
    let data = WkbInitialData::new(caustic_amplitude(), caustic_phase());
    let f0 = init_state(grid, &data, eps).unwrap();
    let cfg = SolverConfig::new(eps, 1.2e-3, 400, 100).unwrap();
    let snaps = evolve(&f0, &Potential::Zero, &cfg).unwrap();
    let mut worst = 0.0f64;
    for snap in snaps.iter().skip(1) {
        for &x in &[0.3, 0.4, 0.5, 0.6, 0.7] {
            let spectral = snap.eval_at(x);
            let integral =
                oscillatory_integral_oracle(snap.time(), x, eps, &caustic_amplitude(), &caustic_phase())
                    .unwrap();
            worst = worst.max((spectral - integral).norm());
        }
    }

    // second-order self-convergence on the harmonic scenario
    let eps_h = 0.1;
    let grid_h = Grid::new(-2.0, 5.0, 512).unwrap();
    let v = Potential::harmonic(0.5, 1.0);
    let data_h = WkbInitialData::new(caustic_amplitude(), Phase::Zero);
    let f0_h = init_state(grid_h, &data_h, eps_h).unwrap();
    let t_end = 0.5;
    let run = |steps: usize| {
        let cfg = SolverConfig::new(eps_h, t_end / steps as f64, steps, steps).unwrap();
        evolve(&f0_h, &v, &cfg).unwrap().pop().unwrap()
    };
    let reference = run(3200);
    let l2 = |f: &bohmsim_core::spectral::Field| {
        f.values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let ratio = l2(&run(400)) / l2(&run(800));

    criterion(
        3,
        "solver vs oracle",
        vec![
            (format!("max |evolve - oracle| {worst:.2e} <= 1e-4 at 20 points"), worst <= 1e-4),
            (format!("Strang dt-halving error ratio {ratio:.2} in [3.2, 4.8]"), (3.2..=4.8).contains(&ratio)),
        ],
    );
}

#[test]
fn acceptance_4_closed_form_exactness() {
    // vortex scenario against the eigenstate superposition at t = pi/4
    let spec = ScenarioSpec::catalog(ScenarioName::Vortex);
    let grid = spec.grid().unwrap();
    let f0 = spec.initial_field().unwrap();
    let quarter = std::f64::consts::FRAC_PI_4;
    let steps_to_quarter = 1250; // pi/4 at the catalog step size 2 pi / 1e4
    let cfg = SolverConfig::new(
        spec.epsilon,
        spec.dt,
        steps_to_quarter,
        steps_to_quarter,
    )
    .unwrap();
    let snap = evolve(&f0, &spec.potential(), &cfg).unwrap().pop().unwrap();
    assert!((snap.time() - quarter).abs() < 1e-9);
    let mut vortex_err = 0.0f64;
    for (j, v) in snap.values().iter().enumerate() {
        let x = grid.node(j);
        let exact = (Complex64::new(1.0, 0.0)
            + (1.0 - 2.0 * x * x) * Complex64::new(0.0, -2.0 * quarter).exp())
            * Complex64::new(-x * x / 2.0, -quarter / 2.0).exp();
        vortex_err = vortex_err.max((v - exact).norm());
    }

    // harmonic rays against 1/2 + (y - 1/2) cos t
    let v = Potential::harmonic(0.5, 1.0);
    let mut ray_err = 0.0f64;
    for &y in &[0.1, 0.35, 0.8] {
        for &t in &[0.4, 1.0, 1.5] {
            let s = flow_ode(t, y, &Phase::Zero, &v, 1e-3).unwrap();
            ray_err = ray_err.max((s.x - (0.5 + (y - 0.5) * t.cos())).abs());
        }
    }

    // caustic onsets
    let logcosh = caustic_onset(&caustic_phase(), &Potential::Zero, (-1.0, 2.0), (0.0, 1.0)).unwrap();
    let harmonic = caustic_onset(&Phase::Zero, &v, (-0.03, 1.03), (0.0, 2.0)).unwrap();
    let t_log = (logcosh.t_star - 0.2).abs();
    let t_har = (harmonic.t_star - std::f64::consts::FRAC_PI_2).abs();

    criterion(
        4,
        "closed-form exactness",
        vec![
            (format!("vortex superposition max error {vortex_err:.2e} <= 1e-6"), vortex_err <= 1e-6),
            (format!("harmonic ray max error {ray_err:.2e} <= 1e-8"), ray_err <= 1e-8),
            (format!("log-cosh onset |T* - 0.2| = {t_log:.2e} <= 1e-3"), t_log <= 1e-3),
            (format!("harmonic onset |T* - pi/2| = {t_har:.2e} <= 1e-3"), t_har <= 1e-3),
        ],
    );
}

#[test]
fn acceptance_5_stationary_phase_validation() {
    let eps = 1e-3;
    let a0 = caustic_amplitude();
    let s0 = caustic_phase();

    // one branch before the caustic
    let bs = branch_set(0.1, 0.6, &a0, &s0).unwrap();
    let exact = oscillatory_integral_oracle(0.1, 0.6, eps, &a0, &s0).unwrap();
    let pre_rel = (multiphase_eval(&bs, eps) - exact).norm() / exact.norm();
    let pre_branches = bs.branches.len();

    // three branches after the caustic, x near 0.5
    let mut post_rel = 0.0f64;
    let mut post_branches_ok = true;
    for &x in &[0.45, 0.5, 0.55] {
        let bs = branch_set(0.4, x, &a0, &s0).unwrap();
        post_branches_ok &= bs.branches.len() == 3;
        let exact = oscillatory_integral_oracle(0.4, x, eps, &a0, &s0).unwrap();
        post_rel = post_rel.max((multiphase_eval(&bs, eps) - exact).norm() / exact.norm());
    }

    // negative control: flipping the middle branch's phase correction must
    // break the agreement
    let mut flipped = branch_set(0.4, 0.5, &a0, &s0).unwrap();
    flipped.branches[1].m_minus = 3;
    let exact = oscillatory_integral_oracle(0.4, 0.5, eps, &a0, &s0).unwrap();
    let flipped_rel = (multiphase_eval(&flipped, eps) - exact).norm() / exact.norm();

    criterion(
        5,
        "stationary-phase validation",
        vec![
            (
                format!("pre-caustic ({pre_branches} branch) rel error {pre_rel:.3} <= 0.05"),
                pre_rel <= 0.05 && pre_branches == 1,
            ),
            (format!("post-caustic (3 branches) rel error {post_rel:.3} <= 0.05"), post_rel <= 0.05 && post_branches_ok),
            (format!("flipped Maslov control rel error {flipped_rel:.3} > 0.05"), flipped_rel > 0.05),
        ],
    );
}

#[test]
fn acceptance_6_limiting_measures() {
    let samples = 1_000_000;
    let tol = 3.0 / (samples as f64).sqrt();

    // moments of orders 0 and 1 agree between the Bohmian histogram and the
    // Wigner atoms
    let b = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
    let grads = [0.0, 1.0];
    let h = torus_histogram(&b, &grads, samples, 4096, 0).unwrap();
    let atoms: Vec<(f64, f64)> = grads.iter().zip(&b).map(|(&g, bb)| (g, bb.norm_sqr())).collect();
    let d0 = (h.moment(0) - atoms_moment(&atoms, 0)).abs();
    let d1 = (h.moment(1) - atoms_moment(&atoms, 1)).abs();

    // the equal-amplitude pair concentrates the Bohmian measure at p = 1/2
    // while the Wigner measure keeps two atoms: second moments 1/2 vs 1
    let bs = bohmsim_core::measures::BranchSet {
        t: 0.4,
        x: 0.5,
        branches: vec![
            bohmsim_core::measures::Branch {
                y: 0.0,
                s: 0.0,
                amp: Complex64::new(1.0, 0.0),
                m_minus: 0,
                grad_s: 0.0,
            },
            bohmsim_core::measures::Branch {
                y: 1.0,
                s: 0.3,
                amp: Complex64::new(1.0, 0.0),
                m_minus: 1,
                grad_s: 1.0,
            },
        ],
    };
    let beta = limiting_bohmian_measure(&bs, samples, 4096).unwrap();
    let w = limiting_wigner_measure(&bs);
    let conc = beta.max_two_bin_fraction();
    let beta_m2 = beta.moment(2);
    let w_m2 = atoms_moment(&w, 2);

    criterion(
        6,
        "limiting measures",
        vec![
            (format!("moment-0 difference {d0:.2e} <= {tol:.1e}"), d0 <= tol),
            (format!("moment-1 difference {d1:.2e} <= {tol:.1e}"), d1 <= tol),
            (format!("equal-amplitude concentration {conc:.4} >= 0.99"), conc >= 0.99),
            (
                format!("second moments: bohmian {beta_m2:.3} vs wigner {w_m2:.3} (1/2 vs 1)"),
                (beta_m2 - 0.5).abs() <= 0.01 && (w_m2 - 1.0).abs() <= 1e-12,
            ),
        ],
    );
}

#[test]
fn acceptance_7_trajectory_theorems_as_trends() {
    let shared = free_caustic();
    let mut fractions = Vec::new();
    let mut crossing_ok = true;

    // eps = 1e-1 and 1e-2 variants of the caustic scenario (mode count and
    // step count scaled with the oscillation scale)
    for (eps, modes, steps) in [(1e-1, 1 << 10, 2500usize), (1e-2, 1 << 11, 5000)] {
        let mut spec = ScenarioSpec::catalog(ScenarioName::FreeCaustic);
        spec.epsilon = eps;
        spec.modes = modes;
        spec.steps = steps;
        spec.dt = 0.6 / steps as f64;
        spec.snapshot_stride = steps / 200;
        let run = run_scenario(&spec).unwrap();
        crossing_ok &= non_crossing_audit(&run.bohmian).0;
        fractions.push(deviation_measure(&run.bohmian, &run.classical, DELTA, PRE_WINDOW).unwrap());
    }
    fractions
        .push(deviation_measure(&shared.run.bohmian, &shared.run.classical, DELTA, PRE_WINDOW).unwrap());
    crossing_ok &= non_crossing_audit(&shared.run.bohmian).0;
    let strictly_decreasing = fractions[0] > fractions[1] && fractions[1] > fractions[2];

    let post =
        deviation_measure(&shared.run.bohmian, &shared.run.classical, DELTA, POST_WINDOW).unwrap();

    // momentum oscillations along the leftmost deflected trajectory
    let bundle = &shared.run.bohmian;
    let (mut plo, mut phi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &t) in bundle.times.iter().enumerate() {
        if t > 0.25 {
            plo = plo.min(bundle.p[0][k]);
            phi = phi.max(bundle.p[0][k]);
        }
    }
    let p_range = phi - plo;

    // symmetric scenario: the trajectory seeded at 1/2 stays at 1/2
    let spec = &shared.run.spec;
    let f0 = spec.initial_field().unwrap();
    let seeds = SeedSet::new(vec![0.3, 0.5, 0.7], vec![1.0, 1.0, 1.0]).unwrap();
    let center_run = run_bohmian(&f0, &Potential::Zero, &spec.solver_config().unwrap(), &seeds).unwrap();
    crossing_ok &= non_crossing_audit(&center_run.bundle).0;
    let center_dev = center_run.bundle.x[1]
        .iter()
        .map(|x| (x - 0.5).abs())
        .fold(0.0, f64::max);

    criterion(
        7,
        "trajectory theorems as trends",
        vec![
            (
                format!(
                    "pre-caustic deviation strictly decreases over eps = 1e-1, 1e-2, 1e-3: {:.4} > {:.4} > {:.4}",
                    fractions[0], fractions[1], fractions[2]
                ),
                strictly_decreasing,
            ),
            (
                format!("post-caustic deviation {post:.3} >= {POST_DEVIATION_FLOOR}"),
                post >= POST_DEVIATION_FLOOR,
            ),
            (
                format!("momentum oscillation range {p_range:.2} > {P_OSCILLATION_FLOOR} after deflection"),
                p_range > P_OSCILLATION_FLOOR,
            ),
            ("non-crossing audit passes on every bundle".to_string(), crossing_ok),
            (format!("central trajectory deviation {center_dev:.2e} <= 1e-6"), center_dev <= 1e-6),
        ],
    );
}

#[test]
fn acceptance_8_pushforward_identity() {
    // eps = 1e-2 caustic scenario with 400 seeds, checked at t = 0.4
    let mut spec = ScenarioSpec::catalog(ScenarioName::FreeCaustic);
    spec.epsilon = 1e-2;
    spec.modes = 1 << 11;
    spec.steps = 2000;
    spec.dt = 2e-4;
    spec.snapshot_stride = 250;
    spec.seed_count = 400;
    let f0 = spec.initial_field().unwrap();
    let seeds = spec.seed_set(&f0).unwrap();
    let run = run_bohmian(&f0, &spec.potential(), &spec.solver_config().unwrap(), &seeds).unwrap();
    let snap = run
        .snapshots
        .iter()
        .find(|f| (f.time() - 0.4).abs() < 1e-9)
        .expect("snapshot at t = 0.4");
    let mass = bohmsim_core::solver::mass(&f0);

    let mut checks = Vec::new();
    for (name, sigma) in [
        ("sigma = 1", TestFunction::One),
        ("sigma = x", TestFunction::Coordinate),
        ("sigma = smoothed indicator", TestFunction::SmoothedIndicator { threshold: 0.5, width: 0.1 }),
    ] {
        let (lhs, rhs) = pushforward_check(&run.bundle, snap, sigma).unwrap();
        let rel = (lhs - rhs).abs() / mass;
        checks.push((format!("{name}: |lhs - rhs|/mass = {rel:.2e} <= 2e-2"), rel <= 2e-2));
    }
    criterion(8, "push-forward identity", checks);
}
