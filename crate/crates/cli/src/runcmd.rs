//! The `run` and `sweep` commands: scenario execution, CSV export, built-in
//! audits and the machine-readable run summary.

use std::path::{Path, PathBuf};

use bohmsim_core::bohmian::{deviation_measure, non_crossing_audit, TrajectoryBundle};
use bohmsim_core::measures::{branch_set, limiting_bohmian_measure, limiting_wigner_measure};
use bohmsim_core::scenario::{
    deviation_windows, doubling_audit, run_scenario, ScenarioRun, ScenarioSpec,
};

use crate::config;
use crate::csvio::{num, write_kv, CsvWriter};
use crate::{CliError, CliResult};

/// Phase-space deviation threshold used by the built-in trend diagnostics.
const DEVIATION_DELTA: f64 = 0.05;
const ENERGY_DRIFT_BAR: f64 = 1e-7;
const DOUBLING_BAR: f64 = 1e-4;
const DOUBLING_THIN: usize = 4;
const MEASURE_SAMPLES: usize = 1_000_000;
const MEASURE_BINS: usize = 512;

pub struct RunSummary {
    pub audits: Vec<(String, bool, String)>,
    pub deviation: Option<(f64, f64)>,
}

impl RunSummary {
    pub fn audits_ok(&self) -> bool {
        self.audits.iter().all(|(_, ok, _)| *ok)
    }
}

pub fn run(spec: &ScenarioSpec, out_dir: &Path) -> CliResult<RunSummary> {
    let run = run_scenario(spec)?;
    if let Some(w) = &run.resolution_warning {
        eprintln!("warning: {w}");
    }
    write_bundle(out_dir.join("trajectories.csv"), &run.bohmian, false)?;
    write_bundle(out_dir.join("classical.csv"), &run.classical, true)?;
    write_conservation(out_dir, &run)?;
    write_caustic(out_dir, &run)?;
    if spec.outputs.density {
        write_density(out_dir, &run)?;
    }
    if spec.is_free() && spec.outputs.branches {
        write_branches(out_dir, spec, &run)?;
    }
    if spec.is_free() && spec.outputs.measures {
        write_measures(out_dir, spec, &run)?;
    }

    // built-in audits
    let mut audits = Vec::new();
    let (ordered, violation) = non_crossing_audit(&run.bohmian);
    audits.push((
        "non_crossing".to_string(),
        ordered,
        match violation {
            None => "row order preserved at every snapshot".to_string(),
            Some((t, i)) => format!("rows {i} and {} swapped at snapshot {t}", i + 1),
        },
    ));
    let energy_drift = run.energy_drift();
    audits.push((
        "energy_drift".to_string(),
        energy_drift <= ENERGY_DRIFT_BAR,
        format!("{energy_drift:.3e} vs {ENERGY_DRIFT_BAR:.0e}"),
    ));
    if spec.outputs.audit_doubling {
        let f0 = spec.initial_field()?;
        let diff = doubling_audit(spec, &f0, &run.bohmian, DOUBLING_THIN)?;
        audits.push((
            "time_step_doubling".to_string(),
            diff <= DOUBLING_BAR,
            format!("{diff:.3e} vs {DOUBLING_BAR:.0e}"),
        ));
    }

    // deviation diagnostics on caustic scenarios (best-effort: a coarse
    // snapshot mesh may leave the windows empty)
    let deviation = deviation_windows(&run.caustic, spec.t_end()).and_then(|(pre_w, post_w)| {
        let pre = deviation_measure(&run.bohmian, &run.classical, DEVIATION_DELTA, pre_w).ok()?;
        let post = deviation_measure(&run.bohmian, &run.classical, DEVIATION_DELTA, post_w).ok()?;
        Some((pre, post))
    });

    let mut pairs = vec![
        ("scenario".to_string(), spec.name.to_string()),
        ("epsilon".to_string(), num(spec.epsilon)),
        ("modes".to_string(), spec.modes.to_string()),
        ("tsteps".to_string(), spec.steps.to_string()),
        ("dt".to_string(), num(spec.dt)),
        ("stride".to_string(), spec.snapshot_stride.to_string()),
        ("seeds".to_string(), spec.seed_count.to_string()),
        ("t_end".to_string(), num(spec.t_end())),
        ("mass_drift".to_string(), format!("{:.6e}", run.mass_drift())),
        ("energy_drift".to_string(), format!("{energy_drift:.6e}")),
        ("caustic_t_star".to_string(), num(run.caustic.t_star)),
        ("caustic_x_star".to_string(), num(run.caustic.x_star)),
        ("caustic_y_star".to_string(), num(run.caustic.y_star)),
    ];
    if let Some((pre, post)) = deviation {
        pairs.push(("deviation_delta".to_string(), num(DEVIATION_DELTA)));
        pairs.push(("deviation_pre".to_string(), format!("{pre:.6}")));
        pairs.push(("deviation_post".to_string(), format!("{post:.6}")));
    }
    for (name, ok, detail) in &audits {
        pairs.push((format!("audit_{name}"), format!("{} ({detail})", verdict(*ok))));
    }
    write_kv(&out_dir.join("summary.txt"), &pairs)?;

    println!("run: {} (epsilon = {})", spec.name, spec.epsilon);
    println!("  wrote {}", out_dir.display());
    println!("  mass drift {:.3e}, energy drift {:.3e}", run.mass_drift(), energy_drift);
    if run.caustic.has_caustic() {
        println!(
            "  caustic onset T* = {:.4} at x* = {:.4} (y* = {:.4})",
            run.caustic.t_star, run.caustic.x_star, run.caustic.y_star
        );
    } else {
        println!("  no caustic inside the scanned window");
    }
    if let Some((pre, post)) = deviation {
        println!(
            "  deviation fraction (delta = {DEVIATION_DELTA}): pre-caustic {pre:.4}, post-caustic {post:.4}"
        );
    }
    for (name, ok, detail) in &audits {
        println!("AUDIT {name}: {} ({detail})", verdict(*ok));
    }

    Ok(RunSummary { audits, deviation })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_bundle(path: PathBuf, bundle: &TrajectoryBundle, with_jac: bool) -> CliResult<()> {
    let header: &[&str] = if with_jac {
        &["t", "seed_index", "y", "X", "P", "jac"]
    } else {
        &["t", "seed_index", "y", "X", "P"]
    };
    let mut w = CsvWriter::create(&path, header)?;
    for (k, &t) in bundle.times.iter().enumerate() {
        for i in 0..bundle.seed_count() {
            let mut row = vec![
                num(t),
                i.to_string(),
                num(bundle.seeds[i]),
                num(bundle.x[i][k]),
                num(bundle.p[i][k]),
            ];
            if with_jac {
                let jac = bundle.jac.as_ref().expect("classical bundle carries jacobians");
                row.push(num(jac[i][k]));
            }
            w.row(&row)?;
        }
    }
    w.finish()
}

fn write_conservation(dir: &Path, run: &ScenarioRun) -> CliResult<()> {
    let mut w = CsvWriter::create(
        &dir.join("conservation.csv"),
        &["t", "mass", "energy", "kinetic_transport", "kinetic_quantum"],
    )?;
    for row in &run.conservation {
        w.row(&[
            num(row.t),
            num(row.mass),
            num(row.energy),
            num(row.kinetic_transport),
            num(row.kinetic_quantum),
        ])?;
    }
    w.finish()
}

fn write_caustic(dir: &Path, run: &ScenarioRun) -> CliResult<()> {
    write_kv(
        &dir.join("caustic.txt"),
        &[
            ("t_star".to_string(), num(run.caustic.t_star)),
            ("x_star".to_string(), num(run.caustic.x_star)),
            ("y_star".to_string(), num(run.caustic.y_star)),
        ],
    )
}

fn write_density(dir: &Path, run: &ScenarioRun) -> CliResult<()> {
    let mut w = CsvWriter::create(&dir.join("density.csv"), &["t", "x", "rho"])?;
    for snap in &run.snapshots {
        let grid = snap.grid();
        for (j, v) in snap.values().iter().enumerate() {
            w.row(&[num(snap.time()), num(grid.node(j)), num(v.norm_sqr())])?;
        }
    }
    w.finish()
}

/// Probe points for the stationary-phase exports: around the caustic when
/// there is one, around the seed window otherwise.
fn probe_points(spec: &ScenarioSpec, run: &ScenarioRun) -> CliResult<(Vec<f64>, Vec<f64>)> {
    if run.caustic.has_caustic() {
        let t_star = run.caustic.t_star;
        let mut times = vec![0.5 * t_star];
        if 2.0 * t_star < spec.t_end() {
            times.push(2.0 * t_star);
        }
        let xs = [-0.1, -0.05, 0.0, 0.05, 0.1]
            .iter()
            .map(|d| run.caustic.x_star + d)
            .collect();
        Ok((times, xs))
    } else {
        let (lo, hi) = spec.seed_window()?;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let xs = [-0.5, -0.25, 0.0, 0.25, 0.5].iter().map(|d| mid + d * half).collect();
        Ok((vec![0.5 * spec.t_end()], xs))
    }
}

fn write_branches(dir: &Path, spec: &ScenarioSpec, run: &ScenarioRun) -> CliResult<()> {
    let a0 = spec.amplitude()?;
    let s0 = spec.phase();
    let (times, xs) = probe_points(spec, run)?;
    let mut w = CsvWriter::create(
        &dir.join("branches.csv"),
        &["t", "x", "j", "Y_j", "S_j", "amp_j", "m_minus"],
    )?;
    for &t in &times {
        for &x in &xs {
            // points too close to the caustic set are skipped
            let Ok(bs) = branch_set(t, x, &a0, &s0) else { continue };
            for (j, b) in bs.branches.iter().enumerate() {
                w.row(&[
                    num(t),
                    num(x),
                    j.to_string(),
                    num(b.y),
                    num(b.s),
                    num(b.amp.norm()),
                    b.m_minus.to_string(),
                ])?;
            }
        }
    }
    w.finish()
}

fn write_measures(dir: &Path, spec: &ScenarioSpec, run: &ScenarioRun) -> CliResult<()> {
    let a0 = spec.amplitude()?;
    let s0 = spec.phase();
    let (times, xs) = probe_points(spec, run)?;
    let (t, x) = (*times.last().unwrap(), xs[xs.len() / 2]);
    let mut w = CsvWriter::create(
        &dir.join("measures.csv"),
        &["t", "x", "source", "p_lo", "p_hi", "mass"],
    )?;
    if let Ok(bs) = branch_set(t, x, &a0, &s0) {
        let beta = limiting_bohmian_measure(&bs, MEASURE_SAMPLES, MEASURE_BINS)
            .map_err(CliError::from)?;
        for (i, &m) in beta.masses.iter().enumerate() {
            if m > 0.0 {
                w.row(&[
                    num(t),
                    num(x),
                    "bohmian".to_string(),
                    num(beta.bin_edges[i]),
                    num(beta.bin_edges[i + 1]),
                    num(m),
                ])?;
            }
        }
        for (p, m) in limiting_wigner_measure(&bs) {
            w.row(&[num(t), num(x), "wigner".to_string(), num(p), num(p), num(m)])?;
        }
    }
    w.finish()
}

pub fn sweep(args: &[String]) -> CliResult<bool> {
    let over = config::parse_flags(args)?;
    let epsilons = config::epsilon_list(&over)?;
    let (base_spec, out_dir) = config::build_spec(&over)?;

    let mut all_ok = true;
    let mut rows = Vec::new();
    for &eps in &epsilons {
        let mut spec = base_spec.clone();
        spec.epsilon = eps;
        spec.validate().map_err(CliError::from)?;
        let sub = out_dir.join(format!("eps_{}", num(eps)));
        let summary = run(&spec, &sub)?;
        all_ok &= summary.audits_ok();
        rows.push((eps, summary.deviation));
    }

    let mut w = CsvWriter::create(
        &out_dir.join("deviation.csv"),
        &["epsilon", "pre_fraction", "post_fraction"],
    )?;
    for (eps, dev) in &rows {
        match dev {
            Some((pre, post)) => w.row(&[num(*eps), format!("{pre:.6}"), format!("{post:.6}")])?,
            None => w.row(&[num(*eps), "nan".to_string(), "nan".to_string()])?,
        }
    }
    w.finish()?;

    let with_dev: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(eps, dev)| dev.map(|(pre, _)| (*eps, pre)))
        .collect();
    if with_dev.len() >= 2 {
        let mut sorted = with_dev.clone();
        sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let monotone = sorted.windows(2).all(|w| w[0].1 >= w[1].1);
        let desc: Vec<String> =
            sorted.iter().map(|(e, f)| format!("{f:.4} (eps = {e})")).collect();
        println!(
            "pre-caustic deviation across epsilon: {} -> {}",
            desc.join(" >= "),
            if monotone { "monotone decreasing" } else { "NOT monotone" }
        );
    }
    Ok(all_ok)
}
