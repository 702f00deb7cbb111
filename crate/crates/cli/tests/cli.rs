//! End-to-end tests of the `bohmsim` binary: exit codes, config precedence,
//! output schemas, determinism and the sweep/report pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn bohmsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bohmsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("bohmsim-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// A caustic-scenario run small enough for tests.
const SMALL_RUN: &[&str] = &[
    "run",
    "--scenario",
    "free_caustic",
    "--epsilon",
    "1e-1",
    "--modes",
    "512",
    "--tsteps",
    "300",
    "--dt",
    "2e-3",
    "--seeds",
    "6",
];

#[test]
fn run_writes_every_output_file_and_passes_audits() {
    let dir = tmpdir("run");
    let out = bohmsim(&dir, &[SMALL_RUN, &["--out", "r"]].concat());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("AUDIT non_crossing: PASS"));
    assert!(stdout.contains("AUDIT energy_drift: PASS"));
    assert!(stdout.contains("AUDIT time_step_doubling: PASS"));
    for file in [
        "trajectories.csv",
        "classical.csv",
        "conservation.csv",
        "density.csv",
        "branches.csv",
        "measures.csv",
        "caustic.txt",
        "summary.txt",
    ] {
        assert!(dir.join("r").join(file).is_file(), "missing {file}");
    }
    // fixed headers (golden)
    let headers = [
        ("trajectories.csv", "t,seed_index,y,X,P"),
        ("classical.csv", "t,seed_index,y,X,P,jac"),
        ("conservation.csv", "t,mass,energy,kinetic_transport,kinetic_quantum"),
        ("density.csv", "t,x,rho"),
        ("branches.csv", "t,x,j,Y_j,S_j,amp_j,m_minus"),
        ("measures.csv", "t,x,source,p_lo,p_hi,mass"),
    ];
    for (file, expect) in headers {
        let text = std::fs::read_to_string(dir.join("r").join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), expect, "{file} header");
    }
    // numbers are written in shortest round-trip form
    let text = std::fs::read_to_string(dir.join("r").join("trajectories.csv")).unwrap();
    for line in text.lines().skip(1).take(50) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v}"), field, "field {field} is not shortest round-trip");
        }
    }
    // catalog defaults fill whatever was not overridden
    let summary = std::fs::read_to_string(dir.join("r").join("summary.txt")).unwrap();
    assert!(summary.contains("scenario = free_caustic"));
    assert!(summary.contains("modes = 512"));
    assert!(summary.contains("stride = 50"), "catalog stride default applied");
}

#[test]
fn identical_specs_produce_bit_identical_output() {
    let dir = tmpdir("det");
    let a = bohmsim(&dir, &[SMALL_RUN, &["--out", "a"]].concat());
    let b = bohmsim(&dir, &[SMALL_RUN, &["--out", "b"]].concat());
    assert!(a.status.success() && b.status.success());
    for file in ["trajectories.csv", "classical.csv", "density.csv", "conservation.csv"] {
        let fa = std::fs::read(dir.join("a").join(file)).unwrap();
        let fb = std::fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical runs");
    }
}

#[test]
fn config_file_is_applied_and_flags_win() {
    let dir = tmpdir("cfg");
    std::fs::write(
        dir.join("run.cfg"),
        "# caustic fixture\nscenario = free_caustic\nepsilon = 1e-1\nmodes = 512\n\
         tsteps = 200\ndt = 2e-3\nseeds = 5\nout = from_config\ndensity = false\n",
    )
    .unwrap();
    let out = bohmsim(&dir, &["run", "--config", "run.cfg", "--epsilon", "5e-2"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.join("from_config/summary.txt")).unwrap();
    assert!(summary.contains("epsilon = 0.05"), "flag must beat the config file");
    assert!(summary.contains("seeds = 5"));
    assert!(!dir.join("from_config/density.csv").exists(), "density export disabled");
}

#[test]
fn configuration_errors_exit_with_code_3() {
    let dir = tmpdir("err");
    // unknown scenario
    let out = bohmsim(&dir, &["run", "--scenario", "warp_drive"]);
    assert_eq!(out.status.code(), Some(3));
    // out-of-range epsilon
    let out = bohmsim(&dir, &["run", "--scenario", "free_caustic", "--epsilon", "-1"]);
    assert_eq!(out.status.code(), Some(3));
    // malformed config file reports the line number
    std::fs::write(dir.join("bad.cfg"), "scenario = free_caustic\nwhat is this\n").unwrap();
    let out = bohmsim(&dir, &["run", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:2"));
    // unknown keys are rejected
    std::fs::write(dir.join("bad2.cfg"), "scenario = free_caustic\nwarp = 9\n").unwrap();
    let out = bohmsim(&dir, &["run", "--config", "bad2.cfg"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'warp'"));
    // non-power-of-two mode counts are rejected
    let out = bohmsim(&dir, &["run", "--scenario", "free_caustic", "--modes", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn audit_failure_exits_with_code_2() {
    let dir = tmpdir("audit");
    // a vortex run with a grossly coarse time step violates the 1e-7
    // energy-conservation audit
    let out = bohmsim(
        &dir,
        &[
            "run",
            "--scenario",
            "vortex",
            "--tsteps",
            "40",
            "--dt",
            "0.1",
            "--seeds",
            "4",
            "--out",
            "bad",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("AUDIT energy_drift: FAIL"));
}

#[test]
fn sweep_and_report_pipeline() {
    let dir = tmpdir("sweep");
    let out = bohmsim(
        &dir,
        &[
            "sweep",
            "--scenario",
            "free_caustic",
            "--modes",
            "512",
            "--tsteps",
            "300",
            "--dt",
            "2e-3",
            "--seeds",
            "6",
            "--epsilon-list",
            "1e-1,5e-2",
            "--out",
            "sw",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let dev = std::fs::read_to_string(dir.join("sw/deviation.csv")).unwrap();
    assert_eq!(dev.lines().next().unwrap(), "epsilon,pre_fraction,post_fraction");
    assert_eq!(dev.lines().count(), 3);

    let out = bohmsim(&dir, &["report", "--in", "sw"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scenario"));
    assert!(stdout.contains("free_caustic"));
    assert!(stdout.contains("pre-caustic deviation trend"));

    // report on an empty directory is an error
    std::fs::create_dir_all(dir.join("empty")).unwrap();
    let out = bohmsim(&dir, &["report", "--in", "empty"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn classical_rays_focus_in_the_harmonic_export() {
    let dir = tmpdir("focus");
    // dt = (pi/2)/1600 puts t = pi/2 on the snapshot mesh with stride 1600
    // and keeps the splitting error inside the energy-conservation audit
    let dt = std::f64::consts::FRAC_PI_2 / 1600.0;
    let out = bohmsim(
        &dir,
        &[
            "run",
            "--scenario",
            "harmonic_focus",
            "--epsilon",
            "1e-1",
            "--modes",
            "512",
            "--tsteps",
            "3200",
            "--dt",
            &format!("{dt}"),
            "--stride",
            "1600",
            "--seeds",
            "6",
            "--density",
            "false",
            "--out",
            "f",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("f/classical.csv")).unwrap();
    let mut focused = 0;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let t: f64 = fields[0].parse().unwrap();
        let x: f64 = fields[3].parse().unwrap();
        if (t - std::f64::consts::FRAC_PI_2).abs() <= 1e-3 {
            assert!((x - 0.5).abs() <= 1e-3, "ray at t = pi/2 sits at {x}, not the focus");
            focused += 1;
        }
    }
    assert_eq!(focused, 6, "expected every ray at the focal snapshot");

    // a report over a single run prints a one-row table
    let out = bohmsim(&dir, &["report", "--in", "f"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("harmonic_focus")).count(), 1);
}

#[test]
fn list_prints_the_catalog() {
    let dir = tmpdir("list");
    let out = bohmsim(&dir, &["list"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["vortex", "wavepacket", "harmonic_focus", "free_caustic", "free_plane", "rarefaction"] {
        assert!(stdout.contains(name));
    }
}
