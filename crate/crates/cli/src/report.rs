//! The `report` command: per-run conservation extremes and audit verdicts,
//! plus the deviation trend when a sweep supplied several epsilons.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::csvio::{read_csv, read_kv};
use crate::{CliError, CliResult};

fn find_summaries(root: &Path) -> CliResult<Vec<PathBuf>> {
    let mut found = Vec::new();
    let direct = root.join("summary.txt");
    if direct.is_file() {
        found.push(direct);
    }
    if root.is_dir() {
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        subdirs.sort();
        for sub in subdirs {
            let candidate = sub.join("summary.txt");
            if candidate.is_file() {
                found.push(candidate);
            }
        }
    }
    Ok(found)
}

pub fn report(args: &[String]) -> CliResult<()> {
    let mut input = None;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--in" => {
                input = Some(
                    args.get(i + 1)
                        .ok_or_else(|| CliError::Config("--in needs a directory".into()))?
                        .clone(),
                );
                i += 2;
            }
            other => return Err(CliError::Config(format!("unknown report argument {other:?}"))),
        }
    }
    let root = PathBuf::from(
        input.ok_or_else(|| CliError::Config("report requires --in DIR".into()))?,
    );
    let summaries = find_summaries(&root)?;
    if summaries.is_empty() {
        return Err(CliError::Config(format!(
            "no completed runs under {} (missing summary.txt)",
            root.display()
        )));
    }

    let columns = [
        "scenario",
        "epsilon",
        "mass_drift",
        "energy_drift",
        "audit_non_crossing",
        "audit_energy_drift",
        "audit_time_step_doubling",
        "deviation_pre",
        "deviation_post",
    ];
    let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
    let mut table = Vec::new();
    let mut trend: Vec<(f64, f64)> = Vec::new();
    for path in &summaries {
        let kv: BTreeMap<String, String> = read_kv(path)?.into_iter().collect();
        let row: Vec<String> = columns
            .iter()
            .map(|c| {
                kv.get(*c)
                    .map(|v| v.split(' ').next().unwrap_or(v).to_string())
                    .unwrap_or_else(|| "-".to_string())
            })
            .collect();
        for (w, cell) in widths.iter_mut().zip(&row) {
            *w = (*w).max(cell.len());
        }
        if let (Some(eps), Some(pre)) = (kv.get("epsilon"), kv.get("deviation_pre")) {
            if let (Ok(eps), Ok(pre)) = (eps.parse::<f64>(), pre.parse::<f64>()) {
                trend.push((eps, pre));
            }
        }
        table.push(row);
    }

    let fmt_row = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", fmt_row(&columns.iter().map(|c| c.to_string()).collect::<Vec<_>>()));
    for row in &table {
        println!("{}", fmt_row(row));
    }

    // a sweep's deviation.csv is the authoritative trend source when present
    let deviation_csv = root.join("deviation.csv");
    if deviation_csv.is_file() {
        let csv = read_csv(&deviation_csv)?;
        let eps = csv.f64_column("epsilon")?;
        let pre = csv.f64_column("pre_fraction")?;
        trend = eps
            .into_iter()
            .zip(pre)
            .filter(|(_, p)| p.is_finite())
            .collect();
    }
    if trend.len() >= 2 {
        trend.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let monotone = trend.windows(2).all(|w| w[0].1 >= w[1].1);
        let desc: Vec<String> = trend.iter().map(|(e, f)| format!("{f:.4} @ {e}")).collect();
        println!(
            "pre-caustic deviation trend (decreasing epsilon): {} -> {}",
            desc.join(", "),
            if monotone { "monotone decreasing" } else { "NOT monotone" }
        );
    }
    Ok(())
}
