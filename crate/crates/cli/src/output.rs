//! Per-run output directory: config copy, `series.csv`, per-snapshot CSVs,
//! and the `report.txt` with machine-parseable check lines.
//!
//! CSV dialect: comma separator, `.` decimal point, one header row, LF line
//! endings. Numeric fields use Rust's shortest round-trip `f64` formatting,
//! so re-parsing reproduces the bits and identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mfg_core::diagnostics::{CheckReport, RateFit, RunRecord};
use mfg_core::Grid;

use crate::CliError;

/// One `CHECK <name> PASS|FAIL <value> <tolerance>` line.
pub fn check_line(report: &CheckReport) -> String {
    format!(
        "CHECK {} {} {} {}",
        report.name,
        if report.passed { "PASS" } else { "FAIL" },
        report.value,
        report.tolerance
    )
}

pub fn rate_line(label: &str, fit: &RateFit) -> String {
    format!(
        "RATE {label} alpha={} prefactor={} r2={} window=[{},{}]",
        fit.alpha, fit.prefactor, fit.r2, fit.window.0, fit.window.1
    )
}

pub fn series_csv(record: &RunRecord) -> String {
    let mut out = String::new();
    out.push_str("t,mass,coupling,rho_l1,rho_l2,rho_linf,phierr_linf,phierr_h1,residual\n");
    for k in 0..record.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            record.times[k],
            record.mass[k],
            record.coupling[k],
            record.rho_l1[k],
            record.rho_l2[k],
            record.rho_linf[k],
            record.phierr_linf[k],
            record.phierr_h1[k],
            record.residual[k],
        );
    }
    out
}

fn snapshot_csv(grid: &Grid, snap: &mfg_core::diagnostics::Snapshot) -> String {
    let mut out = String::new();
    match grid.dim() {
        1 => {
            out.push_str("x,rho,phi,vx\n");
            for i in 0..grid.nodes(0) {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    grid.coord(0, i),
                    snap.rho.values()[i],
                    snap.phi.values()[i],
                    snap.v.component(0)[i],
                );
            }
        }
        _ => {
            out.push_str("x,y,rho,phi,vx,vy\n");
            for i in 0..grid.nodes(0) {
                for j in 0..grid.nodes(1) {
                    let id = grid.idx(i, j);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        grid.coord(0, i),
                        grid.coord(1, j),
                        snap.rho.values()[id],
                        snap.phi.values()[id],
                        snap.v.component(0)[id],
                        snap.v.component(1)[id],
                    );
                }
            }
        }
    }
    out
}

/// Write the full bundle for one run.
pub fn write_bundle(
    dir: &Path,
    config_text: &str,
    grid: &Grid,
    record: &RunRecord,
    report_lines: &[String],
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config_text)?;
    fs::write(dir.join("series.csv"), series_csv(record))?;
    for snap in &record.snapshots {
        let name = format!("snapshot_{}.csv", snap.time);
        fs::write(dir.join(name), snapshot_csv(grid, snap))?;
    }
    write_report(dir, report_lines)?;
    Ok(())
}

pub fn write_report(dir: &Path, lines: &[String]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for line in lines {
        text.push_str(line);
        text.push('\n');
    }
    fs::write(dir.join("report.txt"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_line_grammar() {
        let line = check_line(&CheckReport {
            name: "demo".into(),
            passed: true,
            value: 0.125,
            tolerance: 0.5,
        });
        assert_eq!(line, "CHECK demo PASS 0.125 0.5");
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 5);
        assert!(parts[3].parse::<f64>().is_ok());
        assert!(parts[4].parse::<f64>().is_ok());
    }

    #[test]
    fn series_csv_round_trips_floats() {
        let record = RunRecord {
            times: vec![0.0, 0.1 + 1e-17, 0.2],
            mass: vec![1.0 / 3.0, 0.3, 0.29],
            coupling: vec![0.5, 0.4, 0.3],
            rho_l1: vec![1.0, 0.9, 0.8],
            rho_l2: vec![1.0, 0.9, 0.8],
            rho_linf: vec![1.0, 0.9, 0.8],
            phierr_linf: vec![0.0, 0.0, 0.0],
            phierr_h1: vec![0.0, 0.0, 0.0],
            residual: vec![0.0, 0.0, 0.0],
            snapshots: vec![],
            config_hash: 7,
        };
        let csv = series_csv(&record);
        let line2 = csv.lines().nth(1).unwrap();
        let mass: f64 = line2.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(mass, 1.0 / 3.0);
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }
}
