//! CSV and aligned-text writers. All numbers go through the shortest
//! round-trip float formatting, so repeated runs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tbc1d::analytic::ErrorReport;
use tbc1d::experiments::{BoundSample, CompareReport, KernelDump, SubTable};
use tbc1d::mesh::SpaceMesh;
use tbc1d::solver::Trajectory;

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("m,t,l2_norm,c_norm,re_psi_boundary,im_psi_boundary\n");
    for m in 0..traj.level_count() {
        let _ = writeln!(
            out,
            "{m},{},{},{},{},{}",
            traj.times[m], traj.l2[m], traj.c[m], traj.boundary[m].re, traj.boundary[m].im
        );
    }
    out
}

pub fn snapshot_csv(mesh: &SpaceMesh, field: &tbc1d::mesh::WaveField) -> String {
    let mut out = String::from("j,x,re_psi,im_psi\n");
    for j in 0..field.len() {
        let _ = writeln!(out, "{j},{},{},{}", mesh.node(j), field[j].re, field[j].im);
    }
    out
}

pub fn error_summary_csv(report: &ErrorReport) -> String {
    format!(
        "e_l2,e_c,e_l2_rel,e_c_rel\n{},{},{},{}\n",
        report.l2, report.c, report.l2_rel, report.c_rel
    )
}

pub fn error_series_csv(report: &ErrorReport) -> String {
    let mut out = String::from("m,t,err_l2,err_c,err_l2_rel,err_c_rel\n");
    for level in &report.series {
        let rel = |v: Option<f64>| v.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            level.level,
            level.time,
            level.l2,
            level.c,
            rel(level.l2_rel),
            rel(level.c_rel)
        );
    }
    out
}

pub fn table_csv(axis: &str, tables: &[SubTable]) -> String {
    let axis = axis.to_lowercase();
    let mut out = format!("boundary,{axis},e_l2,r_l2,e_c,r_c,e_l2_rel,r_l2_rel,e_c_rel,r_c_rel\n");
    for table in tables {
        for row in &table.rows {
            let _ = write!(out, "{},{}", table.boundary.label(), row.axis_value);
            for k in 0..4 {
                let _ = write!(out, ",{}", row.errors[k]);
                match row.ratios[k] {
                    Some(r) => {
                        let _ = write!(out, ",{r}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Three significant digits, decimal in a readable range and scientific
/// outside it.
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-3..3).contains(&exp) {
        let decimals = (2 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.2e}")
    }
}

pub fn table_text(axis: &str, tables: &[SubTable]) -> String {
    let header = [
        axis, "E_l2", "R_l2", "E_c", "R_c", "E_l2_rel", "R_l2_rel", "E_c_rel", "R_c_rel",
    ];
    let mut out = String::new();
    for table in tables {
        let _ = writeln!(out, "boundary: {}", table.boundary.label());
        let mut grid: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
        for row in &table.rows {
            let mut cells = vec![row.axis_value.to_string()];
            for k in 0..4 {
                cells.push(sig3(row.errors[k]));
                cells.push(row.ratios[k].map(sig3).unwrap_or_else(|| "-".into()));
            }
            grid.push(cells);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for row in &grid {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        out.push('\n');
    }
    out
}

pub fn kernel_csv(dump: &KernelDump) -> String {
    let mut out =
        String::from("m,re_r_theta,im_r_theta,abs_c0r_theta,re_r_sd,im_r_sd,abs_c0r_sd\n");
    for m in 0..dump.len() {
        let (r_theta, w_theta) = dump.theta_entry(m);
        let (r_sd, w_sd) = dump.sd_entry(m);
        let _ = writeln!(
            out,
            "{m},{},{},{},{},{},{}",
            r_theta.re, r_theta.im, w_theta, r_sd.re, r_sd.im, w_sd
        );
    }
    out
}

pub fn bound_csv(samples: &[BoundSample]) -> String {
    let mut out = String::from("theta,h,tau,m,measured,bound,pass\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.theta, s.h, s.tau, s.m, s.measured, s.bound, s.pass
        );
    }
    out
}

pub fn compare_csv(runs: &[(usize, CompareReport)]) -> String {
    let mut out = String::from("run_levels,m,t,diff_l2,diff_c\n");
    for (levels, report) in runs {
        for level in &report.series {
            let _ = writeln!(
                out,
                "{levels},{},{},{},{}",
                level.level, level.time, level.l2, level.c
            );
        }
    }
    out
}

pub fn compare_summary_csv(runs: &[(usize, CompareReport)]) -> String {
    let mut out = String::from("run_levels,max_diff_l2,max_diff_c\n");
    for (levels, report) in runs {
        let _ = writeln!(out, "{levels},{},{}", report.max_l2, report.max_c);
    }
    out
}
