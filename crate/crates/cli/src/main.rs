//! Command-line harness around the tbc1d solver.
//!
//! Exit codes: 0 on success, 2 on validation problems (bad flags, config
//! errors, inadmissible parameters), 1 on numerical failure (zero pivot or
//! a tridiagonal residual above the limit) and on I/O trouble.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use tbc1d::error::Error as CoreError;
use tbc1d::experiments::{
    bound_sweep, compare_runs, reference_config, reference_errors_parallel, reference_gaussian,
    reference_initial, run_with_errors, BoundaryKind, CompareReport, KernelDump, SweepAxis,
    TableSpec, REF_T_END, REF_X_END,
};
use tbc1d::mesh::{PhysicalParams, SpaceMesh};
use tbc1d::solver::{run, StorePolicy};

mod config;
mod output;
mod presets;

use config::RunConfig;
use presets::{Preset, PresetAction};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Runtime(String),
}

impl CliError {
    pub fn validation(message: String) -> Self {
        Self::Validation(message)
    }

    pub fn runtime(message: String) -> Self {
        Self::Runtime(message)
    }

    pub fn from_core(err: CoreError) -> Self {
        match err {
            CoreError::ZeroPivot(_)
            | CoreError::NonFiniteSolution(_)
            | CoreError::ResidualTooLarge { .. } => Self::Numerical(err.to_string()),
            _ => Self::Validation(err.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) | Self::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) | Self::Numerical(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tbc1d",
    version,
    about = "1D Schrodinger solver with transparent boundary conditions: runs, error tables, kernel and bound dumps"
)]
struct Cli {
    /// Directory for the CSV outputs
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for independent runs in sweeps
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration; writes trajectory, error and snapshot CSVs
    Solve {
        /// Run configuration file
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Name of a bundled solve preset
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated levels to store as full-field snapshot CSVs
        #[arg(long)]
        snapshots: Option<String>,
    },
    /// Run an error-table sweep; writes CSV and an aligned text table
    Table {
        /// Table configuration file (a `[table]` section)
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Name of a bundled table preset
        #[arg(long)]
        preset: Option<String>,
    },
    /// Dump convolution kernels for a theta next to the semi-discrete one
    Kernel {
        /// Name of a bundled kernel preset
        #[arg(long)]
        preset: Option<String>,
        /// Averaging parameter (accepts fractions such as 1/12)
        #[arg(long)]
        theta: Option<String>,
        /// Interval count fixing the tail step h = X/J
        #[arg(long)]
        intervals: Option<usize>,
        /// Level count fixing tau = T/M and the dump length
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Verify the kernel-divergence bound over a parameter grid
    Bound {
        /// Name of a bundled bound preset
        #[arg(long)]
        preset: Option<String>,
        /// Override the per-grid-point kernel length
        #[arg(long)]
        max_m: Option<usize>,
    },
    /// Difference between two runs that share everything but the boundary
    Compare {
        /// Name of a bundled compare preset
        #[arg(long, conflicts_with_all = ["config_a", "config_b"])]
        preset: Option<String>,
        /// First run configuration
        #[arg(long, requires = "config_b")]
        config_a: Option<PathBuf>,
        /// Second run configuration
        #[arg(long, requires = "config_a")]
        config_b: Option<PathBuf>,
    },
    /// List the bundled experiment presets
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve {
            config,
            preset,
            snapshots,
        } => cmd_solve(
            cli,
            config.as_deref(),
            preset.as_deref(),
            snapshots.as_deref(),
        ),
        Command::Table { config, preset } => cmd_table(cli, config.as_deref(), preset.as_deref()),
        Command::Kernel {
            preset,
            theta,
            intervals,
            levels,
        } => cmd_kernel(
            cli,
            preset.as_deref(),
            theta.as_deref(),
            *intervals,
            *levels,
        ),
        Command::Bound { preset, max_m } => cmd_bound(cli, preset.as_deref(), *max_m),
        Command::Compare {
            preset,
            config_a,
            config_b,
        } => cmd_compare(
            cli,
            preset.as_deref(),
            config_a.as_deref(),
            config_b.as_deref(),
        ),
        Command::ListPresets => {
            for preset in presets::registry() {
                println!(
                    "{:28} [{}] {}",
                    preset.name,
                    preset.action.kind(),
                    preset.description
                );
            }
            Ok(())
        }
    }
}

fn load_preset(name: &str) -> Result<Preset, CliError> {
    presets::find(name)
        .ok_or_else(|| CliError::validation(format!("unknown preset `{name}`; see list-presets")))
}

fn read_config_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}

fn parse_snapshot_list(arg: &str) -> Result<Vec<usize>, CliError> {
    arg.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::validation(format!("invalid snapshot level `{v}`")))
        })
        .collect()
}

fn cmd_solve(
    cli: &Cli,
    config_path: Option<&Path>,
    preset: Option<&str>,
    snapshots: Option<&str>,
) -> Result<(), CliError> {
    let mut run_config = match (config_path, preset) {
        (Some(path), None) => RunConfig::parse(&read_config_file(path)?)?,
        (None, Some(name)) => match load_preset(name)?.action {
            PresetAction::Solve(config) => config,
            other => {
                return Err(CliError::validation(format!(
                    "preset `{name}` is a {} preset, not a solve preset",
                    other.kind()
                )))
            }
        },
        (None, None) => RunConfig::default(),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    if let Some(arg) = snapshots {
        run_config.snapshots = parse_snapshot_list(arg)?;
    }

    let (scheme, gaussian) = run_config.build()?;
    let store = if run_config.snapshots.is_empty() {
        StorePolicy::NormsOnly
    } else {
        StorePolicy::Levels(run_config.snapshots.clone())
    };

    let start = Instant::now();
    let (trajectory, report) = if run_config.exact_solution_available() {
        let (trajectory, report) =
            run_with_errors(&scheme, &gaussian, &store).map_err(CliError::from_core)?;
        (trajectory, Some(report))
    } else {
        let initial = reference_initial(&scheme.mesh, &gaussian);
        let trajectory = run(&scheme, &initial, &store).map_err(CliError::from_core)?;
        (trajectory, None)
    };
    eprintln!(
        "solve: J = {}, M = {} finished in {:.3?}",
        scheme.mesh.intervals(),
        scheme.grid.levels(),
        start.elapsed()
    );

    output::write_file(&cli.out.join("run_config.txt"), &run_config.serialize())?;
    output::write_file(
        &cli.out.join("trajectory.csv"),
        &output::trajectory_csv(&trajectory),
    )?;
    for (level, field) in &trajectory.snapshots {
        output::write_file(
            &cli.out.join(format!("snapshot_{level}.csv")),
            &output::snapshot_csv(&scheme.mesh, field),
        )?;
    }
    match report {
        Some(report) => {
            output::write_file(
                &cli.out.join("errors.csv"),
                &output::error_summary_csv(&report),
            )?;
            output::write_file(
                &cli.out.join("error_series.csv"),
                &output::error_series_csv(&report),
            )?;
            println!(
                "E_l2 = {}  E_c = {}  E_l2_rel = {}  E_c_rel = {}",
                output::sig3(report.l2),
                output::sig3(report.c),
                output::sig3(report.l2_rel),
                output::sig3(report.c_rel)
            );
        }
        None => eprintln!("note: no exact solution for these coefficients; error CSVs skipped"),
    }
    Ok(())
}

fn cmd_table(cli: &Cli, config_path: Option<&Path>, preset: Option<&str>) -> Result<(), CliError> {
    enum Job {
        Spec(TableSpec),
        Sweep(presets::ErrorSweep),
    }
    let job = match (config_path, preset) {
        (Some(path), None) => Job::Spec(parse_table_config(&read_config_file(path)?)?),
        (None, Some(name)) => match load_preset(name)?.action {
            PresetAction::Table(spec) => Job::Spec(spec),
            PresetAction::ErrorSweep(sweep) => Job::Sweep(sweep),
            other => {
                return Err(CliError::validation(format!(
                    "preset `{name}` is a {} preset, not a table preset",
                    other.kind()
                )))
            }
        },
        (None, None) => {
            return Err(CliError::validation(
                "table needs --preset or --config".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };

    let start = Instant::now();
    match job {
        Job::Spec(spec) => {
            let tables =
                tbc1d::experiments::run_table(&spec, cli.threads).map_err(CliError::from_core)?;
            let text = output::table_text(spec.axis.label(), &tables);
            output::write_file(
                &cli.out.join("table.csv"),
                &output::table_csv(spec.axis.label(), &tables),
            )?;
            output::write_file(&cli.out.join("table.txt"), &text)?;
            print!("{text}");
        }
        Job::Sweep(sweep) => {
            let jobs: Vec<(usize, usize, f64, tbc1d::solver::BoundaryConfig)> = sweep
                .curves
                .iter()
                .flat_map(|(kind, theta)| {
                    sweep
                        .interval_counts
                        .iter()
                        .map(move |j| (*j, sweep.levels, *theta, kind.to_config(*theta)))
                })
                .collect();
            let errors =
                reference_errors_parallel(&jobs, cli.threads).map_err(CliError::from_core)?;
            let mut csv = String::from("boundary,theta,intervals,e_l2,e_c,e_l2_rel,e_c_rel\n");
            let mut idx = 0;
            for (kind, theta) in &sweep.curves {
                for j in &sweep.interval_counts {
                    let e = errors[idx];
                    idx += 1;
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        kind.label(),
                        theta,
                        j,
                        e[0],
                        e[1],
                        e[2],
                        e[3]
                    ));
                }
            }
            output::write_file(&cli.out.join("error_sweep.csv"), &csv)?;
        }
    }
    eprintln!("table sweep finished in {:.3?}", start.elapsed());
    Ok(())
}

fn parse_table_config(text: &str) -> Result<TableSpec, CliError> {
    let mut axis_label: Option<String> = None;
    let mut values: Option<Vec<usize>> = None;
    let mut fixed: Option<usize> = None;
    let mut theta = tbc1d::experiments::TABLE_THETA;
    let mut boundaries = BoundaryKind::ALL.to_vec();
    let mut in_table = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.split_once('#') {
            Some((head, _)) => head.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if line == "[table]" {
            in_table = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(CliError::validation(format!(
                "line {line_no}: table configs take a single [table] section"
            )));
        }
        if !in_table {
            return Err(CliError::validation(format!(
                "line {line_no}: expected [table] section header first"
            )));
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::validation(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "axis" => axis_label = Some(value.to_uppercase()),
            "values" => {
                values = Some(
                    value
                        .split(',')
                        .map(|v| v.trim().parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| {
                            CliError::validation(format!("line {line_no}: invalid values list"))
                        })?,
                )
            }
            "fixed" => {
                fixed = Some(value.parse().map_err(|_| {
                    CliError::validation(format!("line {line_no}: invalid `fixed` value"))
                })?)
            }
            "theta" => {
                theta = value
                    .split_once('/')
                    .and_then(|(n, d)| {
                        Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?)
                    })
                    .or_else(|| value.parse().ok())
                    .ok_or_else(|| CliError::validation(format!("line {line_no}: invalid theta")))?
            }
            "boundaries" => {
                boundaries = value
                    .split(',')
                    .map(|v| {
                        BoundaryKind::parse(v.trim()).ok_or_else(|| {
                            CliError::validation(format!(
                                "line {line_no}: unknown boundary `{}`",
                                v.trim()
                            ))
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
            other => {
                return Err(CliError::validation(format!(
                    "line {line_no}: unknown key `{other}` in section `[table]`"
                )))
            }
        }
    }

    let axis_label = axis_label.ok_or_else(|| {
        CliError::validation("table config needs `axis = J` or `axis = M`".into())
    })?;
    let values =
        values.ok_or_else(|| CliError::validation("table config needs a `values` list".into()))?;
    let fixed =
        fixed.ok_or_else(|| CliError::validation("table config needs a `fixed` size".into()))?;
    let axis = match axis_label.as_str() {
        "J" => SweepAxis::Intervals {
            values,
            levels: fixed,
        },
        "M" => SweepAxis::Levels {
            values,
            intervals: fixed,
        },
        other => {
            return Err(CliError::validation(format!(
                "axis must be J or M, got `{other}`"
            )))
        }
    };
    Ok(TableSpec {
        axis,
        theta,
        boundaries,
    })
}

fn cmd_kernel(
    cli: &Cli,
    preset: Option<&str>,
    theta: Option<&str>,
    intervals: Option<usize>,
    levels: Option<usize>,
) -> Result<(), CliError> {
    let (theta, intervals, levels) = if let Some(name) = preset {
        match load_preset(name)?.action {
            PresetAction::Kernel {
                theta,
                intervals,
                levels,
            } => (theta, intervals, levels),
            other => {
                return Err(CliError::validation(format!(
                    "preset `{name}` is a {} preset, not a kernel preset",
                    other.kind()
                )))
            }
        }
    } else {
        let theta = theta
            .map(|raw| {
                raw.split_once('/')
                    .and_then(|(n, d)| {
                        Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?)
                    })
                    .or_else(|| raw.parse().ok())
                    .ok_or_else(|| CliError::validation(format!("invalid theta `{raw}`")))
            })
            .transpose()?
            .unwrap_or(tbc1d::experiments::TABLE_THETA);
        (theta, intervals.unwrap_or(800), levels.unwrap_or(3000))
    };

    let mesh = SpaceMesh::uniform(REF_X_END, intervals).map_err(CliError::from_core)?;
    let phys = PhysicalParams::constant(&mesh, 1.0, 1.0, 2.0, 0.0).map_err(CliError::from_core)?;
    let tau = REF_T_END / levels as f64;
    let dump = KernelDump::new(theta, mesh.tail_step(), tau, &phys, levels)
        .map_err(CliError::from_core)?;
    output::write_file(&cli.out.join("kernel.csv"), &output::kernel_csv(&dump))?;
    eprintln!(
        "kernel dump: theta = {theta}, h = {}, tau = {tau}, max weight gap {}",
        mesh.tail_step(),
        dump.max_weight_gap()
    );
    Ok(())
}

fn cmd_bound(cli: &Cli, preset: Option<&str>, max_m: Option<usize>) -> Result<(), CliError> {
    let name = preset.unwrap_or("bound-grid");
    let (thetas, interval_counts, level_counts, preset_max_m) = match load_preset(name)?.action {
        PresetAction::Bound {
            thetas,
            interval_counts,
            level_counts,
            max_m,
        } => (thetas, interval_counts, level_counts, max_m),
        other => {
            return Err(CliError::validation(format!(
                "preset `{name}` is a {} preset, not a bound preset",
                other.kind()
            )))
        }
    };
    let max_m = max_m.unwrap_or(preset_max_m);

    let mesh = SpaceMesh::uniform(REF_X_END, 16).map_err(CliError::from_core)?;
    let phys = PhysicalParams::constant(&mesh, 1.0, 1.0, 2.0, 0.0).map_err(CliError::from_core)?;
    let hs: Vec<f64> = interval_counts
        .iter()
        .map(|j| REF_X_END / *j as f64)
        .collect();
    let taus: Vec<f64> = level_counts.iter().map(|m| REF_T_END / *m as f64).collect();

    let start = Instant::now();
    let samples = bound_sweep(&thetas, &hs, &taus, &phys, max_m).map_err(CliError::from_core)?;
    let violations = samples.iter().filter(|s| !s.pass).count();
    output::write_file(&cli.out.join("bound.csv"), &output::bound_csv(&samples))?;
    eprintln!(
        "bound sweep: {} samples, {violations} violations, {:.3?}",
        samples.len(),
        start.elapsed()
    );
    if violations > 0 {
        return Err(CliError::Numerical(format!(
            "{violations} bound violations recorded in bound.csv"
        )));
    }
    Ok(())
}

fn cmd_compare(
    cli: &Cli,
    preset: Option<&str>,
    config_a: Option<&Path>,
    config_b: Option<&Path>,
) -> Result<(), CliError> {
    let mut runs: Vec<(usize, CompareReport)> = Vec::new();
    let start = Instant::now();
    match (preset, config_a, config_b) {
        (None, Some(path_a), Some(path_b)) => {
            let conf_a = RunConfig::parse(&read_config_file(path_a)?)?;
            let conf_b = RunConfig::parse(&read_config_file(path_b)?)?;
            let (scheme_a, gaussian) = conf_a.build()?;
            let (scheme_b, _) = conf_b.build()?;
            let initial = reference_initial(&scheme_a.mesh, &gaussian);
            let report =
                compare_runs(&scheme_a, &scheme_b, &initial).map_err(CliError::from_core)?;
            runs.push((scheme_a.grid.levels(), report));
        }
        (name, None, None) => {
            let name = name.unwrap_or("compare-table2");
            let (theta, intervals, level_counts) = match load_preset(name)?.action {
                PresetAction::Compare {
                    theta,
                    intervals,
                    level_counts,
                } => (theta, intervals, level_counts),
                other => {
                    return Err(CliError::validation(format!(
                        "preset `{name}` is a {} preset, not a compare preset",
                        other.kind()
                    )))
                }
            };
            let gaussian = reference_gaussian();
            for levels in level_counts {
                let config_a = reference_config(
                    intervals,
                    levels,
                    theta,
                    tbc1d::solver::BoundaryConfig::dtbc(theta),
                )
                .map_err(CliError::from_core)?;
                let mut config_b = config_a.clone();
                config_b.boundary = tbc1d::solver::BoundaryConfig::sdtbc(theta);
                let initial = reference_initial(&config_a.mesh, &gaussian);
                let report =
                    compare_runs(&config_a, &config_b, &initial).map_err(CliError::from_core)?;
                runs.push((levels, report));
            }
        }
        _ => {
            return Err(CliError::validation(
                "compare needs either --preset or both --config-a and --config-b".to_string(),
            ))
        }
    }

    output::write_file(&cli.out.join("compare.csv"), &output::compare_csv(&runs))?;
    output::write_file(
        &cli.out.join("compare_summary.csv"),
        &output::compare_summary_csv(&runs),
    )?;
    for (levels, report) in &runs {
        println!(
            "M = {levels}: max |diff|_l2 = {}  max |diff|_c = {}",
            report.max_l2, report.max_c
        );
    }
    eprintln!("compare finished in {:.3?}", start.elapsed());
    Ok(())
}
