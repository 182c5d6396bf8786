//! Reference experiment: the dispersing Gaussian packet on `[0, 1.5]`, the
//! error-table sweeps, kernel dumps, divergence-bound sweeps and
//! boundary-vs-boundary comparisons.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;

use crate::analytic::{ErrorAccumulator, ErrorReport, GaussianParams};
use crate::error::{Error, Result};
use crate::kernel::{dtbc_parameters, kernel_table, sdtbc_parameters, KernelTable};
use crate::mesh::{c_norm, l2_norm, PhysicalParams, SpaceMesh, TimeGrid, WaveField};
use crate::solver::{run_with, BoundaryConfig, SchemeConfig, SolverState, StorePolicy, Trajectory};

/// Reference problem constants: free packet with `k = 100`, `alpha = 1/120`,
/// center `0.8` on `[0, 1.5]` up to `T = 0.006`, scaled units
/// (`hbar = 1`, `rho = 1`, `B = 2`, `V = 0`).
pub const REF_X_END: f64 = 1.5;
pub const REF_T_END: f64 = 0.006;
pub const REF_WAVE_NUMBER: f64 = 100.0;
pub const REF_ALPHA: f64 = 1.0 / 120.0;
pub const REF_CENTER: f64 = 0.8;

/// Interval counts of the first error table (fixed `M = 6000`).
pub const TABLE1_INTERVALS: [usize; 5] = [200, 400, 800, 1600, 3200];
pub const TABLE1_LEVELS: usize = 6000;

/// Level counts of the second error table (fixed `J = 3200`).
pub const TABLE2_LEVELS: [usize; 5] = [375, 750, 1500, 3000, 6000];
pub const TABLE2_INTERVALS: usize = 3200;

/// Interior parameter used in both error tables.
pub const TABLE_THETA: f64 = 1.0 / 12.0;

/// Boundary closure presets used by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dtbc,
    Sdtbc,
    Isdtbc,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 3] = [Self::Dtbc, Self::Sdtbc, Self::Isdtbc];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Dtbc => "dtbc",
            Self::Sdtbc => "sdtbc",
            Self::Isdtbc => "isdtbc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dtbc" => Some(Self::Dtbc),
            "sdtbc" => Some(Self::Sdtbc),
            "isdtbc" => Some(Self::Isdtbc),
            _ => None,
        }
    }

    pub fn to_config(self, theta: f64) -> BoundaryConfig {
        match self {
            Self::Dtbc => BoundaryConfig::dtbc(theta),
            Self::Sdtbc => BoundaryConfig::sdtbc(theta),
            Self::Isdtbc => BoundaryConfig::isdtbc(),
        }
    }
}

pub fn reference_gaussian() -> GaussianParams {
    GaussianParams::new(REF_WAVE_NUMBER, REF_ALPHA, REF_CENTER).expect("alpha > 0")
}

/// Scheme for the reference problem on a uniform mesh with `intervals`
/// steps and `levels` time levels.
pub fn reference_config(
    intervals: usize,
    levels: usize,
    theta: f64,
    boundary: BoundaryConfig,
) -> Result<SchemeConfig> {
    let mesh = SpaceMesh::uniform(REF_X_END, intervals)?;
    let phys = PhysicalParams::constant(&mesh, 1.0, 1.0, 2.0, 0.0)?;
    let grid = TimeGrid::new(REF_T_END, levels)?;
    SchemeConfig::new(theta, boundary, mesh, grid, phys)
}

/// Pointwise samples of the reference packet at `t = 0`, including the
/// (tiny but nonzero) values at both endpoints.
pub fn reference_initial(mesh: &SpaceMesh, gp: &GaussianParams) -> WaveField {
    crate::analytic::sample_exact(mesh, 0.0, gp)
}

/// Runs the scheme and accumulates the error report against the exact
/// packet, streaming level by level.
pub fn run_with_errors(
    config: &SchemeConfig,
    gp: &GaussianParams,
    store: &StorePolicy,
) -> Result<(Trajectory, ErrorReport)> {
    let initial = reference_initial(&config.mesh, gp);
    let mut acc = ErrorAccumulator::new(*gp, &config.mesh);
    let traj = run_with(config, &initial, store, |m, t, field| {
        acc.push(m, t, field);
    })?;
    Ok((traj, acc.finish()))
}

/// One sweep axis of an error table.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    /// Sweep the interval count at a fixed level count.
    Intervals { values: Vec<usize>, levels: usize },
    /// Sweep the level count at a fixed interval count.
    Levels {
        values: Vec<usize>,
        intervals: usize,
    },
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Intervals { .. } => "J",
            Self::Levels { .. } => "M",
        }
    }

    pub fn values(&self) -> &[usize] {
        match self {
            Self::Intervals { values, .. } | Self::Levels { values, .. } => values,
        }
    }

    fn size_for(&self, value: usize) -> (usize, usize) {
        match self {
            Self::Intervals { levels, .. } => (value, *levels),
            Self::Levels { intervals, .. } => (*intervals, value),
        }
    }
}

/// Error-table request: one sub-table per boundary preset.
#[derive(Debug, Clone)]
pub struct TableSpec {
    pub axis: SweepAxis,
    pub theta: f64,
    pub boundaries: Vec<BoundaryKind>,
}

impl TableSpec {
    /// Errors against `J` at `M = 6000`, `theta = 1/12`.
    pub fn table1() -> Self {
        Self {
            axis: SweepAxis::Intervals {
                values: TABLE1_INTERVALS.to_vec(),
                levels: TABLE1_LEVELS,
            },
            theta: TABLE_THETA,
            boundaries: BoundaryKind::ALL.to_vec(),
        }
    }

    /// Errors against `M` at `J = 3200`, `theta = 1/12`.
    pub fn table2() -> Self {
        Self {
            axis: SweepAxis::Levels {
                values: TABLE2_LEVELS.to_vec(),
                intervals: TABLE2_INTERVALS,
            },
            theta: TABLE_THETA,
            boundaries: BoundaryKind::ALL.to_vec(),
        }
    }
}

/// One table row: the four maximum-in-time errors
/// `(E_L2, E_C, E_L2_rel, E_C_rel)` and their decay ratios.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub axis_value: usize,
    pub errors: [f64; 4],
    pub ratios: [Option<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct SubTable {
    pub boundary: BoundaryKind,
    pub rows: Vec<TableRow>,
}

/// Runs the reference experiment for each `(intervals, levels, theta,
/// boundary)` job, up to `threads` at a time, and returns the four
/// maximum-in-time errors per job in input order. Each run is sequential
/// and deterministic; only independent runs execute concurrently.
pub fn reference_errors_parallel(
    jobs: &[(usize, usize, f64, BoundaryConfig)],
    threads: usize,
) -> Result<Vec<[f64; 4]>> {
    let gp = reference_gaussian();
    let results: Vec<Mutex<Option<Result<[f64; 4]>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.max(1).min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let (intervals, levels, theta, boundary) = jobs[idx];
                let outcome = reference_config(intervals, levels, theta, boundary)
                    .and_then(|config| run_with_errors(&config, &gp, &StorePolicy::NormsOnly))
                    .map(|(_, report)| report.errors());
                *results[idx].lock().unwrap() = Some(outcome);
            });
        }
    });

    results
        .into_iter()
        .map(|cell| cell.into_inner().unwrap().expect("job completed"))
        .collect()
}

/// Runs every (boundary, axis value) combination of an error table and
/// assembles the error/ratio rows.
pub fn run_table(spec: &TableSpec, threads: usize) -> Result<Vec<SubTable>> {
    let jobs: Vec<(usize, usize, f64, BoundaryConfig)> = spec
        .boundaries
        .iter()
        .flat_map(|b| {
            spec.axis.values().iter().map(|value| {
                let (intervals, levels) = spec.axis.size_for(*value);
                (intervals, levels, spec.theta, b.to_config(spec.theta))
            })
        })
        .collect();
    let errors_per_job = reference_errors_parallel(&jobs, threads)?;

    let axis_len = spec.axis.values().len();
    let mut tables = Vec::with_capacity(spec.boundaries.len());
    for (b, boundary) in spec.boundaries.iter().enumerate() {
        let mut rows = Vec::with_capacity(axis_len);
        let mut prev: Option<[f64; 4]> = None;
        for (a, axis_value) in spec.axis.values().iter().enumerate() {
            let errors = errors_per_job[b * axis_len + a];
            let mut ratios = [None; 4];
            if let Some(prev) = prev {
                for k in 0..4 {
                    if errors[k] == 0.0 {
                        return Err(Error::ZeroRatioDenominator(a));
                    }
                    ratios[k] = Some(prev[k] / errors[k]);
                }
            }
            rows.push(TableRow {
                axis_value: *axis_value,
                errors,
                ratios,
            });
            prev = Some(errors);
        }
        tables.push(SubTable {
            boundary: *boundary,
            rows,
        });
    }
    Ok(tables)
}

/// Per-level difference between two runs of the same scheme with different
/// boundary closures.
#[derive(Debug, Clone, Copy)]
pub struct CompareLevel {
    pub level: usize,
    pub time: f64,
    pub l2: f64,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub series: Vec<CompareLevel>,
    pub max_l2: f64,
    pub max_c: f64,
}

/// Advances both configurations in lockstep and records the norms of the
/// solution difference at every level. Everything except the boundary
/// closure must match.
pub fn compare_runs(
    config_a: &SchemeConfig,
    config_b: &SchemeConfig,
    initial: &WaveField,
) -> Result<CompareReport> {
    if config_a.mesh != config_b.mesh {
        return Err(Error::MeshMismatch("space meshes differ".into()));
    }
    if config_a.grid != config_b.grid {
        return Err(Error::MeshMismatch("time grids differ".into()));
    }
    if config_a.phys != config_b.phys || config_a.theta != config_b.theta {
        return Err(Error::MeshMismatch(
            "configurations must match except for the boundary closure".into(),
        ));
    }
    let mut state_a = SolverState::new(config_a, initial.clone())?;
    let mut state_b = SolverState::new(config_b, initial.clone())?;
    let mut diff = WaveField::zeros(initial.len());
    let levels = config_a.grid.levels();
    let mut series = Vec::with_capacity(levels + 1);
    let mut max_l2: f64 = 0.0;
    let mut max_c: f64 = 0.0;
    for m in 0..=levels {
        if m > 0 {
            state_a.step(config_a)?;
            state_b.step(config_b)?;
        }
        for (d, (a, b)) in diff.values_mut().iter_mut().zip(
            state_a
                .field()
                .values()
                .iter()
                .zip(state_b.field().values()),
        ) {
            *d = a - b;
        }
        let l2 = l2_norm(&diff, &config_a.mesh);
        let c = c_norm(&diff);
        max_l2 = max_l2.max(l2);
        max_c = max_c.max(c);
        series.push(CompareLevel {
            level: m,
            time: config_a.grid.time(m),
            l2,
            c,
        });
    }
    Ok(CompareReport {
        series,
        max_l2,
        max_c,
    })
}

/// Convolution kernels of the requested parameter next to the semi-discrete
/// one, for figure dumps.
#[derive(Debug, Clone)]
pub struct KernelDump {
    pub theta: f64,
    pub table_theta: KernelTable,
    pub table_sd: KernelTable,
}

impl KernelDump {
    pub fn new(theta: f64, h: f64, tau: f64, phys: &PhysicalParams, m_max: usize) -> Result<Self> {
        let params_theta = dtbc_parameters(theta, h, tau, phys)?;
        let params_sd = sdtbc_parameters(tau, phys)?;
        Ok(Self {
            theta,
            table_theta: kernel_table(params_theta, m_max),
            table_sd: kernel_table(params_sd, m_max),
        })
    }

    pub fn len(&self) -> usize {
        self.table_theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table_theta.is_empty()
    }

    /// `(R^m, |c0 R^m|)` for the theta kernel.
    pub fn theta_entry(&self, m: usize) -> (Complex64, f64) {
        let r = self.table_theta.values()[m];
        (r, (self.table_theta.c0() * r).norm())
    }

    /// `(R^m, |c0 R^m|)` for the semi-discrete kernel.
    pub fn sd_entry(&self, m: usize) -> (Complex64, f64) {
        let r = self.table_sd.values()[m];
        (r, (self.table_sd.c0() * r).norm())
    }

    /// Largest pointwise gap `max_m | |c0 R^m|_theta - |c0 R^m|_sd |`.
    pub fn max_weight_gap(&self) -> f64 {
        (0..self.len())
            .map(|m| (self.theta_entry(m).1 - self.sd_entry(m).1).abs())
            .fold(0.0, f64::max)
    }
}

/// Divergence-bound verification for a single `(theta, h, tau)`.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub theta: f64,
    pub h: f64,
    pub tau: f64,
    /// `sup_m |c0_theta R^m_theta - c0_D R_D^m|`
    pub sup_measured: f64,
    /// largest `measured / bound` over the sweep (0 when every bound is 0)
    pub max_ratio: f64,
    pub all_pass: bool,
}

/// Measures the kernel difference against the analytic bound for
/// `m = 0 ..= m_max`.
pub fn bound_check(
    theta: f64,
    h: f64,
    tau: f64,
    phys: &PhysicalParams,
    m_max: usize,
) -> Result<BoundCheck> {
    let table_theta = kernel_table(dtbc_parameters(theta, h, tau, phys)?, m_max);
    let table_sd = kernel_table(sdtbc_parameters(tau, phys)?, m_max);
    let mut sup_measured: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut all_pass = true;
    for m in 0..=m_max {
        let measured = (table_theta.c0() * table_theta.values()[m]
            - table_sd.c0() * table_sd.values()[m])
            .norm();
        let bound = crate::kernel::divergence_bound(theta, h, tau, phys, m)?;
        sup_measured = sup_measured.max(measured);
        if bound > 0.0 {
            max_ratio = max_ratio.max(measured / bound);
        }
        if measured > bound && !(measured == 0.0 && bound == 0.0) {
            all_pass = false;
        }
    }
    Ok(BoundCheck {
        theta,
        h,
        tau,
        sup_measured,
        max_ratio,
        all_pass,
    })
}

/// One row of the divergence-bound CSV.
#[derive(Debug, Clone, Copy)]
pub struct BoundSample {
    pub theta: f64,
    pub h: f64,
    pub tau: f64,
    pub m: usize,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Full per-`m` sweep over a `(theta, h, tau)` grid.
pub fn bound_sweep(
    thetas: &[f64],
    hs: &[f64],
    taus: &[f64],
    phys: &PhysicalParams,
    m_max: usize,
) -> Result<Vec<BoundSample>> {
    let mut samples = Vec::new();
    for &theta in thetas {
        for &h in hs {
            for &tau in taus {
                let table_theta = kernel_table(dtbc_parameters(theta, h, tau, phys)?, m_max);
                let table_sd = kernel_table(sdtbc_parameters(tau, phys)?, m_max);
                for m in 0..=m_max {
                    let measured = (table_theta.c0() * table_theta.values()[m]
                        - table_sd.c0() * table_sd.values()[m])
                        .norm();
                    let bound = crate::kernel::divergence_bound(theta, h, tau, phys, m)?;
                    samples.push(BoundSample {
                        theta,
                        h,
                        tau,
                        m,
                        measured,
                        bound,
                        pass: measured <= bound || (measured == 0.0 && bound == 0.0),
                    });
                }
            }
        }
    }
    Ok(samples)
}
