//! Exact Gaussian wave-packet solution and error metrics against it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{c_norm, l2_norm, SpaceMesh, TimeGrid, WaveField};
use crate::solver::Trajectory;

/// Dispersing Gaussian packet: wave number `k`, squared width `alpha`,
/// initial center `x0`. Exact solution of the free constant-coefficient
/// equation in the scaled units `hbar = 1`, `rho = 1`, `B = 2`, `V = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub wave_number: f64,
    pub alpha: f64,
    pub center: f64,
}

impl GaussianParams {
    pub fn new(wave_number: f64, alpha: f64, center: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "packet width alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            wave_number,
            alpha,
            center,
        })
    }
}

/// `psi(x, t) = (1 + i t/alpha)^(-1/2)
///              exp{i k (x - x0 - k t) - (x - x0 - 2 k t)^2 / (4 (alpha + i t))}`.
///
/// The square root takes the principal branch; `1 + i t/alpha` never leaves
/// the right half plane, so the branch is continuous in `t`.
pub fn gaussian_exact(x: f64, t: f64, gp: &GaussianParams) -> Complex64 {
    let k = gp.wave_number;
    let prefactor = Complex64::new(1.0, t / gp.alpha).sqrt().finv();
    let phase = k * (x - gp.center - k * t);
    let spread = x - gp.center - 2.0 * k * t;
    let width = Complex64::new(4.0 * gp.alpha, 4.0 * t);
    let exponent = Complex64::new(0.0, phase) - Complex64::new(spread * spread, 0.0) / width;
    prefactor * exponent.exp()
}

/// Pointwise samples of the exact solution at the mesh nodes.
pub fn sample_exact(mesh: &SpaceMesh, t: f64, gp: &GaussianParams) -> WaveField {
    WaveField::sample(mesh, |x| gaussian_exact(x, t, gp))
}

/// Sixth-order central-difference residual of `i psi_t + psi_xx` (the free
/// equation in scaled units) at `(x, t)` with explicit stencil steps.
pub fn residual_check_with_steps(
    gp: &GaussianParams,
    x: f64,
    t: f64,
    dx: f64,
    dt: f64,
) -> Complex64 {
    // f'(0) ~ sum c_k [f(k) - f(-k)], f''(0) ~ d_0 f(0) + sum d_k [f(k) + f(-k)]
    const C1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    const D0: f64 = -49.0 / 18.0;
    const D1: [f64; 3] = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

    let mut psi_t = Complex64::ZERO;
    for (k, c) in C1.iter().enumerate() {
        let s = (k + 1) as f64 * dt;
        psi_t += (gaussian_exact(x, t + s, gp) - gaussian_exact(x, t - s, gp)) * *c;
    }
    psi_t /= dt;

    let mut psi_xx = gaussian_exact(x, t, gp) * D0;
    for (k, d) in D1.iter().enumerate() {
        let s = (k + 1) as f64 * dx;
        psi_xx += (gaussian_exact(x + s, t, gp) + gaussian_exact(x - s, t, gp)) * *d;
    }
    psi_xx /= dx * dx;

    Complex64::new(0.0, 1.0) * psi_t + psi_xx
}

/// Residual with steps small enough that truncation and rounding both stay
/// below 1e-6 for the reference packet (k up to a few hundred).
pub fn residual_check(gp: &GaussianParams, x: f64, t: f64) -> Complex64 {
    residual_check_with_steps(gp, x, t, 3e-4, 2e-6)
}

/// Per-level error record. Relative entries are `None` when the exact norm
/// vanished at that level.
#[derive(Debug, Clone, Copy)]
pub struct LevelError {
    pub level: usize,
    pub time: f64,
    pub l2: f64,
    pub c: f64,
    pub l2_rel: Option<f64>,
    pub c_rel: Option<f64>,
}

/// Maximum-in-time errors over levels `1..=M`, absolute and relative, plus
/// the per-level series.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l2: f64,
    pub c: f64,
    pub l2_rel: f64,
    pub c_rel: f64,
    pub series: Vec<LevelError>,
    /// Levels skipped in the relative maxima because the exact norm was zero.
    pub excluded_levels: Vec<usize>,
}

impl ErrorReport {
    pub fn errors(&self) -> [f64; 4] {
        [self.l2, self.c, self.l2_rel, self.c_rel]
    }
}

/// Streaming error accumulator: feed every level `1..=M` as it is computed.
pub struct ErrorAccumulator<'a> {
    gp: GaussianParams,
    mesh: &'a SpaceMesh,
    report: ErrorReport,
    scratch: WaveField,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(gp: GaussianParams, mesh: &'a SpaceMesh) -> Self {
        Self {
            gp,
            mesh,
            report: ErrorReport {
                l2: 0.0,
                c: 0.0,
                l2_rel: 0.0,
                c_rel: 0.0,
                series: Vec::new(),
                excluded_levels: Vec::new(),
            },
            scratch: WaveField::zeros(mesh.node_count()),
        }
    }

    pub fn push(&mut self, level: usize, time: f64, field: &WaveField) {
        if level == 0 {
            return;
        }
        let mut exact_l2_sq = 0.0;
        let mut exact_c: f64 = 0.0;
        let j_max = self.mesh.intervals();
        for j in 0..=j_max {
            let exact = gaussian_exact(self.mesh.node(j), time, &self.gp);
            self.scratch[j] = field[j] - exact;
            if j > 0 {
                exact_l2_sq += self.mesh.step(j) * exact.norm_sqr();
            }
            exact_c = exact_c.max(exact.norm());
        }
        let err_l2 = l2_norm(&self.scratch, self.mesh);
        let err_c = c_norm(&self.scratch);
        let exact_l2 = exact_l2_sq.sqrt();

        let l2_rel = (exact_l2 > 0.0).then(|| err_l2 / exact_l2);
        let c_rel = (exact_c > 0.0).then(|| err_c / exact_c);
        if l2_rel.is_none() || c_rel.is_none() {
            self.report.excluded_levels.push(level);
        }

        self.report.l2 = self.report.l2.max(err_l2);
        self.report.c = self.report.c.max(err_c);
        if let Some(r) = l2_rel {
            self.report.l2_rel = self.report.l2_rel.max(r);
        }
        if let Some(r) = c_rel {
            self.report.c_rel = self.report.c_rel.max(r);
        }
        self.report.series.push(LevelError {
            level,
            time,
            l2: err_l2,
            c: err_c,
            l2_rel,
            c_rel,
        });
    }

    pub fn finish(self) -> ErrorReport {
        self.report
    }
}

/// Error report for a trajectory that stored a field at every level
/// `1..=M`.
pub fn error_report(
    traj: &Trajectory,
    gp: &GaussianParams,
    mesh: &SpaceMesh,
    grid: &TimeGrid,
) -> Result<ErrorReport> {
    let mut acc = ErrorAccumulator::new(*gp, mesh);
    for m in 1..=grid.levels() {
        let field = traj.snapshot(m).ok_or(Error::MissingField(m))?;
        acc.push(m, grid.time(m), field);
    }
    Ok(acc.finish())
}

/// Error-decay ratios along a refinement sequence: entry `n` is
/// `E(n-1) / E(n)`; the first entry is `None`.
pub fn convergence_ratios(errors: &[f64]) -> Result<Vec<Option<f64>>> {
    let mut ratios = Vec::with_capacity(errors.len());
    for (n, err) in errors.iter().enumerate() {
        if n == 0 {
            ratios.push(None);
            continue;
        }
        if *err == 0.0 {
            return Err(Error::ZeroRatioDenominator(n));
        }
        ratios.push(Some(errors[n - 1] / err));
    }
    Ok(ratios)
}
