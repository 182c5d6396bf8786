//! Solver for the 1D time-dependent Schrodinger equation on a truncated
//! half-axis, closed by discrete or semi-discrete transparent boundary
//! conditions.
//!
//! The interior scheme is the two-level Crank-Nicolson family with a
//! three-point spatial average controlled by a parameter `theta <= 1/4`
//! (`theta = 0` is the plain Crank-Nicolson scheme, `1/6` the linear FEM,
//! `1/12` the Numerov scheme, `1/4` the multi-symplectic variant). The
//! boundary row expresses the outgoing wave as a discrete convolution over
//! the boundary history; the convolution weights come from Legendre
//! polynomials and are generated by a three-term recurrence ([`kernel`]).
//!
//! [`analytic`] carries the exact Gaussian-packet solution used as the
//! benchmark, and [`experiments`] the preset error-table, kernel-dump and
//! comparison sweeps around it.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod mesh;
pub mod solver;

pub use analytic::{
    convergence_ratios, error_report, gaussian_exact, residual_check, sample_exact, ErrorReport,
    GaussianParams,
};
pub use error::{Error, Result};
pub use kernel::{
    admissibility, convolve, delta_theta, delta_theta_checked, divergence_bound, dtbc_parameters,
    hat_a, kernel_asymptotic, kernel_legendre_oracle, kernel_table, sdtbc_parameters, HatA,
    KernelParams, KernelTable,
};
pub use mesh::{
    apply_c_theta, c_norm, l2_norm, second_difference_flux, PhysicalParams, SpaceMesh, TimeGrid,
    WaveField,
};
pub use solver::{
    assemble_step, run, run_with, thomas_solve, BoundaryConfig, KernelChoice, SchemeConfig,
    SolverState, StorePolicy, Trajectory,
};
