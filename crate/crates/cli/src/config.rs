//! Line-oriented `key = value` run configuration with `[section]` headers.
//!
//! Every key has a default taken from the reference packet experiment, so a
//! config file only states what it changes. Numbers accept plain floats and
//! simple fractions (`theta = 1/12`). Parse errors carry the line number and
//! the offending key.

use std::fmt::Write as _;

use tbc1d::analytic::GaussianParams;
use tbc1d::experiments::{REF_ALPHA, REF_CENTER, REF_T_END, REF_WAVE_NUMBER, REF_X_END};
use tbc1d::mesh::{PhysicalParams, SpaceMesh, TimeGrid};
use tbc1d::solver::{BoundaryConfig, KernelChoice, SchemeConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySpec {
    Dtbc,
    Sdtbc,
    Isdtbc,
    Custom { flux_theta: f64, kernel: KernelSpec },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    SemiDiscrete,
    Discrete(f64),
}

/// One solver run: mesh, time grid, constant coefficients, scheme, packet
/// and output schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_end: f64,
    pub intervals: usize,
    pub t_end: Option<f64>,
    pub tau: Option<f64>,
    pub levels: usize,
    pub hbar: f64,
    pub rho: f64,
    pub b: f64,
    pub v: f64,
    pub x_tail: Option<f64>,
    pub theta: f64,
    pub boundary: BoundarySpec,
    pub wave_number: f64,
    pub alpha: f64,
    pub center: f64,
    pub snapshots: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            x_end: REF_X_END,
            intervals: 800,
            t_end: Some(REF_T_END),
            tau: None,
            levels: 3000,
            hbar: 1.0,
            rho: 1.0,
            b: 2.0,
            v: 0.0,
            x_tail: None,
            theta: 1.0 / 12.0,
            boundary: BoundarySpec::Dtbc,
            wave_number: REF_WAVE_NUMBER,
            alpha: REF_ALPHA,
            center: REF_CENTER,
            snapshots: Vec::new(),
        }
    }
}

fn parse_number(value: &str) -> Option<f64> {
    if let Some((num, den)) = value.split_once('/') {
        let num: f64 = num.trim().parse().ok()?;
        let den: f64 = den.trim().parse().ok()?;
        if den == 0.0 {
            return None;
        }
        return Some(num / den);
    }
    value.trim().parse().ok()
}

fn parse_usize(value: &str) -> Option<usize> {
    value.trim().parse().ok()
}

fn parse_levels_list(value: &str) -> Option<Vec<usize>> {
    if value.trim().is_empty() {
        return Some(Vec::new());
    }
    value.split(',').map(|v| v.trim().parse().ok()).collect()
}

impl RunConfig {
    /// Parses the config text, reporting the line and key of the first
    /// problem.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        let mut section = String::new();
        let mut custom_flux: Option<f64> = None;
        let mut custom_kernel: Option<KernelSpec> = None;
        let mut boundary_custom = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.split_once('#') {
                Some((head, _)) => head.trim(),
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::validation(format!(
                        "line {line_no}: malformed section header `{line}`"
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                match section.as_str() {
                    "mesh" | "time" | "physics" | "scheme" | "packet" | "output" => {}
                    other => {
                        return Err(CliError::validation(format!(
                            "line {line_no}: unknown section `[{other}]`"
                        )))
                    }
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "line {line_no}: expected `key = value`, got `{line}`"
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let bad_value = || {
                CliError::validation(format!(
                    "line {line_no}: invalid value `{value}` for key `{key}`"
                ))
            };

            match (section.as_str(), key) {
                ("mesh", "x_end") => config.x_end = parse_number(value).ok_or_else(bad_value)?,
                ("mesh", "intervals") => {
                    config.intervals = parse_usize(value).ok_or_else(bad_value)?
                }
                ("time", "t_end") => {
                    config.t_end = Some(parse_number(value).ok_or_else(bad_value)?);
                    config.tau = None;
                }
                ("time", "tau") => {
                    config.tau = Some(parse_number(value).ok_or_else(bad_value)?);
                    config.t_end = None;
                }
                ("time", "levels") => config.levels = parse_usize(value).ok_or_else(bad_value)?,
                ("physics", "hbar") => config.hbar = parse_number(value).ok_or_else(bad_value)?,
                ("physics", "rho") => config.rho = parse_number(value).ok_or_else(bad_value)?,
                ("physics", "b") => config.b = parse_number(value).ok_or_else(bad_value)?,
                ("physics", "v") => config.v = parse_number(value).ok_or_else(bad_value)?,
                ("physics", "x_tail") => {
                    config.x_tail = Some(parse_number(value).ok_or_else(bad_value)?)
                }
                ("scheme", "theta") => config.theta = parse_number(value).ok_or_else(bad_value)?,
                ("scheme", "boundary") => match value {
                    "dtbc" => config.boundary = BoundarySpec::Dtbc,
                    "sdtbc" => config.boundary = BoundarySpec::Sdtbc,
                    "isdtbc" => config.boundary = BoundarySpec::Isdtbc,
                    "custom" => boundary_custom = true,
                    _ => return Err(bad_value()),
                },
                ("scheme", "flux_theta") => {
                    custom_flux = Some(parse_number(value).ok_or_else(bad_value)?)
                }
                ("scheme", "kernel") => {
                    let spec = if value == "semidiscrete" {
                        KernelSpec::SemiDiscrete
                    } else if let Some(theta0) = value.strip_prefix("discrete") {
                        KernelSpec::Discrete(parse_number(theta0).ok_or_else(bad_value)?)
                    } else {
                        return Err(bad_value());
                    };
                    custom_kernel = Some(spec);
                }
                ("packet", "wave_number") => {
                    config.wave_number = parse_number(value).ok_or_else(bad_value)?
                }
                ("packet", "alpha") => config.alpha = parse_number(value).ok_or_else(bad_value)?,
                ("packet", "center") => {
                    config.center = parse_number(value).ok_or_else(bad_value)?
                }
                ("output", "snapshots") => {
                    config.snapshots = parse_levels_list(value).ok_or_else(bad_value)?
                }
                ("", key) => {
                    return Err(CliError::validation(format!(
                        "line {line_no}: key `{key}` appears before any section header"
                    )))
                }
                (section, key) => {
                    return Err(CliError::validation(format!(
                        "line {line_no}: unknown key `{key}` in section `[{section}]`"
                    )))
                }
            }
        }

        if boundary_custom {
            let flux_theta = custom_flux.ok_or_else(|| {
                CliError::validation("boundary = custom requires `flux_theta`".to_string())
            })?;
            let kernel = custom_kernel.ok_or_else(|| {
                CliError::validation("boundary = custom requires `kernel`".to_string())
            })?;
            config.boundary = BoundarySpec::Custom { flux_theta, kernel };
        } else if custom_flux.is_some() || custom_kernel.is_some() {
            return Err(CliError::validation(
                "`flux_theta`/`kernel` are only valid with boundary = custom".to_string(),
            ));
        }
        Ok(config)
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[mesh]");
        let _ = writeln!(out, "x_end = {}", self.x_end);
        let _ = writeln!(out, "intervals = {}", self.intervals);
        let _ = writeln!(out, "\n[time]");
        match (self.t_end, self.tau) {
            (Some(t_end), _) => {
                let _ = writeln!(out, "t_end = {t_end}");
            }
            (None, Some(tau)) => {
                let _ = writeln!(out, "tau = {tau}");
            }
            (None, None) => {}
        }
        let _ = writeln!(out, "levels = {}", self.levels);
        let _ = writeln!(out, "\n[physics]");
        let _ = writeln!(out, "hbar = {}", self.hbar);
        let _ = writeln!(out, "rho = {}", self.rho);
        let _ = writeln!(out, "b = {}", self.b);
        let _ = writeln!(out, "v = {}", self.v);
        if let Some(x_tail) = self.x_tail {
            let _ = writeln!(out, "x_tail = {x_tail}");
        }
        let _ = writeln!(out, "\n[scheme]");
        let _ = writeln!(out, "theta = {}", self.theta);
        match self.boundary {
            BoundarySpec::Dtbc => {
                let _ = writeln!(out, "boundary = dtbc");
            }
            BoundarySpec::Sdtbc => {
                let _ = writeln!(out, "boundary = sdtbc");
            }
            BoundarySpec::Isdtbc => {
                let _ = writeln!(out, "boundary = isdtbc");
            }
            BoundarySpec::Custom { flux_theta, kernel } => {
                let _ = writeln!(out, "boundary = custom");
                let _ = writeln!(out, "flux_theta = {flux_theta}");
                match kernel {
                    KernelSpec::SemiDiscrete => {
                        let _ = writeln!(out, "kernel = semidiscrete");
                    }
                    KernelSpec::Discrete(theta0) => {
                        let _ = writeln!(out, "kernel = discrete {theta0}");
                    }
                }
            }
        }
        let _ = writeln!(out, "\n[packet]");
        let _ = writeln!(out, "wave_number = {}", self.wave_number);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "center = {}", self.center);
        let _ = writeln!(out, "\n[output]");
        let snapshots: Vec<String> = self.snapshots.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "snapshots = {}", snapshots.join(","));
        out
    }

    pub fn boundary_config(&self) -> BoundaryConfig {
        match self.boundary {
            BoundarySpec::Dtbc => BoundaryConfig::dtbc(self.theta),
            BoundarySpec::Sdtbc => BoundaryConfig::sdtbc(self.theta),
            BoundarySpec::Isdtbc => BoundaryConfig::isdtbc(),
            BoundarySpec::Custom { flux_theta, kernel } => BoundaryConfig {
                theta_flux: flux_theta,
                kernel: match kernel {
                    KernelSpec::SemiDiscrete => KernelChoice::SemiDiscrete,
                    KernelSpec::Discrete(theta0) => KernelChoice::DiscreteTheta(theta0),
                },
            },
        }
    }

    /// Builds the solver configuration and the packet parameters.
    pub fn build(&self) -> Result<(SchemeConfig, GaussianParams), CliError> {
        let mesh = SpaceMesh::uniform(self.x_end, self.intervals).map_err(CliError::from_core)?;
        let grid = match (self.t_end, self.tau) {
            (Some(_), Some(_)) => {
                return Err(CliError::validation(
                    "specify either `t_end` or `tau`, not both".to_string(),
                ))
            }
            (Some(t_end), None) => {
                TimeGrid::new(t_end, self.levels).map_err(CliError::from_core)?
            }
            (None, Some(tau)) => {
                TimeGrid::from_step(tau, self.levels).map_err(CliError::from_core)?
            }
            (None, None) => {
                return Err(CliError::validation(
                    "the [time] section needs `t_end` or `tau`".to_string(),
                ))
            }
        };
        let x_tail = self.x_tail.unwrap_or(mesh.x_end() - 2.0 * mesh.tail_step());
        let j_max = mesh.intervals();
        let phys = PhysicalParams::new(
            &mesh,
            self.hbar,
            vec![self.rho; j_max],
            vec![self.b; j_max],
            vec![self.v; j_max],
            self.rho,
            self.b,
            self.v,
            x_tail,
        )
        .map_err(CliError::from_core)?;
        let scheme = SchemeConfig::new(self.theta, self.boundary_config(), mesh, grid, phys)
            .map_err(CliError::from_core)?;
        let gaussian = GaussianParams::new(self.wave_number, self.alpha, self.center)
            .map_err(CliError::from_core)?;
        Ok((scheme, gaussian))
    }

    /// True when the packet is an exact solution of the configured equation
    /// (free constant-coefficient case in the scaled units).
    pub fn exact_solution_available(&self) -> bool {
        self.v == 0.0 && self.hbar * self.b == 2.0 * self.rho
    }
}
