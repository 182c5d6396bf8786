//! Named experiment presets: every bundled table and figure dump.

use tbc1d::experiments::{
    BoundaryKind, TableSpec, REF_T_END, TABLE1_INTERVALS, TABLE1_LEVELS, TABLE2_INTERVALS,
    TABLE2_LEVELS, TABLE_THETA,
};

use crate::config::{BoundarySpec, RunConfig};

/// Maximum-error sweep over `(boundary, theta)` curves at a fixed level
/// count, for the error-vs-J figure dumps.
#[derive(Debug, Clone)]
pub struct ErrorSweep {
    pub curves: Vec<(BoundaryKind, f64)>,
    pub interval_counts: Vec<usize>,
    pub levels: usize,
}

#[derive(Debug, Clone)]
pub enum PresetAction {
    Solve(RunConfig),
    Table(TableSpec),
    ErrorSweep(ErrorSweep),
    Kernel {
        theta: f64,
        intervals: usize,
        levels: usize,
    },
    Bound {
        thetas: Vec<f64>,
        interval_counts: Vec<usize>,
        level_counts: Vec<usize>,
        max_m: usize,
    },
    Compare {
        theta: f64,
        intervals: usize,
        level_counts: Vec<usize>,
    },
}

impl PresetAction {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Solve(_) => "solve",
            Self::Table(_) => "table",
            Self::ErrorSweep(_) => "table",
            Self::Kernel { .. } => "kernel",
            Self::Bound { .. } => "bound",
            Self::Compare { .. } => "compare",
        }
    }
}

pub struct Preset {
    pub name: String,
    pub description: String,
    pub action: PresetAction,
}

fn solve_preset(boundary: BoundarySpec, intervals: usize, levels: usize) -> RunConfig {
    RunConfig {
        intervals,
        levels,
        t_end: Some(REF_T_END),
        boundary,
        theta: TABLE_THETA,
        ..RunConfig::default()
    }
}

fn boundary_spec(kind: BoundaryKind) -> BoundarySpec {
    match kind {
        BoundaryKind::Dtbc => BoundarySpec::Dtbc,
        BoundaryKind::Sdtbc => BoundarySpec::Sdtbc,
        BoundaryKind::Isdtbc => BoundarySpec::Isdtbc,
    }
}

/// The full preset registry.
pub fn registry() -> Vec<Preset> {
    let mut presets = Vec::new();

    for kind in BoundaryKind::ALL {
        for j in TABLE1_INTERVALS {
            presets.push(Preset {
                name: format!("table1-{}-J{j}", kind.label()),
                description: format!(
                    "single {} run of the J sweep (J = {j}, M = {TABLE1_LEVELS}, theta = 1/12)",
                    kind.label()
                ),
                action: PresetAction::Solve(solve_preset(boundary_spec(kind), j, TABLE1_LEVELS)),
            });
        }
        for m in TABLE2_LEVELS {
            presets.push(Preset {
                name: format!("table2-{}-M{m}", kind.label()),
                description: format!(
                    "single {} run of the M sweep (J = {TABLE2_INTERVALS}, M = {m}, theta = 1/12)",
                    kind.label()
                ),
                action: PresetAction::Solve(solve_preset(boundary_spec(kind), TABLE2_INTERVALS, m)),
            });
        }
    }

    presets.push(Preset {
        name: "table1".into(),
        description: "errors and ratios against J for all three boundary closures (M = 6000)"
            .into(),
        action: PresetAction::Table(TableSpec::table1()),
    });
    presets.push(Preset {
        name: "table2".into(),
        description: "errors and ratios against M for all three boundary closures (J = 3200)"
            .into(),
        action: PresetAction::Table(TableSpec::table2()),
    });

    presets.push(Preset {
        name: "fig1-norms".into(),
        description:
            "dtbc run (J = 800, M = 3000) with the initial profile stored; trajectory CSV carries the norm history"
                .into(),
        action: PresetAction::Solve(RunConfig {
            snapshots: vec![0],
            ..solve_preset(BoundarySpec::Dtbc, 800, 3000)
        }),
    });
    for kind in [BoundaryKind::Dtbc, BoundaryKind::Sdtbc] {
        presets.push(Preset {
            name: format!("fig2-{}", kind.label()),
            description: format!(
                "error-history run with the {} closure (J = 800, M = 3000); see the error series CSV",
                kind.label()
            ),
            action: PresetAction::Solve(solve_preset(boundary_spec(kind), 800, 3000)),
        });
    }

    presets.push(Preset {
        name: "fig3-kernels".into(),
        description: "convolution kernel weights |c0 R^m| for theta = 1/12 next to the semi-discrete kernel (J = 800, M = 3000)".into(),
        action: PresetAction::Kernel {
            theta: TABLE_THETA,
            intervals: 800,
            levels: 3000,
        },
    });

    presets.push(Preset {
        name: "fig45-errors".into(),
        description:
            "maximum absolute and relative errors against J for theta in {0, 1/12, 1/6, 1/4} under both closures plus the improved one (M = 3000)"
                .into(),
        action: PresetAction::ErrorSweep(ErrorSweep {
            curves: {
                let thetas = [0.0, TABLE_THETA, 1.0 / 6.0, 0.25];
                let mut curves: Vec<(BoundaryKind, f64)> = Vec::new();
                for kind in [BoundaryKind::Dtbc, BoundaryKind::Sdtbc] {
                    curves.extend(thetas.iter().map(|t| (kind, *t)));
                }
                curves.push((BoundaryKind::Isdtbc, TABLE_THETA));
                curves
            },
            interval_counts: TABLE1_INTERVALS.to_vec(),
            levels: 3000,
        }),
    });

    presets.push(Preset {
        name: "bound-grid".into(),
        description:
            "kernel-divergence bound verification over theta in {0, 1/12, 1/6} and the (h, tau) grid of the error tables"
                .into(),
        action: PresetAction::Bound {
            thetas: vec![0.0, TABLE_THETA, 1.0 / 6.0],
            interval_counts: TABLE1_INTERVALS.to_vec(),
            level_counts: TABLE2_LEVELS.to_vec(),
            max_m: 2000,
        },
    });

    presets.push(Preset {
        name: "compare-table2".into(),
        description:
            "per-level difference between the dtbc and sdtbc solutions (J = 3200, every M of the M sweep)"
                .into(),
        action: PresetAction::Compare {
            theta: TABLE_THETA,
            intervals: TABLE2_INTERVALS,
            level_counts: TABLE2_LEVELS.to_vec(),
        },
    });

    presets
}

pub fn find(name: &str) -> Option<Preset> {
    registry().into_iter().find(|p| p.name == name)
}
