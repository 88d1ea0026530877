//! Built-in experiment presets. Each returns a full config; `--preset NAME`
//! is equivalent to `--config` on the emitted TOML.

use anyhow::{bail, Result};

use crate::config::{AuditConfig, BackgroundConfig, CascadeConfig, DivisorConfig,
                    ExperimentConfig, FlowConfig, GridConfig, OutputConfig};
use cuspflow_core::conic_regularizer;

pub const PRESET_NAMES: [&str; 5] =
    ["cusp-ke", "cone-ke", "lemma41", "lemma36", "continuity-smooth"];

/// Snapshot times for the estimate-audit runs: the decades 1e-4..1e-1 plus a
/// geometric ladder t_end * 2^{-k} down to ~1e-4.
fn audit_snapshot_times(t_end: f64) -> Vec<f64> {
    let mut times = vec![1e-4, 1e-3, 1e-2, 1e-1];
    let mut t = t_end;
    while t > 1.5e-4 {
        times.push(t);
        t *= 0.5;
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    times
}

fn normalized_snapshot_times(t_end: f64) -> Vec<f64> {
    let mut times = vec![
        1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 12.0, 14.0,
        17.0,
    ];
    times.retain(|&t| t < t_end);
    times.push(t_end);
    times
}

fn cusp_ke() -> ExperimentConfig {
    let t_end = 20.0;
    ExperimentConfig {
        grid: GridConfig {
            s_min: -50.0,
            s_max: -2.0,
            n_nodes: 2048,
            bc_inner: "neumann".into(),
            bc_inner_value: None,
            // Dirichlet data from the exact cusp Kaehler-Einstein potential:
            // the stationary correction is the constant log 2
            bc_outer_value: 2f64.ln(),
        },
        divisors: vec![DivisorConfig {
            kind: "cusp".into(),
            coefficient: 1.0,
            epsilon: 0.0,
            scale: 1.0,
        }],
        flow: FlowConfig {
            normalized: true,
            t_end,
            dt_init: 1e-3,
            dt_policy: "adaptive".into(),
            newton_tol: 1e-10,
            max_newton: 50,
            l_index: 1,
            initial: "zero".into(),
            pole_coefficient: None,
            snapshot_times: normalized_snapshot_times(t_end),
        },
        background: BackgroundConfig {
            u: 0.0,
            v: 1e-4,
            eta: 0.05,
            delta: 0.1,
            theta_scale: 1.0,
            stilde: "product".into(),
        },
        cascade: None,
        audit: Some(AuditConfig {
            audits: vec![
                "upper".into(),
                "lower".into(),
                "time-derivative".into(),
                "trace".into(),
                "l1-continuity".into(),
                "normalized".into(),
            ],
            delta: 0.1,
            tolerance: 0.05,
            trace_calibration_time: 0.05,
            l1_threshold: 1e-2,
            l1_threshold_time: 1e-3,
        }),
        output: OutputConfig { directory: "out/cusp-ke".into(), formats: vec!["csv".into(), "json".into()] },
    }
}

fn cone_ke() -> Result<ExperimentConfig> {
    let beta = 0.5;
    let eta = 0.01;
    let s_max: f64 = -2.0;
    // Dirichlet data from the exact cone Kaehler-Einstein potential minus the
    // background conic term at the outer boundary
    let bc = (2.0 * beta * beta).ln() - 2.0 * (1.0 - (beta * s_max).exp()).ln()
        - eta * conic_regularizer(s_max.exp(), beta, 0.0).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut config = cusp_ke();
    config.grid.bc_outer_value = bc;
    config.divisors = vec![DivisorConfig {
        kind: "conic".into(),
        coefficient: 0.5,
        epsilon: 0.0,
        scale: 1.0,
    }];
    config.background.v = 0.0;
    config.background.eta = eta;
    config.output.directory = "out/cone-ke".into();
    Ok(config)
}

fn lemma41() -> ExperimentConfig {
    ExperimentConfig {
        grid: GridConfig {
            s_min: -50.0,
            s_max: -2.0,
            n_nodes: 512,
            bc_inner: "neumann".into(),
            bc_inner_value: None,
            // matches the pole initial data at the outer boundary
            bc_outer_value: -3.0 * 2f64.ln(),
        },
        divisors: vec![
            DivisorConfig { kind: "cusp".into(), coefficient: 1.0, epsilon: 0.0, scale: 1.0 },
            DivisorConfig { kind: "conic".into(), coefficient: 0.5, epsilon: 0.1, scale: 1.0 },
            DivisorConfig { kind: "canonical".into(), coefficient: 0.5, epsilon: 0.1, scale: 1.0 },
        ],
        flow: FlowConfig {
            normalized: false,
            t_end: 0.2,
            dt_init: 1e-3,
            dt_policy: "fixed".into(),
            newton_tol: 1e-10,
            max_newton: 50,
            l_index: 2,
            initial: "pole".into(),
            pole_coefficient: Some(3.0),
            snapshot_times: vec![0.05, 0.1, 0.2],
        },
        background: BackgroundConfig {
            u: 0.1,
            v: 0.1,
            eta: 0.05,
            delta: 0.1,
            theta_scale: 1.0,
            stilde: "product".into(),
        },
        cascade: Some(CascadeConfig {
            v_seq: vec![0.1, 0.05, 0.025, 0.0125],
            epsj_seq: vec![0.1, 0.05, 0.025, 0.0125],
            epsk_seq: vec![0.1, 0.05, 0.025, 0.0125],
            u_seq: vec![0.1, 0.05, 0.025, 0.0125],
            l_seq: vec![2, 4, 8],
            snapshot_times: vec![0.05, 0.1, 0.2],
        }),
        audit: None,
        output: OutputConfig { directory: "out/lemma41".into(), formats: vec!["csv".into(), "json".into()] },
    }
}

fn lemma36() -> ExperimentConfig {
    let t_end = 0.2;
    ExperimentConfig {
        grid: GridConfig {
            s_min: -50.0,
            s_max: -2.0,
            n_nodes: 1024,
            bc_inner: "neumann".into(),
            bc_inner_value: None,
            bc_outer_value: -3.0 * 2f64.ln(),
        },
        divisors: vec![DivisorConfig {
            kind: "cusp".into(),
            coefficient: 1.0,
            epsilon: 0.0,
            scale: 1.0,
        }],
        flow: FlowConfig {
            normalized: false,
            t_end,
            dt_init: 2e-5,
            dt_policy: "adaptive".into(),
            newton_tol: 1e-10,
            max_newton: 50,
            l_index: 5,
            initial: "pole".into(),
            pole_coefficient: Some(3.0),
            snapshot_times: audit_snapshot_times(t_end),
        },
        background: BackgroundConfig {
            u: 0.0,
            v: 1e-5,
            eta: 0.05,
            delta: 0.1,
            theta_scale: 1.0,
            stilde: "product".into(),
        },
        cascade: None,
        audit: Some(AuditConfig {
            audits: vec![
                "upper".into(),
                "lower".into(),
                "time-derivative".into(),
                "trace".into(),
                "l1-continuity".into(),
            ],
            delta: 0.1,
            tolerance: 0.05,
            trace_calibration_time: 0.05,
            l1_threshold: 5e-2,
            l1_threshold_time: 1e-3,
        }),
        output: OutputConfig { directory: "out/lemma36".into(), formats: vec!["csv".into(), "json".into()] },
    }
}

fn continuity_smooth() -> ExperimentConfig {
    let mut config = lemma36();
    config.flow.initial = "zero".into();
    config.flow.pole_coefficient = None;
    config.flow.l_index = 1;
    config.grid.bc_outer_value = 0.0;
    if let Some(audit) = &mut config.audit {
        audit.l1_threshold = 1e-2;
    }
    config.output.directory = "out/continuity-smooth".into();
    config
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "cusp-ke" => Ok(cusp_ke()),
        "cone-ke" => cone_ke(),
        "lemma41" => Ok(lemma41()),
        "lemma36" => Ok(lemma36()),
        "continuity-smooth" => Ok(continuity_smooth()),
        other => bail!("unknown preset {other:?}; available: {}", PRESET_NAMES.join(", ")),
    }
}
