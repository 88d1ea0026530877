//! Experiment configuration: flat, sectioned TOML with a strict schema
//! (unknown keys are rejected) that round-trips through `emit`.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cuspflow_core::{BackgroundSpec, Boundary, CascadeSchedule, DivisorKind, DivisorSpec,
                    DtPolicy, FlowParams, InitialData, RadialGrid, StildeChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub n_nodes: usize,
    /// "neumann" or "dirichlet"
    pub bc_inner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc_inner_value: Option<f64>,
    pub bc_outer_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisorConfig {
    /// "cusp" | "conic" | "canonical"
    pub kind: String,
    /// b for conic, a for canonical; ignored for cusp
    #[serde(default)]
    pub coefficient: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub normalized: bool,
    pub t_end: f64,
    pub dt_init: f64,
    /// "adaptive" | "fixed"
    pub dt_policy: String,
    pub newton_tol: f64,
    pub max_newton: u32,
    pub l_index: u32,
    /// "zero" | "pole"
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole_coefficient: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundConfig {
    pub u: f64,
    pub v: f64,
    pub eta: f64,
    pub delta: f64,
    pub theta_scale: f64,
    /// "product" or a divisor index
    pub stilde: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    pub v_seq: Vec<f64>,
    pub epsj_seq: Vec<f64>,
    pub epsk_seq: Vec<f64>,
    pub u_seq: Vec<f64>,
    pub l_seq: Vec<u32>,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// subset of: upper, lower, time-derivative, trace, l1-continuity, normalized
    pub audits: Vec<String>,
    pub delta: f64,
    pub tolerance: f64,
    /// calibration floor for the trace audit
    #[serde(default = "default_trace_cal")]
    pub trace_calibration_time: f64,
    #[serde(default = "default_l1_threshold")]
    pub l1_threshold: f64,
    #[serde(default = "default_l1_time")]
    pub l1_threshold_time: f64,
}

fn default_trace_cal() -> f64 {
    0.05
}
fn default_l1_threshold() -> f64 {
    1e-2
}
fn default_l1_time() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    /// "csv" and/or "json"; both are always understood
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default, rename = "divisor", skip_serializing_if = "Vec::is_empty")]
    pub divisors: Vec<DivisorConfig>,
    pub flow: FlowConfig,
    pub background: BackgroundConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config")
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a hash of the canonical emission with the output section
    /// normalized away; identifies the experiment, not where it lands.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig { directory: String::new(), formats: Vec::new() };
        let text = canonical.emit();
        let mut h: u64 = 0xcbf29ce484222325;
        for byte in text.as_bytes() {
            h ^= u64::from(*byte);
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    pub fn build_grid(&self) -> Result<RadialGrid> {
        let bc_inner = match self.grid.bc_inner.as_str() {
            "neumann" => Boundary::NeumannZero,
            "dirichlet" => Boundary::Dirichlet(
                self.grid
                    .bc_inner_value
                    .context("bc_inner = \"dirichlet\" requires bc_inner_value")?,
            ),
            other => bail!("grid.bc_inner must be \"neumann\" or \"dirichlet\", got {other:?}"),
        };
        RadialGrid::new(
            self.grid.s_min,
            self.grid.s_max,
            self.grid.n_nodes,
            bc_inner,
            Boundary::Dirichlet(self.grid.bc_outer_value),
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn build_divisors(&self) -> Result<Vec<DivisorSpec>> {
        self.divisors
            .iter()
            .map(|d| {
                let kind = match d.kind.as_str() {
                    "cusp" => DivisorKind::Cusp,
                    "conic" => DivisorKind::Conic { b: d.coefficient },
                    "canonical" => DivisorKind::Canonical { a: d.coefficient },
                    other => bail!("divisor.kind must be cusp|conic|canonical, got {other:?}"),
                };
                Ok(DivisorSpec { kind, epsilon: d.epsilon, hermitian_scale: d.scale })
            })
            .collect()
    }

    pub fn build_background(&self) -> Result<BackgroundSpec> {
        Ok(BackgroundSpec {
            t: 0.0,
            u: self.background.u,
            v: self.background.v,
            eta: self.background.eta,
            delta: self.background.delta,
            divisors: self.build_divisors()?,
            theta_scale: self.background.theta_scale,
        })
    }

    pub fn build_stilde(&self) -> Result<StildeChoice> {
        match self.background.stilde.as_str() {
            "product" => Ok(StildeChoice::Product),
            s => {
                let index: usize = s
                    .parse()
                    .with_context(|| format!("background.stilde must be \"product\" or an index, got {s:?}"))?;
                Ok(StildeChoice::Divisor(index))
            }
        }
    }

    pub fn build_initial(&self) -> Result<InitialData> {
        match self.flow.initial.as_str() {
            "zero" => Ok(InitialData::Zero),
            "pole" => Ok(InitialData::ZeroLelongPole {
                c: self
                    .flow
                    .pole_coefficient
                    .context("flow.initial = \"pole\" requires flow.pole_coefficient")?,
            }),
            other => bail!("flow.initial must be \"zero\" or \"pole\", got {other:?}"),
        }
    }

    pub fn build_flow_params(&self) -> Result<FlowParams> {
        let dt_policy = match self.flow.dt_policy.as_str() {
            "adaptive" => DtPolicy::Adaptive,
            "fixed" => DtPolicy::Fixed,
            other => bail!("flow.dt_policy must be \"adaptive\" or \"fixed\", got {other:?}"),
        };
        Ok(FlowParams {
            background: self.build_background()?,
            l_index: self.flow.l_index,
            normalized: self.flow.normalized,
            t_end: self.flow.t_end,
            dt_init: self.flow.dt_init,
            newton_tol: self.flow.newton_tol,
            max_newton: self.flow.max_newton,
            dt_policy,
            snapshot_times: self.flow.snapshot_times.clone(),
        })
    }

    pub fn build_cascade_schedule(&self) -> Result<CascadeSchedule> {
        let c = self.cascade.as_ref().context("config has no [cascade] section")?;
        Ok(CascadeSchedule {
            v_seq: c.v_seq.clone(),
            epsj_seq: c.epsj_seq.clone(),
            epsk_seq: c.epsk_seq.clone(),
            u_seq: c.u_seq.clone(),
            l_seq: c.l_seq.clone(),
            snapshot_times: c.snapshot_times.clone(),
        })
    }
}
