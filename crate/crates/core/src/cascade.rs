//! Monotone regularization cascade: limits in `v`, `eps_j`, `eps_k`, `u`, `l`
//! in turn, with the five comparison orderings checked on consecutive stages.
//!
//! All stage runs share one fixed time grid (`DtPolicy::Fixed` with the base
//! `dt_init`), so the discrete comparison principle applies step by step and
//! the orderings hold to solver tolerance rather than to time-discretization
//! error.

use alloc::vec::Vec;
use core::fmt;

use crate::flow::{make_initial, run_flow_recorded, DtPolicy, FlowError, FlowParams, InitialData,
                  RunHistory};
use crate::geometry::{conic_f_field, weight_table, DivisorKind, GeometryError, StildeChoice};
use crate::grid::{Field, RadialGrid};
use crate::math;

/// The five Lemma orderings, named by the parameter each one varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Carlson-Griffiths weight `v`: solutions non-increasing as `v` shrinks.
    V,
    /// Conic regularization `eps_j`: the `F`-shifted solutions are
    /// non-increasing as `eps_j` shrinks.
    EpsJ,
    /// Canonical regularization `eps_k`: reversed; solutions non-decreasing
    /// as `eps_k` shrinks.
    EpsK,
    /// Ample perturbation `u`: solutions non-increasing as `u` shrinks.
    U,
    /// Initial-data smoothing index `l`: solutions non-increasing as `l`
    /// grows.
    L,
}

impl Ordering {
    pub const ALL: [Ordering; 5] = [Ordering::V, Ordering::EpsJ, Ordering::EpsK, Ordering::U, Ordering::L];

    pub fn name(self) -> &'static str {
        match self {
            Ordering::V => "v",
            Ordering::EpsJ => "eps_j",
            Ordering::EpsK => "eps_k",
            Ordering::U => "u",
            Ordering::L => "l",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSchedule {
    pub v_seq: Vec<f64>,
    pub epsj_seq: Vec<f64>,
    pub epsk_seq: Vec<f64>,
    pub u_seq: Vec<f64>,
    pub l_seq: Vec<u32>,
    pub snapshot_times: Vec<f64>,
}

impl CascadeSchedule {
    /// Geometric ratio-1/2 defaults: 4 terms from 0.1 for the real
    /// parameters, `l = (2, 4, 8)`.
    pub fn default_geometric(snapshot_times: Vec<f64>) -> Self {
        let geo = alloc::vec![0.1, 0.05, 0.025, 0.0125];
        CascadeSchedule {
            v_seq: geo.clone(),
            epsj_seq: geo.clone(),
            epsk_seq: geo.clone(),
            u_seq: geo,
            l_seq: alloc::vec![2, 4, 8],
            snapshot_times,
        }
    }

    fn validate(&self) -> Result<(), CascadeError> {
        for (name, seq) in [
            ("v_seq", &self.v_seq),
            ("epsj_seq", &self.epsj_seq),
            ("epsk_seq", &self.epsk_seq),
            ("u_seq", &self.u_seq),
        ] {
            if seq.is_empty() {
                return Err(CascadeError::BadSchedule(name));
            }
            if seq.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(CascadeError::BadSchedule(name));
            }
            // strictly monotone in either direction; an inverted sequence is
            // allowed and simply produces failing margins (audit data)
            if seq.len() >= 2 {
                let dec = seq.windows(2).all(|w| w[1] < w[0]);
                let inc = seq.windows(2).all(|w| w[1] > w[0]);
                if !(dec || inc) {
                    return Err(CascadeError::BadSchedule(name));
                }
            }
        }
        if self.l_seq.is_empty() || self.l_seq.iter().any(|&l| l == 0) {
            return Err(CascadeError::BadSchedule("l_seq"));
        }
        if self.l_seq.len() >= 2 {
            let inc = self.l_seq.windows(2).all(|w| w[1] > w[0]);
            let dec = self.l_seq.windows(2).all(|w| w[1] < w[0]);
            if !(inc || dec) {
                return Err(CascadeError::BadSchedule("l_seq"));
            }
        }
        if self.snapshot_times.is_empty() {
            return Err(CascadeError::BadSchedule("snapshot_times"));
        }
        Ok(())
    }
}

/// One parameter tuple of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeTuple {
    pub v: f64,
    pub eps_j: f64,
    pub eps_k: f64,
    pub u: f64,
    pub l: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRunSpec {
    pub ordering: Ordering,
    pub stage_index: usize,
    pub tuple: CascadeTuple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeParams {
    /// Base flow parameters; `background.v`, `background.u`, the divisor
    /// epsilons, `l_index` and the snapshot times are overridden per stage.
    pub flow: FlowParams,
    pub initial: InitialData,
    pub stilde: StildeChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub spec: CascadeRunSpec,
    pub history: RunHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub schedule: CascadeSchedule,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CascadeError {
    BadSchedule(&'static str),
    /// A stage run failed; carries the offending tuple.
    Run { tuple: CascadeTuple, error: FlowError },
    Geometry(GeometryError),
    NotEnoughStages(&'static str),
    NoSuchSnapshot(f64),
}

impl fmt::Display for CascadeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CascadeError::BadSchedule(name) => {
                write!(f, "cascade schedule invalid: {name} must be strictly monotone and positive")
            }
            CascadeError::Run { tuple, error } => write!(
                f,
                "stage run failed at (v={}, eps_j={}, eps_k={}, u={}, l={}): {error}",
                tuple.v, tuple.eps_j, tuple.eps_k, tuple.u, tuple.l
            ),
            CascadeError::Geometry(e) => write!(f, "{e}"),
            CascadeError::NotEnoughStages(name) => {
                write!(f, "ordering {name} needs at least 2 stages")
            }
            CascadeError::NoSuchSnapshot(t) => write!(f, "no snapshot recorded at t = {t}"),
        }
    }
}

impl core::error::Error for CascadeError {}

impl From<GeometryError> for CascadeError {
    fn from(e: GeometryError) -> Self {
        CascadeError::Geometry(e)
    }
}

/// Expands a schedule into the nested stage order of the construction:
/// `v` first (all other parameters at their initial values), then `eps_j`,
/// `eps_k`, `u`, and the smoothing index `l` last.
pub fn plan_cascade(schedule: &CascadeSchedule) -> Result<Vec<CascadeRunSpec>, CascadeError> {
    schedule.validate()?;
    let last = |seq: &Vec<f64>| *seq.last().expect("validated nonempty");
    let mut specs = Vec::new();
    let base = CascadeTuple {
        v: schedule.v_seq[0],
        eps_j: schedule.epsj_seq[0],
        eps_k: schedule.epsk_seq[0],
        u: schedule.u_seq[0],
        l: schedule.l_seq[0],
    };
    for (i, &v) in schedule.v_seq.iter().enumerate() {
        specs.push(CascadeRunSpec { ordering: Ordering::V, stage_index: i, tuple: CascadeTuple { v, ..base } });
    }
    let v_final = last(&schedule.v_seq);
    for (i, &eps_j) in schedule.epsj_seq.iter().enumerate() {
        specs.push(CascadeRunSpec {
            ordering: Ordering::EpsJ,
            stage_index: i,
            tuple: CascadeTuple { v: v_final, eps_j, ..base },
        });
    }
    let epsj_final = last(&schedule.epsj_seq);
    for (i, &eps_k) in schedule.epsk_seq.iter().enumerate() {
        specs.push(CascadeRunSpec {
            ordering: Ordering::EpsK,
            stage_index: i,
            tuple: CascadeTuple { v: v_final, eps_j: epsj_final, eps_k, ..base },
        });
    }
    let epsk_final = last(&schedule.epsk_seq);
    for (i, &u) in schedule.u_seq.iter().enumerate() {
        specs.push(CascadeRunSpec {
            ordering: Ordering::U,
            stage_index: i,
            tuple: CascadeTuple { v: v_final, eps_j: epsj_final, eps_k: epsk_final, u, ..base },
        });
    }
    let u_final = last(&schedule.u_seq);
    for (i, &l) in schedule.l_seq.iter().enumerate() {
        specs.push(CascadeRunSpec {
            ordering: Ordering::L,
            stage_index: i,
            tuple: CascadeTuple { v: v_final, eps_j: epsj_final, eps_k: epsk_final, u: u_final, l },
        });
    }
    Ok(specs)
}

/// Flow parameters for one tuple: background and initial data overridden,
/// fixed time grid so stages share their step sequence.
pub fn tuple_params(
    base: &CascadeParams,
    schedule: &CascadeSchedule,
    tuple: &CascadeTuple,
) -> FlowParams {
    let mut params = base.flow.clone();
    params.background.v = tuple.v;
    params.background.u = tuple.u;
    for d in &mut params.background.divisors {
        match d.kind {
            DivisorKind::Conic { .. } => d.epsilon = tuple.eps_j,
            DivisorKind::Canonical { .. } => d.epsilon = tuple.eps_k,
            DivisorKind::Cusp => {}
        }
    }
    params.l_index = tuple.l;
    params.snapshot_times = schedule.snapshot_times.clone();
    params.dt_policy = DtPolicy::Fixed;
    params
}

/// Runs one stage tuple.
///
/// The grid's Dirichlet data is interpreted as the value of the
/// regularization-independent shifted potential `phi + eta sum_j F`: the raw
/// unknown's pin is shifted by `-eta sum_j F(., eps_j)` per run. Otherwise an
/// eps_j-independent raw pin would order the shifted boundary values the
/// wrong way and break the eps_j comparison at the boundary.
pub fn execute_run(
    base: &CascadeParams,
    schedule: &CascadeSchedule,
    spec: &CascadeRunSpec,
    grid: &RadialGrid,
) -> Result<RunRecord, CascadeError> {
    let params = tuple_params(base, schedule, &spec.tuple);
    let shift = conic_f_field(&params.background.divisors, grid)?;
    let eta = params.background.eta;
    let mut run_grid = grid.clone();
    if let crate::grid::Boundary::Dirichlet(v) = run_grid.bc_inner {
        run_grid.bc_inner = crate::grid::Boundary::Dirichlet(v - eta * shift.values[0]);
    }
    if let crate::grid::Boundary::Dirichlet(v) = run_grid.bc_outer {
        run_grid.bc_outer =
            crate::grid::Boundary::Dirichlet(v - eta * shift.values[grid.n_nodes - 1]);
    }
    let run = || -> Result<RunHistory, FlowError> {
        let weights = weight_table(
            &params.background.divisors,
            &run_grid,
            base.stilde,
            params.background.delta,
        )?;
        let initial = make_initial(&base.initial, params.l_index, &params.background, &run_grid)?;
        run_flow_recorded(&params, &initial, &weights, &run_grid)
    };
    match run() {
        Ok(history) => Ok(RunRecord { spec: spec.clone(), history }),
        Err(error) => Err(CascadeError::Run { tuple: spec.tuple, error }),
    }
}

/// Runs the whole cascade sequentially. Callers that want to fan stages out
/// across workers can use [`plan_cascade`] + [`execute_run`] directly.
pub fn run_cascade(
    schedule: &CascadeSchedule,
    base: &CascadeParams,
    grid: &RadialGrid,
) -> Result<CascadeResult, CascadeError> {
    let specs = plan_cascade(schedule)?;
    let mut runs = Vec::with_capacity(specs.len());
    for spec in &specs {
        runs.push(execute_run(base, schedule, spec, grid)?);
    }
    Ok(CascadeResult { schedule: schedule.clone(), runs })
}

impl CascadeResult {
    pub fn stage_runs(&self, ordering: Ordering) -> Vec<&RunRecord> {
        self.runs.iter().filter(|r| r.spec.ordering == ordering).collect()
    }

    /// Sup-norm differences of consecutive stage runs at every snapshot time
    /// (max over times), certifying Cauchy behavior of the monotone limit.
    pub fn stage_differences(&self, ordering: Ordering) -> Vec<f64> {
        let runs = self.stage_runs(ordering);
        let mut out = Vec::new();
        for pair in runs.windows(2) {
            let mut worst = 0.0f64;
            for (a, b) in pair[0].history.snapshots.iter().zip(&pair[1].history.snapshots) {
                for (x, y) in a.u.values.iter().zip(&b.u.values) {
                    worst = worst.max(math::abs(x - y));
                }
            }
            out.push(worst);
        }
        out
    }
}

/// Minimum signed margin of the named ordering over consecutive stage pairs,
/// snapshot times and nodes. Non-negative (to solver tolerance) when the
/// ordering holds. For `eps_j` the comparison applies to the `F`-shifted
/// potential `phi + eta * sum_j F(|S_j|^2, 1-b_j, eps_j^2)`.
pub fn check_monotone(
    result: &CascadeResult,
    base: &CascadeParams,
    ordering: Ordering,
) -> Result<f64, CascadeError> {
    let runs = result.stage_runs(ordering);
    if runs.len() < 2 {
        return Err(CascadeError::NotEnoughStages(ordering.name()));
    }
    let shifted = |record: &RunRecord| -> Result<Vec<Field>, CascadeError> {
        let params = tuple_params(base, &result.schedule, &record.spec.tuple);
        // on the record's own grid: stage runs carry shifted Dirichlet data
        let shift = conic_f_field(&params.background.divisors, &record.history.grid)?;
        Ok(record
            .history
            .snapshots
            .iter()
            .map(|s| s.u.scaled_add(params.background.eta, &shift))
            .collect())
    };
    let mut margin = f64::INFINITY;
    for pair in runs.windows(2) {
        let (first, second) = (pair[0], pair[1]);
        let (fields_first, fields_second): (Vec<Field>, Vec<Field>) = match ordering {
            Ordering::EpsJ => (shifted(first)?, shifted(second)?),
            _ => (
                first.history.snapshots.iter().map(|s| s.u.clone()).collect(),
                second.history.snapshots.iter().map(|s| s.u.clone()).collect(),
            ),
        };
        for (a, b) in fields_first.iter().zip(&fields_second) {
            for (x, y) in a.values.iter().zip(&b.values) {
                // V, EpsJ, U, L: later stage lies below the earlier one;
                // EpsK is reversed.
                let signed = match ordering {
                    Ordering::EpsK => y - x,
                    _ => x - y,
                };
                margin = margin.min(signed);
            }
        }
    }
    Ok(margin)
}

/// Terminal-stage field at the requested snapshot time plus a Richardson
/// estimate of the remaining cascade error (sup difference of the last two
/// stages at that time; infinite for a single-stage cascade).
pub fn limit_extract(result: &CascadeResult, snapshot_time: f64) -> Result<(Field, f64), CascadeError> {
    let last_run = result.runs.last().ok_or(CascadeError::NotEnoughStages("cascade"))?;
    let terminal = last_run
        .history
        .snapshot_at(snapshot_time)
        .ok_or(CascadeError::NoSuchSnapshot(snapshot_time))?;
    let final_stage = result.stage_runs(last_run.spec.ordering);
    let tag = if final_stage.len() >= 2 {
        let prev = final_stage[final_stage.len() - 2]
            .history
            .snapshot_at(snapshot_time)
            .ok_or(CascadeError::NoSuchSnapshot(snapshot_time))?;
        let mut worst = 0.0f64;
        for (x, y) in terminal.u.values.iter().zip(&prev.u.values) {
            worst = worst.max(math::abs(x - y));
        }
        worst
    } else {
        f64::INFINITY
    };
    Ok((terminal.u.clone(), tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackgroundSpec, DivisorSpec};
    use crate::grid::Boundary;

    fn small_setup() -> (RadialGrid, CascadeParams) {
        // Dirichlet datum compatible with the smallest truncation index of
        // the l sequence: max(-3 log 2, -2) = -2. Runs with larger l then see
        // the boundary pulled up, which the damped Newton absorbs easily;
        // pulling it down would squeeze the metric at the wall.
        let grid = RadialGrid::new(
            -30.0,
            -2.0,
            96,
            Boundary::NeumannZero,
            Boundary::Dirichlet(-2.0),
        )
        .unwrap();
        let background = BackgroundSpec {
            t: 0.0,
            u: 0.1,
            v: 0.1,
            eta: 0.05,
            delta: 0.1,
            divisors: alloc::vec![
                DivisorSpec::cusp(1.0),
                DivisorSpec::conic(0.5, 0.1, 1.0),
                DivisorSpec::canonical(0.5, 0.1, 1.0),
            ],
            theta_scale: 1.0,
        };
        let flow = FlowParams {
            background,
            l_index: 2,
            normalized: false,
            t_end: 0.1,
            dt_init: 2e-3,
            newton_tol: 1e-10,
            max_newton: 50,
            dt_policy: DtPolicy::Fixed,
            snapshot_times: alloc::vec![0.05, 0.1],
        };
        let params = CascadeParams {
            flow,
            initial: InitialData::ZeroLelongPole { c: 3.0 },
            stilde: StildeChoice::Product,
        };
        (grid, params)
    }

    #[test]
    fn plan_orders_and_counts() {
        let schedule = CascadeSchedule::default_geometric(alloc::vec![0.05, 0.1]);
        let specs = plan_cascade(&schedule).unwrap();
        assert_eq!(specs.len(), 4 + 4 + 4 + 4 + 3);
        // v varies first holding everything else at initial values
        assert_eq!(specs[0].tuple.v, 0.1);
        assert_eq!(specs[3].tuple.v, 0.0125);
        assert_eq!(specs[3].tuple.eps_j, 0.1);
        // final l stage carries all terminal values
        let last = specs.last().unwrap();
        assert_eq!(last.tuple.v, 0.0125);
        assert_eq!(last.tuple.eps_j, 0.0125);
        assert_eq!(last.tuple.eps_k, 0.0125);
        assert_eq!(last.tuple.u, 0.0125);
        assert_eq!(last.tuple.l, 8);
    }

    #[test]
    fn schedule_validation() {
        let mut s = CascadeSchedule::default_geometric(alloc::vec![0.1]);
        s.v_seq = alloc::vec![0.1, 0.2, 0.05]; // not monotone
        assert!(matches!(plan_cascade(&s), Err(CascadeError::BadSchedule("v_seq"))));
        let mut s = CascadeSchedule::default_geometric(alloc::vec![0.1]);
        s.u_seq = alloc::vec![0.1, -0.05];
        assert!(plan_cascade(&s).is_err());
        // single-entry sequences are allowed (degenerate cascade)
        let s = CascadeSchedule {
            v_seq: alloc::vec![0.1],
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.1],
            l_seq: alloc::vec![2],
            snapshot_times: alloc::vec![0.1],
        };
        assert_eq!(plan_cascade(&s).unwrap().len(), 5);
    }

    #[test]
    fn two_stage_orderings_hold() {
        let (grid, params) = small_setup();
        let schedule = CascadeSchedule {
            v_seq: alloc::vec![0.1, 0.05],
            epsj_seq: alloc::vec![0.1, 0.05],
            epsk_seq: alloc::vec![0.1, 0.05],
            u_seq: alloc::vec![0.1, 0.05],
            l_seq: alloc::vec![2, 4],
            snapshot_times: alloc::vec![0.05, 0.1],
        };
        let result = run_cascade(&schedule, &params, &grid).unwrap();
        assert_eq!(result.runs.len(), 10);
        for ordering in Ordering::ALL {
            let margin = check_monotone(&result, &params, ordering).unwrap();
            assert!(
                margin >= -2.0 * params.flow.newton_tol,
                "{} margin {margin}",
                ordering.name()
            );
        }
    }

    #[test]
    fn inverted_sequence_fails_ordering() {
        let (grid, params) = small_setup();
        let schedule = CascadeSchedule {
            v_seq: alloc::vec![0.05, 0.1], // inverted on purpose
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.1],
            l_seq: alloc::vec![2],
            snapshot_times: alloc::vec![0.1],
        };
        let result = run_cascade(&schedule, &params, &grid).unwrap();
        let margin = check_monotone(&result, &params, Ordering::V).unwrap();
        assert!(margin < -1e-6, "inverted v margin should be clearly negative, got {margin}");
    }

    #[test]
    fn identical_stages_zero_margin() {
        let (grid, params) = small_setup();
        let schedule = CascadeSchedule {
            v_seq: alloc::vec![0.1],
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.08, 0.08 * (1.0 - 1e-14)],
            l_seq: alloc::vec![2],
            snapshot_times: alloc::vec![0.1],
        };
        // effectively identical consecutive u stages: margin ~ 0
        let result = run_cascade(&schedule, &params, &grid).unwrap();
        let margin = check_monotone(&result, &params, Ordering::U).unwrap();
        assert!(margin.abs() <= 1e-9, "{margin}");
    }

    #[test]
    fn limit_extract_terminal_and_tags() {
        let (grid, params) = small_setup();
        let schedule = CascadeSchedule {
            v_seq: alloc::vec![0.1, 0.05],
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.1],
            l_seq: alloc::vec![2, 4],
            snapshot_times: alloc::vec![0.05, 0.1],
        };
        let result = run_cascade(&schedule, &params, &grid).unwrap();
        let (field, tag) = limit_extract(&result, 0.1).unwrap();
        let last = result.runs.last().unwrap();
        assert_eq!(field, last.history.snapshot_at(0.1).unwrap().u);
        assert!(tag.is_finite() && tag >= 0.0);
        assert!(matches!(
            limit_extract(&result, 0.0333),
            Err(CascadeError::NoSuchSnapshot(_))
        ));

        // single-stage final parameter: +infinity sentinel
        let schedule1 = CascadeSchedule {
            v_seq: alloc::vec![0.1],
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.1],
            l_seq: alloc::vec![2],
            snapshot_times: alloc::vec![0.1],
        };
        let result1 = run_cascade(&schedule1, &params, &grid).unwrap();
        let (_field, tag) = limit_extract(&result1, 0.1).unwrap();
        assert!(tag.is_infinite());
    }

    #[test]
    fn determinism_across_repeat() {
        let (grid, params) = small_setup();
        let schedule = CascadeSchedule {
            v_seq: alloc::vec![0.1, 0.05],
            epsj_seq: alloc::vec![0.1],
            epsk_seq: alloc::vec![0.1],
            u_seq: alloc::vec![0.1],
            l_seq: alloc::vec![2],
            snapshot_times: alloc::vec![0.1],
        };
        let a = run_cascade(&schedule, &params, &grid).unwrap();
        let b = run_cascade(&schedule, &params, &grid).unwrap();
        assert_eq!(a, b);
    }
}
