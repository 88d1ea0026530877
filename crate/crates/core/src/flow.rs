//! Implicit time-stepping for the reduced Monge-Ampere flow.
//!
//! Unnormalized: `du/dt = log(A_ss(t) + u_ss) - s + log_weight`.
//! Normalized:   `du/dt = log(A_ss(t) + u_ss) - s + log_weight - u`
//! (the `nt` term is dropped; it only shifts the potential by a function of
//! time and leaves the metric unchanged).
//!
//! Each step solves `u_new - u_old - dt * rhs(u_new, t + dt) = 0` by damped
//! Newton with an exact tridiagonal Jacobian; every iterate keeps the metric
//! coefficient `A_ss + u_ss` strictly positive through step-length
//! backtracking. On Newton failure the step is retried with half the time
//! step, up to 20 halvings.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{assemble_background_at, conic_f_field, BackgroundSpec, GeometryError,
                      WeightTable};
use crate::grid::{Boundary, Field, GridError, RadialGrid};
use crate::math;
use crate::tridiag;

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    Geometry(GeometryError),
    Grid(GridError),
    BadParams(&'static str),
    /// Initial data violates discrete quasi-plurisubharmonicity.
    Inadmissible { node: usize, value: f64 },
    NonPositiveMetric { node: usize, value: f64, t: f64 },
    /// Newton failed even after exhausting time-step halvings: grid too
    /// coarse or background not Kaehler.
    StepFailure { t: f64, dt: f64, residual: f64 },
    NotNormalized,
    PoleCoefficientNotPositive(f64),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::Geometry(e) => write!(f, "{e}"),
            FlowError::Grid(e) => write!(f, "{e}"),
            FlowError::BadParams(m) => write!(f, "invalid flow parameters: {m}"),
            FlowError::Inadmissible { node, value } => write!(
                f,
                "initial data not quasi-plurisubharmonic: A_ss + f_ss = {value} at node {node}"
            ),
            FlowError::NonPositiveMetric { node, value, t } => write!(
                f,
                "metric coefficient {value} <= 0 at node {node}, t = {t}"
            ),
            FlowError::StepFailure { t, dt, residual } => write!(
                f,
                "implicit step failed at t = {t} (dt = {dt}, residual {residual}) after halving exhaustion"
            ),
            FlowError::NotNormalized => write!(f, "operation requires normalized mode"),
            FlowError::PoleCoefficientNotPositive(c) => {
                write!(f, "pole coefficient must be > 0, got {c}")
            }
        }
    }
}

impl core::error::Error for FlowError {}

impl From<GeometryError> for FlowError {
    fn from(e: GeometryError) -> Self {
        FlowError::Geometry(e)
    }
}

impl From<GridError> for FlowError {
    fn from(e: GridError) -> Self {
        FlowError::Grid(e)
    }
}

/// Initial potential kinds. The pole kind is the truncation
/// `max(-c log(-s), -l)`, a decreasing-in-`l` regularization of a
/// zero-Lelong logarithmic pole.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    SmoothField(Field),
    ZeroLelongPole { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtPolicy {
    /// Grow/shrink the step targeting Newton convergence in <= 8 iterations.
    Adaptive,
    /// Keep `dt_init` throughout; runs compared against each other (the
    /// cascade) share one time grid this way.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub background: BackgroundSpec,
    pub l_index: u32,
    pub normalized: bool,
    pub t_end: f64,
    pub dt_init: f64,
    pub newton_tol: f64,
    pub max_newton: u32,
    pub dt_policy: DtPolicy,
    /// Times at which the run records full snapshots (the audit hooks fire
    /// there); `t = 0` and `t_end` are always included.
    pub snapshot_times: Vec<f64>,
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.t_end > 0.0) {
            return Err(FlowError::BadParams("t_end must be > 0"));
        }
        if !(self.dt_init > 0.0 && self.dt_init <= self.t_end) {
            return Err(FlowError::BadParams("need 0 < dt_init <= t_end"));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-6) {
            return Err(FlowError::BadParams("newton_tol must lie in (0, 1e-6]"));
        }
        if self.max_newton < 2 {
            return Err(FlowError::BadParams("max_newton must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub sup_udot: f64,
    pub inf_udot: f64,
    pub min_metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: Field,
    pub t: f64,
    pub step_count: u64,
    pub diagnostics: Vec<DiagnosticsRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub accepted: bool,
    pub newton_iters: u32,
    pub residual: f64,
    pub dt_used: f64,
}

/// Snapshot of the run at one recorded time. `u_dot` is the accepted-step
/// right-hand side at that time (exact for the implicit equation at the
/// step's endpoint); it is absent at `t = 0` where the metric may be
/// degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub u_dot: Option<Field>,
}

/// Everything the audits need from a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub grid: RadialGrid,
    pub background: BackgroundSpec,
    pub normalized: bool,
    pub newton_tol: f64,
    pub t_end: f64,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

impl RunHistory {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| math::abs(s.t - t) <= 1e-12 * (1.0 + math::abs(t)))
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("run has at least the initial snapshot")
    }
}

/// True at nodes whose value is pinned by Dirichlet data.
fn pinned_nodes(grid: &RadialGrid) -> (bool, bool) {
    (
        matches!(grid.bc_inner, Boundary::Dirichlet(_)),
        matches!(grid.bc_outer, Boundary::Dirichlet(_)),
    )
}

/// Second derivative of the evolving unknown: centered interior, mirror
/// stencil at a Neumann-zero inner node, one-sided at pinned ends (nodes
/// where the value is Dirichlet data; reported, never solved for).
fn d2_unknown(u: &[f64], grid: &RadialGrid, out: &mut [f64]) {
    let n = u.len();
    let h2 = grid.spacing * grid.spacing;
    for i in 1..n - 1 {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
    }
    out[0] = match grid.bc_inner {
        Boundary::NeumannZero => 2.0 * (u[1] - u[0]) / h2,
        Boundary::Dirichlet(_) => (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2,
    };
    out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
}

/// Metric coefficient field `A_ss(t) + u_ss` with the flow's stencils.
pub fn metric_field(
    u: &Field,
    t: f64,
    background: &BackgroundSpec,
    normalized: bool,
) -> Result<Field, FlowError> {
    let grid = &u.grid;
    let (_a, a_ss) = assemble_background_at(background, grid, t, normalized)?;
    let mut uss = vec![0.0; grid.n_nodes];
    d2_unknown(&u.values, grid, &mut uss);
    let values = a_ss.values.iter().zip(uss.iter()).map(|(&a, &b)| a + b).collect();
    Ok(Field::from_values(grid, values)?)
}

/// Builds the initial potential `phi_{l,0} - eta * sum_j F(|S_j|^2, 1-b_j, eps_j^2)`.
pub fn make_initial(
    kind: &InitialData,
    l_index: u32,
    background: &BackgroundSpec,
    grid: &RadialGrid,
) -> Result<Field, FlowError> {
    let base = match kind {
        InitialData::Zero => Field::constant(grid, 0.0),
        InitialData::SmoothField(f) => {
            if f.len() != grid.n_nodes {
                return Err(FlowError::Grid(GridError::LengthMismatch {
                    expected: grid.n_nodes,
                    got: f.len(),
                }));
            }
            f.clone()
        }
        InitialData::ZeroLelongPole { c } => {
            if !(*c > 0.0) {
                return Err(FlowError::PoleCoefficientNotPositive(*c));
            }
            let floor = -(l_index as f64);
            Field::from_fn(grid, |s| (-c * math::ln(-s)).max(floor))
        }
    };
    let shift = conic_f_field(&background.divisors, grid)?;
    let initial = base.scaled_add(-background.eta, &shift);

    // discrete quasi-plurisubharmonicity at t = 0 (where the normalized and
    // unnormalized backgrounds agree)
    let (_a, a_ss) = assemble_background_at(background, grid, 0.0, false)?;
    let mut uss = vec![0.0; grid.n_nodes];
    d2_unknown(&initial.values, grid, &mut uss);
    for i in 0..grid.n_nodes {
        let m = a_ss.values[i] + uss[i];
        if m < -1e-10 * (1.0 + math::abs(a_ss.values[i])) {
            return Err(FlowError::Inadmissible { node: i, value: m });
        }
    }
    Ok(initial)
}

/// Right-hand side of the flow at the state's time. Pinned Dirichlet nodes
/// do not move, so their entry is 0.
pub fn ma_rhs(
    state: &FlowState,
    params: &FlowParams,
    weights: &WeightTable,
) -> Result<Field, FlowError> {
    let grid = &state.u.grid;
    let n = grid.n_nodes;
    let (pin_inner, pin_outer) = pinned_nodes(grid);
    let m = metric_field(&state.u, state.t, &params.background, params.normalized)?;
    let mut values = vec![0.0; n];
    for i in 0..n {
        if (i == 0 && pin_inner) || (i == n - 1 && pin_outer) {
            continue;
        }
        if !(m.values[i] > 0.0) {
            return Err(FlowError::NonPositiveMetric {
                node: i,
                value: m.values[i],
                t: state.t,
            });
        }
        let s = grid.node(i);
        values[i] = math::ln(m.values[i]) - s + weights.log_weight.values[i];
        if params.normalized {
            values[i] -= state.u.values[i];
        }
    }
    Ok(Field::from_values(grid, values)?)
}

/// Sup-norm over interior nodes of the stationary normalized equation
/// `log(A_ss + u_ss) - s + log_weight - u`.
pub fn steady_residual(
    state: &FlowState,
    params: &FlowParams,
    weights: &WeightTable,
) -> Result<f64, FlowError> {
    if !params.normalized {
        return Err(FlowError::NotNormalized);
    }
    let rhs = ma_rhs(state, params, weights)?;
    Ok(crate::grid::sup_norm(&rhs, 1))
}

/// Potential-level normalization `phi~(t~) = e^{-t~} phi(e^{t~} - 1)`.
pub fn normalize_transform(unnormalized: impl Fn(f64) -> Field, t_tilde: f64) -> Field {
    let t = math::exp(t_tilde) - 1.0;
    let phi = unnormalized(t);
    let scale = math::exp(-t_tilde);
    phi.map(|v| scale * v)
}

struct NewtonWorkspace {
    m: Vec<f64>,
    uss: Vec<f64>,
    residual: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    delta: Vec<f64>,
    delta_ss: Vec<f64>,
    trial: Vec<f64>,
    trial_residual: Vec<f64>,
    work: Vec<f64>,
}

impl NewtonWorkspace {
    fn new(n: usize) -> Self {
        NewtonWorkspace {
            m: vec![0.0; n],
            uss: vec![0.0; n],
            residual: vec![0.0; n],
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            delta: vec![0.0; n],
            delta_ss: vec![0.0; n],
            trial: vec![0.0; n],
            trial_residual: vec![0.0; n],
            work: Vec::with_capacity(n),
        }
    }
}

/// Evaluates metric and implicit residual; returns the max-norm of the
/// residual, or None if the metric is non-positive somewhere.
#[allow(clippy::too_many_arguments)]
fn eval_residual(
    w: &[f64],
    u_old: &[f64],
    a_ss: &[f64],
    grid: &RadialGrid,
    weights: &WeightTable,
    dt: f64,
    nu: f64,
    pinned: &[Option<f64>],
    m: &mut [f64],
    uss: &mut [f64],
    out: &mut [f64],
) -> Option<f64> {
    let n = w.len();
    d2_unknown(w, grid, uss);
    for i in 0..n {
        m[i] = a_ss[i] + uss[i];
        // positivity is the solver's business only where log(m) is evaluated;
        // at pinned nodes m is a post-hoc one-sided reconstruction
        if pinned[i].is_none() && !(m[i] > 0.0) {
            return None;
        }
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        out[i] = match pinned[i] {
            Some(value) => w[i] - value,
            None => {
                let s = grid.node(i);
                let rhs = math::ln(m[i]) - s + weights.log_weight.values[i] - nu * w[i];
                w[i] - u_old[i] - dt * rhs
            }
        };
        if !out[i].is_finite() {
            return None;
        }
        worst = worst.max(math::abs(out[i]));
    }
    Some(worst)
}

fn newton_solve(
    u_old: &Field,
    t_new: f64,
    dt: f64,
    params: &FlowParams,
    weights: &WeightTable,
    ws: &mut NewtonWorkspace,
) -> Result<(Vec<f64>, u32, f64), f64> {
    let grid = &u_old.grid;
    let n = grid.n_nodes;
    let h2 = grid.spacing * grid.spacing;
    let nu = if params.normalized { 1.0 } else { 0.0 };

    let (_a, a_ss) = assemble_background_at(&params.background, grid, t_new, params.normalized)
        .map_err(|_| f64::INFINITY)?;
    let a_ss = &a_ss.values;

    let mut pinned: Vec<Option<f64>> = vec![None; n];
    if let Boundary::Dirichlet(v) = grid.bc_inner {
        pinned[0] = Some(v);
    }
    if let Boundary::Dirichlet(v) = grid.bc_outer {
        pinned[n - 1] = Some(v);
    }

    // Start from the previous state as-is. Incompatible Dirichlet data is
    // pulled in through the pinned rows of the Newton system itself, so the
    // positivity backtracking moderates the boundary jump instead of the
    // preset guess leaving the Kaehler cone outright.
    let mut w: Vec<f64> = u_old.values.clone();

    // residual floor: below this we are at rounding noise for this step
    let hard_tol = 2e-13;

    let mut res = match eval_residual(
        &w, &u_old.values, a_ss, grid, weights, dt, nu, &pinned, &mut ws.m, &mut ws.uss,
        &mut ws.residual,
    ) {
        Some(r) => r,
        None => return Err(f64::INFINITY),
    };

    let mut prev_res = f64::INFINITY;
    for iter in 0..params.max_newton {
        if res <= hard_tol {
            return Ok((w, iter, res));
        }
        // rounding floor: residual below tolerance and no quadratic progress
        if res <= params.newton_tol && res >= 0.25 * prev_res {
            return Ok((w, iter, res));
        }
        prev_res = res;
        // exact Jacobian: (1 + dt*nu) I - dt/(m) D^2, tridiagonal
        for i in 0..n {
            match pinned[i] {
                Some(_) => {
                    ws.lower[i] = 0.0;
                    ws.diag[i] = 1.0;
                    ws.upper[i] = 0.0;
                }
                None => {
                    let k = dt / (ws.m[i] * h2);
                    ws.diag[i] = 1.0 + dt * nu + 2.0 * k;
                    if i == 0 {
                        // Neumann mirror row: D^2 = (2 u1 - 2 u0)/h^2
                        ws.lower[i] = 0.0;
                        ws.upper[i] = -2.0 * k;
                    } else {
                        ws.lower[i] = -k;
                        ws.upper[i] = if i == n - 1 { 0.0 } else { -k };
                    }
                }
            }
            ws.delta[i] = -ws.residual[i];
        }
        tridiag::solve(&ws.lower, &ws.diag, &ws.upper, &mut ws.delta, &mut ws.work);

        // The metric is exactly linear in the unknown, so the largest step
        // keeping it positive is closed-form: fraction-to-boundary with 5%
        // of the current metric retained.
        d2_unknown(&ws.delta, grid, &mut ws.delta_ss);
        let mut alpha = 1.0f64;
        for i in 0..n {
            if pinned[i].is_none() && ws.delta_ss[i] < 0.0 {
                alpha = alpha.min(-0.95 * ws.m[i] / ws.delta_ss[i]);
            }
        }

        // residual-decrease backtracking from the positivity-feasible step
        let mut accepted = false;
        for _ in 0..45 {
            for i in 0..n {
                ws.trial[i] = w[i] + alpha * ws.delta[i];
            }
            let trial = eval_residual(
                &ws.trial, &u_old.values, a_ss, grid, weights, dt, nu, &pinned, &mut ws.m,
                &mut ws.uss, &mut ws.trial_residual,
            );
            if let Some(trial_res) = trial {
                if trial_res <= res * (1.0 - 0.25 * alpha) + 1e-15 {
                    w.copy_from_slice(&ws.trial);
                    core::mem::swap(&mut ws.residual, &mut ws.trial_residual);
                    res = trial_res;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // stalled at the rounding floor of this step
            if res <= params.newton_tol {
                // metric caches in ws.m correspond to a rejected trial; refresh
                let ok = eval_residual(
                    &w, &u_old.values, a_ss, grid, weights, dt, nu, &pinned, &mut ws.m,
                    &mut ws.uss, &mut ws.residual,
                );
                debug_assert!(ok.is_some());
                return Ok((w, iter + 1, res));
            }
            return Err(res);
        }
    }
    if res <= params.newton_tol {
        return Ok((w, params.max_newton, res));
    }
    Err(res)
}

/// One implicit Euler step. Advances the state by `dt` if Newton converges,
/// retrying with halved steps (up to 20 halvings) otherwise.
pub fn implicit_step(
    state: &FlowState,
    dt: f64,
    params: &FlowParams,
    weights: &WeightTable,
) -> Result<(FlowState, StepReport), FlowError> {
    let grid = &state.u.grid;
    let n = grid.n_nodes;
    let mut ws = NewtonWorkspace::new(n);
    let mut dt_try = dt;
    let mut last_res = f64::INFINITY;
    for _ in 0..=20 {
        let t_new = state.t + dt_try;
        match newton_solve(&state.u, t_new, dt_try, params, weights, &mut ws) {
            Ok((w, iters, res)) => {
                let u_new = Field::from_values(grid, w)?;
                let inv_dt = 1.0 / dt_try;
                let mut sup_udot = f64::NEG_INFINITY;
                let mut inf_udot = f64::INFINITY;
                for i in 0..n {
                    let du = (u_new.values[i] - state.u.values[i]) * inv_dt;
                    sup_udot = sup_udot.max(du);
                    inf_udot = inf_udot.min(du);
                }
                let (pin_inner, pin_outer) = pinned_nodes(grid);
                let mut min_metric = f64::INFINITY;
                for (i, &mv) in ws.m.iter().enumerate() {
                    if (i == 0 && pin_inner) || (i == n - 1 && pin_outer) {
                        continue;
                    }
                    min_metric = min_metric.min(mv);
                }
                let mut diagnostics = state.diagnostics.clone();
                diagnostics.push(DiagnosticsRow {
                    t: t_new,
                    sup_u: u_new.max_value(),
                    inf_u: u_new.min_value(),
                    sup_udot,
                    inf_udot,
                    min_metric,
                });
                let new_state = FlowState {
                    u: u_new,
                    t: t_new,
                    step_count: state.step_count + 1,
                    diagnostics,
                };
                return Ok((
                    new_state,
                    StepReport { accepted: true, newton_iters: iters, residual: res, dt_used: dt_try },
                ));
            }
            Err(res) => {
                last_res = res;
                dt_try *= 0.5;
            }
        }
    }
    Err(FlowError::StepFailure { t: state.t, dt, residual: last_res })
}

fn event_times(params: &FlowParams) -> Vec<f64> {
    let mut times: Vec<f64> = params
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= params.t_end * (1.0 + 1e-12))
        .collect();
    times.push(params.t_end);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| math::abs(*a - *b) <= 1e-12 * (1.0 + math::abs(*b)));
    times
}

/// Integrates the flow to `t_end`, invoking `on_snapshot` at every configured
/// snapshot time (including `t = 0` and `t_end`). The callback receives the
/// state and, except at `t = 0`, the accepted-step time derivative field.
pub fn run_flow(
    params: &FlowParams,
    initial: &Field,
    weights: &WeightTable,
    grid: &RadialGrid,
    mut on_snapshot: impl FnMut(&FlowState, Option<&Field>),
) -> Result<FlowState, FlowError> {
    params.validate()?;
    params.background.validate(grid)?;
    if initial.len() != grid.n_nodes {
        return Err(FlowError::Grid(GridError::LengthMismatch {
            expected: grid.n_nodes,
            got: initial.len(),
        }));
    }

    let mut state = FlowState {
        u: initial.clone(),
        t: 0.0,
        step_count: 0,
        diagnostics: Vec::new(),
    };
    on_snapshot(&state, None);

    let events = event_times(params);
    let mut next_event = 0usize;
    let mut dt_ctrl = params.dt_init;
    let dt_max = params.t_end;
    // guards against a controller collapse grinding to zero step size
    const MAX_STEPS: u64 = 2_000_000;

    while state.t < params.t_end - 1e-12 * (1.0 + params.t_end) {
        if state.step_count >= MAX_STEPS {
            return Err(FlowError::StepFailure { t: state.t, dt: dt_ctrl, residual: f64::NAN });
        }
        while next_event < events.len()
            && events[next_event] <= state.t + 1e-12 * (1.0 + events[next_event])
        {
            next_event += 1;
        }
        let target = if next_event < events.len() { events[next_event] } else { params.t_end };
        let dt = dt_ctrl.min(target - state.t);
        let (new_state, report) = implicit_step(&state, dt, params, weights)?;
        state = new_state;

        if params.dt_policy == DtPolicy::Adaptive {
            if report.dt_used < dt * 0.75 {
                dt_ctrl = report.dt_used;
            } else if report.newton_iters <= 4 {
                dt_ctrl = (dt_ctrl * 1.5).min(dt_max);
            } else if report.newton_iters > 8 {
                dt_ctrl = (dt_ctrl * 0.7).max(params.dt_init * 1e-6);
            }
        }

        if math::abs(state.t - target) <= 1e-12 * (1.0 + target) {
            // snap accumulated rounding so recorded times are exact
            state.t = target;
            if let Some(row) = state.diagnostics.last_mut() {
                row.t = target;
            }
            // the accepted-step rhs at the endpoint; exact time derivative
            // of the implicit scheme
            let u_dot = ma_rhs(&state, params, weights)?;
            on_snapshot(&state, Some(&u_dot));
        }
    }
    Ok(state)
}

/// Runs the flow and collects the snapshot history the audits consume.
pub fn run_flow_recorded(
    params: &FlowParams,
    initial: &Field,
    weights: &WeightTable,
    grid: &RadialGrid,
) -> Result<RunHistory, FlowError> {
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let final_state = run_flow(params, initial, weights, grid, |state, u_dot| {
        snapshots.push(Snapshot {
            t: state.t,
            u: state.u.clone(),
            u_dot: u_dot.cloned(),
        });
    })?;
    Ok(RunHistory {
        grid: grid.clone(),
        background: params.background.clone(),
        normalized: params.normalized,
        newton_tol: params.newton_tol,
        t_end: params.t_end,
        snapshots,
        diagnostics: final_state.diagnostics,
    })
}
