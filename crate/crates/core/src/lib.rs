//! Numerical laboratory for a regularized parabolic complex Monge-Ampere flow
//! on rotationally symmetric model geometries with cusp, conic and canonical
//! divisor weights.
//!
//! Everything is reduced to one radial coordinate `s = log|z|^2 < 0`: a
//! potential `f(s)` contributes the metric coefficient `f_ss * e^{-s}`
//! relative to the flat form, the divisor sits at `s -> -infinity`, and the
//! flow becomes a scalar degenerate parabolic equation
//! `du/dt = log(A_ss + u_ss) - s + log_weight (- u)` which is stepped with an
//! implicit, positivity-preserving Newton scheme.
//!
//! The crate is `no_std` (with `alloc`); all transcendental math goes through
//! `libm` so results are bit-identical across platforms. IO, configuration
//! and the command line live in the companion `cuspflow` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod audits;
pub mod cascade;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod math;
pub mod quad;
pub mod reference;
mod tridiag;

pub use audits::{audit_l1_continuity, audit_lower, audit_maximality, audit_normalized,
                 audit_time_derivative, audit_trace, audit_upper, uniform_upper_margin,
                 AuditReport};
pub use cascade::{check_monotone, limit_extract, plan_cascade, run_cascade, CascadeError,
                  CascadeParams, CascadeResult, CascadeRunSpec, CascadeSchedule, Ordering,
                  RunRecord};
pub use flow::{implicit_step, ma_rhs, make_initial, metric_field, normalize_transform,
               run_flow, run_flow_recorded, steady_residual, DiagnosticsRow, DtPolicy,
               FlowError, FlowParams, FlowState, InitialData, RunHistory, Snapshot,
               StepReport};
pub use geometry::{assemble_background, assemble_background_at, check_local_model,
                   conic_f_field, conic_regularizer, cg_potential, cusp_coefficient,
                   flat_measure, weight_table, zero_lelong_check, BackgroundSpec, DivisorKind,
                   DivisorSpec, GeometryError, StildeChoice, WeightTable};
pub use grid::{integrate_l1, make_grid, second_derivative, sup_norm, Boundary, Field,
               GridError, RadialGrid};
pub use reference::{compare_metrics, compare_metrics_window, reference, ricci_fd,
                    CurvatureReport, ReferenceKind, ReferenceMetric};
