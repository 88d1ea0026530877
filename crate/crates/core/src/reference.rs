//! Exact negative Kaehler-Einstein cusp and cone metrics as convergence
//! targets, and an independent finite-difference Ricci oracle.
//!
//! Metric coefficients are relative to the flat form `i dz ^ dz-bar`:
//!
//! * cusp:  `g(s) = 2 e^{-s} / s^2`
//! * cone:  `g(s) = 2 b^2 e^{(b-1)s} / (1 - e^{bs})^2`
//! * flat:  `g = 1`
//!
//! In 1-D the Ricci coefficient is `-(d^2/ds^2 log g) e^{-s}`; both closed
//! forms above satisfy `Ric = -omega` exactly, which [`ricci_fd`] confirms
//! to second order before the acceptance comparisons trust them.

use core::fmt;

use crate::grid::{d2_free, Field, RadialGrid};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    CuspKe,
    ConeKe { beta: f64 },
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMetric {
    pub kind: ReferenceKind,
    /// Metric coefficient `g(s)` in `omega = g(s) i dz ^ dz-bar`.
    pub coefficient: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub ricci_coefficient: Field,
    /// `sup |Ric/omega + 1|` over the interior (the Einstein defect measured
    /// relative to the metric; the raw coefficients grow like `e^{-s}` and an
    /// absolute defect would be meaningless across the grid).
    pub einstein_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceError {
    BadConeAngle(f64),
    NonPositiveCoefficient { node: usize, value: f64 },
}

impl fmt::Display for ReferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceError::BadConeAngle(b) => {
                write!(f, "cone parameter must lie in (0,1), got {b}")
            }
            ReferenceError::NonPositiveCoefficient { node, value } => {
                write!(f, "metric coefficient must be positive, node {node} = {value}")
            }
        }
    }
}

impl core::error::Error for ReferenceError {}

pub fn reference(kind: ReferenceKind, grid: &RadialGrid) -> Result<ReferenceMetric, ReferenceError> {
    if let ReferenceKind::ConeKe { beta } = kind {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ReferenceError::BadConeAngle(beta));
        }
    }
    let coefficient = match kind {
        ReferenceKind::CuspKe => Field::from_fn(grid, |s| 2.0 * math::exp(-s) / (s * s)),
        ReferenceKind::ConeKe { beta } => Field::from_fn(grid, |s| {
            let q = 1.0 - math::exp(beta * s);
            2.0 * beta * beta * math::exp((beta - 1.0) * s) / (q * q)
        }),
        ReferenceKind::Flat => Field::constant(grid, 1.0),
    };
    Ok(ReferenceMetric { kind, coefficient })
}

/// 1-D Ricci coefficient `-(d^2/ds^2 log g) e^{-s}` by the grid stencil, and
/// the relative Einstein defect `sup |Ric/g + 1|` over the interior.
pub fn ricci_fd(coefficient: &Field, grid: &RadialGrid) -> Result<CurvatureReport, ReferenceError> {
    for (i, &g) in coefficient.values.iter().enumerate() {
        if !(g > 0.0) {
            return Err(ReferenceError::NonPositiveCoefficient { node: i, value: g });
        }
    }
    let log_g = coefficient.map(math::ln);
    let d2 = d2_free(&log_g);
    let ricci = Field::from_fn(grid, |_| 0.0).zip(&d2, |_, dd| dd).zip(
        &Field::from_fn(grid, math::exp),
        |dd, es| -dd / es,
    );
    let mut residual = 0.0f64;
    for i in 1..grid.n_nodes - 1 {
        residual = residual.max(math::abs(ricci.values[i] / coefficient.values[i] + 1.0));
    }
    Ok(CurvatureReport { ricci_coefficient: ricci, einstein_residual: residual })
}

/// Relative sup distance `sup |a/b - 1|` over the interior after trimming
/// `interior_margin` nodes from each end.
pub fn compare_metrics(a: &Field, b: &Field, interior_margin: usize) -> f64 {
    let range = match a.grid.interior(interior_margin) {
        Ok(r) => r,
        Err(_) => return f64::NAN,
    };
    let mut worst = 0.0f64;
    for i in range {
        worst = worst.max(math::abs(a.values[i] / b.values[i] - 1.0));
    }
    worst
}

/// Relative sup distance over the nodes with `s` in `[s_lo, s_hi]`.
pub fn compare_metrics_window(a: &Field, b: &Field, s_lo: f64, s_hi: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.grid.n_nodes {
        let s = a.grid.node(i);
        if s >= s_lo && s <= s_hi {
            worst = worst.max(math::abs(a.values[i] / b.values[i] - 1.0));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn grid(n: usize) -> RadialGrid {
        RadialGrid::new(-50.0, -2.0, n, Boundary::NeumannZero, Boundary::Dirichlet(0.0)).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let g = RadialGrid::new(-2.0, -1.0, 9, Boundary::Dirichlet(0.0), Boundary::Dirichlet(0.0))
            .unwrap();
        let flat = reference(ReferenceKind::Flat, &g).unwrap();
        assert!(flat.coefficient.values.iter().all(|&v| v == 1.0));

        // CuspKE at s = -1 is 2e
        let cusp = reference(ReferenceKind::CuspKe, &g).unwrap();
        let last = cusp.coefficient.values[g.n_nodes - 1];
        assert!((last - 2.0 * math::exp(1.0)).abs() < 1e-12);

        // ConeKE(1/2) as s -> -infinity behaves like 0.5 e^{-s/2}
        let deep = grid(64);
        let cone = reference(ReferenceKind::ConeKe { beta: 0.5 }, &deep).unwrap();
        let s0 = deep.node(0);
        let asym = 0.5 * math::exp(-0.5 * s0);
        assert!((cone.coefficient.values[0] / asym - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_cone_angle() {
        let g = grid(64);
        assert!(reference(ReferenceKind::ConeKe { beta: 1.5 }, &g).is_err());
        assert!(reference(ReferenceKind::ConeKe { beta: 0.0 }, &g).is_err());
    }

    #[test]
    fn flat_metric_is_ricci_flat() {
        let g = grid(128);
        let flat = reference(ReferenceKind::Flat, &g).unwrap();
        let report = ricci_fd(&flat.coefficient, &g).unwrap();
        for &v in &report.ricci_coefficient.values {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn references_are_einstein_to_second_order() {
        // Residual drops ~4x per refinement for cusp and the three cone
        // angles. The cone grids stop at s = -20: deeper in, the cone metric
        // is exponentially flat and the second difference of log g sits below
        // the f64 cancellation floor, so the defect there measures rounding,
        // not the discretization.
        let cone_grid = |n: usize| {
            RadialGrid::new(-20.0, -2.0, n, Boundary::NeumannZero, Boundary::Dirichlet(0.0))
                .unwrap()
        };
        for kind in [
            ReferenceKind::CuspKe,
            ReferenceKind::ConeKe { beta: 0.25 },
            ReferenceKind::ConeKe { beta: 0.5 },
            ReferenceKind::ConeKe { beta: 0.75 },
        ] {
            let (coarse, fine) = if matches!(kind, ReferenceKind::CuspKe) {
                (grid(512), grid(1024))
            } else {
                (cone_grid(512), cone_grid(1024))
            };
            let rc = ricci_fd(&reference(kind, &coarse).unwrap().coefficient, &coarse).unwrap();
            let rf = ricci_fd(&reference(kind, &fine).unwrap().coefficient, &fine).unwrap();
            let ratio = rc.einstein_residual / rf.einstein_residual;
            assert!(
                ratio > 3.0 && ratio < 5.0,
                "{kind:?}: residuals {} -> {} (ratio {ratio})",
                rc.einstein_residual,
                rf.einstein_residual
            );
        }
    }

    #[test]
    fn cusp_residual_meets_acceptance_resolution() {
        let g = grid(2048);
        let cusp = reference(ReferenceKind::CuspKe, &g).unwrap();
        let report = ricci_fd(&cusp.coefficient, &g).unwrap();
        assert!(report.einstein_residual <= 1e-4, "{}", report.einstein_residual);
    }

    #[test]
    fn cusp_is_twice_the_cg_local_model() {
        let g = grid(256);
        let cusp = reference(ReferenceKind::CuspKe, &g).unwrap();
        for i in 0..g.n_nodes {
            let s = g.node(i);
            let cg_model = math::exp(-s) / (s * s); // 1/(|z|^2 log^2|z|^2) in s
            assert!((cusp.coefficient.values[i] / cg_model - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compare_metrics_scaling() {
        let g = grid(64);
        let a = Field::from_fn(&g, |s| math::exp(-s));
        assert_eq!(compare_metrics(&a, &a, 0), 0.0);
        let b = a.map(|v| 1.01 * v);
        assert!((compare_metrics(&b, &a, 0) - 0.01).abs() < 1e-12);
        // window variant
        assert!((compare_metrics_window(&b, &a, -40.0, -5.0) - 0.01).abs() < 1e-12);
    }
}
