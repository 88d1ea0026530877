//! 1-D radial mesh in the coordinate `s = log|z|^2`, finite-difference
//! stencils, norms and quadrature. Everything else in the crate operates on
//! these fields.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Boundary condition attached to one end of the grid.
///
/// The unknown potential correction decays to zero slope at the divisor end,
/// so the inner default is `NeumannZero`; the outer end always carries
/// Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    NeumannZero,
    Dirichlet(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// `s_min < s_max < 0` violated. The grid must stay strictly left of the
    /// coordinate singularity of `log^2|z|^2` at `s = 0`.
    BadOrdering { s_min: f64, s_max: f64 },
    TooFewNodes(usize),
    /// The outer boundary must carry Dirichlet data.
    OuterNotDirichlet,
    LengthMismatch { expected: usize, got: usize },
    NonPositiveMeasure { node: usize, value: f64 },
    BadMargin { margin: usize, n_nodes: usize },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::BadOrdering { s_min, s_max } => {
                write!(f, "grid needs s_min < s_max < 0, got [{s_min}, {s_max}]")
            }
            GridError::TooFewNodes(n) => write!(f, "grid needs at least 8 nodes, got {n}"),
            GridError::OuterNotDirichlet => write!(f, "outer boundary must be Dirichlet"),
            GridError::LengthMismatch { expected, got } => {
                write!(f, "field length {got} does not match grid ({expected} nodes)")
            }
            GridError::NonPositiveMeasure { node, value } => {
                write!(f, "measure field must be strictly positive, node {node} = {value}")
            }
            GridError::BadMargin { margin, n_nodes } => {
                write!(f, "interior margin {margin} too large for {n_nodes} nodes")
            }
        }
    }
}

impl core::error::Error for GridError {}

/// Uniform mesh on `[s_min, s_max]`, `s_max < 0`, with boundary metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub n_nodes: usize,
    pub spacing: f64,
    pub bc_inner: Boundary,
    pub bc_outer: Boundary,
}

impl RadialGrid {
    pub fn new(
        s_min: f64,
        s_max: f64,
        n_nodes: usize,
        bc_inner: Boundary,
        bc_outer: Boundary,
    ) -> Result<Self, GridError> {
        if !(s_min < s_max && s_max < 0.0) {
            return Err(GridError::BadOrdering { s_min, s_max });
        }
        if n_nodes < 8 {
            return Err(GridError::TooFewNodes(n_nodes));
        }
        if !matches!(bc_outer, Boundary::Dirichlet(_)) {
            return Err(GridError::OuterNotDirichlet);
        }
        Ok(RadialGrid {
            s_min,
            s_max,
            n_nodes,
            spacing: (s_max - s_min) / (n_nodes - 1) as f64,
            bc_inner,
            bc_outer,
        })
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.s_min + self.spacing * i as f64
    }

    /// Index range `[lo, hi)` after trimming `margin` nodes from each end.
    pub fn interior(&self, margin: usize) -> Result<core::ops::Range<usize>, GridError> {
        if 2 * margin >= self.n_nodes {
            return Err(GridError::BadMargin { margin, n_nodes: self.n_nodes });
        }
        Ok(margin..self.n_nodes - margin)
    }
}

/// Alias for [`RadialGrid::new`].
pub fn make_grid(
    s_min: f64,
    s_max: f64,
    n_nodes: usize,
    bc_inner: Boundary,
    bc_outer: Boundary,
) -> Result<RadialGrid, GridError> {
    RadialGrid::new(s_min, s_max, n_nodes, bc_inner, bc_outer)
}

/// Nodal scalar field on a [`RadialGrid`]. Immutable value semantics: every
/// operation produces a fresh field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn constant(grid: &RadialGrid, c: f64) -> Self {
        Field { grid: grid.clone(), values: alloc::vec![c; grid.n_nodes] }
    }

    pub fn from_fn(grid: &RadialGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.n_nodes).map(|i| f(grid.node(i))).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &RadialGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_nodes {
            return Err(GridError::LengthMismatch { expected: grid.n_nodes, got: values.len() });
        }
        Ok(Field { grid: grid.clone(), values })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip(&self, other: &Field, mut f: impl FnMut(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled_add(&self, alpha: f64, other: &Field) -> Field {
        self.zip(other, |a, b| a + alpha * b)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Discrete second derivative honoring the grid's boundary metadata:
/// centered interior stencil, a second-order one-sided stencil at Dirichlet
/// ends, and the zero-slope-constrained stencil `(-7f0+8f1-f2)/(2h^2)` at a
/// Neumann end.
pub fn second_derivative(f: &Field) -> Field {
    let g = &f.grid;
    let h2 = g.spacing * g.spacing;
    let v = &f.values;
    let n = v.len();
    let mut out = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
    }
    out[0] = match g.bc_inner {
        Boundary::NeumannZero => (-7.0 * v[0] + 8.0 * v[1] - v[2]) / (2.0 * h2),
        Boundary::Dirichlet(_) => (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2,
    };
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    Field { grid: g.clone(), values: out }
}

/// Second derivative of an ambient (analytic) field: one-sided second-order
/// stencils at both ends regardless of boundary metadata. Used for background
/// potentials and reference metrics, which are not constrained by the
/// unknown's boundary conditions.
pub(crate) fn d2_free(f: &Field) -> Field {
    let g = &f.grid;
    let h2 = g.spacing * g.spacing;
    let v = &f.values;
    let n = v.len();
    let mut out = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
    }
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    Field { grid: g.clone(), values: out }
}

/// Discrete `L^1` norm `∫ |f| dμ` by the trapezoid rule against a strictly
/// positive measure field.
pub fn integrate_l1(f: &Field, against: &Field) -> Result<f64, GridError> {
    if f.len() != against.len() {
        return Err(GridError::LengthMismatch { expected: f.len(), got: against.len() });
    }
    for (i, &m) in against.values.iter().enumerate() {
        if !(m > 0.0) {
            return Err(GridError::NonPositiveMeasure { node: i, value: m });
        }
    }
    let n = f.len();
    let h = f.grid.spacing;
    let g = |i: usize| math::abs(f.values[i]) * against.values[i];
    let mut sum = 0.5 * (g(0) + g(n - 1));
    for i in 1..n - 1 {
        sum += g(i);
    }
    Ok(sum * h)
}

/// `max |f|` over the nodes that remain after trimming `interior_margin`
/// nodes from each end.
pub fn sup_norm(f: &Field, interior_margin: usize) -> f64 {
    let range = match f.grid.interior(interior_margin) {
        Ok(r) => r,
        Err(_) => return f64::NAN,
    };
    f.values[range].iter().fold(0.0f64, |acc, &v| acc.max(math::abs(v)))
}
