//! Truncated half-line meshes, nodal fields and the difference/quadrature
//! operators built on them.

use std::sync::Arc;

use crate::error::{KsError, Result};

/// Node distribution on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    /// Nodes `L (s^(i/(n-1)) - 1) / (s - 1)`, clustered near `x = 0`.
    Graded {
        stretch: f64,
    },
}

pub const DEFAULT_NODES: usize = 2001;
pub const DEFAULT_STRETCH: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    length: f64,
    kind: GridKind,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(length: f64, n: usize, kind: GridKind) -> Result<Arc<Grid>> {
        if n < 3 {
            return Err(KsError::InsufficientGrid(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(KsError::InvalidGrid(format!(
                "length must be finite and > 0, got {length}"
            )));
        }
        let last = (n - 1) as f64;
        let mut nodes: Vec<f64> = match kind {
            GridKind::Uniform => (0..n).map(|i| length * i as f64 / last).collect(),
            GridKind::Graded { stretch } => {
                if !(stretch.is_finite() && stretch > 1.0) {
                    return Err(KsError::InvalidGrid(format!(
                        "stretch must be > 1, got {stretch}"
                    )));
                }
                let denom = stretch - 1.0;
                let ln_s = stretch.ln();
                (0..n)
                    .map(|i| length * (ln_s * i as f64 / last).exp_m1() / denom)
                    .collect()
            }
        };
        nodes[0] = 0.0;
        nodes[n - 1] = length;
        if nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(KsError::InvalidGrid(
                "nodes are not strictly increasing".into(),
            ));
        }
        Ok(Arc::new(Grid {
            length,
            kind,
            nodes,
        }))
    }

    pub fn uniform(length: f64, n: usize) -> Result<Arc<Grid>> {
        Grid::new(length, n, GridKind::Uniform)
    }

    pub fn graded(length: f64, n: usize, stretch: f64) -> Result<Arc<Grid>> {
        Grid::new(length, n, GridKind::Graded { stretch })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Spacing `x[i+1] - x[i]` for each of the `n - 1` cells.
    pub fn spacings(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|p| p[1] - p[0]).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Dual (control-volume) lengths: half cells at both ends. Their sum is `L`
    /// and `sum(dual[i] * f[i])` is the trapezoid rule.
    pub fn dual_lengths(&self) -> Vec<f64> {
        let h = self.spacings();
        let n = self.len();
        let mut dual = vec![0.0; n];
        dual[0] = 0.5 * h[0];
        dual[n - 1] = 0.5 * h[n - 2];
        for i in 1..n - 1 {
            dual[i] = 0.5 * (h[i - 1] + h[i]);
        }
        dual
    }

    pub fn sample(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> Field {
        let values = self.nodes.iter().map(|&x| f(x)).collect();
        Field {
            grid: Arc::clone(self),
            values,
        }
    }

    pub fn zeros(self: &Arc<Self>) -> Field {
        Field {
            grid: Arc::clone(self),
            values: vec![0.0; self.len()],
        }
    }
}

/// Nodal samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    /// Wraps `values`; the length must match the node count. Finiteness is
    /// checked by the operators, not here.
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(KsError::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(KsError::NonFiniteField { index }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(KsError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `f(x, self(x))`.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self
                .grid
                .nodes()
                .iter()
                .zip(&self.values)
                .map(|(&x, &v)| f(x, v))
                .collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.nodes == b.nodes
}

/// Weights of the Lagrange derivative of order `order` at `x0` on the stencil
/// `xs` (Fornberg's recursion).
pub fn stencil_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(order < n, "stencil too small for derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

fn apply_derivative(f: &Field, order: usize) -> Result<Field> {
    f.check_finite()?;
    let x = f.grid.nodes();
    let v = f.values();
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let w = stencil_weights(x[i], &x[i - 1..=i + 1], order);
        out[i] = w[0] * v[i - 1] + w[1] * v[i] + w[2] * v[i + 1];
    }
    // One-sided closures: 3 points give second order for f', 4 for f''.
    let width = (order + 2).min(n);
    let w = stencil_weights(x[0], &x[..width], order);
    out[0] = w.iter().zip(&v[..width]).map(|(a, b)| a * b).sum();
    let w = stencil_weights(x[n - 1], &x[n - width..], order);
    out[n - 1] = w.iter().zip(&v[n - width..]).map(|(a, b)| a * b).sum();
    Ok(Field {
        grid: Arc::clone(&f.grid),
        values: out,
    })
}

/// Three-point central first derivative with second-order one-sided ends.
pub fn first_derivative(f: &Field) -> Result<Field> {
    apply_derivative(f, 1)
}

/// Three-point central second derivative with one-sided ends (second order
/// when at least four nodes are available).
pub fn second_derivative(f: &Field) -> Result<Field> {
    apply_derivative(f, 2)
}

/// Composite trapezoid rule over the whole grid.
pub fn trapezoid_integral(f: &Field) -> Result<f64> {
    f.check_finite()?;
    Ok(running_trapezoid(f.grid.nodes(), f.values())
        .last()
        .copied()
        .unwrap_or(0.0))
}

/// Running trapezoid sums; `out[0] = 0` and `out[n-1]` equals
/// [`trapezoid_integral`].
pub fn cumulative_integral(f: &Field) -> Result<Field> {
    f.check_finite()?;
    Ok(Field {
        grid: Arc::clone(&f.grid),
        values: running_trapezoid(f.grid.nodes(), f.values()),
    })
}

fn running_trapezoid(x: &[f64], v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (v[i] + v[i - 1]);
        out.push(acc);
    }
    out
}
