//! Discretized model of the Hilbert space `L^2([0,1], du)` restricted to
//! Lipschitz functions.
//!
//! Curves are represented by their values on an equispaced grid with
//! trapezoid quadrature weights. On such a grid the `L^2` inner product is
//! exact up to `O(m^-2)` for piecewise-linear products, and the Lipschitz
//! seminorm of the piecewise-linear interpolant is exactly the maximum
//! adjacent-difference quotient. The smoothness ball
//! `U(r) = { x : ||x||_inf + lip(x) <= r }` governs where the kernel
//! estimator is trusted; everything downstream restricts to it.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Constant of the sup-norm interpolation bound at domain dimension 1:
/// `||f||_inf <= 3^(1/3) lip(f)^(1/3) ||f||^(2/3)`, with equality on
/// boundary half-cones `f(u) = L (r - u)^+`.
pub const SUP_NORM_BOUND_CONST: f64 = 1.4422495703074083; // 3^(1/3)

/// Equispaced grid on `[0, 1]` with trapezoid quadrature weights.
///
/// Weights are positive and sum to 1 (the Lebesgue measure of the domain).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Build an equispaced grid with `m >= 2` points, `0 = u_1 < ... < u_m = 1`.
    pub fn equispaced(m: usize) -> Result<Arc<Grid>> {
        if m < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {m}")));
        }
        let step = 1.0 / (m - 1) as f64;
        let points: Vec<f64> = (0..m)
            .map(|i| if i == m - 1 { 1.0 } else { i as f64 * step })
            .collect();
        let mut weights = vec![step; m];
        weights[0] = step / 2.0;
        weights[m - 1] = step / 2.0;
        Ok(Arc::new(Grid { points, weights }))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid spacing `1 / (m - 1)`.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }
}

/// A function on `[0, 1]` known through its values at the grid points.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap values defined on `grid`; all values must be finite.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structural(format!(
                "value vector length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structural("non-finite function value".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zero(grid: &Arc<Grid>) -> Self {
        GridFunction { grid: Arc::clone(grid), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        GridFunction { grid: Arc::clone(grid), values: vec![c; grid.len()] }
    }

    /// Sample `f` at the grid points.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&u| f(u)).collect();
        GridFunction { grid: Arc::clone(grid), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// Quadrature inner product `sum_i w_i f_i g_i`.
    ///
    /// Errors if the two functions do not share a grid.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::Structural("inner product of functions on different grids".into()));
        }
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &GridFunction) -> f64 {
        let w = self.grid.weights();
        let mut acc = 0.0;
        for i in 0..self.values.len() {
            acc += w[i] * self.values[i] * other.values[i];
        }
        acc
    }

    /// `L^2` norm `sqrt(<f, f>)`; zero iff `f` vanishes on the grid.
    pub fn l2_norm(&self) -> f64 {
        self.inner_unchecked(self).max(0.0).sqrt()
    }

    /// `L^2` distance to `other` (shared grid assumed; checked in debug builds).
    pub fn l2_distance(&self, other: &GridFunction) -> f64 {
        debug_assert!(self.same_grid(other));
        let w = self.grid.weights();
        let mut acc = 0.0;
        for i in 0..self.values.len() {
            let d = self.values[i] - other.values[i];
            acc += w[i] * d * d;
        }
        acc.max(0.0).sqrt()
    }

    /// Sup norm `max_i |f_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lipschitz seminorm of the piecewise-linear interpolant.
    ///
    /// On an equispaced one-dimensional grid the supremum of difference
    /// quotients over all pairs is attained on adjacent pairs, so this is
    /// exact, not an approximation.
    pub fn lip_seminorm(&self) -> f64 {
        let du = self.grid.spacing();
        self.values
            .windows(2)
            .fold(0.0, |m: f64, w| m.max((w[1] - w[0]).abs() / du))
    }

    /// Smoothness norm `||f||_inf + lip(f)` defining the balls `U(r)`.
    pub fn smooth_norm(&self) -> f64 {
        self.sup_norm() + self.lip_seminorm()
    }

    /// Membership in the smoothness ball `U(r)`.
    pub fn in_class(&self, class: &SmoothClass) -> bool {
        self.smooth_norm() <= class.radius()
    }

    /// Sup-norm interpolation bound (domain dimension 1): returns
    /// `(||f||_inf, 3^(1/3) lip(f)^(1/3) ||f||^(2/3))`.
    ///
    /// For functions rough enough that the extremal cone fits inside the
    /// domain (in particular any function with `lip(f) >= ||f||_inf`), the
    /// left entry never exceeds the right one, with equality on boundary
    /// half-cones.
    pub fn sup_norm_bound_check(&self) -> (f64, f64) {
        let lhs = self.sup_norm();
        let rhs = SUP_NORM_BOUND_CONST * self.lip_seminorm().cbrt() * self.l2_norm().powf(2.0 / 3.0);
        (lhs, rhs)
    }

    pub fn scale(&self, a: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        debug_assert!(self.same_grid(other));
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        debug_assert!(self.same_grid(other));
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// In-place `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &GridFunction) {
        debug_assert!(self.same_grid(other));
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    /// Mean of a nonempty family of functions on a shared grid.
    pub fn mean(items: &[GridFunction]) -> Result<GridFunction> {
        let first = items
            .first()
            .ok_or_else(|| Error::Degenerate("mean of an empty family".into()))?;
        let mut acc = GridFunction::zero(first.grid());
        for item in items {
            acc.axpy(1.0, item);
        }
        Ok(acc.scale(1.0 / items.len() as f64))
    }
}

/// The smoothness ball `U(r)`, `r >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothClass {
    r: f64,
}

impl SmoothClass {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Config(format!("smoothness radius must be >= 0, got {r}")));
        }
        Ok(SmoothClass { r })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }
}

/// Basis families available on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `e_1 = 1`, `e_k(u) = sqrt(2) cos((k-1) pi u)` for `k >= 2`;
    /// orthonormal in `L^2[0,1]`, and exactly orthonormal under trapezoid
    /// quadrature as long as `k` stays well below the grid size.
    Cosine,
}

/// The first `K` functions of an orthonormal basis, discretized on a grid.
#[derive(Debug, Clone)]
pub struct Basis {
    kind: BasisKind,
    grid: Arc<Grid>,
    functions: Vec<GridFunction>,
}

impl Basis {
    /// Cosine basis with `k >= 1` functions.
    pub fn cosine(grid: &Arc<Grid>, k: usize) -> Result<Arc<Basis>> {
        if k == 0 {
            return Err(Error::Config("basis needs at least one function".into()));
        }
        if 2 * k >= grid.len() {
            return Err(Error::Config(format!(
                "basis size {k} too large for grid with {} points",
                grid.len()
            )));
        }
        let functions = (1..=k)
            .map(|j| {
                if j == 1 {
                    GridFunction::constant(grid, 1.0)
                } else {
                    let freq = (j - 1) as f64 * std::f64::consts::PI;
                    GridFunction::from_fn(grid, |u| 2f64.sqrt() * (freq * u).cos())
                }
            })
            .collect();
        Ok(Arc::new(Basis { kind: BasisKind::Cosine, grid: Arc::clone(grid), functions }))
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// The `k`-th basis function, 1-based as in `e_k`.
    pub fn function(&self, k: usize) -> &GridFunction {
        &self.functions[k - 1]
    }

    pub fn functions(&self) -> &[GridFunction] {
        &self.functions
    }

    /// First `k` projection coefficients `<f, e_j>`, `j = 1..k`.
    pub fn project(&self, f: &GridFunction, k: usize) -> Result<Vec<f64>> {
        if k > self.len() {
            return Err(Error::Config(format!(
                "requested {k} coefficients from a basis of size {}",
                self.len()
            )));
        }
        self.functions[..k].iter().map(|e| f.inner(e)).collect()
    }

    /// Linear combination `sum_j coeffs[j] e_{j+1}`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<GridFunction> {
        if coeffs.len() > self.len() {
            return Err(Error::Config(format!(
                "{} coefficients exceed basis size {}",
                coeffs.len(),
                self.len()
            )));
        }
        let mut acc = GridFunction::zero(&self.grid);
        for (c, e) in coeffs.iter().zip(&self.functions) {
            acc.axpy(*c, e);
        }
        Ok(acc)
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn gram_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, ei) in self.functions.iter().enumerate() {
            for (j, ej) in self.functions.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ei.inner_unchecked(ej) - target).abs());
            }
        }
        worst
    }

    /// Upper bound on the Lipschitz seminorm of `sum_k c_k e_k` given
    /// coefficient bounds `|c_k| <= bounds[k]`.
    pub fn lip_bound(&self, bounds: &[f64]) -> f64 {
        bounds
            .iter()
            .zip(&self.functions)
            .map(|(b, e)| b * e.lip_seminorm())
            .sum()
    }
}

/// Greedy epsilon-net size over random probes of `U(r)`.
///
/// Draws `probe_count` random smooth functions with smoothness norm at most
/// `class.r` (cosine combinations with decaying coefficients, rescaled into
/// the ball) and counts the centers picked by the greedy covering pass in
/// the `L^2` norm. The count is an upper-biased estimate of the covering
/// number of the probed set and is used only to check the growth shape of
/// `log N(eps)` in `1/eps`, never its constant.
pub fn greedy_cover(class: &SmoothClass, eps: f64, probe_count: usize, seed: u64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("covering radius must be positive, got {eps}")));
    }
    if probe_count == 0 {
        return Ok(0);
    }
    let grid = Grid::equispaced(101)?;
    let basis = Basis::cosine(&grid, 10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<GridFunction> = Vec::new();
    for _ in 0..probe_count {
        // Low-frequency-heavy coefficients: the smoothness budget of U(r)
        // is then spent on the sup norm rather than the Lipschitz part, so
        // the probe cloud has an l2 diameter comparable to r.
        let coeffs: Vec<f64> = (0..basis.len())
            .map(|k| rng.gen_range(-1.0..1.0) * (-1.5 * k as f64).exp())
            .collect();
        let raw = basis.reconstruct(&coeffs)?;
        let norm = raw.smooth_norm();
        let probe = if norm > 0.0 {
            raw.scale(class.radius() * rng.gen_range(0.0..1.0) / norm)
        } else {
            raw
        };
        if !centers.iter().any(|c| c.l2_distance(&probe) <= eps) {
            centers.push(probe);
        }
    }
    Ok(centers.len().max(1))
}
