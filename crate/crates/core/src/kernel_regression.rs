//! Functional Nadaraya-Watson regression for FAR(1) samples.
//!
//! Given a sample `X_0, ..., X_{n+1}`, the estimator at a point `x` is the
//! kernel-weighted average of next-step responses,
//!
//! ```text
//! Psi_hat(x) = sum_{t=1..n} X_{t+1} K(||X_t - x|| / h) / sum_t K(||X_t - x|| / h),
//! ```
//!
//! restricted to the smoothness ball `U(r_n)`: outside the ball, and when no
//! training state falls within bandwidth `h` of `x`, the estimator returns
//! the sample mean of the regressors and flags the fallback. The module
//! also houses the empirical small-ball probability, the kernel limit
//! moments `M_0`, `M_j`, and the bandwidth schedules tying `h` and the
//! oversmoothing bandwidth `b` to the sample size.

use crate::error::{Error, Result};
use crate::function_space::{GridFunction, SmoothClass};
use crate::process_models::{FunctionalSeries, RegressionOperator};

/// Kernels on `[0, 1]` with `K(1) > 0` and nonincreasing continuous `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `K(s) = 1` on `[0, 1]`: plain neighborhood averaging.
    Uniform,
    /// `K(s) = 1 - s^2 / 2` on `[0, 1]`.
    Quadratic,
}

impl Kernel {
    /// Evaluate `K(s)`; zero outside the support `[0, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Kernel::Uniform => 1.0,
            Kernel::Quadratic => 1.0 - s * s / 2.0,
        }
    }

    /// `K'(s)` on the support interior (used by the moment quadrature).
    pub fn deriv(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Kernel::Uniform => 0.0,
            Kernel::Quadratic => -s,
        }
    }

    /// `K(1)`, positive by construction.
    pub fn at_one(&self) -> f64 {
        match self {
            Kernel::Uniform => 1.0,
            Kernel::Quadratic => 0.5,
        }
    }

    /// Kernel weight `K(||f - x|| / h)`; zero when `||f - x|| > h`.
    pub fn weight(&self, f: &GridFunction, x: &GridFunction, h: f64) -> f64 {
        assert!(h > 0.0, "bandwidth must be positive");
        self.eval(f.l2_distance(x) / h)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Uniform => "uniform",
            Kernel::Quadratic => "quadratic",
        }
    }
}

/// Estimation parameters: kernel, main bandwidth `h`, oversmoothing
/// bandwidth `b` (used only for residual extraction), restriction radius
/// `r_n`, and the diagnostic neighbor threshold.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub kernel: Kernel,
    pub h: f64,
    pub b: f64,
    pub r_n: f64,
    pub min_neighbors: usize,
}

impl EstimatorConfig {
    pub fn new(kernel: Kernel, h: f64, b: f64, r_n: f64, min_neighbors: usize) -> Result<Self> {
        if !(h > 0.0) || !(b > 0.0) || h >= b {
            return Err(Error::Config(format!(
                "bandwidths must satisfy 0 < h < b, got h = {h}, b = {b}"
            )));
        }
        if !(r_n > 0.0) {
            return Err(Error::Config(format!("restriction radius must be positive, got {r_n}")));
        }
        Ok(EstimatorConfig { kernel, h, b, r_n, min_neighbors })
    }

    pub fn restriction(&self) -> SmoothClass {
        SmoothClass::new(self.r_n).expect("validated radius")
    }
}

/// One estimator evaluation plus its degeneracy diagnostics.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub value: GridFunction,
    /// Total kernel mass at the target.
    pub weight_sum: f64,
    /// Number of training states within bandwidth of the target.
    pub neighbor_count: usize,
    /// True when the sample-mean branch was taken (out of class or no mass).
    pub fallback: bool,
}

/// Kernel-weighted average over the training pairs of `states`
/// (`(states[t], states[t+1])` for `t = 1..=len-2`). Returns the
/// unnormalized diagnostics and `None` when no weight is collected.
pub(crate) fn nw_core(
    states: &[GridFunction],
    kernel: Kernel,
    bandwidth: f64,
    x: &GridFunction,
) -> (Option<GridFunction>, f64, usize) {
    let n = states.len() - 2;
    let mut weight_sum = 0.0;
    let mut neighbors = 0;
    let mut acc = GridFunction::zero(x.grid());
    for t in 1..=n {
        let w = kernel.eval(states[t].l2_distance(x) / bandwidth);
        if w > 0.0 {
            weight_sum += w;
            neighbors += 1;
            acc.axpy(w, &states[t + 1]);
        }
    }
    if weight_sum > 0.0 {
        (Some(acc.scale(1.0 / weight_sum)), weight_sum, neighbors)
    } else {
        (None, 0.0, 0)
    }
}

/// The fitted Nadaraya-Watson estimator; immutable and cheap to evaluate
/// concurrently.
#[derive(Debug)]
pub struct FittedEstimator<'a> {
    series: &'a FunctionalSeries,
    kernel: Kernel,
    bandwidth: f64,
    class: SmoothClass,
    min_neighbors: usize,
    x_bar: GridFunction,
}

impl<'a> FittedEstimator<'a> {
    /// Fit with the main bandwidth `config.h`.
    pub fn fit(series: &'a FunctionalSeries, config: &EstimatorConfig) -> Result<Self> {
        Self::fit_with_bandwidth(series, config, config.h)
    }

    /// Fit with the oversmoothing bandwidth `config.b` (same restriction
    /// set; only the bandwidth changes).
    pub fn fit_oversmoothed(series: &'a FunctionalSeries, config: &EstimatorConfig) -> Result<Self> {
        Self::fit_with_bandwidth(series, config, config.b)
    }

    fn fit_with_bandwidth(
        series: &'a FunctionalSeries,
        config: &EstimatorConfig,
        bandwidth: f64,
    ) -> Result<Self> {
        let n = series.sample_size();
        if n < 1 {
            return Err(Error::Degenerate("training series has no regression pairs".into()));
        }
        let x_bar = GridFunction::mean(&series.items()[1..=n])?;
        Ok(FittedEstimator {
            series,
            kernel: config.kernel,
            bandwidth,
            class: config.restriction(),
            min_neighbors: config.min_neighbors.max(1),
            x_bar,
        })
    }

    pub fn series(&self) -> &FunctionalSeries {
        self.series
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn restriction(&self) -> &SmoothClass {
        &self.class
    }

    pub fn min_neighbors(&self) -> usize {
        self.min_neighbors
    }

    /// Sample mean of the regressor window `X_1, ..., X_n`.
    pub fn x_bar(&self) -> &GridFunction {
        &self.x_bar
    }

    /// Evaluate the estimator at `x`.
    ///
    /// Total by construction: targets outside `U(r_n)`, and targets with no
    /// kernel mass, return the regressor sample mean with `fallback` set.
    pub fn predict(&self, x: &GridFunction) -> Prediction {
        if !x.in_class(&self.class) {
            return self.fallback();
        }
        let (value, weight_sum, neighbor_count) =
            nw_core(self.series.items(), self.kernel, self.bandwidth, x);
        match value {
            Some(value) => Prediction { value, weight_sum, neighbor_count, fallback: false },
            None => self.fallback(),
        }
    }

    fn fallback(&self) -> Prediction {
        Prediction { value: self.x_bar.clone(), weight_sum: 0.0, neighbor_count: 0, fallback: true }
    }
}

/// Distances from the target to the regressor window `X_1, ..., X_n`.
///
/// The expensive part of both the estimator and the empirical small-ball
/// probability; computed once per target and reused by the harness.
pub fn regressor_distances(series: &FunctionalSeries, x: &GridFunction) -> Vec<f64> {
    let n = series.sample_size();
    (1..=n).map(|t| series.state(t).l2_distance(x)).collect()
}

/// Empirical small-ball probability
/// `F_hat_{n,x}(h) = n^-1 #{ t <= n : ||X_t - x|| <= h }`.
pub fn empirical_small_ball(series: &FunctionalSeries, x: &GridFunction, h: f64) -> f64 {
    let d = regressor_distances(series, x);
    small_ball_from_distances(&d, h)
}

/// Same, from precomputed distances.
pub fn small_ball_from_distances(distances: &[f64], h: f64) -> f64 {
    let hits = distances.iter().filter(|&&d| d <= h).count();
    hits as f64 / distances.len() as f64
}

/// Kernel limit moments
/// `M_0 = K(1) - int_0^1 (s K(s))' tau0(s) ds` and
/// `M_j = K(1)^j - int_0^1 (K(s)^j)' tau0(s) ds`, `j = 1..j_max`.
#[derive(Debug, Clone)]
pub struct LimitMoments {
    pub m0: f64,
    mj: Vec<f64>,
}

impl LimitMoments {
    /// `M_j` for `1 <= j <= j_max`.
    pub fn mj(&self, j: usize) -> f64 {
        self.mj[j - 1]
    }

    pub fn all_mj(&self) -> &[f64] {
        &self.mj
    }
}

/// Compute the limit moments by adaptive quadrature.
///
/// `tau0` is the limiting small-ball ratio; it must be nondecreasing with
/// `tau0(0) = 0` (checked on a coarse grid).
pub fn limit_moments(
    kernel: Kernel,
    tau0: impl Fn(f64) -> f64,
    j_max: usize,
) -> Result<LimitMoments> {
    if j_max == 0 {
        return Err(Error::Config("j_max must be at least 1".into()));
    }
    if tau0(0.0).abs() > 1e-9 {
        return Err(Error::Config(format!("tau0(0) must vanish, got {}", tau0(0.0))));
    }
    let mut prev = 0.0;
    for i in 0..=100 {
        let v = tau0(i as f64 / 100.0);
        if v < prev - 1e-12 {
            return Err(Error::Config(format!("tau0 must be nondecreasing, dips at u = {}", i as f64 / 100.0)));
        }
        prev = v;
    }

    let k1 = kernel.at_one();
    // (s K(s))' tau0(s)
    let integrand_m0 = |s: f64| (kernel.eval(s) + s * kernel.deriv(s)) * tau0(s);
    let m0 = k1 - adaptive_simpson(&integrand_m0, 0.0, 1.0, 1e-11, 60)?;
    let mut mj = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        // (K(s)^j)' = j K^{j-1} K'
        let integrand = |s: f64| {
            j as f64 * kernel.eval(s).powi(j as i32 - 1) * kernel.deriv(s) * tau0(s)
        };
        let m = k1.powi(j as i32) - adaptive_simpson(&integrand, 0.0, 1.0, 1e-11, 60)?;
        if !(m > 0.0) {
            return Err(Error::Numerical(format!("limit moment M_{j} = {m} is not positive")));
        }
        mj.push(m);
    }
    Ok(LimitMoments { m0, mj })
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        m: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let left = simpson(f, a, lm, m);
        let right = simpson(f, m, rm, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numerical(format!(
                "adaptive quadrature did not converge on [{a}, {b}] (residual {delta:e})"
            )));
        }
        Ok(recurse(f, a, lm, m, left, tol / 2.0, depth - 1)?
            + recurse(f, m, rm, b, right, tol / 2.0, depth - 1)?)
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, b, simpson(f, a, m, b), tol, depth)
}

/// Bandwidth pair produced by [`bandwidth_schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidths {
    pub h: f64,
    pub b: f64,
}

impl Bandwidths {
    /// Whether the oversmoothing separation `h < b` actually holds; fails
    /// only for tiny `n` or extreme constants and should be treated as a
    /// flag by callers.
    pub fn separated(&self) -> bool {
        self.h < self.b
    }
}

/// Rate-correct bandwidth schedule for small-ball exponent `q`:
/// `h = c_h n^{-1/(q+2)}` and `b = c_b n^{-1/(2(q+2))}`, so that
/// `h (n h^q)^{1/2}` is free of `n` and `h / b -> 0`.
pub fn bandwidth_schedule(n: usize, q: f64, c_h: f64, c_b: f64) -> Result<Bandwidths> {
    if !(q > 0.0) {
        return Err(Error::Config(format!("small-ball exponent must be positive, got {q}")));
    }
    if !(c_h > 0.0) || !(c_b > 0.0) {
        return Err(Error::Config("bandwidth constants must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    let nf = n as f64;
    Ok(Bandwidths {
        h: c_h * nf.powf(-1.0 / (q + 2.0)),
        b: c_b * nf.powf(-1.0 / (2.0 * (q + 2.0))),
    })
}

/// Estimate the effective small-ball exponent `q` at `x` by regressing
/// `log F_hat(h)` on `log h` over a dyadic bandwidth grid.
///
/// The grid starts at the median regressor distance and halves four times;
/// levels with fewer than 3 hits are dropped. Used only to pick bandwidth
/// schedules, never as an inferential quantity.
pub fn estimate_small_ball_exponent(series: &FunctionalSeries, x: &GridFunction) -> Result<f64> {
    let mut d = regressor_distances(series, x);
    d.sort_by(|a, b| a.total_cmp(b));
    let n = d.len();
    let median = d[n / 2];
    if !(median > 0.0) {
        return Err(Error::Degenerate("median regressor distance is zero".into()));
    }
    let mut points = Vec::new();
    for j in 0..=4 {
        let h = median * 0.5f64.powi(j);
        let f = small_ball_from_distances(&d, h);
        if f * n as f64 >= 3.0 {
            points.push((h.ln(), f.ln()));
        }
    }
    if points.len() < 2 {
        return Err(Error::Degenerate(
            "too few populated bandwidth levels to estimate the small-ball exponent".into(),
        ));
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum::<f64>() / m;
    let sy: f64 = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - sx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    let slope = sxy / sxx;
    Ok(slope.clamp(0.25, 16.0))
}

/// Monte Carlo proxy for the uniform estimation error:
/// `max_probes || Psi_hat(probe) - Psi(probe) ||`.
///
/// Every probe must lie in the estimator's restriction set; the harness
/// filters its probe sets before calling.
pub fn uniform_error(
    est: &FittedEstimator,
    truth: &RegressionOperator,
    probes: &[GridFunction],
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::Config("probe set must be nonempty".into()));
    }
    for (i, probe) in probes.iter().enumerate() {
        if !probe.in_class(est.restriction()) {
            return Err(Error::Config(format!(
                "probe {i} lies outside the restriction set U({})",
                est.restriction().radius()
            )));
        }
    }
    Ok(probes
        .iter()
        .map(|p| est.predict(p).value.l2_distance(&truth.apply(p)))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{Basis, Grid};
    use crate::process_models::{default_model, simulate_far1, FunctionalSeries};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn toy_config(h: f64, b: f64, r: f64) -> EstimatorConfig {
        EstimatorConfig::new(Kernel::Uniform, h, b, r, 1).unwrap()
    }

    /// Series whose states are `c_t * e_2 + drift`, convenient for
    /// controlling pairwise distances exactly.
    fn coefficient_series(coeffs: &[f64]) -> (FunctionalSeries, Arc<Basis>) {
        let grid = Grid::equispaced(101).unwrap();
        let basis = Basis::cosine(&grid, 3).unwrap();
        let items: Vec<GridFunction> =
            coeffs.iter().map(|c| basis.function(2).scale(*c)).collect();
        (FunctionalSeries::from_items(items, 0, "fixture", 0).unwrap(), basis)
    }

    #[test]
    fn kernel_weight_examples() {
        let grid = Grid::equispaced(101).unwrap();
        let basis = Basis::cosine(&grid, 2).unwrap();
        let x = basis.function(2).scale(0.3);
        for kernel in [Kernel::Uniform, Kernel::Quadratic] {
            assert_eq!(kernel.weight(&x, &x, 0.5), 1.0);
            // ||f - x|| = 2 h: outside the support.
            let f = basis.function(2).scale(0.3 + 1.0);
            assert_eq!(kernel.weight(&f, &x, 0.5), 0.0);
        }
        // Quadratic kernel at exactly distance h: K(1) = 1/2.
        let f = basis.function(2).scale(0.3 + 0.5);
        assert!((Kernel::Quadratic.weight(&f, &x, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernel_weight_depends_only_on_scaled_distance() {
        let grid = Grid::equispaced(101).unwrap();
        let basis = Basis::cosine(&grid, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let d: f64 = rng.gen_range(0.0..2.0);
            let h: f64 = rng.gen_range(0.1..1.5);
            let a: f64 = rng.gen_range(0.5..3.0);
            let x = GridFunction::zero(&grid);
            let f = basis.function(2).scale(d);
            let fs = basis.function(2).scale(d * a);
            for kernel in [Kernel::Uniform, Kernel::Quadratic] {
                let w1 = kernel.weight(&f, &x, h);
                let w2 = kernel.weight(&fs, &x, h * a);
                assert!((w1 - w2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_neighbor_returns_its_response() {
        // States at coefficients 0, 10, 20, 30: only X_1 = 10 e_2 is within
        // h = 1 of the target 10.2 e_2, so the prediction is X_2 exactly.
        let (series, basis) = coefficient_series(&[0.0, 10.0, 20.0, 30.0]);
        let cfg = toy_config(1.0, 2.0, 100.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        let target = basis.function(2).scale(10.2);
        let p = est.predict(&target);
        assert!(!p.fallback);
        assert_eq!(p.neighbor_count, 1);
        assert!(p.value.sub(series.state(2)).sup_norm() < 1e-12);
    }

    #[test]
    fn out_of_class_targets_fall_back_to_the_sample_mean() {
        let (series, basis) = coefficient_series(&[0.0, 1.0, 2.0, 3.0]);
        let cfg = toy_config(1.0, 2.0, 5.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        // smooth_norm of 100 e_2 is far beyond r_n = 5.
        let p = est.predict(&basis.function(2).scale(100.0));
        assert!(p.fallback);
        let x_bar = GridFunction::mean(&series.items()[1..=2]).unwrap();
        assert!(p.value.sub(&x_bar).sup_norm() < 1e-12);
    }

    #[test]
    fn zero_mass_targets_fall_back_to_the_sample_mean() {
        let (series, basis) = coefficient_series(&[0.0, 10.0, 20.0, 30.0]);
        let cfg = toy_config(0.5, 1.0, 1e6);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        let p = est.predict(&basis.function(2).scale(15.0));
        assert!(p.fallback);
        assert_eq!(p.neighbor_count, 0);
        assert!(p.value.sub(est.x_bar()).sup_norm() < 1e-12);
    }

    #[test]
    fn equidistant_neighbors_average_with_equal_weights() {
        let (series, basis) = coefficient_series(&[0.0, 10.0, 13.0, 11.0, 17.0, 0.0]);
        // Neighbors of 10.5 e_2 within h = 0.6: X_1 (10) and X_3 (11).
        let cfg = toy_config(0.6, 1.2, 100.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        let p = est.predict(&basis.function(2).scale(10.5));
        assert_eq!(p.neighbor_count, 2);
        let want = series.state(2).add(series.state(4)).scale(0.5);
        assert!(p.value.sub(&want).sup_norm() < 1e-12);
    }

    #[test]
    fn prediction_matches_brute_force_weighted_mean() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 60, 60, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for kernel in [Kernel::Uniform, Kernel::Quadratic] {
            let cfg = EstimatorConfig::new(kernel, 0.45, 0.9, 60.0, 1).unwrap();
            let est = FittedEstimator::fit(&series, &cfg).unwrap();
            for _ in 0..25 {
                let coeffs: Vec<f64> =
                    (0..12).map(|_| 0.4 * rng.gen_range(-1.0..1.0)).collect();
                let x = innov.basis().reconstruct(&coeffs).unwrap();
                let p = est.predict(&x);
                // Independent accumulation.
                let n = series.sample_size();
                let mut wsum = 0.0;
                let mut acc = GridFunction::zero(series.grid());
                for t in 1..=n {
                    let w = kernel.eval(series.state(t).l2_distance(&x) / 0.45);
                    wsum += w;
                    acc.axpy(w, series.state(t + 1));
                }
                if wsum > 0.0 && x.smooth_norm() <= 60.0 {
                    assert!(!p.fallback);
                    assert!(p.value.sub(&acc.scale(1.0 / wsum)).sup_norm() < 1e-12);
                } else {
                    assert!(p.fallback);
                }
            }
        }
    }

    #[test]
    fn prediction_stays_in_the_response_hull() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 80, 60, 3).unwrap();
        let cfg = toy_config(0.5, 1.0, 60.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        let x = series.state(10).clone();
        let p = est.predict(&x);
        assert!(!p.fallback);
        let m = series.grid().len();
        for i in 0..m {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 1..=series.sample_size() {
                let v = series.state(t + 1).values()[i];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let v = p.value.values()[i];
            assert!(v >= lo - 1e-10 && v <= hi + 1e-10);
        }
    }

    #[test]
    fn far_training_pairs_do_not_affect_the_prediction() {
        // Perturbing a pair farther than h + perturbation from the target
        // leaves the estimate unchanged.
        let (series, basis) = coefficient_series(&[0.0, 10.0, 12.0, 11.0, 14.0, 30.0, 13.0, 0.0]);
        let cfg = toy_config(1.5, 3.0, 1e6);
        let target = basis.function(2).scale(10.5);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        let base = est.predict(&target);
        assert!(!base.fallback);
        // Move the far state X_5 = 30 e_2 (distance 19.5 >> h) and its response.
        let mut items = series.items().to_vec();
        items[5] = basis.function(2).scale(33.0);
        items[6] = basis.function(2).scale(-5.0);
        let perturbed = FunctionalSeries::from_items(items, 0, "fixture", 0).unwrap();
        let est2 = FittedEstimator::fit(&perturbed, &cfg).unwrap();
        let p2 = est2.predict(&target);
        assert!(p2.value.sub(&base.value).sup_norm() < 1e-12);
    }

    #[test]
    fn small_ball_examples() {
        let (series, basis) = coefficient_series(&[
            0.0, 0.1, 0.2, 0.3, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 0.0,
        ]);
        let x = GridFunction::zero(series.grid());
        // 10 regressors X_1..X_10; within 0.35 of zero: 0.1, 0.2, 0.3.
        assert!((empirical_small_ball(&series, &x, 0.35) - 0.3).abs() < 1e-12);
        assert_eq!(empirical_small_ball(&series, &x, 1e6), 1.0);
        let off = basis.function(2).scale(-7.77);
        assert_eq!(empirical_small_ball(&series, &off, 0.0), 0.0);
    }

    #[test]
    fn small_ball_is_a_right_continuous_step_function() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 50, 50, 23).unwrap();
        let x = GridFunction::zero(series.grid());
        let mut d = regressor_distances(&series, &x);
        d.sort_by(|a, b| a.total_cmp(b));
        let n = d.len() as f64;
        let mut prev = 0.0;
        for (i, &h) in d.iter().enumerate() {
            // Right-continuity: the jump at h is included at h itself.
            let at = small_ball_from_distances(&d, h);
            let before = small_ball_from_distances(&d, h - 1e-12);
            assert!(at >= before && at >= prev);
            assert!((at - (i + 1) as f64 / n).abs() < 1e-12);
            prev = at;
        }
        assert_eq!(small_ball_from_distances(&d, d[d.len() - 1]), 1.0);
    }

    #[test]
    fn uniform_kernel_moments_are_exactly_one() {
        let m = limit_moments(Kernel::Uniform, |u| u, 4).unwrap();
        for j in 1..=4 {
            assert_eq!(m.mj(j), 1.0);
        }
    }

    #[test]
    fn uniform_kernel_m0_matches_power_law_closed_form() {
        for q in [1.0, 2.0, 3.0] {
            let m = limit_moments(Kernel::Uniform, |u: f64| u.powf(q), 1).unwrap();
            assert!((m.m0 - q / (q + 1.0)).abs() < 1e-8, "q = {q}: M0 = {}", m.m0);
        }
    }

    #[test]
    fn quadratic_kernel_m1_matches_closed_form() {
        // K(1) = 1/2 and -int_0^1 (-s) s ds = 1/3.
        let m = limit_moments(Kernel::Quadratic, |u| u, 2).unwrap();
        assert!((m.mj(1) - 5.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn limit_moments_reject_bad_tau0() {
        assert!(limit_moments(Kernel::Uniform, |_| 0.5, 1).is_err()); // tau0(0) != 0
        assert!(limit_moments(Kernel::Uniform, |u| -u, 1).is_err()); // decreasing
    }

    #[test]
    fn bandwidth_schedule_examples() {
        let b = bandwidth_schedule(256, 2.0, 1.0, 1.0).unwrap();
        assert!((b.h - 0.25).abs() < 1e-12);
        assert!(b.separated());
        // Quadrupling n at q = 2 shrinks h by 4^(-1/4).
        let b4 = bandwidth_schedule(1024, 2.0, 1.0, 1.0).unwrap();
        assert!((b4.h / b.h - 4f64.powf(-0.25)).abs() < 1e-12);
        // n = 1 with equal constants: h = b, flagged via separated().
        let b1 = bandwidth_schedule(1, 2.0, 1.0, 1.0).unwrap();
        assert!(!b1.separated());
        assert!(bandwidth_schedule(100, 0.0, 1.0, 1.0).is_err());
        assert!(bandwidth_schedule(100, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn exponent_estimate_is_sane_for_the_default_model() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 400, 80, 2).unwrap();
        let x = GridFunction::zero(series.grid());
        let q = estimate_small_ball_exponent(&series, &x).unwrap();
        assert!((0.25..=16.0).contains(&q), "estimated q = {q}");
    }

    #[test]
    fn uniform_error_validates_probes() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 30, 60, 8).unwrap();
        let cfg = toy_config(0.5, 1.0, 40.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        assert!(matches!(uniform_error(&est, &op, &[]), Err(Error::Config(_))));
        let wild = GridFunction::constant(series.grid(), 1e6);
        assert!(uniform_error(&est, &op, &[wild]).is_err());
    }

    #[test]
    fn constant_response_series_predict_the_constant_everywhere() {
        // All training responses equal g: both the kernel average and the
        // fallback mean return g, so the estimator is exact for the
        // constant map.
        let grid = Grid::equispaced(101).unwrap();
        let basis = Basis::cosine(&grid, 3).unwrap();
        let g = basis.function(2).scale(0.7);
        let items = vec![g.clone(); 8];
        let series = FunctionalSeries::from_items(items, 0, "fixture", 0).unwrap();
        let cfg = toy_config(0.5, 1.0, 10.0);
        let est = FittedEstimator::fit(&series, &cfg).unwrap();
        for target in [g.clone(), GridFunction::zero(&grid), basis.function(3).scale(0.2)] {
            let p = est.predict(&target);
            assert!(p.value.sub(&g).sup_norm() < 1e-10);
        }
    }
}
