//! The autoregression (residual) bootstrap for FAR(1) samples.
//!
//! From a sample `X_0, ..., X_{n+1}` and an oversmoothed estimate
//! `Psi_hat_b`, the residuals are
//!
//! ```text
//! eps_hat_t = X_t - Psi_hat_b(X_{t-1}),            t = 1, ..., n+1,
//! I_n       = { 1 <= j <= n : X_{j-1} in U(r_n) },
//! eps'_t    = eps_hat_t - mean_{j in I_n} eps_hat_j,
//! ```
//!
//! so that `sum_{t in I_n} eps'_t = 0` exactly. Pseudo-series are generated
//! by resampling indices `kappa_t` uniformly from `I_n` and replaying the
//! recursion `X*_t = Psi_hat_b(X*_{t-1}) + eps'_{kappa_t}` from `X*_0 = X_0`.
//! The bootstrap estimator applies the Nadaraya-Watson formula to the
//! pseudo-sample with the main bandwidth `h`; its out-of-class branch uses
//! the original sample mean. A coupled process driven by fresh innovations
//! from the true model supports Mallows-distance diagnostics.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function_space::{Grid, GridFunction};
use crate::kernel_regression::{nw_core, EstimatorConfig, FittedEstimator, Prediction};
use crate::process_models::{FunctionalSeries, InnovationModel, RegressionOperator};

/// Centered residual pool drawn on by the bootstrap.
#[derive(Debug, Clone)]
pub struct ResidualPool {
    /// Centered residuals `eps'_t` for `t` in the index set, pool order.
    residuals: Vec<GridFunction>,
    /// The index set `I_n`, ascending.
    index_set: Vec<usize>,
    /// Centering mean over the index set.
    eps_bar: GridFunction,
    /// Raw residuals `eps_hat_t` for `t = 1, ..., n+1` (diagnostics only).
    raw: Vec<GridFunction>,
    /// Regressor sample mean of the source series (fallback value of the
    /// bootstrap estimator).
    x_bar: GridFunction,
    /// Sample size `n` of the source series.
    n: usize,
}

impl ResidualPool {
    pub fn residuals(&self) -> &[GridFunction] {
        &self.residuals
    }

    pub fn index_set(&self) -> &[usize] {
        &self.index_set
    }

    pub fn eps_bar(&self) -> &GridFunction {
        &self.eps_bar
    }

    /// Raw residual `eps_hat_t`, `t = 1, ..., n+1`.
    pub fn raw_residual(&self, t: usize) -> &GridFunction {
        &self.raw[t - 1]
    }

    pub fn raw_residuals(&self) -> &[GridFunction] {
        &self.raw
    }

    pub fn x_bar(&self) -> &GridFunction {
        &self.x_bar
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    /// Centered residual for a member `t` of the index set.
    pub fn residual_for(&self, t: usize) -> Result<&GridFunction> {
        let pos = self
            .index_set
            .binary_search(&t)
            .map_err(|_| Error::Config(format!("index {t} is not in the resampling set")))?;
        Ok(&self.residuals[pos])
    }
}

/// Extract and center residuals with the oversmoothed estimator.
///
/// `est_b` must be fitted on `series` with the oversmoothing bandwidth; the
/// restriction radius defining `I_n` is the estimator's own.
pub fn extract_residuals(
    series: &FunctionalSeries,
    est_b: &FittedEstimator,
) -> Result<ResidualPool> {
    if !std::ptr::eq(series, est_b.series()) {
        return Err(Error::Structural(
            "residual extraction requires the estimator fitted on the same series".into(),
        ));
    }
    let n = series.sample_size();
    let class = est_b.restriction();
    let index_set: Vec<usize> =
        (1..=n).filter(|&j| series.state(j - 1).in_class(class)).collect();
    if index_set.is_empty() {
        return Err(Error::Degenerate(format!(
            "no predecessor state lies in U({}); restriction radius too small",
            class.radius()
        )));
    }
    let raw: Vec<GridFunction> = (1..=n + 1)
        .map(|t| series.state(t).sub(&est_b.predict(series.state(t - 1)).value))
        .collect();
    let mut eps_bar = GridFunction::zero(series.grid());
    for &t in &index_set {
        eps_bar.axpy(1.0, &raw[t - 1]);
    }
    let eps_bar = eps_bar.scale(1.0 / index_set.len() as f64);
    let residuals: Vec<GridFunction> =
        index_set.iter().map(|&t| raw[t - 1].sub(&eps_bar)).collect();
    let x_bar = est_b.x_bar().clone();
    Ok(ResidualPool { residuals, index_set, eps_bar, raw, x_bar, n })
}

/// Draw `count` indices i.i.d. uniformly from the pool's index set.
pub fn resample_indices(pool: &ResidualPool, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let m = pool.index_set.len();
    (0..count).map(|_| pool.index_set[rng.gen_range(0..m)]).collect()
}

/// One bootstrap pseudo-series `X*_0, ..., X*_{n+1}` plus the resampling
/// indices that generated it.
#[derive(Debug, Clone)]
pub struct BootstrapDraw {
    states: Vec<GridFunction>,
    kappa: Vec<usize>,
    seed: u64,
    pool: Arc<ResidualPool>,
    fallback_count: usize,
}

impl BootstrapDraw {
    /// Assemble a draw from parts (used by tests and file ingestion).
    pub fn from_parts(
        states: Vec<GridFunction>,
        kappa: Vec<usize>,
        seed: u64,
        pool: Arc<ResidualPool>,
    ) -> Result<Self> {
        if states.len() < 3 || kappa.len() + 1 != states.len() {
            return Err(Error::Structural(format!(
                "{} states need {} resampling indices, got {}",
                states.len(),
                states.len().saturating_sub(1),
                kappa.len()
            )));
        }
        if kappa.iter().any(|t| pool.index_set.binary_search(t).is_err()) {
            return Err(Error::Structural("resampling index outside the pool index set".into()));
        }
        Ok(BootstrapDraw { states, kappa, seed, pool, fallback_count: 0 })
    }

    pub fn states(&self) -> &[GridFunction] {
        &self.states
    }

    pub fn state(&self, t: usize) -> &GridFunction {
        &self.states[t]
    }

    /// `kappa_t` for `t = 1, ..., n+1`.
    pub fn kappa(&self) -> &[usize] {
        &self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pool(&self) -> &Arc<ResidualPool> {
        &self.pool
    }

    /// Fallback predictions taken while generating the recursion (zero for
    /// draws assembled with [`BootstrapDraw::from_parts`]).
    pub fn fallback_count(&self) -> usize {
        self.fallback_count
    }

    /// Sample size `n` of the pseudo-series.
    pub fn sample_size(&self) -> usize {
        self.states.len() - 2
    }

    /// The resampled innovation `eps*_t = eps'_{kappa_t}`, `t = 1, ..., n+1`.
    pub fn resampled_innovation(&self, t: usize) -> Result<&GridFunction> {
        self.pool.residual_for(self.kappa[t - 1])
    }
}

/// Algorithm: generate the pseudo-data for the autoregression bootstrap.
///
/// Resamples `n + 1` centered residuals and replays the estimated
/// recursion from `x0` (default: the observed `X_0`). Deterministic given
/// the seed.
pub fn generate_pseudo_series(
    pool: &Arc<ResidualPool>,
    est_b: &FittedEstimator,
    x0: Option<&GridFunction>,
    seed: u64,
) -> Result<BootstrapDraw> {
    if est_b.series().sample_size() != pool.n {
        return Err(Error::Structural(
            "residual pool and estimator come from samples of different sizes".into(),
        ));
    }
    let n = pool.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = resample_indices(pool, n + 1, &mut rng);
    let mut states = Vec::with_capacity(n + 2);
    states.push(x0.unwrap_or_else(|| est_b.series().state(0)).clone());
    let mut fallback_count = 0;
    for t in 1..=n + 1 {
        let pred = est_b.predict(&states[t - 1]);
        if pred.fallback {
            fallback_count += 1;
        }
        let mut next = pred.value;
        next.axpy(1.0, pool.residual_for(kappa[t - 1])?);
        states.push(next);
    }
    Ok(BootstrapDraw { states, kappa, seed, pool: Arc::clone(pool), fallback_count })
}

/// The bootstrap estimator `Psi_hat*_{n,h}` evaluated at `x`.
///
/// Same Nadaraya-Watson formula and fallback rules as the original
/// estimator, with the pseudo-series as training data, the main bandwidth
/// `config.h`, and the original sample mean on the fallback branches.
pub fn bootstrap_estimate(
    draw: &BootstrapDraw,
    config: &EstimatorConfig,
    x: &GridFunction,
) -> Prediction {
    let fallback = || Prediction {
        value: draw.pool.x_bar.clone(),
        weight_sum: 0.0,
        neighbor_count: 0,
        fallback: true,
    };
    if !x.in_class(&config.restriction()) {
        return fallback();
    }
    let (value, weight_sum, neighbor_count) = nw_core(&draw.states, config.kernel, config.h, x);
    match value {
        Some(value) => Prediction { value, weight_sum, neighbor_count, fallback: false },
        None => fallback(),
    }
}

/// The coupled comparison process: fresh i.i.d. innovations from the true
/// model driving the true recursion, paired positionally with a draw's
/// resampled innovations.
#[derive(Debug, Clone)]
pub struct CoupledDraw {
    tilde_eps: Vec<GridFunction>,
    tilde_states: Vec<GridFunction>,
    seed: u64,
}

impl CoupledDraw {
    /// Fresh innovations `eps~_t`, `t = 1, ..., n+1`.
    pub fn innovations(&self) -> &[GridFunction] {
        &self.tilde_eps
    }

    /// States `X~_0, ..., X~_{n+1}` of the true recursion.
    pub fn states(&self) -> &[GridFunction] {
        &self.tilde_states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Positional distances `||eps~_t - eps*_t||`, `t = 1, ..., n+1`.
    ///
    /// A per-draw diagnostic; law-level closeness is measured by the
    /// optimal assignment in [`crate::distances`].
    pub fn paired_distances(&self, draw: &BootstrapDraw) -> Result<Vec<f64>> {
        if draw.kappa.len() != self.tilde_eps.len() {
            return Err(Error::Structural("coupled draw built for a different sample size".into()));
        }
        self.tilde_eps
            .iter()
            .enumerate()
            .map(|(i, e)| Ok(e.l2_distance(draw.resampled_innovation(i + 1)?)))
            .collect()
    }
}

/// Build the coupled process for a draw, in the simulation setting where
/// the true model is known.
///
/// `X~_0` is a fresh near-stationary draw (zero start plus `burn_in`
/// steps); the innovations are i.i.d. from the true innovation model.
pub fn build_coupled_draw(
    draw: &BootstrapDraw,
    innov: &InnovationModel,
    op: &RegressionOperator,
    burn_in: usize,
    seed: u64,
) -> Result<CoupledDraw> {
    let n = draw.sample_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x0 = GridFunction::zero(innov.grid());
    for _ in 0..burn_in {
        let mut next = op.apply(&x0);
        next.axpy(1.0, &innov.draw(&mut rng)?);
        x0 = next;
    }
    let mut tilde_eps = Vec::with_capacity(n + 1);
    let mut tilde_states = Vec::with_capacity(n + 2);
    tilde_states.push(x0);
    for t in 1..=n + 1 {
        let eps = innov.draw(&mut rng)?;
        let mut next = op.apply(&tilde_states[t - 1]);
        next.axpy(1.0, &eps);
        tilde_eps.push(eps);
        tilde_states.push(next);
    }
    Ok(CoupledDraw { tilde_eps, tilde_states, seed })
}

/// Measured almost-sure bound on `lip(X*_t)`: resampled residual roughness
/// plus the roughness of any convex combination the estimator can output.
pub fn pseudo_series_lip_bound(pool: &ResidualPool, series: &FunctionalSeries) -> f64 {
    let eps_max = pool.residuals.iter().fold(0.0f64, |m, e| m.max(e.lip_seminorm()));
    // States X_1, ..., X_{n+1} span the estimator's response hull and the
    // regressor mean.
    let state_max =
        series.items()[1..].iter().fold(0.0f64, |m, x| m.max(x.lip_seminorm()));
    eps_max + state_max
}

/// Shared grid of the pool residuals (handy for sidecar writers).
pub fn pool_grid(pool: &ResidualPool) -> &Arc<Grid> {
    pool.eps_bar.grid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Basis;
    use crate::kernel_regression::Kernel;
    use crate::process_models::{default_model, simulate_far1, CoeffLaw};

    const CENTERING_TOL: f64 = 1e-10;

    /// Series whose states are multiples of `e_2`; distances between states
    /// are exactly the coefficient gaps.
    fn coefficient_series(coeffs: &[f64]) -> (FunctionalSeries, Arc<Basis>) {
        let grid = Grid::equispaced(101).unwrap();
        let basis = Basis::cosine(&grid, 3).unwrap();
        let items: Vec<GridFunction> =
            coeffs.iter().map(|c| basis.function(2).scale(*c)).collect();
        (FunctionalSeries::from_items(items, 0, "fixture", 0).unwrap(), basis)
    }

    fn coef(f: &GridFunction, basis: &Basis) -> f64 {
        f.inner(basis.function(2)).unwrap()
    }

    #[test]
    fn noiseless_series_has_zero_residuals() {
        let (op, _) = default_model().unwrap();
        let basis = Arc::clone(op.basis());
        let innov =
            InnovationModel::new(Arc::clone(&basis), vec![0.0; 12], CoeffLaw::Uniform, 1.0)
                .unwrap();
        let series = simulate_far1(&op, &innov, 10, 5, 1).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.4, 0.8, 50.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = extract_residuals(&series, &est_b).unwrap();
        assert!(pool.raw_residuals().iter().all(|e| e.l2_norm() < 1e-14));
        assert!(pool.residuals().iter().all(|e| e.l2_norm() < 1e-14));
    }

    #[test]
    fn hand_fixture_residuals_and_index_set_are_exact() {
        // X_0 = 100 e_2 is isolated and outside U(100); every other state
        // is its own unique neighbor at bandwidth 0.5, so the oversmoothed
        // fit is exact there.
        let (series, basis) = coefficient_series(&[100.0, 1.0, 2.0, 3.0, 4.0]);
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.25, 0.5, 100.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = extract_residuals(&series, &est_b).unwrap();
        assert_eq!(pool.index_set(), &[2, 3]);
        // eps_hat_1 = X_1 - X_bar since X_0 has no neighbors: 1 - 2 = -1.
        assert!((coef(pool.raw_residual(1), &basis) + 1.0).abs() < 1e-12);
        for t in 2..=4 {
            assert!(coef(pool.raw_residual(t), &basis).abs() < 1e-12);
        }
        // Pool residuals are centered over I_n = {2, 3}: both zero here.
        assert!(pool.residuals().iter().all(|e| e.l2_norm() < 1e-12));
        let total: f64 = pool.residuals().iter().map(|e| coef(e, &basis)).sum();
        assert!(total.abs() < CENTERING_TOL);
    }

    #[test]
    fn centering_includes_out_of_class_residuals_when_radius_allows() {
        let (series, basis) = coefficient_series(&[100.0, 1.0, 2.0, 3.0, 4.0]);
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.25, 0.5, 1000.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = extract_residuals(&series, &est_b).unwrap();
        assert_eq!(pool.index_set(), &[1, 2, 3]);
        // eps_bar = (-1 + 0 + 0) / 3.
        assert!((coef(pool.eps_bar(), &basis) + 1.0 / 3.0).abs() < 1e-12);
        let coefs: Vec<f64> = pool.residuals().iter().map(|e| coef(e, &basis)).collect();
        assert!((coefs[0] + 2.0 / 3.0).abs() < 1e-12);
        assert!((coefs[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((coefs[2] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn centering_identity_holds_on_simulated_data() {
        let (op, innov) = default_model().unwrap();
        for (n, seed) in [(50, 1u64), (120, 2), (200, 3)] {
            let series = simulate_far1(&op, &innov, n, 80, seed).unwrap();
            let cfg = EstimatorConfig::new(Kernel::Uniform, 0.3, 0.7, 60.0, 1).unwrap();
            let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
            let pool = extract_residuals(&series, &est_b).unwrap();
            let mut total = GridFunction::zero(series.grid());
            for e in pool.residuals() {
                total.axpy(1.0, e);
            }
            assert!(total.l2_norm() < CENTERING_TOL, "n = {n}: {}", total.l2_norm());
        }
    }

    #[test]
    fn tiny_restriction_radius_is_a_degenerate_sample() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 20, 40, 4).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.0005, 0.001, 0.001, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        assert!(matches!(extract_residuals(&series, &est_b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn resampling_is_uniform_and_deterministic() {
        let (series, _) = coefficient_series(&[
            0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0,
        ]);
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.5, 1.0, 1e6, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = extract_residuals(&series, &est_b).unwrap();
        assert_eq!(pool.len(), 10);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 100_000;
        let kappa = resample_indices(&pool, draws, &mut rng);
        assert!(kappa.iter().all(|t| pool.index_set().contains(t)));
        for &t in pool.index_set() {
            let freq = kappa.iter().filter(|&&k| k == t).count() as f64 / draws as f64;
            assert!((freq - 0.1).abs() < 0.015, "index {t}: frequency {freq}");
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(kappa, resample_indices(&pool, draws, &mut rng2));
    }

    #[test]
    fn singleton_pool_resamples_constantly() {
        let (series, _) = coefficient_series(&[100.0, 1.0, 2.0, 3.0]);
        // Only X_1 = 1 e_2 is inside U(8.0) (smooth norm ~5.9).
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.25, 0.5, 8.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = extract_residuals(&series, &est_b).unwrap();
        assert_eq!(pool.index_set(), &[2]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(resample_indices(&pool, 50, &mut rng).iter().all(|&t| t == 2));
    }

    #[test]
    fn zero_pool_and_zero_map_give_a_zero_pseudo_series() {
        let (op, _) = default_model().unwrap();
        let basis = Arc::clone(op.basis());
        let zero_op = RegressionOperator::linear_diagonal(Arc::clone(&basis), vec![0.0; 12]).unwrap();
        let innov =
            InnovationModel::new(basis, vec![0.0; 12], CoeffLaw::Uniform, 1.0).unwrap();
        let series = simulate_far1(&zero_op, &innov, 8, 3, 0).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.4, 0.8, 10.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let draw = generate_pseudo_series(&pool, &est_b, None, 5).unwrap();
        for t in 1..draw.states().len() {
            assert!(draw.state(t).l2_norm() < 1e-14);
        }
    }

    #[test]
    fn hand_recursion_matches_exactly() {
        let (series, basis) = coefficient_series(&[100.0, 1.0, 2.0, 3.0]);
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.25, 0.5, 100.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        // I_n = {2} and the single centered residual is zero, so the draw
        // replays the estimator from X*_0 = X_0 = 100 e_2:
        //   X*_1 = X_bar = 1.5 e_2    (out of class at 100 e_2)
        //   X*_2 = (X_2 + X_3) / 2 = 2.5 e_2  (both regressors at gap 0.5)
        //   X*_3 = X_3 = 3 e_2        (only X_2 within 0.5 of 2.5)
        assert_eq!(pool.index_set(), &[2]);
        let draw = generate_pseudo_series(&pool, &est_b, None, 9).unwrap();
        let want = [100.0, 1.5, 2.5, 3.0];
        for (t, w) in want.iter().enumerate() {
            assert!(
                (coef(draw.state(t), &basis) - w).abs() < 1e-12,
                "state {t}: {} vs {w}",
                coef(draw.state(t), &basis)
            );
        }
    }

    #[test]
    fn recursion_identity_replays_to_machine_precision() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 80, 80, 12).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.35, 0.8, 60.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let draw = generate_pseudo_series(&pool, &est_b, None, 3).unwrap();
        assert_eq!(draw.kappa().len(), series.sample_size() + 1);
        for t in 1..=draw.sample_size() + 1 {
            let replay = est_b
                .predict(draw.state(t - 1))
                .value
                .add(draw.resampled_innovation(t).unwrap());
            assert!(draw.state(t).sub(&replay).l2_norm() < CENTERING_TOL);
        }
    }

    #[test]
    fn equal_seeds_give_identical_draws() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 50, 80, 6).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.35, 0.8, 60.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let a = generate_pseudo_series(&pool, &est_b, None, 42).unwrap();
        let b = generate_pseudo_series(&pool, &est_b, None, 42).unwrap();
        assert_eq!(a.kappa(), b.kappa());
        for (x, y) in a.states().iter().zip(b.states()) {
            assert!(x.sub(y).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn pseudo_states_respect_measured_smoothness_and_norm_bounds() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 100, 80, 14).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.35, 0.8, 60.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let lip_bound = pseudo_series_lip_bound(&pool, &series);
        // Any estimator output is a convex combination of responses or the
        // regressor mean; add the largest resampled residual norm.
        let pred_norm_bound = (1..=series.sample_size() + 1)
            .map(|t| series.state(t).l2_norm())
            .fold(est_b.x_bar().l2_norm(), f64::max);
        let eps_norm_bound =
            pool.residuals().iter().fold(0.0f64, |m, e| m.max(e.l2_norm()));
        let d = pred_norm_bound + eps_norm_bound;
        let geometric = draw_x0_norm(&series) + d / (1.0 - op.lip_const());
        for seed in 0..5 {
            let draw = generate_pseudo_series(&pool, &est_b, None, seed).unwrap();
            for t in 1..draw.states().len() {
                assert!(draw.state(t).lip_seminorm() <= lip_bound + 1e-9);
                assert!(draw.state(t).l2_norm() <= geometric + 1e-9);
            }
        }
    }

    fn draw_x0_norm(series: &FunctionalSeries) -> f64 {
        series.state(0).l2_norm()
    }

    #[test]
    fn bootstrap_estimate_on_the_original_states_equals_nw_predict() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 60, 80, 19).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Quadratic, 0.4, 0.9, 60.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let est_h = FittedEstimator::fit(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let kappa = vec![pool.index_set()[0]; series.sample_size() + 1];
        let draw =
            BootstrapDraw::from_parts(series.items().to_vec(), kappa, 0, Arc::clone(&pool))
                .unwrap();
        for x in [series.state(5).clone(), GridFunction::zero(series.grid())] {
            let a = bootstrap_estimate(&draw, &cfg, &x);
            let b = est_h.predict(&x);
            assert_eq!(a.fallback, b.fallback);
            assert!(a.value.sub(&b.value).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_estimate_out_of_class_returns_the_original_mean() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 40, 80, 25).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.35, 0.8, 40.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let draw = generate_pseudo_series(&pool, &est_b, None, 1).unwrap();
        let wild = GridFunction::constant(series.grid(), 1e4);
        let p = bootstrap_estimate(&draw, &cfg, &wild);
        assert!(p.fallback);
        assert!(p.value.sub(est_b.x_bar()).sup_norm() < 1e-12);
    }

    #[test]
    fn single_neighbor_pseudo_fixture_is_exact() {
        let (series, basis) = coefficient_series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.25, 0.5, 1e6, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let kappa = vec![pool.index_set()[0]; series.sample_size() + 1];
        let draw =
            BootstrapDraw::from_parts(series.items().to_vec(), kappa, 0, Arc::clone(&pool))
                .unwrap();
        // Only X*_2 = 2 e_2 lies within h = 0.25 of the target.
        let p = bootstrap_estimate(&draw, &cfg, &basis.function(2).scale(2.1));
        assert!(!p.fallback);
        assert_eq!(p.neighbor_count, 1);
        assert!(p.value.sub(series.state(3)).sup_norm() < 1e-12);
    }

    #[test]
    fn coupled_draw_with_zero_noise_matches_exactly() {
        let (op, _) = default_model().unwrap();
        let basis = Arc::clone(op.basis());
        let innov =
            InnovationModel::new(basis, vec![0.0; 12], CoeffLaw::Uniform, 1.0).unwrap();
        let series = simulate_far1(&op, &innov, 12, 10, 2).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.3, 0.6, 50.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let draw = generate_pseudo_series(&pool, &est_b, None, 7).unwrap();
        let coupled = build_coupled_draw(&draw, &innov, &op, 10, 8).unwrap();
        let dists = coupled.paired_distances(&draw).unwrap();
        assert_eq!(dists.len(), 13);
        assert!(dists.iter().all(|d| *d < 1e-14));
    }

    #[test]
    fn coupled_draw_is_deterministic() {
        let (op, innov) = default_model().unwrap();
        let series = simulate_far1(&op, &innov, 30, 60, 3).unwrap();
        let cfg = EstimatorConfig::new(Kernel::Uniform, 0.35, 0.8, 60.0, 1).unwrap();
        let est_b = FittedEstimator::fit_oversmoothed(&series, &cfg).unwrap();
        let pool = Arc::new(extract_residuals(&series, &est_b).unwrap());
        let draw = generate_pseudo_series(&pool, &est_b, None, 70).unwrap();
        let a = build_coupled_draw(&draw, &innov, &op, 60, 5).unwrap();
        let b = build_coupled_draw(&draw, &innov, &op, 60, 5).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            assert_eq!(x.values(), y.values());
        }
    }
}
