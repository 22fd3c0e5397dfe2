//! Innovation models, regression operators and the FAR(1) simulator
//! `X_t = Psi(X_{t-1}) + eps_t`.
//!
//! Innovations are finite cosine-basis expansions with independent
//! mean-zero, unit-variance coefficients scaled by an exponentially
//! decaying schedule `sigma_k`, and an almost-sure cap on the Lipschitz
//! seminorm enforced by rejection. Operators are Lipschitz contractions
//! (`L_Psi < 1`), either diagonal in the basis or a saturating nonlinear
//! squash of a diagonal map, so the process admits a stationary law that a
//! zero start plus burn-in reaches geometrically fast.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::function_space::{Basis, Grid, GridFunction};

/// Rejection attempts allowed when enforcing the Lipschitz cap.
const MAX_REJECTIONS: usize = 1000;

/// Truncation point (in standard deviations) of the truncated-gaussian law.
const GAUSS_TRUNC: f64 = 3.0;

/// Law of the unit-variance innovation coefficients.
///
/// Both laws are symmetric (mean zero) and bounded, which keeps all
/// conditional moments of the innovation norm finite automatically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffLaw {
    /// `sqrt(3) * U(-1, 1)`: bounded by `sqrt(3)`, variance 1.
    Uniform,
    /// Standard gaussian truncated at `+-3`, rescaled to variance 1.
    TruncatedGaussian,
}

impl CoeffLaw {
    /// Standard deviation of the raw `N(0,1)` truncated at `+-GAUSS_TRUNC`.
    fn truncated_sd() -> f64 {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let a = GAUSS_TRUNC;
        let mass = 2.0 * normal.cdf(a) - 1.0;
        (1.0 - 2.0 * a * normal.pdf(a) / mass).sqrt()
    }

    fn sample(&self, rng: &mut impl Rng, trunc_scale: f64) -> f64 {
        match self {
            CoeffLaw::Uniform => 3f64.sqrt() * rng.gen_range(-1.0..1.0),
            CoeffLaw::TruncatedGaussian => loop {
                let z: f64 = rng.sample(StandardNormal);
                if z.abs() <= GAUSS_TRUNC {
                    return z / trunc_scale;
                }
            },
        }
    }

    /// Almost-sure bound on a unit-variance coefficient.
    fn coeff_bound(&self, trunc_scale: f64) -> f64 {
        match self {
            CoeffLaw::Uniform => 3f64.sqrt(),
            CoeffLaw::TruncatedGaussian => GAUSS_TRUNC / trunc_scale,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoeffLaw::Uniform => "uniform",
            CoeffLaw::TruncatedGaussian => "truncated_gaussian",
        }
    }
}

/// Generator of i.i.d. mean-zero innovations `eps = sum_k xi_k sigma_k e_k`.
#[derive(Debug, Clone)]
pub struct InnovationModel {
    basis: Arc<Basis>,
    scales: Vec<f64>,
    law: CoeffLaw,
    lip_cap: f64,
    trunc_scale: f64,
}

impl InnovationModel {
    /// Build a model with per-coefficient scales `sigma_k` and an
    /// almost-sure cap on the Lipschitz seminorm of the draws.
    ///
    /// The scales must decay strictly (each nonzero `sigma_{k+1} < sigma_k`);
    /// an all-zero schedule is allowed as the degenerate noiseless model.
    pub fn new(basis: Arc<Basis>, scales: Vec<f64>, law: CoeffLaw, lip_cap: f64) -> Result<Self> {
        if scales.len() != basis.len() {
            return Err(Error::Config(format!(
                "{} coefficient scales for a basis of size {}",
                scales.len(),
                basis.len()
            )));
        }
        if scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Config("coefficient scales must be finite and >= 0".into()));
        }
        for w in scales.windows(2) {
            if w[0] == 0.0 && w[1] > 0.0 {
                return Err(Error::Config("coefficient scales must be nonincreasing".into()));
            }
            if w[0] > 0.0 && w[1] >= w[0] {
                return Err(Error::Config(format!(
                    "coefficient scales must decay strictly, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !lip_cap.is_finite() || lip_cap < 0.0 {
            return Err(Error::Config(format!("lipschitz cap must be >= 0, got {lip_cap}")));
        }
        let trunc_scale = CoeffLaw::truncated_sd();
        Ok(InnovationModel { basis, scales, law, lip_cap, trunc_scale })
    }

    /// Exponential schedule `sigma_k = base * exp(-decay (k-1))`.
    pub fn exponential(
        basis: Arc<Basis>,
        base: f64,
        decay: f64,
        law: CoeffLaw,
        lip_cap: f64,
    ) -> Result<Self> {
        if base < 0.0 || !base.is_finite() {
            return Err(Error::Config(format!("scale base must be >= 0, got {base}")));
        }
        if base > 0.0 && decay <= 0.0 {
            return Err(Error::Config(format!("scale decay must be positive, got {decay}")));
        }
        let scales = (0..basis.len()).map(|k| base * (-decay * k as f64).exp()).collect();
        InnovationModel::new(basis, scales, law, lip_cap)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.basis.grid()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn law(&self) -> CoeffLaw {
        self.law
    }

    pub fn lip_cap(&self) -> f64 {
        self.lip_cap
    }

    /// One innovation draw; rejection keeps `lip(eps) <= lip_cap`.
    pub fn draw(&self, rng: &mut impl Rng) -> Result<GridFunction> {
        if self.scales.iter().all(|s| *s == 0.0) {
            return Ok(GridFunction::zero(self.basis.grid()));
        }
        for _ in 0..MAX_REJECTIONS {
            let coeffs = self.draw_coeffs(rng);
            let eps = self.basis.reconstruct(&coeffs)?;
            if eps.lip_seminorm() <= self.lip_cap {
                return Ok(eps);
            }
        }
        Err(Error::Config(format!(
            "lipschitz cap {} rejected {MAX_REJECTIONS} consecutive draws; cap too tight for the scales",
            self.lip_cap
        )))
    }

    /// Raw (pre-rejection) coefficient draw `xi_k sigma_k`.
    pub fn draw_coeffs(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.scales.iter().map(|s| s * self.law.sample(rng, self.trunc_scale)).collect()
    }

    /// Almost-sure bound on `|<eps, e_k>|`.
    pub fn coeff_bounds(&self) -> Vec<f64> {
        let b = self.law.coeff_bound(self.trunc_scale);
        self.scales.iter().map(|s| s * b).collect()
    }

    /// Almost-sure bound on `||eps||`.
    pub fn norm_bound(&self) -> f64 {
        self.coeff_bounds().iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// Almost-sure bound on `lip(eps)` (the tighter of the cap and the
    /// coefficient-wise bound).
    pub fn lip_bound(&self) -> f64 {
        self.basis.lip_bound(&self.coeff_bounds()).min(self.lip_cap)
    }
}

/// The regression operator kinds shipped with the crate.
#[derive(Debug, Clone)]
pub enum OperatorKind {
    /// `Psi(f) = sum_k rho_k <f, e_k> e_k` with `sup |rho_k| = L_Psi < 1`.
    LinearDiagonal { rho: Vec<f64> },
    /// `Psi(f)(u) = L_Psi * s * tanh(g(u) / s)` where `g` is the diagonal
    /// map with weights `shape_k` (`sup |shape_k| = 1`) and `s` is the
    /// saturation scale. The squash is pointwise 1-Lipschitz, so the map
    /// stays an `L_Psi`-contraction with uniformly bounded sup norm.
    NonlinearSaturating { shape: Vec<f64>, saturation: f64 },
}

/// A Lipschitz regression operator on the discretized function space.
#[derive(Debug, Clone)]
pub struct RegressionOperator {
    kind: OperatorKind,
    lip: f64,
    basis: Arc<Basis>,
}

impl RegressionOperator {
    pub fn linear_diagonal(basis: Arc<Basis>, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != basis.len() {
            return Err(Error::Config(format!(
                "{} diagonal weights for a basis of size {}",
                rho.len(),
                basis.len()
            )));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("diagonal weights must be finite".into()));
        }
        let lip = rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if lip >= 1.0 {
            return Err(Error::Config(format!("operator Lipschitz constant {lip} must be < 1")));
        }
        Ok(RegressionOperator { kind: OperatorKind::LinearDiagonal { rho }, lip, basis })
    }

    /// Exponential diagonal schedule `rho_k = base * exp(-decay (k-1))`.
    pub fn linear_exponential(basis: Arc<Basis>, base: f64, decay: f64) -> Result<Self> {
        if decay < 0.0 {
            return Err(Error::Config(format!("diagonal decay must be >= 0, got {decay}")));
        }
        let rho = (0..basis.len()).map(|k| base * (-decay * k as f64).exp()).collect();
        RegressionOperator::linear_diagonal(basis, rho)
    }

    pub fn nonlinear_saturating(
        basis: Arc<Basis>,
        shape: Vec<f64>,
        lip: f64,
        saturation: f64,
    ) -> Result<Self> {
        if shape.len() != basis.len() {
            return Err(Error::Config(format!(
                "{} shape weights for a basis of size {}",
                shape.len(),
                basis.len()
            )));
        }
        if !(0.0..1.0).contains(&lip) {
            return Err(Error::Config(format!("operator Lipschitz constant {lip} must be in [0, 1)")));
        }
        if !(saturation > 0.0) {
            return Err(Error::Config(format!("saturation scale must be positive, got {saturation}")));
        }
        let sup = shape.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if sup == 0.0 || !sup.is_finite() {
            return Err(Error::Config("shape weights must contain a nonzero entry".into()));
        }
        let shape = shape.iter().map(|s| s / sup).collect();
        Ok(RegressionOperator {
            kind: OperatorKind::NonlinearSaturating { shape, saturation },
            lip,
            basis,
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// The contraction constant `L_Psi < 1`.
    pub fn lip_const(&self) -> f64 {
        self.lip
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            OperatorKind::LinearDiagonal { .. } => "linear_diagonal",
            OperatorKind::NonlinearSaturating { .. } => "nonlinear_saturating",
        }
    }

    /// Apply the operator to a state.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let coeffs: Vec<f64> = self
            .basis
            .functions()
            .iter()
            .map(|e| f.inner_unchecked(e))
            .collect();
        match &self.kind {
            OperatorKind::LinearDiagonal { rho } => {
                let weighted: Vec<f64> = coeffs.iter().zip(rho).map(|(c, r)| c * r).collect();
                self.basis.reconstruct(&weighted).expect("coefficients match basis")
            }
            OperatorKind::NonlinearSaturating { shape, saturation } => {
                let weighted: Vec<f64> = coeffs.iter().zip(shape).map(|(c, s)| c * s).collect();
                let diag = self.basis.reconstruct(&weighted).expect("coefficients match basis");
                let s = *saturation;
                let lip = self.lip;
                let values = diag.values().iter().map(|&v| lip * s * (v / s).tanh()).collect();
                GridFunction::new(Arc::clone(diag.grid()), values).expect("finite squash output")
            }
        }
    }

    /// Upper bound on `lip(Psi(f))` over states with `||f|| <= state_norm`.
    pub fn output_lip_bound(&self, state_norm: f64) -> f64 {
        let weights: &[f64] = match &self.kind {
            OperatorKind::LinearDiagonal { rho } => rho,
            OperatorKind::NonlinearSaturating { shape, .. } => shape,
        };
        let factor = match self.kind {
            OperatorKind::LinearDiagonal { .. } => 1.0,
            OperatorKind::NonlinearSaturating { .. } => self.lip,
        };
        // Cauchy-Schwarz over the coefficient vector: |<f, e_k>| <= ||f||.
        let sq: f64 = weights
            .iter()
            .zip(self.basis.functions())
            .map(|(w, e)| (w * e.lip_seminorm()).powi(2))
            .sum();
        factor * sq.sqrt() * state_norm
    }
}

/// An observed stretch `X_0, ..., X_{n+1}` of the process plus provenance.
#[derive(Debug, Clone)]
pub struct FunctionalSeries {
    items: Vec<GridFunction>,
    seed: u64,
    model_id: String,
    burn_in: usize,
}

impl FunctionalSeries {
    /// Wrap existing states; at least 3 items (`n >= 1`) on a shared grid.
    pub fn from_items(
        items: Vec<GridFunction>,
        seed: u64,
        model_id: impl Into<String>,
        burn_in: usize,
    ) -> Result<Self> {
        if items.len() < 3 {
            return Err(Error::Degenerate(format!(
                "a series needs at least 3 states, got {}",
                items.len()
            )));
        }
        let grid = items[0].grid();
        if !items.iter().all(|f| Arc::ptr_eq(f.grid(), grid) || f.grid() == grid) {
            return Err(Error::Structural("series states live on different grids".into()));
        }
        Ok(FunctionalSeries { items, seed, model_id: model_id.into(), burn_in })
    }

    pub fn items(&self) -> &[GridFunction] {
        &self.items
    }

    pub fn state(&self, t: usize) -> &GridFunction {
        &self.items[t]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The `n` of the sample `X_0, ..., X_{n+1}`.
    pub fn sample_size(&self) -> usize {
        self.items.len() - 2
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.items[0].grid()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
}

/// Simulate `n + 2` states of the FAR(1) process after a burn-in from zero.
///
/// The recorded states are the iterates following `burn_in` discarded
/// steps, so the first state is already close to stationarity whenever
/// `burn_in` dominates `log(1/tolerance) / log(1/L_Psi)`. Deterministic
/// given the seed.
pub fn simulate_far1(
    op: &RegressionOperator,
    innov: &InnovationModel,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<FunctionalSeries> {
    if n < 2 {
        return Err(Error::Config(format!("sample size n must be >= 2, got {n}")));
    }
    if !Arc::ptr_eq(op.basis(), innov.basis()) && op.basis().grid() != innov.grid() {
        return Err(Error::Structural("operator and innovation model use different grids".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GridFunction::zero(innov.grid());
    for _ in 0..burn_in {
        let mut next = op.apply(&state);
        next.axpy(1.0, &innov.draw(&mut rng)?);
        state = next;
    }
    let mut items = Vec::with_capacity(n + 2);
    for _ in 0..(n + 2) {
        let mut next = op.apply(&state);
        next.axpy(1.0, &innov.draw(&mut rng)?);
        state = next;
        items.push(state.clone());
    }
    let model_id = format!("{}/{}", op.name(), innov.law().name());
    FunctionalSeries::from_items(items, seed, model_id, burn_in)
}

/// Rigorous almost-sure bound on `lip(X_t)` for the simulated process,
/// assembled from the model constants at construction time.
pub fn far1_smoothness_bound(op: &RegressionOperator, innov: &InnovationModel) -> f64 {
    let innov_lip = innov.lip_bound();
    match op.kind() {
        OperatorKind::LinearDiagonal { rho } => {
            // Coefficient-wise AR(1) envelope: |<X, e_k>| <= bound_k / (1 - |rho_k|).
            let bounds: Vec<f64> = innov
                .coeff_bounds()
                .iter()
                .zip(rho)
                .map(|(b, r)| b / (1.0 - r.abs()))
                .collect();
            op.basis().lip_bound(&bounds) + innov_lip
        }
        OperatorKind::NonlinearSaturating { .. } => {
            let state_norm = innov.norm_bound() / (1.0 - op.lip_const());
            op.output_lip_bound(state_norm) + innov_lip
        }
    }
}

/// Default experiment model: `rho_k = 0.5 exp(-0.2 (k-1))`,
/// `sigma_k = 0.3 exp(-0.5 (k-1))`, 12 cosine basis functions on a
/// 101-point grid, uniform coefficients, Lipschitz cap 25.
pub fn default_model() -> Result<(RegressionOperator, InnovationModel)> {
    let grid = Grid::equispaced(101)?;
    let basis = Basis::cosine(&grid, 12)?;
    let op = RegressionOperator::linear_exponential(Arc::clone(&basis), 0.5, 0.2)?;
    let innov = InnovationModel::exponential(basis, 0.3, 0.5, CoeffLaw::Uniform, 25.0)?;
    Ok((op, innov))
}
