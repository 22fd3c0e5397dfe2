//! Seeded Monte Carlo experiments validating the estimator and the
//! bootstrap at desk scale, plus their CSV/JSON reporting surface.
//!
//! Every experiment is a pure function of `(config, master seed)`: all
//! randomness flows through [`crate::seeds::derive_rng`] streams keyed by
//! the task's position in the experiment tree, so reports are reproducible
//! byte-for-byte across runs and thread counts.

pub mod config;
pub mod consistency;
pub mod distribution;
pub mod io;
pub mod mallows;
pub mod mds;

pub use config::ExperimentConfig;
pub use consistency::{run_consistency_experiment, ConsistencyReport};
pub use distribution::{run_distribution_experiment, DistributionReport};
pub use mallows::{run_mallows_experiment, MallowsReport};
pub use mds::{run_mds_tailbound_check, MdsReport};

use crate::error::Result;
use crate::function_space::GridFunction;
use crate::kernel_regression::estimate_small_ball_exponent;
use crate::process_models::{simulate_far1, InnovationModel, RegressionOperator};
use crate::seeds::derive_seed;

// Stream tags keying the per-task seed paths.
pub(crate) const TAG_PILOT: u64 = 0;
pub(crate) const TAG_MC: u64 = 1;
pub(crate) const TAG_REF: u64 = 2;
pub(crate) const TAG_DRAW: u64 = 3;
pub(crate) const TAG_MALLOWS_SERIES: u64 = 4;
pub(crate) const TAG_MALLOWS_BOOT: u64 = 5;
pub(crate) const TAG_MALLOWS_FRESH: u64 = 6;
pub(crate) const TAG_CONSISTENCY: u64 = 7;
pub(crate) const TAG_PROBE: u64 = 8;
pub(crate) const TAG_MDS: u64 = 9;

/// Resolve the effective small-ball exponent: the configured override when
/// positive, otherwise a pilot-series estimate at the largest sample size.
pub fn resolve_exponent(
    cfg: &ExperimentConfig,
    op: &RegressionOperator,
    innov: &InnovationModel,
    master_seed: u64,
) -> Result<f64> {
    if cfg.estimator.q_override > 0.0 {
        return Ok(cfg.estimator.q_override);
    }
    let n_max = *cfg.run.n_list.last().expect("validated nonempty");
    let seed = derive_seed(master_seed, &[TAG_PILOT]);
    let pilot = simulate_far1(op, innov, n_max, cfg.model.burn_in, seed)?;
    let x = cfg.target_point(op);
    estimate_small_ball_exponent(&pilot, &x)
}

/// Simulate a decorrelated probe set inside `U(r)` for the consistency
/// experiment: every third state of a dedicated series, restricted to the
/// smallest configured restriction ball.
pub fn simulate_probes(
    cfg: &ExperimentConfig,
    op: &RegressionOperator,
    innov: &InnovationModel,
    master_seed: u64,
) -> Result<Vec<GridFunction>> {
    let want = cfg.run.probe_count.max(1);
    let seed = derive_seed(master_seed, &[TAG_PROBE]);
    let series = simulate_far1(op, innov, 3 * want + 2, cfg.model.burn_in, seed)?;
    let r_min = cfg.restriction_radius(cfg.run.n_list[0]);
    let class = crate::function_space::SmoothClass::new(r_min)?;
    Ok(series
        .items()
        .iter()
        .step_by(3)
        .filter(|f| f.in_class(&class))
        .take(want)
        .cloned()
        .collect())
}

/// Median of a nonempty slice (averaging the middle pair for even sizes).
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Sample mean and variance (unbiased denominator).
pub(crate) fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
