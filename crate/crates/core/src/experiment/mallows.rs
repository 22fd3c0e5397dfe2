//! The Mallows convergence experiment: how far the resampled bootstrap
//! innovations are, in `d_2`, from fresh draws of the true innovation law.
//!
//! For each sample size and seed, the pool of centered residuals is built
//! from a simulated series, `N` innovations are resampled from it, and the
//! exact `d_2` to an equal-size sample of fresh true innovations is
//! computed by optimal assignment (`N` capped for the cubic solve).
//! Within-batch medians feed the trend check across sample sizes.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::ar_bootstrap::{extract_residuals, resample_indices};
use crate::distances::{mallows_distance, EmpiricalLaw};
use crate::error::Result;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::{
    median, resolve_exponent, TAG_MALLOWS_BOOT, TAG_MALLOWS_FRESH, TAG_MALLOWS_SERIES,
};
use crate::function_space::GridFunction;
use crate::kernel_regression::FittedEstimator;
use crate::process_models::simulate_far1;
use crate::seeds::{derive_rng, derive_seed};

#[derive(Debug, Clone, Serialize)]
pub struct MallowsRecord {
    pub n: usize,
    pub batch: usize,
    pub seed_index: usize,
    /// Atoms per side of the assignment solve.
    pub atoms: usize,
    pub d2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MallowsBatchMedian {
    pub n: usize,
    pub batch: usize,
    pub median_d2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MallowsReport {
    pub master_seed: u64,
    pub q: f64,
    pub records: Vec<MallowsRecord>,
    pub medians: Vec<MallowsBatchMedian>,
}

impl MallowsReport {
    pub fn median_for(&self, n: usize, batch: usize) -> Option<f64> {
        self.medians.iter().find(|m| m.n == n && m.batch == batch).map(|m| m.median_d2)
    }
}

pub fn run_mallows_experiment(cfg: &ExperimentConfig, master_seed: u64) -> Result<MallowsReport> {
    cfg.validate()?;
    let (op, innov) = cfg.build_model()?;
    let q = resolve_exponent(cfg, &op, &innov, master_seed)?;
    let batches = cfg.run.seed_batches;
    let per_batch = cfg.run.batch_size;

    let mut records = Vec::new();
    for &n in &cfg.run.n_list {
        let ec = cfg.estimator_config(n, q)?;
        let atoms = n.min(cfg.run.mallows_atoms);
        let cells: Vec<MallowsRecord> = (0..batches * per_batch)
            .into_par_iter()
            .map(|idx| -> Result<MallowsRecord> {
                let batch = idx / per_batch;
                let seed_index = idx % per_batch;
                let path = [TAG_MALLOWS_SERIES, n as u64, batch as u64, seed_index as u64];
                let series =
                    simulate_far1(&op, &innov, n, cfg.model.burn_in, derive_seed(master_seed, &path))?;
                let est_b = FittedEstimator::fit_oversmoothed(&series, &ec)?;
                let pool = Arc::new(extract_residuals(&series, &est_b)?);

                let mut boot_rng = derive_rng(
                    master_seed,
                    &[TAG_MALLOWS_BOOT, n as u64, batch as u64, seed_index as u64],
                );
                let boot_atoms: Vec<GridFunction> = resample_indices(&pool, atoms, &mut boot_rng)
                    .into_iter()
                    .map(|t| pool.residual_for(t).cloned())
                    .collect::<Result<_>>()?;

                let mut fresh_rng = derive_rng(
                    master_seed,
                    &[TAG_MALLOWS_FRESH, n as u64, batch as u64, seed_index as u64],
                );
                let fresh_atoms: Vec<GridFunction> =
                    (0..atoms).map(|_| innov.draw(&mut fresh_rng)).collect::<Result<_>>()?;

                let d2 = mallows_distance(
                    &EmpiricalLaw::from_functions(fresh_atoms)?,
                    &EmpiricalLaw::from_functions(boot_atoms)?,
                    2.0,
                )?
                .cost;
                Ok(MallowsRecord { n, batch, seed_index, atoms, d2 })
            })
            .collect::<Result<_>>()?;
        records.extend(cells);
    }

    let mut medians = Vec::new();
    for &n in &cfg.run.n_list {
        for batch in 0..batches {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.batch == batch)
                .map(|r| r.d2)
                .collect();
            medians.push(MallowsBatchMedian { n, batch, median_d2: median(&vals) });
        }
    }
    Ok(MallowsReport { master_seed, q, records, medians })
}
