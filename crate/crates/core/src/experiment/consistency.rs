//! The uniform-consistency trend experiment: the maximal estimation error
//! over a fixed probe set inside the restriction ball, tracked across
//! sample sizes and averaged within seed batches.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::{resolve_exponent, simulate_probes, TAG_CONSISTENCY};
use crate::kernel_regression::{uniform_error, FittedEstimator};
use crate::process_models::simulate_far1;
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRecord {
    pub n: usize,
    pub batch: usize,
    pub seed_index: usize,
    pub uniform_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyBatchMean {
    pub n: usize,
    pub batch: usize,
    pub mean_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub master_seed: u64,
    pub q: f64,
    /// Probes actually used (generated inside the smallest `U(r_n)`).
    pub probes_used: usize,
    pub records: Vec<ConsistencyRecord>,
    pub batch_means: Vec<ConsistencyBatchMean>,
}

impl ConsistencyReport {
    pub fn mean_for(&self, n: usize, batch: usize) -> Option<f64> {
        self.batch_means.iter().find(|m| m.n == n && m.batch == batch).map(|m| m.mean_error)
    }
}

pub fn run_consistency_experiment(
    cfg: &ExperimentConfig,
    master_seed: u64,
) -> Result<ConsistencyReport> {
    cfg.validate()?;
    let (op, innov) = cfg.build_model()?;
    let q = resolve_exponent(cfg, &op, &innov, master_seed)?;
    let probes = simulate_probes(cfg, &op, &innov, master_seed)?;
    let batches = cfg.run.seed_batches;
    let per_batch = cfg.run.batch_size;

    let mut records = Vec::new();
    for &n in &cfg.run.n_list {
        let ec = cfg.estimator_config(n, q)?;
        let cells: Vec<ConsistencyRecord> = (0..batches * per_batch)
            .into_par_iter()
            .map(|idx| -> Result<ConsistencyRecord> {
                let batch = idx / per_batch;
                let seed_index = idx % per_batch;
                let seed = derive_seed(
                    master_seed,
                    &[TAG_CONSISTENCY, n as u64, batch as u64, seed_index as u64],
                );
                let series = simulate_far1(&op, &innov, n, cfg.model.burn_in, seed)?;
                let est = FittedEstimator::fit(&series, &ec)?;
                let err = uniform_error(&est, &op, &probes)?;
                Ok(ConsistencyRecord { n, batch, seed_index, uniform_error: err })
            })
            .collect::<Result<_>>()?;
        records.extend(cells);
    }

    let mut batch_means = Vec::new();
    for &n in &cfg.run.n_list {
        for batch in 0..batches {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.batch == batch)
                .map(|r| r.uniform_error)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            batch_means.push(ConsistencyBatchMean { n, batch, mean_error: mean });
        }
    }
    Ok(ConsistencyReport {
        master_seed,
        q,
        probes_used: probes.len(),
        records,
        batch_means,
    })
}
