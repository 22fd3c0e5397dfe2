//! Experiment configuration: a sectioned key-value file (TOML syntax) with
//! `[model]`, `[estimator]`, `[run]` and `[output]` tables. Every field has
//! a default; unknown keys are rejected so typos surface as parse errors
//! with line and field diagnostics.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{Basis, Grid, GridFunction};
use crate::kernel_regression::{bandwidth_schedule, EstimatorConfig, Kernel};
use crate::process_models::{CoeffLaw, InnovationModel, RegressionOperator};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// "linear_diagonal" or "nonlinear_saturating".
    pub operator: String,
    /// Diagonal weights `rho_k = rho_base exp(-rho_decay (k-1))`.
    pub rho_base: f64,
    pub rho_decay: f64,
    /// Innovation scales `sigma_k = sigma_base exp(-sigma_decay (k-1))`.
    pub sigma_base: f64,
    pub sigma_decay: f64,
    /// Number of cosine basis functions.
    pub basis_size: usize,
    /// Grid resolution (equispaced points on [0, 1]).
    pub grid_points: usize,
    /// Almost-sure cap on the innovation Lipschitz seminorm.
    pub lip_cap: f64,
    /// "uniform" or "truncated_gaussian".
    pub coeff_law: String,
    /// Burn-in steps discarded before recording.
    pub burn_in: usize,
    /// Saturation scale of the nonlinear operator.
    pub saturation: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            operator: "linear_diagonal".into(),
            rho_base: 0.5,
            rho_decay: 0.2,
            sigma_base: 0.3,
            sigma_decay: 0.5,
            basis_size: 12,
            grid_points: 101,
            lip_cap: 25.0,
            coeff_law: "uniform".into(),
            burn_in: 100,
            saturation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    /// "uniform" or "quadratic".
    pub kernel: String,
    /// Bandwidth constants: `h = c_h n^{-1/(q+2)}`, `b = c_b n^{-1/(2(q+2))}`.
    pub c_h: f64,
    pub c_b: f64,
    /// Small-ball exponent override; 0 estimates it from a pilot series.
    pub q_override: f64,
    /// Restriction radius schedule `r_n = r0 + c_r ln(n)`.
    pub r0: f64,
    pub c_r: f64,
    /// Diagnostic neighbor threshold (never alters the estimate).
    pub min_neighbors: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            kernel: "uniform".into(),
            c_h: 1.0,
            c_b: 1.0,
            q_override: 0.0,
            r0: 30.0,
            c_r: 5.0,
            min_neighbors: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// "distribution", "mallows", "consistency" or "all".
    pub kind: String,
    /// Sample sizes, ascending.
    pub n_list: Vec<usize>,
    /// Monte Carlo replications per sample size.
    pub replications: usize,
    /// Bootstrap draws per reference series.
    pub bootstrap_draws: usize,
    /// Master-seed batches for trend experiments.
    pub seed_batches: usize,
    /// Seeds per batch (medians are taken within a batch).
    pub batch_size: usize,
    /// Scale of the smooth bump defining the target point.
    pub target_bump: f64,
    /// Projection directions, e.g. ["e1", "e2", "e1+e2"].
    pub directions: Vec<String>,
    /// Atom cap for the Mallows assignment solve.
    pub mallows_atoms: usize,
    /// Probe-set size for the uniform-consistency experiment.
    pub probe_count: usize,
    /// Reference series per sample size; the first carries the headline
    /// KS, the rest only widen the reported conditioning spread.
    pub reference_series: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: "distribution".into(),
            n_list: vec![100, 200, 400],
            replications: 300,
            bootstrap_draws: 300,
            seed_batches: 10,
            batch_size: 3,
            target_bump: 0.1,
            directions: vec!["e1".into(), "e2".into(), "e1+e2".into()],
            mallows_atoms: 500,
            probe_count: 50,
            reference_series: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory for CSV/JSON artifacts.
    pub dir: String,
    /// Also write the raw per-replication samples.
    pub write_samples: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), write_samples: true }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub estimator: EstimatorSection,
    pub run: RunSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Parse and validate a config file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parse and validate config text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.n_list.is_empty() {
            return Err(Error::Config("run.n_list must be nonempty".into()));
        }
        if !self.run.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("run.n_list must be strictly ascending".into()));
        }
        if self.run.replications < 1 {
            return Err(Error::Config("run.replications must be >= 1".into()));
        }
        if self.run.bootstrap_draws < 1 {
            return Err(Error::Config("run.bootstrap_draws must be >= 1".into()));
        }
        if self.run.seed_batches < 1 || self.run.batch_size < 1 {
            return Err(Error::Config("run.seed_batches and run.batch_size must be >= 1".into()));
        }
        if self.run.reference_series < 1 {
            return Err(Error::Config("run.reference_series must be >= 1".into()));
        }
        if self.run.directions.is_empty() {
            return Err(Error::Config("run.directions must be nonempty".into()));
        }
        if self.run.mallows_atoms < 1 {
            return Err(Error::Config("run.mallows_atoms must be >= 1".into()));
        }
        if !matches!(self.run.kind.as_str(), "distribution" | "mallows" | "consistency" | "all") {
            return Err(Error::Config(format!(
                "run.kind must be distribution | mallows | consistency | all, got {:?}",
                self.run.kind
            )));
        }
        self.kernel()?;
        self.build_model()?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel> {
        match self.estimator.kernel.as_str() {
            "uniform" => Ok(Kernel::Uniform),
            "quadratic" => Ok(Kernel::Quadratic),
            other => Err(Error::Config(format!("unknown kernel {other:?}"))),
        }
    }

    pub fn coeff_law(&self) -> Result<CoeffLaw> {
        match self.model.coeff_law.as_str() {
            "uniform" => Ok(CoeffLaw::Uniform),
            "truncated_gaussian" => Ok(CoeffLaw::TruncatedGaussian),
            other => Err(Error::Config(format!("unknown coefficient law {other:?}"))),
        }
    }

    /// Build the operator and innovation model described by `[model]`.
    pub fn build_model(&self) -> Result<(RegressionOperator, InnovationModel)> {
        let grid = Grid::equispaced(self.model.grid_points)?;
        let basis = Basis::cosine(&grid, self.model.basis_size)?;
        let op = match self.model.operator.as_str() {
            "linear_diagonal" => RegressionOperator::linear_exponential(
                Arc::clone(&basis),
                self.model.rho_base,
                self.model.rho_decay,
            )?,
            "nonlinear_saturating" => {
                let shape: Vec<f64> = (0..self.model.basis_size)
                    .map(|k| (-self.model.rho_decay * k as f64).exp())
                    .collect();
                RegressionOperator::nonlinear_saturating(
                    Arc::clone(&basis),
                    shape,
                    self.model.rho_base.abs(),
                    self.model.saturation,
                )?
            }
            other => return Err(Error::Config(format!("unknown operator kind {other:?}"))),
        };
        let innov = InnovationModel::exponential(
            basis,
            self.model.sigma_base,
            self.model.sigma_decay,
            self.coeff_law()?,
            self.model.lip_cap,
        )?;
        Ok((op, innov))
    }

    /// Restriction radius schedule `r_n = r0 + c_r ln(n)`.
    pub fn restriction_radius(&self, n: usize) -> f64 {
        self.estimator.r0 + self.estimator.c_r * (n as f64).ln()
    }

    /// Estimator configuration at sample size `n` and exponent `q`.
    pub fn estimator_config(&self, n: usize, q: f64) -> Result<EstimatorConfig> {
        let bw = bandwidth_schedule(n, q, self.estimator.c_h, self.estimator.c_b)?;
        if !bw.separated() {
            return Err(Error::Config(format!(
                "bandwidth schedule degenerate at n = {n}: h = {} >= b = {}",
                bw.h, bw.b
            )));
        }
        EstimatorConfig::new(
            self.kernel()?,
            bw.h,
            bw.b,
            self.restriction_radius(n),
            self.estimator.min_neighbors,
        )
    }

    /// The target point `x = Psi(0) + bump`, a small fixed smooth bump on
    /// the first two basis directions, inside `U(r)` for every configured
    /// radius and within the bulk of the stationary law.
    pub fn target_point(&self, op: &RegressionOperator) -> GridFunction {
        let basis = op.basis();
        let zero = GridFunction::zero(basis.grid());
        let mut x = op.apply(&zero);
        let s = self.run.target_bump / 2f64.sqrt();
        x.axpy(s, basis.function(1));
        if basis.len() > 1 {
            x.axpy(s, basis.function(2));
        }
        x
    }

    /// Parse the configured projection directions into unit vectors.
    pub fn direction_vectors(&self, basis: &Basis) -> Result<Vec<(String, GridFunction)>> {
        self.run
            .directions
            .iter()
            .map(|name| Ok((name.clone(), parse_direction(name, basis)?)))
            .collect()
    }
}

/// Parse "e<k>" or "e<i>+e<j>" (the sum is normalized to unit length).
fn parse_direction(name: &str, basis: &Basis) -> Result<GridFunction> {
    let parse_one = |part: &str| -> Result<usize> {
        let k: usize = part
            .strip_prefix('e')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Config(format!("bad direction component {part:?}")))?;
        if k == 0 || k > basis.len() {
            return Err(Error::Config(format!(
                "direction {part:?} outside the basis of size {}",
                basis.len()
            )));
        }
        Ok(k)
    };
    let parts: Vec<&str> = name.split('+').map(str::trim).collect();
    match parts.as_slice() {
        [single] => Ok(basis.function(parse_one(single)?).clone()),
        [a, b] => {
            let (ka, kb) = (parse_one(a)?, parse_one(b)?);
            if ka == kb {
                return Err(Error::Config(format!("direction {name:?} repeats a component")));
            }
            let v = basis.function(ka).add(basis.function(kb));
            Ok(v.scale(1.0 / v.l2_norm()))
        }
        _ => Err(Error::Config(format!("cannot parse direction {name:?}"))),
    }
}
