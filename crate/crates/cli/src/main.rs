//! `farboot`: simulate smooth functional AR(1) series, fit the functional
//! Nadaraya-Watson estimator, run the autoregression bootstrap, and drive
//! the seeded validation experiments.
//!
//! Exit codes: 0 success, 1 failed checks or internal errors, 2 malformed
//! configuration, 3 numerical degeneracy.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use farboot_core::ar_bootstrap::{extract_residuals, generate_pseudo_series};
use farboot_core::error::Error;
use farboot_core::experiment::io::{
    write_consistency_report, write_distribution_report, write_draw, write_mallows_report,
    write_predictions_csv, write_series_csv, PredictionRow,
};
use farboot_core::experiment::{
    config::ExperimentConfig, run_consistency_experiment, run_distribution_experiment,
    run_mallows_experiment, run_mds_tailbound_check, simulate_probes,
};
use farboot_core::function_space::{Grid, GridFunction, SmoothClass};
use farboot_core::kernel_regression::{
    estimate_small_ball_exponent, limit_moments, EstimatorConfig, FittedEstimator, Kernel,
};
use farboot_core::process_models::simulate_far1;
use farboot_core::seeds::derive_seed;

#[derive(Parser)]
#[command(name = "farboot", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (TOML sections [model]/[estimator]/[run]/[output]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every output is a pure function of (config, seed).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (defaults to the config's output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = auto).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a FAR(1) series and write it as a CSV matrix.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Sample size override (defaults to the first entry of run.n_list).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the estimator on a series and dump predictions.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Ingest an existing series CSV instead of simulating one.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Sample size override for the simulated series.
        #[arg(long)]
        n: Option<usize>,
        /// Multiply both bandwidths by this factor.
        #[arg(long, default_value_t = 1.0)]
        bandwidth_scale: f64,
    },
    /// Generate bootstrap pseudo-series (CSV matrix + JSON sidecar each).
    Bootstrap {
        #[command(flatten)]
        common: Common,
        /// Sample size override.
        #[arg(long)]
        n: Option<usize>,
        /// Number of draws (defaults to run.bootstrap_draws).
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Run the experiment(s) selected by run.kind and write reports.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Run the lemma property suites and print one pass/fail line each.
    Check {
        /// Trials for the martingale tail-bound check.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Structural(_) => ExitCode::from(2),
                Error::Numerical(_) | Error::Degenerate(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    match &common.config {
        Some(path) => ExperimentConfig::from_path(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { common, n } => {
            let cfg = load_config(&common)?;
            init_threads(common.threads);
            let (op, innov) = cfg.build_model()?;
            let n = n.unwrap_or(cfg.run.n_list[0]);
            let series = simulate_far1(&op, &innov, n, cfg.model.burn_in, common.seed)?;
            let dir = out_dir(&common, &cfg);
            let path = dir.join("series.csv");
            write_series_csv(&path, &series)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate { common, series, n, bandwidth_scale } => {
            let cfg = load_config(&common)?;
            init_threads(common.threads);
            if !(bandwidth_scale > 0.0) {
                return Err(Error::Config(format!(
                    "bandwidth scale must be positive, got {bandwidth_scale}"
                )));
            }
            let (op, innov) = cfg.build_model()?;
            let series = match series {
                Some(path) => {
                    let ingested = farboot_core::experiment::io::read_series_csv(&path)?;
                    if ingested.grid().len() != cfg.model.grid_points {
                        return Err(Error::Config(format!(
                            "ingested series has {} grid points, config expects {}",
                            ingested.grid().len(),
                            cfg.model.grid_points
                        )));
                    }
                    ingested
                }
                None => {
                    let n = n.unwrap_or(cfg.run.n_list[0]);
                    simulate_far1(&op, &innov, n, cfg.model.burn_in, common.seed)?
                }
            };
            let x = cfg.target_point(&op);
            let q = if cfg.estimator.q_override > 0.0 {
                cfg.estimator.q_override
            } else {
                estimate_small_ball_exponent(&series, &x)?
            };
            let base = cfg.estimator_config(series.sample_size(), q)?;
            let ec = EstimatorConfig::new(
                base.kernel,
                base.h * bandwidth_scale,
                base.b * bandwidth_scale,
                base.r_n,
                base.min_neighbors,
            )?;
            let est = FittedEstimator::fit(&series, &ec)?;
            let mut targets = vec![("target".to_string(), x)];
            for (i, probe) in simulate_probes(&cfg, &op, &innov, common.seed)?
                .into_iter()
                .enumerate()
            {
                targets.push((format!("probe{i:03}"), probe));
            }
            let predictions: Vec<_> = targets.iter().map(|(_, t)| est.predict(t)).collect();
            let rows: Vec<PredictionRow> = targets
                .iter()
                .zip(&predictions)
                .map(|((id, _), p)| PredictionRow { target_id: id.clone(), prediction: p })
                .collect();
            let dir = out_dir(&common, &cfg);
            let path = dir.join("predictions.csv");
            write_predictions_csv(&path, &rows)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bootstrap { common, n, draws } => {
            let cfg = load_config(&common)?;
            init_threads(common.threads);
            let (op, innov) = cfg.build_model()?;
            let n = n.unwrap_or(cfg.run.n_list[0]);
            let draws = draws.unwrap_or(cfg.run.bootstrap_draws);
            let series_seed = derive_seed(common.seed, &[100]);
            let series = simulate_far1(&op, &innov, n, cfg.model.burn_in, series_seed)?;
            let x = cfg.target_point(&op);
            let q = if cfg.estimator.q_override > 0.0 {
                cfg.estimator.q_override
            } else {
                estimate_small_ball_exponent(&series, &x)?
            };
            let ec = cfg.estimator_config(n, q)?;
            let est_b = FittedEstimator::fit_oversmoothed(&series, &ec)?;
            let pool = Arc::new(extract_residuals(&series, &est_b)?);
            let dir = out_dir(&common, &cfg);
            write_series_csv(&dir.join("series.csv"), &series)?;
            for d in 0..draws {
                let seed = derive_seed(common.seed, &[101, d as u64]);
                let draw = generate_pseudo_series(&pool, &est_b, None, seed)?;
                let (csv, json) = write_draw(&dir, &format!("draw_{d:03}"), &draw)?;
                println!("wrote {} and {}", csv.display(), json.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { common } => {
            let cfg = load_config(&common)?;
            init_threads(common.threads);
            let dir = out_dir(&common, &cfg);
            let kind = cfg.run.kind.as_str();
            let mut written = Vec::new();
            if kind == "distribution" || kind == "all" {
                let report = run_distribution_experiment(&cfg, common.seed)?;
                written.extend(write_distribution_report(&dir, &report, cfg.output.write_samples)?);
            }
            if kind == "mallows" || kind == "all" {
                let report = run_mallows_experiment(&cfg, common.seed)?;
                written.extend(write_mallows_report(&dir, &report)?);
            }
            if kind == "consistency" || kind == "all" {
                let report = run_consistency_experiment(&cfg, common.seed)?;
                written.extend(write_consistency_report(&dir, &report)?);
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { trials, seed } => run_checks(trials, seed),
    }
}

/// The lemma property suites behind `farboot check`.
fn run_checks(trials: usize, seed: u64) -> Result<ExitCode, Error> {
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{} {name} - {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // Kernel limit moments against closed forms.
    {
        let uniform = limit_moments(Kernel::Uniform, |u| u, 4)?;
        let mut ok = (1..=4).all(|j| uniform.mj(j) == 1.0);
        let mut worst = 0.0f64;
        for q in [1.0, 2.0, 3.0] {
            let m = limit_moments(Kernel::Uniform, |u: f64| u.powf(q), 1)?;
            worst = worst.max((m.m0 - q / (q + 1.0)).abs());
        }
        let quad = limit_moments(Kernel::Quadratic, |u| u, 1)?;
        worst = worst.max((quad.mj(1) - 5.0 / 6.0).abs());
        ok &= worst < 1e-8;
        report("moment-quadrature", ok, format!("max closed-form error {worst:.2e}"));
    }

    // Sup-norm interpolation bound: random sweep plus the extremal family.
    {
        use rand::Rng;
        let mut rng = farboot_core::seeds::derive_rng(seed, &[1]);
        let grid = Grid::equispaced(101)?;
        let mut ok = true;
        let mut max_excess = 0.0f64;
        for _ in 0..1000 {
            let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = GridFunction::new(grid.clone(), values)?;
            let (lhs, rhs) = f.sup_norm_bound_check();
            max_excess = max_excess.max(lhs - rhs);
            ok &= lhs <= rhs + 1e-9;
        }
        let fine = Grid::equispaced(2001)?;
        let mut cone_gap = 0.0f64;
        for (lip, r) in [(1.0, 0.5), (2.0, 0.25), (0.5, 0.8)] {
            let f = GridFunction::from_fn(&fine, |u| lip * (r - u).max(0.0));
            let (lhs, rhs) = f.sup_norm_bound_check();
            cone_gap = cone_gap.max((lhs - rhs).abs());
        }
        ok &= cone_gap < 1e-6;
        report(
            "sup-norm-bound",
            ok,
            format!("sweep excess {max_excess:.2e}, cone equality gap {cone_gap:.2e}"),
        );
    }

    // Covering growth shape on a dyadic epsilon grid.
    {
        let class = SmoothClass::new(1.0)?;
        let counts: Vec<f64> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&eps| farboot_core::function_space::greedy_cover(&class, eps, 500, seed).map(|c| c as f64))
            .collect::<Result<_, _>>()?;
        let monotone = counts[0] <= counts[1] && counts[1] <= counts[2];
        let s1 = (counts[1].ln() - counts[0].ln()) / 2.5;
        let s2 = (counts[2].ln() - counts[1].ln()) / 5.0;
        let ok = monotone && s2 <= s1 * 1.25 + 1e-9;
        report("covering-growth", ok, format!("greedy counts {counts:?}"));
    }

    // Martingale difference tail bound.
    {
        let mds = run_mds_tailbound_check(trials, 100, 1.0, 1.0, seed)?;
        report(
            "mds-tail-bound",
            mds.violations == 0,
            format!("max tail/bound ratio {:.3} over {} grid points", mds.max_ratio, mds.points.len()),
        );
    }

    // Residual centering identity on a simulated sample.
    {
        let cfg = ExperimentConfig::default();
        let (op, innov) = cfg.build_model()?;
        let series = simulate_far1(&op, &innov, 150, cfg.model.burn_in, derive_seed(seed, &[2]))?;
        let ec = cfg.estimator_config(150, 4.0)?;
        let est_b = FittedEstimator::fit_oversmoothed(&series, &ec)?;
        let pool = extract_residuals(&series, &est_b)?;
        let mut total = GridFunction::zero(series.grid());
        for e in pool.residuals() {
            total.axpy(1.0, e);
        }
        let norm = total.l2_norm();
        report("residual-centering", norm <= 1e-10, format!("|sum eps'| = {norm:.2e}"));
    }

    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
