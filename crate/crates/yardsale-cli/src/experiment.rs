//! Translate a resolved manifest into harness calls.

use yardsale::{
    find_p_star, find_p_star_adaptive, grid_lambda_p, run_ensemble, sweep_f, sweep_lambda,
    ExchangeConfig, FiscalPolicy, HarnessError, MetricSummary, ReplicaRun, SimConfig, SweepResult,
    SweepRow,
};

use crate::manifest::{Experiment, ManifestError, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub result: SweepResult,
    /// Present for the p-star experiment.
    pub p_star: Option<(f64, MetricSummary)>,
}

pub fn base_run(manifest: &RunManifest) -> Result<ReplicaRun, HarnessError> {
    let mut sim = SimConfig::new(manifest.n, manifest.seed);
    sim.zero_wealth_threshold = manifest.zwa_threshold;
    let exchange = ExchangeConfig::new(manifest.rule, manifest.f)?;
    let fiscal = FiscalPolicy::new(manifest.lambda, manifest.redistribution_mode())?;
    let mut run = ReplicaRun::new(sim, exchange, fiscal);
    run.max_steps = manifest.max_steps;
    run.equil_window = manifest.equil_window;
    run.equil_tol = manifest.equil_tol;
    run.metric_stride = manifest.metric_stride;
    run.validate()?;
    Ok(run)
}

/// Run the manifest's experiment on the current rayon pool.
pub fn execute(manifest: &RunManifest) -> Result<ExperimentOutput, ExperimentError> {
    let base = base_run(manifest)?;
    let replicas = manifest.replicas;
    let seed = manifest.seed;

    let output = match manifest.experiment {
        Experiment::SingleRun => {
            let ensemble = run_ensemble(&base, replicas, seed)?;
            ExperimentOutput {
                result: SweepResult {
                    param_names: vec![],
                    rows: vec![SweepRow {
                        params: vec![],
                        ensemble,
                    }],
                },
                p_star: None,
            }
        }
        Experiment::SweepF => {
            let grid = manifest.f_grid()?;
            ExperimentOutput {
                result: sweep_f(&grid, &base, replicas, seed)?,
                p_star: None,
            }
        }
        Experiment::SweepLambda => {
            let grid = manifest.lambda_grid()?;
            ExperimentOutput {
                result: sweep_lambda(&grid, &base, replicas, seed)?,
                p_star: None,
            }
        }
        Experiment::GridLambdaP => {
            let lambdas = manifest.lambda_grid()?;
            let ps = manifest
                .p_values
                .clone()
                .unwrap_or_else(yardsale::default_p_star_grid);
            ExperimentOutput {
                result: grid_lambda_p(&lambdas, &ps, &base, replicas, seed)?,
                p_star: None,
            }
        }
        Experiment::PStar => {
            let found = match &manifest.p_values {
                Some(grid) => find_p_star(manifest.lambda, grid, &base, replicas, seed)?,
                None => find_p_star_adaptive(manifest.lambda, &base, replicas, seed)?,
            };
            ExperimentOutput {
                result: found.sweep,
                p_star: Some((found.p_star, found.gini_at_p_star)),
            }
        }
    };
    Ok(output)
}
