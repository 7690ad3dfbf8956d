//! Replica execution, equilibrium detection, ensemble averaging, and the
//! parameter sweeps over the protection factor f, the tax rate λ, and the
//! targeted-redistribution fraction p.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exchange::{monte_carlo_step, ExchangeConfig, ExchangeConfigError};
use crate::fiscal::{fiscal_step, FiscalConfigError, FiscalPolicy, RedistributionMode};
use crate::metrics::{lorenz_curve_sorted, InequalityReport};
use crate::population::{replica_stream, ConfigError, Population, SimConfig};
use crate::stats::{MetricSummary, OnlineStats};

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
pub const DEFAULT_EQUIL_WINDOW: usize = 1_000;
pub const DEFAULT_EQUIL_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] ConfigError),
    #[error(transparent)]
    Exchange(#[from] ExchangeConfigError),
    #[error(transparent)]
    Fiscal(#[from] FiscalConfigError),
    #[error("max_steps must be positive")]
    ZeroMaxSteps,
    #[error("equil_window must lie in [1, max_steps), got {window} with max_steps {max_steps}")]
    BadWindow { window: usize, max_steps: usize },
    #[error("equil_tol must be positive, got {0}")]
    BadTolerance(f64),
    #[error("metric_stride must lie in [1, equil_window], got {stride} with window {window}")]
    BadStride { stride: usize, window: usize },
    #[error("n_replicas must be at least 1")]
    NoReplicas,
    #[error("parameter grid is empty")]
    EmptyGrid,
}

/// Everything one replica needs: the population setup, the exchange and
/// fiscal rules, and the stopping criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaRun {
    pub sim: SimConfig,
    pub exchange: ExchangeConfig,
    pub fiscal: FiscalPolicy,
    /// Hard cap on the number of Monte Carlo steps.
    pub max_steps: usize,
    /// Length, in Monte Carlo steps, of the stationarity windows.
    pub equil_window: usize,
    /// Relative change between consecutive window-mean Gini values below
    /// which the run counts as equilibrated.
    pub equil_tol: f64,
    /// Sample the metrics every this many steps (1 = every step). Larger
    /// strides thin the window averages without changing the dynamics.
    pub metric_stride: usize,
}

impl ReplicaRun {
    pub fn new(sim: SimConfig, exchange: ExchangeConfig, fiscal: FiscalPolicy) -> Self {
        ReplicaRun {
            sim,
            exchange,
            fiscal,
            max_steps: DEFAULT_MAX_STEPS,
            equil_window: DEFAULT_EQUIL_WINDOW,
            equil_tol: DEFAULT_EQUIL_TOL,
            metric_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sim.validate()?;
        self.exchange.validate()?;
        self.fiscal.validate()?;
        if self.max_steps == 0 {
            return Err(HarnessError::ZeroMaxSteps);
        }
        if self.equil_window == 0 || self.equil_window >= self.max_steps {
            return Err(HarnessError::BadWindow {
                window: self.equil_window,
                max_steps: self.max_steps,
            });
        }
        if self.equil_tol.is_nan() || self.equil_tol <= 0.0 {
            return Err(HarnessError::BadTolerance(self.equil_tol));
        }
        if self.metric_stride == 0 || self.metric_stride > self.equil_window {
            return Err(HarnessError::BadStride {
                stride: self.metric_stride,
                window: self.equil_window,
            });
        }
        Ok(())
    }
}

/// Final state of one replica.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOutcome {
    pub population: Population,
    /// Metrics time-averaged over the final stationarity window.
    pub report: InequalityReport,
    pub steps_used: usize,
    /// False when the run hit `max_steps` without the windowed Gini
    /// settling; the outcome is still returned.
    pub converged: bool,
}

/// Deterministic per-replica seed derived from the master seed, using a
/// SplitMix64 output stage over stride-spaced states. Distinct indices under
/// one master never collide.
pub fn replica_seed(master_seed: u64, replica_index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    splitmix64(master_seed.wrapping_add(replica_index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn average_reports(samples: &[InequalityReport]) -> InequalityReport {
    assert!(!samples.is_empty());
    let n = samples.len() as f64;
    let mut excl = OnlineStats::new();
    let mut gini = 0.0;
    let mut top1 = 0.0;
    let mut top10 = 0.0;
    let mut bottom90 = 0.0;
    let mut zwa = 0.0;
    for r in samples {
        gini += r.gini;
        top1 += r.top_1pct_share;
        top10 += r.top_10pct_share;
        bottom90 += r.bottom_90pct_share;
        zwa += r.zero_wealth_fraction;
        if let Some(g) = r.gini_excl_zwa {
            excl.push(g);
        }
    }
    InequalityReport {
        gini: gini / n,
        gini_excl_zwa: (excl.count() > 0).then(|| excl.mean()),
        top_1pct_share: top1 / n,
        top_10pct_share: top10 / n,
        bottom_90pct_share: bottom90 / n,
        zero_wealth_fraction: zwa / n,
    }
}

/// Run one replica until the windowed Gini goes stationary or `max_steps`
/// is exhausted.
///
/// Each Monte Carlo step is a sweep of N exchanges followed, when λ > 0, by
/// one fiscal round. The metrics are sampled along the way; once the mean
/// Gini over the latest `equil_window` steps differs from the previous
/// window's mean by at most `equil_tol` relative, the run stops and the
/// report is the time average over that final window.
pub fn run_to_equilibrium(run: &ReplicaRun) -> Result<EquilibriumOutcome, HarnessError> {
    run.validate()?;
    let mut rng = replica_stream(run.sim.seed);
    let mut pop = Population::init_with_rng(&run.sim, &mut rng)?;
    let threshold = run.sim.zero_wealth_threshold;
    let apply_fiscal = run.fiscal.lambda > 0.0;

    let mut sorted_scratch: Vec<f64> = Vec::with_capacity(pop.len());
    let mut window: Vec<InequalityReport> = Vec::new();
    let mut previous_window_gini: Option<f64> = None;
    let mut converged = false;
    let mut steps_used = 0;

    for step in 1..=run.max_steps {
        monte_carlo_step(&mut pop, &run.exchange, &mut rng);
        if apply_fiscal {
            fiscal_step(&mut pop, &run.fiscal);
        }
        steps_used = step;

        if step % run.metric_stride == 0 {
            sorted_scratch.clear();
            sorted_scratch.extend_from_slice(pop.wealth());
            sorted_scratch.sort_unstable_by(f64::total_cmp);
            let sample = InequalityReport::from_sorted(&sorted_scratch, threshold)
                .expect("conservative dynamics keep total wealth positive");
            window.push(sample);
        }

        if step % run.equil_window == 0 && !window.is_empty() {
            let current = window.iter().map(|r| r.gini).sum::<f64>() / window.len() as f64;
            if let Some(previous) = previous_window_gini {
                if (current - previous).abs() <= run.equil_tol * previous.abs() {
                    converged = true;
                }
            }
            if converged || step == run.max_steps {
                break;
            }
            previous_window_gini = Some(current);
            window.clear();
        }
    }

    // A max_steps that is not a multiple of the window leaves a partial
    // window here; average whatever the final window holds.
    let report = average_reports(&window);
    Ok(EquilibriumOutcome {
        population: pop,
        report,
        steps_used,
        converged,
    })
}

/// Ensemble statistics across replicas at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub n_replicas: usize,
    pub converged_fraction: f64,
    pub mean_steps: f64,
    pub gini: MetricSummary,
    pub gini_excl_zwa: MetricSummary,
    pub zero_wealth_fraction: MetricSummary,
    pub top_1pct_share: MetricSummary,
    pub top_10pct_share: MetricSummary,
    pub bottom_90pct_share: MetricSummary,
    /// Replica-averaged Lorenz curve of the final populations, as
    /// (population fraction, mean wealth fraction) points.
    pub mean_lorenz: Vec<(f64, f64)>,
}

struct ReplicaOutcome {
    report: InequalityReport,
    converged: bool,
    steps_used: usize,
    lorenz: Vec<(f64, f64)>,
}

/// Run `n_replicas` independent replicas of `template`, seeding replica i
/// from `(master_seed, i)`, and aggregate their final reports.
///
/// Replicas run in parallel on the current rayon pool; aggregation happens
/// afterwards in replica order, so the result is bit-identical whatever the
/// worker count or scheduling.
pub fn run_ensemble(
    template: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<EnsembleResult, HarnessError> {
    if n_replicas == 0 {
        return Err(HarnessError::NoReplicas);
    }
    template.validate()?;

    let outcomes: Vec<ReplicaOutcome> = (0..n_replicas)
        .into_par_iter()
        .map(|i| -> Result<ReplicaOutcome, HarnessError> {
            let mut run = *template;
            run.sim.seed = replica_seed(master_seed, i as u64);
            let outcome = run_to_equilibrium(&run)?;
            let mut sorted = outcome.population.wealth().to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            let lorenz = lorenz_curve_sorted(&sorted)
                .expect("final population keeps positive total wealth")
                .points()
                .to_vec();
            Ok(ReplicaOutcome {
                report: outcome.report,
                converged: outcome.converged,
                steps_used: outcome.steps_used,
                lorenz,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut gini = OnlineStats::new();
    let mut gini_excl = OnlineStats::new();
    let mut zwa = OnlineStats::new();
    let mut top1 = OnlineStats::new();
    let mut top10 = OnlineStats::new();
    let mut bottom90 = OnlineStats::new();
    let mut converged_count = 0usize;
    let mut steps_total = 0usize;
    let mut lorenz_sum = vec![0.0f64; outcomes[0].lorenz.len()];

    for outcome in &outcomes {
        gini.push(outcome.report.gini);
        if let Some(g) = outcome.report.gini_excl_zwa {
            gini_excl.push(g);
        }
        zwa.push(outcome.report.zero_wealth_fraction);
        top1.push(outcome.report.top_1pct_share);
        top10.push(outcome.report.top_10pct_share);
        bottom90.push(outcome.report.bottom_90pct_share);
        converged_count += outcome.converged as usize;
        steps_total += outcome.steps_used;
        for (acc, &(_, l)) in lorenz_sum.iter_mut().zip(&outcome.lorenz) {
            *acc += l;
        }
    }

    let mean_lorenz = outcomes[0]
        .lorenz
        .iter()
        .zip(&lorenz_sum)
        .map(|(&(f, _), &sum)| (f, sum / n_replicas as f64))
        .collect();

    Ok(EnsembleResult {
        n_replicas,
        converged_fraction: converged_count as f64 / n_replicas as f64,
        mean_steps: steps_total as f64 / n_replicas as f64,
        gini: gini.summary(),
        gini_excl_zwa: gini_excl.summary(),
        zero_wealth_fraction: zwa.summary(),
        top_1pct_share: top1.summary(),
        top_10pct_share: top10.summary(),
        bottom_90pct_share: bottom90.summary(),
        mean_lorenz,
    })
}

/// Ensemble results along a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Names of the swept parameters, one per entry of each row's `params`.
    pub param_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub ensemble: EnsembleResult,
}

/// Sweep the social protection factor. Every cell reuses the same master
/// seed, so cells share their replica random streams; differences between
/// adjacent cells are then parameter effects, not sampling noise.
pub fn sweep_f(
    f_values: &[f64],
    base: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<SweepResult, HarnessError> {
    if f_values.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(f_values.len());
    for &f in f_values {
        let mut run = *base;
        run.exchange = ExchangeConfig::new(base.exchange.rule, f)?;
        let ensemble = run_ensemble(&run, n_replicas, master_seed)?;
        rows.push(SweepRow {
            params: vec![f],
            ensemble,
        });
    }
    Ok(SweepResult {
        param_names: vec!["f".into()],
        rows,
    })
}

/// Sweep the tax rate, keeping the base run's redistribution mode.
pub fn sweep_lambda(
    lambda_values: &[f64],
    base: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<SweepResult, HarnessError> {
    if lambda_values.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(lambda_values.len());
    for &lambda in lambda_values {
        let mut run = *base;
        run.fiscal = FiscalPolicy::new(lambda, base.fiscal.mode)?;
        let ensemble = run_ensemble(&run, n_replicas, master_seed)?;
        rows.push(SweepRow {
            params: vec![lambda],
            ensemble,
        });
    }
    Ok(SweepResult {
        param_names: vec!["lambda".into()],
        rows,
    })
}

/// Grid over (λ, p) with targeted redistribution, row-major in λ.
pub fn grid_lambda_p(
    lambda_values: &[f64],
    p_values: &[f64],
    base: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<SweepResult, HarnessError> {
    if lambda_values.is_empty() || p_values.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(lambda_values.len() * p_values.len());
    for &lambda in lambda_values {
        for &p in p_values {
            let mut run = *base;
            run.fiscal = FiscalPolicy::new(lambda, RedistributionMode::Targeted { p })?;
            let ensemble = run_ensemble(&run, n_replicas, master_seed)?;
            rows.push(SweepRow {
                params: vec![lambda, p],
                ensemble,
            });
        }
    }
    Ok(SweepResult {
        param_names: vec!["lambda".into(), "p".into()],
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PStarResult {
    /// Grid point minimizing the mean equilibrium Gini; ties go to the
    /// smallest p.
    pub p_star: f64,
    pub gini_at_p_star: MetricSummary,
    /// The evaluated p-grid, sorted ascending.
    pub sweep: SweepResult,
}

/// Evaluate the targeted fraction grid at one tax rate and locate the
/// Gini-minimizing p.
pub fn find_p_star(
    lambda: f64,
    p_grid: &[f64],
    base: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<PStarResult, HarnessError> {
    if p_grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut grid = p_grid.to_vec();
    grid.sort_unstable_by(f64::total_cmp);
    grid.dedup();
    let sweep = grid_lambda_p(&[lambda], &grid, base, n_replicas, master_seed)?;

    let mut best: Option<(f64, MetricSummary)> = None;
    for row in &sweep.rows {
        let candidate = (row.params[1], row.ensemble.gini);
        match &best {
            Some((_, incumbent)) if candidate.1.mean >= incumbent.mean => {}
            _ => best = Some(candidate),
        }
    }
    let (p_star, gini_at_p_star) = best.expect("grid is non-empty");
    Ok(PStarResult {
        p_star,
        gini_at_p_star,
        sweep,
    })
}

/// Coarse logarithmic grid over (10⁻³, 1] for the p* search.
pub fn default_p_star_grid() -> Vec<f64> {
    vec![
        0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0,
    ]
}

/// Two-phase p* search: the coarse logarithmic grid, then a linear
/// refinement between the neighbors of the coarse minimum.
pub fn find_p_star_adaptive(
    lambda: f64,
    base: &ReplicaRun,
    n_replicas: usize,
    master_seed: u64,
) -> Result<PStarResult, HarnessError> {
    let coarse_grid = default_p_star_grid();
    let coarse = find_p_star(lambda, &coarse_grid, base, n_replicas, master_seed)?;

    let idx = coarse_grid
        .iter()
        .position(|&p| p == coarse.p_star)
        .expect("p_star comes from the grid");
    let lo = if idx == 0 {
        coarse_grid[0]
    } else {
        coarse_grid[idx - 1]
    };
    let hi = if idx + 1 == coarse_grid.len() {
        coarse_grid[idx]
    } else {
        coarse_grid[idx + 1]
    };

    let refine_points = 5usize;
    let mut grid = coarse_grid;
    for i in 1..=refine_points {
        let p = lo + (hi - lo) * i as f64 / (refine_points + 1) as f64;
        if p > 0.0 && p <= 1.0 {
            grid.push(p);
        }
    }
    find_p_star(lambda, &grid, base, n_replicas, master_seed)
}
