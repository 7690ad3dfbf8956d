//! Conservative pairwise wealth exchange among N agents, Monte Carlo style.
//!
//! Agents trade under the fair (yard-sale) or loser rule, optionally biased
//! toward the poorer partner by a social-protection factor, and optionally
//! subjected to a flat wealth tax redistributed universally or to the
//! poorest fraction of the population. The crate bundles the exchange
//! engine, the inequality metrics used to observe it (Gini index, Lorenz
//! curves, wealth shares, zero-wealth fractions), and a seeded ensemble
//! harness for parameter sweeps.
//!
//! Everything is deterministic: a master seed plus a configuration fully
//! determines every replica, whatever the worker count.
//!
//! ```
//! use yardsale::{
//!     ExchangeConfig, ExchangeRule, FiscalPolicy, ReplicaRun, SimConfig,
//!     run_to_equilibrium,
//! };
//!
//! let mut run = ReplicaRun::new(
//!     SimConfig::new(300, 42),
//!     ExchangeConfig::new(ExchangeRule::Fair, 0.3)?,
//!     FiscalPolicy::none(),
//! );
//! run.max_steps = 5_000;
//! run.equil_window = 500;
//!
//! let outcome = run_to_equilibrium(&run)?;
//! assert!(outcome.report.gini > 0.0 && outcome.report.gini < 1.0);
//! # Ok::<(), yardsale::HarnessError>(())
//! ```
//!
//! The companion guide under `book/` walks through the model and the
//! experiment surface; its code listings double as doc-tests.

pub mod exchange;
pub mod fiscal;
pub mod harness;
pub mod metrics;
pub mod population;
pub mod stats;

mod book;

pub use exchange::{
    exchange_step, monte_carlo_step, protection_probability, transfer_amount, ExchangeConfig,
    ExchangeOutcome, ExchangeRule, StepSummary,
};
pub use fiscal::{collect_taxes, fiscal_step, redistribute, FiscalPolicy, RedistributionMode};
pub use harness::{
    default_p_star_grid, find_p_star, find_p_star_adaptive, grid_lambda_p, replica_seed,
    run_ensemble, run_to_equilibrium, sweep_f, sweep_lambda, EnsembleResult, EquilibriumOutcome,
    HarnessError, PStarResult, ReplicaRun, SweepResult, SweepRow,
};
pub use metrics::{
    bottom_share, gini, gini_excluding_zwa, lorenz_curve, top_share, zero_wealth_fraction,
    InequalityReport, LorenzCurve,
};
pub use population::{ConfigError, Population, SimConfig, DEFAULT_ZERO_WEALTH_THRESHOLD};
pub use stats::{MetricSummary, OnlineStats};
