//! Agent state: wealth and risk-aversion vectors, initialization, and
//! conservation bookkeeping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Wealth below this is counted as zero when classifying zero-wealth agents.
pub const DEFAULT_ZERO_WEALTH_THRESHOLD: f64 = 1e-7;

/// Relative tolerance for the cached-total vs recomputed-sum check.
pub const TOTAL_WEALTH_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("n_agents must be at least 2, got {0}")]
    TooFewAgents(usize),
    #[error("zero_wealth_threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("wealth and risk_aversion lengths differ: {wealth} vs {risk_aversion}")]
    LengthMismatch { wealth: usize, risk_aversion: usize },
    #[error("wealth[{index}] is negative: {value}")]
    NegativeWealth { index: usize, value: f64 },
    #[error("risk_aversion[{index}] = {value} outside [0, 1]")]
    RiskAversionOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Error)]
#[error(
    "cached total {cached} disagrees with recomputed sum {recomputed} beyond relative {rel_tol}"
)]
pub struct ConservationError {
    pub cached: f64,
    pub recomputed: f64,
    pub rel_tol: f64,
}

/// Configuration for one replica: population size, RNG seed, and the
/// zero-wealth classification threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_agents: usize,
    pub seed: u64,
    pub zero_wealth_threshold: f64,
}

impl SimConfig {
    pub fn new(n_agents: usize, seed: u64) -> Self {
        SimConfig {
            n_agents,
            seed,
            zero_wealth_threshold: DEFAULT_ZERO_WEALTH_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_agents < 2 {
            return Err(ConfigError::TooFewAgents(self.n_agents));
        }
        if self.zero_wealth_threshold.is_nan() || self.zero_wealth_threshold <= 0.0 {
            return Err(ConfigError::NonPositiveThreshold(
                self.zero_wealth_threshold,
            ));
        }
        Ok(())
    }
}

/// A population of agents, each with a wealth and a fixed risk-aversion
/// factor. Wealth evolves through exchanges and taxation; risk aversion is
/// immutable after construction.
///
/// The total wealth is cached at construction. All dynamics are transfers,
/// so the cached value stays authoritative; [`Population::verify_total`]
/// recomputes the sum and checks agreement.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    wealth: Vec<f64>,
    risk_aversion: Vec<f64>,
    total_wealth: f64,
}

/// Build the random stream a replica draws from: initialization first, then
/// the exchange dynamics, all from one seeded generator.
pub fn replica_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl Population {
    /// Initialize wealth and risk aversion uniformly on [0, 1) from a fresh
    /// stream seeded by `config.seed`. Same seed, same population, bit for
    /// bit.
    pub fn init(config: &SimConfig) -> Result<Population, ConfigError> {
        let mut rng = replica_stream(config.seed);
        Population::init_with_rng(config, &mut rng)
    }

    /// Like [`Population::init`] but drawing from a caller-owned stream, so
    /// the same generator can continue into the dynamics. All N wealth
    /// values are drawn first, then all N risk aversions.
    pub fn init_with_rng(
        config: &SimConfig,
        rng: &mut impl Rng,
    ) -> Result<Population, ConfigError> {
        config.validate()?;
        let n = config.n_agents;
        let wealth: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let risk_aversion: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total_wealth = wealth.iter().sum();
        Ok(Population {
            wealth,
            risk_aversion,
            total_wealth,
        })
    }

    /// Construct from explicit vectors, validating the invariants.
    pub fn from_vectors(
        wealth: Vec<f64>,
        risk_aversion: Vec<f64>,
    ) -> Result<Population, ConfigError> {
        if wealth.len() != risk_aversion.len() {
            return Err(ConfigError::LengthMismatch {
                wealth: wealth.len(),
                risk_aversion: risk_aversion.len(),
            });
        }
        if wealth.len() < 2 {
            return Err(ConfigError::TooFewAgents(wealth.len()));
        }
        for (i, &w) in wealth.iter().enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(ConfigError::NegativeWealth { index: i, value: w });
            }
        }
        for (i, &b) in risk_aversion.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return Err(ConfigError::RiskAversionOutOfRange { index: i, value: b });
            }
        }
        let total_wealth = wealth.iter().sum();
        Ok(Population {
            wealth,
            risk_aversion,
            total_wealth,
        })
    }

    pub fn len(&self) -> usize {
        self.wealth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wealth.is_empty()
    }

    pub fn wealth(&self) -> &[f64] {
        &self.wealth
    }

    pub fn risk_aversion(&self) -> &[f64] {
        &self.risk_aversion
    }

    /// Cached total wealth.
    pub fn total_wealth(&self) -> f64 {
        self.total_wealth
    }

    /// Fresh sum over the wealth vector.
    pub fn recomputed_total(&self) -> f64 {
        self.wealth.iter().sum()
    }

    /// Verification mode of the total: recompute the sum and check it against
    /// the cache within `TOTAL_WEALTH_REL_TOL` relative.
    pub fn verify_total(&self) -> Result<f64, ConservationError> {
        let recomputed = self.recomputed_total();
        let scale = self
            .total_wealth
            .abs()
            .max(recomputed.abs())
            .max(f64::MIN_POSITIVE);
        if (recomputed - self.total_wealth).abs() <= TOTAL_WEALTH_REL_TOL * scale {
            Ok(self.total_wealth)
        } else {
            Err(ConservationError {
                cached: self.total_wealth,
                recomputed,
                rel_tol: TOTAL_WEALTH_REL_TOL,
            })
        }
    }

    /// Mutable access for the transfer operations in this crate. Exchanges
    /// and fiscal steps conserve the total, so the cache is left untouched.
    pub(crate) fn wealth_mut(&mut self) -> &mut [f64] {
        &mut self.wealth
    }

    /// Split borrow for the exchange kernel: mutable wealth alongside the
    /// immutable risk aversions.
    pub(crate) fn wealth_mut_and_risk(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.wealth, &self.risk_aversion)
    }
}
