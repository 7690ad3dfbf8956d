//! Flat wealth tax and redistribution, applied once per Monte Carlo step:
//! every agent pays a fraction λ of its wealth into a pool, then the pool is
//! split equally among all agents (universal) or among the poorest fraction p
//! (targeted).

use serde::Serialize;
use thiserror::Error;

use crate::population::Population;

#[derive(Debug, Error, PartialEq)]
pub enum FiscalConfigError {
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error("targeted fraction p must lie in (0, 1], got {0}")]
    TargetedFractionOutOfRange(f64),
}

/// How the collected pool is handed back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RedistributionMode {
    /// Everyone receives pool / N, irrespective of wealth.
    Universal,
    /// The poorest fraction `p` of agents (at least one) receive equal
    /// shares; `p = 1` reduces to the universal mode exactly.
    Targeted { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiscalPolicy {
    /// Tax rate on wealth per Monte Carlo step.
    pub lambda: f64,
    pub mode: RedistributionMode,
}

impl FiscalPolicy {
    pub fn new(lambda: f64, mode: RedistributionMode) -> Result<Self, FiscalConfigError> {
        let policy = FiscalPolicy { lambda, mode };
        policy.validate()?;
        Ok(policy)
    }

    pub fn none() -> Self {
        FiscalPolicy {
            lambda: 0.0,
            mode: RedistributionMode::Universal,
        }
    }

    pub fn validate(&self) -> Result<(), FiscalConfigError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(FiscalConfigError::LambdaOutOfRange(self.lambda));
        }
        if let RedistributionMode::Targeted { p } = self.mode {
            if !(p > 0.0 && p <= 1.0) {
                return Err(FiscalConfigError::TargetedFractionOutOfRange(p));
            }
        }
        Ok(())
    }
}

/// Recipient count for the targeted mode: k = max(1, floor(p·N)).
///
/// The small epsilon compensates products like 0.3 · 10 that land one ulp
/// under the exact integer.
pub fn recipient_count(p: f64, n: usize) -> usize {
    let k = (p * n as f64 + 1e-9).floor() as usize;
    k.clamp(1, n)
}

/// Scale every wealth by (1 − λ) and return the pool λ · (pre-collection
/// total).
pub fn collect_taxes(pop: &mut Population, lambda: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&lambda));
    let pre_total: f64 = pop.wealth().iter().sum();
    let keep = 1.0 - lambda;
    for w in pop.wealth_mut() {
        *w *= keep;
    }
    lambda * pre_total
}

/// Hand the pool back according to the mode. Universal gives pool/N to
/// every agent. Targeted ranks agents by post-collection wealth (ties broken
/// by index) and gives pool/k to each of the k poorest.
pub fn redistribute(pop: &mut Population, pool: f64, mode: RedistributionMode) {
    debug_assert!(pool >= 0.0);
    let n = pop.len();
    let k = match mode {
        RedistributionMode::Universal => n,
        RedistributionMode::Targeted { p } => recipient_count(p, n),
    };
    let share = pool / k as f64;
    if k == n {
        // Universal, and the exact arithmetic Targeted(p = 1) must reproduce.
        for w in pop.wealth_mut() {
            *w += share;
        }
        return;
    }
    let wealth = pop.wealth_mut();
    let mut order: Vec<usize> = (0..n).collect();
    order.select_nth_unstable_by(k - 1, |&i, &j| {
        wealth[i].total_cmp(&wealth[j]).then(i.cmp(&j))
    });
    for &i in &order[..k] {
        wealth[i] += share;
    }
}

/// One fiscal round: collect, then redistribute. Total wealth is a
/// rearrangement, conserved to rounding.
pub fn fiscal_step(pop: &mut Population, policy: &FiscalPolicy) {
    let pool = collect_taxes(pop, policy.lambda);
    redistribute(pop, pool, policy.mode);
}
