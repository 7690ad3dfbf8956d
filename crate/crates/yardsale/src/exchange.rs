//! Pairwise exchange dynamics: pair selection, winner determination through
//! the social-protection probability, and wealth transfer under the fair
//! (yard-sale) or loser rule.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::Population;

/// Below this, wealth is flushed to exactly zero after a losing transfer.
///
/// The flush sits 293 orders of magnitude under the zero-wealth threshold and
/// far above the subnormal range, so no metric can see it, while condensation
/// runs avoid subnormal arithmetic in the hot loop. Under the fair rule a
/// zero-wealth agent stakes nothing and can never trade again, which is the
/// same absorbing state the untruncated dynamics approach.
pub const WEALTH_FLUSH_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum ExchangeConfigError {
    #[error("protection_f must lie in [0, 0.5], got {0}")]
    ProtectionOutOfRange(f64),
}

/// Which transfer rule decides the exchanged amount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeRule {
    /// dw is the minimum of the two stakes; identical whoever wins.
    Fair,
    /// dw is the loser's stake.
    Loser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeConfig {
    pub rule: ExchangeRule,
    /// Social protection factor f in [0, 1/2] biasing wins toward the
    /// poorer agent of each pair.
    pub protection_f: f64,
}

impl ExchangeConfig {
    pub fn new(rule: ExchangeRule, protection_f: f64) -> Result<Self, ExchangeConfigError> {
        let cfg = ExchangeConfig { rule, protection_f };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExchangeConfigError> {
        if !(0.0..=0.5).contains(&self.protection_f) {
            return Err(ExchangeConfigError::ProtectionOutOfRange(self.protection_f));
        }
        Ok(())
    }
}

/// Result of a single exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeOutcome {
    pub winner: usize,
    pub loser: usize,
    /// Transferred amount; never exceeds the loser's pre-exchange wealth.
    pub amount: f64,
}

/// Aggregate over one Monte Carlo step (a sweep of N exchanges).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub exchanges: usize,
    /// Sum of the transferred amounts over the sweep.
    pub total_transferred: f64,
}

/// Probability that the poorer member of a pair wins the exchange:
///
/// p = 1/2 + f · |w_a − w_b| / (w_a + w_b)
///
/// Symmetric in its wealth arguments and confined to [1/2, 1/2 + f]. A pair
/// with both wealths zero is degenerate; p is defined as 1/2 there,
/// continuously with the equal-wealth case.
pub fn protection_probability(w_a: f64, w_b: f64, f: f64) -> f64 {
    debug_assert!(w_a >= 0.0 && w_b >= 0.0);
    debug_assert!((0.0..=0.5).contains(&f));
    let total = w_a + w_b;
    if total <= 0.0 {
        return 0.5;
    }
    0.5 + f * (w_a - w_b).abs() / total
}

/// Amount transferred from loser to winner. Each agent stakes (1 − β)·w.
///
/// Fair takes the smaller stake, so the amount is the same regardless of who
/// wins; Loser takes the loser's stake. Either way the amount cannot exceed
/// the loser's wealth, so wealth stays non-negative.
pub fn transfer_amount(rule: ExchangeRule, winner: (f64, f64), loser: (f64, f64)) -> f64 {
    let loser_stake = (1.0 - loser.1) * loser.0;
    match rule {
        ExchangeRule::Fair => loser_stake.min((1.0 - winner.1) * winner.0),
        ExchangeRule::Loser => loser_stake,
    }
}

/// Precomputed samplers for drawing an ordered pair of distinct agents.
/// Indices fit u32 comfortably, which keeps the draws on the generator's
/// native word size.
struct PairSampler {
    first: Uniform<u32>,
    // Second index drawn over n-1 values and shifted past the first.
    second: Uniform<u32>,
}

impl PairSampler {
    fn new(n: usize) -> PairSampler {
        assert!(n >= 2, "pair sampling needs at least two agents");
        assert!(n <= u32::MAX as usize);
        PairSampler {
            first: Uniform::new(0, n as u32),
            second: Uniform::new(0, n as u32 - 1),
        }
    }

    #[inline]
    fn sample(&self, rng: &mut impl Rng) -> (usize, usize) {
        let a = self.first.sample(rng);
        let mut b = self.second.sample(rng);
        b += (b >= a) as u32;
        (a as usize, b as usize)
    }
}

/// One exchange shared by `exchange_step` and `monte_carlo_step` so both
/// consume the stream identically: the pair draw, then exactly one uniform
/// variate for winner selection.
///
/// The arithmetic mirrors `protection_probability` and `transfer_amount`
/// term for term; the hot loop just keeps its branches predictable.
#[inline]
fn exchange_once(
    pop: &mut Population,
    cfg: &ExchangeConfig,
    rng: &mut impl Rng,
    pairs: &PairSampler,
) -> ExchangeOutcome {
    let (a, b) = pairs.sample(rng);
    let (wealth, risk) = pop.wealth_mut_and_risk();
    // One up-front check in place of one per access below.
    assert!(a < wealth.len() && b < wealth.len());
    let risk = &risk[..wealth.len()];
    let (w_a, w_b) = (wealth[a], wealth[b]);
    let u: f64 = rng.gen();

    let total = w_a + w_b;
    let p = if cfg.protection_f > 0.0 && total > 0.0 {
        0.5 + cfg.protection_f * (w_a - w_b).abs() / total
    } else {
        // Either no protection or a degenerate all-zero pair; equal odds.
        0.5
    };
    debug_assert_eq!(p, protection_probability(w_a, w_b, cfg.protection_f));

    // Equal wealths give p = 1/2 exactly, so labeling the first draw as the
    // poorer side breaks the tie without bias. The winner is b exactly when
    // b's poverty status agrees with the poorer side winning.
    let b_is_poorer = w_b < w_a;
    let winner_is_b = b_is_poorer == (u < p);

    let stake_a = (1.0 - risk[a]) * w_a;
    let stake_b = (1.0 - risk[b]) * w_b;
    let dw = match cfg.rule {
        ExchangeRule::Fair => stake_a.min(stake_b),
        ExchangeRule::Loser => {
            if winner_is_b {
                stake_a
            } else {
                stake_b
            }
        }
    };

    let (winner, loser, w_winner, w_loser) = if winner_is_b {
        (b, a, w_b, w_a)
    } else {
        (a, b, w_a, w_b)
    };
    let drained = w_loser - dw;
    wealth[winner] = w_winner + dw;
    wealth[loser] = if drained < WEALTH_FLUSH_FLOOR {
        0.0
    } else {
        drained
    };

    ExchangeOutcome {
        winner,
        loser,
        amount: dw,
    }
}

/// Perform a single exchange between two distinct agents drawn uniformly at
/// random. The poorer agent wins with the protection probability; the
/// transfer amount follows the configured rule. Total wealth is untouched.
pub fn exchange_step(
    pop: &mut Population,
    cfg: &ExchangeConfig,
    rng: &mut impl Rng,
) -> ExchangeOutcome {
    let pairs = PairSampler::new(pop.len());
    exchange_once(pop, cfg, rng, &pairs)
}

/// One Monte Carlo step: exactly N sequential exchanges (pairs drawn with
/// replacement across the sweep), so each agent takes part twice on average.
pub fn monte_carlo_step(
    pop: &mut Population,
    cfg: &ExchangeConfig,
    rng: &mut impl Rng,
) -> StepSummary {
    let n = pop.len();
    let pairs = PairSampler::new(n);
    let mut total_transferred = 0.0;
    for _ in 0..n {
        let outcome = exchange_once(pop, cfg, rng, &pairs);
        total_transferred += outcome.amount;
    }
    StepSummary {
        exchanges: n,
        total_transferred,
    }
}
