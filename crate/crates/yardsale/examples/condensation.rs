//! Watch an unregulated fair-rule economy condense: Gini, zero-wealth
//! fraction, and per-sweep trade volume on a doubling time grid, as CSV on
//! stdout.
//!
//!   cargo run --release --example condensation -- [seed] [max_steps]

use yardsale::population::replica_stream;
use yardsale::{
    monte_carlo_step, ExchangeConfig, ExchangeRule, InequalityReport, Population, SimConfig,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let max_steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);

    let sim = SimConfig::new(1_000, seed);
    let cfg = ExchangeConfig::new(ExchangeRule::Fair, 0.0).unwrap();
    let mut rng = replica_stream(sim.seed);
    let mut pop = Population::init_with_rng(&sim, &mut rng).unwrap();

    println!("step,gini,zero_wealth_fraction,top_1pct_share,volume_per_sweep");
    let mut checkpoint = 1usize;
    let mut volume = 0.0;
    for step in 1..=max_steps {
        volume = monte_carlo_step(&mut pop, &cfg, &mut rng).total_transferred;
        if step == checkpoint || step == max_steps {
            let report =
                InequalityReport::from_wealth(pop.wealth(), sim.zero_wealth_threshold).unwrap();
            println!(
                "{step},{},{},{},{}",
                report.gini, report.zero_wealth_fraction, report.top_1pct_share, volume
            );
            checkpoint *= 2;
        }
    }
    let report = InequalityReport::from_wealth(pop.wealth(), sim.zero_wealth_threshold).unwrap();
    eprintln!(
        "final: gini {:.6}, zwa {:.4}, volume {volume:.3e}",
        report.gini, report.zero_wealth_fraction
    );
}
