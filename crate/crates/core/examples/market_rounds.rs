//! Step a single market by hand and inspect each round's bookkeeping.
//!
//!     cargo run --release --example market_rounds

use parity_market::engine::{step, trial_streams, MarketState};
use parity_market::model::{Group, MarketConfig, PolicyKind, Sector, StrategyKind};

pub fn run_example(rounds: u64) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MarketConfig {
        n_compliant: 20,
        compliant_policy: PolicyKind::LocalParity,
        ..MarketConfig::for_strategy(StrategyKind::AdaptivePreference)
    };
    let streams = trial_streams(&cfg, 0);
    let mut state = MarketState::new(&cfg, 0);
    println!("{:>4} {:>6} {:>6} {:>6} {:>6} {:>7} {:>7} {:>7}", "step", "pool", "enter", "hired", "evict", "pA", "pB", "ok");
    for _ in 0..rounds {
        let before = state.pool.len();
        let rec = step(&mut state, &cfg, &streams);
        println!(
            "{:>4} {:>6} {:>6} {:>6} {:>6} {:>7.4} {:>7.4} {:>7}",
            rec.step_index,
            before,
            rec.entrants.total(),
            rec.hires().total(),
            rec.evictions.total(),
            rec.p_compliant[0],
            rec.p_compliant[1],
            rec.conserves()
        );
        if !rec.conserves() {
            return Err(format!("bookkeeping broke at step {}", rec.step_index).into());
        }
        if rec.step_index + 1 == rounds {
            for g in Group::ALL {
                println!(
                    "last round, group {g}: compliant {}/{} non-compliant {}/{}",
                    rec.acceptance.hires(g, Sector::Compliant),
                    rec.acceptance.applications(g, Sector::Compliant),
                    rec.acceptance.hires(g, Sector::NonCompliant),
                    rec.acceptance.applications(g, Sector::NonCompliant)
                );
            }
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rounds = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(25);
    run_example(rounds)
}
