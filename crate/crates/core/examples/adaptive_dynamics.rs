//! Trace how group-level application preferences evolve under the adaptive
//! strategy, for a few compliance levels under local parity.
//!
//!     cargo run --release --example adaptive_dynamics [scale]

use parity_market::engine::run_trial_with;
use parity_market::model::{MarketConfig, PolicyKind, StrategyKind};
use parity_market::presets::scaled;

pub fn run_example(scale: f64) -> Result<(), Box<dyn std::error::Error>> {
    let base = MarketConfig {
        compliant_policy: PolicyKind::LocalParity,
        ..MarketConfig::for_strategy(StrategyKind::AdaptivePreference)
    };
    for k in [5, 10, 15, 25] {
        let cfg = scaled(&MarketConfig { n_compliant: k, ..base.clone() }, scale)?;
        let mut trace = Vec::new();
        let res = run_trial_with(&cfg, 0, |rec| {
            if rec.step_index % 50 == 0 {
                trace.push(format!("{:.2}/{:.2}", rec.p_compliant[0], rec.p_compliant[1]));
            }
        });
        println!(
            "k={:>2}/{}  pA/pB every 50 rounds: {}  | trend over last 50: {:+.1e} {:+.1e}",
            cfg.n_compliant,
            cfg.n_employers,
            trace.join(" "),
            res.p_trend[0],
            res.p_trend[1]
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    run_example(scale)
}
