//! Group composition of hires in each sector once applicants adapt.
//!
//!     cargo run --release --example segregation [scale]

use parity_market::experiment::{aggregate, run_sweep, SweepSpec};
use parity_market::model::{MarketConfig, PolicyKind, StrategyKind};
use parity_market::presets::scaled;

pub fn run_example(scale: f64, trials: u32) -> Result<(), Box<dyn std::error::Error>> {
    for strategy in [StrategyKind::StaticPreference, StrategyKind::AdaptivePreference] {
        for policy in [PolicyKind::GlobalParity, PolicyKind::LocalParity] {
            let base = scaled(
                &MarketConfig {
                    compliant_policy: policy,
                    ..MarketConfig::for_strategy(strategy)
                },
                scale,
            )?;
            let n = base.n_employers;
            let levels = vec![0, n / 5, 2 * n / 5, 3 * n / 5, 4 * n / 5, n];
            let rows = run_sweep(&SweepSpec::new(base).with_levels(levels).with_trials(trials), 1)?;
            let cells: Vec<String> = aggregate(&rows)
                .iter()
                .map(|a| {
                    let f = |c| a.mean(c).map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
                    format!("{:>3}%: {}/{}", a.n_compliant * 100 / n, f("b_share_hires_compliant"), f("b_share_hires_noncompliant"))
                })
                .collect();
            println!("{:<8} {:<6} B share compliant/non-compliant  {}", strategy.name(), policy.name(), cells.join("  "));
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.4);
    run_example(scale, 3)
}
