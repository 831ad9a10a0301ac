//! Disparate impact of a market where nobody enforces parity.
//!
//!     cargo run --release --example baseline_disparate_impact [scale]

use parity_market::engine::run_trial;
use parity_market::metrics::WindowSummary;
use parity_market::model::MarketConfig;
use parity_market::presets::scaled;

pub fn run_example(scale: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let cfg = scaled(
        &MarketConfig {
            n_compliant: 0,
            ..MarketConfig::default()
        },
        scale,
    )?;
    let mut dis = Vec::new();
    for trial in 0..cfg.trials {
        let res = run_trial(&cfg, u64::from(trial));
        let s = WindowSummary::from_window(&res.window, cfg.compliant_share());
        let di = s.di.ok_or("no group A hires")?;
        println!(
            "trial {trial}: DI {di:.4}  (hired A {} of {}, B {} of {})",
            s.hires_by_group_by_sector[0][1], s.entrants_by_group.a, s.hires_by_group_by_sector[1][1], s.entrants_by_group.b
        );
        dis.push(di);
    }
    let mean = dis.iter().sum::<f64>() / dis.len() as f64;
    println!("mean disparate impact over {} trials: {mean:.4}", dis.len());
    Ok(mean)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    run_example(scale).map(|_| ())
}
