//! What a per-sector audit sees at equilibrium: equal acceptance rates
//! across sectors even though the sectors receive very different applicants.
//!
//!     cargo run --release --example audit_divergence [scale]

use parity_market::engine::run_trial;
use parity_market::metrics::WindowSummary;
use parity_market::model::{Group, MarketConfig, PolicyKind, Sector, StrategyKind};
use parity_market::presets::scaled;

pub fn run_example(scale: f64) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = scaled(
        &MarketConfig {
            compliant_policy: PolicyKind::GlobalParity,
            n_compliant: 25,
            ..MarketConfig::for_strategy(StrategyKind::AdaptivePreference)
        },
        scale,
    )?;
    let res = run_trial(&cfg, 0);
    let s = WindowSummary::from_window(&res.window, cfg.compliant_share());
    for g in Group::ALL {
        let c = s.rate(g, Sector::Compliant).unwrap_or(f64::NAN);
        let n = s.rate(g, Sector::NonCompliant).unwrap_or(f64::NAN);
        println!("group {g}: hire rate compliant {c:.4}  non-compliant {n:.4}  gap {:.4}", (c - n).abs());
    }
    println!(
        "share of group B applying to compliant employers: {:.3} (no preference would give {:.3})",
        s.mean_p_compliant(Group::B),
        s.reference_p_compliant
    );
    println!(
        "group B share of hires: compliant {:.3}, non-compliant {:.3}",
        s.b_share(Sector::Compliant).unwrap_or(f64::NAN),
        s.b_share(Sector::NonCompliant).unwrap_or(f64::NAN)
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    run_example(scale)
}
