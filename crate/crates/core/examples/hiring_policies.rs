//! One applicant pool, three hiring rules.
//!
//!     cargo run --release --example hiring_policies

use parity_market::model::{Applicant, ApplicantId, Group, MarketConfig, PolicyKind};
use parity_market::policy::{select_hires, target_fraction_b};
use parity_market::sampling::{sample_score, Generator};

pub fn run_example(reps: u32) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MarketConfig::default();
    let mut gen = Generator::derive(2024, &[0]);
    // A pool that over-represents group B relative to the population.
    let pool: Vec<Applicant> = (0..200u64)
        .map(|i| {
            let group = if i < 130 { Group::A } else { Group::B };
            Applicant {
                id: ApplicantId(i),
                group,
                score: sample_score(&mut gen, group, &cfg),
                rounds_waiting: 0,
            }
        })
        .collect();

    for policy in [PolicyKind::Generic, PolicyKind::LocalParity, PolicyKind::GlobalParity] {
        let mut b_hires = 0u64;
        for r in 0..reps {
            let mut g = Generator::derive(7, &[r.into()]);
            b_hires += select_hires(&mut g, policy, &pool, cfg.spots, &cfg).hired_by_group.b;
        }
        let target = if policy.is_parity() {
            let counts = select_hires(&mut Generator::derive(0, &[]), policy, &pool, cfg.spots, &cfg).pool_by_group;
            format!("{:.2}", target_fraction_b(policy, counts, &cfg))
        } else {
            "-".into()
        };
        println!(
            "{:<8} target B share {:>5}  mean B hires per round {:.3} of {}",
            policy.name(),
            target,
            b_hires as f64 / f64::from(reps),
            cfg.spots
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    run_example(reps)
}
