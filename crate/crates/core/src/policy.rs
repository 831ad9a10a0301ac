//! Employer-side hiring rules.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::{Applicant, ApplicantId, Group, GroupCounts, MarketConfig, PolicyKind};
use crate::sampling::Generator;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HiringOutcome {
    pub hired: Vec<ApplicantId>,
    pub hired_by_group: GroupCounts,
    /// Applicants received this round.
    pub pool_by_group: GroupCounts,
}

/// Share of hires a parity employer aims to give group B.
pub fn target_fraction_b(policy: PolicyKind, pool_by_group: GroupCounts, cfg: &MarketConfig) -> f64 {
    match policy {
        PolicyKind::LocalParity => {
            let total = pool_by_group.total();
            if total == 0 {
                0.0
            } else {
                pool_by_group.b as f64 / total as f64
            }
        }
        PolicyKind::GlobalParity => cfg.fraction_b,
        PolicyKind::Generic => panic!("target_fraction_b called for a generic employer"),
    }
}

/// Higher score first; ties by ascending id.
fn rank(x: &Applicant, y: &Applicant) -> Ordering {
    y.score.total_cmp(&x.score).then(x.id.cmp(&y.id))
}

/// The best `n` of `xs` in rank order.
fn top(mut xs: Vec<Applicant>, n: usize) -> Vec<Applicant> {
    if xs.len() > n && n > 0 {
        xs.select_nth_unstable_by(n - 1, rank);
        xs.truncate(n);
    } else if n == 0 {
        xs.clear();
    }
    xs.sort_unstable_by(rank);
    xs
}

/// Runs one employer's hiring round over the applicants it received.
///
/// Generic employers take the top scores. Parity employers fill each slot by
/// a Bernoulli draw for group B at the policy's target share, taking the best
/// remaining member of the drawn group, or of the other group once the drawn
/// one is exhausted. Generic hiring consumes no variates.
pub fn select_hires(
    gen: &mut Generator,
    policy: PolicyKind,
    pool: &[Applicant],
    spots: u32,
    cfg: &MarketConfig,
) -> HiringOutcome {
    let spots = spots as usize;
    let mut pool_by_group = GroupCounts::default();
    for a in pool {
        pool_by_group.add(a.group, 1);
    }

    let hired: Vec<Applicant> = match policy {
        PolicyKind::Generic => top(pool.to_vec(), spots),
        PolicyKind::LocalParity | PolicyKind::GlobalParity => {
            let p = target_fraction_b(policy, pool_by_group, cfg);
            let (b, a): (Vec<Applicant>, Vec<Applicant>) = pool.iter().partition(|x| x.group == Group::B);
            let best_a = top(a, spots);
            let best_b = top(b, spots);
            let (mut ia, mut ib) = (0usize, 0usize);
            let mut out = Vec::with_capacity(spots.min(pool.len()));
            while out.len() < spots && (ia < best_a.len() || ib < best_b.len()) {
                let want_b = gen.bernoulli(p);
                let take_b = if want_b { ib < best_b.len() } else { ia >= best_a.len() };
                if take_b {
                    out.push(best_b[ib]);
                    ib += 1;
                } else {
                    out.push(best_a[ia]);
                    ia += 1;
                }
            }
            out
        }
    };

    let mut hired_by_group = GroupCounts::default();
    for a in &hired {
        hired_by_group.add(a.group, 1);
    }
    HiringOutcome {
        hired: hired.iter().map(|a| a.id).collect(),
        hired_by_group,
        pool_by_group,
    }
}
