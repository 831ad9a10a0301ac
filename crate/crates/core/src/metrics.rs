//! Measurement-window statistics.
//!
//! Hiring probability per group uses the entrant cohort as denominator:
//! window hires of a group over window entrants of that group. Acceptance
//! rates per (group, sector) use applications as denominator.

use serde::{Deserialize, Serialize};

use crate::engine::RoundRecord;
use crate::model::{Group, GroupCounts, Sector};
use crate::strategy::RoundAcceptance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub di: Option<f64>,
    /// Indexed `[group][sector]`.
    pub hires_by_group_by_sector: [[u64; 2]; 2],
    pub applications_by_group_by_sector: [[u64; 2]; 2],
    pub entrants_by_group: GroupCounts,
    /// Indexed by sector.
    pub b_share_of_hires_by_sector: [Option<f64>; 2],
    pub acceptance_rate_by_group_by_sector: [[Option<f64>; 2]; 2],
    pub mean_p_compliant_by_group: [f64; 2],
    /// p_compliant with no preference: the compliant employer share.
    pub reference_p_compliant: f64,
    /// Mean number of applicants per round.
    pub pool_size_mean: f64,
    pub rounds: usize,
}

impl WindowSummary {
    /// Summarizes a measurement window. `reference_p_compliant` is the
    /// compliant employer share of the scenario.
    pub fn from_window(window: &[RoundRecord], reference_p_compliant: f64) -> Self {
        let acc = totals(window);
        let (_, mean_p) = equilibrium_probabilities(window, reference_p_compliant);
        let pool_size_mean = if window.is_empty() {
            0.0
        } else {
            window.iter().map(|r| r.applicants() as f64).sum::<f64>() / window.len() as f64
        };
        Self {
            di: disparate_impact(window),
            hires_by_group_by_sector: acc.hires,
            applications_by_group_by_sector: acc.applications,
            entrants_by_group: entrants(window),
            b_share_of_hires_by_sector: composition_by_sector(window),
            acceptance_rate_by_group_by_sector: hire_rates(window),
            mean_p_compliant_by_group: mean_p,
            reference_p_compliant,
            pool_size_mean,
            rounds: window.len(),
        }
    }

    pub fn rate(&self, g: Group, s: Sector) -> Option<f64> {
        self.acceptance_rate_by_group_by_sector[g.index()][s.index()]
    }

    pub fn b_share(&self, s: Sector) -> Option<f64> {
        self.b_share_of_hires_by_sector[s.index()]
    }

    pub fn mean_p_compliant(&self, g: Group) -> f64 {
        self.mean_p_compliant_by_group[g.index()]
    }
}

fn totals(window: &[RoundRecord]) -> RoundAcceptance {
    let mut acc = RoundAcceptance::default();
    for r in window {
        acc.add_assign(&r.acceptance);
    }
    acc
}

fn entrants(window: &[RoundRecord]) -> GroupCounts {
    let mut e = GroupCounts::default();
    for r in window {
        e += r.entrants;
    }
    e
}

/// Disparate impact from window totals of hires and entrants per group.
pub fn disparate_impact_from_counts(hires: GroupCounts, entrants: GroupCounts) -> Option<f64> {
    if entrants.a == 0 || entrants.b == 0 || hires.a == 0 {
        return None;
    }
    let pb = hires.b as f64 / entrants.b as f64;
    let pa = hires.a as f64 / entrants.a as f64;
    Some(pb / pa)
}

/// P(hired | B) / P(hired | A) over the window; `None` when undefined.
pub fn disparate_impact(window: &[RoundRecord]) -> Option<f64> {
    let mut hires = GroupCounts::default();
    for r in window {
        hires += r.hires();
    }
    disparate_impact_from_counts(hires, entrants(window))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("degenerate baseline: disparate impact {0} is not below 1")]
pub struct DegenerateBaseline(pub String);

/// Rescales `di` so the baseline maps to 0 and parity to 1. Not clamped.
pub fn scaled_benefit(di: f64, di_baseline: f64) -> Result<f64, DegenerateBaseline> {
    // Written negated so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(di_baseline < 1.0) {
        return Err(DegenerateBaseline(di_baseline.to_string()));
    }
    Ok((di - di_baseline) / (1.0 - di_baseline))
}

/// Group-B share of hires per sector; `None` for sectors that hired nobody.
pub fn composition_by_sector(window: &[RoundRecord]) -> [Option<f64>; 2] {
    let acc = totals(window);
    Sector::ALL.map(|s| {
        let b = acc.hires(Group::B, s);
        let total = b + acc.hires(Group::A, s);
        (total > 0).then(|| b as f64 / total as f64)
    })
}

/// Hires over applications per `[group][sector]`; `None` for empty cells.
pub fn hire_rates(window: &[RoundRecord]) -> [[Option<f64>; 2]; 2] {
    let acc = totals(window);
    Group::ALL.map(|g| Sector::ALL.map(|s| acc.rate(g, s)))
}

/// Mean per-round p_compliant per group, with the no-preference reference.
pub fn equilibrium_probabilities(window: &[RoundRecord], reference: f64) -> (f64, [f64; 2]) {
    let n = window.len() as f64;
    let mean = [0, 1].map(|g| {
        if window.is_empty() {
            f64::NAN
        } else {
            window.iter().map(|r| r.p_compliant[g]).sum::<f64>() / n
        }
    });
    (reference, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_trial, RoundRecord};
    use crate::model::{MarketConfig, StrategyKind};
    use proptest::prelude::*;

    fn record(hires: [[u64; 2]; 2], apps: [[u64; 2]; 2], entrants: GroupCounts, p: [f64; 2]) -> RoundRecord {
        RoundRecord {
            step_index: 0,
            outcomes: Vec::new(),
            acceptance: RoundAcceptance { applications: apps, hires },
            entrants,
            evictions: GroupCounts::default(),
            pool_before: GroupCounts::default(),
            pool_after: GroupCounts::default(),
            p_compliant: p,
        }
    }

    fn simple(hires_a: u64, hires_b: u64, ent_a: u64, ent_b: u64) -> RoundRecord {
        record(
            [[0, hires_a], [0, hires_b]],
            [[0, ent_a], [0, ent_b]],
            GroupCounts::new(ent_a, ent_b),
            [0.0, 0.0],
        )
    }

    #[test]
    fn di_symmetric_is_one() {
        assert_eq!(disparate_impact(&[simple(40, 10, 400, 100)]), Some(1.0));
    }

    #[test]
    fn di_zero_b_hires() {
        assert_eq!(disparate_impact(&[simple(40, 0, 400, 100)]), Some(0.0));
    }

    #[test]
    fn di_arithmetic() {
        let di = disparate_impact(&[simple(400, 100, 937, 313)]).unwrap();
        let oracle = (100.0 / 313.0) / (400.0 / 937.0);
        assert!((di - oracle).abs() < 1e-15);
        assert!((di - 0.7484).abs() < 1e-4);
    }

    #[test]
    fn di_undefined_without_a_hires() {
        assert_eq!(disparate_impact(&[simple(0, 10, 400, 100)]), None);
        assert_eq!(disparate_impact(&[simple(10, 10, 0, 100)]), None);
        assert_eq!(disparate_impact(&[]), None);
    }

    #[test]
    fn scaled_benefit_anchors() {
        assert_eq!(scaled_benefit(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(scaled_benefit(1.0, 0.62).unwrap(), 1.0);
        assert_eq!(scaled_benefit(0.875, 0.75).unwrap(), 0.5);
        assert!(scaled_benefit(1.1, 0.75).unwrap() > 1.0);
        assert!(scaled_benefit(0.9, 1.0).is_err());
        assert!(scaled_benefit(0.9, f64::NAN).is_err());
    }

    #[test]
    fn composition_cases() {
        let r = record([[75, 10], [25, 0]], [[100, 100], [100, 100]], GroupCounts::default(), [0.0; 2]);
        let c = composition_by_sector(&[r]);
        assert_eq!(c, [Some(0.25), Some(0.0)]);
        let empty = record([[0, 10], [0, 2]], [[0, 100], [0, 100]], GroupCounts::default(), [0.0; 2]);
        assert_eq!(composition_by_sector(&[empty])[0], None);
    }

    #[test]
    fn hire_rate_cells() {
        let r = record([[0, 5], [50, 7]], [[0, 10], [500, 7]], GroupCounts::default(), [0.0; 2]);
        let rates = hire_rates(&[r]);
        assert_eq!(rates[1][0], Some(0.10));
        assert_eq!(rates[0][0], None);
        assert_eq!(rates[1][1], Some(1.0));
    }

    #[test]
    fn equilibrium_means() {
        let w: Vec<RoundRecord> = (0..10)
            .map(|i| {
                let p = if i % 2 == 0 { 0.4 } else { 0.6 };
                record([[0; 2]; 2], [[0; 2]; 2], GroupCounts::default(), [p, 1.0])
            })
            .collect();
        let (reference, mean) = equilibrium_probabilities(&w, 0.3);
        assert_eq!(reference, 0.3);
        assert!((mean[0] - 0.5).abs() < 1e-12);
        assert_eq!(mean[1], 1.0);
    }

    #[test]
    fn random_strategy_probability_equals_share() {
        let cfg = MarketConfig {
            n_employers: 10,
            n_compliant: 3,
            new_per_step: 200,
            burn_in_steps: 10,
            measure_steps: 10,
            strategy: StrategyKind::Random,
            ..MarketConfig::default()
        };
        let res = run_trial(&cfg, 0);
        let s = WindowSummary::from_window(&res.window, cfg.compliant_share());
        for p in s.mean_p_compliant_by_group {
            assert!((p - 0.3).abs() < 1e-15);
        }
        assert!(res.window.iter().all(|r| r.p_compliant == [0.3, 0.3]));
        assert_eq!(s.reference_p_compliant, 0.3);
        assert_eq!(s.rounds, 10);
        let hires: u64 = s.hires_by_group_by_sector.iter().flatten().sum();
        assert_eq!(hires, res.window.iter().map(|r| r.hires().total()).sum::<u64>());
        assert_eq!(WindowSummary::from_window(&res.window, 0.3), s);
    }

    proptest! {
        #[test]
        fn di_scale_invariant(ha in 1u64..1000, hb in 0u64..1000, ea in 1u64..5000, eb in 1u64..5000, k in 2u64..50) {
            let one = disparate_impact(&[simple(ha, hb, ea, eb)]);
            let many = disparate_impact(&[simple(ha * k, hb * k, ea * k, eb * k)]);
            let (x, y) = (one.unwrap(), many.unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn benefit_increasing(base in 0.0f64..0.99, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
            prop_assume!(d1 < d2);
            prop_assert!(scaled_benefit(d1, base).unwrap() < scaled_benefit(d2, base).unwrap());
        }
    }
}
