//! The per-round market loop and the trial driver.
//!
//! A round runs spawn, apply, hire, remove hired, age and evict, then the
//! adaptive update. Each phase draws from its own substream
//! `(level, trial, step, purpose)`; every employer hires from its own
//! `(level, trial, step, employer-selection, employer)` stream.

use serde::{Deserialize, Serialize};

use crate::model::{
    assign_group, Applicant, ApplicantId, Employer, Group, GroupCounts, MarketConfig, Sector, StrategyKind,
};
use crate::policy::{select_hires, HiringOutcome};
use crate::sampling::{sample_score, Purpose, StreamRoot};
use crate::strategy::{
    choose_employer, probability_compliant, update_adaptive, GroupApplicationState, RoundAcceptance, Sectors,
};

#[derive(Debug, Clone)]
pub struct MarketState {
    pub pool: Vec<Applicant>,
    pub employers: Vec<Employer>,
    pub group_state: GroupApplicationState,
    pub step_index: u64,
    pub trial_index: u64,
}

impl MarketState {
    pub fn new(cfg: &MarketConfig, trial_index: u64) -> Self {
        Self {
            pool: Vec::new(),
            employers: cfg.employers(),
            group_state: GroupApplicationState::neutral(cfg),
            step_index: 0,
            trial_index,
        }
    }

    pub fn pool_by_group(&self) -> GroupCounts {
        let mut c = GroupCounts::default();
        for a in &self.pool {
            c.add(a.group, 1);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub step_index: u64,
    /// One entry per employer, in employer-id order.
    pub outcomes: Vec<HiringOutcome>,
    pub acceptance: RoundAcceptance,
    pub entrants: GroupCounts,
    pub evictions: GroupCounts,
    pub pool_before: GroupCounts,
    pub pool_after: GroupCounts,
    /// Probability of applying to the compliant sector used this round, by group index.
    pub p_compliant: [f64; 2],
}

impl RoundRecord {
    pub fn hires(&self) -> GroupCounts {
        let mut h = GroupCounts::default();
        for s in Sector::ALL {
            for g in Group::ALL {
                h.add(g, self.acceptance.hires(g, s));
            }
        }
        h
    }

    /// Applicants who applied this round.
    pub fn applicants(&self) -> u64 {
        self.acceptance.applications.iter().flatten().sum()
    }

    /// `entrants + pool_before == hires + evictions + pool_after`, per group.
    pub fn conserves(&self) -> bool {
        let hires = self.hires();
        Group::ALL.iter().all(|&g| {
            self.entrants.get(g) + self.pool_before.get(g)
                == hires.get(g) + self.evictions.get(g) + self.pool_after.get(g)
        })
    }
}

/// Advances the market by one round.
pub fn step(state: &mut MarketState, cfg: &MarketConfig, streams: &StreamRoot) -> RoundRecord {
    let t = state.step_index;
    let pool_before = state.pool_by_group();

    // Spawn: group first, then score, per applicant.
    let mut entrants = GroupCounts::default();
    let mut gen = streams.step(t, Purpose::Spawn);
    for i in 0..u64::from(cfg.new_per_step) {
        let group = assign_group(&mut gen, cfg);
        let score = sample_score(&mut gen, group, cfg);
        entrants.add(group, 1);
        state.pool.push(Applicant {
            id: ApplicantId::pack(state.trial_index, t, i),
            group,
            score,
            rounds_waiting: 0,
        });
    }

    // Apply.
    let p_compliant = Group::ALL.map(|g| probability_compliant(cfg.strategy, g, cfg, &state.group_state));
    let sectors = Sectors::new(&state.employers);
    let mut received: Vec<Vec<Applicant>> = vec![Vec::new(); state.employers.len()];
    let mut acceptance = RoundAcceptance::default();
    let mut gen = streams.step(t, Purpose::ApplicantChoice);
    for a in &state.pool {
        let e = choose_employer(&mut gen, p_compliant[a.group.index()], &sectors);
        let sector = state.employers[e.0 as usize].sector();
        acceptance.applications[a.group.index()][sector.index()] += 1;
        received[e.0 as usize].push(*a);
    }

    // Hire.
    let mut outcomes = Vec::with_capacity(state.employers.len());
    let mut hired_ids = Vec::new();
    for (emp, apps) in state.employers.iter().zip(&received) {
        let mut gen = streams.employer(t, emp.id.0);
        let out = select_hires(&mut gen, emp.policy, apps, emp.spots, cfg);
        for g in Group::ALL {
            acceptance.hires[g.index()][emp.sector().index()] += out.hired_by_group.get(g);
        }
        hired_ids.extend_from_slice(&out.hired);
        outcomes.push(out);
    }
    hired_ids.sort_unstable();

    // Remove hired, then age survivors and evict those past max_wait.
    let mut evictions = GroupCounts::default();
    state.pool.retain_mut(|a| {
        if hired_ids.binary_search(&a.id).is_ok() {
            return false;
        }
        a.rounds_waiting += 1;
        if a.rounds_waiting >= cfg.max_wait {
            evictions.add(a.group, 1);
            false
        } else {
            true
        }
    });

    if cfg.strategy == StrategyKind::AdaptivePreference {
        state.group_state = update_adaptive(&state.group_state, &acceptance, cfg.stepsize);
    }
    state.step_index += 1;

    RoundRecord {
        step_index: t,
        outcomes,
        acceptance,
        entrants,
        evictions,
        pool_before,
        pool_after: state.pool_by_group(),
        p_compliant,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub n_compliant: u32,
    pub trial_index: u64,
    pub rounds_executed: u64,
    /// Records from the measurement window only.
    pub window: Vec<RoundRecord>,
    pub final_state: GroupApplicationState,
    /// Least-squares slope of p_compliant per round over the last 50 rounds, by group index.
    pub p_trend: [f64; 2],
}

/// Streams used by trial `trial_index` at the config's compliance level.
pub fn trial_streams(cfg: &MarketConfig, trial_index: u64) -> StreamRoot {
    StreamRoot::new(cfg.seed, &[u64::from(cfg.n_compliant), trial_index])
}

/// Runs burn-in then measurement, keeping only measured rounds.
pub fn run_trial(cfg: &MarketConfig, trial_index: u64) -> TrialResult {
    run_trial_with(cfg, trial_index, |_| {})
}

/// As [`run_trial`], also handing every round (burn-in included) to `observe`.
pub fn run_trial_with(cfg: &MarketConfig, trial_index: u64, mut observe: impl FnMut(&RoundRecord)) -> TrialResult {
    let streams = trial_streams(cfg, trial_index);
    let mut state = MarketState::new(cfg, trial_index);
    let mut window = Vec::with_capacity(cfg.measure_steps as usize);
    let burn_in = u64::from(cfg.burn_in_steps);
    for t in 0..cfg.total_steps() {
        let rec = step(&mut state, cfg, &streams);
        observe(&rec);
        if t >= burn_in {
            window.push(rec);
        }
    }
    let p_trend = Group::ALL.map(|g| trend(&window, g.index(), 50));
    TrialResult {
        n_compliant: cfg.n_compliant,
        trial_index,
        rounds_executed: state.step_index,
        window,
        final_state: state.group_state,
        p_trend,
    }
}

fn trend(window: &[RoundRecord], g: usize, last: usize) -> f64 {
    let tail = &window[window.len().saturating_sub(last)..];
    let n = tail.len() as f64;
    if tail.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = tail.iter().map(|r| r.p_compliant[g]).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, r) in tail.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (r.p_compliant[g] - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MarketConfig {
        MarketConfig {
            n_employers: 10,
            n_compliant: 4,
            new_per_step: 250,
            burn_in_steps: 20,
            measure_steps: 20,
            ..MarketConfig::default()
        }
    }

    #[test]
    fn first_round_from_empty_pool() {
        let cfg = MarketConfig::default();
        let mut state = MarketState::new(&cfg, 0);
        let rec = step(&mut state, &cfg, &trial_streams(&cfg, 0));
        assert_eq!(rec.entrants.total(), 1250);
        assert_eq!(rec.hires().total(), 500);
        assert_eq!(rec.applicants(), 1250);
        assert_eq!(rec.evictions.total(), 0);
        assert_eq!(state.pool.len(), 750);
        assert!(rec.conserves());
    }

    #[test]
    fn empty_market_only_advances_clock() {
        let cfg = MarketConfig {
            new_per_step: 0,
            ..MarketConfig::default()
        };
        let mut state = MarketState::new(&cfg, 0);
        let before = state.group_state;
        let rec = step(&mut state, &cfg, &trial_streams(&cfg, 0));
        assert_eq!(rec.applicants(), 0);
        assert_eq!(rec.hires().total(), 0);
        assert!(state.pool.is_empty());
        assert_eq!(state.group_state, before);
        assert_eq!(state.step_index, 1);
    }

    #[test]
    fn applicants_get_exactly_max_wait_rounds() {
        // One employer with one spot and a large cohort: track the first cohort.
        let cfg = MarketConfig {
            n_employers: 1,
            n_compliant: 0,
            spots: 1,
            new_per_step: 5,
            max_wait: 3,
            ..small()
        };
        let mut state = MarketState::new(&cfg, 0);
        let streams = trial_streams(&cfg, 0);
        let recs: Vec<RoundRecord> = (0..4).map(|_| step(&mut state, &cfg, &streams)).collect();
        assert_eq!(recs[0].evictions.total(), 0);
        assert_eq!(recs[1].evictions.total(), 0);
        // Step 0 cohort: 5 entered, 3 rounds of one hire each across cohorts;
        // whatever is left of it goes at the end of its third round.
        let cohort_left = state.pool.iter().filter(|a| a.id.unpack().1 == 0).count();
        assert_eq!(cohort_left, 0);
        assert!(recs[2].evictions.total() > 0);
        assert!(state.pool.iter().all(|a| a.rounds_waiting < cfg.max_wait));
    }

    #[test]
    fn conservation_and_pool_bound_hold() {
        let cfg = small();
        let bound = (cfg.new_per_step * cfg.max_wait) as usize;
        run_trial_with(&cfg, 0, |rec| {
            assert!(rec.conserves(), "step {}", rec.step_index);
            assert!(rec.pool_after.total() as usize <= bound);
            let total: u64 = rec.outcomes.iter().map(|o| o.hired.len() as u64).sum();
            assert_eq!(total, rec.hires().total());
            let expected: u64 = rec.outcomes.iter().map(|o| o.pool_by_group.total().min(10)).sum();
            assert_eq!(total, expected);
        });
    }

    #[test]
    fn trial_lengths_follow_strategy() {
        for (strategy, total, measured) in [
            (StrategyKind::StaticPreference, 200, 100),
            (StrategyKind::AdaptivePreference, 400, 200),
        ] {
            let cfg = MarketConfig {
                n_employers: 5,
                n_compliant: 2,
                new_per_step: 60,
                ..MarketConfig::for_strategy(strategy)
            };
            let res = run_trial(&cfg, 1);
            assert_eq!(res.rounds_executed, total);
            assert_eq!(res.window.len(), measured);
            assert_eq!(res.window[0].step_index, measured as u64);
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let cfg = MarketConfig {
            strategy: StrategyKind::AdaptivePreference,
            ..small()
        };
        assert_eq!(run_trial(&cfg, 3), run_trial(&cfg, 3));
        assert_ne!(run_trial(&cfg, 3).window, run_trial(&cfg, 4).window);
    }

    #[test]
    fn static_and_random_keep_probabilities_fixed() {
        let cfg = MarketConfig {
            strategy: StrategyKind::StaticPreference,
            ..small()
        };
        let res = run_trial(&cfg, 0);
        assert!(res.window.iter().all(|r| r.p_compliant == res.window[0].p_compliant));
        assert_eq!(res.p_trend, [0.0, 0.0]);
    }

    #[test]
    fn adaptive_logits_move_in_fixed_steps() {
        let cfg = MarketConfig {
            strategy: StrategyKind::AdaptivePreference,
            ..small()
        };
        let mut prev: Option<[f64; 2]> = None;
        run_trial_with(&cfg, 0, |rec| {
            let l = rec.p_compliant.map(|p| (p / (1.0 - p)).ln());
            if let Some(pl) = prev {
                for g in 0..2 {
                    let d = (l[g] - pl[g]).abs();
                    assert!(d < 1e-9 || (d - cfg.stepsize).abs() < 1e-9, "delta {d}");
                }
            }
            prev = Some(l);
        });
    }
}
