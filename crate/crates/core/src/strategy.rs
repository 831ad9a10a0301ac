//! Applicant-side choice of employer.

use serde::{Deserialize, Serialize};

use crate::model::{Employer, EmployerId, Group, MarketConfig, Sector, StrategyKind};
use crate::sampling::Generator;

pub const LOGIT_CLAMP: f64 = 12.0;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Log-odds of `p`, clamped to `[-LOGIT_CLAMP, LOGIT_CLAMP]`.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln().clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
}

/// Group-level log-odds of targeting the compliant sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupApplicationState {
    pub logit_a: f64,
    pub logit_b: f64,
}

impl GroupApplicationState {
    /// Neutral start: both groups at the sector's employer share.
    pub fn neutral(cfg: &MarketConfig) -> Self {
        let l = logit(cfg.compliant_share());
        Self { logit_a: l, logit_b: l }
    }

    pub fn logit(&self, group: Group) -> f64 {
        match group {
            Group::A => self.logit_a,
            Group::B => self.logit_b,
        }
    }

    fn logit_mut(&mut self, group: Group) -> &mut f64 {
        match group {
            Group::A => &mut self.logit_a,
            Group::B => &mut self.logit_b,
        }
    }
}

/// Applications and hires per (group, sector) in one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundAcceptance {
    /// Indexed `[group][sector]`.
    pub applications: [[u64; 2]; 2],
    pub hires: [[u64; 2]; 2],
}

impl RoundAcceptance {
    pub fn applications(&self, g: Group, s: Sector) -> u64 {
        self.applications[g.index()][s.index()]
    }

    pub fn hires(&self, g: Group, s: Sector) -> u64 {
        self.hires[g.index()][s.index()]
    }

    /// Hires over applications, `None` when the cell is empty.
    pub fn rate(&self, g: Group, s: Sector) -> Option<f64> {
        let apps = self.applications(g, s);
        (apps > 0).then(|| self.hires(g, s) as f64 / apps as f64)
    }

    pub fn add_assign(&mut self, other: &RoundAcceptance) {
        for g in 0..2 {
            for s in 0..2 {
                self.applications[g][s] += other.applications[g][s];
                self.hires[g][s] += other.hires[g][s];
            }
        }
    }
}

/// Probability that a member of `group` applies to the compliant sector.
pub fn probability_compliant(
    strategy: StrategyKind,
    group: Group,
    cfg: &MarketConfig,
    state: &GroupApplicationState,
) -> f64 {
    let k = f64::from(cfg.n_compliant);
    let n = f64::from(cfg.n_employers);
    if cfg.n_compliant == 0 {
        return 0.0;
    }
    if cfg.n_compliant >= cfg.n_employers {
        return 1.0;
    }
    match strategy {
        StrategyKind::Random => k / n,
        StrategyKind::StaticPreference => {
            // Sector sizes weighted by the preferred-sector weight.
            let w = cfg.static_pref;
            let (wc, wn) = match group {
                Group::B => (w, 1.0 - w),
                Group::A => (1.0 - w, w),
            };
            let c = wc * k;
            let nc = wn * (n - k);
            if c + nc == 0.0 {
                k / n
            } else {
                c / (c + nc)
            }
        }
        StrategyKind::AdaptivePreference => logistic(state.logit(group)),
    }
}

/// Employer ids split by sector, in employer order.
#[derive(Debug, Clone, Default)]
pub struct Sectors {
    pub compliant: Vec<EmployerId>,
    pub non_compliant: Vec<EmployerId>,
}

impl Sectors {
    pub fn new(employers: &[Employer]) -> Self {
        let mut s = Self::default();
        for e in employers {
            match e.sector() {
                Sector::Compliant => s.compliant.push(e.id),
                Sector::NonCompliant => s.non_compliant.push(e.id),
            }
        }
        s
    }

    pub fn members(&self, sector: Sector) -> &[EmployerId] {
        match sector {
            Sector::Compliant => &self.compliant,
            Sector::NonCompliant => &self.non_compliant,
        }
    }
}

/// Picks a sector with probability `p_compliant`, then an employer uniformly
/// within it. Always consumes two variates.
///
/// Panics if the drawn sector has no employers.
pub fn choose_employer(gen: &mut Generator, p_compliant: f64, sectors: &Sectors) -> EmployerId {
    let sector = if gen.bernoulli(p_compliant) {
        Sector::Compliant
    } else {
        Sector::NonCompliant
    };
    let members = sectors.members(sector);
    assert!(!members.is_empty(), "chose empty {sector:?} sector");
    members[gen.below(members.len())]
}

/// One round of the adaptive log-odds update.
///
/// Each group moves toward the sector that accepted it at the higher rate.
/// Ties move away from the compliant sector; an empty cell freezes the group.
pub fn update_adaptive(
    state: &GroupApplicationState,
    acc: &RoundAcceptance,
    stepsize: f64,
) -> GroupApplicationState {
    let mut next = *state;
    for g in Group::ALL {
        let (Some(rc), Some(rn)) = (acc.rate(g, Sector::Compliant), acc.rate(g, Sector::NonCompliant)) else {
            continue;
        };
        let l = next.logit_mut(g);
        *l = if rc > rn { *l + stepsize } else { *l - stepsize }.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    }
    next
}
