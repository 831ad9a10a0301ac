//! Named scenarios: compliant policy x applicant strategy x group-B share.

use crate::error::ConfigError;
use crate::model::{validate_config, MarketConfig, PolicyKind, StrategyKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPreset {
    pub name: String,
    pub config: MarketConfig,
}

const POLICIES: [PolicyKind; 2] = [PolicyKind::GlobalParity, PolicyKind::LocalParity];
const STRATEGIES: [StrategyKind; 3] = [
    StrategyKind::Random,
    StrategyKind::StaticPreference,
    StrategyKind::AdaptivePreference,
];
const SHARES: [(f64, &str); 2] = [(0.25, "25"), (0.5, "50")];

/// Every preset, named `<policy>-<strategy>-<percent B>`, e.g. `global-adaptive-25`.
pub fn presets() -> Vec<ScenarioPreset> {
    let mut out = Vec::new();
    for (fraction_b, pct) in SHARES {
        for strategy in STRATEGIES {
            for policy in POLICIES {
                out.push(ScenarioPreset {
                    name: format!("{}-{}-{pct}", policy.name(), strategy.name()),
                    config: MarketConfig {
                        compliant_policy: policy,
                        fraction_b,
                        ..MarketConfig::for_strategy(strategy)
                    },
                });
            }
        }
    }
    out
}

pub fn preset(name: &str) -> Result<ScenarioPreset, ConfigError> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

/// Shrinks or grows the market: employer count, compliant count and entrants
/// per step are multiplied by `factor` (rounded, at least one employer and
/// one entrant).
pub fn scaled(cfg: &MarketConfig, factor: f64) -> Result<MarketConfig, ConfigError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(ConfigError::Value {
            key: "scale".into(),
            message: format!("scale must be positive, got {factor}"),
        });
    }
    if factor == 1.0 {
        return Ok(cfg.clone());
    }
    let scale = |x: u32, min: u32| ((f64::from(x) * factor).round() as u32).max(min);
    let n_employers = scale(cfg.n_employers, 1);
    let out = MarketConfig {
        n_employers,
        n_compliant: scale(cfg.n_compliant, 0).min(n_employers),
        new_per_step: scale(cfg.new_per_step, 1),
        ..cfg.clone()
    };
    validate_config(&out).map_err(ConfigError::Invalid)?;
    Ok(out)
}
