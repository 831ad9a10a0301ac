//! Domain types and scenario configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Violation};
use crate::sampling::Generator;

/// Demographic group of an applicant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    /// Advantaged group (higher mean score).
    A,
    /// Marginalized group (lower mean score).
    B,
}

impl Group {
    pub const ALL: [Group; 2] = [Group::A, Group::B];

    pub fn index(self) -> usize {
        match self {
            Group::A => 0,
            Group::B => 1,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::A => f.write_str("A"),
            Group::B => f.write_str("B"),
        }
    }
}

/// Employer sector: parity-enforcing or score-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Compliant,
    NonCompliant,
}

impl Sector {
    pub const ALL: [Sector; 2] = [Sector::Compliant, Sector::NonCompliant];

    pub fn index(self) -> usize {
        match self {
            Sector::Compliant => 0,
            Sector::NonCompliant => 1,
        }
    }
}

/// Per-group tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub a: u64,
    pub b: u64,
}

impl GroupCounts {
    pub fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }

    pub fn get(&self, group: Group) -> u64 {
        match group {
            Group::A => self.a,
            Group::B => self.b,
        }
    }

    pub fn add(&mut self, group: Group, n: u64) {
        match group {
            Group::A => self.a += n,
            Group::B => self.b += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b
    }
}

impl std::ops::AddAssign for GroupCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.a += rhs.a;
        self.b += rhs.b;
    }
}

/// Globally unique applicant identifier.
///
/// Packs `(trial, step, counter)` as 16 | 24 | 24 bits, so ids sort by
/// trial, then entry step, then order of entry within the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApplicantId(pub u64);

impl ApplicantId {
    pub const MAX_TRIAL: u64 = (1 << 16) - 1;
    pub const MAX_STEP: u64 = (1 << 24) - 1;
    pub const MAX_COUNTER: u64 = (1 << 24) - 1;

    pub fn pack(trial: u64, step: u64, counter: u64) -> Self {
        debug_assert!(trial <= Self::MAX_TRIAL);
        debug_assert!(step <= Self::MAX_STEP);
        debug_assert!(counter <= Self::MAX_COUNTER);
        ApplicantId((trial << 48) | (step << 24) | counter)
    }

    pub fn unpack(self) -> (u64, u64, u64) {
        (self.0 >> 48, (self.0 >> 24) & Self::MAX_STEP, self.0 & Self::MAX_COUNTER)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicant {
    pub id: ApplicantId,
    pub group: Group,
    /// Perceived skill. Never changes after creation.
    pub score: f64,
    /// Application rounds this applicant has taken part in so far.
    pub rounds_waiting: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Generic,
    LocalParity,
    GlobalParity,
}

impl PolicyKind {
    pub fn is_parity(self) -> bool {
        !matches!(self, PolicyKind::Generic)
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Generic => "generic",
            PolicyKind::LocalParity => "local",
            PolicyKind::GlobalParity => "global",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "generic" => Ok(PolicyKind::Generic),
            "local" | "localparity" => Ok(PolicyKind::LocalParity),
            "global" | "globalparity" => Ok(PolicyKind::GlobalParity),
            other => Err(format!("unknown policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmployerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Employer {
    pub id: EmployerId,
    pub policy: PolicyKind,
    pub spots: u32,
}

impl Employer {
    pub fn is_compliant(&self) -> bool {
        self.policy.is_parity()
    }

    pub fn sector(&self) -> Sector {
        if self.is_compliant() {
            Sector::Compliant
        } else {
            Sector::NonCompliant
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    Random,
    StaticPreference,
    AdaptivePreference,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::StaticPreference => "static",
            StrategyKind::AdaptivePreference => "adaptive",
        }
    }

    /// Burn-in (and measurement window) length used when none is given.
    pub fn default_window(self) -> u32 {
        match self {
            StrategyKind::AdaptivePreference => 200,
            _ => 100,
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "random" => Ok(StrategyKind::Random),
            "static" | "staticpreference" => Ok(StrategyKind::StaticPreference),
            "adaptive" | "dynamic" | "adaptivepreference" => Ok(StrategyKind::AdaptivePreference),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Full scenario parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub n_employers: u32,
    pub n_compliant: u32,
    pub compliant_policy: PolicyKind,
    pub strategy: StrategyKind,
    pub fraction_b: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub score_variance: f64,
    pub new_per_step: u32,
    pub spots: u32,
    pub max_wait: u32,
    pub static_pref: f64,
    pub stepsize: f64,
    pub burn_in_steps: u32,
    pub measure_steps: u32,
    pub trials: u32,
    pub seed: u64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_employers: 50,
            n_compliant: 25,
            compliant_policy: PolicyKind::GlobalParity,
            strategy: StrategyKind::Random,
            fraction_b: 0.25,
            mean_a: 0.0,
            mean_b: -0.3,
            score_variance: 1.0,
            new_per_step: 1250,
            spots: 10,
            max_wait: 10,
            static_pref: 0.55,
            stepsize: 0.05,
            burn_in_steps: 100,
            measure_steps: 100,
            trials: 10,
            seed: 0,
        }
    }
}

/// Field names accepted in config files and `--set` overrides.
pub const CONFIG_KEYS: [&str; 17] = [
    "n_employers",
    "n_compliant",
    "compliant_policy",
    "strategy",
    "fraction_b",
    "mean_a",
    "mean_b",
    "score_variance",
    "new_per_step",
    "spots",
    "max_wait",
    "static_pref",
    "stepsize",
    "burn_in_steps",
    "measure_steps",
    "trials",
    "seed",
];

impl MarketConfig {
    /// Defaults for a given strategy, with the burn-in window matched to it.
    pub fn for_strategy(strategy: StrategyKind) -> Self {
        let window = strategy.default_window();
        Self {
            strategy,
            burn_in_steps: window,
            measure_steps: window,
            ..Self::default()
        }
    }

    pub fn total_steps(&self) -> u64 {
        u64::from(self.burn_in_steps) + u64::from(self.measure_steps)
    }

    /// Share of employers in the compliant sector.
    pub fn compliant_share(&self) -> f64 {
        if self.n_employers == 0 {
            0.0
        } else {
            f64::from(self.n_compliant) / f64::from(self.n_employers)
        }
    }

    pub fn employers(&self) -> Vec<Employer> {
        (0..self.n_employers)
            .map(|i| Employer {
                id: EmployerId(i),
                policy: if i < self.n_compliant {
                    self.compliant_policy
                } else {
                    PolicyKind::Generic
                },
                spots: self.spots,
            })
            .collect()
    }

    /// Canonical `key = value` rendering; stable input for fingerprints.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.kv_pairs() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    fn kv_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_employers", self.n_employers.to_string()),
            ("n_compliant", self.n_compliant.to_string()),
            ("compliant_policy", self.compliant_policy.name().to_string()),
            ("strategy", self.strategy.name().to_string()),
            ("fraction_b", self.fraction_b.to_string()),
            ("mean_a", self.mean_a.to_string()),
            ("mean_b", self.mean_b.to_string()),
            ("score_variance", self.score_variance.to_string()),
            ("new_per_step", self.new_per_step.to_string()),
            ("spots", self.spots.to_string()),
            ("max_wait", self.max_wait.to_string()),
            ("static_pref", self.static_pref.to_string()),
            ("stepsize", self.stepsize.to_string()),
            ("burn_in_steps", self.burn_in_steps.to_string()),
            ("measure_steps", self.measure_steps.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// 64-bit FNV-1a over the canonical rendering, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        fingerprint_str(&self.to_kv_string())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        ConfigSource::from_file(path)?.resolve()
    }
}

pub(crate) fn fingerprint_str(s: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Checks every configuration invariant, collecting all violations.
pub fn validate_config(cfg: &MarketConfig) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let mut bad = |field: &'static str, message: String| v.push(Violation { field, message });

    if cfg.n_employers == 0 {
        bad("n_employers", "n_employers must be positive".into());
    }
    if cfg.n_compliant > cfg.n_employers {
        bad(
            "n_compliant",
            format!(
                "n_compliant out of range: {} not in [0, {}]",
                cfg.n_compliant, cfg.n_employers
            ),
        );
    }
    if !cfg.compliant_policy.is_parity() {
        bad(
            "compliant_policy",
            "compliant_policy must be local or global parity".into(),
        );
    }
    for (field, p) in [("fraction_b", cfg.fraction_b), ("static_pref", cfg.static_pref)] {
        if !(0.0..=1.0).contains(&p) {
            bad(field, format!("{field} must lie in [0, 1], got {p}"));
        }
    }
    for (field, x) in [("mean_a", cfg.mean_a), ("mean_b", cfg.mean_b)] {
        if !x.is_finite() {
            bad(field, format!("{field} must be finite"));
        }
    }
    if !(cfg.score_variance.is_finite() && cfg.score_variance > 0.0) {
        bad("score_variance", "score_variance must be positive".into());
    }
    if !(cfg.stepsize.is_finite() && cfg.stepsize > 0.0) {
        bad("stepsize", "stepsize must be positive".into());
    }
    if cfg.new_per_step == 0 {
        bad("new_per_step", "new_per_step must be positive".into());
    }
    if u64::from(cfg.new_per_step) > ApplicantId::MAX_COUNTER + 1 {
        bad("new_per_step", format!("new_per_step must be at most {}", ApplicantId::MAX_COUNTER + 1));
    }
    if cfg.spots == 0 {
        bad("spots", "spots must be positive".into());
    }
    if cfg.max_wait == 0 {
        bad("max_wait", "max_wait must be positive".into());
    }
    if cfg.burn_in_steps == 0 {
        bad("burn_in_steps", "burn_in_steps must be positive".into());
    }
    if cfg.measure_steps == 0 {
        bad("measure_steps", "measure_steps must be positive".into());
    }
    if cfg.burn_in_steps != cfg.measure_steps {
        bad(
            "measure_steps",
            format!(
                "burn-in must equal measurement window ({} != {})",
                cfg.burn_in_steps, cfg.measure_steps
            ),
        );
    }
    if cfg.total_steps() > ApplicantId::MAX_STEP + 1 {
        bad("burn_in_steps", "too many steps for applicant id packing".into());
    }
    if cfg.trials == 0 {
        bad("trials", "trials must be positive".into());
    }
    if u64::from(cfg.trials) > ApplicantId::MAX_TRIAL + 1 {
        bad("trials", format!("trials must be at most {}", ApplicantId::MAX_TRIAL + 1));
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Returns B with probability `fraction_b`; consumes exactly one variate.
pub fn assign_group(gen: &mut Generator, cfg: &MarketConfig) -> Group {
    if gen.bernoulli(cfg.fraction_b) {
        Group::B
    } else {
        Group::A
    }
}

/// Unresolved `key = value` settings, before defaults and validation.
///
/// Overrides may be layered on top; `resolve` applies them to the defaults
/// for the chosen strategy.
#[derive(Debug, Clone, Default)]
pub struct ConfigSource {
    entries: BTreeMap<String, String>,
}

impl ConfigSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut src = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            src.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey(key) => ConfigError::Syntax {
                    line: idx + 1,
                    message: format!("unknown key `{key}`"),
                },
                other => other,
            })?;
        }
        Ok(src)
    }

    /// Sets one key, rejecting names that are not config fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn set_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Builds the config without validating it.
    pub fn build(&self) -> Result<MarketConfig, ConfigError> {
        let strategy = match self.get("strategy") {
            Some(s) => s.parse().map_err(|m| parse_err("strategy", m))?,
            None => StrategyKind::Random,
        };
        let mut cfg = MarketConfig::for_strategy(strategy);
        for (key, value) in &self.entries {
            apply_field(&mut cfg, key, value)?;
        }
        // An explicit window on one side sets the other when omitted.
        match (self.get("burn_in_steps"), self.get("measure_steps")) {
            (Some(_), None) => cfg.measure_steps = cfg.burn_in_steps,
            (None, Some(_)) => cfg.burn_in_steps = cfg.measure_steps,
            _ => {}
        }
        Ok(cfg)
    }

    /// Builds and validates.
    pub fn resolve(&self) -> Result<MarketConfig, ConfigError> {
        let cfg = self.build()?;
        validate_config(&cfg).map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }
}

impl From<&MarketConfig> for ConfigSource {
    fn from(cfg: &MarketConfig) -> Self {
        let mut src = Self::new();
        for (k, v) in cfg.kv_pairs() {
            src.entries.insert(k.to_string(), v);
        }
        src
    }
}

fn parse_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| parse_err(key, format!("cannot parse `{value}`: {e}")))
}

fn apply_field(cfg: &mut MarketConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    match key {
        "n_employers" => cfg.n_employers = num(key, value)?,
        "n_compliant" => cfg.n_compliant = num(key, value)?,
        "compliant_policy" => {
            cfg.compliant_policy = value.parse().map_err(|m| parse_err(key, m))?
        }
        "strategy" => cfg.strategy = value.parse().map_err(|m| parse_err(key, m))?,
        "fraction_b" => cfg.fraction_b = num(key, value)?,
        "mean_a" => cfg.mean_a = num(key, value)?,
        "mean_b" => cfg.mean_b = num(key, value)?,
        "score_variance" => cfg.score_variance = num(key, value)?,
        "new_per_step" => cfg.new_per_step = num(key, value)?,
        "spots" => cfg.spots = num(key, value)?,
        "max_wait" => cfg.max_wait = num(key, value)?,
        "static_pref" => cfg.static_pref = num(key, value)?,
        "stepsize" => cfg.stepsize = num(key, value)?,
        "burn_in_steps" => cfg.burn_in_steps = num(key, value)?,
        "measure_steps" => cfg.measure_steps = num(key, value)?,
        "trials" => cfg.trials = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        other => return Err(ConfigError::UnknownKey(other.to_string())),
    }
    Ok(())
}
