//! Compliance sweeps: run every (level, trial), normalize against the
//! all-generic baseline, persist, aggregate.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::run_trial;
use crate::error::{ConfigError, OutputError};
use crate::metrics::{scaled_benefit, WindowSummary};
use crate::model::{fingerprint_str, validate_config, Group, MarketConfig, Sector};
use crate::sampling::GENERATOR_ALGORITHM;

/// Column order of the results CSV. Stable across versions.
pub const CSV_COLUMNS: [&str; 14] = [
    "n_compliant",
    "trial",
    "di",
    "scaled_benefit",
    "b_share_hires_compliant",
    "b_share_hires_noncompliant",
    "p_compliant_a",
    "p_compliant_b",
    "rate_a_compliant",
    "rate_a_noncompliant",
    "rate_b_compliant",
    "rate_b_noncompliant",
    "pool_size_mean",
    "seed",
];

/// Numeric columns that `aggregate` summarizes.
pub const METRIC_COLUMNS: [&str; 11] = [
    "di",
    "scaled_benefit",
    "b_share_hires_compliant",
    "b_share_hires_noncompliant",
    "p_compliant_a",
    "p_compliant_b",
    "rate_a_compliant",
    "rate_a_noncompliant",
    "rate_b_compliant",
    "rate_b_noncompliant",
    "pool_size_mean",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `n_compliant` is ignored; each level overrides it.
    pub base: MarketConfig,
    pub compliance_levels: Vec<u32>,
    pub trials: u32,
}

impl SweepSpec {
    /// Every level from 0 to `n_employers`, with the base config's trial count.
    pub fn new(base: MarketConfig) -> Self {
        let compliance_levels = (0..=base.n_employers).collect();
        let trials = base.trials;
        Self {
            base,
            compliance_levels,
            trials,
        }
    }

    pub fn with_levels(mut self, levels: Vec<u32>) -> Self {
        self.compliance_levels = levels;
        self
    }

    pub fn with_trials(mut self, trials: u32) -> Self {
        self.trials = trials;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut cfg = self.level_config(0);
        cfg.trials = self.trials;
        validate_config(&cfg).map_err(ConfigError::Invalid)?;
        let levels = &self.compliance_levels;
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Sweep("compliance levels must be sorted and distinct".into()));
        }
        if levels.first() != Some(&0) {
            return Err(ConfigError::Sweep("compliance level 0 is required for the baseline".into()));
        }
        if let Some(&k) = levels.iter().find(|&&k| k > self.base.n_employers) {
            return Err(ConfigError::Sweep(format!(
                "compliance level {k} exceeds n_employers = {}",
                self.base.n_employers
            )));
        }
        Ok(())
    }

    pub fn level_config(&self, n_compliant: u32) -> MarketConfig {
        MarketConfig {
            n_compliant,
            trials: self.trials,
            ..self.base.clone()
        }
    }

    /// Identifies everything that determines a single row: the base config
    /// with `n_compliant` and `trials` normalized away.
    pub fn row_fingerprint(&self) -> String {
        MarketConfig {
            n_compliant: 0,
            trials: 1,
            ..self.base.clone()
        }
        .fingerprint()
    }

    /// Identifies the whole sweep output.
    pub fn fingerprint(&self) -> String {
        let levels: Vec<String> = self.compliance_levels.iter().map(u32::to_string).collect();
        fingerprint_str(&format!(
            "{}levels = {}\ntrials = {}\n",
            self.level_config(0).to_kv_string(),
            levels.join(","),
            self.trials
        ))
    }

    fn tasks(&self) -> Vec<(u32, u32)> {
        self.compliance_levels
            .iter()
            .flat_map(|&k| (0..self.trials).map(move |t| (k, t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_compliant: u32,
    pub trial: u32,
    pub di: Option<f64>,
    pub scaled_benefit: Option<f64>,
    pub b_share_hires_compliant: Option<f64>,
    pub b_share_hires_noncompliant: Option<f64>,
    pub p_compliant_a: f64,
    pub p_compliant_b: f64,
    pub rate_a_compliant: Option<f64>,
    pub rate_a_noncompliant: Option<f64>,
    pub rate_b_compliant: Option<f64>,
    pub rate_b_noncompliant: Option<f64>,
    pub pool_size_mean: f64,
    pub seed: u64,
    /// Row fingerprint of the producing sweep; kept in the metadata file, not the CSV.
    #[serde(skip)]
    pub fingerprint: String,
}

impl SweepRow {
    fn from_summary(k: u32, trial: u32, s: &WindowSummary, seed: u64, fingerprint: &str) -> Self {
        Self {
            n_compliant: k,
            trial,
            di: s.di,
            scaled_benefit: None,
            b_share_hires_compliant: s.b_share(Sector::Compliant),
            b_share_hires_noncompliant: s.b_share(Sector::NonCompliant),
            p_compliant_a: s.mean_p_compliant(Group::A),
            p_compliant_b: s.mean_p_compliant(Group::B),
            rate_a_compliant: s.rate(Group::A, Sector::Compliant),
            rate_a_noncompliant: s.rate(Group::A, Sector::NonCompliant),
            rate_b_compliant: s.rate(Group::B, Sector::Compliant),
            rate_b_noncompliant: s.rate(Group::B, Sector::NonCompliant),
            pool_size_mean: s.pool_size_mean,
            seed,
            fingerprint: fingerprint.to_string(),
        }
    }

    /// Value of a metric column by name.
    pub fn metric(&self, column: &str) -> Option<f64> {
        match column {
            "di" => self.di,
            "scaled_benefit" => self.scaled_benefit,
            "b_share_hires_compliant" => self.b_share_hires_compliant,
            "b_share_hires_noncompliant" => self.b_share_hires_noncompliant,
            "p_compliant_a" => Some(self.p_compliant_a),
            "p_compliant_b" => Some(self.p_compliant_b),
            "rate_a_compliant" => self.rate_a_compliant,
            "rate_a_noncompliant" => self.rate_a_noncompliant,
            "rate_b_compliant" => self.rate_b_compliant,
            "rate_b_noncompliant" => self.rate_b_noncompliant,
            "pool_size_mean" => Some(self.pool_size_mean),
            _ => None,
        }
    }

    fn key(&self) -> (u32, u32) {
        (self.n_compliant, self.trial)
    }
}

/// Runs one (level, trial) cell and summarizes its measurement window.
pub fn run_cell(spec: &SweepSpec, k: u32, trial: u32) -> (WindowSummary, SweepRow) {
    let cfg = spec.level_config(k);
    let result = run_trial(&cfg, u64::from(trial));
    let summary = WindowSummary::from_window(&result.window, cfg.compliant_share());
    let row = SweepRow::from_summary(k, trial, &summary, cfg.seed, &spec.row_fingerprint());
    (summary, row)
}

/// Runs the full sweep on `jobs` worker threads. Rows come back sorted by
/// (level, trial) regardless of `jobs`.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepRow>, ConfigError> {
    run_sweep_resuming(spec, jobs, &[])
}

/// As [`run_sweep`], reusing `existing` rows whose fingerprint matches.
pub fn run_sweep_resuming(spec: &SweepSpec, jobs: usize, existing: &[SweepRow]) -> Result<Vec<SweepRow>, ConfigError> {
    run_sweep_observed(spec, jobs, existing, |_| {})
}

/// Full form: `on_done` is called with each freshly computed row, in
/// completion order, from worker threads.
pub fn run_sweep_observed(
    spec: &SweepSpec,
    jobs: usize,
    existing: &[SweepRow],
    on_done: impl Fn(&SweepRow) + Sync,
) -> Result<Vec<SweepRow>, ConfigError> {
    spec.validate()?;
    let fp = spec.row_fingerprint();
    let wanted: BTreeSet<(u32, u32)> = spec.tasks().into_iter().collect();
    let mut done: BTreeMap<(u32, u32), SweepRow> = existing
        .iter()
        .filter(|r| r.fingerprint == fp && wanted.contains(&r.key()))
        .map(|r| (r.key(), r.clone()))
        .collect();
    let todo: Vec<(u32, u32)> = wanted.iter().copied().filter(|key| !done.contains_key(key)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ConfigError::Sweep(format!("cannot start worker pool: {e}")))?;
    let fresh: Vec<SweepRow> = pool.install(|| {
        todo.par_iter()
            .map(|&(k, t)| {
                let (_, row) = run_cell(spec, k, t);
                on_done(&row);
                row
            })
            .collect()
    });
    for row in fresh {
        done.insert(row.key(), row);
    }

    let mut rows: Vec<SweepRow> = done.into_values().collect();
    apply_baseline(&mut rows);
    Ok(rows)
}

/// Mean trial DI at level 0, when every level-0 trial has a DI.
pub fn baseline_di(rows: &[SweepRow]) -> Option<f64> {
    let dis: Vec<Option<f64>> = rows.iter().filter(|r| r.n_compliant == 0).map(|r| r.di).collect();
    if dis.is_empty() {
        return None;
    }
    let vals: Option<Vec<f64>> = dis.into_iter().collect();
    let vals = vals?;
    Some(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Fills `scaled_benefit` on every row from the level-0 baseline.
pub fn apply_baseline(rows: &mut [SweepRow]) {
    let baseline = baseline_di(rows);
    for r in rows.iter_mut() {
        r.scaled_benefit = match (r.di, baseline) {
            (Some(_), Some(_)) if r.n_compliant == 0 => Some(0.0),
            (Some(di), Some(base)) => scaled_benefit(di, base).ok(),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMeta {
    pub spec: SweepSpec,
    pub fingerprint: String,
    pub row_fingerprint: String,
    pub generator: String,
    pub version: String,
    pub baseline_di: Option<f64>,
    pub parity_fallback: String,
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

impl SweepMeta {
    pub fn new(spec: &SweepSpec, rows: &[SweepRow], started: std::time::SystemTime, elapsed: std::time::Duration) -> Self {
        Self {
            spec: spec.clone(),
            fingerprint: spec.fingerprint(),
            row_fingerprint: spec.row_fingerprint(),
            generator: GENERATOR_ALGORITHM.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            baseline_di: baseline_di(rows),
            parity_fallback: "exhausted group falls back to best remaining applicant of the other group".into(),
            started_unix_ms: started
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            elapsed_ms: elapsed.as_millis(),
        }
    }
}

/// `<dir>/<scenario>_sweep.csv`
pub fn results_path(dir: &Path, scenario: &str) -> PathBuf {
    dir.join(format!("{scenario}_sweep.csv"))
}

/// The metadata file next to a results CSV: `x_sweep.csv` -> `x_sweep.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn row_record(r: &SweepRow) -> [String; 14] {
    [
        r.n_compliant.to_string(),
        r.trial.to_string(),
        opt(r.di),
        opt(r.scaled_benefit),
        opt(r.b_share_hires_compliant),
        opt(r.b_share_hires_noncompliant),
        r.p_compliant_a.to_string(),
        r.p_compliant_b.to_string(),
        opt(r.rate_a_compliant),
        opt(r.rate_a_noncompliant),
        opt(r.rate_b_compliant),
        opt(r.rate_b_noncompliant),
        r.pool_size_mean.to_string(),
        r.seed.to_string(),
    ]
}

/// Serializes rows as CSV (missing values are empty fields).
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(row_record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the results CSV and its metadata sibling.
pub fn write_results(rows: &[SweepRow], path: &Path, meta: &SweepMeta) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::Empty);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(rows, BufWriter::new(file)).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })?;

    let mpath = meta_path(path);
    let json = serde_json::to_string_pretty(meta).map_err(|source| OutputError::Json {
        path: mpath.clone(),
        source,
    })?;
    std::fs::write(&mpath, json + "\n").map_err(|source| OutputError::Io { path: mpath, source })?;
    Ok(())
}

pub fn read_meta(csv_path: &Path) -> Result<SweepMeta, OutputError> {
    let path = meta_path(csv_path);
    let text = std::fs::read_to_string(&path).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path, source })
}

/// Parses CSV rows against the documented header. Column order may vary;
/// every documented column must be present.
pub fn parse_csv<R: std::io::Read>(input: R, path: &Path) -> Result<Vec<SweepRow>, OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let mut index = BTreeMap::new();
    for col in CSV_COLUMNS {
        let i = headers.iter().position(|h| h.trim() == col).ok_or_else(|| OutputError::MissingColumn {
            path: path.to_path_buf(),
            column: col.to_string(),
        })?;
        index.insert(col, i);
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: &'static str| rec.get(index[col]).unwrap_or("").trim().to_string();
        let bad = |col: &str, value: String| OutputError::BadValue {
            path: path.to_path_buf(),
            line,
            column: col.to_string(),
            value,
        };
        let opt_f = |col: &'static str| -> Result<Option<f64>, OutputError> {
            let v = field(col);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse::<f64>().map(Some).map_err(|_| bad(col, v))
            }
        };
        let req_f = |col: &'static str| -> Result<f64, OutputError> {
            opt_f(col)?.ok_or_else(|| bad(col, String::new()))
        };
        let int = |col: &'static str| -> Result<u64, OutputError> {
            let v = field(col);
            v.parse::<u64>().map_err(|_| bad(col, v))
        };
        rows.push(SweepRow {
            n_compliant: int("n_compliant")? as u32,
            trial: int("trial")? as u32,
            di: opt_f("di")?,
            scaled_benefit: opt_f("scaled_benefit")?,
            b_share_hires_compliant: opt_f("b_share_hires_compliant")?,
            b_share_hires_noncompliant: opt_f("b_share_hires_noncompliant")?,
            p_compliant_a: req_f("p_compliant_a")?,
            p_compliant_b: req_f("p_compliant_b")?,
            rate_a_compliant: opt_f("rate_a_compliant")?,
            rate_a_noncompliant: opt_f("rate_a_noncompliant")?,
            rate_b_compliant: opt_f("rate_b_compliant")?,
            rate_b_noncompliant: opt_f("rate_b_noncompliant")?,
            pool_size_mean: req_f("pool_size_mean")?,
            seed: int("seed")?,
            fingerprint: String::new(),
        });
    }
    Ok(rows)
}

/// Reads a results CSV; rows take the row fingerprint from the metadata
/// sibling when one exists.
pub fn read_results(path: &Path) -> Result<Vec<SweepRow>, OutputError> {
    let file = File::open(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = parse_csv(std::io::BufReader::new(file), path)?;
    if let Ok(meta) = read_meta(path) {
        for r in &mut rows {
            r.fingerprint = meta.row_fingerprint.clone();
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: Option<f64>,
    /// Sample standard deviation; 0 for a single value.
    pub std: Option<f64>,
    pub count: usize,
}

impl CellStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: None,
                std: None,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self {
            mean: Some(mean),
            std: Some(std),
            count: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    pub n_compliant: u32,
    pub trials: usize,
    /// Keyed by metric column name.
    pub columns: BTreeMap<String, CellStats>,
}

impl LevelAggregate {
    pub fn stats(&self, column: &str) -> CellStats {
        self.columns.get(column).copied().unwrap_or(CellStats::of(&[]))
    }

    pub fn mean(&self, column: &str) -> Option<f64> {
        self.stats(column).mean
    }
}

/// Per-level mean and sample standard deviation of every metric column;
/// missing values are left out of both.
pub fn aggregate(rows: &[SweepRow]) -> Vec<LevelAggregate> {
    let mut by_level: BTreeMap<u32, Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        by_level.entry(r.n_compliant).or_default().push(r);
    }
    by_level
        .into_iter()
        .map(|(k, rs)| {
            let columns = METRIC_COLUMNS
                .iter()
                .map(|&c| {
                    let vals: Vec<f64> = rs.iter().filter_map(|r| r.metric(c)).collect();
                    (c.to_string(), CellStats::of(&vals))
                })
                .collect();
            LevelAggregate {
                n_compliant: k,
                trials: rs.len(),
                columns,
            }
        })
        .collect()
}

/// Aligned text table of per-level means.
pub fn format_aggregate(aggs: &[LevelAggregate]) -> String {
    let cols = ["di", "scaled_benefit", "b_share_hires_compliant", "b_share_hires_noncompliant", "p_compliant_a", "p_compliant_b"];
    let mut out = format!("{:>5} {:>6}", "k", "trials");
    for c in cols {
        out.push_str(&format!(" {:>14}", abbreviate(c)));
    }
    out.push('\n');
    for a in aggs {
        out.push_str(&format!("{:>5} {:>6}", a.n_compliant, a.trials));
        for c in cols {
            let s = a.stats(c);
            let cell = match (s.mean, s.std) {
                (Some(m), Some(sd)) => format!("{m:.3}±{sd:.3}"),
                _ => "-".to_string(),
            };
            out.push_str(&format!(" {cell:>14}"));
        }
        out.push('\n');
    }
    out
}

fn abbreviate(c: &str) -> &str {
    match c {
        "scaled_benefit" => "benefit",
        "b_share_hires_compliant" => "b_share_comp",
        "b_share_hires_noncompliant" => "b_share_nonc",
        other => other,
    }
}
