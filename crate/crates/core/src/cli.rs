//! Command-line driver.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::run_trial;
use crate::error::{ConfigError, OutputError};
use crate::experiment::{
    aggregate, format_aggregate, read_meta, read_results, results_path, run_sweep_resuming, write_results, SweepMeta,
    SweepSpec,
};
use crate::metrics::WindowSummary;
use crate::model::{ConfigSource, Group, MarketConfig, Sector};
use crate::presets::{preset, presets, scaled};
use crate::report::{write_report, ChartKind, Series};

pub const SEED_ENV: &str = "PARITY_MARKET_SEED";

#[derive(Debug, Parser)]
#[command(name = "parity-market", version, about = "Partial-compliance demographic parity market simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the trials of a single compliance level and print window summaries.
    Run(RunArgs),
    /// Sweep the number of compliant employers, write CSV + metadata, print per-level means.
    Sweep(SweepArgs),
    /// Render SVG charts from one or more sweep CSVs.
    Report(ReportArgs),
    /// Sweep every preset and render the full chart set.
    Reproduce(ReproduceArgs),
    /// List the built-in scenario presets.
    Presets,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario (see `presets`).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override one config key after loading; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    pub set: Vec<String>,
    /// Trials per compliance level.
    #[arg(long, value_name = "N")]
    pub trials: Option<u32>,
    /// Base seed; falls back to PARITY_MARKET_SEED, then the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
    /// Multiply employer count and entrants per step by F.
    #[arg(long, value_name = "F", default_value_t = 1.0)]
    pub scale: f64,
    /// Output format for the summary.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated compliance levels (must include 0); default all.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep CSV files; several are overlaid with a legend.
    #[arg(required = true, value_name = "CSV")]
    pub csv: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Output directory for CSVs and figures.
    #[arg(long, value_name = "DIR", default_value = "reproduce")]
    pub out: PathBuf,
    /// Multiply employer count and entrants per step by F.
    #[arg(long, value_name = "F", default_value_t = 1.0)]
    pub scale: f64,
    /// Trials per compliance level.
    #[arg(long, value_name = "N")]
    pub trials: Option<u32>,
    /// Base seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Runtime(String),
    /// The reader of stdout went away, e.g. `| head`.
    #[error("broken pipe")]
    Closed,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output(e) if e.is_schema() => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::Closed;
        }
        CliError::Runtime(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Report(a) => cmd_report(&a, out),
        Command::Reproduce(a) => cmd_reproduce(&a, out, err),
        Command::Presets => cmd_presets(out),
    };
    match result {
        Ok(()) | Err(CliError::Closed) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| ConfigError::Value {
            key: SEED_ENV.into(),
            message: format!("cannot parse `{v}` as a seed"),
        }),
        Err(_) => Ok(None),
    }
}

/// Config resolution order: defaults, PARITY_MARKET_SEED, file or preset,
/// `--set`, then `--trials` / `--seed`, then `--scale`. Validated last.
fn resolve_config(a: &ScenarioArgs) -> Result<(String, MarketConfig), ConfigError> {
    let (name, mut src) = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scenario")
                .to_string();
            (name, ConfigSource::from_file(path)?)
        }
        (None, Some(p)) => {
            let p = preset(p)?;
            (p.name, ConfigSource::from(&p.config))
        }
        (None, None) => ("default".to_string(), ConfigSource::new()),
    };
    if src.get("seed").is_none() {
        if let Some(seed) = env_seed()? {
            src.set("seed", &seed.to_string())?;
        }
    }
    for s in &a.set {
        src.set_override(s)?;
    }
    if let Some(t) = a.trials {
        src.set("trials", &t.to_string())?;
    }
    if let Some(seed) = a.seed {
        src.set("seed", &seed.to_string())?;
    }
    let cfg = scaled(&src.build()?, a.scale)?;
    crate::model::validate_config(&cfg).map_err(ConfigError::Invalid)?;
    Ok((name, cfg))
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario: &'a str,
    fingerprint: String,
    config: &'a MarketConfig,
    trials: Vec<TrialReport>,
}

#[derive(Serialize)]
struct TrialReport {
    trial: u32,
    final_p_compliant: [f64; 2],
    p_trend_last_50: [f64; 2],
    summary: WindowSummary,
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (name, cfg) = resolve_config(&a.scenario)?;
    let pool = worker_pool(a.scenario.jobs)?;
    let trials: Vec<TrialReport> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let res = run_trial(&cfg, u64::from(t));
                let final_p = [res.final_state.logit_a, res.final_state.logit_b].map(crate::strategy::logistic);
                TrialReport {
                    trial: t,
                    final_p_compliant: final_p,
                    p_trend_last_50: res.p_trend,
                    summary: WindowSummary::from_window(&res.window, cfg.compliant_share()),
                }
            })
            .collect()
    });
    match a.scenario.format {
        Format::Json => {
            let report = RunReport {
                scenario: &name,
                fingerprint: cfg.fingerprint(),
                config: &cfg,
                trials,
            };
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
        Format::Text => {
            writeln!(out, "scenario     {name}")?;
            writeln!(out, "fingerprint  {}", cfg.fingerprint())?;
            writeln!(
                out,
                "policy       {}  strategy {}  compliant {}/{}  fraction_b {}",
                cfg.compliant_policy.name(),
                cfg.strategy.name(),
                cfg.n_compliant,
                cfg.n_employers,
                cfg.fraction_b
            )?;
            for t in &trials {
                writeln!(out, "\ntrial {}", t.trial)?;
                write!(out, "{}", format_summary(&t.summary))?;
                writeln!(
                    out,
                    "  p trend (last 50)  A {:+.2e}  B {:+.2e}",
                    t.p_trend_last_50[0], t.p_trend_last_50[1]
                )?;
            }
        }
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// Aligned multi-line rendering of a window summary.
pub fn format_summary(s: &WindowSummary) -> String {
    let mut o = String::new();
    o.push_str(&format!("  disparate impact   {}\n", fmt_opt(s.di)));
    o.push_str(&format!(
        "  entrants           A {:>8}  B {:>8}\n",
        s.entrants_by_group.a, s.entrants_by_group.b
    ));
    o.push_str(&format!("  {:<18} {:>12} {:>14}\n", "", "compliant", "non-compliant"));
    for g in Group::ALL {
        let h = s.hires_by_group_by_sector[g.index()];
        let ap = s.applications_by_group_by_sector[g.index()];
        o.push_str(&format!("  hires/apps {g:<7} {:>12} {:>14}\n", format!("{}/{}", h[0], ap[0]), format!("{}/{}", h[1], ap[1])));
    }
    for g in Group::ALL {
        o.push_str(&format!(
            "  hire rate {g:<8} {:>12} {:>14}\n",
            fmt_opt(s.rate(g, Sector::Compliant)),
            fmt_opt(s.rate(g, Sector::NonCompliant))
        ));
    }
    o.push_str(&format!(
        "  B share of hires   {:>12} {:>14}\n",
        fmt_opt(s.b_share(Sector::Compliant)),
        fmt_opt(s.b_share(Sector::NonCompliant))
    ));
    o.push_str(&format!(
        "  p_compliant        A {:.4}  B {:.4}  (no preference {:.4})\n",
        s.mean_p_compliant(Group::A),
        s.mean_p_compliant(Group::B),
        s.reference_p_compliant
    ));
    o.push_str(&format!("  applicants/round   {:.1}\n", s.pool_size_mean));
    o
}

fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Runs (or resumes) one sweep into `dir`, returning the CSV path.
fn sweep_to(
    name: &str,
    spec: &SweepSpec,
    jobs: usize,
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(PathBuf, Vec<crate::experiment::SweepRow>), CliError> {
    spec.validate()?;
    let path = results_path(dir, name);
    let existing = match read_meta(&path) {
        Ok(meta) if meta.row_fingerprint == spec.row_fingerprint() => read_results(&path).unwrap_or_default(),
        _ => Vec::new(),
    };
    let total = spec.compliance_levels.len() * spec.trials as usize;
    writeln!(out, "sweep {name}: fingerprint {}", spec.fingerprint())?;
    let reused = existing
        .iter()
        .filter(|r| spec.compliance_levels.contains(&r.n_compliant) && r.trial < spec.trials)
        .count();
    if reused > 0 {
        writeln!(err, "resuming: {reused} of {total} cells already present in {}", path.display())?;
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let rows = run_sweep_resuming(spec, jobs, &existing)?;
    let meta = SweepMeta::new(spec, &rows, started, clock.elapsed());
    write_results(&rows, &path, &meta)?;
    writeln!(
        out,
        "wrote {} rows to {} in {:.1}s",
        rows.len(),
        path.display(),
        clock.elapsed().as_secs_f64()
    )?;
    Ok((path, rows))
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let (name, cfg) = resolve_config(&a.scenario)?;
    let mut spec = SweepSpec::new(cfg);
    if let Some(levels) = &a.levels {
        spec = spec.with_levels(levels.clone());
    }
    let (_, rows) = sweep_to(&name, &spec, a.scenario.jobs, &a.out, out, err)?;
    let aggs = aggregate(&rows);
    match a.scenario.format {
        Format::Text => write!(out, "{}", format_aggregate(&aggs))?,
        Format::Json => {
            let text = serde_json::to_string_pretty(&aggs).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let series = a.csv.iter().map(|p| Series::load(p)).collect::<Result<Vec<_>, _>>()?;
    for path in write_report(&series, &ChartKind::ALL, &a.out)? {
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let data = a.out.join("data");
    let mut by_panel: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for p in presets() {
        let scenario = ScenarioArgs {
            config: None,
            preset: Some(p.name.clone()),
            set: Vec::new(),
            trials: a.trials,
            seed: a.seed,
            jobs: a.jobs,
            scale: a.scale,
            format: Format::Text,
        };
        let (name, cfg) = resolve_config(&scenario)?;
        let (path, _) = sweep_to(&name, &SweepSpec::new(cfg), a.jobs, &data, out, err)?;
        // Panels pair the two policies: `global-adaptive-25` -> `adaptive-25`.
        let panel = name.split_once('-').map(|(_, rest)| rest.to_string()).unwrap_or(name);
        match by_panel.iter_mut().find(|(k, _)| *k == panel) {
            Some((_, v)) => v.push(path),
            None => by_panel.push((panel, vec![path])),
        }
    }
    for (panel, paths) in by_panel {
        let series = paths.iter().map(|p| Series::load(p)).collect::<Result<Vec<_>, _>>()?;
        for path in write_report(&series, &ChartKind::ALL, &a.out.join("figures").join(&panel))? {
            writeln!(out, "wrote {}", path.display())?;
        }
    }
    Ok(())
}

fn cmd_presets(out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "{:<22} {:<7} {:<9} {:>10} {:>8}", "name", "policy", "strategy", "fraction_b", "window")?;
    for p in presets() {
        let c = &p.config;
        writeln!(
            out,
            "{:<22} {:<7} {:<9} {:>10} {:>8}",
            p.name,
            c.compliant_policy.name(),
            c.strategy.name(),
            c.fraction_b,
            c.burn_in_steps
        )?;
    }
    Ok(())
}
