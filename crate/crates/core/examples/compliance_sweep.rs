//! Sweep compliance for one preset, persist the results and print the
//! per-level table.
//!
//!     cargo run --release --example compliance_sweep [preset] [scale] [jobs]

use parity_market::experiment::{aggregate, format_aggregate, results_path, run_sweep, write_results, SweepMeta, SweepSpec};
use parity_market::presets::{preset, scaled};

pub fn run_example(name: &str, scale: f64, jobs: usize, out: &std::path::Path) -> Result<std::path::PathBuf, Box<dyn std::error::Error>> {
    let p = preset(name)?;
    let spec = SweepSpec::new(scaled(&p.config, scale)?);
    let started = std::time::SystemTime::now();
    let clock = std::time::Instant::now();
    let rows = run_sweep(&spec, jobs)?;
    let path = results_path(out, name);
    write_results(&rows, &path, &SweepMeta::new(&spec, &rows, started, clock.elapsed()))?;
    println!("{} rows -> {} ({:.1}s)", rows.len(), path.display(), clock.elapsed().as_secs_f64());
    print!("{}", format_aggregate(&aggregate(&rows)));
    Ok(path)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "global-static-25".into());
    let scale = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    let jobs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    run_example(&name, scale, jobs, std::path::Path::new(".")).map(|_| ())
}
