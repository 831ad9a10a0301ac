//! Render the SVG chart set for global vs local parity from two small sweeps.
//!
//!     cargo run --release --example charts [out-dir] [scale]

use std::path::{Path, PathBuf};

use parity_market::experiment::{run_sweep, SweepSpec};
use parity_market::presets::{preset, scaled};
use parity_market::report::{write_report, ChartKind, Series};

pub fn run_example(out: &Path, scale: f64, trials: u32) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    let mut series = Vec::new();
    for name in ["global-static-25", "local-static-25"] {
        let cfg = scaled(&preset(name)?.config, scale)?;
        let n_employers = cfg.n_employers;
        let rows = run_sweep(&SweepSpec::new(cfg).with_trials(trials), 1)?;
        series.push(Series {
            name: name.to_string(),
            rows,
            n_employers,
        });
    }
    let written = write_report(&series, &ChartKind::ALL, out)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(written)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "charts".into()));
    let scale = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    run_example(&out, scale, 5).map(|_| ())
}
