//! Load a scenario from `key = value` text, apply overrides, and see how
//! validation reports problems.
//!
//!     cargo run --example config_file

use parity_market::model::ConfigSource;

const SCENARIO: &str = "\
# local parity, adaptive applicants, half the population in group B
strategy = adaptive
compliant_policy = local
fraction_b = 0.5
n_compliant = 60   # too many, fixed by the override below
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut src = ConfigSource::parse(SCENARIO)?;
    match src.resolve() {
        Ok(_) => return Err("expected a validation error".into()),
        Err(e) => println!("as written:\n{e}\n"),
    }
    src.set_override("n_compliant=20")?;
    src.set_override("burn_in_steps=100")?;
    src.set_override("measure_steps=150")?;
    match src.resolve() {
        Ok(_) => return Err("expected a window mismatch".into()),
        Err(e) => println!("with a mismatched window:\n{e}\n"),
    }
    src.set_override("burn_in_steps=150")?;
    let cfg = src.resolve()?;
    println!("resolved (fingerprint {}):\n{}", cfg.fingerprint(), cfg.to_kv_string());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
