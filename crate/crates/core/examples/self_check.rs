//! Runs the built-in consistency checks and prints the report.

use hmm_credit::validation::{run_validation, ValidationSettings};

fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let paths = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let report = run_validation(&ValidationSettings {
        paths,
        ..Default::default()
    })?;
    print!("{}", report.to_csv());
    for c in &report.checks {
        eprintln!("{:<34} {:.3}s", c.name, c.runtime.as_secs_f64());
    }
    if !report.all_passed() {
        std::process::exit(1);
    }
    Ok(())
}
