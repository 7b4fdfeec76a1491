//! Drive a run from code, the way the `liouville` binary does from a JSON
//! config.
//!
//!     cargo run --release --example run_config

use liouville::cli::{run, Command, Lemma, RunConfig};

fn main() -> liouville::error::Result<()> {
    let out = std::env::temp_dir().join("liouville-run-config");
    let config = RunConfig {
        command: Command::VerifyLemma,
        lemma: Some(Lemma::Dercomshear),
        cocycle: liouville::cli::CocycleArg::Short("seeded:7,0.3".into()),
        n: 6.0,
        output_path: out.clone(),
        ..RunConfig::default()
    };
    println!("{}", serde_json::to_string_pretty(&config)?);
    let report = run(&config)?;
    for c in &report.checks {
        println!("{} {}: {:e} <= {:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.bound);
    }
    println!("config hash {}, report in {}", report.config_hash, out.display());
    Ok(())
}
