//! Drives the harness from code: loads the defaults, overrides a few
//! settings and runs two of the quick stages.

use rvml::harness::{run, Command, RunConfig};

fn main() -> rvml::Result<()> {
    let cfg = RunConfig {
        out_dir: std::env::temp_dir().join("rvml-example"),
        seed: 7,
        kernel_samples: 20,
        ..Default::default()
    };
    for command in [Command::Constants, Command::Momentfn] {
        let report = run(command, &cfg)?;
        for section in &report.sections {
            let failed = section.checks.iter().filter(|c| !c.pass).count();
            println!("{:<18} {} checks, {failed} failed", section.name, section.checks.len());
        }
    }
    println!("reports in {}", cfg.out_dir.display());
    Ok(())
}
