//! Configuration, the staged checks and the JSON report behind the `rvml`
//! binary. A run is a list of sections; each section is timed and carries its
//! own pass/fail checks.

mod config;
mod report;
mod rng;
mod sections;

use std::time::Instant;

pub use config::{
    BilliardParams, CollisionParams, DomainKind, IdentityParams, MomentParams, OperatorParams, RelaxParams, RunConfig,
    Tolerances, DEFAULTS_JSON, ENV_OUT_DIR, ENV_THREADS, SCHEMA_JSON,
};
pub use report::{Check, Relation, RunReport, Section};
pub use rng::{stream, stream_seed};
pub use sections::{identity_samples, ROUNDING_LEVEL};

use crate::{Error, Result};
use sections::{Context, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    KernelCheck,
    Assemble,
    Momentfn,
    Relax,
    Billiard,
    Cavity,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Constants,
    Kernel,
    Identity,
    Operator,
    Collision,
    MomentTables,
    MomentFunctions,
    Relaxation,
    Billiard(DomainKind),
    Cavity,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Constants => "constants",
            Stage::Kernel => "kernel",
            Stage::Identity => "divergence-identity",
            Stage::Operator => "operator",
            Stage::Collision => "collision",
            Stage::MomentTables => "moment-tables",
            Stage::MomentFunctions => "moment-functions",
            Stage::Relaxation => "relaxation",
            Stage::Billiard(DomainKind::Disk) => "billiard-disk",
            Stage::Billiard(DomainKind::Ball) => "billiard-ball",
            Stage::Cavity => "cavity",
        }
    }

    fn run(self, ctx: &mut Context) -> Result<Outcome> {
        match self {
            Stage::Constants => sections::constants(ctx),
            Stage::Kernel => sections::kernel(ctx),
            Stage::Identity => sections::divergence(ctx),
            Stage::Operator => sections::operator(ctx),
            Stage::Collision => sections::collision(ctx),
            Stage::MomentTables => sections::moment_tables(ctx),
            Stage::MomentFunctions => sections::moment_functions(ctx),
            Stage::Relaxation => sections::relaxation(ctx),
            Stage::Billiard(d) => sections::billiard(ctx, d),
            Stage::Cavity => sections::cavity(ctx),
        }
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::KernelCheck => "kernel-check",
            Command::Assemble => "assemble",
            Command::Momentfn => "momentfn",
            Command::Relax => "relax",
            Command::Billiard => "billiard",
            Command::Cavity => "cavity",
            Command::All => "all",
        }
    }

    fn stages(self, cfg: &RunConfig) -> Vec<Stage> {
        let billiards = || cfg.billiard.domains.iter().map(|d| Stage::Billiard(*d));
        match self {
            Command::Constants => vec![Stage::Constants],
            Command::KernelCheck => vec![Stage::Kernel, Stage::Identity],
            Command::Assemble => vec![Stage::Operator, Stage::Collision],
            Command::Momentfn => vec![Stage::MomentTables, Stage::MomentFunctions],
            Command::Relax => vec![Stage::Relaxation],
            Command::Billiard => billiards().collect(),
            Command::Cavity => vec![Stage::Cavity],
            Command::All => {
                let mut v = vec![
                    Stage::Constants,
                    Stage::Kernel,
                    Stage::MomentTables,
                    Stage::MomentFunctions,
                    Stage::Operator,
                    Stage::Collision,
                    Stage::Relaxation,
                ];
                v.extend(billiards());
                v.extend([Stage::Cavity, Stage::Identity]);
                v
            }
        }
    }
}

/// Runs `command` under `cfg.threads` worker threads, writing the report and
/// data files to `cfg.out_dir`. Failed checks are reported, not raised; only
/// configuration, IO and numerical breakdowns return `Err`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {} threads: {e}", cfg.threads)))?;
    let started = Instant::now();
    let sections = pool.install(|| {
        let mut ctx = Context::new(cfg);
        command
            .stages(cfg)
            .into_iter()
            .map(|stage| {
                let t = Instant::now();
                let o = stage.run(&mut ctx)?;
                Ok(Section {
                    name: stage.name().to_string(),
                    checks: o.checks,
                    notes: o.notes,
                    wall_seconds: t.elapsed().as_secs_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = RunReport {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        commit: option_env!("RVML_GIT_COMMIT").unwrap_or("unknown").to_string(),
        config: cfg.clone(),
        passed: sections.iter().all(Section::passed),
        sections,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    sections::write_json(&cfg.out_dir.join(format!("report-{}.json", command.name())), &report)?;
    Ok(report)
}
