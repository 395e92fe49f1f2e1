use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rvml::harness::{run, Command, DomainKind, Relation, RunConfig, RunReport};
use rvml::Result;

/// Runs the numerical checks of the Vlasov-Maxwell-Landau toolkit and writes
/// a JSON report. Exits 0 when every check passes, 2 on configuration errors
/// and 3 on failed checks or numerical breakdown.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Run configuration in JSON; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where reports and data files go.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the full JSON report on stdout instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Species constants, Juttner normalisation, K2.
    Constants,
    /// Kernel algebra and the divergence identity.
    KernelCheck,
    /// Linearised operator structure and collision conservation.
    Assemble,
    /// Exact moment tables and the solved test functions.
    Momentfn {
        /// Relative quadrature target.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Relaxation runs from random and smooth data.
    Relax,
    /// Specular billiards in a disk and a ball.
    Billiard {
        #[arg(long, value_parser = parse_domain)]
        domain: Option<DomainKind>,
        /// Number of particles.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reflections: Option<usize>,
    },
    /// Yee scheme invariants and field identities in a conducting box.
    Cavity,
    /// Every stage in order.
    All,
}

fn parse_domain(s: &str) -> std::result::Result<DomainKind, String> {
    match s {
        "disk" => Ok(DomainKind::Disk),
        "ball" => Ok(DomainKind::Ball),
        _ => Err(format!("unknown domain `{s}`, expected disk or ball")),
    }
}

fn configure(cli: &Cli) -> Result<(Command, RunConfig)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let command = match &cli.command {
        Cmd::Constants => Command::Constants,
        Cmd::KernelCheck => Command::KernelCheck,
        Cmd::Assemble => Command::Assemble,
        Cmd::Momentfn { tol } => {
            if let Some(t) = tol {
                cfg.momentfn.tol = *t;
            }
            Command::Momentfn
        }
        Cmd::Relax => Command::Relax,
        Cmd::Billiard { domain, n, reflections } => {
            if let Some(d) = domain {
                cfg.billiard.domains = vec![*d];
            }
            if let Some(n) = n {
                cfg.billiard.particles = *n;
            }
            if let Some(r) = reflections {
                cfg.billiard.reflections = *r;
            }
            Command::Billiard
        }
        Cmd::Cavity => Command::Cavity,
        Cmd::All => Command::All,
    };
    cfg.validate()?;
    Ok((command, cfg))
}

fn symbol(r: Relation) -> &'static str {
    match r {
        Relation::Below => "<",
        Relation::AtMost => "<=",
        Relation::Above => ">",
        Relation::AtLeast => ">=",
        Relation::Equals => "==",
    }
}

fn summarise(report: &RunReport) {
    for s in &report.sections {
        println!("[{}] {:.2} s", s.name, s.wall_seconds);
        for c in &s.checks {
            let mark = if c.pass { "pass" } else { "FAIL" };
            println!(
                "  {mark}  {}: {:.3e} {} {:.3e}",
                c.name,
                c.value,
                symbol(c.relation),
                c.threshold
            );
        }
        for (name, v) in &s.notes {
            println!("        {name} = {v:.6e}");
        }
    }
    let failed = report.failed_checks().count();
    println!(
        "{}: {} check(s) failed, {:.1} s, report in {}",
        report.command,
        failed,
        report.wall_seconds,
        report
            .config
            .out_dir
            .join(format!("report-{}.json", report.command))
            .display()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure(&cli).and_then(|(command, cfg)| run(command, &cfg));
    match outcome {
        Ok(report) => {
            if cli.json {
                match serde_json::to_string_pretty(&report) {
                    Ok(text) => println!("{text}"),
                    Err(e) => eprintln!("rvml: {e}"),
                }
            } else {
                summarise(&report);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("rvml: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
