use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use psdlim::harness::{compare_scoped, preset, run_with_threads, write_bundle, ExperimentConfig, Scope, Tolerances, Verdict, PRESETS};
use psdlim::{Error, Result};

#[derive(Parser)]
#[command(name = "psdlim", version, about = "Phase-space density of laser-driven two-level particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its output bundle.
    Run(RunArgs),
    /// List presets, or print one as a config file.
    Preset {
        #[arg(long)]
        list: bool,
        name: Option<String>,
    },
    /// Compare two output bundles.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        field_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        report_tol: f64,
        /// Ignore the test-particle histograms.
        #[arg(long)]
        quantum_only: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; never changes results.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        _ => return Err(Error::Config("give exactly one of --config or --preset".into())),
    };
    if let Some(dt) = args.dt {
        cfg.integrator.dt = dt;
    }
    if let Some(n) = args.particles {
        cfg.semiclassical.particles = n;
    }
    if let Some(seed) = args.seed {
        cfg.semiclassical.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    if cfg.output.dir.is_empty() {
        cfg.output.dir = format!("out/{}", cfg.name);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_command(args: RunArgs) -> Result<i32> {
    let cfg = load(&args)?;
    let bundle = run_with_threads(&cfg, args.threads)?;
    let dir = PathBuf::from(&cfg.output.dir);
    write_bundle(&bundle, &dir)?;
    for g in &bundle.pmd_gains {
        println!("{:<20} max gain {:.4}", g.label, g.gain());
    }
    match &bundle.verdict {
        Verdict::Hold(_) => println!("all bounds hold"),
        Verdict::Violation(msg) => eprintln!("{msg}"),
        Verdict::NotApplicable => println!("bound check not applicable"),
    }
    println!("wrote {}", dir.display());
    Ok(bundle.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Preset { list, name } => match (list, name) {
            (_, Some(name)) => preset(&name).map(|c| {
                print!("{}", c.to_toml());
                0
            }),
            (true, None) => {
                PRESETS.iter().for_each(|p| println!("{p}"));
                Ok(0)
            }
            (false, None) => Err(Error::Config("give --list or a preset name".into())),
        },
        Command::Compare { a, b, field_tol, report_tol, quantum_only } => {
            let scope = if quantum_only { Scope::Quantum } else { Scope::All };
            let tol = Tolerances { field: field_tol, report: report_tol };
            compare_scoped(&a, &b, tol, scope).map(|report| {
                for d in &report.diffs {
                    let mark = if d.passed() { "ok  " } else { "FAIL" };
                    println!("{mark} {:<40} {:<16} {:.3e}", d.file, d.item, d.max_abs);
                }
                i32::from(!report.passed())
            })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
