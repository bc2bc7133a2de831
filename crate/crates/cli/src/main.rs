use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use secure_uav::config::load_config;
use secure_uav::par::Exec;
use secure_uav::planner::{initialize, optimize, validate, ConvergenceTrace, Termination};
use secure_uav::report::RunReport;
use secure_uav::sweep::{sweep, write_sweep_csv, SweepParam};
use secure_uav::{MissionConfig, Scheme};

#[derive(Parser)]
#[command(name = "secure-uav", version, about = "Secure two-UAV SWIPT trajectory and power planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one mission and write slots.csv, summary.json and trace.csv.
    Run(RunArgs),
    /// Optimize a mission for each value of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scheme in the configuration.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    out: PathBuf,
    /// Evaluate the initial plan without optimizing.
    #[arg(long)]
    baseline: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// eve_radius, eve_distance or mission_time.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "fuj,gjt,woj")]
    schemes: Vec<Scheme>,
    #[arg(long)]
    out: PathBuf,
    /// Concurrent runs.
    #[arg(long, env = "SECURE_UAV_WORKERS", default_value_t = 1)]
    workers: usize,
}

fn load(path: Option<&Path>) -> anyhow::Result<MissionConfig> {
    let (cfg, warnings) = match path {
        Some(p) => load_config(p)?,
        None => MissionConfig::from_toml_str("")?,
    };
    for w in warnings {
        warn!("{w}");
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load(args.config.as_deref())?;
    if let Some(s) = args.scheme {
        cfg = cfg.with_scheme(s);
        cfg.validate()?;
    }
    let report = if args.baseline {
        let plan = initialize(&cfg)?;
        let trace = ConvergenceTrace {
            asr: vec![secure_uav::rates::average_secrecy(&plan, cfg.scheme, &cfg.geometry, &cfg.channel, false)?],
            block_deltas: Vec::new(),
            iterations: 0,
            terminated_by: Termination::Epsilon,
        };
        let violations = validate(&plan, &cfg);
        RunReport::new(&cfg, plan, trace, violations)?
    } else {
        optimize(&cfg)?
    };
    let files = report.write_all(&args.out)?;
    let s = report.summary();
    println!(
        "{}: ASR {:.6} bits/s/Hz, AHE {:.6e} W, {} iterations ({:?})",
        s.scheme, s.asr, s.ahe_w, s.iterations, s.terminated_by
    );
    for f in files {
        info!("wrote {}", f.display());
    }
    Ok(if report.converged() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let cfg = load(args.config.as_deref())?;
    if args.workers == 0 {
        bail!("--workers must be at least 1");
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let rows = sweep(&cfg, args.param, &args.values, &args.schemes, Exec::Parallel, args.workers)?;
    let path = args.out.join("sweep.csv");
    write_sweep_csv(&path, args.param, &rows)?;
    let mut all_ok = true;
    for r in &rows {
        println!("{} = {} [{}]: {}", args.param.as_str(), r.value, r.scheme, r.status);
        all_ok &= r.status == "ok";
    }
    info!("wrote {}", path.display());
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
