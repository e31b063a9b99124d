//! `decotime`: simulate finite-duration qubit measurements under Markovian
//! measurement and non-Markovian Ohmic dephasing, and extract the
//! measurement duration t_M.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use decotime::config::{OutputFormat, ScenarioConfig};
use decotime::dynamics::{
    analytic_x_trajectory, analytic_z_trajectory, propagate_hybrid, propagate_lindblad, Method,
    PropagatorConfig, Trajectory,
};
use decotime::error::{Error, Result};
use decotime::measurement::{build_model, measurement_time, sweep, upper_bound};
use decotime::quad::QuadratureConfig;
use decotime::report;

#[derive(Parser)]
#[command(name = "decotime", version, about = "Finite-duration qubit measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample rho(t) and emit a trajectory table
    Trajectory(RunArgs),
    /// Extract the measurement time t_M for one scenario
    Tmeasure(RunArgs),
    /// Evaluate t_M over a (lambda, eta) grid
    Sweep(RunArgs),
    /// Run the built-in oracle-equivalence checks
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (flat `key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output file; falls back to the config's output.path, then stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the config's output.format
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads for sweep cells (default: all processors)
    #[arg(long)]
    jobs: Option<usize>,
    /// Reserved; all methods are deterministic
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse()
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Trajectory(args) => run(args, cmd_trajectory),
        Command::Tmeasure(args) => run(args, cmd_tmeasure),
        Command::Sweep(args) => run(args, cmd_sweep),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(()) => {
            eprintln!("completed in {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(args: RunArgs, body: fn(&ScenarioConfig, &RunArgs) -> Result<String>) -> Result<()> {
    if let Some(jobs) = args.jobs {
        // ignore failure: the global pool may already exist
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    if args.seed.is_some() {
        eprintln!("note: --seed is reserved; all methods are deterministic");
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::config(
            args.config.display().to_string(),
            format!("cannot read config: {e}"),
        )
    })?;
    let config = ScenarioConfig::parse(&text)?;
    let rendered = body(&config, &args)?;
    match args
        .output
        .clone()
        .or_else(|| config.output_path.clone().map(PathBuf::from))
    {
        Some(path) => std::fs::write(&path, rendered).map_err(|e| {
            Error::config(path.display().to_string(), format!("cannot write output: {e}"))
        })?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn effective_format(config: &ScenarioConfig, args: &RunArgs) -> OutputFormat {
    args.format.unwrap_or(config.output_format)
}

fn make_trajectory(config: &ScenarioConfig, q: &QuadratureConfig) -> Result<Trajectory> {
    let s = config.system()?;
    let b = config.bath()?;
    let rho0 = config.initial_state()?;
    let (t_end, samples) = config.time_window()?;
    match config.method.resolve(&s, &b) {
        Method::AnalyticZ => analytic_z_trajectory(&rho0, t_end, samples, &s, &b, q),
        Method::AnalyticX => analytic_x_trajectory(&rho0, t_end, samples, &s, &b, q),
        Method::LindbladOnly => propagate_lindblad(&rho0, t_end, samples, &s),
        Method::HybridNumeric => {
            let mut c = PropagatorConfig::default();
            let steps = (t_end / c.resolve_dt(&s, &b)).ceil().max(1.0) as usize;
            c.output_stride = (steps / samples.max(1)).max(1);
            propagate_hybrid(&rho0, t_end, &s, &b, &c, q)
        }
    }
}

fn cmd_trajectory(config: &ScenarioConfig, args: &RunArgs) -> Result<String> {
    let q = QuadratureConfig::from_env();
    let traj = make_trajectory(config, &q)?;
    Ok(match effective_format(config, args) {
        OutputFormat::Csv => report::trajectory_csv(config, &traj),
        OutputFormat::Json => report::trajectory_json(config, &traj),
    })
}

fn cmd_tmeasure(config: &ScenarioConfig, _args: &RunArgs) -> Result<String> {
    let q = QuadratureConfig::from_env();
    let s = config.system()?;
    let b = config.bath()?;
    let rho0 = config.initial_state()?;
    let threshold = config.threshold()?;
    let bound = upper_bound(s.lambda, threshold.fraction)?;
    let mut model = build_model(
        config.method.resolve(&s, &b),
        &rho0,
        &s,
        &b,
        &PropagatorConfig::default(),
        &q,
        20.0 * bound,
    )?;
    let result = measurement_time(model.as_mut(), &s, &threshold)?;
    Ok(report::tmeasure_json(config, &result))
}

fn cmd_sweep(config: &ScenarioConfig, args: &RunArgs) -> Result<String> {
    let q = QuadratureConfig::from_env();
    let spec = config.sweep_spec()?;
    let rows = sweep(&spec, &PropagatorConfig::default(), &q)?;
    if rows.iter().all(|r| r.result.is_err()) {
        if let Some(first) = rows.iter().find_map(|r| r.result.as_ref().err()) {
            return Err(first.clone());
        }
    }
    Ok(match effective_format(config, args) {
        OutputFormat::Csv => report::sweep_csv(config, &rows),
        OutputFormat::Json => report::sweep_json(config, &rows),
    })
}

fn cmd_selftest() -> Result<()> {
    let mut failures = 0;
    for (name, result) in decotime::selftest::run_all() {
        match result {
            Ok(()) => println!("ok   {name}"),
            Err(e) => {
                failures += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failures == 0 {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(Error::InvalidState(format!("{failures} selftest check(s) failed")))
    }
}
