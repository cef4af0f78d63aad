use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dirmod::channel_io::parse_channel_csv;
use dirmod::config::{parse_scenarios, Overrides};
use dirmod::output::{render_csv, render_manifest, summary_table};
use dirmod::verify::{run_verify, VerifyOptions};
use dirmod::{presets, CliError};
use dirmod_core::constellation::{Constellation, SymbolVector};
use dirmod_core::dm_beamformer::{self, DmError};
use dirmod_core::qp_solver::QpSettings;
use dirmod_core::sim_engine::{run_scenario, CurvePoint, ScenarioConfig, SchemeSelect, SimError};

#[derive(Parser)]
#[command(
    name = "dirmod",
    version,
    about = "Directional-modulation beamforming simulator with a zero-forcing benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario (or preset) and write a CSV of curve points.
    Run(RunArgs),
    /// Solve one beamformer instance from a channel file and print the weights.
    Solve(SolveArgs),
    /// Cross-check the QP solver against the enumeration oracle and the
    /// detector against the analytic SER reference.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Dm,
    Zf,
    Both,
}

impl From<SchemeArg> for SchemeSelect {
    fn from(v: SchemeArg) -> Self {
        match v {
            SchemeArg::Dm => SchemeSelect::Dm,
            SchemeArg::Zf => SchemeSelect::Zf,
            SchemeArg::Both => SchemeSelect::Both,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario preset: fig2 (power vs L), fig3 (SER vs L), fig4 (SER vs level).
    #[arg(long, value_parser = ["fig2", "fig3", "fig4"])]
    preset: Option<String>,
    /// Scenario file (key=value lines; a run manifest also works).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<SchemeArg>,
    /// Receive antennas at the legitimate receiver.
    #[arg(long = "K")]
    receive_antennas: Option<usize>,
    /// Transmit antennas.
    #[arg(long = "L")]
    transmit_antennas: Option<usize>,
    /// Eavesdropper antennas.
    #[arg(long = "N")]
    eve_antennas: Option<usize>,
    /// PSK modulation order.
    #[arg(long = "M")]
    modulation_order: Option<usize>,
    /// Required in-phase/quadrature level sqrt(gamma).
    #[arg(long = "gamma-sqrt")]
    gamma_sqrt: Option<f64>,
    /// Benchmark amplification factor.
    #[arg(long)]
    beta: Option<f64>,
    /// Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; DIRMOD_SEED is the fallback when the flag is absent.
    #[arg(long, env = "DIRMOD_SEED")]
    seed: Option<u64>,
    /// Worker thread cap (0 = all cores). Output is identical for any value.
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV path; the manifest lands next to it as <out>.manifest.
    #[arg(long, default_value = "dirmod_run.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Channel CSV: one row per receive antenna, re+imj tokens.
    #[arg(long)]
    channel: PathBuf,
    /// Comma-separated symbol indices, one per receive antenna.
    #[arg(long)]
    symbols: String,
    #[arg(long = "M", default_value_t = 8)]
    modulation_order: usize,
    #[arg(long = "gamma-sqrt", default_value_t = 8.0)]
    gamma_sqrt: f64,
    /// Numerical rank tolerance override.
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Randomized QP instances to cross-validate.
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, env = "DIRMOD_SEED", default_value_t = 0)]
    seed: u64,
    /// Monte Carlo draws per SER case.
    #[arg(long, default_value_t = 200_000)]
    trials: usize,
    /// Maximum allowed |solver - oracle| objective gap, taken relative to
    /// 1 + the smaller objective.
    #[arg(long = "objective-tol", default_value_t = 1e-8)]
    objective_tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Solve(args) => solve_command(args),
        Command::Verify(args) => verify_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("dirmod: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn config_error(err: SimError) -> CliError {
    CliError::Config(err.to_string())
}

fn resolve_scenarios(args: &RunArgs) -> Result<Vec<ScenarioConfig>, CliError> {
    let overrides = Overrides {
        scheme: args.scheme.map(Into::into),
        receive_antennas: args.receive_antennas,
        transmit_antennas: args.transmit_antennas,
        eve_antennas: args.eve_antennas,
        modulation_order: args.modulation_order,
        gamma_sqrt: args.gamma_sqrt,
        beta: args.beta,
        trials: args.trials,
        seed: args.seed,
    };
    let mut scenarios = match (&args.preset, &args.config) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--preset and --config are mutually exclusive".to_string(),
            ))
        }
        (Some(name), None) => {
            let seed = args.seed.unwrap_or(0);
            let trials = args.trials.unwrap_or(presets::DEFAULT_TRIALS);
            presets::by_name(name, seed, trials)
                .ok_or_else(|| CliError::Config(format!("unknown preset: {name}")))?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            parse_scenarios(&text)?
        }
        (None, None) => vec![ScenarioConfig::default()],
    };
    for cfg in &mut scenarios {
        overrides.apply(cfg);
        cfg.validate().map_err(config_error)?;
    }
    Ok(scenarios)
}

fn with_thread_cap<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

fn run_command(args: RunArgs) -> Result<(), CliError> {
    let scenarios = resolve_scenarios(&args)?;
    let expected_rows: usize = scenarios
        .iter()
        .map(|c| c.sweep_points().len() * c.scheme.schemes().len())
        .sum();

    let started = Instant::now();
    let mut points: Vec<CurvePoint> = Vec::with_capacity(expected_rows);
    let mut failure: Option<CliError> = None;
    for cfg in &scenarios {
        let outcome = with_thread_cap(args.threads, || run_scenario(cfg));
        match outcome {
            Ok(mut ps) => points.append(&mut ps),
            Err(err) => {
                failure = Some(CliError::Numerical(err.to_string()));
                break;
            }
        }
    }
    let duration_ms = started.elapsed().as_millis();

    let out_path = args.out.display().to_string();
    if let Some(err) = failure {
        // Keep what we have, flagged, then report the failure.
        fs::write(&args.out, render_csv(&points, Some(expected_rows)))
            .map_err(|e| CliError::Numerical(format!("cannot write {out_path}: {e}")))?;
        return Err(err);
    }
    fs::write(&args.out, render_csv(&points, None))
        .map_err(|e| CliError::Config(format!("cannot write {out_path}: {e}")))?;
    let manifest_path = format!("{out_path}.manifest");
    fs::write(
        &manifest_path,
        render_manifest(&scenarios, &points, duration_ms, &out_path),
    )
    .map_err(|e| CliError::Config(format!("cannot write {manifest_path}: {e}")))?;

    print!("{}", summary_table(&points));
    println!("wrote {} rows to {out_path} (manifest: {manifest_path})", points.len());
    Ok(())
}

fn solve_command(args: SolveArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.channel).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.channel.display()))
    })?;
    let h_r = parse_channel_csv(&text)?;
    let constellation = Constellation::new(args.modulation_order)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let indices = args
        .symbols
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Config(format!("symbols: expected indices, got {}", args.symbols)))?;
    let symbols = SymbolVector::from_indices(&constellation, &indices)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let problem = dm_beamformer::build_problem(&h_r, &symbols, args.gamma_sqrt, args.rank_tol)
        .map_err(|e| match e {
            DmError::Shape(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        })?;
    let solution = dm_beamformer::solve(&problem, &QpSettings::default())
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    println!("{:>8} {:>24} {:>24}", "antenna", "re(w)", "im(w)");
    for (i, w) in solution.w.iter().enumerate() {
        println!("{i:>8} {:>24} {:>24}", w.re, w.im);
    }
    println!("power = {}", solution.power);
    println!("phase_residual = {:e}", solution.phase_residual);
    Ok(())
}

fn verify_command(args: VerifyArgs) -> Result<(), CliError> {
    let opts = VerifyOptions {
        instances: args.instances,
        seed: args.seed,
        ser_trials: args.trials,
        objective_tol: args.objective_tol,
    };
    let report = run_verify(&opts)?;
    println!(
        "qp campaign: {} instances agree with the enumeration oracle ({} infeasible)",
        report.qp_instances, report.qp_infeasible
    );
    println!(
        "ser campaign: {} cases within 3 sigma of the quadrature reference",
        report.ser_cases
    );
    println!("verification passed");
    Ok(())
}
