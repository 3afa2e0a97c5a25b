use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unitexp_cli::config::{parse_config, ExperimentConfig, ModelConfig};
use unitexp_cli::experiment::{deviations_from_exact, raman_spec, run_experiment};
use unitexp_cli::output::{render_csv, write_csv};
use unitexp_cli::sweep::run_sweep;
use unitexp_cli::validate::run_validation;
use unitexp_cli::CliError;

#[derive(Parser)]
#[command(name = "unitexp", version, about = "Unitary product expansion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one configuration and write a probability CSV.
    Simulate(RunArgs),
    /// Scan the interaction strength; one CSV per point plus summary.csv.
    Sweep(RunArgs),
    /// Run the built-in invariant suites.
    Validate,
    /// Print the tuned Delta and omega_2 of a Raman configuration.
    TuneRaman(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (JSON).
    #[arg(value_name = "CONFIG", required_unless_present = "config_flag")]
    config: Option<PathBuf>,
    #[arg(long = "config", value_name = "PATH", conflicts_with = "config")]
    config_flag: Option<PathBuf>,
    /// Output path (directory for `sweep`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override grid.n_steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the model's fock_dim.
    #[arg(long)]
    fock_dim: Option<usize>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let path = args.config.as_ref().or(args.config_flag.as_ref()).expect("clap enforces a config path");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(n) = args.steps {
        cfg.grid.n_steps = Some(n as i64);
    }
    if let Some(d) = args.fock_dim {
        *cfg.model.fock_dim_mut() = d;
    }
    if args.steps.is_some() || args.fock_dim.is_some() {
        cfg.validate()?;
    }
    Ok(cfg)
}

fn out_path(args: &RunArgs, cfg: &ExperimentConfig) -> Option<PathBuf> {
    args.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from))
}

fn preamble(cfg: &ExperimentConfig, notes: &[String]) -> Vec<String> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut lines = vec![
        format!("unitexp {}", env!("CARGO_PKG_VERSION")),
        format!("generated unix {stamp}"),
        format!("config {}", serde_json::to_string(cfg).unwrap_or_default()),
        format!(
            "tolerances: substeps {}, probability slack {:e}",
            cfg.grid.substeps,
            unitexp_cli::experiment::PROB_SLACK
        ),
    ];
    lines.extend(notes.iter().cloned());
    lines
}

fn simulate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let ex = run_experiment(&cfg)?;
    let mut notes = ex.notes.clone();
    for (label, dev) in deviations_from_exact(&ex.result, &cfg.targets) {
        notes.push(format!("max |{label} - exact|: {dev:.6e}"));
    }
    let pre = preamble(&cfg, &notes);
    match out_path(args, &cfg) {
        Some(p) => {
            write_csv(&ex.result, &pre, &p)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{}", render_csv(&ex.result, &pre)),
    }
    Ok(())
}

fn sweep(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let dir = out_path(args, &cfg);
    let summary = run_sweep(&cfg, dir.as_deref())?;
    println!("lambda scan over {:?}", summary.lambdas);
    for (label, slope) in summary.slopes() {
        match slope {
            Some(s) => println!("{label}: log-log slope {s:.4}"),
            None => println!("{label}: log-log slope undefined"),
        }
    }
    if let Some(d) = dir {
        eprintln!("wrote {}", Path::new(&d).join("summary.csv").display());
    }
    Ok(())
}

fn tune_raman(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let ModelConfig::Raman(c) = &cfg.model else {
        return Err(CliError::Config("model: tune-raman needs a raman model".into()));
    };
    let spec = raman_spec(c)?;
    println!("Delta = {:.12e}", spec.delta);
    println!("omega_2 = {:.12e}", spec.omega_2);
    println!("predicted exchange frequency = {:.12e}", spec.predicted_frequency());
    println!("detuning residual = {:.3e}", spec.detuning_residual());
    for w in &spec.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn validate() -> Result<bool, CliError> {
    let checks = run_validation();
    for c in &checks {
        println!("{} {:<12} {:<50} {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::TuneRaman(a) => tune_raman(a).map(|_| true),
        Command::Validate => validate(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
