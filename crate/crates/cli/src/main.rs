use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nrho_rvd::config::{dimensional_echo, load_scenario, to_normalized_toml};
use nrho_rvd::dynamics::jacobi_constant;
use nrho_rvd::reference::correct_periodic_orbit;
use nrho_rvd::simkit::{monte_carlo, ScenarioConfig};
use nrho_rvd::simkit::scenario::{PreparedScenario, RunOptions};
use nrho_rvd::Error;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  invalid command line
  3  config file unreadable or malformed
  4  config value out of range
  5  run aborted (orbit correction, gain synthesis, simulation)
  6  output could not be written";

#[derive(Parser)]
#[command(name = "nrho-rvd", version, about = "Governed rendezvous on a lunar halo orbit", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only report errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// More logging; repeat for trace output.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Correct the periodic reference orbit and write orbit.json.
    CorrectOrbit(Common),
    /// Run one scenario and write simlog.csv and simlog.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run the nominal controller alone, tracking the Chief directly.
        #[arg(long)]
        no_governor: bool,
    },
    /// Run perturbed copies of the scenario; writes run_NNN/ logs and mc_summary.json.
    MonteCarlo {
        #[command(flatten)]
        common: Common,
        /// Number of runs.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// RNG seed; defaults to the config value.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_governor: bool,
    },
    /// Validate the config and print it in normalized nondimensional form.
    CheckConfig(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Override a config entry, e.g. `--set constraints.alpha="15 deg"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Exit status and message for a failure.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => 3,
            Error::InvalidParameter { .. } => 4,
            Error::Io(_) => 6,
            _ => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 6,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| output_error(path, e))
}

fn to_json(value: &serde_json::Value) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 5,
        message: e.to_string(),
    })
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    Ok(load_scenario(&common.config, &common.overrides)?)
}

fn correct_orbit(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let params = cfg.system;
    let orbit = correct_periodic_orbit(&cfg.orbit.guess(), cfg.orbit.period_guess, &params, &cfg.orbit.correction)
        .map_err(|e| e.in_phase("orbit correction"))?;
    let s = &orbit.initial_state;
    let period_days = orbit.period * params.time_unit_s / 86_400.0;
    let doc = json!({
        "state": s.to_vec6().as_slice(),
        "period": orbit.period,
        "period_days": period_days,
        "residual": orbit.residual,
        "iterations": orbit.iterations,
        "jacobi_constant": jacobi_constant(s, &params.without_sun())?,
        "mu": params.mu,
        "length_unit_km": params.length_unit_km,
        "time_unit_s": params.time_unit_s,
    });
    let path = common.out.join("orbit.json");
    write_file(&path, &to_json(&doc)?)?;
    log::info!(
        "period {period_days:.4} days, residual {:.2e} after {} iterations -> {}",
        orbit.residual,
        orbit.iterations,
        path.display()
    );
    Ok(())
}

fn simulate(common: &Common, no_governor: bool) -> Result<(), Failure> {
    let cfg = load(common)?;
    let governed = cfg.governor.enabled && !no_governor;
    let prepared = PreparedScenario::new(cfg)?;
    let log = prepared.run(&RunOptions {
        governor_enabled: governed,
        perturbation: Default::default(),
    })?;
    log.write_files(&common.out)?;
    let s = &log.summary;
    log::info!(
        "final separation {:.3} m, relative speed {:.4} mm/s, shift {:.4} min, {} violations -> {}",
        s.final_separation_m,
        s.final_relative_speed_mm_s,
        s.final_shift_min,
        s.violation_count,
        common.out.display()
    );
    Ok(())
}

fn run_monte_carlo(common: &Common, n: usize, seed: Option<u64>, no_governor: bool) -> Result<(), Failure> {
    let cfg = load(common)?;
    let seed = seed.unwrap_or(cfg.monte_carlo.seed);
    let governed = cfg.governor.enabled && !no_governor;
    let runs = monte_carlo(&cfg, n, seed, governed)?;
    let mut members = Vec::with_capacity(runs.len());
    for run in &runs {
        let dir = common.out.join(format!("run_{:03}", run.index));
        run.log.write_files(&dir)?;
        members.push(json!({
            "index": run.index,
            "dir": dir.file_name().map(|d| d.to_string_lossy().into_owned()),
            "perturbation": run.perturbation.as_slice(),
            "summary": run.log.summary,
        }));
    }
    let admissible = runs.iter().filter(|r| r.log.summary.violation_count == 0).count();
    let doc = json!({
        "n": n,
        "seed": seed,
        "governor_enabled": governed,
        "position_sigma": cfg.monte_carlo.position_sigma,
        "velocity_sigma": cfg.monte_carlo.velocity_sigma,
        "admissible_runs": admissible,
        "all_admissible": admissible == runs.len(),
        "runs": members,
    });
    let path = common.out.join("mc_summary.json");
    write_file(&path, &to_json(&doc)?)?;
    log::info!("{admissible}/{n} runs admissible -> {}", path.display());
    Ok(())
}

fn check_config(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut text = String::new();
    for line in dimensional_echo(&cfg) {
        text.push_str("# ");
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str(&to_normalized_toml(&cfg)?);
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match &cli.command {
        Command::CorrectOrbit(c) => correct_orbit(c),
        Command::Simulate { common, no_governor } => simulate(common, *no_governor),
        Command::MonteCarlo {
            common,
            n,
            seed,
            no_governor,
        } => run_monte_carlo(common, *n, *seed, *no_governor),
        Command::CheckConfig(c) => check_config(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
