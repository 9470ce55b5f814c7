use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use darkpool::allocator::AlgorithmId;
use darkpool::comparator::hindsight_comparator;
use darkpool::harness::run_suite;
use darkpool::output::{emit_csv, emit_plot};
use darkpool::simulator::{builtin_scenario, parse_scenario, EnvironmentStream, Scenario, BUILTIN_SCENARIOS};

#[derive(Parser)]
#[command(name = "darkpool", version, about = "Censored-feedback venue allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms on a scenario and write aggregate traces.
    Run {
        /// Comma-separated algorithm ids.
        #[arg(long, value_delimiter = ',', required = true)]
        algo: Vec<String>,
        /// Built-in scenario name or path to a scenario config file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "csv,svg")]
        emit: Vec<Emit>,
    },
    /// Inspect built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenariosAction,
    },
    /// Hindsight-optimal fixed assignment for one trial of a scenario.
    Comparator {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Also print the unit-by-unit assignment and the scenario config.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Subcommand)]
enum ScenariosAction {
    List,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Svg,
}

fn load_scenario(name: &str, seed: u64) -> Result<Scenario> {
    if BUILTIN_SCENARIOS.iter().any(|(n, _)| *n == name) {
        return Ok(builtin_scenario(name, seed)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!("`{name}` is neither a built-in scenario nor a readable file (see `darkpool scenarios list`)");
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(algo: &[String], scenario: &str, trials: usize, seed: u64, out: &Path, emit: &[Emit]) -> Result<()> {
    let ids = algo
        .iter()
        .map(|a| a.parse::<AlgorithmId>())
        .collect::<darkpool::Result<Vec<_>>>()?;
    let scenario = load_scenario(scenario, seed)?;
    let traces = run_suite(&ids, &scenario, trials, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let stem = out.join(&scenario.name);
    fs::write(stem.with_extension("cfg"), scenario.to_config())?;
    if emit.contains(&Emit::Csv) {
        emit_csv(&traces, &stem.with_extension("csv"))?;
    }
    if emit.contains(&Emit::Svg) {
        let title = format!("{} ({} trials)", scenario.name, trials);
        emit_plot(&traces, &title, &stem.with_extension("svg"))?;
    }
    let t = scenario.horizon();
    for tr in &traces {
        print!("{:<12} final {:.3} ± {:.3}", tr.algorithm().name(), tr.final_mean(), tr.final_stderr());
        if let Some(r) = tr.mean_regret_at(t) {
            print!("  regret {r:.3}");
        }
        println!();
    }
    Ok(())
}

fn comparator(scenario: &str, seed: u64, trial: u64, dump: bool) -> Result<()> {
    let scenario = load_scenario(scenario, seed)?;
    let trace = match scenario.environment(trial)? {
        EnvironmentStream::Oblivious(tr) => tr,
        EnvironmentStream::Adaptive(_) => bail!("scenario {} is adaptive; no fixed liquidity trace exists", scenario.name),
    };
    let c = hindsight_comparator(&trace)?;
    let volume = trace.volumes().iter().copied().max().unwrap_or(0);
    println!("value {}", c.value);
    let counts = c.counts(trace.venues(), volume);
    let shown: Vec<String> = counts.iter().map(u32::to_string).collect();
    println!("units per venue {}", shown.join(" "));
    if dump {
        for (v, i) in c.assignment.iter().enumerate() {
            println!("unit {} -> venue {}", v + 1, i + 1);
        }
        print!("{}", scenario.to_config());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { algo, scenario, trials, seed, out, emit } => run(&algo, &scenario, trials, seed, &out, &emit),
        Command::Scenarios { action: ScenariosAction::List } => {
            for (name, desc) in BUILTIN_SCENARIOS {
                println!("{name:<20} {desc}");
            }
            Ok(())
        }
        Command::Comparator { scenario, seed, trial, dump } => comparator(&scenario, seed, trial, dump),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("darkpool: {e:#}");
            ExitCode::FAILURE
        }
    }
}
