use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use superbranch::engine::Mode;
use superbranch::functions::{BoundaryFunction, Window};
use superbranch::harness::{
    self, parse_ansatz, CommandOutput, ExperimentConfig, HarnessError, Overrides, ResolvedConfig, Tolerance,
};
use superbranch::jetcalc::{BranchingRecipe, Rescaling};

const WORKERS_ENV: &str = "SUPERBRANCH_WORKERS";

#[derive(Parser)]
#[command(name = "superbranch", version, about = "Branching-recipe compiler and tagged branching-diffusion solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); defaults to the config, then $SUPERBRANCH_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for CSV/JSON outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the small-β expansion of an elementary branching.
    Expand {
        /// power<m>, reciprocal, dshift+ or dshift-
        #[arg(long)]
        branching: String,
        #[arg(long, default_value = "type1")]
        rescaling: Rescaling,
        #[arg(long, default_value_t = 3)]
        order: i32,
    },
    /// Limiting nonlinearity ψ of a recipe.
    Psi {
        /// Recipe JSON file.
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long, default_value = "type1")]
        rescaling: Rescaling,
        #[arg(long)]
        order: Option<i32>,
    },
    /// Find a recipe whose limiting nonlinearity is the target.
    Compile {
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Comma-separated elementary branchings.
        #[arg(long, value_delimiter = ',')]
        ansatz: Vec<String>,
        #[arg(long, default_value = "type1")]
        rescaling: Rescaling,
    },
    /// Sufficient existence check for a recipe and boundary datum.
    ExistCheck {
        #[arg(long)]
        recipe: PathBuf,
        /// Boundary function as inline JSON or a file path.
        #[arg(long)]
        boundary: String,
        /// Restrict sup-norms to x ± 8√t.
        #[arg(long, requires = "t")]
        x: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    RunMckean(RunArgs),
    RunSuper(RunArgs),
    /// Deterministic reference values for the config's evaluation points.
    Oracle(RunArgs),
    /// Join an estimates CSV with an oracle CSV and report z-scores.
    Compare {
        #[arg(long)]
        mc: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
        /// Take the tolerance block from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 when any row is out of tolerance.
        #[arg(long)]
        assert: bool,
    },
    /// β ladder, extrapolation to β = 0 and oracle comparison.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        assert: bool,
    },
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn read_recipe(path: &Path) -> Result<BranchingRecipe, HarnessError> {
    serde_json::from_str(&read(path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn resolve(args: &RunArgs) -> Result<ResolvedConfig, HarnessError> {
    let config = ExperimentConfig::from_json(&read(&args.config)?)?;
    let env_workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.trim().parse().map_err(|_| HarnessError::Config(format!("{WORKERS_ENV}={v} is not a count")))?),
        Err(_) => None,
    };
    let overrides = Overrides { seed: args.seed, workers: args.workers, out: args.out.clone() };
    config.resolve(&overrides, env_workers)
}

fn write_outputs(dir: Option<&Path>, out: &CommandOutput) -> anyhow::Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for f in &out.files {
        let path = dir.join(&f.name);
        fs::write(&path, &f.contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

enum Outcome {
    Text(String),
    Output(CommandOutput, Option<PathBuf>, bool),
}

fn dispatch(cmd: Command) -> Result<Outcome, HarnessError> {
    Ok(match cmd {
        Command::Expand { branching, rescaling, order } => {
            Outcome::Text(harness::expand_cmd(&branching, rescaling, order)?)
        }
        Command::Psi { recipe, rescaling, order } => {
            Outcome::Text(format!("{}\n", harness::psi_cmd(&read_recipe(&recipe)?, rescaling, order)?))
        }
        Command::Compile { target, ansatz, rescaling } => {
            let recipe = harness::compile_cmd(&target, &parse_ansatz(&ansatz)?, rescaling)?;
            let json = serde_json::to_string_pretty(&recipe).expect("serializable");
            Outcome::Text(format!("{recipe}\n{json}\n"))
        }
        Command::ExistCheck { recipe, boundary, x, t } => {
            let text = if boundary.trim_start().starts_with('{') { boundary } else { read(Path::new(&boundary))? };
            let g: BoundaryFunction =
                serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("boundary: {e}")))?;
            g.validate()?;
            let window = x.zip(t).map(|(x, t)| Window::around(x, t));
            Outcome::Text(harness::exist_check(&read_recipe(&recipe)?, &g, window))
        }
        Command::RunMckean(args) => {
            let cfg = resolve(&args)?;
            Outcome::Output(harness::run(&cfg, Mode::McKean)?, cfg.out, false)
        }
        Command::RunSuper(args) => {
            let cfg = resolve(&args)?;
            Outcome::Output(harness::run(&cfg, Mode::Super)?, cfg.out, false)
        }
        Command::Oracle(args) => {
            let cfg = resolve(&args)?;
            Outcome::Output(harness::oracle(&cfg)?, cfg.out, false)
        }
        Command::Compare { mc, oracle, config, z, abs_tol, rel_tol, out, assert } => {
            let mut tol = match config {
                Some(p) => ExperimentConfig::from_json(&read(&p)?)?.tolerance,
                None => Tolerance::default(),
            };
            tol.z = z.unwrap_or(tol.z);
            tol.abs = abs_tol.unwrap_or(tol.abs);
            tol.rel = rel_tol.unwrap_or(tol.rel);
            Outcome::Output(harness::compare(&read(&mc)?, &read(&oracle)?, &tol)?, out, assert)
        }
        Command::Sweep { run, assert } => {
            let cfg = resolve(&run)?;
            Outcome::Output(harness::sweep(&cfg)?, cfg.out, assert)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Text(s)) => {
            print!("{s}");
            ExitCode::from(harness::EXIT_OK as u8)
        }
        Ok(Outcome::Output(out, dir, assert)) => {
            print!("{}", out.stdout);
            if let Err(e) = write_outputs(dir.as_deref(), &out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(harness::EXIT_CONFIG as u8);
            }
            if assert && out.assertion_failures > 0 {
                eprintln!("error: {} check(s) out of tolerance", out.assertion_failures);
                return ExitCode::from(harness::EXIT_ASSERTION as u8);
            }
            ExitCode::from(harness::EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
