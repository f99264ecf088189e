use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bayesinv::checks::CheckOptions;
use bayesinv::config::{parse_points, RunConfig};
use bayesinv::runner::{cmd_check, cmd_list, cmd_run};

#[derive(Parser)]
#[command(name = "bayesinv", version, about = "Bayesian inverse problems with explicit and implicit priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List problems, priors and samplers.
    List,
    /// Sample a problem's posterior and write samples, summaries and metadata.
    Run(Box<RunArgs>),
    /// Run the fast self-check suite.
    Check {
        #[arg(long, default_value_t = 1e-8, allow_hyphen_values = true)]
        prox_slack: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Problem id or path to a configuration file.
    target: String,
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial points, one per chain: "x0,x1;y0,y1".
    #[arg(long, allow_hyphen_values = true)]
    chains: Option<String>,
    /// External restorator command replacing the prior's restorator.
    #[arg(long)]
    restorator_cmd: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    smoothing: Option<f64>,
    /// Grid or image side length.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Grayscale PGM replacing the synthetic image.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    no_images: bool,
}

fn run_config(a: RunArgs) -> Result<RunConfig, String> {
    let file = if std::path::Path::new(&a.target).is_file() {
        let text = std::fs::read_to_string(&a.target).map_err(|e| format!("cannot read {}: {e}", a.target))?;
        RunConfig::parse(&text).map_err(|e| e.to_string())?
    } else {
        RunConfig {
            problem: a.target.clone(),
            ..RunConfig::default()
        }
    };
    let chains = a
        .chains
        .as_deref()
        .map(parse_points)
        .transpose()
        .map_err(|e| e.to_string())?;
    let flags = RunConfig {
        problem: String::new(),
        prior: a.prior,
        sampler: a.sampler,
        n_samples: a.samples,
        burn_in: a.burn_in,
        thin: a.thin,
        seed: a.seed,
        chains,
        size: a.size,
        noise: a.noise,
        omega: a.omega,
        image: a.image,
        problem_seed: None,
        scale: a.scale,
        step: a.step,
        smoothing: a.smoothing,
        restorator_cmd: a.restorator_cmd,
        out_dir: a.out,
        images: a.no_images.then_some(false),
    };
    Ok(flags.or(file))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => match cmd_list() {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run(args) => {
            let cfg = match run_config(*args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let outcome = cmd_run(&cfg);
            if outcome.exit_code == 0 {
                println!("{}", outcome.message);
            } else {
                eprintln!("error: {}", outcome.message);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Command::Check { prox_slack, seed } => {
            let (table, ok) = cmd_check(&CheckOptions { prox_slack, seed });
            print!("{table}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
