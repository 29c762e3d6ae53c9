//! `rabrl` command-line tool.
//!
//! Each subcommand reads an experiment configuration and writes its artifacts
//! under the configured output directory. Exit status is 0 on success, 2 when
//! the input is at fault and 3 when the computation itself fails.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rabrl_core::experiment::{
    self, entropy_csv, results_csv, weights_csv, ExperimentConfig, ModelMarginals,
};
use rabrl_core::Error;
use rabrl_service::{AppState, SessionConfig};

#[derive(Parser)]
#[command(name = "rabrl", version, about = "Risk-averse reward learning for grid navigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every configured model and write posteriors and selected weights.
    Train {
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
    /// Re-run weight selection on stored posteriors with a new threshold.
    Select {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
    /// Plan every route of one test scenario with every trained model.
    Plan {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
    /// Plan all scenarios and write the result tables and plots.
    Evaluate {
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
    /// Sample demonstrations from the configured generator.
    DemoGen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
    /// Start the local HTTP and WebSocket session server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "experiment.json")]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn run(command: Command) -> rabrl_core::Result<()> {
    match command {
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let out = experiment::run_train(&cfg)?;
            let rows: Vec<ModelMarginals> = out
                .models
                .iter()
                .filter(|m| m.model.is_bayesian())
                .map(|m| ModelMarginals {
                    model: m.model,
                    marginals: m.marginals.clone(),
                    entropies: m.entropies.clone(),
                })
                .collect();
            print!("{}", entropy_csv(&out.feature_names, &rows));
            print!("{}", weights_csv(&experiment::load_weights(&cfg)?));
        }
        Command::Select { epsilon, config } => {
            let cfg = ExperimentConfig::load(config)?;
            print!("{}", weights_csv(&experiment::run_select(&cfg, epsilon)?));
        }
        Command::Plan { scenario, config } => {
            let cfg = ExperimentConfig::load(config)?;
            print!("{}", results_csv(&experiment::run_plan(&cfg, &scenario)?));
        }
        Command::Evaluate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let report = experiment::run_evaluate(&cfg)?;
            print!("{}", results_csv(&report.records));
        }
        Command::DemoGen { seed, config } => {
            let cfg = ExperimentConfig::load(config)?;
            let (path, demos) = experiment::run_demo_gen(&cfg, seed)?;
            println!("wrote {} demonstrations to {}", demos.trajectories.len(), path.display());
        }
        Command::Serve { port, config } => {
            let cfg = ExperimentConfig::load(config)?;
            let state = AppState::new(SessionConfig::from_experiment(&cfg)?)?;
            serve(port, state)?;
        }
    }
    Ok(())
}

fn serve(port: u16, state: AppState) -> rabrl_core::Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let io = |source| Error::Io {
        path: PathBuf::from(addr.to_string()),
        source,
    };
    let rt = tokio::runtime::Runtime::new().map_err(io)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(io)?;
        let bound = listener.local_addr().map_err(io)?;
        eprintln!("listening on http://{bound}");
        rabrl_service::serve_listener(listener, state).await.map_err(io)
    })
}
