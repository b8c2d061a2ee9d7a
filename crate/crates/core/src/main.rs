use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use swarmconn::config::load_config;
use swarmconn::harness::{initial_positions, replay, run_to_dir};
use swarmconn::oracle::{build_graph, fiedler, is_connected};

/// Connectivity-maintenance swarm simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write trace.bin with every delivered message.
        #[arg(long)]
        dump_trace: bool,
    },
    /// Print λ₂ and the Fiedler vector of the initial layout.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run a stored run directory and check the outputs are byte-identical.
    Replay {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SWARMCONN_LOG", "info"))
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> swarmconn::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            dump_trace,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            info!(
                "running {} robots for {} ticks (seed {})",
                cfg.n, cfg.ticks, cfg.seed
            );
            let summary = run_to_dir(&cfg, &out, dump_trace)?;
            print!("{}", summary.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let positions = initial_positions(&cfg)?;
            let g = build_graph(&positions, &cfg.radio, &cfg.weights)?;
            println!("connected = {}", is_connected(&g));
            if g.n() >= 2 {
                let s = fiedler(&g)?;
                println!("lambda2 = {}", s.lambda2);
                let entries: Vec<String> = s.fiedler_vector.iter().map(|v| v.to_string()).collect();
                println!("fiedler = [{}]", entries.join(", "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { trace } => {
            let report = replay(&trace)?;
            for (name, same) in &report.files {
                println!("{name}: {}", if *same { "identical" } else { "DIFFERS" });
            }
            Ok(if report.identical() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
