mod bench;
mod config;
mod gen;
mod learn;
mod model;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::UsageError;

#[derive(Parser)]
#[command(name = "mrflearn", version, about = "Learn Ising models and Markov random fields from samples")]
struct Cli {
    /// Worker threads for trials and per-vertex learners.
    #[arg(long, global = true, env = "MRFLEARN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a model file.
    Gen(gen::GenArgs),
    /// Learn structure or parameters from a sample file.
    Learn(learn::LearnArgs),
    /// Run the brute-force inequality suites.
    Verify(verify::VerifyArgs),
    /// Success rate against sample size for a built-in scenario.
    Bench(bench::BenchArgs),
}

/// Result of a command that ran to completion.
pub enum Status {
    Ok,
    /// The command ran but its checks failed (exit code 1).
    Failed,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let threads = match cli.threads {
        Some(0) => return Err(UsageError("--threads must be at least 1".into()).into()),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Learn(a) => learn::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Bench(a) => bench::run(a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                eprintln!("error: {u}");
                eprintln!("\nFor more information, try '--help'.");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
