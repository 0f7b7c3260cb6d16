use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use mrflearn::oracle::{run_suite, SUITES};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load_file, writable};
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Sigmoid,
    Linf,
    Anticonc,
    Tail,
    L1,
    Median,
}

impl Suite {
    fn names(self) -> Vec<&'static str> {
        match self {
            Suite::All => SUITES.to_vec(),
            Suite::Sigmoid => vec!["sigmoid"],
            Suite::Linf => vec!["linf"],
            Suite::Anticonc => vec!["anticonc"],
            Suite::Tail => vec!["tail"],
            Suite::L1 => vec!["l1"],
            Suite::Median => vec!["median"],
        }
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Suite to run (default all).
    #[arg(value_enum)]
    suite: Option<Suite>,
    /// Random trials per suite (default 200); the sigmoid grid is fixed.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines report; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    suite: Option<Suite>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyConfig {
    command: &'static str,
    suite: Suite,
    trials: usize,
    seed: u64,
    out: Option<PathBuf>,
}

pub fn run(args: VerifyArgs) -> anyhow::Result<Status> {
    let file: VerifyFile = load_file(args.config.as_deref())?;
    let cfg = VerifyConfig {
        command: "verify",
        suite: args.suite.or(file.suite).unwrap_or(Suite::All),
        trials: args.trials.or(file.trials).unwrap_or(200),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out: args.out.or(file.out).map(writable).transpose()?,
    };
    let mut text = format!("{}\n", json!({ "config": cfg }));
    let mut failed = Vec::new();
    for name in cfg.suite.names() {
        let report = run_suite(name, cfg.trials, cfg.seed)?;
        text.push_str(&report.to_json_lines());
        if !report.all_passed() {
            failed.push(report);
        }
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    for report in &failed {
        let worst = report.worst_record().map(|r| serde_json::to_string(r).expect("serializable record"));
        eprintln!(
            "suite {} failed {}/{} trials; worst trial: {}",
            report.suite,
            report.trials - report.passed,
            report.trials,
            worst.as_deref().unwrap_or("none")
        );
    }
    Ok(if failed.is_empty() { Status::Ok } else { Status::Failed })
}
