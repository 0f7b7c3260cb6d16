//! Built-in recovery scenarios swept over a grid of sample sizes.
//!
//! A trial draws `N` exact samples from the scenario's planted model, runs
//! the matching learner and counts as a success when the learned edge set
//! equals the planted one. Learner errors (too few samples for the median
//! block, a filter rate below its floor) count as failures.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use mrflearn::ising::{ising_learn, ising_structure, IsingLearnConfig};
use mrflearn::mrf::{mrf_structure, MrfLearnConfig};
use mrflearn::nonbinary::{nonbinary_structure, NonBinaryConfig};
use mrflearn::rng::derive_seed;
use mrflearn::samplers::{exact_distribution, exact_sample, parity_mrf, EnergyModel, ExactDistribution};
use mrflearn::{EdgeSet, IsingModel, MrfModel, MultilinearPoly, NonBinaryIsing, SampleBatch};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load_file, required, writable, write_json, UsageError};
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    SingleEdge,
    #[value(name = "4-cycle")]
    #[serde(rename = "4-cycle")]
    FourCycle,
    PlantedTriangle,
    Parity,
    NonbinaryEdge,
}

impl ScenarioName {
    fn label(self) -> &'static str {
        match self {
            ScenarioName::SingleEdge => "single-edge",
            ScenarioName::FourCycle => "4-cycle",
            ScenarioName::PlantedTriangle => "planted-triangle",
            ScenarioName::Parity => "parity",
            ScenarioName::NonbinaryEdge => "nonbinary-edge",
        }
    }
}

enum Learner {
    Ising,
    Mrf,
    NonBinary,
}

struct Scenario {
    n: usize,
    t: usize,
    lambda: f64,
    eta: f64,
    truth: EdgeSet,
    dist: ExactDistribution,
    learner: Learner,
}

fn ising(model: IsingModel, lambda: f64, eta: f64) -> anyhow::Result<Scenario> {
    Ok(Scenario {
        n: model.n,
        t: 2,
        lambda,
        eta,
        truth: model.graph(),
        dist: exact_distribution(&model)?,
        learner: Learner::Ising,
    })
}

fn mrf(model: MrfModel, t: usize, lambda: f64, eta: f64, truth: EdgeSet) -> anyhow::Result<Scenario> {
    Ok(Scenario {
        n: model.n(),
        t,
        lambda,
        eta,
        truth,
        dist: exact_distribution(&model)?,
        learner: Learner::Mrf,
    })
}

fn build(name: ScenarioName, t: Option<usize>) -> anyhow::Result<Scenario> {
    let fixed_degree = matches!(name, ScenarioName::SingleEdge | ScenarioName::FourCycle | ScenarioName::NonbinaryEdge);
    if fixed_degree && t.is_some_and(|t| t != 2) {
        return Err(UsageError(format!("scenario {} is pairwise; --t must be 2", name.label())).into());
    }
    if t == Some(0) {
        return Err(UsageError("--t must be at least 1".into()).into());
    }
    match name {
        ScenarioName::SingleEdge => ising(IsingModel::from_edges(4, &[(0, 1, 0.4)], vec![0.0; 4])?, 1.0, 0.3),
        ScenarioName::FourCycle => {
            let edges = [(0, 1, 0.4), (1, 2, -0.4), (2, 3, 0.4), (0, 3, -0.4)];
            ising(IsingModel::from_edges(6, &edges, vec![0.0; 6])?, 1.0, 0.3)
        }
        ScenarioName::PlantedTriangle => {
            let m = MrfModel::new(MultilinearPoly::from_terms(6, 3, [(vec![0, 1, 2], 0.6)])?)?;
            let truth = m.graph();
            mrf(m, t.unwrap_or(3), 1.0, 0.3, truth)
        }
        ScenarioName::Parity => {
            let m = parity_mrf(4, &[0, 1], 0.6)?;
            let truth = m.graph();
            mrf(m, t.unwrap_or(3), 0.6, 0.6, truth)
        }
        ScenarioName::NonbinaryEdge => {
            let mut m = NonBinaryIsing::zero(4, 3)?;
            let w = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
            m.set_pair(0, 1, w.iter().map(|r| r.iter().map(|v| 0.3 * v).collect()).collect())?;
            Ok(Scenario {
                n: m.n(),
                t: 2,
                lambda: m.width(),
                eta: 0.5,
                truth: m.graph(),
                dist: exact_distribution(&m)?,
                learner: Learner::NonBinary,
            })
        }
    }
}

impl Scenario {
    fn learn(&self, s: &SampleBatch) -> Option<EdgeSet> {
        match self.learner {
            Learner::Ising => {
                let est = ising_learn(s, &IsingLearnConfig::new(self.lambda, 0.1, 0.1)).ok()?;
                Some(ising_structure(&est, self.eta))
            }
            Learner::Mrf => {
                let cfg = MrfLearnConfig::new(self.t, self.lambda, self.eta, 0.1);
                mrf_structure(s, &cfg).ok().map(|st| st.edges)
            }
            Learner::NonBinary => nonbinary_structure(s, &NonBinaryConfig::new(self.lambda, self.eta, 0.1))
                .ok()
                .map(|st| st.edges),
        }
    }

    fn successes(&self, samples: usize, trials: usize, seed: u64) -> usize {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let batch = exact_sample(&self.dist, samples, derive_seed(seed, trial as u64));
                self.learn(&batch).is_some_and(|e| e == self.truth)
            })
            .filter(|ok| *ok)
            .count()
    }
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    scenario: Option<ScenarioName>,
    /// Comma-separated sample sizes (default 1000,10000,100000).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Trials per grid point (default 10).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Learner degree for the planted-triangle and parity scenarios.
    #[arg(long)]
    t: Option<usize>,
    /// Report wall_ms as 0 so the CSV is byte-for-byte reproducible.
    #[arg(long)]
    deterministic: bool,
    /// CSV to write; standard output when omitted. The resolved config goes
    /// to `<out>.config.json`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    scenario: Option<ScenarioName>,
    grid: Option<Vec<usize>>,
    trials: Option<usize>,
    seed: Option<u64>,
    t: Option<usize>,
    deterministic: Option<bool>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchConfig {
    command: &'static str,
    scenario: ScenarioName,
    grid: Vec<usize>,
    trials: usize,
    seed: u64,
    t: Option<usize>,
    deterministic: bool,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row {
    scenario: &'static str,
    n: usize,
    t: usize,
    lambda: f64,
    eta: f64,
    #[serde(rename = "N")]
    samples: usize,
    trials: usize,
    successes: usize,
    wall_ms: u128,
}

const HEADER: [&str; 9] = ["scenario", "n", "t", "lambda", "eta", "N", "trials", "successes", "wall_ms"];

pub fn run(args: BenchArgs) -> anyhow::Result<Status> {
    let file: BenchFile = load_file(args.config.as_deref())?;
    let cfg = BenchConfig {
        command: "bench",
        scenario: required(args.scenario, file.scenario, "scenario")?,
        grid: args.grid.or(file.grid).unwrap_or_else(|| vec![1_000, 10_000, 100_000]),
        trials: args.trials.or(file.trials).unwrap_or(10),
        seed: args.seed.or(file.seed).unwrap_or(0),
        t: args.t.or(file.t),
        deterministic: args.deterministic || file.deterministic.unwrap_or(false),
        out: args.out.or(file.out).map(writable).transpose()?,
    };
    let scenario = build(cfg.scenario, cfg.t)?;

    let mut rows = Vec::new();
    if cfg.trials > 0 {
        for (g, &samples) in cfg.grid.iter().enumerate() {
            let start = Instant::now();
            let successes = scenario.successes(samples, cfg.trials, derive_seed(cfg.seed, g as u64));
            let wall_ms = if cfg.deterministic { 0 } else { start.elapsed().as_millis() };
            rows.push(Row {
                scenario: cfg.scenario.label(),
                n: scenario.n,
                t: scenario.t,
                lambda: scenario.lambda,
                eta: scenario.eta,
                samples,
                trials: cfg.trials,
                successes,
                wall_ms,
            });
        }
    }

    let sink: Box<dyn std::io::Write> = match &cfg.out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(HEADER)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let config = json!({ "config": cfg });
    match &cfg.out {
        Some(path) => {
            let mut side = path.clone().into_os_string();
            side.push(".config.json");
            write_json(&PathBuf::from(side), &config)?;
        }
        None => eprintln!("{config}"),
    }
    Ok(Status::Ok)
}
