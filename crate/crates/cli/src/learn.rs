use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, ValueEnum};
use mrflearn::ising::{ising_learn, ising_structure, IsingLearnConfig};
use mrflearn::mrf::{mrf_learn_parameters, mrf_structure, MrfLearnConfig};
use mrflearn::nonbinary::{nonbinary_structure, NonBinaryConfig};
use mrflearn::sparsitron::SampleBudget;
use mrflearn::{Alphabet, EdgeSet, IsingModel, MultilinearPoly, SampleBatch};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{check_positive, existing_file, load_file, required, writable, write_json, UsageError};
use crate::model::ModelFile;
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ising,
    Mrf,
    Nonbinary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Structure,
    Parameters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// Split every available sample into holdout and update steps.
    Available,
    /// Demand the worst-case counts and fail on a shortfall.
    Derived,
}

#[derive(Args)]
pub struct LearnArgs {
    #[arg(value_enum)]
    task: Option<Task>,
    /// Sample file written by `gen`.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Width bound.
    #[arg(long)]
    lambda: Option<f64>,
    /// Identifiability threshold; edges are kept above eta/2.
    #[arg(long)]
    eta: Option<f64>,
    /// Target accuracy (default 0.1).
    #[arg(long)]
    eps: Option<f64>,
    /// Failure probability (default 0.1).
    #[arg(long)]
    rho: Option<f64>,
    /// Degree of the MRF task (default 2).
    #[arg(long)]
    t: Option<usize>,
    /// Odd size of the median block for MRF structure learning.
    #[arg(long)]
    median_count: Option<usize>,
    /// MRF task only (default structure).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    budget: Option<Budget>,
    /// Ground-truth model for metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Estimate JSON to write.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Metrics JSON to write (needs --truth).
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LearnFile {
    task: Option<Task>,
    samples: Option<PathBuf>,
    lambda: Option<f64>,
    eta: Option<f64>,
    eps: Option<f64>,
    rho: Option<f64>,
    t: Option<usize>,
    median_count: Option<usize>,
    mode: Option<Mode>,
    budget: Option<Budget>,
    truth: Option<PathBuf>,
    out: Option<PathBuf>,
    metrics: Option<PathBuf>,
}

#[derive(Serialize)]
struct LearnConfig {
    command: &'static str,
    task: Task,
    samples: PathBuf,
    lambda: f64,
    eta: Option<f64>,
    eps: f64,
    rho: f64,
    t: Option<usize>,
    median_count: Option<usize>,
    mode: Option<Mode>,
    budget: Budget,
    truth: Option<PathBuf>,
    out: Option<PathBuf>,
    metrics: Option<PathBuf>,
}

fn resolve(args: LearnArgs) -> anyhow::Result<LearnConfig> {
    let file: LearnFile = load_file(args.config.as_deref())?;
    let task = required(args.task, file.task, "task")?;
    let samples = existing_file(required(args.samples, file.samples, "samples")?, "sample file")?;
    let lambda = required(args.lambda, file.lambda, "lambda")?;
    check_positive(lambda, "lambda")?;
    let eta = args.eta.or(file.eta);
    let eps = args.eps.or(file.eps).unwrap_or(0.1);
    let rho = args.rho.or(file.rho).unwrap_or(0.1);
    for (v, name) in [(eps, "eps"), (rho, "rho")].into_iter().chain(eta.map(|e| (e, "eta"))) {
        check_positive(v, name)?;
    }
    let mut t = args.t.or(file.t);
    let mut mode = args.mode.or(file.mode);
    let median_count = args.median_count.or(file.median_count);
    match task {
        Task::Mrf => {
            t = Some(t.unwrap_or(2));
            mode = Some(mode.unwrap_or(Mode::Structure));
        }
        _ => {
            if t.is_some() || mode.is_some() || median_count.is_some() {
                return Err(UsageError("--t, --mode and --median-count apply to the mrf task only".into()).into());
            }
        }
    }
    let needs_eta = task == Task::Nonbinary || mode == Some(Mode::Structure);
    if needs_eta && eta.is_none() {
        return Err(UsageError("the argument '--eta' is required for structure learning".into()).into());
    }
    let metrics = args.metrics.or(file.metrics).map(writable).transpose()?;
    let truth = args.truth.or(file.truth).map(|p| existing_file(p, "truth model")).transpose()?;
    if metrics.is_some() && truth.is_none() {
        return Err(UsageError("--metrics needs --truth".into()).into());
    }
    Ok(LearnConfig {
        command: "learn",
        task,
        samples,
        lambda,
        eta,
        eps,
        rho,
        t,
        median_count,
        mode,
        budget: args.budget.or(file.budget).unwrap_or(Budget::Available),
        truth,
        out: args.out.or(file.out).map(writable).transpose()?,
        metrics,
    })
}

fn edge_list(e: &EdgeSet) -> Value {
    json!(e.iter().map(|(i, j)| [i, j]).collect::<Vec<_>>())
}

fn structure_metrics(found: &EdgeSet, truth: &EdgeSet) -> Value {
    json!({ "precision": found.precision(truth), "recall": found.recall(truth) })
}

/// `(ℓ∞, ℓ₁)` distance between two polynomials, ignoring constants.
fn poly_gaps(truth: &MultilinearPoly, est: &MultilinearPoly) -> anyhow::Result<(f64, f64)> {
    let diff = truth.without_constant().sub(&est.without_constant())?;
    let linf = diff.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    Ok((linf, diff.l1_norm()))
}

fn ising_gaps(truth: &IsingModel, a: &[Vec<f64>], theta: &[f64]) -> (f64, f64) {
    let (mut linf, mut l1) = (0.0f64, 0.0);
    for i in 0..truth.n {
        let g = (theta[i] - truth.theta[i]).abs();
        linf = linf.max(g);
        l1 += g;
        for j in i + 1..truth.n {
            let g = (a[i][j] - truth.a[i][j]).abs();
            linf = linf.max(g);
            l1 += g;
        }
    }
    (linf, l1)
}

struct Learned {
    estimate: Value,
    edges: Option<EdgeSet>,
    metrics: Option<Value>,
}

fn learn_ising(cfg: &LearnConfig, budget: SampleBudget, s: &SampleBatch, truth: Option<&ModelFile>) -> anyhow::Result<Learned> {
    let lcfg = IsingLearnConfig::new(cfg.lambda, cfg.eps, cfg.rho).with_budget(budget);
    let est = ising_learn(s, &lcfg)?;
    let edges = cfg.eta.map(|eta| ising_structure(&est, eta));
    let metrics = match truth {
        None => None,
        Some(ModelFile::Ising(m)) => {
            if m.n != s.n {
                bail!("truth model has {} variables but the samples have {}", m.n, s.n);
            }
            let (linf, l1) = ising_gaps(m, &est.a, &est.theta);
            let mut v = json!({ "linf": linf, "l1": l1 });
            if let Some(e) = &edges {
                v["structure"] = structure_metrics(e, &m.graph());
            }
            Some(v)
        }
        Some(other) => bail!("ising task needs an Ising truth model, got {}", other.kind()),
    };
    Ok(Learned {
        estimate: serde_json::to_value(&est)?,
        edges,
        metrics,
    })
}

fn learn_mrf(cfg: &LearnConfig, budget: SampleBudget, s: &SampleBatch, truth: Option<&ModelFile>) -> anyhow::Result<Learned> {
    let t = cfg.t.unwrap_or(2);
    let mut mcfg = MrfLearnConfig::new(t, cfg.lambda, cfg.eta.unwrap_or(1.0), cfg.rho);
    mcfg.eps = cfg.eps;
    mcfg.median_count = cfg.median_count;
    mcfg.budget = budget;
    let truth_poly = match truth {
        None => None,
        Some(m) => match m.as_mrf() {
            Some(p) => Some(p),
            None => bail!("mrf task needs a binary truth model"),
        },
    };
    if cfg.mode == Some(Mode::Parameters) {
        let p = mrf_learn_parameters(s, &mcfg)?;
        let metrics = match &truth_poly {
            Some(m) => {
                let (linf, l1) = poly_gaps(m.psi(), &p.q)?;
                Some(json!({ "linf": linf, "l1": l1 }))
            }
            None => None,
        };
        return Ok(Learned {
            estimate: serde_json::to_value(&p)?,
            edges: None,
            metrics,
        });
    }
    let st = mrf_structure(s, &mcfg)?;
    let metrics = truth_poly.map(|m| json!({ "structure": structure_metrics(&st.edges, &m.graph()) }));
    Ok(Learned {
        estimate: serde_json::to_value(&st)?,
        edges: Some(st.edges),
        metrics,
    })
}

fn learn_nonbinary(cfg: &LearnConfig, budget: SampleBudget, s: &SampleBatch, truth: Option<&ModelFile>) -> anyhow::Result<Learned> {
    let mut ncfg = NonBinaryConfig::new(cfg.lambda, cfg.eta.unwrap_or(1.0), cfg.rho);
    ncfg.budget = budget;
    let st = nonbinary_structure(s, &ncfg)?;
    let metrics = match truth {
        None => None,
        Some(ModelFile::NonBinary(m)) => {
            if m.n != s.n || s.alphabet != Alphabet::Symbols(m.k as u8) {
                bail!("truth model shape does not match the samples");
            }
            let c = m.center();
            let (mut linf, mut l1) = (0.0f64, 0.0);
            for i in 0..m.n {
                for j in i + 1..m.n {
                    let want = c.pair(i, j);
                    for (ra, rb) in st.estimates[i][j].iter().zip(&want) {
                        for (x, y) in ra.iter().zip(rb) {
                            linf = linf.max((x - y).abs());
                            l1 += (x - y).abs();
                        }
                    }
                }
            }
            Some(json!({ "linf": linf, "l1": l1, "structure": structure_metrics(&st.edges, &m.graph()) }))
        }
        Some(other) => bail!("nonbinary task needs a non-binary truth model, got {}", other.kind()),
    };
    Ok(Learned {
        estimate: serde_json::to_value(&st)?,
        edges: Some(st.edges),
        metrics,
    })
}

pub fn run(args: LearnArgs) -> anyhow::Result<Status> {
    let cfg = resolve(args)?;
    let truth = cfg.truth.as_deref().map(ModelFile::load).transpose()?;
    let samples = mrflearn::io::load_samples(&cfg.samples)?;
    let budget = match cfg.budget {
        Budget::Available => SampleBudget::default(),
        Budget::Derived => SampleBudget::Derived,
    };
    let learned = match cfg.task {
        Task::Ising => learn_ising(&cfg, budget, &samples, truth.as_ref())?,
        Task::Mrf => learn_mrf(&cfg, budget, &samples, truth.as_ref())?,
        Task::Nonbinary => learn_nonbinary(&cfg, budget, &samples, truth.as_ref())?,
    };
    let config = serde_json::to_value(&cfg)?;
    let edges = learned.edges.as_ref().map_or(Value::Null, edge_list);
    if let Some(path) = &cfg.out {
        let doc = json!({
            "config": config,
            "task": cfg.task,
            "estimate": learned.estimate,
            "edges": edges,
        });
        write_json(path, &doc)?;
    }
    let metrics = learned.metrics.unwrap_or(Value::Null);
    if let Some(path) = &cfg.metrics {
        write_json(path, &json!({ "config": config, "metrics": metrics }))?;
    }
    println!("{}", json!({ "config": config, "edges": edges, "metrics": metrics }));
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_gaps_skip_constants() {
        let a = MultilinearPoly::from_terms(3, 2, [(vec![], 4.0), (vec![0, 1], 0.5), (vec![2], -0.2)]).unwrap();
        let b = MultilinearPoly::from_terms(3, 2, [(vec![0, 1], 0.4), (vec![1, 2], 0.1)]).unwrap();
        let (linf, l1) = poly_gaps(&a, &b).unwrap();
        assert!((linf - 0.2).abs() < 1e-15);
        assert!((l1 - 0.4).abs() < 1e-15);
    }
}
