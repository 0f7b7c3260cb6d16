use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use mrflearn::io::write_samples_annotated;
use mrflearn::samplers::{delta_unbiasedness, exact_distribution, exact_sample, gibbs_sample, GibbsConfig};
use mrflearn::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{existing_file, load_file, required, writable, UsageError};
use crate::model::ModelFile;
use crate::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Exact,
    Gibbs,
}

#[derive(Args)]
pub struct GenArgs {
    /// Model JSON (Ising, polynomial MRF or non-binary).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of samples.
    #[arg(long = "samples", short = 'N')]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    sampler: Option<Sampler>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gibbs sweeps discarded before recording (default 100·n).
    #[arg(long)]
    burn_in: Option<usize>,
    /// Gibbs sweeps between recorded samples (default max(1, n/2)).
    #[arg(long)]
    thinning: Option<usize>,
    /// Sample file to write; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON file with any of the options above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenFile {
    model: Option<PathBuf>,
    samples: Option<usize>,
    sampler: Option<Sampler>,
    seed: Option<u64>,
    burn_in: Option<usize>,
    thinning: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct GenConfig {
    command: &'static str,
    model: PathBuf,
    model_kind: &'static str,
    samples: usize,
    sampler: Sampler,
    seed: u64,
    burn_in: Option<usize>,
    thinning: Option<usize>,
    out: Option<PathBuf>,
}

pub fn run(args: GenArgs) -> anyhow::Result<Status> {
    let file: GenFile = load_file(args.config.as_deref())?;
    let model_path = existing_file(required(args.model, file.model, "model")?, "model file")?;
    let samples = required(args.samples, file.samples, "samples")?;
    let out = args.out.or(file.out).map(writable).transpose()?;
    let sampler = args.sampler.or(file.sampler).unwrap_or(Sampler::Exact);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let model = ModelFile::load(&model_path)?;
    let energy = model.energy();
    let gibbs = match sampler {
        Sampler::Exact => {
            if args.burn_in.or(file.burn_in).is_some() || args.thinning.or(file.thinning).is_some() {
                return Err(UsageError("--burn-in/--thinning only apply to the gibbs sampler".into()).into());
            }
            None
        }
        Sampler::Gibbs => {
            let d = GibbsConfig::default_for(energy.n());
            Some(GibbsConfig {
                burn_in: args.burn_in.or(file.burn_in).unwrap_or(d.burn_in),
                thinning: args.thinning.or(file.thinning).unwrap_or(d.thinning),
            })
        }
    };
    let cfg = GenConfig {
        command: "gen",
        model: model_path,
        model_kind: model.kind(),
        samples,
        sampler,
        seed,
        burn_in: gibbs.map(|g| g.burn_in),
        thinning: gibbs.map(|g| g.thinning),
        out: out.clone(),
    };

    let batch = match gibbs {
        None => exact_sample(&exact_distribution(energy)?, samples, seed),
        Some(g) => gibbs_sample(energy, samples, g, seed)?,
    };
    let delta = match delta_unbiasedness(energy) {
        Ok(d) => json!(d),
        Err(Error::StateSpaceTooLarge { .. }) => json!("n/a"),
        Err(e) => return Err(e.into()),
    };
    let config_json = serde_json::to_value(&cfg)?;
    let comment = format!("config {}", serde_json::to_string(&config_json)?);
    let summary = json!({ "config": config_json, "delta": delta, "written": batch.len() });
    match &out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_samples_annotated(&batch, &[comment], f)?;
            println!("{summary}");
        }
        None => {
            let stdout = std::io::stdout();
            write_samples_annotated(&batch, &[comment], stdout.lock())?;
            eprintln!("{summary}");
        }
    }
    std::io::stdout().flush()?;
    Ok(Status::Ok)
}
