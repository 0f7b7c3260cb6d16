//! Multiplicative-weights learner for sparse generalized linear models.
//!
//! The learner assumes nonnegative target weights summing to `lambda`.
//! [`double_features`] and [`learn_signed`] lift an arbitrary weight vector
//! with `‖w‖₁ ≤ lambda` into that form. Weights live in log space and are
//! normalized by max-subtraction, so long runs never underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::sigmoid;

/// Monotone 1-Lipschitz map into `[0, 1]`.
pub type Transfer = fn(f64) -> f64;

#[derive(Clone, Copy, Debug)]
pub struct SparsitronConfig {
    pub lambda: f64,
    /// Number of update steps `T`.
    pub steps: usize,
    /// Number of holdout examples `M`.
    pub holdout: usize,
    pub transfer: Transfer,
    /// Evaluate every `candidate_stride`-th iterate on the holdout (the last
    /// iterate is always evaluated). A stride of 1 evaluates all of them.
    pub candidate_stride: usize,
}

impl SparsitronConfig {
    pub fn new(lambda: f64, steps: usize, holdout: usize) -> Self {
        SparsitronConfig {
            lambda,
            steps,
            holdout,
            transfer: sigmoid,
            candidate_stride: 1,
        }
    }

    /// Step and holdout counts for risk `eps` with failure probability
    /// `delta` over `d` (expanded) coordinates, using the default constant 8.
    pub fn from_accuracy(lambda: f64, d: usize, eps: f64, delta: f64) -> Result<Self> {
        let (t, m) = derived_counts(lambda, d, eps, delta, DEFAULT_COUNT_CONSTANT)?;
        Ok(Self::new(lambda, t, m))
    }

    pub fn with_transfer(mut self, transfer: Transfer) -> Self {
        self.transfer = transfer;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.candidate_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: self.lambda,
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.holdout == 0 {
            return Err(Error::InvalidConfig("holdout must be at least 1".into()));
        }
        if self.candidate_stride == 0 {
            return Err(Error::InvalidConfig("candidate stride must be at least 1".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_COUNT_CONSTANT: f64 = 8.0;

/// `T = ceil(c·λ²·ln(2d/δ)/ε²)` and `M = ceil(c·ln(2T/δ)/ε²)`.
pub fn derived_counts(lambda: f64, d: usize, eps: f64, delta: f64, c: f64) -> Result<(usize, usize)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange { what: "eps", value: eps });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    let d = d.max(1) as f64;
    let t = (c * lambda * lambda * (2.0 * d / delta).ln() / (eps * eps)).ceil().max(1.0);
    let m = (c * (2.0 * t / delta).ln() / (eps * eps)).ceil().max(1.0);
    let clamp = |v: f64| if v >= usize::MAX as f64 { usize::MAX } else { v as usize };
    Ok((clamp(t), clamp(m)))
}

/// How a learner turns an accuracy target and a finite sample buffer into
/// step and holdout counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SampleBudget {
    /// The worst-case counts from [`derived_counts`]; a shortfall is an error.
    Derived,
    /// Use every available example: a holdout of `holdout_fraction` of them
    /// (capped at `max_holdout`) and the rest as update steps, evaluating at
    /// most `max_candidates` iterates.
    Available {
        holdout_fraction: f64,
        max_holdout: usize,
        max_candidates: usize,
    },
}

impl Default for SampleBudget {
    fn default() -> Self {
        SampleBudget::Available {
            holdout_fraction: 0.1,
            max_holdout: 200_000,
            max_candidates: 64,
        }
    }
}

impl SampleBudget {
    /// Resolves a configuration for `available` examples of dimension `d`.
    pub fn plan(
        &self,
        lambda: f64,
        d: usize,
        eps: f64,
        delta: f64,
        available: usize,
    ) -> Result<SparsitronConfig> {
        match *self {
            SampleBudget::Derived => {
                let (t, m) = derived_counts(lambda, d, eps, delta, DEFAULT_COUNT_CONSTANT)?;
                let required = t.saturating_add(m);
                if required > available {
                    return Err(Error::InsufficientSamples {
                        required,
                        available,
                    });
                }
                Ok(SparsitronConfig::new(lambda, t, m))
            }
            SampleBudget::Available {
                holdout_fraction,
                max_holdout,
                max_candidates,
            } => {
                if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
                    return Err(Error::OutOfRange {
                        what: "holdout_fraction",
                        value: holdout_fraction,
                    });
                }
                if available < 2 {
                    return Err(Error::InsufficientSamples {
                        required: 2,
                        available,
                    });
                }
                let m = ((available as f64 * holdout_fraction) as usize)
                    .clamp(1, max_holdout.max(1))
                    .min(available - 1);
                let t = available - m;
                let stride = t.div_ceil(max_candidates.max(1)).max(1);
                Ok(SparsitronConfig::new(lambda, t, m).with_stride(stride))
            }
        }
    }
}

/// `(x, -x, 0)`: nonnegative weights over this vector can express any signed
/// weight vector of smaller ℓ₁ norm; the last coordinate soaks up the slack.
pub fn double_features(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * x.len() + 1);
    double_into(x, &mut out)?;
    Ok(out)
}

fn double_into(x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    for &v in x {
        if v.is_nan() {
            return Err(Error::NotFinite("feature vector"));
        }
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                what: "feature",
                value: v,
            });
        }
    }
    out.extend_from_slice(x);
    out.extend(x.iter().map(|v| -v));
    out.push(0.0);
    Ok(())
}

/// Hedge weights over `d` experts, stored as logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsitronState {
    pub d: usize,
    pub beta: f64,
    pub step: usize,
    pub log_weights: Vec<f64>,
}

impl SparsitronState {
    /// Uniform weights `1/d` and `β = 1/(1+√(ln d / T))`.
    pub fn new(d: usize, steps: usize) -> Self {
        let beta = 1.0 / (1.0 + ((d.max(1) as f64).ln() / steps.max(1) as f64).sqrt());
        Self::with_beta(d, beta)
    }

    pub fn with_beta(d: usize, beta: f64) -> Self {
        let w0 = -(d.max(1) as f64).ln();
        SparsitronState {
            d,
            beta,
            step: 0,
            log_weights: vec![w0; d],
        }
    }

    /// Normalized weights `p = w / ‖w‖₁`.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.d);
        self.probabilities_into(&mut p);
        p
    }

    pub fn probabilities_into(&self, p: &mut Vec<f64>) {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        p.clear();
        p.extend(self.log_weights.iter().map(|l| (l - max).exp()));
        let total: f64 = p.iter().sum();
        for v in p.iter_mut() {
            *v /= total;
        }
    }

    /// Multiplies each weight by `β^{loss_i}`.
    pub fn apply_loss(&mut self, loss: &[f64]) -> Result<()> {
        if loss.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: loss.len(),
            });
        }
        let lb = self.beta.ln();
        for (l, x) in self.log_weights.iter_mut().zip(loss) {
            *l += x * lb;
        }
        self.step += 1;
        Ok(())
    }

    /// One learner step on `(x, y)`. Returns the iterate `p` that was used
    /// to predict (the candidate for this step).
    pub fn update(&mut self, x: &[f64], y: f64, lambda: f64, transfer: Transfer) -> Result<Vec<f64>> {
        let mut p = Vec::with_capacity(self.d);
        self.update_into(x, y, lambda, transfer, &mut p)?;
        Ok(p)
    }

    fn update_into(
        &mut self,
        x: &[f64],
        y: f64,
        lambda: f64,
        transfer: Transfer,
        p: &mut Vec<f64>,
    ) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::OutOfRange { what: "label", value: y });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::NotFinite("feature vector"));
        }
        self.probabilities_into(p);
        let z: f64 = lambda * p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let gap = transfer(z) - y;
        let lb = self.beta.ln();
        for (l, xi) in self.log_weights.iter_mut().zip(x) {
            *l += 0.5 * (1.0 + gap * xi) * lb;
        }
        self.step += 1;
        Ok(())
    }
}

/// Loss vector `½(1 + (u(λ p·x) − y)·x)`.
pub fn loss_vector(p: &[f64], x: &[f64], y: f64, lambda: f64, transfer: Transfer) -> Vec<f64> {
    let z: f64 = lambda * p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let gap = transfer(z) - y;
    x.iter().map(|xi| 0.5 * (1.0 + gap * xi)).collect()
}

/// Single step with the horizon check against `cfg.steps`.
pub fn sparsitron_step(
    state: &mut SparsitronState,
    x: &[f64],
    y: f64,
    cfg: &SparsitronConfig,
) -> Result<Vec<f64>> {
    if state.step >= cfg.steps {
        return Err(Error::InvalidConfig(format!(
            "learner already took all {} steps",
            cfg.steps
        )));
    }
    state.update(x, y, cfg.lambda, cfg.transfer)
}

/// Mean of `(u(v·a) − b)²` over the holdout. `v` is the scaled candidate.
pub fn empirical_risk(v: &[f64], holdout: &[(Vec<f64>, f64)], transfer: Transfer) -> f64 {
    if holdout.is_empty() {
        return 0.0;
    }
    let total: f64 = holdout
        .iter()
        .map(|(a, b)| {
            let z: f64 = v.iter().zip(a).map(|(x, y)| x * y).sum();
            let g = transfer(z) - b;
            g * g
        })
        .sum();
    total / holdout.len() as f64
}

/// Flat holdout storage: `m` rows of `d` features plus labels.
struct Holdout {
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Holdout {
    fn risk(&self, v: &[f64], transfer: Transfer) -> f64 {
        let mut total = 0.0;
        for (row, b) in self.features.chunks_exact(self.d).zip(&self.labels) {
            let z: f64 = v.iter().zip(row).map(|(x, y)| x * y).sum();
            let g = transfer(z) - b;
            total += g * g;
        }
        total / self.labels.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsitronOutput {
    /// Returned weight vector `λ·p^j`.
    pub v: Vec<f64>,
    /// Holdout risk of `v`.
    pub risk: f64,
    /// 1-based index of the selected iterate.
    pub selected_step: usize,
    pub steps: usize,
    pub holdout: usize,
}

/// Runs the learner on a stream of `(x, y)` pairs of dimension `d`.
///
/// The first `cfg.holdout` examples form the holdout; the next `cfg.steps`
/// drive the updates. Each evaluated iterate is scored on the holdout as it
/// is produced, and the lowest-risk one wins (earliest on ties).
pub fn sparsitron_learn<I>(stream: I, d: usize, cfg: &SparsitronConfig) -> Result<SparsitronOutput>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    let state = SparsitronState::new(d, cfg.steps);
    learn_from_state(stream, state, cfg)
}

pub(crate) fn learn_from_state<I>(
    stream: I,
    mut state: SparsitronState,
    cfg: &SparsitronConfig,
) -> Result<SparsitronOutput>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    cfg.validate()?;
    let d = state.d;
    let required = cfg.steps + cfg.holdout;
    let mut it = stream.into_iter();
    let mut consumed = 0usize;
    let mut holdout = Holdout {
        d,
        features: Vec::with_capacity(cfg.holdout.saturating_mul(d).min(1 << 26)),
        labels: Vec::with_capacity(cfg.holdout.min(1 << 22)),
    };
    for _ in 0..cfg.holdout {
        let (x, y) = it.next().ok_or(Error::StreamExhausted { consumed, required })?;
        consumed += 1;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        holdout.features.extend_from_slice(&x);
        holdout.labels.push(y);
    }

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut p = Vec::with_capacity(d);
    for t in 1..=cfg.steps {
        let (x, y) = it.next().ok_or(Error::StreamExhausted { consumed, required })?;
        consumed += 1;
        state.update_into(&x, y, cfg.lambda, cfg.transfer, &mut p)?;
        if (t - 1) % cfg.candidate_stride == 0 || t == cfg.steps {
            let v: Vec<f64> = p.iter().map(|pi| cfg.lambda * pi).collect();
            let r = holdout.risk(&v, cfg.transfer);
            if best.as_ref().is_none_or(|(br, _, _)| r < *br) {
                best = Some((r, t, v));
            }
        }
    }
    let (risk, selected_step, v) = best.expect("at least one step");
    Ok(SparsitronOutput {
        v,
        risk,
        selected_step,
        steps: cfg.steps,
        holdout: cfg.holdout,
    })
}

/// Learns a signed weight vector of dimension `n` by running the learner on
/// `(x, −x, 0)` and folding the result back as `v_j = out_j − out_{n+j}`.
pub fn learn_signed<I>(stream: I, n: usize, cfg: &SparsitronConfig) -> Result<SparsitronOutput>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    let mut first_err: Option<Error> = None;
    let doubled = stream.into_iter().map_while(|(x, y)| match double_features(&x) {
        Ok(dx) => Some((dx, y)),
        Err(e) => {
            first_err = Some(e);
            None
        }
    });
    let res = sparsitron_learn(doubled, 2 * n + 1, cfg);
    if let Some(e) = first_err {
        return Err(e);
    }
    let mut out = res?;
    out.v = (0..n).map(|j| out.v[j] - out.v[n + j]).collect();
    Ok(out)
}
