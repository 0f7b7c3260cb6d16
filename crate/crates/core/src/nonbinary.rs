//! Pairwise models over the alphabet `{1, ..., k}`:
//! `Pr[x] ∝ exp(Σ_{i<j} W_ij(x_i, x_j) + Σ_i θ_i(x_i))`.
//!
//! `W_ij` is stored once per unordered pair with `i < j`; its rows index
//! `x_i` and its columns index `x_j`, and `W_ji` is the transpose.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::ising::{IsingModel, RowDiagnostics};
use crate::poly::sigmoid;
use crate::samplers::{Alphabet, EnergyModel, SampleBatch};
use crate::sparsitron::{learn_signed, SampleBudget};

pub type Matrix = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct NonBinaryIsing {
    pub n: usize,
    pub k: usize,
    w: BTreeMap<(usize, usize), Matrix>,
    /// `theta[i][a - 1]` is the potential of symbol `a` at vertex `i`.
    pub theta: Vec<Vec<f64>>,
}

impl NonBinaryIsing {
    pub fn zero(n: usize, k: usize) -> Result<Self> {
        if !(1..=i8::MAX as usize).contains(&k) {
            return Err(Error::InvalidModel(format!("alphabet size {k} is not supported")));
        }
        Ok(NonBinaryIsing {
            n,
            k,
            w: BTreeMap::new(),
            theta: vec![vec![0.0; k]; n],
        })
    }

    /// Sets `W_ij` (rows index `x_i`). Passing `i > j` stores the transpose.
    pub fn set_pair(&mut self, i: usize, j: usize, matrix: Matrix) -> Result<()> {
        let n = self.n;
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n });
        }
        if i == j {
            return Err(Error::InvalidModel(format!("self-pair at {i}")));
        }
        if matrix.len() != self.k || matrix.iter().any(|r| r.len() != self.k) {
            return Err(Error::InvalidModel(format!("pair matrix must be {0}x{0}", self.k)));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite("pair matrix"));
        }
        let m = if i < j { matrix } else { transpose(&matrix) };
        self.w.insert((i.min(j), i.max(j)), m);
        Ok(())
    }

    pub fn set_theta(&mut self, i: usize, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite("site potential"));
        }
        self.theta[i] = theta;
        Ok(())
    }

    /// `W_ij` oriented with rows indexing `x_i`; zero when absent.
    pub fn pair(&self, i: usize, j: usize) -> Matrix {
        match self.w.get(&(i.min(j), i.max(j))) {
            None => vec![vec![0.0; self.k]; self.k],
            Some(m) if i < j => m.clone(),
            Some(m) => transpose(m),
        }
    }

    /// `W_ij(a, b)` with 1-based symbols.
    pub fn pair_entry(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        match self.w.get(&(i.min(j), i.max(j))) {
            None => 0.0,
            Some(m) if i < j => m[a - 1][b - 1],
            Some(m) => m[b - 1][a - 1],
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &Matrix)> {
        self.w.iter().map(|((i, j), m)| (*i, *j, m))
    }

    /// Equivalent model whose pair matrices have zero row and column sums;
    /// the removed means move into the site potentials.
    pub fn center(&self) -> NonBinaryIsing {
        let k = self.k as f64;
        let mut out = self.clone();
        for (&(i, j), m) in out.w.iter_mut() {
            for b in 0..self.k {
                let c = m.iter().map(|r| r[b]).sum::<f64>() / k;
                for r in m.iter_mut() {
                    r[b] -= c;
                }
                out.theta[j][b] += c;
            }
            for (a, r) in m.iter_mut().enumerate() {
                let c = r.iter().sum::<f64>() / k;
                for v in r.iter_mut() {
                    *v -= c;
                }
                out.theta[i][a] += c;
            }
        }
        out
    }

    /// `max_{i,a} (Σ_{j≠i} max_b |W_ij(a,b)| + |θ_i(a)|)`.
    pub fn width(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            for a in 1..=self.k {
                let mut s = self.theta[i][a - 1].abs();
                for j in (0..self.n).filter(|j| *j != i) {
                    s += (1..=self.k)
                        .map(|b| self.pair_entry(i, j, a, b).abs())
                        .fold(0.0, f64::max);
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Pairs whose centered matrix is nonzero.
    pub fn graph(&self) -> EdgeSet {
        let c = self.center();
        EdgeSet::from_pairs(
            c.w.iter()
                .filter(|(_, m)| m.iter().flatten().any(|v| v.abs() > 1e-12))
                .map(|(p, _)| *p),
        )
    }

    /// Smallest `‖W_ij‖_∞` (centered) over the edges of [`Self::graph`].
    pub fn identifiability(&self) -> f64 {
        let c = self.center();
        c.w.values()
            .map(|m| m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())))
            .filter(|v| *v > 1e-12)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ_j W_ij(a, x_j) + θ_i(a)` with `x_i` ignored.
    pub fn symbol_energy(&self, i: usize, a: usize, x: &[i8]) -> f64 {
        let mut e = self.theta[i][a - 1];
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                e += self.pair_entry(i, j, a, *xj as usize);
            }
        }
        e
    }

    /// The `k = 2` model with the same law as `m` under `1 ↔ +1`, `2 ↔ -1`.
    pub fn from_ising(m: &IsingModel) -> Self {
        let mut out = NonBinaryIsing::zero(m.n, 2).expect("k = 2");
        for i in 0..m.n {
            out.theta[i] = vec![m.theta[i], -m.theta[i]];
            for j in i + 1..m.n {
                let a = m.a[i][j];
                if a != 0.0 {
                    out.w.insert((i, j), vec![vec![a, -a], vec![-a, a]]);
                }
            }
        }
        out
    }
}

fn transpose(m: &Matrix) -> Matrix {
    let k = m.len();
    (0..k).map(|a| (0..k).map(|b| m[b][a]).collect()).collect()
}

impl EnergyModel for NonBinaryIsing {
    fn n(&self) -> usize {
        self.n
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::Symbols(self.k as u8)
    }

    fn energy(&self, x: &[i8]) -> f64 {
        let mut e: f64 = (0..self.n).map(|i| self.theta[i][x[i] as usize - 1]).sum();
        for (&(i, j), m) in &self.w {
            e += m[x[i] as usize - 1][x[j] as usize - 1];
        }
        e
    }

    fn conditional_logits(&self, i: usize, x: &[i8], out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.symbol_energy(i, a + 1, x);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    i: usize,
    j: usize,
    matrix: Matrix,
}

#[derive(Serialize, Deserialize)]
struct NonBinaryJson {
    n: usize,
    k: usize,
    #[serde(rename = "W")]
    w: Vec<PairJson>,
    theta: Vec<Vec<f64>>,
}

impl Serialize for NonBinaryIsing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NonBinaryJson {
            n: self.n,
            k: self.k,
            w: self
                .w
                .iter()
                .map(|((i, j), m)| PairJson {
                    i: *i,
                    j: *j,
                    matrix: m.clone(),
                })
                .collect(),
            theta: self.theta.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonBinaryIsing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = NonBinaryJson::deserialize(d)?;
        let mut m = NonBinaryIsing::zero(raw.n, raw.k).map_err(D::Error::custom)?;
        if raw.theta.len() != raw.n {
            return Err(D::Error::custom(format!("theta has {} rows but n = {}", raw.theta.len(), raw.n)));
        }
        for (i, t) in raw.theta.into_iter().enumerate() {
            m.set_theta(i, t).map_err(D::Error::custom)?;
        }
        for p in raw.w {
            m.set_pair(p.i, p.j, p.matrix).map_err(D::Error::custom)?;
        }
        Ok(m)
    }
}

/// Indicator vector of symbol `x ∈ {1..k}`.
pub fn one_hot(x: usize, k: usize) -> Result<Vec<f64>> {
    if x == 0 || x > k {
        return Err(Error::OutOfRange {
            what: "symbol",
            value: x as f64,
        });
    }
    let mut v = vec![0.0; k];
    v[x - 1] = 1.0;
    Ok(v)
}

/// `Pr[Z_i = β | Z_i ∈ {α, β}, Z_{-i} = rest]`, which is
/// `σ(E_β − E_α)` with `E_a = θ_i(a) + Σ_j W_ij(a, x_j)`.
pub fn pair_conditional(model: &NonBinaryIsing, i: usize, alpha: usize, beta: usize, rest: &[i8]) -> Result<f64> {
    if alpha == beta {
        return Err(Error::InvalidConfig("alpha and beta must differ".into()));
    }
    for s in [alpha, beta] {
        if s == 0 || s > model.k {
            return Err(Error::OutOfRange {
                what: "symbol",
                value: s as f64,
            });
        }
    }
    if i >= model.n {
        return Err(Error::IndexOutOfRange { index: i, n: model.n });
    }
    if rest.len() + 1 != model.n {
        return Err(Error::DimensionMismatch {
            expected: model.n - 1,
            found: rest.len(),
        });
    }
    let mut x = rest.to_vec();
    x.insert(i, 1);
    Ok(sigmoid(model.symbol_energy(i, beta, &x) - model.symbol_energy(i, alpha, &x)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonBinaryConfig {
    /// Upper bound on the model width.
    pub lambda: f64,
    pub eta: f64,
    pub rho: f64,
    /// ℓ₁ bound for each pair regression; defaults to `2kλ`.
    pub l1_bound: Option<f64>,
    /// `c` in the risk target `min(1/4, c·e^{-5λ}·(η/2)²/k)`.
    pub accuracy_constant: f64,
    pub budget: SampleBudget,
}

impl NonBinaryConfig {
    pub fn new(lambda: f64, eta: f64, rho: f64) -> Self {
        NonBinaryConfig {
            lambda,
            eta,
            rho,
            l1_bound: None,
            accuracy_constant: 0.01,
            budget: SampleBudget::default(),
        }
    }

    pub fn gamma(&self, k: usize) -> f64 {
        let half = self.eta / 2.0;
        (self.accuracy_constant * (-5.0 * self.lambda).exp() * half * half / k as f64).min(0.25)
    }

    pub fn bound(&self, k: usize) -> f64 {
        self.l1_bound.unwrap_or(2.0 * k as f64 * self.lambda)
    }

    /// Guaranteed lower bound on `Pr[Z_i ∈ {α, β}]`.
    pub fn guaranteed_rate(&self, k: usize) -> f64 {
        2.0 * (-2.0 * self.lambda).exp() / k as f64
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("lambda", self.lambda), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::OutOfRange { what: "rho", value: self.rho });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub i: usize,
    pub alpha: usize,
    pub beta: usize,
    /// `u[j][a-1]` estimates `W_ij(α, a) − W_ij(β, a)` for centered `W`;
    /// the row for `j = i` is zero.
    pub u: Vec<Vec<f64>>,
    /// Learned bias after absorbing the block means.
    pub bias: f64,
    pub accepted: usize,
    pub rate: f64,
    pub diagnostics: RowDiagnostics,
}

fn check_symbol_batch(samples: &SampleBatch) -> Result<usize> {
    match samples.alphabet {
        Alphabet::Symbols(k) => Ok(k as usize),
        Alphabet::Spin => Err(Error::InvalidConfig("non-binary learner needs symbol samples".into())),
    }
}

/// Regresses `1{Z_i = β}` on one-hot encodings of the other vertices over
/// the samples with `Z_i ∈ {α, β}`.
pub fn learn_pair_block(
    samples: &SampleBatch,
    i: usize,
    alpha: usize,
    beta: usize,
    cfg: &NonBinaryConfig,
) -> Result<PairEstimate> {
    cfg.validate()?;
    let k = check_symbol_batch(samples)?;
    let n = samples.n;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if alpha == beta || alpha == 0 || beta == 0 || alpha > k || beta > k {
        return Err(Error::InvalidConfig(format!("invalid symbol pair ({alpha},{beta})")));
    }
    let (a8, b8) = (alpha as i8, beta as i8);
    let rows: Vec<&[i8]> = samples.rows().filter(|z| z[i] == a8 || z[i] == b8).collect();
    let total = samples.len();
    let rate = if total == 0 { 0.0 } else { rows.len() as f64 / total as f64 };
    let expected = cfg.guaranteed_rate(k);
    if total > 0 && rate < expected / 3.0 {
        return Err(Error::FilterRateTooLow {
            vertex: i,
            alpha: a8 as u8,
            beta: b8 as u8,
            rate,
            expected,
        });
    }
    let d = k * (n - 1) + 1;
    let pairs = k * (k - 1) / 2;
    let delta = cfg.rho / (n * pairs.max(1)) as f64;
    let scfg = cfg
        .budget
        .plan(cfg.bound(k), 2 * d + 1, cfg.gamma(k), delta, rows.len())
        .map_err(|e| match e {
            Error::InsufficientSamples { required, .. } => Error::InsufficientSamples {
                required: (required as f64 * k as f64 / (2.0 * (-2.0 * cfg.lambda).exp()) * 1.5).ceil() as usize,
                available: total,
            },
            other => other,
        })?;
    let stream = rows.iter().map(|z| {
        let mut f = Vec::with_capacity(d);
        for (j, v) in z.iter().enumerate() {
            if j != i {
                let mut block = vec![0.0; k];
                block[*v as usize - 1] = 1.0;
                f.extend(block);
            }
        }
        f.push(1.0);
        (f, if z[i] == b8 { 1.0 } else { 0.0 })
    });
    let out = learn_signed(stream, d, &scfg)?;
    let mut u = vec![vec![0.0; k]; n];
    let mut bias = out.v[d - 1];
    for (blk, j) in (0..n).filter(|j| *j != i).enumerate() {
        let raw = &out.v[blk * k..(blk + 1) * k];
        let mean = raw.iter().sum::<f64>() / k as f64;
        bias += mean;
        u[j] = raw.iter().map(|r| -(r - mean)).collect();
    }
    Ok(PairEstimate {
        i,
        alpha,
        beta,
        u,
        bias,
        accepted: rows.len(),
        rate,
        diagnostics: RowDiagnostics {
            vertex: i,
            holdout_risk: out.risk,
            selected_step: out.selected_step,
            steps: out.steps,
            holdout: out.holdout,
            samples_used: out.steps + out.holdout,
        },
    })
}

/// `U[j][α-1][a-1] = (1/k) Σ_β U^{α,β}_j(a)`, estimating the centered
/// `W_ij(α, a)`. Blocks for either orientation of each pair are accepted;
/// the missing orientation is the negation.
pub fn combine_pairs(n: usize, k: usize, i: usize, blocks: &[PairEstimate]) -> Result<Vec<Matrix>> {
    let mut lookup: BTreeMap<(usize, usize), &PairEstimate> = BTreeMap::new();
    for b in blocks.iter().filter(|b| b.i == i) {
        lookup.insert((b.alpha, b.beta), b);
    }
    let mut out = vec![vec![vec![0.0; k]; k]; n];
    for alpha in 1..=k {
        for beta in (1..=k).filter(|b| *b != alpha) {
            let (blk, sign) = if let Some(b) = lookup.get(&(alpha, beta)) {
                (*b, 1.0)
            } else if let Some(b) = lookup.get(&(beta, alpha)) {
                (*b, -1.0)
            } else {
                return Err(Error::MissingPair {
                    vertex: i,
                    alpha: alpha as u8,
                    beta: beta as u8,
                });
            };
            for j in 0..n {
                for a in 0..k {
                    out[j][alpha - 1][a] += sign * blk.u[j][a] / k as f64;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonBinaryStructure {
    pub edges: EdgeSet,
    /// `estimates[i][j]` estimates the centered `W_ij`.
    pub estimates: Vec<Vec<Matrix>>,
    /// `max_{α,a} |U_ij(α,a)|`.
    pub scores: Vec<Vec<f64>>,
    pub blocks: Vec<PairEstimate>,
}

pub fn nonbinary_structure(samples: &SampleBatch, cfg: &NonBinaryConfig) -> Result<NonBinaryStructure> {
    let k = check_symbol_batch(samples)?;
    let n = samples.n;
    let jobs: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| (1..=k).flat_map(move |a| (a + 1..=k).map(move |b| (i, a, b))))
        .collect();
    let blocks = jobs
        .into_par_iter()
        .map(|(i, a, b)| learn_pair_block(samples, i, a, b, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = EdgeSet::new();
    let mut estimates = Vec::with_capacity(n);
    let mut scores = vec![vec![0.0; n]; n];
    for i in 0..n {
        let u = combine_pairs(n, k, i, &blocks)?;
        for j in (0..n).filter(|j| *j != i) {
            let s = u[j].iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            scores[i][j] = s;
            if s > cfg.eta / 2.0 {
                edges.insert(i, j);
            }
        }
        estimates.push(u);
    }
    Ok(NonBinaryStructure {
        edges,
        estimates,
        scores,
        blocks,
    })
}
