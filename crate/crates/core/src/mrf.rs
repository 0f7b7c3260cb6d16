//! Binary Markov random fields `Pr[z] ∝ exp(ψ(z))` with `ψ` a multilinear
//! polynomial of degree at most `t`.
//!
//! Conditionals are `Pr[Z_i = -1 | rest] = σ(-2 ∂_i ψ(z))`, so the
//! derivative polynomial `∂_i ψ` is a GLM in the monomials of the other
//! variables. Structure recovery learns that polynomial for every vertex,
//! evaluates each derivative `∂_I q_i` on a block of fresh samples, and
//! keeps the cliques whose median clears `η/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::ising::{IsingModel, RowDiagnostics};
use crate::poly::{enumerate_monomials, sigmoid, Monomial, MultilinearPoly};
use crate::samplers::{Alphabet, EnergyModel, SampleBatch};
use crate::sparsitron::{learn_signed, SampleBudget};

#[derive(Clone, Debug, PartialEq)]
pub struct MrfModel {
    psi: MultilinearPoly,
    derivs: Vec<MultilinearPoly>,
}

impl MrfModel {
    pub fn new(psi: MultilinearPoly) -> Result<Self> {
        let derivs = (0..psi.n())
            .map(|i| psi.partial_derivative(&Monomial::from_sorted(vec![i])))
            .collect::<Result<Vec<_>>>()?;
        Ok(MrfModel { psi, derivs })
    }

    pub fn n(&self) -> usize {
        self.psi.n()
    }

    pub fn t(&self) -> usize {
        self.psi.max_degree()
    }

    pub fn psi(&self) -> &MultilinearPoly {
        &self.psi
    }

    /// `∂_i ψ`.
    pub fn derivative(&self, i: usize) -> &MultilinearPoly {
        &self.derivs[i]
    }

    /// `max_i ‖∂_i ψ‖₁`.
    pub fn width(&self) -> f64 {
        self.derivs.iter().map(|d| d.l1_norm()).fold(0.0, f64::max)
    }

    /// Union of the cliques spanned by nonzero monomials.
    pub fn graph(&self) -> EdgeSet {
        let mut e = EdgeSet::new();
        for (m, _) in self.psi.terms() {
            e.insert_clique(m.indices());
        }
        e
    }

    /// Smallest magnitude among the coefficients of maximal monomials.
    pub fn identifiability(&self) -> f64 {
        self.psi
            .maximal_monomials()
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| self.psi.coeff(m).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl From<&IsingModel> for MrfModel {
    fn from(m: &IsingModel) -> Self {
        let mut psi = MultilinearPoly::zero(m.n, 2);
        for i in 0..m.n {
            psi.set(Monomial::from_sorted(vec![i]), m.theta[i])
                .expect("finite field");
            for j in i + 1..m.n {
                psi.set(Monomial::from_sorted(vec![i, j]), m.a[i][j])
                    .expect("finite coupling");
            }
        }
        MrfModel::new(psi).expect("valid polynomial")
    }
}

impl Serialize for MrfModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.psi.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MrfModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let psi = MultilinearPoly::deserialize(d)?;
        MrfModel::new(psi).map_err(serde::de::Error::custom)
    }
}

impl EnergyModel for MrfModel {
    fn n(&self) -> usize {
        self.psi.n()
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::Spin
    }

    fn energy(&self, z: &[i8]) -> f64 {
        self.psi.evaluate_spins(z)
    }

    fn conditional_logits(&self, i: usize, z: &[i8], out: &mut [f64]) {
        let h = self.derivs[i].evaluate_spins(z);
        out[0] = h;
        out[1] = -h;
    }
}

/// `Pr[Z_i = -1 | Z_{-i} = rest]` with `rest` the other spins in order.
pub fn mrf_conditional(model: &MrfModel, i: usize, rest: &[i8]) -> Result<f64> {
    let n = model.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if rest.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: rest.len(),
        });
    }
    let mut z = rest.to_vec();
    z.insert(i, 1);
    Ok(sigmoid(-2.0 * model.derivative(i).evaluate_spins(&z)))
}

/// `(Pr[Z_i = -1 | rest], Pr[Z_i = +1 | rest])`; the second is the
/// complement of the first, so the pair sums to one.
pub fn mrf_conditional_law(model: &MrfModel, i: usize, rest: &[i8]) -> Result<(f64, f64)> {
    let minus = mrf_conditional(model, i, rest)?;
    Ok((minus, 1.0 - minus))
}

/// Monomials over `[n] \ {i}` of size at most `t - 1`, in canonical order,
/// written in the original variable indices.
pub fn vertex_monomials(n: usize, i: usize, t: usize) -> Vec<Monomial> {
    let others: Vec<usize> = (0..n).filter(|j| *j != i).collect();
    enumerate_monomials(n.saturating_sub(1), t.saturating_sub(1))
        .into_iter()
        .map(|m| Monomial::from_sorted(m.indices().iter().map(|k| others[*k]).collect()))
        .collect()
}

/// Features and label for predicting `z_i` from monomials of the others.
#[derive(Clone, Debug)]
pub struct Expander {
    pub vertex: usize,
    pub monomials: Vec<Monomial>,
}

impl Expander {
    pub fn new(n: usize, i: usize, t: usize) -> Self {
        Expander {
            vertex: i,
            monomials: vertex_monomials(n, i, t),
        }
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn expand(&self, z: &[i8]) -> (Vec<f64>, f64) {
        let f = self
            .monomials
            .iter()
            .map(|m| f64::from(m.eval_spins(z)))
            .collect();
        (f, f64::from(1 - z[self.vertex]) / 2.0)
    }
}

/// `(features, label)` for vertex `i` at degree `t`.
pub fn expand_example(z: &[i8], i: usize, t: usize) -> (Vec<f64>, f64) {
    Expander::new(z.len(), i, t).expand(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConfig {
    pub t: usize,
    pub lambda: f64,
    /// Internal risk target.
    pub gamma: f64,
    /// Failure probability for this vertex.
    pub delta: f64,
    pub budget: SampleBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub vertex: usize,
    /// Estimate of `∂_i ψ` in the full `n`-variable index space.
    pub q: MultilinearPoly,
    pub diagnostics: RowDiagnostics,
}

/// Learns `q_i ≈ ∂_i ψ` from the samples with the signed learner at ℓ₁
/// bound `2λ`, mapping weights back as `q̂_i(I) = -v_I / 2`.
pub fn learn_derivative_poly(samples: &SampleBatch, i: usize, cfg: &DerivativeConfig) -> Result<DerivativeEstimate> {
    if samples.alphabet != Alphabet::Spin {
        return Err(Error::InvalidConfig("binary learner needs ±1 samples".into()));
    }
    let n = samples.n;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if cfg.t == 0 {
        return Err(Error::InvalidConfig("degree must be at least 1".into()));
    }
    let ex = Expander::new(n, i, cfg.t);
    let d = ex.dim();
    let scfg = cfg
        .budget
        .plan(2.0 * cfg.lambda, 2 * d + 1, cfg.gamma, cfg.delta, samples.len())?;
    let out = learn_signed(samples.rows().map(|z| ex.expand(z)), d, &scfg)?;
    let mut q = MultilinearPoly::zero(n, cfg.t - 1);
    for (m, v) in ex.monomials.iter().zip(&out.v) {
        q.set(m.clone(), -v / 2.0)?;
    }
    Ok(DerivativeEstimate {
        vertex: i,
        q,
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

/// Median of `∂_I q` over the rows of `fresh`. The row count must be odd.
pub fn median_coefficient(q: &MultilinearPoly, wrt: &Monomial, fresh: &SampleBatch) -> Result<f64> {
    let k = fresh.len();
    if k.is_multiple_of(2) {
        return Err(Error::EvenMedianCount(k));
    }
    let d = q.partial_derivative(wrt)?;
    let mut vals: Vec<f64> = fresh.rows().map(|z| d.evaluate_spins(z)).collect();
    Ok(median_odd(&mut vals))
}

/// Median of an odd-length slice (reorders it).
pub fn median_odd(vals: &mut [f64]) -> f64 {
    let mid = vals.len() / 2;
    vals.select_nth_unstable_by(mid, f64::total_cmp);
    vals[mid]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrfLearnConfig {
    pub t: usize,
    /// Upper bound on `max_i ‖∂_i ψ‖₁`.
    pub lambda: f64,
    /// Identifiability threshold for structure recovery.
    pub eta: f64,
    /// Target accuracy for parameter learning.
    pub eps: f64,
    pub rho: f64,
    /// Fresh samples for the median step; defaults to
    /// `2·ceil(25·t·ln(n/ρ)) + 1`.
    pub median_count: Option<usize>,
    /// Overrides the internal risk target of either task.
    pub gamma: Option<f64>,
    /// Exponent constant `c` in the parameter target `ε² e^{-cλt} / (d (2t)^{2t})`.
    pub param_exponent: f64,
    /// Divisor constant `d` in the same target.
    pub param_divisor: f64,
    pub budget: SampleBudget,
}

impl MrfLearnConfig {
    pub fn new(t: usize, lambda: f64, eta: f64, rho: f64) -> Self {
        MrfLearnConfig {
            t,
            lambda,
            eta,
            eps: 0.1,
            rho,
            median_count: None,
            gamma: None,
            param_exponent: 12.0,
            param_divisor: 100.0,
            budget: SampleBudget::default(),
        }
    }

    pub fn unbiasedness(&self) -> f64 {
        (-2.0 * self.lambda).exp() / 2.0
    }

    pub fn structure_gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| {
            let delta = self.unbiasedness();
            (-2.0 * self.lambda - 6.0).exp() * self.eta * self.eta * delta.powi(self.t as i32) / 64.0
        })
    }

    pub fn parameter_gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| {
            let t = self.t as f64;
            self.eps * self.eps * (-self.param_exponent * self.lambda * t).exp()
                / ((2.0 * t).powf(2.0 * t) * self.param_divisor)
        })
    }

    pub fn resolved_median_count(&self, n: usize) -> usize {
        self.median_count.unwrap_or_else(|| {
            let c = (25.0 * self.t as f64 * (n as f64 / self.rho).ln()).ceil().max(0.0) as usize;
            2 * c + 1
        })
    }

    fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidConfig("degree must be at least 1".into()));
        }
        for (what, v) in [("lambda", self.lambda), ("eta", self.eta), ("eps", self.eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::OutOfRange { what: "rho", value: self.rho });
        }
        Ok(())
    }

    fn derivative_cfg(&self, n: usize, gamma: f64) -> DerivativeConfig {
        DerivativeConfig {
            t: self.t,
            lambda: self.lambda,
            gamma,
            delta: self.rho / n.max(1) as f64,
            budget: self.budget,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub vertex: usize,
    pub monomial: Monomial,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrfStructure {
    pub edges: EdgeSet,
    /// Every `(vertex, I)` whose median cleared the threshold.
    pub detections: Vec<Detection>,
    pub median_count: usize,
    pub diagnostics: Vec<RowDiagnostics>,
}

/// Learns the dependency graph. The last `K` samples form the shared median
/// block and the rest train the per-vertex learners.
pub fn mrf_structure(samples: &SampleBatch, cfg: &MrfLearnConfig) -> Result<MrfStructure> {
    cfg.validate()?;
    let n = samples.n;
    let k = cfg.resolved_median_count(n);
    if k.is_multiple_of(2) {
        return Err(Error::EvenMedianCount(k));
    }
    if samples.len() <= k {
        return Err(Error::InsufficientSamples {
            required: k + 2,
            available: samples.len(),
        });
    }
    let split = samples.len() - k;
    let train = samples.slice(0, split);
    let fresh = samples.slice(split, samples.len());
    let dcfg = cfg.derivative_cfg(n, cfg.structure_gamma());
    let per_vertex = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<Detection>, RowDiagnostics)> {
            let est = learn_derivative_poly(&train, i, &dcfg)?;
            let mut found = Vec::new();
            for m in vertex_monomials(n, i, cfg.t).into_iter().filter(|m| !m.is_empty()) {
                let med = median_coefficient(&est.q, &m, &fresh)?;
                if med.abs() > cfg.eta / 2.0 {
                    found.push(Detection {
                        vertex: i,
                        monomial: m,
                        median: med,
                    });
                }
            }
            Ok((found, est.diagnostics))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut edges = EdgeSet::new();
    let mut detections = Vec::new();
    let mut diagnostics = Vec::new();
    for (found, diag) in per_vertex {
        for det in found {
            edges.insert_clique(det.monomial.with(det.vertex).indices());
            detections.push(det);
        }
        diagnostics.push(diag);
    }
    Ok(MrfStructure {
        edges,
        detections,
        median_count: k,
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrfParameters {
    /// Estimate of `ψ` without its constant term.
    pub q: MultilinearPoly,
    pub per_vertex: Vec<MultilinearPoly>,
    pub diagnostics: Vec<RowDiagnostics>,
}

/// Combines per-vertex derivative estimates: `q̂(I) = q̂_i(I \ {i})` with
/// `i = min I`. The constant term is fixed to zero.
pub fn combine_derivatives(n: usize, t: usize, per_vertex: &[MultilinearPoly]) -> Result<MultilinearPoly> {
    let mut q = MultilinearPoly::zero(n, t);
    for m in enumerate_monomials(n, t).into_iter().filter(|m| !m.is_empty()) {
        let i = m.indices()[0];
        let rest = m.difference(&Monomial::from_sorted(vec![i]));
        let c = per_vertex[i].coeff(&rest);
        if c != 0.0 {
            q.set(m, c)?;
        }
    }
    Ok(q)
}

/// Learns `ψ` up to its constant term.
pub fn mrf_learn_parameters(samples: &SampleBatch, cfg: &MrfLearnConfig) -> Result<MrfParameters> {
    cfg.validate()?;
    let n = samples.n;
    let dcfg = cfg.derivative_cfg(n, cfg.parameter_gamma());
    let ests = (0..n)
        .into_par_iter()
        .map(|i| learn_derivative_poly(samples, i, &dcfg))
        .collect::<Result<Vec<_>>>()?;
    let per_vertex: Vec<MultilinearPoly> = ests.iter().map(|e| e.q.clone()).collect();
    Ok(MrfParameters {
        q: combine_derivatives(n, cfg.t, &per_vertex)?,
        per_vertex,
        diagnostics: ests.into_iter().map(|e| e.diagnostics).collect(),
    })
}
