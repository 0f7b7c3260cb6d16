//! Binary Ising models with density `exp(Σ_{i<j} A_ij z_i z_j + Σ_i θ_i z_i)`
//! over `{-1,+1}^n`, plus per-row regression learning of `(A, θ)`.
//!
//! Under this convention `Pr[Z_i = -1 | rest] = σ(-2 Σ_j A_ij z_j - 2 θ_i)`.
//! Each row is learned by regressing `(1 - Z_i)/2` on `(Z_{-i}, 1)` with the
//! sparse GLM learner and halving the negated weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::poly::sigmoid;
use crate::samplers::{Alphabet, EnergyModel, SampleBatch};
use crate::sparsitron::{learn_signed, SampleBudget, SparsitronState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsingModel {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

#[derive(Deserialize)]
struct IsingJson {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    theta: Vec<f64>,
}

impl<'de> Deserialize<'de> for IsingModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = IsingJson::deserialize(d)?;
        if raw.a.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "A has {} rows but n = {}",
                raw.a.len(),
                raw.n
            )));
        }
        IsingModel::new(raw.a, raw.theta).map_err(serde::de::Error::custom)
    }
}

impl IsingModel {
    pub fn zero(n: usize) -> Self {
        IsingModel {
            n,
            a: vec![vec![0.0; n]; n],
            theta: vec![0.0; n],
        }
    }

    /// Validates symmetry, a zero diagonal and finiteness.
    pub fn new(a: Vec<Vec<f64>>, theta: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if theta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: theta.len(),
            });
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidModel(format!("A[{i}][{i}] must be zero")));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NotFinite("coupling matrix"));
                }
                if *v != a[j][i] {
                    return Err(Error::InvalidModel(format!("A is not symmetric at ({i},{j})")));
                }
            }
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NotFinite("field vector"));
        }
        Ok(IsingModel { n, a, theta })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], theta: Vec<f64>) -> Result<Self> {
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), n });
            }
            if i == j {
                return Err(Error::InvalidModel(format!("self-loop at {i}")));
            }
            a[i][j] = w;
            a[j][i] = w;
        }
        Self::new(a, theta)
    }

    /// `max_i (Σ_j |A_ij| + |θ_i|)`.
    pub fn width(&self) -> f64 {
        (0..self.n)
            .map(|i| self.a[i].iter().map(|v| v.abs()).sum::<f64>() + self.theta[i].abs())
            .fold(0.0, f64::max)
    }

    /// Pairs with a nonzero coupling.
    pub fn graph(&self) -> EdgeSet {
        let mut e = EdgeSet::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.a[i][j] != 0.0 {
                    e.insert(i, j);
                }
            }
        }
        e
    }

    /// Local field `Σ_j A_ij z_j + θ_i` (ignores `z_i`).
    pub fn local_field(&self, i: usize, z: &[i8]) -> f64 {
        let row = &self.a[i];
        let mut h = self.theta[i];
        for (j, zj) in z.iter().enumerate() {
            if j != i {
                h += row[j] * f64::from(*zj);
            }
        }
        h
    }

    /// Unnormalized mass `exp(Σ_{i<j} A_ij z_i z_j + Σ θ_i z_i)`.
    pub fn density(&self, z: &[i8]) -> f64 {
        self.energy(z).exp()
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> IsingModel {
        let mut out = IsingModel::zero(self.n);
        for i in 0..self.n {
            out.theta[perm[i]] = self.theta[i];
            for j in 0..self.n {
                out.a[perm[i]][perm[j]] = self.a[i][j];
            }
        }
        out
    }
}

impl EnergyModel for IsingModel {
    fn n(&self) -> usize {
        self.n
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::Spin
    }

    fn energy(&self, z: &[i8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            let zi = f64::from(z[i]);
            e += self.theta[i] * zi;
            for j in i + 1..self.n {
                e += self.a[i][j] * zi * f64::from(z[j]);
            }
        }
        e
    }

    fn conditional_logits(&self, i: usize, z: &[i8], out: &mut [f64]) {
        let h = self.local_field(i, z);
        out[0] = h;
        out[1] = -h;
    }
}

/// `Pr[Z_i = -1 | Z_{-i} = rest]`, where `rest` lists the other `n - 1`
/// spins in index order.
pub fn ising_conditional(model: &IsingModel, i: usize, rest: &[i8]) -> Result<f64> {
    if i >= model.n {
        return Err(Error::IndexOutOfRange { index: i, n: model.n });
    }
    if rest.len() + 1 != model.n {
        return Err(Error::DimensionMismatch {
            expected: model.n - 1,
            found: rest.len(),
        });
    }
    let mut z = rest.to_vec();
    z.insert(i, 1);
    Ok(sigmoid(-2.0 * model.local_field(i, &z)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingLearnConfig {
    /// Upper bound on the model width.
    pub lambda: f64,
    /// Target ℓ∞ accuracy on the couplings.
    pub eps: f64,
    /// Overall failure probability, split evenly across rows.
    pub rho: f64,
    /// `c` in the internal risk target `min(1/4, c·e^{-5λ}·ε²)`.
    pub accuracy_constant: f64,
    pub budget: SampleBudget,
}

impl IsingLearnConfig {
    pub fn new(lambda: f64, eps: f64, rho: f64) -> Self {
        IsingLearnConfig {
            lambda,
            eps,
            rho,
            accuracy_constant: 0.01,
            budget: SampleBudget::default(),
        }
    }

    pub fn with_budget(mut self, budget: SampleBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn gamma(&self) -> f64 {
        (self.accuracy_constant * (-5.0 * self.lambda).exp() * self.eps * self.eps).min(0.25)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::OutOfRange { what: "lambda", value: self.lambda });
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::OutOfRange { what: "eps", value: self.eps });
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::OutOfRange { what: "rho", value: self.rho });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub vertex: usize,
    pub holdout_risk: f64,
    pub selected_step: usize,
    pub steps: usize,
    pub holdout: usize,
    pub samples_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowEstimate {
    /// Length-`n` row of couplings with a zero at the vertex itself.
    pub couplings: Vec<f64>,
    pub theta: f64,
    pub diagnostics: RowDiagnostics,
}

/// `(Z_j for j != i, then 1)`.
pub fn row_features(z: &[i8], i: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(z.len());
    f.extend(
        z.iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| f64::from(*v)),
    );
    f.push(1.0);
    f
}

fn check_spin_batch(samples: &SampleBatch) -> Result<()> {
    if samples.alphabet != Alphabet::Spin {
        return Err(Error::InvalidConfig("binary learner needs ±1 samples".into()));
    }
    Ok(())
}

pub fn ising_learn_row(samples: &SampleBatch, i: usize, cfg: &IsingLearnConfig) -> Result<RowEstimate> {
    cfg.validate()?;
    check_spin_batch(samples)?;
    let n = samples.n;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let d = n; // n - 1 neighbours plus the bias
    let delta = cfg.rho / n as f64;
    let scfg = cfg
        .budget
        .plan(2.0 * cfg.lambda, 2 * d + 1, cfg.gamma(), delta, samples.len())?;
    let stream = samples
        .rows()
        .map(|z| (row_features(z, i), f64::from(1 - z[i]) / 2.0));
    let out = learn_signed(stream, d, &scfg)?;
    let mut couplings = vec![0.0; n];
    for (k, j) in (0..n).filter(|j| *j != i).enumerate() {
        couplings[j] = -out.v[k] / 2.0;
    }
    Ok(RowEstimate {
        couplings,
        theta: -out.v[d - 1] / 2.0,
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

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingEstimate {
    pub n: usize,
    /// Symmetrized couplings `(Â_ij + Â_ji)/2`.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    /// Row-wise estimates before symmetrization.
    #[serde(rename = "A_raw")]
    pub a_raw: Vec<Vec<f64>>,
    pub diagnostics: Vec<RowDiagnostics>,
}

impl IsingEstimate {
    pub fn from_rows(rows: Vec<RowEstimate>) -> Self {
        let n = rows.len();
        let a_raw: Vec<Vec<f64>> = rows.iter().map(|r| r.couplings.clone()).collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a[i][j] = (a_raw[i][j] + a_raw[j][i]) / 2.0;
                }
            }
        }
        IsingEstimate {
            n,
            a,
            theta: rows.iter().map(|r| r.theta).collect(),
            a_raw,
            diagnostics: rows.into_iter().map(|r| r.diagnostics).collect(),
        }
    }

    /// `max_ij |Â_ij - A_ij|` over the symmetrized estimate.
    pub fn linf_error(&self, truth: &IsingModel) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max((self.a[i][j] - truth.a[i][j]).abs());
            }
        }
        m
    }

    pub fn as_model(&self) -> IsingModel {
        IsingModel {
            n: self.n,
            a: self.a.clone(),
            theta: self.theta.clone(),
        }
    }
}

/// Learns every row independently (in parallel on the current rayon pool).
pub fn ising_learn(samples: &SampleBatch, cfg: &IsingLearnConfig) -> Result<IsingEstimate> {
    let rows = (0..samples.n)
        .into_par_iter()
        .map(|i| ising_learn_row(samples, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(IsingEstimate::from_rows(rows))
}

/// Pairs whose symmetrized estimate has magnitude at least `eta/2`.
pub fn ising_structure(est: &IsingEstimate, eta: f64) -> EdgeSet {
    let mut e = EdgeSet::new();
    for i in 0..est.n {
        for j in i + 1..est.n {
            if est.a[i][j].abs() >= eta / 2.0 {
                e.insert(i, j);
            }
        }
    }
    e
}

/// Online coupling learner that updates every row from each fresh sample
/// with paired positive and negative weight vectors.
///
/// Row `i` keeps weights `W⁺_ij, W⁻_ij` for `j != i`; the current estimate
/// is `Â_ij = λ (W⁺_ij − W⁻_ij) / Σ_l (W⁺_il + W⁻_il)`. A sample with
/// prediction error `σ(−2 Σ_j Â_ij z_j) − (1 − z_i)/2` gives penalty
/// `ℓ_ij = error · z_j`, and the weights move as `W⁺ ← W⁺ β^{−ℓ}`,
/// `W⁻ ← W⁻ β^{ℓ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineIsing {
    pub n: usize,
    pub lambda: f64,
    pub beta: f64,
    pub steps: usize,
    log_plus: Vec<Vec<f64>>,
    log_minus: Vec<Vec<f64>>,
}

impl OnlineIsing {
    /// Fresh learner with every weight `1/(2(n−1))` and `β = 1/(1+√(ln(2(n−1))/T))`.
    pub fn new(n: usize, lambda: f64, horizon: usize) -> Self {
        let d = (2 * n.saturating_sub(1)).max(1) as f64;
        let beta = 1.0 / (1.0 + (d.ln() / horizon.max(1) as f64).sqrt());
        Self::with_beta(n, lambda, beta)
    }

    pub fn with_beta(n: usize, lambda: f64, beta: f64) -> Self {
        let w0 = -((2 * n.saturating_sub(1)).max(1) as f64).ln();
        let mut log_plus = vec![vec![w0; n]; n];
        for (i, row) in log_plus.iter_mut().enumerate() {
            row[i] = f64::NEG_INFINITY;
        }
        OnlineIsing {
            n,
            lambda,
            beta,
            steps: 0,
            log_minus: log_plus.clone(),
            log_plus,
        }
    }

    /// Current estimate of row `i`.
    pub fn row_estimate(&self, i: usize) -> Vec<f64> {
        let max = self.log_plus[i]
            .iter()
            .chain(&self.log_minus[i])
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let plus: Vec<f64> = self.log_plus[i].iter().map(|l| (l - max).exp()).collect();
        let minus: Vec<f64> = self.log_minus[i].iter().map(|l| (l - max).exp()).collect();
        let total: f64 = plus.iter().chain(&minus).sum();
        plus.iter()
            .zip(&minus)
            .map(|(p, m)| self.lambda * (p - m) / total)
            .collect()
    }

    pub fn estimate(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row_estimate(i)).collect()
    }

    /// Penalties `ℓ_ij` for sample `z` under the current estimate.
    pub fn penalties(&self, z: &[i8]) -> Vec<Vec<f64>> {
        let est = self.estimate();
        (0..self.n)
            .map(|i| {
                let p: f64 = (0..self.n).filter(|j| *j != i).map(|j| est[i][j] * f64::from(z[j])).sum();
                let err = sigmoid(-2.0 * p) - f64::from(1 - z[i]) / 2.0;
                (0..self.n)
                    .map(|j| if j == i { 0.0 } else { err * f64::from(z[j]) })
                    .collect()
            })
            .collect()
    }

    /// Ratio `W⁺_ij / W⁻_ij`.
    pub fn weight_ratio(&self, i: usize, j: usize) -> f64 {
        (self.log_plus[i][j] - self.log_minus[i][j]).exp()
    }

    pub fn update(&mut self, z: &[i8]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: z.len(),
            });
        }
        let pen = self.penalties(z);
        let lb = self.beta.ln();
        for i in 0..self.n {
            for j in 0..self.n {
                if j != i {
                    self.log_plus[i][j] -= pen[i][j] * lb;
                    self.log_minus[i][j] += pen[i][j] * lb;
                }
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// Learner state for row `i` of [`OnlineIsing`] expressed as a plain
/// multiplicative-weights state over `(−Z_{−i}, Z_{−i})` with bound `2λ`
/// and base `β²`.
pub fn online_row_as_sparsitron(n: usize, beta: f64) -> SparsitronState {
    SparsitronState::with_beta(2 * n.saturating_sub(1), beta * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{enumerated_conditional, exact_distribution, exact_sample, for_each_state};

    #[test]
    fn conditional_examples() {
        let zero = IsingModel::zero(3);
        assert_eq!(ising_conditional(&zero, 1, &[1, -1]).unwrap(), 0.5);

        let m = IsingModel::from_edges(2, &[(0, 1, 0.5)], vec![0.0; 2]).unwrap();
        let c = ising_conditional(&m, 0, &[1]).unwrap();
        // Pr[Z0 = -1 | Z1 = +1] from the four masses: e^{-1/2} / (e^{1/2} + e^{-1/2})
        let e = 0.5f64.exp();
        assert!((c - (1.0 / e) / (e + 1.0 / e)).abs() < 1e-15);
        assert!((c - 0.2689).abs() < 1e-4);

        let one = IsingModel::new(vec![vec![0.0]], vec![0.3]).unwrap();
        let d = exact_distribution(&one).unwrap();
        assert!((ising_conditional(&one, 0, &[]).unwrap() - d.probs[1]).abs() < 1e-15);
        assert!((d.probs[1] - sigmoid(-0.6)).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        let m = IsingModel::from_edges(2, &[(0, 1, 0.5)], vec![0.0; 2]).unwrap();
        assert!((m.density(&[1, 1]) - 0.5f64.exp()).abs() < 1e-15);
        assert!((m.density(&[1, -1]) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(IsingModel::zero(3).density(&[1, -1, 1]), 1.0);
    }

    #[test]
    fn constructor_rejects_asymmetry() {
        assert!(IsingModel::new(vec![vec![0.0, 1.0], vec![0.5, 0.0]], vec![0.0; 2]).is_err());
        assert!(IsingModel::new(vec![vec![1.0]], vec![0.0]).is_err());
    }

    #[test]
    fn logits_agree_with_energy_differences() {
        let m = IsingModel::from_edges(4, &[(0, 1, 0.3), (1, 3, -0.8), (2, 3, 0.1)], vec![0.1, 0.0, -0.2, 0.4])
            .unwrap();
        for_each_state(4, Alphabet::Spin, |_, z| {
            for i in 0..4 {
                let a = m.conditional(i, z);
                let b = enumerated_conditional(&m, i, z);
                assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
            }
        })
        .unwrap();
    }

    #[test]
    fn structure_threshold() {
        let mut est = IsingEstimate::from_rows(
            (0..3)
                .map(|i| RowEstimate {
                    couplings: vec![0.0; 3],
                    theta: 0.0,
                    diagnostics: RowDiagnostics {
                        vertex: i,
                        holdout_risk: 0.0,
                        selected_step: 1,
                        steps: 1,
                        holdout: 1,
                        samples_used: 2,
                    },
                })
                .collect(),
        );
        assert!(ising_structure(&est, 0.3).is_empty());
        est.a[0][1] = 0.4;
        est.a[1][0] = 0.4;
        assert_eq!(ising_structure(&est, 0.3), EdgeSet::from_pairs([(0, 1)]));
    }

    #[test]
    fn online_first_penalties() {
        let on = OnlineIsing::new(3, 1.0, 100);
        let z = [1i8, -1, 1];
        let pen = on.penalties(&z);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let want = (0.5 - f64::from(1 - z[i]) / 2.0) * f64::from(z[j]);
                    assert_eq!(pen[i][j], want);
                    assert_eq!(pen[i][j].abs(), 0.5);
                }
            }
        }
    }

    #[test]
    fn online_ratios_grow_for_correlated_neighbours() {
        // z_0 and z_1 always +1: vertex 0 should put growing weight on W⁺_01
        let mut on = OnlineIsing::new(3, 1.0, 1000);
        let mut prev = on.weight_ratio(0, 1);
        for k in 0..200 {
            let z = if k % 2 == 0 { [1i8, 1, 1] } else { [1i8, 1, -1] };
            on.update(&z).unwrap();
            let r = on.weight_ratio(0, 1);
            assert!(r > prev);
            prev = r;
        }
        assert!(on.row_estimate(0)[1] > 0.0);
    }

    #[test]
    fn online_update_equals_plain_learner_steps() {
        let model = IsingModel::from_edges(4, &[(0, 1, 0.5), (1, 2, -0.3), (2, 3, 0.4)], vec![0.0; 4]).unwrap();
        let d = exact_distribution(&model).unwrap();
        let batch = exact_sample(&d, 100, 77);
        let lambda = 1.2;
        let mut on = OnlineIsing::new(4, lambda, 100);
        let mut rows: Vec<SparsitronState> = (0..4).map(|_| online_row_as_sparsitron(4, on.beta)).collect();
        for z in batch.rows() {
            on.update(z).unwrap();
            for (i, st) in rows.iter_mut().enumerate() {
                let others: Vec<f64> = (0..4).filter(|j| *j != i).map(|j| -f64::from(z[j])).collect();
                let mut x = others.clone();
                x.extend(others.iter().map(|v| -v));
                st.update(&x, f64::from(1 - z[i]) / 2.0, 2.0 * lambda, sigmoid).unwrap();
            }
        }
        for (i, st) in rows.iter().enumerate() {
            let p = st.probabilities();
            let est = on.row_estimate(i);
            for (k, j) in (0..4).filter(|j| *j != i).enumerate() {
                let mapped = lambda * (p[k] - p[k + 3]);
                assert!((mapped - est[j]).abs() < 1e-9, "row {i} col {j}: {mapped} vs {}", est[j]);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = IsingModel::from_edges(3, &[(0, 2, -0.25)], vec![0.1, 0.0, 0.0]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with(r#"{"n":3,"A":[["#));
        let back: IsingModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<IsingModel>(r#"{"n":2,"A":[[0,1],[0,0]],"theta":[0,0]}"#).is_err());
    }
}
