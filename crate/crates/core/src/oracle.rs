//! Brute-force checks of the recovery inequalities on instances small
//! enough to enumerate.
//!
//! Each `verify_*` suite draws seeded random instances, computes both sides
//! of an inequality exactly, and reports one [`TrialRecord`] per trial plus
//! a summary. A trial is *vacuous* when the inequality's precondition fails
//! or its right-hand side is trivially true; vacuous trials pass but are
//! counted separately. Trial `i` always uses RNG stream `i`, so reports do
//! not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::mrf::{median_odd, MrfModel};
use crate::poly::{binomial, enumerate_monomials, sigmoid, Monomial, MultilinearPoly};
use crate::rng::SeedRng;
use crate::samplers::{delta_unbiasedness, exact_distribution, for_each_state, Alphabet, ExactDistribution};
use crate::sparsitron::Transfer;

/// Constant standing in for `e³` in the coefficient-recovery bounds.
pub const RECOVERY_CONSTANT: f64 = 21.0;
/// Absolute tolerance for comparisons that can hold with equality.
pub const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub pass: bool,
    pub vacuous: bool,
    /// Bound minus measured quantity (nonnegative on success).
    pub slack: f64,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub vacuous: usize,
    /// Smallest slack among non-vacuous trials.
    pub worst_slack: Option<f64>,
    pub worst_trial: Option<usize>,
    pub constants: serde_json::Value,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl SuiteReport {
    fn from_records(suite: &str, seed: u64, constants: serde_json::Value, records: Vec<TrialRecord>) -> Self {
        let mut worst: Option<(f64, usize)> = None;
        for r in records.iter().filter(|r| !r.vacuous) {
            if worst.is_none_or(|(s, _)| r.slack < s) {
                worst = Some((r.slack, r.index));
            }
        }
        // failures always rank as worst, even if a vacuous record failed
        if let Some(f) = records.iter().find(|r| !r.pass) {
            worst = Some((f.slack, f.index));
        }
        SuiteReport {
            suite: suite.to_string(),
            seed,
            trials: records.len(),
            passed: records.iter().filter(|r| r.pass).count(),
            vacuous: records.iter().filter(|r| r.vacuous).count(),
            worst_slack: worst.map(|w| w.0),
            worst_trial: worst.map(|w| w.1),
            constants,
            records,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }

    pub fn worst_record(&self) -> Option<&TrialRecord> {
        self.worst_trial.and_then(|i| self.records.iter().find(|r| r.index == i))
    }

    /// One JSON object per trial, then the summary with `"summary": true`.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mut v = serde_json::to_value(r).expect("serializable record");
            v["suite"] = json!(self.suite);
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let mut s = serde_json::to_value(self).expect("serializable summary");
        s["summary"] = json!(true);
        s["pass"] = json!(self.all_passed());
        out.push_str(&s.to_string());
        out.push('\n');
        out
    }
}

fn run_trials<F>(trials: usize, seed: u64, f: F) -> Vec<TrialRecord>
where
    F: Fn(usize, &mut SeedRng) -> TrialRecord + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedRng::with_stream(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// `Σ_x Pr[x] (u(v·x + bias_v) − u(w·x + bias_w))²` over a ±1 distribution.
pub fn exact_risk(
    dist: &ExactDistribution,
    w: &[f64],
    bias_w: f64,
    v: &[f64],
    bias_v: f64,
    u: Transfer,
) -> Result<f64> {
    if dist.alphabet != Alphabet::Spin {
        return Err(Error::InvalidConfig("risk needs a ±1 distribution".into()));
    }
    for len in [w.len(), v.len()] {
        if len != dist.n {
            return Err(Error::DimensionMismatch {
                expected: dist.n,
                found: len,
            });
        }
    }
    Ok(dist.expect(|x| {
        let dot = |c: &[f64]| c.iter().zip(x).map(|(a, b)| a * f64::from(*b)).sum::<f64>();
        let g = u(dot(v) + bias_v) - u(dot(w) + bias_w);
        g * g
    }))
}

/// `E[(σ(p(X)) − σ(q(X)))²]` by enumeration.
pub fn poly_risk(dist: &ExactDistribution, p: &MultilinearPoly, q: &MultilinearPoly) -> f64 {
    dist.expect(|x| {
        let g = sigmoid(p.evaluate_spins(x)) - sigmoid(q.evaluate_spins(x));
        g * g
    })
}

/// Monte-Carlo estimate of [`exact_risk`] with its standard error.
pub fn monte_carlo_risk(
    dist: &ExactDistribution,
    w: &[f64],
    bias_w: f64,
    v: &[f64],
    bias_v: f64,
    u: Transfer,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let batch = crate::samplers::exact_sample(dist, draws, seed);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for x in batch.rows() {
        let dot = |c: &[f64]| c.iter().zip(x).map(|(a, b)| a * f64::from(*b)).sum::<f64>();
        let g = u(dot(v) + bias_v) - u(dot(w) + bias_w);
        let r = g * g;
        sum += r;
        sq += r * r;
    }
    let m = sum / draws as f64;
    let var = (sq / draws as f64 - m * m).max(0.0);
    (m, (var / draws as f64).sqrt())
}

/// Random polynomial with up to `terms` monomials of degree in `1..=t`
/// (plus a constant when `constant` is set) and coefficients in
/// `[-scale, scale]`.
pub fn random_poly(rng: &mut SeedRng, n: usize, t: usize, terms: usize, scale: f64, constant: bool) -> MultilinearPoly {
    let monos: Vec<Monomial> = enumerate_monomials(n, t).into_iter().skip(1).collect();
    let mut p = MultilinearPoly::zero(n, t);
    if !monos.is_empty() {
        for _ in 0..terms {
            let m = monos[rng.below(monos.len())].clone();
            p.set(m, rng.uniform_in(-scale, scale)).expect("valid monomial");
        }
    }
    if constant {
        p.set(Monomial::empty(), rng.uniform_in(-scale, scale)).expect("constant");
    }
    p
}

/// Random MRF law on `n` spins together with its exact unbiasedness.
pub fn random_distribution(rng: &mut SeedRng, n: usize, scale: f64) -> (ExactDistribution, f64) {
    let psi = random_poly(rng, n, 2.min(n), 2 * n, scale, false);
    let model = MrfModel::new(psi).expect("valid model");
    let dist = exact_distribution(&model).expect("small n");
    let delta = delta_unbiasedness(&model).expect("small n");
    (dist, delta)
}

/// Independent ±1 coordinates with `Pr[x_i = 1] = probs[i]`.
pub fn product_distribution(probs: &[f64]) -> ExactDistribution {
    let n = probs.len();
    let mut out = Vec::with_capacity(1 << n);
    for_each_state(n, Alphabet::Spin, |_, x| {
        out.push(
            x.iter()
                .zip(probs)
                .map(|(v, p)| if *v == 1 { *p } else { 1.0 - p })
                .product(),
        );
    })
    .expect("small n");
    ExactDistribution {
        n,
        alphabet: Alphabet::Spin,
        probs: out,
    }
}

fn log_uniform(rng: &mut SeedRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.uniform() * (hi.ln() - lo.ln())).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidGap {
    pub a: f64,
    pub b: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks `|σ(a) − σ(b)| ≥ e^{−|a|−3} min(1, |a − b|)` on the grid
/// `a, b ∈ [−10, 10]` with step 0.01. Each value of `a` is one trial.
pub fn verify_sigmoid_gap() -> SuiteReport {
    let steps = 2001usize;
    let at = |k: usize| -10.0 + k as f64 / 100.0;
    let records: Vec<TrialRecord> = (0..steps)
        .into_par_iter()
        .map(|ia| {
            let a = at(ia);
            let mut worst: Option<SigmoidGap> = None;
            let mut min_ratio = f64::INFINITY;
            let mut min_slack = f64::INFINITY;
            for ib in 0..steps {
                let b = at(ib);
                let lhs = (sigmoid(a) - sigmoid(b)).abs();
                let rhs = (-a.abs() - 3.0).exp() * (a - b).abs().min(1.0);
                let slack = lhs - rhs;
                if slack < min_slack {
                    min_slack = slack;
                    worst = Some(SigmoidGap { a, b, lhs, rhs });
                }
                if rhs > 0.0 {
                    min_ratio = min_ratio.min(lhs / rhs);
                }
            }
            TrialRecord {
                index: ia,
                pass: min_slack >= 0.0,
                vacuous: false,
                slack: min_slack,
                details: json!({ "a": a, "worst": worst, "min_ratio": min_ratio }),
            }
        })
        .collect();
    SuiteReport::from_records(
        "sigmoid",
        0,
        json!({ "grid_min": -10.0, "grid_max": 10.0, "step": 0.01, "exponent_offset": 3.0 }),
        records,
    )
}

/// ℓ∞ bound on the weights of a sigmoid unit:
/// `‖v − w‖_∞ ≤ C e^{‖w‖₁+|α|} √(ε/δ)` whenever
/// `ε < δ e^{−2‖w‖₁−2|α|−6}`, with `C` = [`RECOVERY_CONSTANT`].
pub fn linf_bound(w: &[f64], alpha: f64, risk: f64, delta: f64) -> f64 {
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    RECOVERY_CONSTANT * (l1 + alpha.abs()).exp() * (risk / delta).sqrt()
}

pub fn linf_precondition(w: &[f64], alpha: f64, risk: f64, delta: f64) -> bool {
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    risk < delta * (-2.0 * l1 - 2.0 * alpha.abs() - 6.0).exp()
}

pub fn verify_linf_recovery(trials: usize, seed: u64) -> SuiteReport {
    let records = run_trials(trials, seed, |index, rng| {
        let n = 1 + rng.below(5);
        let (dist, delta) = random_distribution(rng, n, 0.4);
        let w: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let alpha = rng.uniform_in(-0.5, 0.5);
        let scale = log_uniform(rng, 1e-5, 1.0);
        let v: Vec<f64> = w.iter().map(|x| x + scale * rng.uniform_in(-1.0, 1.0)).collect();
        let beta = alpha + scale * rng.uniform_in(-1.0, 1.0);
        let risk = exact_risk(&dist, &w, alpha, &v, beta, sigmoid).expect("matching sizes");
        let gap = w.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let bound = linf_bound(&w, alpha, risk, delta);
        let vacuous = !linf_precondition(&w, alpha, risk, delta);
        let slack = bound - gap;
        TrialRecord {
            index,
            pass: vacuous || slack >= -TOLERANCE,
            vacuous,
            slack,
            details: json!({ "n": n, "delta": delta, "risk": risk, "gap": gap, "bound": bound }),
        }
    });
    SuiteReport::from_records("linf", seed, json!({ "recovery_constant": RECOVERY_CONSTANT }), records)
}

/// Checks `Pr[|s(X)| ≥ |ŝ(I)|] ≥ δ^{|I|}` for every nonempty maximal
/// monomial `I` of random polynomials under random product laws.
pub fn verify_anticoncentration(trials: usize, seed: u64) -> SuiteReport {
    let records = run_trials(trials, seed, |index, rng| {
        let n = 1 + rng.below(8);
        let t = 1 + rng.below(3.min(n));
        let terms = 1 + rng.below(6);
        let with_const = rng.bernoulli(0.5);
        let s = random_poly(rng, n, t, terms, 1.5, with_const);
        let floor = rng.uniform_in(0.02, 0.5);
        let probs: Vec<f64> = (0..n).map(|_| rng.uniform_in(floor, 1.0 - floor)).collect();
        let delta = probs.iter().fold(0.5f64, |m, p| m.min(p.min(1.0 - p)));
        let dist = product_distribution(&probs);
        let mut slack = f64::INFINITY;
        let mut checked = 0;
        for m in s.maximal_monomials().into_iter().filter(|m| !m.is_empty()) {
            let c = s.coeff(&m).abs();
            let prob = dist.expect(|x| if s.evaluate_spins(x).abs() >= c - TOLERANCE { 1.0 } else { 0.0 });
            slack = slack.min(prob - delta.powi(m.len() as i32));
            checked += 1;
        }
        let vacuous = checked == 0;
        TrialRecord {
            index,
            pass: vacuous || slack >= -TOLERANCE,
            vacuous,
            slack: if vacuous { 0.0 } else { slack },
            details: json!({ "n": n, "t": t, "delta": delta, "monomials_checked": checked, "terms": s.num_terms() }),
        }
    });
    SuiteReport::from_records("anticonc", seed, json!({ "tolerance": TOLERANCE }), records)
}

/// Checks `Pr[|p̂(I) − ∂_I q(X)| > ρ] ≤ e^{2‖p‖₁+6} ε / (ρ² δ^{|I|})` for
/// every maximal monomial of `p`.
pub fn verify_maximal_monomial_tail(trials: usize, seed: u64) -> SuiteReport {
    let records = run_trials(trials, seed, |index, rng| {
        let n = 1 + rng.below(6);
        let t = 1 + rng.below(3.min(n));
        let (dist, delta) = random_distribution(rng, n, 0.3);
        let terms = 1 + rng.below(5);
        let with_const = rng.bernoulli(0.5);
        let p = random_poly(rng, n, t, terms, 1.0, with_const);
        let scale = log_uniform(rng, 1e-5, 0.5);
        let terms = 1 + rng.below(2 * n);
        let with_const = true;
        let noise = random_poly(rng, n, t, terms, scale, with_const);
        let q = p.sub(&noise).expect("same n");
        let rho = rng.uniform_in(0.01, 0.99);
        let eps = poly_risk(&dist, &p, &q);
        let mut slack = f64::INFINITY;
        let mut all_vacuous = true;
        for m in p.maximal_monomials() {
            let rhs = (2.0 * p.l1_norm() + 6.0).exp() * eps / (rho * rho * delta.powi(m.len() as i32));
            if rhs >= 1.0 {
                continue;
            }
            all_vacuous = false;
            let target = p.coeff(&m);
            let dq = q.partial_derivative(&m).expect("valid monomial");
            let lhs = dist.expect(|x| if (target - dq.evaluate_spins(x)).abs() > rho { 1.0 } else { 0.0 });
            slack = slack.min(rhs - lhs);
        }
        TrialRecord {
            index,
            pass: all_vacuous || slack >= -TOLERANCE,
            vacuous: all_vacuous,
            slack: if all_vacuous { 0.0 } else { slack },
            details: json!({ "n": n, "t": t, "delta": delta, "risk": eps, "rho": rho, "p_l1": p.l1_norm() }),
        }
    });
    SuiteReport::from_records("tail", seed, json!({ "exponent_offset": 6.0 }), records)
}

/// `2^{t+1} t^t e^{‖p‖₁+3} √(ε/δ^t) C(n,t)` with `e³` replaced by
/// [`RECOVERY_CONSTANT`].
pub fn l1_bound(p_l1: f64, n: usize, t: usize, risk: f64, delta: f64) -> f64 {
    let tf = t as f64;
    2f64.powi(t as i32 + 1)
        * tf.powi(t as i32)
        * RECOVERY_CONSTANT
        * p_l1.exp()
        * (risk / delta.powi(t as i32)).sqrt()
        * binomial(n, t) as f64
}

pub fn l1_precondition(p_l1: f64, t: usize, risk: f64, delta: f64) -> bool {
    risk < (-2.0 * p_l1 - 6.0).exp() * delta.powi(t as i32)
}

/// Result of comparing a polynomial estimate against the ℓ₁ bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Check {
    pub risk: f64,
    pub delta: f64,
    pub distance: f64,
    pub bound: f64,
    pub precondition: bool,
    pub pass: bool,
}

/// Exact risk of `q` against `p` under `dist` and the resulting ℓ₁ check.
pub fn poly_l1_distance_guarantee_check(
    p: &MultilinearPoly,
    q: &MultilinearPoly,
    dist: &ExactDistribution,
    delta: f64,
) -> Result<L1Check> {
    let t = p.max_degree().max(q.max_degree());
    let risk = poly_risk(dist, p, q);
    let distance = p.sub(q)?.l1_norm();
    let bound = l1_bound(p.l1_norm(), p.n(), t, risk, delta);
    let precondition = l1_precondition(p.l1_norm(), t, risk, delta);
    Ok(L1Check {
        risk,
        delta,
        distance,
        bound,
        precondition,
        pass: !precondition || distance <= bound + TOLERANCE,
    })
}

/// Random degree-`t` pairs with `2t ≤ n ≤ 6` so that `C(n,ℓ) ≤ C(n,t)` for
/// every `ℓ ≤ t`, which the bound needs.
pub fn verify_l1_recovery(trials: usize, seed: u64) -> SuiteReport {
    let records = run_trials(trials, seed, |index, rng| {
        let t = 1 + rng.below(3);
        let n = 2 * t + rng.below(7 - 2 * t);
        let (dist, delta) = random_distribution(rng, n, 0.3);
        let terms = 1 + rng.below(4);
        let with_const = rng.bernoulli(0.5);
        let p = random_poly(rng, n, t, terms, 0.6, with_const);
        let scale = log_uniform(rng, 1e-7, 1e-2);
        let terms = 1 + rng.below(2 * n);
        let with_const = true;
        let noise = random_poly(rng, n, t, terms, scale, with_const);
        let q = p.sub(&noise).expect("same n");
        let check = poly_l1_distance_guarantee_check(&p, &q, &dist, delta).expect("same n");
        TrialRecord {
            index,
            pass: check.pass,
            vacuous: !check.precondition,
            slack: check.bound - check.distance,
            details: json!({ "n": n, "t": t, "check": check }),
        }
    });
    SuiteReport::from_records("l1", seed, json!({ "recovery_constant": RECOVERY_CONSTANT }), records)
}

/// Failure rate of the median of `k` draws when an outlier fraction `p`
/// sits entirely above `alpha + gap`.
pub fn median_failure_rate(rng: &mut SeedRng, k: usize, p: f64, reps: usize) -> Result<f64> {
    if k.is_multiple_of(2) {
        return Err(Error::EvenMedianCount(k));
    }
    let (alpha, gap) = (0.0, 1.0);
    let mut buf = vec![0.0; k];
    let mut fails = 0usize;
    for _ in 0..reps {
        for v in buf.iter_mut() {
            *v = if rng.bernoulli(p) {
                alpha + gap + 0.01 + rng.uniform() * 10.0
            } else {
                alpha + rng.uniform_in(-gap, gap)
            };
        }
        if (median_odd(&mut buf) - alpha).abs() > gap {
            fails += 1;
        }
    }
    Ok(fails as f64 / reps as f64)
}

pub const MEDIAN_REPS: usize = 10_000;

/// Empirical median failure rate against `2 exp(−K (1/2 − p)²)`.
pub fn verify_median_claim(trials: usize, seed: u64) -> SuiteReport {
    let records = run_trials(trials, seed, |index, rng| {
        let k = 2 * rng.below(40) + 1;
        let p = if index == 0 { 0.0 } else { rng.uniform_in(0.0, 0.25) };
        let rate = median_failure_rate(rng, k, p, MEDIAN_REPS).expect("odd k");
        let bound = 2.0 * (-(k as f64) * (0.5 - p).powi(2)).exp();
        let vacuous = bound >= 1.0;
        TrialRecord {
            index,
            pass: rate <= bound,
            vacuous,
            slack: bound - rate,
            details: json!({ "k": k, "outlier_mass": p, "failure_rate": rate, "bound": bound }),
        }
    });
    SuiteReport::from_records("median", seed, json!({ "reps": MEDIAN_REPS }), records)
}

pub const SUITES: [&str; 6] = ["sigmoid", "linf", "anticonc", "tail", "l1", "median"];

/// Runs one suite by name; `sigmoid` ignores `trials` and `seed`.
pub fn run_suite(name: &str, trials: usize, seed: u64) -> Result<SuiteReport> {
    Ok(match name {
        "sigmoid" => verify_sigmoid_gap(),
        "linf" => verify_linf_recovery(trials, seed),
        "anticonc" => verify_anticoncentration(trials, seed),
        "tail" => verify_maximal_monomial_tail(trials, seed),
        "l1" => verify_l1_recovery(trials, seed),
        "median" => verify_median_claim(trials, seed),
        other => return Err(Error::InvalidConfig(format!("unknown suite {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::IsingModel;

    #[test]
    fn risk_examples() {
        let d = exact_distribution(&IsingModel::zero(1)).unwrap();
        assert_eq!(exact_risk(&d, &[0.4], 0.1, &[0.4], 0.1, sigmoid).unwrap(), 0.0);
        let r = exact_risk(&d, &[0.0], 0.0, &[1.0], 0.0, sigmoid).unwrap();
        let want = ((sigmoid(1.0) - 0.5).powi(2) + (sigmoid(-1.0) - 0.5).powi(2)) / 2.0;
        assert!((r - want).abs() < 1e-15);
        assert!((r - 0.0534).abs() < 1e-4);
        let d3 = exact_distribution(&IsingModel::from_edges(3, &[(0, 2, 0.3)], vec![0.1, 0.0, 0.0]).unwrap()).unwrap();
        let a = exact_risk(&d3, &[0.2, -0.1, 0.5], 0.0, &[0.1, 0.3, 0.0], 0.2, sigmoid).unwrap();
        let b = exact_risk(&d3, &[0.1, 0.3, 0.0], 0.2, &[0.2, -0.1, 0.5], 0.0, sigmoid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sigmoid_gap_point() {
        let lhs = sigmoid(1.0) - 0.5;
        assert!((lhs - 0.231).abs() < 1e-3);
        assert!(lhs >= (-3f64).exp());
    }

    #[test]
    fn linf_example_bound_exceeds_gap() {
        let d = exact_distribution(&IsingModel::zero(3)).unwrap();
        let w = [0.3, 0.0, 0.0];
        let v = [0.5, 0.0, 0.0];
        let risk = exact_risk(&d, &w, 0.0, &v, 0.0, sigmoid).unwrap();
        // both points give |σ(±0.5) − σ(±0.3)| = σ(0.5) − σ(0.3)
        let g = sigmoid(0.5) - sigmoid(0.3);
        assert!((risk - g * g).abs() < 1e-15);
        assert!(linf_bound(&w, 0.0, risk, 0.5) > 0.2);
        assert_eq!(linf_bound(&w, 0.0, 0.0, 0.5), 0.0);
    }

    #[test]
    fn anticoncentration_single_variable() {
        let d = product_distribution(&[0.5]);
        let s = MultilinearPoly::from_terms(1, 1, vec![(vec![0], 1.0)]).unwrap();
        assert_eq!(d.expect(|x| if s.evaluate_spins(x).abs() >= 1.0 { 1.0 } else { 0.0 }), 1.0);
    }

    #[test]
    fn identical_polynomials_give_zero_everywhere() {
        let mut rng = SeedRng::new(4);
        let (dist, delta) = random_distribution(&mut rng, 4, 0.3);
        let p = random_poly(&mut rng, 4, 2, 4, 1.0, true);
        assert_eq!(poly_risk(&dist, &p, &p), 0.0);
        let c = poly_l1_distance_guarantee_check(&p, &p, &dist, delta).unwrap();
        assert!(c.pass && c.distance == 0.0);
    }

    #[test]
    fn median_with_no_outliers_never_fails() {
        let mut rng = SeedRng::new(1);
        assert_eq!(median_failure_rate(&mut rng, 5, 0.0, 1000).unwrap(), 0.0);
        assert!(median_failure_rate(&mut rng, 4, 0.1, 10).is_err());
        let rate = median_failure_rate(&mut rng, 51, 0.2, MEDIAN_REPS).unwrap();
        assert!(rate <= 2.0 * (-51.0f64 * 0.09).exp());
    }

    #[test]
    fn small_suites_pass_and_are_deterministic() {
        for name in ["linf", "anticonc", "tail", "l1", "median"] {
            let a = run_suite(name, 20, 5).unwrap();
            assert!(a.all_passed(), "{name}: {:?}", a.worst_record());
            let b = run_suite(name, 20, 5).unwrap();
            assert_eq!(a.to_json_lines(), b.to_json_lines());
        }
        assert!(run_suite("bogus", 1, 0).is_err());
    }

    #[test]
    fn zero_trials_pass() {
        let r = verify_linf_recovery(0, 1);
        assert!(r.all_passed());
        assert_eq!(r.to_json_lines().lines().count(), 1);
    }
}
