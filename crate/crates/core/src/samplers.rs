//! Exact enumeration and Gibbs sampling for every model type.
//!
//! States are enumerated in a canonical order: variable 0 is the most
//! significant digit and each variable runs through [`Alphabet::values`]
//! (`+1` before `-1` for spins, `1..=k` for symbols). For two spins that
//! gives `(++, +-, -+, --)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrf::MrfModel;
use crate::poly::{Monomial, MultilinearPoly};
use crate::rng::SeedRng;

/// Largest state space the enumeration routines accept.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    /// `{+1, -1}`.
    Spin,
    /// `{1, ..., k}`.
    Symbols(u8),
}

impl Alphabet {
    pub fn size(&self) -> usize {
        match self {
            Alphabet::Spin => 2,
            Alphabet::Symbols(k) => *k as usize,
        }
    }

    pub fn values(&self) -> Vec<i8> {
        match self {
            Alphabet::Spin => vec![1, -1],
            Alphabet::Symbols(k) => (1..=*k as i8).collect(),
        }
    }

    pub fn value(&self, digit: usize) -> i8 {
        match self {
            Alphabet::Spin => {
                if digit == 0 {
                    1
                } else {
                    -1
                }
            }
            Alphabet::Symbols(_) => digit as i8 + 1,
        }
    }

    pub fn digit(&self, v: i8) -> usize {
        match self {
            Alphabet::Spin => usize::from(v != 1),
            Alphabet::Symbols(_) => (v - 1) as usize,
        }
    }

    pub fn contains(&self, v: i8) -> bool {
        match self {
            Alphabet::Spin => v == 1 || v == -1,
            Alphabet::Symbols(k) => v >= 1 && (v as i16) <= *k as i16,
        }
    }
}

/// A distribution `Pr[x] ∝ exp(energy(x))` over a finite product space.
pub trait EnergyModel: Sync {
    fn n(&self) -> usize;
    fn alphabet(&self) -> Alphabet;
    fn energy(&self, x: &[i8]) -> f64;

    /// Unnormalized log-probabilities of each value of `x_i` given the
    /// other coordinates of `x`, in alphabet order. `x_i` itself is ignored.
    fn conditional_logits(&self, i: usize, x: &[i8], out: &mut [f64]) {
        let mut y = x.to_vec();
        for (d, o) in out.iter_mut().enumerate() {
            y[i] = self.alphabet().value(d);
            *o = self.energy(&y);
        }
    }

    /// Conditional law of `x_i` given the rest, in alphabet order.
    fn conditional(&self, i: usize, x: &[i8]) -> Vec<f64> {
        let mut l = vec![0.0; self.alphabet().size()];
        self.conditional_logits(i, x, &mut l);
        softmax_in_place(&mut l);
        l
    }
}

pub(crate) fn softmax_in_place(l: &mut [f64]) {
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in l.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in l.iter_mut() {
        *v /= total;
    }
}

fn state_count(n: usize, alphabet: Alphabet) -> Result<usize> {
    let states = (alphabet.size() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if states > ENUMERATION_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(states as usize)
}

/// Decodes state `index` into `out`.
pub fn decode_state(index: usize, alphabet: Alphabet, out: &mut [i8]) {
    let k = alphabet.size();
    let mut r = index;
    for v in out.iter_mut().rev() {
        *v = alphabet.value(r % k);
        r /= k;
    }
}

pub fn encode_state(x: &[i8], alphabet: Alphabet) -> usize {
    let k = alphabet.size();
    x.iter().fold(0, |acc, v| acc * k + alphabet.digit(*v))
}

/// Calls `f(index, state)` on every state in canonical order.
pub fn for_each_state<F: FnMut(usize, &[i8])>(n: usize, alphabet: Alphabet, mut f: F) -> Result<()> {
    let count = state_count(n, alphabet)?;
    let k = alphabet.size();
    let mut digits = vec![0usize; n];
    let mut x: Vec<i8> = vec![alphabet.value(0); n];
    for idx in 0..count {
        f(idx, &x);
        // odometer increment from the least significant (last) variable
        for pos in (0..n).rev() {
            digits[pos] += 1;
            if digits[pos] < k {
                x[pos] = alphabet.value(digits[pos]);
                break;
            }
            digits[pos] = 0;
            x[pos] = alphabet.value(0);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub n: usize,
    pub alphabet: Alphabet,
    /// Probabilities in canonical state order.
    pub probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn state(&self, index: usize) -> Vec<i8> {
        let mut x = vec![0; self.n];
        decode_state(index, self.alphabet, &mut x);
        x
    }

    pub fn prob(&self, x: &[i8]) -> f64 {
        self.probs[encode_state(x, self.alphabet)]
    }

    /// `E[f(X)]`.
    pub fn expect<F: FnMut(&[i8]) -> f64>(&self, mut f: F) -> f64 {
        let mut x = vec![0; self.n];
        let mut total = 0.0;
        for (idx, p) in self.probs.iter().enumerate() {
            decode_state(idx, self.alphabet, &mut x);
            total += p * f(&x);
        }
        total
    }
}

/// Normalized distribution of `model` by enumerating every state.
pub fn exact_distribution<M: EnergyModel + ?Sized>(model: &M) -> Result<ExactDistribution> {
    let n = model.n();
    let alphabet = model.alphabet();
    let mut energies = Vec::with_capacity(state_count(n, alphabet)?);
    for_each_state(n, alphabet, |_, x| energies.push(model.energy(x)))?;
    softmax_in_place(&mut energies);
    Ok(ExactDistribution {
        n,
        alphabet,
        probs: energies,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Gibbs { burn_in: usize, thinning: usize },
}

/// `N` samples stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub alphabet: Alphabet,
    pub data: Vec<i8>,
    pub seed: u64,
    pub provenance: Provenance,
}

impl SampleBatch {
    pub fn new(n: usize, alphabet: Alphabet, data: Vec<i8>, seed: u64, provenance: Provenance) -> Result<Self> {
        if !data.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !alphabet.contains(**v)) {
            return Err(Error::InvalidModel(format!("value {bad} is not in the alphabet")));
        }
        Ok(SampleBatch {
            n,
            alphabet,
            data,
            seed,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> + '_ {
        self.data.chunks_exact(self.n.max(1))
    }

    /// Rows `start..end` as a new batch.
    pub fn slice(&self, start: usize, end: usize) -> SampleBatch {
        SampleBatch {
            n: self.n,
            alphabet: self.alphabet,
            data: self.data[start * self.n..end * self.n].to_vec(),
            seed: self.seed,
            provenance: self.provenance,
        }
    }
}

/// `N` i.i.d. draws by inverse CDF over the canonical state order.
pub fn exact_sample(dist: &ExactDistribution, count: usize, seed: u64) -> SampleBatch {
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    let mut rng = SeedRng::new(seed);
    let mut data = vec![0i8; count * dist.n];
    for row in data.chunks_exact_mut(dist.n.max(1)).take(count) {
        let u = rng.uniform() * acc;
        let idx = cdf.partition_point(|c| *c <= u).min(last);
        decode_state(idx, dist.alphabet, row);
    }
    SampleBatch {
        n: dist.n,
        alphabet: dist.alphabet,
        data,
        seed,
        provenance: Provenance::Exact,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thinning: usize,
}

impl GibbsConfig {
    /// `100·n` burn-in sweeps, one recorded sample every `max(1, n/2)` sweeps.
    pub fn default_for(n: usize) -> Self {
        GibbsConfig {
            burn_in: 100 * n,
            thinning: (n / 2).max(1),
        }
    }
}

/// Systematic-scan Gibbs sampler started from a uniformly random state.
pub fn gibbs_sample<M: EnergyModel + ?Sized>(model: &M, count: usize, cfg: GibbsConfig, seed: u64) -> Result<SampleBatch> {
    if cfg.thinning == 0 {
        return Err(Error::InvalidConfig("thinning must be at least 1".into()));
    }
    let n = model.n();
    let alphabet = model.alphabet();
    let k = alphabet.size();
    let mut rng = SeedRng::new(seed);
    let mut x: Vec<i8> = (0..n).map(|_| alphabet.value(rng.below(k))).collect();
    let mut logits = vec![0.0; k];
    let mut sweep = |x: &mut Vec<i8>, rng: &mut SeedRng| {
        for i in 0..n {
            model.conditional_logits(i, x, &mut logits);
            softmax_in_place(&mut logits);
            x[i] = alphabet.value(rng.categorical(&logits));
        }
    };
    for _ in 0..cfg.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut data = Vec::with_capacity(count * n);
    for _ in 0..count {
        for _ in 0..cfg.thinning {
            sweep(&mut x, &mut rng);
        }
        data.extend_from_slice(&x);
    }
    Ok(SampleBatch {
        n,
        alphabet,
        data,
        seed,
        provenance: Provenance::Gibbs {
            burn_in: cfg.burn_in,
            thinning: cfg.thinning,
        },
    })
}

/// Applies one systematic Gibbs sweep to a distribution vector over the
/// canonical state order.
pub fn gibbs_sweep_operator<M: EnergyModel + ?Sized>(model: &M, dist: &[f64]) -> Result<Vec<f64>> {
    let n = model.n();
    let alphabet = model.alphabet();
    let k = alphabet.size();
    let count = state_count(n, alphabet)?;
    if dist.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            found: dist.len(),
        });
    }
    let mut cur = dist.to_vec();
    let mut x = vec![0i8; n];
    for i in 0..n {
        let stride = k.pow((n - 1 - i) as u32);
        let mut next = vec![0.0; count];
        for (idx, out) in next.iter_mut().enumerate() {
            decode_state(idx, alphabet, &mut x);
            let cond = model.conditional(i, &x);
            let target = alphabet.digit(x[i]);
            let base = idx - target * stride;
            let mass: f64 = (0..k).map(|a| cur[base + a * stride]).sum();
            *out = mass * cond[target];
        }
        cur = next;
    }
    Ok(cur)
}

/// Conditional law of `x_i` computed from raw energies of the `k` states
/// that differ only at `i`.
pub fn enumerated_conditional<M: EnergyModel + ?Sized>(model: &M, i: usize, x: &[i8]) -> Vec<f64> {
    let alphabet = model.alphabet();
    let mut y = x.to_vec();
    let mut l: Vec<f64> = (0..alphabet.size())
        .map(|d| {
            y[i] = alphabet.value(d);
            model.energy(&y)
        })
        .collect();
    softmax_in_place(&mut l);
    l
}

/// Exact minimum over vertices, states and values of the conditional
/// probability of that value.
pub fn delta_unbiasedness<M: EnergyModel + ?Sized>(model: &M) -> Result<f64> {
    let n = model.n();
    let mut best = f64::INFINITY;
    for_each_state(n, model.alphabet(), |_, x| {
        for i in 0..n {
            for p in model.conditional(i, x) {
                best = best.min(p);
            }
        }
    })?;
    Ok(if n == 0 { 1.0 } else { best })
}

/// Noisy-parity model on `n + 1` variables: a single monomial
/// `gamma · prod_{i in S} x_i · y` where `y` is variable `n`.
pub fn parity_mrf(n: usize, subset: &[usize], gamma: f64) -> Result<MrfModel> {
    let s = Monomial::new(subset.to_vec())?;
    if s.len() > n {
        return Err(Error::InvalidModel(format!("parity set {s:?} larger than n = {n}")));
    }
    let m = s.with(n);
    let t = m.len();
    let mut psi = MultilinearPoly::zero(n + 1, t);
    psi.set(m, gamma)?;
    MrfModel::new(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::IsingModel;

    #[test]
    fn canonical_order_for_two_spins() {
        let mut x = [0i8; 2];
        let mut seen = Vec::new();
        for idx in 0..4 {
            decode_state(idx, Alphabet::Spin, &mut x);
            assert_eq!(encode_state(&x, Alphabet::Spin), idx);
            seen.push(x);
        }
        assert_eq!(seen, vec![[1, 1], [1, -1], [-1, 1], [-1, -1]]);
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = IsingModel::zero(3);
        let d = exact_distribution(&m).unwrap();
        for p in &d.probs {
            assert!((p - 0.125).abs() < 1e-15);
        }
        assert_eq!(delta_unbiasedness(&m).unwrap(), 0.5);
    }

    #[test]
    fn two_spin_distribution_matches_partition_sum() {
        let m = IsingModel::from_edges(2, &[(0, 1, 0.5)], vec![0.0; 2]).unwrap();
        let d = exact_distribution(&m).unwrap();
        let e = 0.5f64.exp();
        let z = 2.0 * e + 2.0 / e;
        let want = [e / z, 1.0 / e / z, 1.0 / e / z, e / z];
        for (p, w) in d.probs.iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        assert!((d.probs[0] - 0.3655).abs() < 1e-4);
    }

    #[test]
    fn enumeration_guard() {
        let m = IsingModel::zero(25);
        assert!(matches!(exact_distribution(&m), Err(Error::StateSpaceTooLarge { .. })));
        assert!(delta_unbiasedness(&m).is_err());
    }

    #[test]
    fn empty_and_deterministic_batches() {
        let d = exact_distribution(&IsingModel::zero(2)).unwrap();
        assert!(exact_sample(&d, 0, 1).is_empty());
        assert_eq!(exact_sample(&d, 500, 9), exact_sample(&d, 500, 9));
        assert_ne!(exact_sample(&d, 500, 9).data, exact_sample(&d, 500, 10).data);
    }

    #[test]
    fn uniform_state_frequencies() {
        let d = exact_distribution(&IsingModel::zero(2)).unwrap();
        let b = exact_sample(&d, 1_000_000, 3);
        let mut counts = [0usize; 4];
        for r in b.rows() {
            counts[encode_state(r, Alphabet::Spin)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e6 - 0.25).abs() < 0.002);
        }
    }

    #[test]
    fn sweep_operator_preserves_target() {
        let m = IsingModel::from_edges(4, &[(0, 1, 0.7), (1, 2, -0.4), (0, 3, 0.3)], vec![0.2, -0.1, 0.0, 0.5])
            .unwrap();
        let d = exact_distribution(&m).unwrap();
        let after = gibbs_sweep_operator(&m, &d.probs).unwrap();
        for (a, b) in after.iter().zip(&d.probs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parity_agreement_probability() {
        let m = parity_mrf(3, &[0, 1], 0.5).unwrap();
        let d = exact_distribution(&m).unwrap();
        let agree = d.expect(|x| if x[3] == x[0] * x[1] { 1.0 } else { 0.0 });
        assert!((agree - crate::poly::sigmoid(1.0)).abs() < 1e-12);
        assert!((agree - 0.731).abs() < 1e-3);
        // input coordinates stay exactly uniform
        for s in crate::poly::enumerate_monomials(3, 3).into_iter().skip(1) {
            let bias = d.expect(|x| f64::from(s.eval_spins(x)));
            assert!(bias.abs() < 1e-12);
        }
    }
}
