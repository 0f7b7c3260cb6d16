//! Sparse multilinear polynomials over `{-1,+1}^n`.
//!
//! A polynomial is a map from monomials (sorted index sets) to nonzero real
//! coefficients. Monomials order canonically by size first and then
//! lexicographically; every feature vector and every serialized polynomial
//! in this crate uses that order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative magnitude below which a coefficient is treated as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// A set of variable indices, kept sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    pub fn empty() -> Self {
        Monomial(Vec::new())
    }

    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel(format!(
                "monomial {indices:?} repeats an index"
            )));
        }
        Ok(Monomial(indices))
    }

    /// Caller guarantees `indices` is strictly increasing.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Monomial(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset_of(&self, other: &Monomial) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    pub fn is_disjoint(&self, other: &Monomial) -> bool {
        self.0.iter().all(|i| !other.contains(*i))
    }

    pub fn union(&self, other: &Monomial) -> Monomial {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Monomial(v)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .copied()
                .filter(|i| !other.contains(*i))
                .collect(),
        )
    }

    pub fn with(&self, i: usize) -> Monomial {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Monomial(v)
    }

    /// Product of the selected coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&i| x[i]).product()
    }

    /// Product of the selected spins.
    pub fn eval_spins(&self, z: &[i8]) -> i8 {
        self.0.iter().fold(1i8, |acc, &i| acc * z[i])
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Monomial::new(v).map_err(serde::de::Error::custom)
    }
}

/// All subsets of `0..n` with at most `max_deg` elements, in canonical order
/// (by size, then lexicographic).
pub fn enumerate_monomials(n: usize, max_deg: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    for size in 0..=max_deg.min(n) {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            out.push(Monomial::from_sorted(comb.clone()));
            // advance to the next combination in lexicographic order
            let mut pos = size;
            while pos > 0 && comb[pos - 1] == n - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            comb[pos - 1] += 1;
            for j in pos..size {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// Multilinear polynomial `p(x) = sum_I c_I prod_{i in I} x_i` in `n`
/// variables with degree at most `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearPoly {
    n: usize,
    t: usize,
    coeffs: BTreeMap<Monomial, f64>,
}

impl MultilinearPoly {
    pub fn zero(n: usize, t: usize) -> Self {
        MultilinearPoly {
            n,
            t,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a polynomial from `(indices, coefficient)` pairs. Repeated
    /// monomials are summed and zeros are dropped.
    pub fn from_terms<I>(n: usize, t: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut p = Self::zero(n, t);
        for (idx, c) in terms {
            let m = Monomial::new(idx)?;
            p.add_term(m, c)?;
        }
        p.prune();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Declared maximum degree.
    pub fn max_degree(&self) -> usize {
        self.t
    }

    /// Size of the largest stored monomial.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Monomial::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.coeffs.get(m).copied().unwrap_or(0.0)
    }

    /// Terms in canonical monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.coeffs.iter().map(|(m, c)| (m, *c))
    }

    fn check_monomial(&self, m: &Monomial) -> Result<()> {
        if let Some(max) = m.max_index() {
            if max >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: max,
                    n: self.n,
                });
            }
        }
        if m.len() > self.t {
            return Err(Error::DegreeTooHigh {
                degree: m.len(),
                max: self.t,
            });
        }
        Ok(())
    }

    /// Overwrites the coefficient of `m`; a zero removes the term.
    pub fn set(&mut self, m: Monomial, c: f64) -> Result<()> {
        self.check_monomial(&m)?;
        if !c.is_finite() {
            return Err(Error::NotFinite("polynomial coefficient"));
        }
        if c == 0.0 {
            self.coeffs.remove(&m);
        } else {
            self.coeffs.insert(m, c);
        }
        Ok(())
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) -> Result<()> {
        let cur = self.coeff(&m);
        self.set(m, cur + c)
    }

    /// Drops coefficients whose magnitude is within `ZERO_TOL` of zero,
    /// relative to the largest coefficient (or 1, whichever is larger).
    pub fn prune(&mut self) {
        let scale = self
            .coeffs
            .values()
            .fold(1.0f64, |acc, c| acc.max(c.abs()));
        let cutoff = ZERO_TOL * scale;
        self.coeffs.retain(|_, c| c.abs() > cutoff);
    }

    /// Sum of the degree slices, so it agrees bit-for-bit with
    /// [`Self::degree_slice_l1`].
    pub fn l1_norm(&self) -> f64 {
        (0..=self.t).map(|l| self.degree_slice_l1(l)).sum()
    }

    /// Sum of `|c_I|` over monomials of size exactly `level`.
    pub fn degree_slice_l1(&self, level: usize) -> f64 {
        self.coeffs
            .iter()
            .filter(|(m, _)| m.len() == level)
            .map(|(_, c)| c.abs())
            .sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.coeffs.iter().map(|(m, c)| c * m.eval(x)).sum())
    }

    /// Evaluation at a `±1` point. `z` must have length `n`.
    pub fn evaluate_spins(&self, z: &[i8]) -> f64 {
        debug_assert_eq!(z.len(), self.n);
        self.coeffs
            .iter()
            .map(|(m, c)| c * f64::from(m.eval_spins(z)))
            .sum()
    }

    /// Coefficient-collection derivative: the result has coefficient
    /// `c_{J ∪ I}` on every `J` disjoint from `I`. An empty `I` returns the
    /// polynomial unchanged.
    pub fn partial_derivative(&self, wrt: &Monomial) -> Result<MultilinearPoly> {
        if let Some(max) = wrt.max_index() {
            if max >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: max,
                    n: self.n,
                });
            }
        }
        let mut out = MultilinearPoly::zero(self.n, self.t.saturating_sub(wrt.len()));
        for (m, c) in &self.coeffs {
            if wrt.is_subset_of(m) {
                out.coeffs.insert(m.difference(wrt), *c);
            }
        }
        Ok(out)
    }

    /// Stored monomials not strictly contained in another stored monomial.
    /// The zero polynomial has no monomials and so none are maximal.
    pub fn maximal_monomials(&self) -> Vec<Monomial> {
        let keys: Vec<&Monomial> = self.coeffs.keys().collect();
        keys.iter()
            .filter(|m| {
                !keys
                    .iter()
                    .any(|other| other.len() > m.len() && m.is_subset_of(other))
            })
            .map(|m| (*m).clone())
            .collect()
    }

    /// `self - other`; the result's declared degree is the larger of the two.
    pub fn sub(&self, other: &MultilinearPoly) -> Result<MultilinearPoly> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut out = self.clone();
        out.t = self.t.max(other.t);
        for (m, c) in &other.coeffs {
            let cur = out.coeff(m);
            out.set(m.clone(), cur - c)?;
        }
        out.prune();
        Ok(out)
    }

    /// Copy without the constant term.
    pub fn without_constant(&self) -> MultilinearPoly {
        let mut out = self.clone();
        out.coeffs.remove(&Monomial::empty());
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    indices: Monomial,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    t: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MultilinearPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            n: self.n,
            t: self.t,
            terms: self
                .coeffs
                .iter()
                .map(|(m, c)| TermJson {
                    indices: m.clone(),
                    coeff: *c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultilinearPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        let mut p = MultilinearPoly::zero(raw.n, raw.t);
        for term in raw.terms {
            p.add_term(term.indices, term.coeff)
                .map_err(serde::de::Error::custom)?;
        }
        Ok(p)
    }
}
