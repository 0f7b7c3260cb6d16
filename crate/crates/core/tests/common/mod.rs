#![allow(dead_code)]

use mrflearn::oracle::random_poly;
use mrflearn::rng::SeedRng;
use mrflearn::{IsingModel, MrfModel, NonBinaryIsing};

pub fn random_ising(rng: &mut SeedRng, n: usize, scale: f64) -> IsingModel {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(0.6) {
                let c = rng.uniform_in(-scale, scale);
                a[i][j] = c;
                a[j][i] = c;
            }
        }
    }
    let theta = (0..n).map(|_| rng.uniform_in(-scale, scale)).collect();
    IsingModel::new(a, theta).unwrap()
}

pub fn random_mrf(rng: &mut SeedRng, n: usize, t: usize, scale: f64) -> MrfModel {
    let terms = 1 + rng.below(2 * n);
    MrfModel::new(random_poly(rng, n, t, terms, scale, false)).unwrap()
}

pub fn random_nonbinary(rng: &mut SeedRng, n: usize, k: usize, scale: f64) -> NonBinaryIsing {
    let mut m = NonBinaryIsing::zero(n, k).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            let w = (0..k)
                .map(|_| (0..k).map(|_| rng.uniform_in(-scale, scale)).collect())
                .collect();
            m.set_pair(i, j, w).unwrap();
        }
        let th = (0..k).map(|_| rng.uniform_in(-scale, scale)).collect();
        m.set_theta(i, th).unwrap();
    }
    m
}

/// Fraction of `rows` whose coordinate `i` equals `v`.
pub fn frequency(rows: &[Vec<i8>], i: usize, v: i8) -> f64 {
    rows.iter().filter(|r| r[i] == v).count() as f64 / rows.len() as f64
}
