mod common;

use common::random_ising;
use mrflearn::oracle::{exact_risk, monte_carlo_risk, random_distribution};
use mrflearn::poly::sigmoid;
use mrflearn::rng::SeedRng;
use mrflearn::samplers::{exact_distribution, exact_sample, gibbs_sample, parity_mrf, GibbsConfig};
use mrflearn::IsingModel;

#[test]
fn gibbs_marginals_match_enumeration_on_six_spins() {
    let mut rng = SeedRng::new(21);
    let model = random_ising(&mut rng, 6, 0.4);
    let dist = exact_distribution(&model).unwrap();
    let cfg = GibbsConfig { burn_in: 1000, thinning: 5 };
    let batch = gibbs_sample(&model, 100_000, cfg, 5).unwrap();
    let rows = batch.len() as f64;
    for i in 0..6 {
        let exact = dist.expect(|x| f64::from(u8::from(x[i] == 1)));
        let emp = batch.rows().filter(|z| z[i] == 1).count() as f64 / rows;
        assert!((exact - emp).abs() < 0.01, "marginal {i}: {emp} vs {exact}");
        for j in i + 1..6 {
            let exact = dist.expect(|x| f64::from(u8::from(x[i] == 1 && x[j] == 1)));
            let emp = batch.rows().filter(|z| z[i] == 1 && z[j] == 1).count() as f64 / rows;
            assert!((exact - emp).abs() < 0.01, "pair ({i},{j}): {emp} vs {exact}");
        }
    }
}

#[test]
fn gibbs_on_zero_model_has_fair_marginals() {
    let model = IsingModel::zero(4);
    let batch = gibbs_sample(&model, 100_000, GibbsConfig::default_for(4), 8).unwrap();
    for i in 0..4 {
        let f = batch.rows().filter(|z| z[i] == 1).count() as f64 / batch.len() as f64;
        assert!((f - 0.5).abs() < 0.01);
    }
}

#[test]
fn gibbs_is_reproducible() {
    let mut rng = SeedRng::new(22);
    let model = random_ising(&mut rng, 5, 0.5);
    let cfg = GibbsConfig::default_for(5);
    assert_eq!(gibbs_sample(&model, 500, cfg, 9).unwrap(), gibbs_sample(&model, 500, cfg, 9).unwrap());
}

#[test]
fn parity_inputs_are_uniform_and_agreement_is_sigmoid() {
    for n in 2..=8 {
        let m = parity_mrf(n, &[0, 1], 0.5).unwrap();
        let dist = exact_distribution(&m).unwrap();
        // every character of the inputs alone has zero mean
        for mask in 1u32..(1 << n) {
            let mean = dist.expect(|x| {
                (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| f64::from(x[i]))
                    .product()
            });
            assert!(mean.abs() < 1e-12, "n={n} mask={mask:b}: {mean}");
        }
        let agree = dist.expect(|x| f64::from(u8::from(x[n] == x[0] * x[1])));
        assert!((agree - sigmoid(1.0)).abs() < 1e-12);
        assert!((agree - 0.5f64.exp() / (0.5f64.exp() + (-0.5f64).exp())).abs() < 1e-12);
    }
}

#[test]
fn exact_risk_agrees_with_monte_carlo() {
    let mut rng = SeedRng::new(23);
    for trial in 0..5u64 {
        let (dist, _) = random_distribution(&mut rng, 4, 0.8);
        let w: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let exact = exact_risk(&dist, &w, 0.2, &v, -0.1, sigmoid).unwrap();
        let (mc, se) = monte_carlo_risk(&dist, &w, 0.2, &v, -0.1, sigmoid, 1_000_000, 100 + trial);
        assert!((exact - mc).abs() <= 3.0 * se, "trial {trial}: {exact} vs {mc} ± {se}");
    }
}

#[test]
fn exact_sampler_frequencies_follow_the_law() {
    let m = IsingModel::from_edges(2, &[(0, 1, 0.5)], vec![0.0, 0.0]).unwrap();
    let dist = exact_distribution(&m).unwrap();
    let batch = exact_sample(&dist, 1_000_000, 4);
    let same = batch.rows().filter(|z| z[0] == z[1]).count() as f64 / batch.len() as f64;
    assert!((same - 2.0 * 0.3655).abs() < 0.003);
}
