//! Statistical checks of the environment and the harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsdp_core::env::{BanditInstance, RewardModel};
use tsdp_core::policy::TsConfig;
use tsdp_core::sim::run_once;

#[test]
fn sampling_is_seed_deterministic() {
    let model = RewardModel::trunc_exp(2.0).unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1000).map(|_| model.sample(&mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(17), draw(17));
    assert_ne!(draw(17), draw(18));
}

#[test]
fn trunc_exp_support_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for &lambda in &[0.1, 1.0, 2.0, 5.0, 10.0] {
        let m = RewardModel::trunc_exp(lambda).unwrap();
        for _ in 0..1_000_000 {
            let x = m.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }
}

#[test]
fn bernoulli_monte_carlo_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &p in &[0.25, 0.5, 0.75] {
        let m = RewardModel::bernoulli(p).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| m.sample(&mut rng)).sum::<f64>() / n as f64;
        let se = (m.variance() / n as f64).sqrt();
        assert!((mean - p).abs() <= 4.0 * se, "p={p} mean={mean}");
    }
}

#[test]
fn identical_arms_have_zero_expected_regret() {
    let inst = BanditInstance::bernoulli(&[0.4, 0.4, 0.4]).unwrap();
    let cfg = TsConfig::new(2, 2.0, 500).unwrap();
    let finals: Vec<f64> = (0..100)
        .map(|s| run_once(&inst, &cfg, s).unwrap().final_empirical_regret())
        .collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let sd = (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 4.0 * sd / n.sqrt(), "mean={mean} sd={sd}");
    assert_eq!(run_once(&inst, &cfg, 0).unwrap().final_pseudo_regret(), 0.0);
}

#[test]
fn prepull_regret_is_deterministic() {
    let inst = BanditInstance::bernoulli(&[0.75, 0.625, 0.5, 0.375, 0.25]).unwrap();
    let cfg = TsConfig::new(100, 39.6, 100_000).unwrap();
    for seed in 0..3 {
        let tr = run_once(&inst, &cfg, seed).unwrap();
        assert_eq!(tr.pseudo_regret_at(500), 125.0);
    }
}

#[test]
fn empirical_and_pseudo_regret_agree_in_expectation() {
    let inst = BanditInstance::trunc_exp(&[0.1, 1.0, 2.0, 5.0, 10.0]).unwrap();
    let cfg = TsConfig::new(5, 4.0, 2000).unwrap();
    let runs = 200;
    let (mut emp, mut pseudo) = (Vec::new(), Vec::new());
    for s in 0..runs {
        let tr = run_once(&inst, &cfg, 1000 + s).unwrap();
        emp.push(tr.final_empirical_regret());
        pseudo.push(tr.final_pseudo_regret());
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var / n)
    };
    let (me, ve) = stats(&emp);
    let (mp, vp) = stats(&pseudo);
    assert!((me - mp).abs() <= 4.0 * (ve + vp).sqrt(), "{me} vs {mp}");
}
