use statrs::distribution::{ChiSquared, ContinuousCDF};
use singik::learning::{self, generate_dataset, MlpModel, Normalization};
use singik::KinematicChain;

#[test]
fn joint_marginals_are_uniform() {
    let chain = KinematicChain::panda();
    let set = generate_dataset(&chain, 5000, 42);
    let bins = 10;
    let expected = set.len() as f64 / bins as f64;
    let chi = ChiSquared::new((bins - 1) as f64).unwrap();
    for j in 0..chain.dof() {
        let (lo, hi) = (chain.q_min()[j], chain.q_max()[j]);
        let mut counts = vec![0usize; bins];
        for q in &set.configs {
            let b = (((q[j] - lo) / (hi - lo)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - chi.cdf(stat);
        assert!(p > 1e-3, "joint {j}: chi2 {stat:.2}, p {p:.2e}");
    }
}

#[test]
fn positions_stay_inside_the_reach_sphere() {
    for chain in [KinematicChain::panda(), KinematicChain::planar_3r()] {
        let set = generate_dataset(&chain, 2000, 1);
        for x in &set.positions {
            assert!(x.norm() <= chain.total_reach() + 1e-12);
        }
    }
}

#[test]
fn single_sample_is_reproducible() {
    let chain = KinematicChain::panda();
    let a = generate_dataset(&chain, 1, 7);
    let b = generate_dataset(&chain, 1, 7);
    assert_eq!(a.configs, b.configs);
    assert_eq!(a.positions, b.positions);
}

#[test]
fn inference_is_deterministic() {
    let chain = KinematicChain::panda();
    let input = Normalization { mean: nalgebra::DVector::zeros(3), scale: nalgebra::DVector::from_element(3, 1.0) };
    let output = Normalization::from_limits(chain.q_min(), chain.q_max());
    let model = MlpModel::init(&[3, 16, 16, 7], input, output, 3).unwrap();
    let x = nalgebra::Vector3::new(0.4, -0.1, 0.5);
    let a = learning::mlp_forward(&model, &x);
    let b = learning::mlp_forward(&model, &x);
    assert_eq!(a, b);
    assert!(chain.within_limits(&model.predict(&x)));
}
