// SPDX-License-Identifier: Apache-2.0

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aggdetect::aggregate::sum_all;
use aggdetect::netgen::{generate, CommunitySpec, EnsembleParams, LayerProbs};
use aggdetect::spectral::{detect, lanczos, overlap, power_iteration, EigOptions, IndicatorVector, ModularityOperator};

#[test]
fn power_iteration_agrees_with_lanczos() {
    let net = generate(&EnsembleParams {
        n: 300,
        layers: 2,
        layer_probs: LayerProbs::Explicit { values: vec![0.03, 0.04] },
        communities: vec![CommunitySpec::random(40, 2, 1.0)],
        seed: 8,
    })
    .unwrap();
    let op = ModularityOperator::empirical(&sum_all(&net).unwrap());
    let opts = EigOptions {
        tol: 1e-9,
        max_iter: 200_000,
        ..EigOptions::default()
    };
    let a = lanczos(&op, 1, &opts).unwrap();
    let b = power_iteration(&op, 1, &opts).unwrap();
    assert!((a.values[0] - b.values[0]).abs() < 1e-7 * a.values[0].abs());
    let dot: f64 = a.vectors[0].iter().zip(&b.vectors[0]).map(|(x, y)| x * y).sum();
    assert!(dot.abs() > 1.0 - 1e-6);
}

#[test]
fn random_sets_have_null_overlap() {
    let n = 1000;
    let net = generate(&EnsembleParams {
        n,
        layers: 4,
        layer_probs: LayerProbs::Gaussian { mean: 0.02, std: 0.001 },
        communities: vec![],
        seed: 21,
    })
    .unwrap();
    let op = ModularityOperator::empirical(&sum_all(&net).unwrap());
    let v = lanczos(&op, 1, &EigOptions::default()).unwrap().vectors.remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 400;
    let mean: f64 = (0..draws)
        .map(|_| {
            let nodes: Vec<usize> = sample(&mut rng, n, 10).into_vec();
            overlap(&v, &IndicatorVector::new(&nodes, n).unwrap())
        })
        .sum::<f64>()
        / draws as f64;
    // A delocalized unit vector gives E[overlap] = 1/N.
    assert!(mean * n as f64 > 0.6 && mean * (n as f64) < 1.6, "N·mean overlap = {}", mean * n as f64);
}

#[test]
fn large_planted_community_is_found() {
    let net = generate(&EnsembleParams {
        n: 2000,
        layers: 16,
        layer_probs: LayerProbs::Gaussian { mean: 0.01, std: 0.001 },
        communities: vec![CommunitySpec::random(40, 4, 1.0)],
        seed: 5,
    })
    .unwrap();
    let truth = vec![net.communities[0].nodes.clone()];
    let res = detect(&ModularityOperator::empirical(&sum_all(&net).unwrap()), &truth, 5, &EigOptions::default()).unwrap();
    assert_eq!(res.overlaps[0].eig_index, 0);
    assert!(res.overlaps[0].overlap > 0.95, "{:?}", res.overlaps);
}
