mod common;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wrlab::cluster::{kernel_finite_volume, kernel_gamma_f, kernel_gamma_inf};
use wrlab::{AprioriMeasure, LatticeBox, Site, SpinConfiguration};

use common::{random_simplex, two_layer_conditional, TwoLayer};

fn measure(a: [f64; 3]) -> AprioriMeasure {
    AprioriMeasure::new(a[0], a[1], a[2]).unwrap()
}

#[test]
fn minus_line_matches_enumeration() {
    let alpha = [0.2, 0.3, 0.5];
    for l in 1..=3i64 {
        for t in [0.1, 0.6, 1.7] {
            let region = LatticeBox::new(vec![0, 0], vec![l, 0]).unwrap();
            let mut window = SpinConfiguration::filled(&region, 0);
            let mut evolved = HashMap::new();
            for x in 1..=l {
                window.set(&Site::from([x, 0]), -1).unwrap();
                evolved.insert(vec![x, 0], -1i8);
            }
            let got = kernel_gamma_f(&window, &[Site::origin(2)], &measure(alpha), t).unwrap();
            let exact = two_layer_conditional(&TwoLayer {
                sites: (0..=l).map(|x| vec![x, 0]).collect(),
                boundary: HashMap::new(),
                evolved,
                delta: vec![vec![0, 0]],
                alpha,
                t,
            })
            .unwrap();
            for (x, y) in got.probs.iter().zip(&exact) {
                assert!((x - y).abs() < 1e-13, "L={l} t={t}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn finite_cluster_kernel_agrees_with_finite_volume_on_empty_annulus() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let region = LatticeBox::cube(2, 3).unwrap();
    for _ in 0..100 {
        let alpha = measure(random_simplex(&mut rng));
        let t = rng.gen_range(0.05..2.0);
        let mut window = SpinConfiguration::filled(&region, 0);
        for site in region.sites() {
            let s = [-1, 0, 1][rng.gen_range(0..3)];
            window.set(&site, s).unwrap();
        }
        let delta = [Site::origin(2)];
        let f = kernel_gamma_f(&window, &delta, &alpha, t).unwrap();
        let fv = kernel_finite_volume(&window, &delta, &alpha, t).unwrap();
        let inf = kernel_gamma_inf(&window, &delta, &alpha, t).unwrap();
        for ((a, b), c) in f.probs.iter().zip(&fv.probs).zip(&inf.probs) {
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
    }
}

#[test]
fn two_site_kernel_volume_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let region = LatticeBox::new(vec![0, 0], vec![2, 1]).unwrap();
    let sites: Vec<Vec<i64>> = region.sites().map(|s| s.coords().to_vec()).collect();
    let outer: Vec<Vec<i64>> = region.outer_boundary().iter().map(|s| s.coords().to_vec()).collect();
    let delta = [vec![0i64, 0], vec![1, 0]];
    let mut checked = 0;
    while checked < 40 {
        let alpha = random_simplex(&mut rng);
        let t = rng.gen_range(0.05..2.0);
        let mut draw = || [-1i8, 0, 0, 1][rng.gen_range(0..4)];
        let boundary: HashMap<Vec<i64>, i8> = outer.iter().map(|s| (s.clone(), draw())).collect();
        let evolved: HashMap<Vec<i64>, i8> =
            sites.iter().filter(|s| !delta.contains(s)).map(|s| (s.clone(), draw())).collect();
        let mut config = SpinConfiguration::filled(&region, 0);
        for (s, &v) in boundary.iter().chain(evolved.iter()) {
            config.set(&Site::new(s.clone()), v).unwrap();
        }
        let exact = two_layer_conditional(&TwoLayer {
            sites: sites.clone(),
            boundary,
            evolved,
            delta: delta.to_vec(),
            alpha,
            t,
        });
        let got = kernel_finite_volume(&config, &[Site::from([0, 0]), Site::from([1, 0])], &measure(alpha), t);
        match exact {
            None => assert!(got.is_err()),
            Some(exact) => {
                checked += 1;
                for (x, y) in got.unwrap().probs.iter().zip(&exact) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }
}
