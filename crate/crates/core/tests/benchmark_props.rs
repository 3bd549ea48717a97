use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use routecast_core::benchmark::{
    build_benchmark, seed_stability, stratified_sample, Sampled, StrataBucket, StrataSpec, TopologyFilter,
};
use routecast_core::route::{Route, Topology};
use routecast_core::stock::StockSet;
use routecast_core::synthetic::{random_route, random_shape};

fn pool(seed: u64, n: usize) -> Vec<Route> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (len, topo) = random_shape(&mut rng);
            random_route(&mut rng, len, topo, &format!("p{i}_"))
        })
        .collect()
}

fn spec() -> StrataSpec {
    StrataSpec::new(vec![
        StrataBucket { min_len: 2, max_len: 3, topology: TopologyFilter::Linear, n_samples: 12 },
        StrataBucket { min_len: 2, max_len: 3, topology: TopologyFilter::Convergent, n_samples: 8 },
        StrataBucket { min_len: 4, max_len: 10, topology: TopologyFilter::Any, n_samples: 20 },
    ])
    .unwrap()
}

fn stock_for(routes: &[Route]) -> StockSet {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let toks: Vec<String> = routes
        .iter()
        .flat_map(|r| r.nodes().iter().map(|n| n.token.as_str().to_string()))
        .filter(|_| rng.random_bool(0.8))
        .collect();
    StockSet::identity("s", toks)
}

/// Which bucket a route belongs to, decided from its stats without the
/// spec's own lookup.
fn classify(r: &Route) -> Option<usize> {
    let s = r.stats();
    match (s.length, s.topology) {
        (2..=3, Topology::Linear) => Some(0),
        (2..=3, Topology::Convergent) => Some(1),
        (4..=10, _) => Some(2),
        _ => None,
    }
}

/// Toy reference scores that depend on which routes were drawn.
fn toy_scores(samples: &[Sampled<'_>]) -> [f64; 3] {
    let n = samples.len() as f64;
    let even = samples.iter().filter(|s| s.pool_index % 2 == 0).count() as f64 / n;
    let third = samples.iter().filter(|s| s.pool_index % 3 == 0).count() as f64 / n;
    let long = samples.iter().filter(|s| s.route.stats().n_steps > 5).count() as f64 / n;
    [even, third, long.max(third)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn buckets_disjoint_and_exact(pool_seed in 0u64..1000, seed in any::<u64>()) {
        let routes = pool(pool_seed, 400);
        let spec = spec();
        let s = stratified_sample(&routes, &spec, seed).unwrap();
        let idx: BTreeSet<usize> = s.iter().map(|x| x.pool_index).collect();
        prop_assert_eq!(idx.len(), s.len());
        prop_assert_eq!(s.len(), spec.total());
        for (b, bucket) in spec.buckets.iter().enumerate() {
            let got: Vec<usize> = s.iter().filter(|x| x.bucket == b).map(|x| x.pool_index).collect();
            prop_assert_eq!(got.len(), bucket.n_samples);
            prop_assert!(got.windows(2).all(|w| w[0] < w[1]));
            for i in got {
                prop_assert_eq!(classify(&routes[i]), Some(b));
            }
        }
        // Ordered by (bucket, pool index).
        prop_assert!(s.windows(2).all(|w| (w[0].bucket, w[0].pool_index) < (w[1].bucket, w[1].pool_index)));
    }

    #[test]
    fn stability_choice_matches_recompute(pool_seed in 0u64..1000, base in any::<u64>()) {
        let routes = pool(pool_seed, 400);
        let seeds: Vec<u64> = (0..15).map(|i| base.wrapping_add(i * 7919)).collect();
        let table = seed_stability(&routes, &spec(), &seeds, |_, s| toy_scores(s)).unwrap();
        // Recompute every candidate and its deviation score.
        let m: Vec<[f64; 3]> = seeds
            .iter()
            .map(|&sd| toy_scores(&stratified_sample(&routes, &spec(), sd).unwrap()))
            .collect();
        let mut score = [0.0f64; 15];
        for c in 0..3 {
            let mean = m.iter().map(|r| r[c]).sum::<f64>() / 15.0;
            let sd = (m.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / 15.0).sqrt();
            if sd > 1e-15 {
                for (s, r) in score.iter_mut().zip(&m) {
                    *s += ((r[c] - mean) / sd).powi(2);
                }
            }
        }
        let best = score.iter().cloned().fold(f64::INFINITY, f64::min);
        let want: Vec<usize> = (0..15).filter(|&i| score[i] <= best + 1e-9).collect();
        prop_assert_eq!(table.chosen_index, want[0]);
        prop_assert_eq!(table.chosen_seed, seeds[want[0]]);
        for (row, (s, r)) in table.rows.iter().zip(score.iter().zip(&m)) {
            prop_assert_eq!([row.str, row.top1, row.top10], *r);
            prop_assert!((row.deviation - s).abs() < 1e-9);
        }
    }
}

#[test]
fn same_seed_same_bytes() {
    let routes = pool(11, 400);
    let stock = stock_for(&routes);
    let build = |seed| {
        let s = stratified_sample(&routes, &spec(), seed).unwrap();
        let b = build_benchmark(&s, &spec(), &stock, "toy", seed, None).unwrap();
        serde_json::to_vec_pretty(&b).unwrap()
    };
    let a = build(5);
    assert_eq!(a, build(5));
    assert_ne!(a, build(6));
    let def: routecast_core::benchmark::BenchmarkDefinition = serde_json::from_slice(&a).unwrap();
    assert!(def.verify(&stock).is_ok());
}

#[test]
fn planted_seed_is_chosen() {
    let routes = pool(12, 400);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    let seeds: Vec<u64> = (100..115).collect();
    let planted = 9;
    // Other rows come in pairs mirrored around 1/2, all multiples of 1/64, so
    // every column mean is exactly 1/2 and the planted row sits on it.
    let mut others = Vec::new();
    for _ in 0..7 {
        let d = [0, 1, 2].map(|_| rng.random_range(1..32) as f64 / 64.0);
        others.push(d.map(|x| 0.5 + x));
        others.push(d.map(|x| 0.5 - x));
    }
    others.shuffle(&mut rng);
    others.insert(planted, [0.5; 3]);
    let table = others;
    let t = seed_stability(&routes, &spec(), &seeds, |seed, _| table[(seed - 100) as usize]).unwrap();
    assert_eq!(t.chosen_seed, seeds[planted]);
    assert_eq!(t.rows[planted].deviation, 0.0);
}
