use proptest::prelude::*;
use routecast_core::stats::{bootstrap_ci, deviation_score, paired_diff};

// Self-contained generator for the oracle: SplitMix64 seeding, xoshiro256++
// output, multiply-shift range reduction. Same seed schedule as the library
// (resample i draws from splitmix(seed ^ splitmix(i))), separate code.

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct Xo([u64; 4]);

impl Xo {
    fn new(seed: u64) -> Self {
        let mut st = seed;
        let mut s = [0u64; 4];
        for w in &mut s {
            st = st.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = st;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            *w = z ^ (z >> 31);
        }
        Xo(s)
    }

    fn next(&mut self) -> u64 {
        let s = &mut self.0;
        let out = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        out
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.next() as u128 * n as u128) >> 64) as usize
    }
}

fn oracle_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|i| {
            let mut g = Xo::new(mix(seed ^ mix(i as u64)));
            (0..n).map(|_| values[g.below(n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let pos = p * (means.len() - 1) as f64;
        let (i, frac) = (pos as usize, pos.fract());
        let j = (i + 1).min(means.len() - 1);
        means[i] * (1.0 - frac) + means[j] * frac
    };
    (q(0.025), q(0.975))
}

fn binary(ones: usize, zeros: usize) -> Vec<f64> {
    let mut v = vec![1.0; ones];
    v.resize(ones + zeros, 0.0);
    v
}

#[test]
fn sixty_forty_matches_oracle() {
    let v = binary(60, 40);
    for seed in [0u64, 7, 42, 1234] {
        let ci = bootstrap_ci(&v, 10_000, seed).unwrap();
        let (lo, hi) = oracle_ci(&v, 10_000, seed);
        assert!((ci.mean - 0.6).abs() < 1e-12);
        assert!((ci.lo - lo).abs() <= 0.02, "lo {} vs {lo}", ci.lo);
        assert!((ci.hi - hi).abs() <= 0.02, "hi {} vs {hi}", ci.hi);
        assert!((ci.lo - 0.50).abs() <= 0.02 && (ci.hi - 0.69).abs() <= 0.02, "{ci:?}");
        assert!(ci.reliable);
    }
}

#[test]
fn paired_fifty_five_forty_five_matches_oracle() {
    // b wins 55 targets, a wins 45.
    let a: Vec<bool> = (0..100).map(|i| i >= 55).collect();
    let b: Vec<bool> = (0..100).map(|i| i < 55).collect();
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| y as u8 as f64 - x as u8 as f64).collect();
    for seed in [1u64, 2, 3] {
        let r = paired_diff(&a, &b, 10_000, seed).unwrap();
        let (lo, hi) = oracle_ci(&diffs, 10_000, seed);
        assert!((r.mean_diff - 0.1).abs() < 1e-12);
        assert_eq!(r.significant, lo > 0.0 || hi < 0.0);
        assert!((r.lo - lo).abs() <= 0.02 && (r.hi - hi).abs() <= 0.02);
    }
}

#[test]
fn all_b_wins_is_significant() {
    let r = paired_diff(&[false; 100], &[true; 100], 2_000, 5).unwrap();
    assert_eq!((r.mean_diff, r.lo, r.hi, r.significant), (1.0, 1.0, 1.0, true));
}

#[test]
fn width_shrinks_with_n() {
    for seed in 0..5u64 {
        let small = bootstrap_ci(&binary(60, 40), 4_000, seed).unwrap();
        let big = bootstrap_ci(&binary(240, 160), 4_000, seed).unwrap();
        assert!(big.hi - big.lo < small.hi - small.lo);
    }
}

/// Scores recomputed with two-pass mean/variance per column.
fn oracle_scores(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut out = vec![0.0; rows.len()];
    for c in 0..rows[0].len() {
        let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            for (o, x) in out.iter_mut().zip(&col) {
                *o += ((x - mean) / sd).powi(2);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn paired_self_never_significant(seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 1..120)) {
        let r = paired_diff(&bits, &bits, 300, seed).unwrap();
        prop_assert!(!r.significant);
        prop_assert_eq!((r.lo, r.hi), (0.0, 0.0));
    }

    #[test]
    fn ci_brackets_mean_and_is_deterministic(seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 1..80)) {
        let v: Vec<f64> = bits.iter().map(|&b| b as u8 as f64).collect();
        let a = bootstrap_ci(&v, 500, seed).unwrap();
        let b = bootstrap_ci(&v, 500, seed).unwrap();
        prop_assert!(a.lo <= a.mean && a.mean <= a.hi);
        prop_assert_eq!(a.lo.to_bits(), b.lo.to_bits());
        prop_assert_eq!(a.hi.to_bits(), b.hi.to_bits());
        let ones = bits.iter().filter(|&&b| b).count();
        let expect = bits.len() >= 30 && ones.min(bits.len() - ones) >= 5;
        prop_assert_eq!(a.reliable, expect);
    }

    #[test]
    fn deviation_argmin_matches_recompute(m in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 15)) {
        let got = deviation_score(&m).unwrap();
        let want = oracle_scores(&m);
        for (g, w) in got.scores.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9 * (1.0 + w.abs()));
        }
        let min = want.iter().cloned().fold(f64::INFINITY, f64::min);
        let first = want.iter().position(|&w| (w - min).abs() <= 1e-9).unwrap();
        prop_assert_eq!(got.best, first);
    }
}

#[test]
fn deviation_examples() {
    let rows = vec![vec![0.5, 0.25, 0.75], vec![0.625, 0.375, 0.875], vec![0.375, 0.125, 0.625]];
    assert_eq!(deviation_score(&rows).unwrap().scores[0], 0.0);
    // Column 0 has population sd 1 around mean 0; row 0 sits at +2.
    let rows = vec![vec![2.0, 1.0], vec![-0.5, 1.0], vec![-0.5, 1.0], vec![-0.5, 1.0], vec![-0.5, 1.0]];
    assert!((deviation_score(&rows).unwrap().scores[0] - 4.0).abs() < 1e-12);
    assert!(deviation_score(&[vec![1.0]]).is_err());
}
