use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use super::StatsError;

pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Estimates on fewer targets than this are flagged unreliable.
pub const MIN_RELIABLE_N: usize = 30;

/// Binary estimates with fewer positives or negatives than this are flagged
/// unreliable.
pub const MIN_CLASS_COUNT: usize = 5;

/// Percentile bootstrap interval for a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub resamples: usize,
    pub reliable: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDiffResult {
    /// Mean of `b - a` over targets.
    pub mean_diff: f64,
    pub lo: f64,
    pub hi: f64,
    /// The 95% interval excludes zero.
    pub significant: bool,
    pub n: usize,
    pub resamples: usize,
    pub seed: u64,
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Means of `resamples` same-size resamples drawn with replacement.
///
/// Resample `i` draws from stream `(seed, i)`, so the output is independent of
/// thread scheduling.
fn resample_means(values: &[f64], resamples: usize, seed: u64) -> Vec<f64> {
    let n = values.len();
    (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += values[rng.random_range(0..n)];
            }
            sum / n as f64
        })
        .collect()
}

fn interval(values: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64, f64), StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyOutcomes);
    }
    if resamples == 0 {
        return Err(StatsError::NoResamples);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut means = resample_means(values, resamples, seed);
    means.sort_by(f64::total_cmp);
    // Rounding in the resample sums can leave the point estimate a hair
    // outside a zero-width interval; the bounds always contain it.
    let lo = percentile(&means, 2.5).min(mean);
    let hi = percentile(&means, 97.5).max(mean);
    Ok((mean, lo, hi))
}

fn is_reliable(values: &[f64]) -> bool {
    if values.len() < MIN_RELIABLE_N {
        return false;
    }
    let binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
    if !binary {
        return true;
    }
    let positives = values.iter().filter(|&&v| v == 1.0).count();
    let negatives = values.len() - positives;
    positives.min(negatives) >= MIN_CLASS_COUNT
}

/// Non-parametric percentile bootstrap (2.5th/97.5th percentiles of resample
/// means). Deterministic given `seed`.
pub fn bootstrap_ci(outcomes: &[f64], resamples: usize, seed: u64) -> Result<BootstrapCI, StatsError> {
    let (mean, lo, hi) = interval(outcomes, resamples, seed)?;
    Ok(BootstrapCI {
        mean,
        lo,
        hi,
        n: outcomes.len(),
        resamples,
        reliable: is_reliable(outcomes),
        seed,
    })
}

/// Paired bootstrap on per-target differences: +1 where only `b` succeeded,
/// -1 where only `a` did, 0 otherwise.
pub fn paired_diff(a: &[bool], b: &[bool], resamples: usize, seed: u64) -> Result<PairedDiffResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(u8::from(y)) - f64::from(u8::from(x)))
        .collect();
    let (mean_diff, lo, hi) = interval(&diffs, resamples, seed)?;
    Ok(PairedDiffResult {
        mean_diff,
        lo,
        hi,
        significant: lo > 0.0 || hi < 0.0,
        n: diffs.len(),
        resamples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(ones: usize, zeros: usize) -> Vec<f64> {
        let mut v = vec![1.0; ones];
        v.extend(std::iter::repeat_n(0.0, zeros));
        v
    }

    #[test]
    fn percentile_interpolates() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&d, 0.0), 1.0);
        assert_eq!(percentile(&d, 50.0), 3.0);
        assert_eq!(percentile(&d, 100.0), 5.0);
        assert_eq!(percentile(&d, 12.5), 1.5);
        assert_eq!(percentile(&[7.0], 97.5), 7.0);
    }

    #[test]
    fn constant_sample() {
        let ci = bootstrap_ci(&binary(50, 0), 2_000, 1).unwrap();
        assert_eq!((ci.mean, ci.lo, ci.hi), (1.0, 1.0, 1.0));
        assert!(!ci.reliable);
    }

    #[test]
    fn reliability_rules() {
        assert!(!bootstrap_ci(&binary(5, 5), 100, 1).unwrap().reliable);
        assert!(bootstrap_ci(&binary(20, 20), 100, 1).unwrap().reliable);
        assert!(!bootstrap_ci(&binary(36, 4), 100, 1).unwrap().reliable);
        assert!(!bootstrap_ci(&binary(4, 36), 100, 1).unwrap().reliable);
        // Non-binary data only needs the sample-size rule.
        let cont: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        assert!(bootstrap_ci(&cont, 100, 1).unwrap().reliable);
    }

    #[test]
    fn errors() {
        assert_eq!(bootstrap_ci(&[], 10, 1), Err(StatsError::EmptyOutcomes));
        assert_eq!(bootstrap_ci(&[1.0], 0, 1), Err(StatsError::NoResamples));
        assert!(matches!(
            paired_diff(&[true], &[true, false], 10, 1),
            Err(StatsError::LengthMismatch { a: 1, b: 2 })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let v = binary(60, 40);
        let a = bootstrap_ci(&v, 1_000, 99).unwrap();
        let b = bootstrap_ci(&v, 1_000, 99).unwrap();
        assert_eq!(a.lo.to_bits(), b.lo.to_bits());
        assert_eq!(a.hi.to_bits(), b.hi.to_bits());
        assert!(a.lo <= a.mean && a.mean <= a.hi);
    }

    #[test]
    fn paired_examples() {
        let a = vec![true, false, true, false];
        let same = paired_diff(&a, &a, 500, 3).unwrap();
        assert_eq!((same.mean_diff, same.lo, same.hi, same.significant), (0.0, 0.0, 0.0, false));
        let lose = vec![false; 100];
        let win = vec![true; 100];
        let r = paired_diff(&lose, &win, 500, 3).unwrap();
        assert_eq!(r.mean_diff, 1.0);
        assert!(r.significant);
    }
}
