//! Numerical kernels for the acoustic pipeline: orthonormal DCT-II,
//! regression deltas and per-stream summary statistics.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which DCT coefficients to keep for a descriptor stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DctSelection {
    /// The k coefficients of largest magnitude, signed, by descending magnitude.
    #[default]
    LargestMagnitude,
    /// The k lowest-order coefficients.
    FirstK,
}

/// Orthonormal DCT-II.
///
/// The cosine argument `π(2t+1)k / 2n` is reduced to an integer multiple of
/// `π / 2n` modulo a full period, so every term is a lookup into one table
/// of `4n` values.
pub fn dct2(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Empty("dct of an empty series".into()));
    }
    let period = 4 * n;
    let table: Vec<f64> = (0..period)
        .map(|m| (PI * m as f64 / (2 * n) as f64).cos())
        .collect();
    let s0 = (1.0 / n as f64).sqrt();
    let sk = (2.0 / n as f64).sqrt();

    let out = (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for (t, &x) in series.iter().enumerate() {
                acc += x * table[((2 * t + 1) * k) % period];
            }
            acc * if k == 0 { s0 } else { sk }
        })
        .collect();
    Ok(out)
}

/// Keep `k` DCT coefficients of `series`, zero-padded when the series is
/// shorter than `k`.
pub fn select_dct(series: &[f64], k: usize, selection: DctSelection) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Config("dct_k must be at least 1".into()));
    }
    let coeffs = dct2(series)?;
    let mut out = match selection {
        DctSelection::FirstK => coeffs.into_iter().take(k).collect::<Vec<_>>(),
        DctSelection::LargestMagnitude => {
            let mut order: Vec<usize> = (0..coeffs.len()).collect();
            // stable sort keeps lower indices first among equal magnitudes
            order.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()));
            order.into_iter().take(k).map(|i| coeffs[i]).collect()
        }
    };
    out.resize(k, 0.0);
    Ok(out)
}

/// The `k` largest-magnitude DCT coefficients, signed.
pub fn top_k_dct(series: &[f64], k: usize) -> Result<Vec<f64>> {
    select_dct(series, k, DctSelection::LargestMagnitude)
}

/// Regression delta over a ±`window` neighbourhood with replicate padding.
pub fn delta(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::Empty("delta of an empty series".into()));
    }
    if window == 0 {
        return Err(Error::Config("delta window must be at least 1".into()));
    }
    let last = series.len() as isize - 1;
    let at = |i: isize| series[i.clamp(0, last) as usize];
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();

    Ok((0..series.len() as isize)
        .map(|t| {
            let num: f64 = (1..=window as isize)
                .map(|n| n as f64 * (at(t + n) - at(t - n)))
                .sum();
            num / denom
        })
        .collect())
}

/// Mean, median, population std and peak-to-RMS ratio of one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSet {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub peak_to_rms: f64,
}

impl StatSet {
    pub const NAMES: [&'static str; 4] = ["mean", "median", "std", "peak_to_rms"];

    pub fn to_array(self) -> [f64; 4] {
        [self.mean, self.median, self.std, self.peak_to_rms]
    }
}

pub fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Midpoint-averaged median; NaN-free input assumed.
pub fn median(series: &[f64]) -> f64 {
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Population standard deviation (two-pass).
pub fn population_std(series: &[f64]) -> f64 {
    let m = mean(series);
    let var = series.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / series.len() as f64;
    var.sqrt()
}

pub fn stat_descriptors(series: &[f64]) -> Result<StatSet> {
    if series.is_empty() {
        return Err(Error::Empty("statistics of an empty series".into()));
    }
    let peak = series.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let rms = (series.iter().map(|x| x * x).sum::<f64>() / series.len() as f64).sqrt();
    let peak_to_rms = if rms == 0.0 { 0.0 } else { peak / rms };
    Ok(StatSet {
        mean: mean(series),
        median: median(series),
        std: population_std(series),
        peak_to_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct cosine-sum DCT-II.
    fn naive_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        (0..x.len())
            .map(|k| {
                let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                s * x
                    .iter()
                    .enumerate()
                    .map(|(t, v)| v * (PI * (2.0 * t as f64 + 1.0) * k as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
            })
            .collect()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
    }

    #[test]
    fn dct_constant_and_singleton() {
        let out = dct2(&[2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!((out[0] - 4.0).abs() < 1e-12);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(dct2(&[5.0]).unwrap(), vec![5.0]);
        assert!(matches!(dct2(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn dct_matches_naive_length_17() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = random_vec(&mut rng, 17);
        let fast = dct2(&x).unwrap();
        let slow = naive_dct(&x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn top_k_constant_series() {
        let out = top_k_dct(&[3.0; 20], 10).unwrap();
        assert_eq!(out.len(), 10);
        assert!((out[0] - 3.0 * 20f64.sqrt()).abs() < 1e-12);
        assert!(out[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn top_k_pads_short_series() {
        let out = top_k_dct(&[1.0, -4.0, 2.0, 0.5], 10).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out[4..].iter().all(|&v| v == 0.0));
        assert!(out[..4].iter().all(|&v| v != 0.0));
    }

    #[test]
    fn top_k_matches_sorted_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let x = random_vec(&mut rng, 32);
        let mut oracle = naive_dct(&x);
        oracle.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        let got = top_k_dct(&x, 10).unwrap();
        for (a, b) in got.iter().zip(&oracle[..10]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn first_k_selection() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let got = select_dct(&x, 3, DctSelection::FirstK).unwrap();
        let full = naive_dct(&x);
        for (a, b) in got.iter().zip(&full[..3]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(select_dct(&x, 0, DctSelection::FirstK).is_err());
    }

    #[test]
    fn delta_examples() {
        assert!(delta(&[7.0; 9], 2).unwrap().iter().all(|&d| d == 0.0));

        let ramp: Vec<f64> = (0..10).map(f64::from).collect();
        let d = delta(&ramp, 2).unwrap();
        for &v in &d[2..8] {
            assert_eq!(v, 1.0);
        }

        let d = delta(&[0.0, 1.0, 2.0, 3.0, 4.0], 2).unwrap();
        // (1·(1−0) + 2·(2−0)) / 10, and the mirrored edge at t = 4
        assert_eq!(d[0], 0.5);
        assert_eq!(d[4], 0.5);
        assert!(delta(&[], 2).is_err());
        assert!(delta(&[1.0], 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = stat_descriptors(&[-2.5; 4]).unwrap();
        assert_eq!((s.mean, s.median, s.std, s.peak_to_rms), (-2.5, -2.5, 0.0, 1.0));

        let s = stat_descriptors(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!((s.mean, s.median, s.std, s.peak_to_rms), (0.0, 0.0, 1.0, 1.0));

        let s = stat_descriptors(&[0.0; 5]).unwrap();
        assert_eq!(s.peak_to_rms, 0.0);

        let n = 10_000;
        let sine: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * i as f64 / n as f64 * 10.0).sin())
            .collect();
        let s = stat_descriptors(&sine).unwrap();
        assert!((s.peak_to_rms - 2f64.sqrt()).abs() < 1e-3);

        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(stat_descriptors(&[]).is_err());
    }

    proptest! {
        #[test]
        fn dct_is_linear(
            x in prop::collection::vec(-100.0..100.0f64, 1..40),
            alpha in -5.0..5.0f64,
            beta in -5.0..5.0f64,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = random_vec(&mut rng, x.len());
            let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = dct2(&combo).unwrap();
            let dx = dct2(&x).unwrap();
            let dy = dct2(&y).unwrap();
            for k in 0..x.len() {
                prop_assert!((lhs[k] - (alpha * dx[k] + beta * dy[k])).abs() < 1e-9);
            }
        }

        #[test]
        fn parseval(x in prop::collection::vec(-100.0..100.0f64, 1..64)) {
            let energy: f64 = x.iter().map(|v| v * v).sum();
            let spectral: f64 = dct2(&x).unwrap().iter().map(|v| v * v).sum();
            prop_assert!((energy - spectral).abs() <= 1e-6 * energy.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn delta_delta_of_affine_vanishes_inside(
            a in -10.0..10.0f64,
            b in -10.0..10.0f64,
            n in 9usize..40,
        ) {
            let window = 2;
            let x: Vec<f64> = (0..n).map(|t| a * t as f64 + b).collect();
            let dd = delta(&delta(&x, window).unwrap(), window).unwrap();
            for &v in &dd[2 * window..n - 2 * window] {
                prop_assert!(v.abs() < 1e-9);
            }
        }

        #[test]
        fn std_matches_two_pass(x in prop::collection::vec(-1e3..1e3f64, 1..200)) {
            let n = x.len() as f64;
            let m = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            let got = stat_descriptors(&x).unwrap().std;
            prop_assert!((got - var.sqrt()).abs() <= 1e-12 * var.sqrt().max(1.0));
        }
    }
}
