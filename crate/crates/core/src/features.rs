//! Windowed autocorrelation and DFT features.
//!
//! For every window and every original feature the two autocorrelation values
//! of largest magnitude (lags `1..W`) and the two largest DFT amplitudes
//! (bins `1..=W/2`) are appended as extra features. `W` is the window's own
//! time-step count.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::timeseries::WindowedDataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Zero-variance window; autocorrelation is undefined.
    #[error("degenerate signal: window has zero variance")]
    Degenerate,
}

/// Number of derived values appended per original feature.
pub const DERIVED_PER_FEATURE: usize = 4;

/// Names of the derived columns, in output order.
pub const DERIVED_SUFFIXES: [&str; DERIVED_PER_FEATURE] = ["ac1", "ac2", "dft1", "dft2"];

/// A window of `W >= 2` finite samples.
#[derive(Debug, Clone, Copy)]
pub struct SignalWindow<'a> {
    samples: &'a [f64],
}

impl<'a> SignalWindow<'a> {
    pub fn new(samples: &'a [f64]) -> Result<Self, FeatureError> {
        if samples.len() < 2 {
            return Err(FeatureError::InvalidArgument(format!(
                "window length {} < 2",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidArgument(
                "window contains non-finite samples".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        self.samples
    }

    fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sum of squared deviations from the window mean, or `None` when the
    /// window is numerically constant.
    fn centered_energy(&self, mean: f64) -> Option<f64> {
        let energy: f64 = self.samples.iter().map(|x| (x - mean).powi(2)).sum();
        let scale: f64 = self.samples.iter().map(|x| x * x).sum();
        if energy <= f64::EPSILON * self.samples.len() as f64 * scale || energy == 0.0 {
            None
        } else {
            Some(energy)
        }
    }
}

/// Autocorrelation of the window at lag `k`.
pub fn autocorrelation(window: &SignalWindow<'_>, k: usize) -> Result<f64, FeatureError> {
    let w = window.len();
    if k >= w {
        return Err(FeatureError::InvalidArgument(format!(
            "lag {k} outside window of length {w}"
        )));
    }
    let mean = window.mean();
    let denom = window.centered_energy(mean).ok_or(FeatureError::Degenerate)?;
    Ok(lagged_product(window.samples, mean, k) / denom)
}

fn lagged_product(x: &[f64], mean: f64, k: usize) -> f64 {
    x.iter()
        .zip(&x[k..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum()
}

/// Autocorrelation at every lag `0..W`; all zeros for a degenerate window.
pub fn autocorrelation_function(window: &SignalWindow<'_>) -> Vec<f64> {
    let mean = window.mean();
    match window.centered_energy(mean) {
        None => vec![0.0; window.len()],
        Some(denom) => (0..window.len())
            .map(|k| {
                if k == 0 {
                    1.0
                } else {
                    lagged_product(window.samples, mean, k) / denom
                }
            })
            .collect(),
    }
}

/// Single DFT bin `k` of the window, index re-based so the first sample is `j = 0`.
pub fn dft(window: &SignalWindow<'_>, k: usize) -> Result<Complex64, FeatureError> {
    let w = window.len();
    if k >= w {
        return Err(FeatureError::InvalidArgument(format!(
            "bin {k} outside window of length {w}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &x) in window.samples.iter().enumerate() {
        // Reduce k*j mod W first so the angle stays small and exact in the index.
        let idx = (k * j) % w;
        let angle = -2.0 * PI * idx as f64 / w as f64;
        acc += Complex64::from_polar(x, angle);
    }
    Ok(acc)
}

/// Full spectrum of the window. Power-of-two lengths use an iterative radix-2
/// FFT; other lengths fall back to direct evaluation of each bin.
pub fn spectrum(window: &SignalWindow<'_>) -> Vec<Complex64> {
    let w = window.len();
    if w.is_power_of_two() {
        fft_radix2(window.samples)
    } else {
        (0..w)
            .map(|k| dft(window, k).expect("bin within window"))
            .collect()
    }
}

fn fft_radix2(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let bits = n.trailing_zeros();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for (i, &x) in samples.iter().enumerate() {
        let j = if bits == 0 {
            0
        } else {
            i.reverse_bits() >> (usize::BITS - bits)
        };
        buf[j] = Complex64::new(x, 0.0);
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for m in 0..half {
                // Twiddle from the exact index fraction m / len.
                let tw = Complex64::from_polar(1.0, -2.0 * PI * m as f64 / len as f64);
                let a = buf[start + m];
                let b = buf[start + m + half] * tw;
                buf[start + m] = a + b;
                buf[start + m + half] = a - b;
            }
        }
        len <<= 1;
    }
    buf
}

/// The two dominant autocorrelation values and DFT amplitudes of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantFeatures {
    /// Signed AC values, ordered by decreasing magnitude.
    pub ac_dominant: [f64; 2],
    /// DFT amplitudes, decreasing.
    pub dft_dominant: [f64; 2],
}

impl DominantFeatures {
    pub const ZERO: Self = Self {
        ac_dominant: [0.0; 2],
        dft_dominant: [0.0; 2],
    };

    pub fn as_array(&self) -> [f64; DERIVED_PER_FEATURE] {
        [
            self.ac_dominant[0],
            self.ac_dominant[1],
            self.dft_dominant[0],
            self.dft_dominant[1],
        ]
    }
}

/// Top two entries of `values` by `key`, earlier index winning ties.
fn top_two(values: impl Iterator<Item = f64>, key: impl Fn(f64) -> f64) -> [f64; 2] {
    let mut best: [Option<f64>; 2] = [None, None];
    for v in values {
        let kv = key(v);
        match best {
            [None, _] => best[0] = Some(v),
            [Some(b0), _] if kv > key(b0) => {
                best[1] = best[0];
                best[0] = Some(v);
            }
            [_, None] => best[1] = Some(v),
            [_, Some(b1)] if kv > key(b1) => best[1] = Some(v),
            _ => {}
        }
    }
    [best[0].unwrap_or(0.0), best[1].unwrap_or(0.0)]
}

pub fn dominant_values(window: &SignalWindow<'_>) -> Result<DominantFeatures, FeatureError> {
    let w = window.len();
    if w < 4 {
        return Err(FeatureError::InvalidArgument(format!(
            "dominant values need a window of at least 4 samples, got {w}"
        )));
    }
    let mean = window.mean();
    let Some(denom) = window.centered_energy(mean) else {
        return Ok(DominantFeatures::ZERO);
    };
    let ac = (1..w).map(|k| lagged_product(window.samples, mean, k) / denom);
    let ac_dominant = top_two(ac, f64::abs);

    let dft_dominant = if w.is_power_of_two() {
        let spec = fft_radix2(window.samples);
        top_two(spec[1..=w / 2].iter().map(|c| c.norm()), |v| v)
    } else {
        top_two(
            (1..=w / 2).map(|k| dft(window, k).expect("bin within window").norm()),
            |v| v,
        )
    };
    Ok(DominantFeatures {
        ac_dominant,
        dft_dominant,
    })
}

/// Appends `[ac1, ac2, dft1, dft2]` for every original feature.
///
/// Output width is `5n`: the `n` raw values followed by the derived block,
/// feature-major. Derived values describe the whole window and are repeated
/// at each time step.
pub fn engineer_features(data: &WindowedDataset) -> Result<WindowedDataset, FeatureError> {
    let ts = data.ts();
    if ts < 4 {
        return Err(FeatureError::InvalidArgument(format!(
            "feature engineering needs ts >= 4, got {ts}"
        )));
    }
    let n = data.n_features();
    let out_n = n * (1 + DERIVED_PER_FEATURE);
    let mut values = Vec::with_capacity(data.len() * ts * out_n);
    let mut column = vec![0.0; ts];
    let mut derived = vec![0.0; n * DERIVED_PER_FEATURE];
    for i in 0..data.len() {
        let win = data.window(i);
        for j in 0..n {
            for (t, c) in column.iter_mut().enumerate() {
                *c = win[t * n + j];
            }
            let sw = SignalWindow::new(&column)?;
            let dom = dominant_values(&sw)?;
            derived[j * DERIVED_PER_FEATURE..(j + 1) * DERIVED_PER_FEATURE]
                .copy_from_slice(&dom.as_array());
        }
        for t in 0..ts {
            values.extend_from_slice(&win[t * n..(t + 1) * n]);
            values.extend_from_slice(&derived);
        }
    }
    let mut names = data.feature_names().to_vec();
    for name in data.feature_names() {
        names.extend(DERIVED_SUFFIXES.iter().map(|s| format!("{name}.{s}")));
    }
    WindowedDataset::new(values, data.labels().to_vec(), ts, names)
        .map_err(|e| FeatureError::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the DFT sum with the exponent formed from the
    /// un-reduced index product.
    fn naive_dft(x: &[f64], k: usize) -> Complex64 {
        let w = x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(j, &v)| v * (Complex64::new(0.0, -2.0 * PI * k as f64 * j as f64 / w)).exp())
            .sum()
    }

    fn brute_ac(x: &[f64], k: usize) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let mut num = 0.0;
        for i in 0..x.len() - k {
            num += (x[i] - m) * (x[i + k] - m);
        }
        let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        num / den
    }

    #[test]
    fn lag_zero_is_one() {
        let x = [0.3, -1.2, 4.0, 2.2, 0.0];
        let w = SignalWindow::new(&x).unwrap();
        assert_eq!(autocorrelation(&w, 0).unwrap(), 1.0);
    }

    #[test]
    fn sine_period_eight() {
        let x: Vec<f64> = (0..32).map(|t| (2.0 * PI * t as f64 / 8.0).sin()).collect();
        let w = SignalWindow::new(&x).unwrap();
        let ac = autocorrelation(&w, 8).unwrap();
        // 24 overlapping products over a 32-term denominator
        assert!((ac - brute_ac(&x, 8)).abs() < 1e-12);
        assert!((ac - 0.75).abs() < 1e-12);
        let long: Vec<f64> = (0..1024).map(|t| (2.0 * PI * t as f64 / 8.0).sin()).collect();
        let ac = autocorrelation(&SignalWindow::new(&long).unwrap(), 8).unwrap();
        assert!((ac - 1.0).abs() < 0.05);
    }

    #[test]
    fn alternating_is_anticorrelated() {
        let x = [1., -1., 1., -1., 1., -1., 1., -1.];
        let w = SignalWindow::new(&x).unwrap();
        let ac = autocorrelation(&w, 1).unwrap();
        assert!((ac - (-7.0 / 8.0)).abs() < 1e-12, "{ac}");
    }

    #[test]
    fn degenerate_and_bad_lag() {
        let x = [2.5; 6];
        let w = SignalWindow::new(&x).unwrap();
        assert_eq!(autocorrelation(&w, 1), Err(FeatureError::Degenerate));
        let y = [1.0, 2.0, 3.0];
        let w = SignalWindow::new(&y).unwrap();
        assert!(matches!(autocorrelation(&w, 3), Err(FeatureError::InvalidArgument(_))));
        assert!(matches!(dft(&w, 3), Err(FeatureError::InvalidArgument(_))));
        assert!(SignalWindow::new(&[1.0]).is_err());
    }

    #[test]
    fn constant_spectrum_is_dc_only() {
        let x = [1.5; 12];
        let w = SignalWindow::new(&x).unwrap();
        let dc = dft(&w, 0).unwrap();
        assert!((dc.re - 18.0).abs() < 1e-12 && dc.im.abs() < 1e-12);
        for k in 1..12 {
            assert!(dft(&w, k).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn cosine_bin_three() {
        let x: Vec<f64> = (0..16)
            .map(|t| (2.0 * PI * 3.0 * t as f64 / 16.0).cos())
            .collect();
        let w = SignalWindow::new(&x).unwrap();
        assert!((naive_dft(&x, 3).norm() - 8.0).abs() < 1e-9);
        assert!((dft(&w, 3).unwrap().norm() - 8.0).abs() < 1e-9);
        let dom = dominant_values(&w).unwrap();
        assert!((dom.dft_dominant[0] - 8.0).abs() < 1e-9);
        assert!(dom.dft_dominant[1] < 1e-9);
    }

    #[test]
    fn spectrum_matches_naive_for_random_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &len in &[4usize, 5, 8, 12, 16, 64] {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w = SignalWindow::new(&x).unwrap();
            for (k, bin) in spectrum(&w).iter().enumerate() {
                let r = naive_dft(&x, k);
                assert!((bin - r).norm() < 1e-9, "len {len} bin {k}");
            }
        }
    }

    #[test]
    fn square_wave_ties_prefer_smaller_lag() {
        let x: Vec<f64> = (0..16).map(|t| if t % 4 < 2 { 1.0 } else { -1.0 }).collect();
        let w = SignalWindow::new(&x).unwrap();
        let all: Vec<f64> = (1..16).map(|k| brute_ac(&x, k)).collect();
        let dom = dominant_values(&w).unwrap();
        // brute force: lag 2 = -14/16, lag 4 = 12/16
        let mut order: Vec<usize> = (0..15).collect();
        order.sort_by(|&a, &b| all[b].abs().partial_cmp(&all[a].abs()).unwrap().then(a.cmp(&b)));
        assert_eq!(dom.ac_dominant, [all[order[0]], all[order[1]]]);
        assert!(dom.ac_dominant.contains(&all[3]));
        assert!((all[3] * 16.0 / 12.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_window_yields_zeros() {
        let x = [3.0; 5];
        let w = SignalWindow::new(&x).unwrap();
        assert_eq!(dominant_values(&w).unwrap(), DominantFeatures::ZERO);
        let short = [1.0, 2.0, 3.0];
        assert!(dominant_values(&SignalWindow::new(&short).unwrap()).is_err());
    }

    #[test]
    fn engineer_features_layout() {
        // one window, ts=16, two features: cosine in feature 0, ramp in feature 1
        let ts = 16;
        let mut values = Vec::new();
        for t in 0..ts {
            values.push((2.0 * PI * 3.0 * t as f64 / 16.0).cos());
            values.push(t as f64);
        }
        let data = WindowedDataset::new(values, vec![2], ts, vec!["a".into(), "b".into()]).unwrap();
        let out = engineer_features(&data).unwrap();
        assert_eq!(out.n_features(), 10);
        assert_eq!(out.labels(), &[2]);
        assert_eq!(&out.feature_names()[2..6], &["a.ac1", "a.ac2", "a.dft1", "a.dft2"]);
        let x: Vec<f64> = (0..ts).map(|t| data.step(0, t)[0]).collect();
        for t in 0..ts {
            let step = out.step(0, t);
            assert_eq!(&step[..2], data.step(0, t));
            assert!((step[4] - naive_dft(&x, 3).norm()).abs() < 1e-9);
        }
        let tiny = WindowedDataset::new(vec![0.0; 3], vec![0], 3, vec!["a".into()]).unwrap();
        assert!(engineer_features(&tiny).is_err());
    }

    proptest! {
        #[test]
        fn ac_bounded(x in prop::collection::vec(-100.0f64..100.0, 2..40), k in 0usize..40) {
            let w = SignalWindow::new(&x).unwrap();
            prop_assume!(k < x.len());
            if let Ok(v) = autocorrelation(&w, k) {
                prop_assert!(v.abs() <= 1.0 + 1e-9);
            }
        }

        #[test]
        fn conjugate_symmetry(x in prop::collection::vec(-10.0f64..10.0, 2..64)) {
            let w = SignalWindow::new(&x).unwrap();
            let s = spectrum(&w);
            let n = x.len();
            for k in 1..n {
                prop_assert!((s[k].norm() - s[n - k].norm()).abs() < 1e-9);
            }
        }

        #[test]
        fn dominant_sorted(x in prop::collection::vec(-10.0f64..10.0, 4..40)) {
            let d = dominant_values(&SignalWindow::new(&x).unwrap()).unwrap();
            prop_assert!(d.dft_dominant[0] >= d.dft_dominant[1] && d.dft_dominant[1] >= 0.0);
            prop_assert!(d.ac_dominant[0].abs() >= d.ac_dominant[1].abs());
        }
    }
}
