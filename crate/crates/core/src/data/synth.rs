//! Synthetic TEP-like process data.
//!
//! Every feature of a run is an AR(1) process, optionally plus a sinusoid and
//! a random-walk drift. Fault class `c > 0` behaves identically until
//! `fault_onset`, after which a class-specific mean shift and a class-specific
//! oscillation are added to a class-specific subset of features. The shift
//! alone is invisible to window-local autocorrelation and non-DC spectral
//! features, hence the oscillation.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, SimulationRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_features: usize,
    pub classes: usize,
    pub runs_per_class: usize,
    pub samples_per_run: usize,
    pub seed: u64,
    pub ar_coefficient: f64,
    /// Innovation standard deviation of the AR(1) part.
    pub noise_std: f64,
    pub seasonal_amplitude: f64,
    pub seasonal_period: usize,
    /// Step standard deviation of the random-walk drift; 0 disables it.
    pub trend_std: f64,
    /// Last unaffected sample (1-based) of a fault run.
    pub fault_onset: usize,
    /// Mean shift in units of the stationary AR standard deviation.
    pub fault_shift: f64,
    /// Amplitude of the fault oscillation, same units.
    pub fault_oscillation: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_features: 8,
            classes: 4,
            runs_per_class: 20,
            samples_per_run: 200,
            seed: 0,
            ar_coefficient: 0.5,
            noise_std: 1.0,
            seasonal_amplitude: 0.0,
            seasonal_period: 24,
            trend_std: 0.0,
            fault_onset: 20,
            fault_shift: 5.0,
            fault_oscillation: 3.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidArgument(format!("synthetic spec: {m}")));
        if self.n_features == 0 || self.classes == 0 || self.runs_per_class == 0 || self.samples_per_run < 2 {
            return bad("n_features, classes and runs_per_class must be positive, samples_per_run >= 2");
        }
        if !(self.ar_coefficient.abs() < 1.0) {
            return bad("ar_coefficient must lie in (-1, 1)");
        }
        if !(self.noise_std > 0.0) || self.trend_std < 0.0 || self.seasonal_amplitude < 0.0 {
            return bad("noise_std must be positive; trend_std and seasonal_amplitude non-negative");
        }
        if self.seasonal_amplitude > 0.0 && self.seasonal_period < 2 {
            return bad("seasonal_period must be at least 2");
        }
        if ![self.fault_shift, self.fault_oscillation].iter().all(|v| v.is_finite()) {
            return bad("fault parameters must be finite");
        }
        Ok(())
    }

    /// Standard deviation of the stationary AR(1) component.
    pub fn ar_std(&self) -> f64 {
        self.noise_std / (1.0 - self.ar_coefficient * self.ar_coefficient).sqrt()
    }
}

/// Per-class fault signature.
struct Fault {
    /// Signed direction per feature, 0 for unaffected features.
    direction: Vec<f64>,
    period: f64,
}

fn fault_signature(class: usize, n: usize, seed: u64) -> Fault {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_fa17 ^ (class as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut direction: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => -1.0,
            1 => 0.0,
            _ => 1.0,
        })
        .collect();
    // Guarantee a distinct, non-empty footprint per class.
    let anchor = (class - 1) % n;
    direction[anchor] = if (class - 1) / n % 2 == 0 { 1.0 } else { -1.0 };
    Fault {
        direction,
        period: 2.0 + ((class - 1) % 4) as f64,
    }
}

/// Records sorted by (class, run, sample); classes are `0..classes`, runs
/// and samples are 1-based.
pub fn synthesize(spec: &SynthSpec) -> Result<Vec<SimulationRecord>, DataError> {
    spec.validate()?;
    let n = spec.n_features;
    let noise = Normal::new(0.0, spec.noise_std).expect("validated");
    let trend = Normal::new(0.0, spec.trend_std.max(f64::MIN_POSITIVE)).expect("validated");
    let sd = spec.ar_std();
    let phi = spec.ar_coefficient;
    let mut out = Vec::with_capacity(spec.classes * spec.runs_per_class * spec.samples_per_run);
    for class in 0..spec.classes {
        let fault = (class > 0).then(|| fault_signature(class, n, spec.seed));
        for run in 1..=spec.runs_per_class {
            let run_seed = spec.seed.wrapping_mul(1_000_003) ^ ((class as u64) << 32) ^ run as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let mut ar: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng) / (1.0 - phi * phi).sqrt()).collect();
            let mut drift = vec![0.0; n];
            let phase: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            for t in 1..=spec.samples_per_run {
                if t > 1 {
                    for a in ar.iter_mut() {
                        *a = phi * *a + noise.sample(&mut rng);
                    }
                }
                if spec.trend_std > 0.0 {
                    for d in drift.iter_mut() {
                        *d += trend.sample(&mut rng);
                    }
                }
                let features = (0..n)
                    .map(|j| {
                        let mut v = ar[j] + drift[j];
                        if spec.seasonal_amplitude > 0.0 {
                            let w = 2.0 * PI * t as f64 / spec.seasonal_period as f64;
                            v += spec.seasonal_amplitude * (w + phase[j]).sin();
                        }
                        if let Some(f) = &fault {
                            if t > spec.fault_onset && f.direction[j] != 0.0 {
                                let osc = (2.0 * PI * t as f64 / f.period).cos();
                                v += f.direction[j] * sd * (spec.fault_shift + spec.fault_oscillation * osc);
                            }
                        }
                        v
                    })
                    .collect();
                out.push(SimulationRecord {
                    fault_class: class as u32,
                    simulation_run: run as u32,
                    sample_index: t as u32,
                    features,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{records_to_dataset, ColumnMapping};
    use crate::features::{dominant_values, SignalWindow};
    use crate::stationary::adf::adf_test;

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec { runs_per_class: 2, samples_per_run: 30, ..SynthSpec::default() };
        assert_eq!(synthesize(&spec).unwrap(), synthesize(&spec).unwrap());
        let other = SynthSpec { seed: 1, ..spec.clone() };
        assert_ne!(synthesize(&spec).unwrap(), synthesize(&other).unwrap());
        assert_eq!(synthesize(&spec).unwrap().len(), 4 * 2 * 30);
    }

    #[test]
    fn normal_class_is_stationary() {
        let spec = SynthSpec { classes: 1, runs_per_class: 10, samples_per_run: 500, ..SynthSpec::default() };
        let recs = synthesize(&spec).unwrap();
        let names = ColumnMapping::generic(spec.n_features).feature_columns;
        let ds = records_to_dataset(&recs, &names, |_| 0).unwrap();
        let mut stationary = 0;
        let mut total = 0;
        for seg in ds.segments() {
            for j in 0..spec.n_features {
                total += 1;
                if adf_test(&ds.segment_column(seg, j), None, 0.05, None).unwrap().is_stationary {
                    stationary += 1;
                }
            }
        }
        assert!(stationary * 10 >= total * 9, "{stationary}/{total}");
    }

    #[test]
    fn fault_changes_dominant_features() {
        let spec = SynthSpec { classes: 2, runs_per_class: 100, samples_per_run: 60, ..SynthSpec::default() };
        let recs = synthesize(&spec).unwrap();
        let sig = fault_signature(1, spec.n_features, spec.seed);
        let j = sig.direction.iter().position(|d| *d != 0.0).unwrap();
        // One 5-sample window per run, taken after the onset.
        let feature = |class: u32| -> Vec<[f64; 4]> {
            (1..=100u32)
                .map(|run| {
                    let w: Vec<f64> = recs
                        .iter()
                        .filter(|r| r.fault_class == class && r.simulation_run == run && (41..46).contains(&r.sample_index))
                        .map(|r| r.features[j])
                        .collect();
                    dominant_values(&SignalWindow::new(&w).unwrap()).unwrap().as_array()
                })
                .collect()
        };
        let (normal, faulty) = (feature(0), feature(1));
        let separated = (0..4).any(|k| {
            let a: Vec<f64> = normal.iter().map(|v| v[k]).collect();
            let b: Vec<f64> = faulty.iter().map(|v| v[k]).collect();
            let ma = a.iter().sum::<f64>() / 100.0;
            let mb = b.iter().sum::<f64>() / 100.0;
            let sa = (a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / 99.0).sqrt();
            (mb - ma).abs() > 3.0 * sa
        });
        assert!(separated);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(synthesize(&SynthSpec { ar_coefficient: 1.0, ..SynthSpec::default() }).is_err());
        assert!(synthesize(&SynthSpec { classes: 0, ..SynthSpec::default() }).is_err());
    }
}
