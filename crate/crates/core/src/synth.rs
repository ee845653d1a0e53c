//! Synthetic data with planted class-associated features.
//!
//! All values are drawn uniformly on `[0, 1]` and the first `N1 = round(N r1)`
//! rows are labelled 1. Each planted column is then sorted in decreasing order,
//! so class-1 rows receive the largest values, and Gaussian noise is added.
//! Noisy values are not clipped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

pub const RNG_NAME: &str = "chacha20";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub r1: f64,
    pub assoc_frac: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// 20% planted features and noise variance 0.2.
    pub fn new(n_samples: usize, n_features: usize, r1: f64, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            r1,
            assoc_frac: 0.2,
            noise_sd: 0.2f64.sqrt(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0 && self.r1 <= 0.5) {
            return Err(Error::InvalidSpec(format!(
                "r1 = {} not in (0, 1/2]",
                self.r1
            )));
        }
        if !(self.assoc_frac > 0.0 && self.assoc_frac <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "assoc_frac = {} not in (0, 1]",
                self.assoc_frac
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "noise_sd = {} must be >= 0",
                self.noise_sd
            )));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidSpec("n_features must be positive".into()));
        }
        self.minor_count().map(|_| ())
    }

    fn minor_count(&self) -> Result<usize> {
        let n1 = (self.n_samples as f64 * self.r1).round() as usize;
        if n1 == 0 || n1 >= self.n_samples {
            return Err(Error::InvalidSpec(format!(
                "minor class size {n1} out of range for N = {}",
                self.n_samples
            )));
        }
        Ok(n1)
    }

    /// Number of planted features, `ceil(assoc_frac * n)`.
    pub fn planted_count(&self) -> usize {
        ((self.assoc_frac * self.n_features as f64).ceil() as usize).min(self.n_features)
    }
}

/// Ground-truth sidecar written next to a generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub spec: SynthSpec,
    pub rng: String,
    pub seed: u64,
    /// 1-based indices of the planted features.
    pub ground_truth: Vec<usize>,
    pub version: String,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    /// 0-based indices of the planted features.
    pub ground_truth: Vec<usize>,
}

impl SynthData {
    pub fn metadata(&self, spec: &SynthSpec) -> SynthMetadata {
        SynthMetadata {
            spec: spec.clone(),
            rng: RNG_NAME.to_string(),
            seed: spec.seed,
            ground_truth: self.ground_truth.iter().map(|j| j + 1).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

fn labels(n_samples: usize, n1: usize) -> Vec<u8> {
    (0..n_samples).map(|i| u8::from(i < n1)).collect()
}

fn uniform_columns(rng: &mut ChaCha20Rng, n_samples: usize, n_features: usize) -> Vec<Vec<f64>> {
    (0..n_features)
        .map(|_| (0..n_samples).map(|_| rng.random::<f64>()).collect())
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let n1 = spec.minor_count()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut columns = uniform_columns(&mut rng, spec.n_samples, spec.n_features);
    let planted = spec.planted_count();
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    for col in columns.iter_mut().take(planted) {
        col.sort_by(|a, b| b.total_cmp(a));
        if spec.noise_sd > 0.0 {
            for v in col.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
    }
    let dataset = Dataset::with_default_names(columns, labels(spec.n_samples, n1))?;
    Ok(SynthData {
        dataset,
        ground_truth: (0..planted).collect(),
    })
}

/// Data under the global null: uniform features, labels independent of them.
pub fn generate_null(n_samples: usize, n_features: usize, r1: f64, seed: u64) -> Result<Dataset> {
    let spec = SynthSpec::new(n_samples, n_features, r1, seed);
    spec.validate()?;
    let n1 = spec.minor_count()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let columns = uniform_columns(&mut rng, n_samples, n_features);
    Dataset::with_default_names(columns, labels(n_samples, n1))
}
