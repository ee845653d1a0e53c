//! Precision/recall against planted ground truth, FWER simulation under the
//! global null, and timed benchmark runs of both methods.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{median_binarize, mine_binary};
use crate::data::{canonicalize_labels, Dataset};
use crate::miner::{mine, MinerOptions, MiningResult};
use crate::synth::generate_null;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Baseline,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub true_positives: usize,
    pub num_significant: usize,
    pub ground_truth_size: usize,
    /// `TP / |S|`, set to 1 when nothing is significant (see `precision_na`).
    pub precision: f64,
    pub precision_na: bool,
    /// `TP / 2^|A|`; the denominator counts the empty set.
    pub recall: f64,
    /// `TP / (2^|A| - 1)`.
    pub recall_nonempty: f64,
}

/// A significant set `J` is a true positive when `J ⊆ A`.
pub fn precision_recall(significant: &[Vec<usize>], ground_truth: &[usize]) -> PrecisionRecall {
    let tp = significant
        .iter()
        .filter(|j| j.iter().all(|f| ground_truth.contains(f)))
        .count();
    let mut truth = ground_truth.to_vec();
    truth.sort_unstable();
    truth.dedup();
    let a = truth.len() as i32;
    let subsets = 2f64.powi(a);
    let s = significant.len();
    PrecisionRecall {
        true_positives: tp,
        num_significant: s,
        ground_truth_size: truth.len(),
        precision: if s == 0 { 1.0 } else { tp as f64 / s as f64 },
        precision_na: s == 0,
        recall: tp as f64 / subsets,
        recall_nonempty: if a == 0 {
            0.0
        } else {
            tp as f64 / (subsets - 1.0)
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerSummary {
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub testable_count: usize,
    pub sigma_final: f64,
}

impl From<&MiningResult> for MinerSummary {
    fn from(r: &MiningResult) -> Self {
        Self {
            nodes_visited: r.stats.nodes_visited,
            nodes_pruned: r.stats.nodes_pruned,
            testable_count: r.correction_factor,
            sigma_final: r.sigma_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    #[serde(flatten)]
    pub metrics: PrecisionRecall,
    /// Milliseconds resolution.
    pub runtime_seconds: f64,
    pub miner_stats: MinerSummary,
}

fn round_ms(seconds: f64) -> f64 {
    (seconds * 1e3).round() / 1e3
}

/// Runs one method on `d` and scores it against the planted features
/// `ground_truth` (0-based source indices). For the baseline the truth is
/// every binarized child of a planted feature, and binarization is not timed.
pub fn benchmark(
    d: &Dataset,
    ground_truth: &[usize],
    method: Method,
    alpha: f64,
    opts: &MinerOptions,
) -> Result<(EvalReport, MiningResult)> {
    let (d, _) = canonicalize_labels(d);
    let (result, truth) = match method {
        Method::Proposed => (mine(&d, alpha, opts)?, ground_truth.to_vec()),
        Method::Baseline => {
            let b = median_binarize(&d);
            let start = Instant::now();
            let mut r = mine_binary(&b, alpha, opts)?;
            r.stats.wall_time_seconds = start.elapsed().as_secs_f64();
            (r, b.children_of(ground_truth))
        }
    };
    let sets: Vec<Vec<usize>> = result
        .significant
        .iter()
        .map(|s| s.combination.features.clone())
        .collect();
    let report = EvalReport {
        method,
        metrics: precision_recall(&sets, &truth),
        runtime_seconds: round_ms(result.stats.wall_time_seconds),
        miner_stats: MinerSummary::from(&result),
    };
    Ok((report, result))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub r1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerReport {
    pub spec: NullSpec,
    pub alpha: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub runs_with_discovery: usize,
    pub fwer: f64,
}

/// Per-repetition seeds drawn from a ChaCha20 stream keyed by `master_seed`.
pub fn repetition_seeds(master_seed: u64, repetitions: usize) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    (0..repetitions).map(|_| rng.next_u64()).collect()
}

/// Fraction of null datasets on which at least one combination is declared
/// significant. Repetitions are spread over `threads` workers.
pub fn fwer_simulation(
    spec: NullSpec,
    alpha: f64,
    repetitions: usize,
    master_seed: u64,
    threads: usize,
) -> Result<FwerReport> {
    if repetitions == 0 {
        return Err(crate::Error::OutOfRange(
            "repetitions must be at least 1".into(),
        ));
    }
    let seeds = repetition_seeds(master_seed, repetitions);
    let opts = MinerOptions::default();
    let run = |seed: u64| -> Result<bool> {
        let d = generate_null(spec.n_samples, spec.n_features, spec.r1, seed)?;
        Ok(!mine(&d, alpha, &opts)?.significant.is_empty())
    };
    let threads = threads.clamp(1, repetitions);
    let hits: Vec<Result<usize>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let seeds = &seeds;
                let run = &run;
                scope.spawn(move || {
                    let mut count = 0;
                    for seed in seeds.iter().skip(t).step_by(threads) {
                        count += usize::from(run(*seed)?);
                    }
                    Ok(count)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fwer worker panicked"))
            .collect()
    });
    let mut runs_with_discovery = 0;
    for h in hits {
        runs_with_discovery += h?;
    }
    Ok(FwerReport {
        spec,
        alpha,
        repetitions,
        master_seed,
        runs_with_discovery,
        fwer: runs_with_discovery as f64 / repetitions as f64,
    })
}
