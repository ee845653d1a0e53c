//! Depth-first enumeration of testable feature combinations with a rising
//! support threshold, followed by Tarone-corrected significance testing.
//!
//! The minimum attainable p-value `psi` of a combination depends on its
//! support alone. As a function of the support it decreases up to `r1` and
//! increases after it. Whenever the candidates found so far violate
//! `|T| * max_psi(T) < alpha`, the whole top `psi` level is evicted: it can
//! never satisfy the condition once more combinations are found. The support
//! threshold `sigma` is the largest support of an evicted combination on the
//! decreasing side (`eta <= r1`); every node with `eta <= sigma` has all of its
//! supersets at `psi >= psi(sigma)` and is pruned together with its subtree.
//!
//! The final testable set is therefore the union of the `psi` levels
//! `t_1 < t_2 < ... < t_k` with `|{J : psi(J) <= t_k}| * t_k < alpha`. It does
//! not depend on the exploration order or on the number of worker threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ranking::{
    class_conditional_support, compensated_sum, extend_product_into, rank_matrix, Combination,
};
use crate::stats::{g_test, min_p_value};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerOptions {
    /// Largest combination size to explore. `None` explores everything.
    pub max_order: Option<usize>,
    /// Worker threads for the search; 1 runs on the calling thread.
    pub threads: usize,
    /// Log a progress line every this many visited nodes (per worker).
    pub progress_interval: Option<u64>,
    /// Keep every pruned and removed node in [`MiningResult::trace`].
    pub record_trace: bool,
}

impl Default for MinerOptions {
    fn default() -> Self {
        Self {
            max_order: None,
            threads: 1,
            progress_interval: None,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantCombination {
    pub combination: Combination,
    pub p_value: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub wall_time_seconds: f64,
}

/// Nodes that were discarded during a traced run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    /// `(features, eta)` of nodes cut because `eta <= sigma`.
    pub pruned: Vec<(Vec<usize>, f64)>,
    /// Candidates rejected on arrival or evicted by a threshold update.
    pub removed: Vec<Combination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    /// The testable combinations, sorted by feature set.
    pub testable: Vec<Combination>,
    pub correction_factor: usize,
    /// `alpha / |T|`; `None` when nothing is testable.
    pub delta: Option<f64>,
    /// Sorted by p-value, ties by feature set.
    pub significant: Vec<SignificantCombination>,
    pub sigma_final: f64,
    /// Largest `psi` in the testable set.
    pub psi_level: Option<f64>,
    pub alpha: f64,
    pub r1: f64,
    pub n_samples: usize,
    pub n_features: usize,
    pub stats: SearchStats,
    /// Every value `sigma` took, in order.
    pub sigma_trace: Vec<f64>,
    pub trace: Option<SearchTrace>,
}

#[derive(Debug, Clone)]
struct Candidate(Combination);

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .min_p
            .total_cmp(&other.0.min_p)
            .then_with(|| self.0.features.cmp(&other.0.features))
    }
}

/// Outcome of offering a combination to the [`CandidateSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    Stored,
    Rejected,
}

/// Current testable candidates keyed by `psi` for top-level extraction.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    heap: BinaryHeap<Candidate>,
    alpha: f64,
    r1: f64,
    sigma: f64,
    /// Smallest `psi` level known to be untestable.
    psi_excluded: f64,
    sigma_trace: Vec<f64>,
    removed: Option<Vec<Combination>>,
}

impl CandidateSet {
    pub fn new(alpha: f64, r1: f64) -> Self {
        Self {
            heap: BinaryHeap::new(),
            alpha,
            r1,
            sigma: 0.0,
            psi_excluded: f64::INFINITY,
            sigma_trace: vec![0.0],
            removed: None,
        }
    }

    fn with_trace(mut self) -> Self {
        self.removed = Some(Vec::new());
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn testable_count(&self) -> usize {
        self.heap.len()
    }

    /// Largest `psi` among the stored candidates.
    pub fn psi_level(&self) -> Option<f64> {
        self.heap.peek().map(|c| c.0.min_p)
    }

    pub fn sigma_trace(&self) -> &[f64] {
        &self.sigma_trace
    }

    /// Stores `c` unless its `psi` level was already ruled out, then restores
    /// the testability condition.
    pub fn offer(&mut self, c: Combination) -> Offer {
        if c.min_p >= self.psi_excluded {
            self.discard(c);
            return Offer::Rejected;
        }
        self.heap.push(Candidate(c));
        self.raise_threshold();
        Offer::Stored
    }

    /// Evicts whole top `psi` levels until `|T| * max_psi(T) < alpha`.
    pub fn raise_threshold(&mut self) {
        while let Some(top) = self.heap.peek() {
            let level = top.0.min_p;
            if (self.heap.len() as f64) * level < self.alpha {
                break;
            }
            self.psi_excluded = self.psi_excluded.min(level);
            while self.heap.peek().is_some_and(|c| c.0.min_p == level) {
                let Candidate(c) = self.heap.pop().expect("peeked");
                self.discard(c);
            }
        }
    }

    fn discard(&mut self, c: Combination) {
        if c.support <= self.r1 && c.support > self.sigma {
            self.sigma = c.support;
            self.sigma_trace.push(c.support);
        }
        if let Some(removed) = self.removed.as_mut() {
            removed.push(c);
        }
    }

    /// The stored candidates sorted by feature set.
    pub fn into_testable(self) -> Vec<Combination> {
        let mut out: Vec<Combination> = self.heap.into_iter().map(|c| c.0).collect();
        out.sort_by(|a, b| a.features.cmp(&b.features));
        out
    }
}

/// Tests every testable combination at level `alpha / |T|`.
pub fn significance_testing(
    testable: &[Combination],
    alpha: f64,
    r1: f64,
    n_samples: usize,
) -> Result<Vec<SignificantCombination>> {
    if testable.is_empty() {
        return Ok(Vec::new());
    }
    let delta = alpha / testable.len() as f64;
    let mut out = Vec::new();
    for c in testable {
        let outcome = g_test(c.support, c.support1, r1, n_samples)?;
        if outcome.p_value < delta {
            out.push(SignificantCombination {
                combination: c.clone(),
                p_value: outcome.p_value,
                lambda: outcome.lambda,
            });
        }
    }
    out.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then_with(|| a.combination.features.cmp(&b.combination.features))
    });
    Ok(out)
}

/// Mines a canonicalized continuous dataset (`r1 <= 1/2`). The reported wall
/// time includes the rank transform.
pub fn mine(d: &Dataset, alpha: f64, opts: &MinerOptions) -> Result<MiningResult> {
    let start = Instant::now();
    let ranks = rank_matrix(d)?;
    let mut result = mine_columns(ranks.columns(), d.labels(), alpha, opts)?;
    result.stats.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Mines arbitrary `[0, 1]`-valued feature columns: normalized ranks for the
/// continuous method, raw 0/1 indicators for the binarized baseline.
pub fn mine_columns(
    columns: &[Vec<f64>],
    labels: &[u8],
    alpha: f64,
    opts: &MinerOptions,
) -> Result<MiningResult> {
    let start = Instant::now();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1)")));
    }
    let space = SearchSpace::new(columns, labels)?;
    if space.r1 > 0.5 {
        return Err(Error::NotCanonical(space.r1));
    }

    let mut state = CandidateSet::new(alpha, space.r1);
    if opts.record_trace {
        state = state.with_trace();
    }
    let shared = Shared {
        space: &space,
        opts,
        state: Mutex::new(state),
        sigma_bits: AtomicU64::new(0f64.to_bits()),
        next_root: AtomicUsize::new(0),
    };

    let threads = opts.threads.max(1).min(space.n_features());
    let outcomes: Vec<WorkerOutcome> = if threads == 1 {
        vec![Worker::new(&shared).run()]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|_| scope.spawn(|| Worker::new(&shared).run()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("miner worker panicked"))
                .collect()
        })
    };

    let mut stats = SearchStats::default();
    let mut pruned_trace = Vec::new();
    for o in outcomes {
        stats.nodes_visited += o.visited;
        stats.nodes_pruned += o.pruned;
        pruned_trace.extend(o.pruned_trace);
    }

    let mut state = shared
        .state
        .into_inner()
        .expect("candidate set lock poisoned");
    let sigma_final = state.sigma();
    let psi_level = state.psi_level();
    let sigma_trace = state.sigma_trace().to_vec();
    let removed = state.removed.take();
    let testable = state.into_testable();
    let significant = significance_testing(&testable, alpha, space.r1, space.n_samples)?;

    let trace = removed.map(|mut removed| {
        removed.sort_by(|a, b| a.features.cmp(&b.features));
        pruned_trace.sort_by(|a: &(Vec<usize>, f64), b| a.0.cmp(&b.0));
        SearchTrace {
            pruned: pruned_trace,
            removed,
        }
    });

    let m = testable.len();
    stats.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(MiningResult {
        correction_factor: m,
        delta: (m > 0).then(|| alpha / m as f64),
        testable,
        significant,
        sigma_final,
        psi_level,
        alpha,
        r1: space.r1,
        n_samples: space.n_samples,
        n_features: space.n_features(),
        stats,
        sigma_trace,
        trace,
    })
}

struct SearchSpace<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u8],
    r1: f64,
    n_samples: usize,
}

impl<'a> SearchSpace<'a> {
    fn new(columns: &'a [Vec<f64>], labels: &'a [u8]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::NoFeatures);
        }
        let n_samples = labels.len();
        if n_samples < 2 {
            return Err(Error::TooFewSamples(n_samples));
        }
        for col in columns {
            if col.len() != n_samples {
                return Err(Error::LengthMismatch {
                    expected: n_samples,
                    actual: col.len(),
                });
            }
            if col.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::OutOfRange(
                    "feature columns must lie in [0, 1]".into(),
                ));
            }
        }
        let n1 = labels.iter().filter(|&&y| y == 1).count();
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::OutOfRange("labels must be 0 or 1".into()));
        }
        if n1 == 0 || n1 == n_samples {
            return Err(Error::SingleClass(if n1 == 0 { 0 } else { 1 }));
        }
        Ok(Self {
            columns,
            labels,
            r1: n1 as f64 / n_samples as f64,
            n_samples,
        })
    }

    fn n_features(&self) -> usize {
        self.columns.len()
    }
}

struct Shared<'a> {
    space: &'a SearchSpace<'a>,
    opts: &'a MinerOptions,
    state: Mutex<CandidateSet>,
    /// Mirror of `state.sigma` for lock-free pruning checks. Non-negative
    /// floats order like their bit patterns, so `fetch_max` keeps it monotone.
    sigma_bits: AtomicU64,
    next_root: AtomicUsize,
}

impl Shared<'_> {
    fn sigma(&self) -> f64 {
        f64::from_bits(self.sigma_bits.load(AtomicOrdering::Acquire))
    }

    fn offer(&self, c: Combination) -> f64 {
        let mut state = self.state.lock().expect("candidate set lock poisoned");
        state.offer(c);
        let sigma = state.sigma();
        self.sigma_bits
            .fetch_max(sigma.to_bits(), AtomicOrdering::AcqRel);
        sigma
    }
}

struct WorkerOutcome {
    visited: u64,
    pruned: u64,
    pruned_trace: Vec<(Vec<usize>, f64)>,
}

struct Worker<'s, 'a> {
    shared: &'s Shared<'a>,
    prefix: Vec<usize>,
    visited: u64,
    pruned: u64,
    pruned_trace: Vec<(Vec<usize>, f64)>,
}

impl<'s, 'a> Worker<'s, 'a> {
    fn new(shared: &'s Shared<'a>) -> Self {
        Self {
            shared,
            prefix: Vec::new(),
            visited: 0,
            pruned: 0,
            pruned_trace: Vec::new(),
        }
    }

    fn run(mut self) -> WorkerOutcome {
        let space = self.shared.space;
        let n = space.n_features();
        let depth = self.shared.opts.max_order.unwrap_or(n).min(n);
        // buffers are sized lazily, only for depths actually reached
        let mut scratch: Vec<Vec<f64>> = vec![Vec::new(); depth];
        let root = vec![1.0; space.n_samples];
        if depth > 0 {
            loop {
                let j = self.shared.next_root.fetch_add(1, AtomicOrdering::Relaxed);
                if j >= n {
                    break;
                }
                self.visit(&root, j, &mut scratch);
            }
        }
        WorkerOutcome {
            visited: self.visited,
            pruned: self.pruned,
            pruned_trace: self.pruned_trace,
        }
    }

    /// Evaluates `prefix ∪ {j}` and, unless it is pruned, its extensions by
    /// larger feature indices.
    fn visit(&mut self, parent: &[f64], j: usize, scratch: &mut [Vec<f64>]) {
        let space = self.shared.space;
        let (child, rest) = scratch
            .split_first_mut()
            .expect("depth bounded by max_order");
        child.resize(space.n_samples, 0.0);
        extend_product_into(parent, &space.columns[j], child);
        let n = space.n_samples as f64;
        let eta = compensated_sum(child.iter().copied()) / n;

        self.visited += 1;
        if let Some(every) = self.shared.opts.progress_interval {
            if every > 0 && self.visited.is_multiple_of(every) {
                log::info!(
                    "visited {} nodes, pruned {}, sigma = {:.6}",
                    self.visited,
                    self.pruned,
                    self.shared.sigma()
                );
            }
        }

        self.prefix.push(j);
        if eta <= self.shared.sigma() {
            self.pruned += 1;
            if self.shared.opts.record_trace {
                self.pruned_trace.push((self.prefix.clone(), eta));
            }
            self.prefix.pop();
            return;
        }

        let (eta1, eta0) = class_conditional_support(child, space.labels).expect("lengths checked");
        let min_p = min_p_value(eta, space.r1, space.n_samples).expect("supports lie in [0, 1]");
        let sigma = self.shared.offer(Combination {
            features: self.prefix.clone(),
            support: eta,
            support1: eta1,
            support0: eta0,
            min_p,
        });

        // once eta <= sigma every child would be pruned on arrival
        if eta > sigma && !rest.is_empty() {
            let child: &[f64] = child;
            for k in (j + 1)..space.n_features() {
                self.visit(child, k, rest);
            }
        }
        self.prefix.pop();
    }
}
