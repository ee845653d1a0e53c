//! Test-only helpers: seeded dataset generators and a brute-force oracle that
//! enumerates every nonempty combination and applies the Tarone condition by
//! sorting all minimum p-values.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sigcomb::ranking::{class_conditional_support, copula_support};
use sigcomb::stats::{chi2_sf_df1, min_p_value};
use sigcomb::{canonicalize_labels, rank_matrix, Dataset, MiningResult};

/// Random dataset with `n1 = round(N r1)` positives at random rows. Columns
/// listed in `planted` are shifted upwards on positive rows; with `ties` set,
/// values are rounded to one decimal.
pub fn random_dataset(
    seed: u64,
    n_samples: usize,
    n_features: usize,
    r1: f64,
    planted: &[usize],
    ties: bool,
) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n1 = ((n_samples as f64 * r1).round() as usize).clamp(1, n_samples - 1);
    let mut labels: Vec<u8> = (0..n_samples).map(|i| u8::from(i < n1)).collect();
    labels.shuffle(&mut rng);
    let columns = (0..n_features)
        .map(|j| {
            (0..n_samples)
                .map(|i| {
                    let mut v: f64 = rng.random();
                    if planted.contains(&j) && labels[i] == 1 {
                        v += 0.6;
                    }
                    if ties {
                        v = (v * 10.0).round() / 10.0;
                    }
                    v
                })
                .collect()
        })
        .collect();
    Dataset::with_default_names(columns, labels).unwrap()
}

/// A mixed bag of small datasets for oracle comparisons: sizes, class ratios,
/// ties and planted signal all vary with the seed.
pub fn oracle_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    let n_samples = rng.random_range(8..=50);
    let n_features = rng.random_range(2..=8);
    let r1 = [0.5, 0.4, 0.3, 0.2][rng.random_range(0..4)];
    let planted: Vec<usize> = (0..n_features).filter(|_| rng.random_bool(0.3)).collect();
    let ties = rng.random_bool(0.3);
    let d = random_dataset(seed, n_samples, n_features, r1, &planted, ties);
    canonicalize_labels(&d).0
}

#[derive(Debug, Clone)]
pub struct OracleCombo {
    pub features: Vec<usize>,
    pub eta: f64,
    pub eta1: f64,
    pub psi: f64,
    pub lambda: f64,
    pub p_value: f64,
}

/// G statistic written out cell by cell.
pub fn g_statistic(eta: f64, eta1: f64, r1: f64, n_samples: usize) -> f64 {
    let r0 = 1.0 - r1;
    let eta0 = eta - eta1;
    let observed = [eta1, eta0, (r1 - eta1).max(0.0), (r0 - eta0).max(0.0)];
    let expected = [eta * r1, eta * r0, (1.0 - eta) * r1, (1.0 - eta) * r0];
    let kl: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(o, _)| **o > 0.0)
        .map(|(o, e)| o * (o / e).ln())
        .sum();
    (2.0 * n_samples as f64 * kl).max(0.0)
}

/// Every nonempty combination of the rank columns, products taken in
/// ascending feature order.
pub fn enumerate(ranks: &[Vec<f64>], labels: &[u8]) -> Vec<OracleCombo> {
    let n = ranks.len();
    let n_samples = labels.len();
    let r1 = labels.iter().filter(|&&y| y == 1).count() as f64 / n_samples as f64;
    let mut out = Vec::with_capacity((1 << n) - 1);
    for mask in 1u32..(1 << n) {
        let features: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let mut product = vec![1.0; n_samples];
        for &j in &features {
            for (p, r) in product.iter_mut().zip(&ranks[j]) {
                *p *= r;
            }
        }
        let eta = copula_support(&product).unwrap();
        let (eta1, _) = class_conditional_support(&product, labels).unwrap();
        let lambda = g_statistic(eta, eta1, r1, n_samples);
        out.push(OracleCombo {
            features,
            eta,
            eta1,
            psi: min_p_value(eta, r1, n_samples).unwrap(),
            lambda,
            p_value: chi2_sf_df1(lambda).unwrap(),
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub testable: Vec<Vec<usize>>,
    pub sigma_final: f64,
    pub psi_level: Option<f64>,
    pub significant: Vec<(Vec<usize>, f64)>,
    pub combos: Vec<OracleCombo>,
}

/// Sorts all minimum p-values and keeps the largest tie-closed prefix whose
/// size times its largest value stays below `alpha`.
pub fn tarone(combos: Vec<OracleCombo>, alpha: f64, r1: f64) -> OracleResult {
    let mut order: Vec<usize> = (0..combos.len()).collect();
    order.sort_by(|&a, &b| combos[a].psi.total_cmp(&combos[b].psi));
    let mut kept = 0;
    let mut psi_level = None;
    let mut k = 0;
    while k < order.len() {
        let level = combos[order[k]].psi;
        let mut end = k;
        while end < order.len() && combos[order[end]].psi == level {
            end += 1;
        }
        if end as f64 * level < alpha {
            kept = end;
            psi_level = Some(level);
            k = end;
        } else {
            break;
        }
    }
    let mut testable: Vec<Vec<usize>> = order[..kept]
        .iter()
        .map(|&i| combos[i].features.clone())
        .collect();
    testable.sort();
    let sigma_final = order[kept..]
        .iter()
        .map(|&i| combos[i].eta)
        .filter(|&eta| eta <= r1)
        .fold(0.0, f64::max);
    let mut significant: Vec<(Vec<usize>, f64)> = if kept == 0 {
        Vec::new()
    } else {
        let delta = alpha / kept as f64;
        order[..kept]
            .iter()
            .map(|&i| &combos[i])
            .filter(|c| c.p_value < delta)
            .map(|c| (c.features.clone(), c.p_value))
            .collect()
    };
    significant.sort_by(|a, b| a.0.cmp(&b.0));
    OracleResult {
        testable,
        sigma_final,
        psi_level,
        significant,
        combos,
    }
}

pub fn oracle(d: &Dataset, alpha: f64) -> OracleResult {
    let ranks = rank_matrix(d).unwrap();
    let r1 = d.labels().iter().filter(|&&y| y == 1).count() as f64 / d.n_samples() as f64;
    tarone(enumerate(ranks.columns(), d.labels()), alpha, r1)
}

/// Describes the first disagreement between the miner and the oracle.
pub fn compare(result: &MiningResult, oracle: &OracleResult) -> Result<(), String> {
    let testable: Vec<Vec<usize>> = result.testable.iter().map(|c| c.features.clone()).collect();
    if testable != oracle.testable {
        return Err(format!(
            "testable sets differ: {testable:?} vs {:?}",
            oracle.testable
        ));
    }
    if result.sigma_final != oracle.sigma_final {
        return Err(format!(
            "sigma_final {} vs {}",
            result.sigma_final, oracle.sigma_final
        ));
    }
    if result.psi_level != oracle.psi_level {
        return Err(format!(
            "psi level {:?} vs {:?}",
            result.psi_level, oracle.psi_level
        ));
    }
    for c in &result.testable {
        let o = oracle
            .combos
            .iter()
            .find(|o| o.features == c.features)
            .unwrap();
        if c.support != o.eta || (c.support1 - o.eta1).abs() > 1e-12 || c.min_p != o.psi {
            return Err(format!("supports of {:?} differ", c.features));
        }
    }
    let mut significant: Vec<(Vec<usize>, f64)> = result
        .significant
        .iter()
        .map(|s| (s.combination.features.clone(), s.p_value))
        .collect();
    significant.sort_by(|a, b| a.0.cmp(&b.0));
    if significant.len() != oracle.significant.len()
        || significant
            .iter()
            .zip(&oracle.significant)
            .any(|(a, b)| a.0 != b.0)
    {
        let a: Vec<_> = significant.iter().map(|s| &s.0).collect();
        let b: Vec<_> = oracle.significant.iter().map(|s| &s.0).collect();
        return Err(format!("significant sets differ: {a:?} vs {b:?}"));
    }
    for (a, b) in significant.iter().zip(&oracle.significant) {
        if (a.1 - b.1).abs() > 1e-12 {
            return Err(format!("p-value of {:?}: {} vs {}", a.0, a.1, b.1));
        }
    }
    Ok(())
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Upper tail of chi-square(1) by quadrature:
/// `erfc(x) = 2/sqrt(pi) * exp(-x^2) * int_0^inf exp(-2xu - u^2) du`, `x = sqrt(lambda/2)`.
pub fn chi2_sf_quadrature(lambda: f64, rule: &[(f64, f64)]) -> f64 {
    let x = (lambda / 2.0).sqrt();
    // the integrand decays on the scale 1 / (2x + 1); integrate to exp(-745)
    let scale = 1.0 / (2.0 * x + 1.0);
    let upper = {
        let c = 745.0;
        -x + (x * x + c).sqrt()
    };
    let panels = ((upper / scale) * 8.0).ceil() as usize;
    let h = upper / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let mid = a + 0.5 * h;
        let panel: f64 = rule
            .iter()
            .map(|&(t, w)| {
                let u = mid + 0.5 * h * t;
                w * (-2.0 * x * u - u * u).exp()
            })
            .sum();
        total += 0.5 * h * panel;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * total
}
