//! Normalized ranks, rank-product vectors and copula supports.
//!
//! A continuous feature column is replaced by its normalized ranks
//! `(k - 1) / (N - 1)`, so every entry lies in `[0, 1]`. The product of the
//! rank columns of a feature set `J` gives one value per sample; its mean is
//! the copula support `eta(J)`, an estimate of the probability that all
//! features of `J` "occur" together. Adding a feature multiplies by values in
//! `[0, 1]`, hence supports never grow along a search path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// Column-wise normalized ranks of a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    columns: Vec<Vec<f64>>,
}

impl RankMatrix {
    pub fn n_samples(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Debug dump: one tab-separated row per sample.
    pub fn write_tsv<W: Write>(&self, mut out: W, names: &[String]) -> Result<()> {
        writeln!(out, "{}", names.join("\t"))?;
        for i in 0..self.n_samples() {
            let row: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            writeln!(out, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}

/// A nonempty feature set together with its supports and minimum attainable
/// p-value. Feature indices are 0-based and sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub features: Vec<usize>,
    pub support: f64,
    pub support1: f64,
    pub support0: f64,
    pub min_p: f64,
}

/// Normalized midranks of a column. Tied values share the average of the rank
/// positions they occupy, so the output mean is exactly 1/2.
pub fn normalized_ranks(column: &[f64]) -> Result<Vec<f64>> {
    let n = column.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("rank input must be finite".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));

    let denom = 2.0 * (n - 1) as f64;
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        // -0.0 and 0.0 compare equal here, unlike total_cmp
        while end + 1 < n && column[order[end + 1]] == column[order[start]] {
            end += 1;
        }
        // 0-based positions start..=end; (k - 1) is their mean
        let value = (start + end) as f64 / denom;
        for &idx in &order[start..=end] {
            ranks[idx] = value;
        }
        start = end + 1;
    }
    Ok(ranks)
}

pub fn rank_matrix(d: &Dataset) -> Result<RankMatrix> {
    let columns = d
        .columns()
        .iter()
        .map(|c| normalized_ranks(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankMatrix { columns })
}

/// `out = product ⊙ rank_column`.
pub fn extend_product_into(product: &[f64], rank_column: &[f64], out: &mut [f64]) {
    debug_assert_eq!(product.len(), rank_column.len());
    debug_assert_eq!(product.len(), out.len());
    for ((o, &p), &r) in out.iter_mut().zip(product).zip(rank_column) {
        *o = p * r;
    }
}

/// Componentwise product `x_J ⊙ π(v^j)`; the incremental step of the search.
pub fn extend_product(product: &[f64], rank_column: &[f64]) -> Result<Vec<f64>> {
    if product.len() != rank_column.len() {
        return Err(Error::LengthMismatch {
            expected: product.len(),
            actual: rank_column.len(),
        });
    }
    let mut out = vec![0.0; product.len()];
    extend_product_into(product, rank_column, &mut out);
    Ok(out)
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Copula support: the mean of the product vector.
pub fn copula_support(product: &[f64]) -> Result<f64> {
    if product.is_empty() {
        return Err(Error::Empty);
    }
    Ok(compensated_sum(product.iter().copied()) / product.len() as f64)
}

/// Class-conditional supports `(eta1, eta0)`, both normalized by `N` so that
/// `eta1 + eta0 = eta`.
pub fn class_conditional_support(product: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    if product.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: product.len(),
            actual: labels.len(),
        });
    }
    if product.is_empty() {
        return Err(Error::Empty);
    }
    let n = product.len() as f64;
    let eta1 = compensated_sum(
        product
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == 1)
            .map(|(&x, _)| x),
    );
    let eta0 = compensated_sum(
        product
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y != 1)
            .map(|(&x, _)| x),
    );
    Ok((eta1 / n, eta0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn ranks_distinct_values() {
        assert_eq!(
            normalized_ranks(&[3.2, 1.1, 2.5]).unwrap(),
            vec![1.0, 0.0, 0.5]
        );
        let r = normalized_ranks(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(close(&r, &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 1e-15));
    }

    #[test]
    fn ranks_midrank_ties() {
        assert_eq!(
            normalized_ranks(&[5.0, 5.0, 7.0]).unwrap(),
            vec![0.25, 0.25, 1.0]
        );
        assert_eq!(normalized_ranks(&[2.0; 4]).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn ranks_need_two_samples() {
        assert!(matches!(
            normalized_ranks(&[1.0]),
            Err(Error::TooFewSamples(1))
        ));
    }

    #[test]
    fn rank_matrix_small() {
        let d =
            Dataset::with_default_names(vec![vec![1.0, 2.0], vec![9.0, 3.0]], vec![0, 1]).unwrap();
        let rm = rank_matrix(&d).unwrap();
        assert_eq!(rm.column(0), &[0.0, 1.0]);
        assert_eq!(rm.column(1), &[1.0, 0.0]);
    }

    #[test]
    fn rank_matrix_row_permutation_equivariance() {
        let cols = vec![vec![0.3, 0.1, 0.9, 0.4, 0.4], vec![5.0, 2.0, 2.0, 8.0, 1.0]];
        let labels = vec![1, 0, 0, 1, 0];
        let perm = [3usize, 0, 4, 1, 2];
        let d = Dataset::with_default_names(cols.clone(), labels.clone()).unwrap();
        let pcols = cols
            .iter()
            .map(|c| perm.iter().map(|&i| c[i]).collect())
            .collect();
        let plabels = perm.iter().map(|&i| labels[i]).collect();
        let pd = Dataset::with_default_names(pcols, plabels).unwrap();
        let (rm, prm) = (rank_matrix(&d).unwrap(), rank_matrix(&pd).unwrap());
        for j in 0..2 {
            let expected: Vec<f64> = perm.iter().map(|&i| rm.column(j)[i]).collect();
            assert_eq!(prm.column(j), expected.as_slice());
        }
    }

    #[test]
    fn product_examples() {
        let ones = vec![1.0; 3];
        assert_eq!(
            extend_product(&ones, &[0.0, 0.5, 1.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            extend_product(&[0.5, 0.5], &[0.5, 1.0]).unwrap(),
            vec![0.25, 0.5]
        );
        let up = normalized_ranks(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let down = normalized_ranks(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        let p = extend_product(&up, &down).unwrap();
        assert!(close(&p, &[0.0, 2.0 / 9.0, 2.0 / 9.0, 0.0], 1e-15));
        assert!(matches!(
            extend_product(&[1.0], &[1.0, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn support_examples() {
        assert_eq!(copula_support(&[1.0; 4]).unwrap(), 1.0);
        let up = normalized_ranks(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((copula_support(&up).unwrap() - 0.5).abs() < 1e-15);
        let down = normalized_ranks(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        let same = extend_product(&up, &up).unwrap();
        let opposite = extend_product(&up, &down).unwrap();
        // (0 + 1/9 + 4/9 + 1) / 4 and (0 + 2/9 + 2/9 + 0) / 4
        assert!((copula_support(&same).unwrap() - 14.0 / 36.0).abs() < 1e-15);
        assert!((copula_support(&opposite).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(copula_support(&[]), Err(Error::Empty)));
    }

    #[test]
    fn class_support_examples() {
        let (e1, e0) = class_conditional_support(&[0.2, 0.8, 0.4, 0.6], &[1, 1, 0, 0]).unwrap();
        assert!((e1 - 0.25).abs() < 1e-15 && (e0 - 0.25).abs() < 1e-15);
        let (e1, e0) = class_conditional_support(&[0.2, 0.8, 0.4, 0.6], &[0, 0, 0, 0]).unwrap();
        assert_eq!(e1, 0.0);
        assert!((e0 - 0.5).abs() < 1e-15);
        assert_eq!(
            class_conditional_support(&[0.0; 3], &[1, 0, 1]).unwrap(),
            (0.0, 0.0)
        );
        assert!(class_conditional_support(&[0.0; 3], &[1, 0]).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn support_is_anti_monotone_up_to_order_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n_samples = rng.random_range(5..40);
            let cols: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..n_samples).map(|_| rng.random::<f64>()).collect())
                .collect();
            let ranks: Vec<Vec<f64>> = cols.iter().map(|c| normalized_ranks(c).unwrap()).collect();
            let ones = vec![1.0; n_samples];
            for a in 0..6 {
                let pa = extend_product(&ones, &ranks[a]).unwrap();
                let ea = copula_support(&pa).unwrap();
                for b in 0..6 {
                    if b == a {
                        continue;
                    }
                    let pab = extend_product(&pa, &ranks[b]).unwrap();
                    let eab = copula_support(&pab).unwrap();
                    assert!(eab <= ea);
                    for (c, rc) in ranks.iter().enumerate() {
                        if c == a || c == b {
                            continue;
                        }
                        let pabc = extend_product(&pab, rc).unwrap();
                        assert!(copula_support(&pabc).unwrap() <= eab);
                    }
                }
            }
        }
    }

    fn column_strategy() -> impl Strategy<Value = Vec<f64>> {
        // small integer range forces ties
        prop::collection::vec(
            prop_oneof![(-5i32..5).prop_map(f64::from), -1e6f64..1e6],
            2..60,
        )
    }

    proptest! {
        #[test]
        fn ranks_in_unit_interval_with_mean_half(col in column_strategy()) {
            let r = normalized_ranks(&col).unwrap();
            prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let mean = compensated_sum(r.iter().copied()) / r.len() as f64;
            prop_assert!((mean - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn ranks_invariant_under_increasing_maps(col in prop::collection::vec(-3.0f64..3.0, 2..50), scale in 0.01f64..100.0, shift in -10.0f64..10.0) {
            let r = normalized_ranks(&col).unwrap();
            let affine: Vec<f64> = col.iter().map(|v| scale * v + shift).collect();
            let exp: Vec<f64> = col.iter().map(|v| v.exp()).collect();
            // strictly increasing maps may still merge values after rounding;
            // restrict to inputs where they do not
            let distinct = |c: &[f64]| {
                let mut s = c.to_vec();
                s.sort_by(f64::total_cmp);
                s.windows(2).filter(|w| w[0] == w[1]).count()
            };
            prop_assume!(distinct(&affine) == distinct(&col) && distinct(&exp) == distinct(&col));
            prop_assert_eq!(normalized_ranks(&affine).unwrap(), r.clone());
            prop_assert_eq!(normalized_ranks(&exp).unwrap(), r);
        }

        #[test]
        fn class_supports_add_up(xs in prop::collection::vec((0.0f64..=1.0, 0u8..=1), 1..80)) {
            let (p, y): (Vec<f64>, Vec<u8>) = xs.into_iter().unzip();
            let eta = copula_support(&p).unwrap();
            let (e1, e0) = class_conditional_support(&p, &y).unwrap();
            prop_assert!((e1 + e0 - eta).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&eta));
        }

        #[test]
        fn product_order_does_not_matter(cols in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 12), 3)) {
            let ones = vec![1.0; 12];
            let abc = extend_product(&extend_product(&extend_product(&ones, &cols[0]).unwrap(), &cols[1]).unwrap(), &cols[2]).unwrap();
            let cab = extend_product(&extend_product(&extend_product(&ones, &cols[2]).unwrap(), &cols[0]).unwrap(), &cols[1]).unwrap();
            prop_assert!(close(&abc, &cab, 1e-15));
        }
    }
}
