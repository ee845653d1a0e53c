//! G-test on 2x2 contingency tables and the minimum attainable p-value.
//!
//! Probability vectors are ordered as
//! `(P(X=1,Y=1), P(X=1,Y=0), P(X=0,Y=1), P(X=0,Y=0))`. All logarithms are
//! natural, so divergences are in nats and `2 N KL` is calibrated against the
//! chi-squared distribution with one degree of freedom.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MARGIN_SLACK: f64 = 1e-12;

/// Contingency table as a probability vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(pub [f64; 4]);

impl ProbVector {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::OutOfRange(format!("negative probability in {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > MARGIN_SLACK {
            return Err(Error::OutOfRange(format!("probabilities sum to {total}")));
        }
        Ok(Self(p))
    }

    pub fn as_array(&self) -> &[f64; 4] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub lambda: f64,
    pub p_value: f64,
    pub kl: f64,
    /// Some expected cell count `N * p_E[i]` is below 5, where the chi-squared
    /// approximation is known to be rough.
    pub small_expected: bool,
}

/// `sum_i p_obs[i] * ln(p_obs[i] / p_exp[i])`, with `0 ln 0 = 0`.
pub fn kl_divergence(p_obs: &ProbVector, p_exp: &ProbVector) -> Result<f64> {
    let mut kl = 0.0;
    for (i, (&o, &e)) in p_obs.0.iter().zip(&p_exp.0).enumerate() {
        if o > 0.0 {
            if e <= 0.0 {
                return Err(Error::InfiniteDivergence {
                    index: i,
                    observed: o,
                });
            }
            kl += o * (o / e).ln();
        }
    }
    Ok(kl.max(0.0))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{name} = {v} not in [0, 1]")))
    }
}

/// Table expected under independence of `X_J` and `Y`.
pub fn expected_vector(eta: f64, r1: f64) -> Result<ProbVector> {
    check_unit("eta", eta)?;
    if !(r1 > 0.0 && r1 < 1.0) {
        return Err(Error::OutOfRange(format!("r1 = {r1} not in (0, 1)")));
    }
    let r0 = 1.0 - r1;
    Ok(ProbVector([
        eta * r1,
        eta * r0,
        (1.0 - eta) * r1,
        (1.0 - eta) * r0,
    ]))
}

/// Observed table from the class-conditional supports.
pub fn observed_vector(eta1: f64, eta0: f64, r1: f64, r0: f64) -> Result<ProbVector> {
    if eta1 < -MARGIN_SLACK || eta0 < -MARGIN_SLACK {
        return Err(Error::Marginal(format!(
            "negative support ({eta1}, {eta0})"
        )));
    }
    if eta1 > r1 + MARGIN_SLACK {
        return Err(Error::Marginal(format!("eta1 = {eta1} exceeds r1 = {r1}")));
    }
    if eta0 > r0 + MARGIN_SLACK {
        return Err(Error::Marginal(format!("eta0 = {eta0} exceeds r0 = {r0}")));
    }
    let eta1 = eta1.clamp(0.0, r1);
    let eta0 = eta0.clamp(0.0, r0);
    Ok(ProbVector([eta1, eta0, r1 - eta1, r0 - eta0]))
}

/// G-test of independence between `X_J` (support `eta`, class-1 support
/// `eta1`) and the label (class ratio `r1`) over `n_samples` observations.
pub fn g_test(eta: f64, eta1: f64, r1: f64, n_samples: usize) -> Result<TestOutcome> {
    let p_exp = expected_vector(eta, r1)?;
    let r0 = 1.0 - r1;
    let p_obs = observed_vector(eta1, eta - eta1, r1, r0)?;
    let kl = kl_divergence(&p_obs, &p_exp)?;
    let n = n_samples as f64;
    let lambda = 2.0 * n * kl;
    Ok(TestOutcome {
        lambda,
        p_value: chi2_sf_df1(lambda)?,
        kl,
        small_expected: p_exp.0.iter().any(|&e| e * n < 5.0),
    })
}

/// Survival function of the chi-squared distribution with one degree of
/// freedom, `erfc(sqrt(lambda / 2))`.
pub fn chi2_sf_df1(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::OutOfRange(format!(
            "chi-squared statistic {lambda} is negative"
        )));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    if lambda.is_infinite() {
        return Ok(0.0);
    }
    let x = (0.5 * lambda).sqrt();
    // exp(-x^2) taken directly from lambda avoids rounding x^2
    let gauss = (-0.5 * lambda).exp();
    let p = if x < 1.5 {
        1.0 - erf_series(x, gauss)
    } else {
        erfc_continued_fraction(x, gauss)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_k (2x^2)^k x / (1*3*...*(2k+1))`.
/// Every term is positive, so there is no cancellation.
fn erf_series(x: f64, gauss: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= two_x2 / (2.0 * k + 1.0);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * gauss * sum
}

/// Laplace continued fraction
/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64, gauss: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    gauss / (PI.sqrt() * f)
}

/// Supremum of `KL(p, p_E)` over all tables `p` with marginals `P(X=1) = a`
/// and `P(Y=1) = b`, both in `[0, 1/2]`.
///
/// For `a <= b` the supremum is approached by the table `(a, 0, b - a, 1 - b)`:
/// `a ln(1/b) + (b - a) ln((b - a) / ((1 - a) b)) + (1 - b) ln(1/(1 - a))`.
/// Transposing the table swaps the marginals without changing the divergence,
/// so `a > b` is handled by swapping the arguments.
pub fn kl_upper_bound(a: f64, b: f64) -> Result<f64> {
    let limit = 0.5 + MARGIN_SLACK;
    if !(0.0..=limit).contains(&a) {
        return Err(Error::OutOfRange(format!("a = {a} not in [0, 1/2]")));
    }
    if !(b > 0.0 && b <= limit) {
        return Err(Error::OutOfRange(format!("b = {b} not in (0, 1/2]")));
    }
    let (a, b) = (a.min(0.5), b.min(0.5));
    let (a, b) = if a > b { (b, a) } else { (a, b) };
    if a == 0.0 {
        return Ok(0.0);
    }
    let ln_one_minus_a = (-a).ln_1p();
    let mut bound = -a * b.ln() - (1.0 - b) * ln_one_minus_a;
    let gap = b - a;
    if gap > 0.0 {
        bound += gap * (gap.ln() - ln_one_minus_a - b.ln());
    }
    Ok(bound.max(0.0))
}

/// Minimum attainable p-value `psi` of a combination with support `eta` when
/// the minor class has ratio `r1`.
///
/// Supports above 1/2 only arise for binary indicators with ties at the
/// median; complementing `X` maps them to `1 - eta` without changing any
/// divergence.
pub fn min_p_value(eta: f64, r1: f64, n_samples: usize) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples(n_samples));
    }
    check_unit("eta", eta)?;
    let eta = if eta > 0.5 + MARGIN_SLACK {
        1.0 - eta
    } else {
        eta
    };
    let bound = kl_upper_bound(eta, r1)?;
    chi2_sf_df1(2.0 * n_samples as f64 * bound)
}
