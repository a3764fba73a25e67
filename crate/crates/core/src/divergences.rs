//! Rényi, KL and total-variation divergences, entropies, and the conversion
//! ladder from a Rényi bound to other probability metrics.
//!
//! All logarithms are natural. An absolute-continuity failure yields
//! `f64::INFINITY` rather than an error.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::NoiseModel;
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// A normalized probability vector over `K` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("needs at least one outcome".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Empirical law of label counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no observations".into()));
        }
        let t = total as f64;
        Ok(Self {
            probs: counts.iter().map(|&c| c as f64 / t).collect(),
        })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("needs at least one outcome".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::InvalidDistribution(format!(
                "outcome {at} out of range for K = {k}"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most likely outcome (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Push-forward through a deterministic relabelling `map: [K] -> [K']`.
    pub fn push_forward(&self, map: &[usize], k_out: usize) -> Result<Self> {
        if map.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: map.len(),
            });
        }
        let mut probs = vec![0.0; k_out];
        for (p, &j) in self.probs.iter().zip(map) {
            if j >= k_out {
                return Err(Error::InvalidDistribution(format!("target label {j} >= {k_out}")));
            }
            probs[j] += p;
        }
        Ok(Self { probs })
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.probs
    }
}

/// Metric families a certificate can be stated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Renyi,
    Kl,
    Tv,
    Hellinger,
    Prokhorov,
    Discrepancy,
    Wasserstein,
    Separation,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Renyi => "renyi",
            Metric::Kl => "kl",
            Metric::Tv => "tv",
            Metric::Hellinger => "hellinger",
            Metric::Prokhorov => "prokhorov",
            Metric::Discrepancy => "discrepancy",
            Metric::Wasserstein => "wasserstein",
            Metric::Separation => "separation",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "renyi" => Metric::Renyi,
            "kl" => Metric::Kl,
            "tv" => Metric::Tv,
            "hellinger" => Metric::Hellinger,
            "prokhorov" => Metric::Prokhorov,
            "discrepancy" => Metric::Discrepancy,
            "wasserstein" => Metric::Wasserstein,
            "separation" => Metric::Separation,
            other => return Err(format!("unknown metric `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceKind {
    Renyi(f64),
    Kl,
    Tv,
    Hellinger,
    Prokhorov,
    Discrepancy,
    Wasserstein,
    Separation,
}

/// A divergence value clamped into the range its kind can take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub value: f64,
}

impl DivergenceValue {
    pub fn new(kind: DivergenceKind, value: f64) -> Self {
        let value = value.max(0.0);
        let value = match kind {
            DivergenceKind::Tv
            | DivergenceKind::Prokhorov
            | DivergenceKind::Discrepancy
            | DivergenceKind::Separation => value.min(1.0),
            DivergenceKind::Hellinger => value.min(std::f64::consts::SQRT_2),
            _ => value,
        };
        Self { kind, value }
    }
}

fn same_len(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

fn check_order(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda < 1.0 {
        return Err(Error::InvalidOrder(lambda));
    }
    Ok(())
}

/// Kullback-Leibler divergence `KL(p || q)`; terms with `p_i = 0` are dropped.
pub fn kl_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_len(p, q)?;
    let mut acc = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi > 0.0 {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Rényi divergence of order `lambda >= 1` between discrete laws.
///
/// `lambda = 1` is the KL limit and `lambda = +inf` the max-divergence
/// `ln max_i p_i / q_i`.
pub fn renyi_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution, lambda: f64) -> Result<f64> {
    check_order(lambda)?;
    same_len(p, q)?;
    if lambda == 1.0 {
        return kl_discrete(p, q);
    }
    let support: Vec<(f64, f64)> = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(&pi, &qi)| (pi, qi))
        .collect();
    if support.iter().any(|(_, qi)| *qi == 0.0) {
        return Ok(f64::INFINITY);
    }
    if lambda.is_infinite() {
        let m = support
            .iter()
            .map(|(pi, qi)| (pi / qi).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(m.max(0.0));
    }
    // log-sum-exp of lambda ln p + (1 - lambda) ln q
    let logs: Vec<f64> = support
        .iter()
        .map(|(pi, qi)| lambda * pi.ln() + (1.0 - lambda) * qi.ln())
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    Ok((lse / (lambda - 1.0)).max(0.0))
}

/// Total variation `1/2 sum |p_i - q_i|`.
pub fn tv_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    same_len(p, q)?;
    let s: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// Exact Rényi divergence between `N(m1, cov)` and `N(m2, cov)`:
/// `(lambda / 2) (m1 - m2)^T cov^{-1} (m1 - m2)`.
pub fn renyi_gaussian_shift(m1: &[f64], m2: &[f64], cov: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    check_order(lambda)?;
    let d = m1.len();
    if m2.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m2.len(),
        });
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cov.nrows(),
        });
    }
    let diff = DVector::from_iterator(d, m1.iter().zip(m2).map(|(a, b)| a - b));
    if diff.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    if lambda.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let chol = cov.clone().cholesky().ok_or(Error::DegenerateCovariance {
        min_eigenvalue: f64::NAN,
    })?;
    let solved = chol.solve(&diff);
    Ok(0.5 * lambda * diff.dot(&solved))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `D_lambda(P || P_shift)` where `P` is the noise
/// law and `P_shift` its translate by `shift`.
///
/// Draws come from `P`. For `lambda > 1` the estimator is
/// `ln(mean(r^(lambda-1))) / (lambda - 1)` with `r = p(z) / p(z - shift)`
/// and a delta-method standard error; `lambda = 1` averages `ln r`.
/// `lambda = +inf` reports the largest sampled log ratio (a lower bound on
/// the max-divergence) with zero standard error.
pub fn renyi_mc(model: &NoiseModel, shift: &[f64], lambda: f64, n: usize, seed: u64) -> Result<McEstimate> {
    check_order(lambda)?;
    if shift.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: shift.len(),
        });
    }
    if n < 1000 {
        return Err(Error::param("n", "Monte-Carlo Rényi needs at least 1000 samples"));
    }
    let d = model.dim();
    let mut z = vec![0.0; d];
    let mut zs = vec![0.0; d];
    let mut log_ratios = Vec::with_capacity(n);
    for i in 0..n {
        model.draw(seed, i as u64, &mut z);
        for k in 0..d {
            zs[k] = z[k] - shift[k];
        }
        log_ratios.push(model.log_density_unchecked(&z) - model.log_density_unchecked(&zs));
    }
    let nf = n as f64;
    if lambda.is_infinite() {
        let m = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(McEstimate {
            estimate: m.max(0.0),
            std_error: 0.0,
        });
    }
    if lambda == 1.0 {
        let mean = log_ratios.iter().sum::<f64>() / nf;
        let var = log_ratios.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        return Ok(McEstimate {
            estimate: mean,
            std_error: (var / nf).sqrt(),
        });
    }
    // Work relative to the largest exponent so r^(lambda-1) cannot overflow.
    let a = lambda - 1.0;
    let top = log_ratios.iter().map(|l| a * l).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_ratios.iter().map(|l| (a * l - top).exp()).collect();
    let mean = w.iter().sum::<f64>() / nf;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let estimate = (top + mean.ln()) / a;
    let std_error = (var / nf).sqrt() / (mean * a);
    Ok(McEstimate { estimate, std_error })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("epsilon", format!("must be >= 0, got {eps}")));
    }
    Ok(())
}

/// TV bound implied by a Rényi (any order >= 1) bound `eps`:
/// `min(3/2 (sqrt(1 + 4 eps / 9) - 1)^(1/2), (e^(eps+1) - 1) / (e^(eps+1) + 1))`.
pub fn renyi_to_tv(eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    if eps.is_infinite() {
        return Ok(1.0);
    }
    // sqrt(1 + x) - 1 rewritten as x / (sqrt(1 + x) + 1) to keep precision near 0.
    let x = 4.0 * eps / 9.0;
    let quartic = 1.5 * (x / ((1.0 + x).sqrt() + 1.0)).sqrt();
    // (e^t - 1) / (e^t + 1) = tanh(t / 2)
    let logistic = ((eps + 1.0) / 2.0).tanh();
    Ok(quartic.min(logistic).clamp(0.0, 1.0))
}

/// Bounds on other metrics implied by a Rényi bound `eps`.
///
/// Hellinger gets `sqrt(eps)`, Prokhorov and Discrepancy the TV bound,
/// Wasserstein the TV bound scaled by the label-space diameter, and
/// Separation `eps` itself when the order is infinite.
pub fn renyi_to_ladder(eps: f64, lambda_is_inf: bool, diam: f64) -> Result<Vec<DivergenceValue>> {
    check_epsilon(eps)?;
    if !(diam.is_finite() && diam > 0.0) {
        return Err(Error::param("diam", format!("must be > 0, got {diam}")));
    }
    let tv = renyi_to_tv(eps)?;
    let mut out = vec![
        DivergenceValue::new(DivergenceKind::Hellinger, eps.sqrt()),
        DivergenceValue::new(DivergenceKind::Prokhorov, tv),
        DivergenceValue::new(DivergenceKind::Discrepancy, tv),
        DivergenceValue::new(DivergenceKind::Wasserstein, diam * tv),
    ];
    if lambda_is_inf {
        out.push(DivergenceValue::new(DivergenceKind::Separation, eps));
    }
    Ok(out)
}

/// Shannon entropy `-sum p_i ln p_i` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &DiscreteDistribution) -> f64 {
    let h: f64 = p.probs.iter().filter(|x| **x > 0.0).map(|x| -x * x.ln()).sum();
    h.max(0.0)
}

/// Collision (order-2 Rényi) entropy `-ln sum p_i^2`.
pub fn collision_entropy(p: &DiscreteDistribution) -> f64 {
    let s: f64 = p.probs.iter().map(|x| x * x).sum();
    (-s.ln()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dd(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert_eq!(
            DiscreteDistribution::from_counts(&[3, 1]).unwrap().probs(),
            &[0.75, 0.25]
        );
    }

    #[test]
    fn renyi_reference_values() {
        assert_eq!(renyi_discrete(&dd(&[0.5, 0.5]), &dd(&[0.5, 0.5]), 2.0).unwrap(), 0.0);
        // sum p^2 / q = 1 / 0.5 = 2
        let v = renyi_discrete(&dd(&[1.0, 0.0]), &dd(&[0.5, 0.5]), 2.0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
        let kl = renyi_discrete(&dd(&[0.75, 0.25]), &dd(&[0.5, 0.5]), 1.0).unwrap();
        let oracle = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((kl - oracle).abs() < 1e-12);
        assert!((kl - 0.130_812).abs() < 1e-6);
    }

    #[test]
    fn renyi_errors_and_infinity() {
        let p = dd(&[0.5, 0.5]);
        assert!(matches!(renyi_discrete(&p, &p, 0.5), Err(Error::InvalidOrder(_))));
        assert!(renyi_discrete(&p, &dd(&[1.0]), 2.0).is_err());
        let q = dd(&[1.0, 0.0]);
        assert_eq!(renyi_discrete(&p, &q, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(renyi_discrete(&p, &q, 1.0).unwrap(), f64::INFINITY);
        let inf = renyi_discrete(&dd(&[0.8, 0.2]), &dd(&[0.4, 0.6]), f64::INFINITY).unwrap();
        assert!((inf - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tv_reference_values() {
        assert_eq!(tv_discrete(&dd(&[1.0, 0.0]), &dd(&[0.0, 1.0])).unwrap(), 1.0);
        assert!((tv_discrete(&dd(&[0.7, 0.3]), &dd(&[0.5, 0.5])).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(tv_discrete(&dd(&[0.7, 0.3]), &dd(&[0.7, 0.3])).unwrap(), 0.0);
        assert!(tv_discrete(&dd(&[1.0]), &dd(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn gaussian_shift_closed_form() {
        let id = DMatrix::identity(2, 2);
        assert_eq!(renyi_gaussian_shift(&[0.3, 0.3], &[0.3, 0.3], &id, 3.0).unwrap(), 0.0);
        assert!((renyi_gaussian_shift(&[0.0, 0.0], &[1.0, 0.0], &id, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        assert!((renyi_gaussian_shift(&[0.0, 0.0], &[2.0, 0.0], &cov, 1.0).unwrap() - 0.5).abs() < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(renyi_gaussian_shift(&[0.0, 0.0], &[1.0, 0.0], &singular, 1.0).is_err());
    }

    #[test]
    fn mc_matches_closed_form_and_zero_shift() {
        let m = NoiseModel::gaussian_isotropic(1.0, 2).unwrap();
        let zero = renyi_mc(&m, &[0.0, 0.0], 2.0, 10_000, 1).unwrap();
        assert!(zero.estimate.abs() <= 3.0 * zero.std_error + 1e-15);
        let est = renyi_mc(&m, &[1.0, 0.0], 2.0, 1_000_000, 2).unwrap();
        assert!((est.estimate - 1.0).abs() <= 3.0 * est.std_error, "{est:?}");
        assert!(renyi_mc(&m, &[1.0, 0.0], 2.0, 999, 2).is_err());
    }

    #[test]
    fn mc_max_divergence_for_laplace() {
        let m = NoiseModel::laplace(1.0, 1).unwrap();
        let est = renyi_mc(&m, &[0.5], f64::INFINITY, 100_000, 4).unwrap();
        assert!(est.estimate <= 0.5 + 1e-6);
        assert!(est.estimate > 0.49);
    }

    /// Independent evaluation of both branches of the TV bound.
    fn tv_oracle(eps: f64) -> f64 {
        let a = 1.5 * ((1.0 + 4.0 * eps / 9.0).sqrt() - 1.0).sqrt();
        let e = (eps + 1.0).exp();
        a.min((e - 1.0) / (e + 1.0))
    }

    #[test]
    fn renyi_to_tv_reference_values() {
        assert_eq!(renyi_to_tv(0.0).unwrap(), 0.0);
        let one = renyi_to_tv(1.0).unwrap();
        assert!((one - tv_oracle(1.0)).abs() < 1e-12);
        assert!((one - 0.673_916).abs() < 1e-6);
        let ten = renyi_to_tv(10.0).unwrap();
        assert!((ten - tv_oracle(10.0)).abs() < 1e-12);
        assert!((ten - 0.999_967).abs() < 1e-6);
        assert_eq!(renyi_to_tv(f64::INFINITY).unwrap(), 1.0);
        assert!(renyi_to_tv(-0.1).is_err());
    }

    #[test]
    fn ladder_reference_values() {
        let zero = renyi_to_ladder(0.0, true, 1.0).unwrap();
        assert!(zero.iter().all(|v| v.value == 0.0));
        let one = renyi_to_ladder(1.0, false, 1.0).unwrap();
        assert_eq!(one.len(), 4);
        assert!((one[0].value - 1.0).abs() < 1e-12);
        assert!((one[1].value - 0.673_916).abs() < 1e-6);
        assert!((one[2].value - 0.673_916).abs() < 1e-6);
        let sep = renyi_to_ladder(0.25, true, 1.0).unwrap();
        let s = sep.iter().find(|v| v.kind == DivergenceKind::Separation).unwrap();
        assert_eq!(s.value, 0.25);
        assert!(renyi_to_ladder(1.0, false, 0.0).is_err());
    }

    #[test]
    fn entropy_reference_values() {
        let point = DiscreteDistribution::point_mass(5, 2).unwrap();
        assert_eq!(shannon_entropy(&point), 0.0);
        assert_eq!(collision_entropy(&point), 0.0);
        let u = DiscreteDistribution::uniform(10).unwrap();
        assert!((shannon_entropy(&u) - 10f64.ln()).abs() < 1e-12);
        assert!((collision_entropy(&u) - 10f64.ln()).abs() < 1e-12);
        let p = dd(&[0.5, 0.25, 0.25]);
        assert!((shannon_entropy(&p) - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((collision_entropy(&p) - (-(0.375f64).ln())).abs() < 1e-12);
    }

    fn arb_dist(k: usize) -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec(0.0f64..1.0, k).prop_filter_map("non-zero mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| DiscreteDistribution::new(w.iter().map(|x| x / s).collect()).ok())?
        })
    }

    proptest! {
        #[test]
        fn renyi_is_monotone_in_order(p in arb_dist(5), q in arb_dist(5), a in 1.0f64..8.0, gap in 0.01f64..8.0) {
            let lo = renyi_discrete(&p, &q, a).unwrap();
            let hi = renyi_discrete(&p, &q, a + gap).unwrap();
            prop_assert!(lo <= hi + 1e-12 || hi.is_infinite(), "{lo} > {hi}");
        }

        #[test]
        fn renyi_zero_iff_equal(p in arb_dist(4), q in arb_dist(4), lambda in 1.01f64..6.0) {
            let same = renyi_discrete(&p, &p, lambda).unwrap();
            prop_assert!(same.abs() < 1e-12);
            let tv = tv_discrete(&p, &q).unwrap();
            let d = renyi_discrete(&p, &q, lambda).unwrap();
            if tv > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn collision_below_shannon(p in arb_dist(6)) {
            prop_assert!(collision_entropy(&p) <= shannon_entropy(&p) + 1e-12);
            prop_assert!(shannon_entropy(&p) <= 6f64.ln() + 1e-12);
        }

        #[test]
        fn tv_bound_is_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(renyi_to_tv(lo).unwrap() <= renyi_to_tv(hi).unwrap());
            let tv = renyi_to_tv(hi).unwrap();
            prop_assert!((0.0..=1.0).contains(&tv));
        }
    }
}
