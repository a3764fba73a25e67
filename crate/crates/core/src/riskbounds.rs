//! Monte Carlo risk estimates for randomized networks and the adversarial
//! generalization gap bounds built on them.
//!
//! Input `i` always uses the noise seed `derive_seed(seed, i)`, so estimates
//! do not depend on scheduling, and natural and adversarial estimates of the
//! same input share their noise draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{run_attack, AttackKind, AttackSpec};
use crate::certify::certify_net;
use crate::distributions::NoiseFamily;
use crate::divergences::{collision_entropy, kl_discrete, renyi_to_tv, shannon_entropy, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::net::{Dataset, RandomizedNet};
use crate::norms::Norm;
use crate::numfmt::sig9;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyKind {
    Shannon,
    Collision,
}

/// Mean with its Monte Carlo standard error (the dataset held fixed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn check_data(net: &RandomizedNet, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: data.dim(),
        });
    }
    if data.num_classes() > net.num_classes() {
        return Err(Error::param("data", "dataset has more classes than the network"));
    }
    Ok(())
}

fn check_mc(n_mc: usize, min: usize) -> Result<()> {
    if n_mc < min {
        return Err(Error::param("n_mc", format!("must be >= {min}")));
    }
    Ok(())
}

/// Label counts of every input over `n_mc` draws of its derived seed.
pub fn label_counts(net: &RandomizedNet, data: &Dataset, n_mc: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    check_data(net, data)?;
    check_mc(n_mc, 1)?;
    (0..data.len())
        .into_par_iter()
        .map(|i| net.predict_counts(data.x(i), n_mc, derive_seed(seed, i as u64)))
        .collect()
}

/// Mean error probability with standard error `sqrt(sum p_i (1 - p_i) / n_mc) / n`.
fn error_estimate(counts: &[Vec<u64>], labels: &[usize], n_mc: usize) -> RiskEstimate {
    let n = counts.len() as f64;
    let (mut sum, mut var) = (0.0, 0.0);
    for (c, y) in counts.iter().zip(labels) {
        let p = 1.0 - c[*y] as f64 / n_mc as f64;
        sum += p;
        var += p * (1.0 - p) / n_mc as f64;
    }
    RiskEstimate {
        value: sum / n,
        std_error: var.sqrt() / n,
    }
}

/// Probability that a sampled label differs from the true one, averaged over the data.
pub fn empirical_risk(net: &RandomizedNet, data: &Dataset, n_mc: usize, seed: u64) -> Result<RiskEstimate> {
    let counts = label_counts(net, data, n_mc, seed)?;
    Ok(error_estimate(&counts, data.labels(), n_mc))
}

fn entropy_term(counts: &[Vec<u64>], kind: EntropyKind) -> Result<f64> {
    let mut total = 0.0;
    for c in counts {
        let p = DiscreteDistribution::from_counts(c)?;
        let h = match kind {
            EntropyKind::Shannon => shannon_entropy(&p),
            EntropyKind::Collision => collision_entropy(&p),
        };
        total += (-h).exp();
    }
    Ok(total / counts.len() as f64)
}

/// `E_x[exp(-H(M(x)))]` with plug-in entropies of the empirical label laws.
pub fn exp_neg_entropy(net: &RandomizedNet, data: &Dataset, n_mc: usize, seed: u64, kind: EntropyKind) -> Result<f64> {
    check_mc(n_mc, 100)?;
    entropy_term(&label_counts(net, data, n_mc, seed)?, kind)
}

/// Largest `norm_to` length of a vector with `norm_from` length `alpha` in `R^d`.
pub fn ball_radius(norm_from: Norm, norm_to: Norm, alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    let factor = match (norm_from, norm_to) {
        (Norm::Linf, Norm::L2) | (Norm::L2, Norm::L1) => d.sqrt(),
        (Norm::Linf, Norm::L1) => d,
        _ => 1.0,
    };
    alpha * factor
}

fn adversarial_inputs(net: &RandomizedNet, data: &Dataset, spec: &AttackSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if spec.kind == AttackKind::Grid && data.dim() > crate::attacks::MAX_GRID_DIM {
        return Err(Error::AttackConfig(format!(
            "grid attack needs at most {} input dimensions, data has {}",
            crate::attacks::MAX_GRID_DIM,
            data.dim()
        )));
    }
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.x(i);
            if spec.alpha == 0.0 {
                return Ok(x.to_vec());
            }
            let local = AttackSpec {
                seed: derive_seed(spec.seed, i as u64),
                eval_seed: derive_seed(spec.eval_seed, i as u64),
                ..spec.clone()
            };
            let out = run_attack(net, x, data.y(i), &local)?;
            // Minimum-distortion attacks may overshoot the budget; those fall back to x.
            if spec.norm.distance(&out.x_adv, x) > spec.alpha * (1.0 + 1e-9) {
                Ok(x.to_vec())
            } else {
                Ok(out.x_adv)
            }
        })
        .collect()
}

/// Risk at attack-proposed points: a lower-bound estimate of the adversarial risk.
pub fn empirical_adv_risk(
    net: &RandomizedNet,
    data: &Dataset,
    spec: &AttackSpec,
    n_mc: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_data(net, data)?;
    check_mc(n_mc, 1)?;
    let adv = adversarial_inputs(net, data, spec)?;
    let counts = adv_counts(net, &adv, n_mc, seed)?;
    Ok(error_estimate(&counts, data.labels(), n_mc))
}

fn adv_counts(net: &RandomizedNet, adv: &[Vec<f64>], n_mc: usize, seed: u64) -> Result<Vec<Vec<u64>>> {
    adv.par_iter()
        .enumerate()
        .map(|(i, x)| net.predict_counts(x, n_mc, derive_seed(seed, i as u64)))
        .collect()
}

/// `1 - exp(-epsilon) E[exp(-H)]`, clamped to `[0, 1]`.
pub fn gap_bound_renyi(epsilon: f64, exp_neg_shannon: f64) -> f64 {
    if epsilon.is_infinite() {
        return 1.0;
    }
    (1.0 - (-epsilon).exp() * exp_neg_shannon).clamp(0.0, 1.0)
}

/// `1 - (E[exp(-H_c)] - epsilon_tv)`, clamped to `[0, 1]`.
pub fn gap_bound_tv(epsilon_tv: f64, exp_neg_collision: f64) -> f64 {
    (1.0 - (exp_neg_collision - epsilon_tv)).clamp(0.0, 1.0)
}

/// Rényi certificate at budget `alpha` measured in `norm`, or `None` for a
/// zero-noise network. The budget is first widened to the certificate's norm.
pub fn epsilon_at(net: &RandomizedNet, alpha: f64, norm: Norm, lambda: f64) -> Result<Option<f64>> {
    let Some(noise) = net.noise() else {
        return Ok(None);
    };
    let cert_norm = match noise.family() {
        NoiseFamily::Gaussian => Norm::L2,
        NoiseFamily::Laplace => Norm::L1,
    };
    let radius = ball_radius(norm, cert_norm, alpha, net.input_dim());
    Ok(Some(certify_net(net, radius, lambda)?.epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub attack: AttackKind,
    pub norm: Norm,
    pub alpha: f64,
    pub natural_risk: f64,
    pub natural_std_error: f64,
    pub adversarial_risk: f64,
    pub adversarial_std_error: f64,
    pub natural_accuracy: f64,
    pub adversarial_accuracy: f64,
    pub exp_neg_shannon: f64,
    pub exp_neg_collision: f64,
    /// Rényi certificate; `None` for zero-noise networks.
    pub epsilon: Option<f64>,
    pub epsilon_tv: Option<f64>,
    pub gap_bound_renyi: Option<f64>,
    pub gap_bound_tv: Option<f64>,
    pub mc_samples: usize,
    pub seed: u64,
}

/// Natural and adversarial risk, entropy terms and both gap bounds in one pass.
pub fn risk_report(
    net: &RandomizedNet,
    data: &Dataset,
    spec: &AttackSpec,
    lambda: f64,
    n_mc: usize,
    seed: u64,
) -> Result<RiskReport> {
    check_mc(n_mc, 1)?;
    let nat_counts = label_counts(net, data, n_mc, seed)?;
    let adv = adversarial_inputs(net, data, spec)?;
    let adv_counts = adv_counts(net, &adv, n_mc, seed)?;
    let nat = error_estimate(&nat_counts, data.labels(), n_mc);
    let advr = error_estimate(&adv_counts, data.labels(), n_mc);
    let shannon = entropy_term(&nat_counts, EntropyKind::Shannon)?;
    let collision = entropy_term(&nat_counts, EntropyKind::Collision)?;
    let epsilon = epsilon_at(net, spec.alpha, spec.norm, lambda)?;
    let epsilon_tv = epsilon.map(renyi_to_tv).transpose()?;
    Ok(RiskReport {
        attack: spec.kind,
        norm: spec.norm,
        alpha: spec.alpha,
        natural_risk: nat.value,
        natural_std_error: nat.std_error,
        adversarial_risk: advr.value,
        adversarial_std_error: advr.std_error,
        natural_accuracy: 1.0 - nat.value,
        adversarial_accuracy: 1.0 - advr.value,
        exp_neg_shannon: shannon,
        exp_neg_collision: collision,
        epsilon,
        epsilon_tv,
        gap_bound_renyi: epsilon.map(|e| gap_bound_renyi(e, shannon)),
        gap_bound_tv: epsilon_tv.map(|e| gap_bound_tv(e, collision)),
        mc_samples: n_mc,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub epsilon: f64,
    pub exp_neg_shannon: f64,
    pub gap_bound: f64,
    pub guaranteed_accuracy: f64,
}

pub const CURVE_HEADER: &str = "alpha,epsilon,exp_neg_shannon,gap_bound,guaranteed_accuracy";

/// Guaranteed accuracy `max(0, natural accuracy - gap)` over an `l2` budget grid.
///
/// A zero-noise network has `epsilon = 0` at `alpha = 0` and no certificate
/// (`epsilon = inf`, gap 1) beyond.
pub fn guaranteed_accuracy_curve(
    net: &RandomizedNet,
    data: &Dataset,
    alpha_grid: &[f64],
    lambda: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if alpha_grid.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::param("alpha_grid", "budgets must be finite and >= 0"));
    }
    if alpha_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedGrid);
    }
    check_mc(n_mc, 1)?;
    let counts = label_counts(net, data, n_mc, seed)?;
    let accuracy = 1.0 - error_estimate(&counts, data.labels(), n_mc).value;
    let term = entropy_term(&counts, EntropyKind::Shannon)?;
    alpha_grid
        .iter()
        .map(|&alpha| {
            let epsilon = match epsilon_at(net, alpha, Norm::L2, lambda)? {
                Some(e) => e,
                None if alpha == 0.0 => 0.0,
                None => f64::INFINITY,
            };
            let gap = gap_bound_renyi(epsilon, term);
            Ok(CurveRow {
                alpha,
                epsilon,
                exp_neg_shannon: term,
                gap_bound: gap,
                guaranteed_accuracy: (accuracy - gap).max(0.0),
            })
        })
        .collect()
}

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let fields = [
            r.alpha,
            r.epsilon,
            r.exp_neg_shannon,
            r.gap_bound,
            r.guaranteed_accuracy,
        ];
        s.push_str(&fields.iter().map(|v| sig9(*v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionChangeReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub fraction: f64,
}

/// Fraction of inputs whose attacked law moves by more than `epsilon` in KL,
/// comparing empirical laws built from the same noise draws.
pub fn prediction_change_fraction(
    net: &RandomizedNet,
    data: &Dataset,
    spec: &AttackSpec,
    epsilon: f64,
    n_mc: usize,
    seed: u64,
) -> Result<PredictionChangeReport> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::param("epsilon", "must be >= 0"));
    }
    let nat = label_counts(net, data, n_mc, seed)?;
    let adv = adversarial_inputs(net, data, spec)?;
    let advc = adv_counts(net, &adv, n_mc, seed)?;
    let mut changed = 0usize;
    for (p, q) in nat.iter().zip(&advc) {
        let p = DiscreteDistribution::from_counts(p)?;
        let q = DiscreteDistribution::from_counts(q)?;
        if kl_discrete(&q, &p)? > epsilon {
            changed += 1;
        }
    }
    Ok(PredictionChangeReport {
        alpha: spec.alpha,
        epsilon,
        fraction: changed as f64 / data.len() as f64,
    })
}
