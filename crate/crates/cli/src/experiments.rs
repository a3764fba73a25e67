//! Desk-scale experiments: the bound check across noise levels and budgets,
//! the accuracy/robustness trade-off, and the attack pattern.
//!
//! Each experiment is described by a serializable spec built around an
//! [`ExperimentConfig`], so the committed pilot file fully determines a run.

use serde::{Deserialize, Serialize};

use renoir::attacks::AttackSpec;
use renoir::distributions::{NoiseFamily, NoiseSpec};
use renoir::net::RandomizedNet;
use renoir::riskbounds::{empirical_risk, guaranteed_accuracy_curve, risk_report, CurveRow};
use renoir::{Dataset, Norm, Result};

use crate::config::{ExperimentConfig, NoiseConfig};

/// `base` with isotropic Gaussian noise of scale `sigma` (0 means no noise).
pub fn with_gaussian(base: &ExperimentConfig, sigma: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.noise = if sigma == 0.0 {
        NoiseConfig::None("none".into())
    } else {
        NoiseConfig::Spec(NoiseSpec {
            family: NoiseFamily::Gaussian,
            sigma: Some(sigma),
            b: None,
            dim: None,
            cov: None,
        })
    };
    cfg
}

fn trained(cfg: &ExperimentConfig) -> Result<(RandomizedNet, Dataset, Dataset)> {
    let data = cfg.dataset()?;
    let (net, _) = cfg.train(&data)?;
    Ok((net, data, cfg.test_dataset()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCheckSpec {
    pub base: ExperimentConfig,
    pub sigmas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub grid_resolution: usize,
    pub grid_draws: usize,
    pub attack_seed: u64,
    pub mc: usize,
    pub mc_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCell {
    pub sigma: f64,
    pub alpha: f64,
    pub natural_risk: f64,
    pub adversarial_risk: f64,
    /// Standard error of the risk difference.
    pub std_error: f64,
    pub epsilon: f64,
    pub gap_bound: f64,
}

impl BoundCell {
    pub fn measured_gap(&self) -> f64 {
        (self.adversarial_risk - self.natural_risk).abs()
    }

    /// Bound plus three standard errors.
    pub fn allowance(&self) -> f64 {
        self.gap_bound + 3.0 * self.std_error
    }

    pub fn holds(&self) -> bool {
        self.measured_gap() <= self.allowance()
    }
}

/// Grid attack in `l2` against one network per noise level, on the training set.
pub fn run_bound_check(spec: &BoundCheckSpec) -> Result<Vec<BoundCell>> {
    let mut cells = Vec::new();
    for &sigma in &spec.sigmas {
        let (net, data, _) = trained(&with_gaussian(&spec.base, sigma))?;
        for &alpha in &spec.alphas {
            let attack = AttackSpec::grid(alpha, Norm::L2, spec.grid_resolution, spec.grid_draws, spec.attack_seed);
            let r = risk_report(&net, &data, &attack, spec.base.lambda, spec.mc, spec.mc_seed)?;
            cells.push(BoundCell {
                sigma,
                alpha,
                natural_risk: r.natural_risk,
                adversarial_risk: r.adversarial_risk,
                std_error: r.natural_std_error.hypot(r.adversarial_std_error),
                epsilon: r.epsilon.unwrap_or(f64::INFINITY),
                gap_bound: r.gap_bound_renyi.unwrap_or(1.0),
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSpec {
    pub base: ExperimentConfig,
    pub sigmas: Vec<f64>,
    pub curve_sigmas: [f64; 2],
    pub alpha_grid: Vec<f64>,
    pub mc: usize,
    pub mc_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffResult {
    /// `(sigma, natural accuracy)` on the held-out set.
    pub accuracies: Vec<(f64, f64)>,
    pub curves: [Vec<CurveRow>; 2],
}

impl TradeoffResult {
    /// Largest increase of accuracy from one noise level to the next.
    pub fn worst_increase(&self) -> f64 {
        self.accuracies
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sign changes of the curve difference, skipping grid points where the curves tie.
    pub fn crossings(&self) -> usize {
        let signs: Vec<f64> = self.curves[0]
            .iter()
            .zip(&self.curves[1])
            .map(|(a, b)| a.guaranteed_accuracy - b.guaranteed_accuracy)
            .filter(|d| *d != 0.0)
            .map(f64::signum)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

pub fn run_tradeoff(spec: &TradeoffSpec) -> Result<TradeoffResult> {
    let mut accuracies = Vec::new();
    for &sigma in &spec.sigmas {
        let (net, _, test) = trained(&with_gaussian(&spec.base, sigma))?;
        let risk = empirical_risk(&net, &test, spec.mc, spec.mc_seed)?;
        accuracies.push((sigma, 1.0 - risk.value));
    }
    let curve = |sigma: f64| -> Result<Vec<CurveRow>> {
        let (net, _, test) = trained(&with_gaussian(&spec.base, sigma))?;
        guaranteed_accuracy_curve(&net, &test, &spec.alpha_grid, spec.base.lambda, spec.mc, spec.mc_seed)
    };
    Ok(TradeoffResult {
        accuracies,
        curves: [curve(spec.curve_sigmas[0])?, curve(spec.curve_sigmas[1])?],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackPatternSpec {
    pub base: ExperimentConfig,
    pub sigma: f64,
    /// Budget as a fraction of the `l2` diameter of the held-out set.
    pub diameter_fraction: f64,
    pub steps: usize,
    /// Step size as a fraction of the budget.
    pub step_fraction: f64,
    pub eot_samples: usize,
    pub attack_seed: u64,
    pub mc: usize,
    pub mc_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackPatternResult {
    pub alpha: f64,
    pub plain_natural: f64,
    pub plain_adversarial: f64,
    pub noisy_natural: f64,
    pub noisy_adversarial: f64,
}

impl AttackPatternResult {
    pub fn plain_collapses(&self) -> bool {
        self.plain_adversarial <= 0.5 * self.plain_natural
    }

    pub fn noise_helps(&self) -> bool {
        self.noisy_adversarial > self.plain_adversarial
    }
}

/// `l∞` PGD against a zero-noise network and EoT-PGD against a noisy one, same budget.
pub fn run_attack_pattern(spec: &AttackPatternSpec) -> Result<AttackPatternResult> {
    let (plain, _, test) = trained(&with_gaussian(&spec.base, 0.0))?;
    let (noisy, _, _) = trained(&with_gaussian(&spec.base, spec.sigma))?;
    let alpha = spec.diameter_fraction * test.diameter();
    let mut attack = AttackSpec::pgd(alpha, spec.steps, spec.step_fraction * alpha, spec.attack_seed);
    attack.eot_samples = spec.eot_samples;
    let lambda = spec.base.lambda;
    let p = risk_report(&plain, &test, &attack, lambda, 1, spec.mc_seed)?;
    let n = risk_report(&noisy, &test, &attack, lambda, spec.mc, spec.mc_seed)?;
    Ok(AttackPatternResult {
        alpha,
        plain_natural: p.natural_accuracy,
        plain_adversarial: p.adversarial_accuracy,
        noisy_natural: n.natural_accuracy,
        noisy_adversarial: n.adversarial_accuracy,
    })
}

/// Everything the acceptance run needs, plus the values measured when it was pinned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pilot {
    pub bound_check: BoundCheckSpec,
    pub tradeoff: TradeoffSpec,
    pub attack_pattern: AttackPatternSpec,
    pub pinned: PilotPins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotPins {
    /// Smallest `allowance - measured_gap` over all cells.
    pub bound_check_min_slack: f64,
    pub tradeoff_accuracies: Vec<(f64, f64)>,
    pub tradeoff_crossings: usize,
    pub attack_pattern: AttackPatternResult,
}

/// Drift allowed between a rerun and the pinned accuracies.
pub const PIN_TOLERANCE: f64 = 0.02;

pub fn min_slack(cells: &[BoundCell]) -> f64 {
    cells
        .iter()
        .map(|c| c.allowance() - c.measured_gap())
        .fold(f64::INFINITY, f64::min)
}
