//! Attacks on randomized networks: EoT-PGD (`linf`), C&W (`l2`), EAD (`l1`)
//! and an exhaustive grid search used as an oracle on low-dimensional inputs.
//!
//! Every attack output lies in the `[-1, 1]^d` domain box. Success against a
//! randomized network is judged by the majority label over `eval_draws` noise
//! draws of `eval_seed`, never by the draws used to build the attack.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{softmax, RandomizedNet, Tape};
use crate::norms::Norm;
use crate::rng::{derive_seed, stream_rng, streams};

pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Pgd,
    Cw,
    Ead,
    Grid,
}

impl std::str::FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pgd" => Ok(Self::Pgd),
            "cw" => Ok(Self::Cw),
            "ead" => Ok(Self::Ead),
            "grid" => Ok(Self::Grid),
            other => Err(format!("unknown attack `{other}` (expected pgd, cw, ead or grid)")),
        }
    }
}

/// What the EoT wrapper averages over noise draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EotMode {
    /// Mean of per-draw loss gradients.
    Loss,
    /// Gradient of the loss of the mean logits.
    Logits,
}

impl std::str::FromStr for EotMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "loss" => Ok(Self::Loss),
            "logits" => Ok(Self::Logits),
            other => Err(format!("unknown EoT mode `{other}` (expected loss or logits)")),
        }
    }
}

fn default_eot() -> usize {
    80
}
fn default_eval_draws() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub norm: Norm,
    /// Perturbation budget. C&W and EAD results above it are discarded by risk estimators.
    pub alpha: f64,
    /// PGD iterations, or learner steps per binary-search round for C&W and EAD.
    pub steps: usize,
    /// PGD step, or C&W / EAD learning rate.
    pub step_size: f64,
    #[serde(default = "default_eot")]
    pub eot_samples: usize,
    #[serde(default = "default_eot_mode")]
    pub eot_mode: EotMode,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub random_start: bool,
    #[serde(default = "default_eval_draws")]
    pub eval_draws: usize,
    #[serde(default)]
    pub eval_seed: u64,
    /// Initial trade-off constant (C&W `c`, EAD multiplier on `c1`, `c2`).
    #[serde(default = "default_c")]
    pub c_init: f64,
    #[serde(default = "default_binary_steps")]
    pub binary_steps: usize,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Grid points per budget radius along each axis.
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    /// Noise draws per grid point.
    #[serde(default = "default_grid_draws")]
    pub grid_draws: usize,
}

fn default_eot_mode() -> EotMode {
    EotMode::Loss
}
fn default_c() -> f64 {
    0.1
}
fn default_binary_steps() -> usize {
    6
}
fn default_c1() -> f64 {
    0.01
}
fn default_c2() -> f64 {
    0.1
}
fn default_grid_resolution() -> usize {
    5
}
fn default_grid_draws() -> usize {
    100
}

impl AttackSpec {
    fn base(kind: AttackKind, norm: Norm, alpha: f64, steps: usize, step_size: f64, seed: u64) -> Self {
        Self {
            kind,
            norm,
            alpha,
            steps,
            step_size,
            eot_samples: default_eot(),
            eot_mode: EotMode::Loss,
            seed,
            random_start: true,
            eval_draws: default_eval_draws(),
            eval_seed: derive_seed(seed, 0xe7a1),
            c_init: default_c(),
            binary_steps: default_binary_steps(),
            kappa: 0.0,
            c1: default_c1(),
            c2: default_c2(),
            grid_resolution: default_grid_resolution(),
            grid_draws: default_grid_draws(),
        }
    }

    pub fn pgd(alpha: f64, steps: usize, step_size: f64, seed: u64) -> Self {
        Self::base(AttackKind::Pgd, Norm::Linf, alpha, steps, step_size, seed)
    }

    pub fn cw(alpha: f64, steps: usize, learning_rate: f64, seed: u64) -> Self {
        Self::base(AttackKind::Cw, Norm::L2, alpha, steps, learning_rate, seed)
    }

    pub fn ead(alpha: f64, steps: usize, learning_rate: f64, seed: u64) -> Self {
        Self::base(AttackKind::Ead, Norm::L1, alpha, steps, learning_rate, seed)
    }

    pub fn grid(alpha: f64, norm: Norm, resolution: usize, draws: usize, seed: u64) -> Self {
        Self {
            grid_resolution: resolution,
            grid_draws: draws,
            ..Self::base(AttackKind::Grid, norm, alpha, 1, 0.0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::AttackConfig(m.into()));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be finite and >= 0");
        }
        if self.steps == 0 {
            return bad("steps must be >= 1");
        }
        if self.eot_samples == 0 {
            return bad("eot_samples must be >= 1");
        }
        if self.eval_draws == 0 {
            return bad("eval_draws must be >= 1");
        }
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return bad("step_size must be finite and >= 0");
        }
        match self.kind {
            AttackKind::Pgd if self.norm != Norm::Linf => bad("pgd is an linf attack"),
            AttackKind::Cw if self.norm != Norm::L2 => bad("cw is an l2 attack"),
            AttackKind::Ead if self.norm != Norm::L1 => bad("ead is an l1 attack"),
            AttackKind::Cw | AttackKind::Ead if self.binary_steps == 0 => bad("binary_steps must be >= 1"),
            AttackKind::Cw | AttackKind::Ead if !(self.c_init > 0.0 && self.c_init.is_finite()) => {
                bad("c_init must be > 0")
            }
            AttackKind::Cw | AttackKind::Ead if !(self.kappa >= 0.0 && self.kappa.is_finite()) => {
                bad("kappa must be >= 0")
            }
            AttackKind::Ead if !(self.c1 >= 0.0 && self.c2 >= 0.0) => bad("c1 and c2 must be >= 0"),
            AttackKind::Grid if self.grid_resolution == 0 || self.grid_draws == 0 => {
                bad("grid_resolution and grid_draws must be >= 1")
            }
            _ => Ok(()),
        }
    }
}

/// Result of one attack. `success` is judged by the evaluation majority vote.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub x_adv: Vec<f64>,
    pub success: bool,
}

fn check(net: &RandomizedNet, x: &[f64], y: usize) -> Result<()> {
    if x.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: x.len(),
        });
    }
    if y >= net.num_classes() {
        return Err(Error::param(
            "label",
            format!("{y} is not below {} classes", net.num_classes()),
        ));
    }
    if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::AttackConfig("input lies outside the [-1, 1] domain".into()));
    }
    Ok(())
}

/// Majority predicted label over `draws` noise draws (lowest index on ties).
pub fn majority_label(net: &RandomizedNet, x: &[f64], draws: usize, seed: u64) -> Result<usize> {
    let counts = net.predict_counts(x, draws, seed)?;
    let mut best = 0;
    for (k, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Mean over `m` noise draws of the input gradient of the cross-entropy.
pub fn eot_gradient(net: &RandomizedNet, x: &[f64], y: usize, m: usize, seed: u64) -> Result<Vec<f64>> {
    eot_gradient_mode(net, x, y, m, seed, EotMode::Loss)
}

pub fn eot_gradient_mode(
    net: &RandomizedNet,
    x: &[f64],
    y: usize,
    m: usize,
    seed: u64,
    mode: EotMode,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::param("m", "EoT needs at least one draw"));
    }
    if net.noise().is_none() {
        return Ok(net.input_gradient(x, y, None)?.1);
    }
    let mut acc = vec![0.0; x.len()];
    match mode {
        EotMode::Loss => {
            for j in 0..m {
                let z = net.draw_noise(seed, j as u64);
                let (_, g) = net.input_gradient(x, y, z.as_deref())?;
                acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
        }
        EotMode::Logits => {
            let draws: Vec<Option<Vec<f64>>> = (0..m).map(|j| net.draw_noise(seed, j as u64)).collect();
            let mut mean = vec![0.0; net.num_classes()];
            for z in &draws {
                let l = net.forward_with_noise(x, z.as_deref())?;
                mean.iter_mut().zip(&l).for_each(|(a, b)| *a += b / m as f64);
            }
            let mut d = softmax(&mean);
            d[y] -= 1.0;
            for z in &draws {
                let (_, g) = net.logit_gradient(x, &d, z.as_deref())?;
                acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
        }
    }
    acc.iter_mut().for_each(|a| *a /= m as f64);
    Ok(acc)
}

/// Mean over `m` draws of the input gradient of `sum_k coeffs_k logit_k`.
pub fn eot_logit_gradient(net: &RandomizedNet, x: &[f64], coeffs: &[f64], m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::param("m", "EoT needs at least one draw"));
    }
    let mut acc = vec![0.0; x.len()];
    for j in 0..m {
        let z = net.draw_noise(seed, j as u64);
        let (_, g) = net.logit_gradient(x, coeffs, z.as_deref())?;
        acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    acc.iter_mut().for_each(|a| *a /= m as f64);
    Ok(acc)
}

fn project_linf_box(v: &mut [f64], center: &[f64], alpha: f64) {
    for (a, c) in v.iter_mut().zip(center) {
        *a = a.clamp(c - alpha, c + alpha).clamp(-1.0, 1.0);
    }
}

/// Projected sign-gradient ascent on the EoT loss inside `B_inf(x, alpha)` and the box.
pub fn pgd(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<AttackOutcome> {
    pgd_with_trace(net, x, y, spec, |_| {})
}

/// [`pgd`] that reports every iterate (the start included) to `visit`.
pub fn pgd_with_trace<F: FnMut(&[f64])>(
    net: &RandomizedNet,
    x: &[f64],
    y: usize,
    spec: &AttackSpec,
    mut visit: F,
) -> Result<AttackOutcome> {
    spec.validate()?;
    if spec.kind != AttackKind::Pgd {
        return Err(Error::AttackConfig("spec is not a pgd spec".into()));
    }
    check(net, x, y)?;
    let alpha = spec.alpha;
    let mut xt = x.to_vec();
    if spec.random_start && alpha > 0.0 {
        let mut rng = stream_rng(spec.seed, streams::ATTACK_START, 0);
        xt.iter_mut().for_each(|v| *v += rng.random_range(-alpha..=alpha));
    }
    project_linf_box(&mut xt, x, alpha);
    visit(&xt);
    for t in 0..spec.steps {
        let g = eot_gradient_mode(
            net,
            &xt,
            y,
            spec.eot_samples,
            derive_seed(spec.seed, t as u64),
            spec.eot_mode,
        )?;
        for (v, gi) in xt.iter_mut().zip(&g) {
            if *gi > 0.0 {
                *v += spec.step_size;
            } else if *gi < 0.0 {
                *v -= spec.step_size;
            }
        }
        project_linf_box(&mut xt, x, alpha);
        visit(&xt);
    }
    let success = majority_label(net, &xt, spec.eval_draws, spec.eval_seed)? != y;
    Ok(AttackOutcome { x_adv: xt, success })
}

/// `F_y - max_{i != y} F_i` on EoT-averaged softmax probabilities and the
/// logit coefficients of its gradient for each draw.
struct MarginEval {
    gap: f64,
    grad: Vec<f64>,
}

fn margin_and_grad(net: &RandomizedNet, x: &[f64], y: usize, m: usize, seed: u64) -> Result<MarginEval> {
    let k = net.num_classes();
    let draws: Vec<Option<Vec<f64>>> = if net.noise().is_none() {
        vec![None]
    } else {
        (0..m).map(|j| net.draw_noise(seed, j as u64)).collect()
    };
    let probs: Vec<Vec<f64>> = draws
        .iter()
        .map(|z| net.forward_with_noise(x, z.as_deref()).map(|l| softmax(&l)))
        .collect::<Result<_>>()?;
    let n = probs.len() as f64;
    let mut mean = vec![0.0; k];
    for p in &probs {
        mean.iter_mut().zip(p).for_each(|(a, b)| *a += b / n);
    }
    let other = (0..k)
        .filter(|i| *i != y)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if mean[b] >= mean[i] => Some(b),
            _ => Some(i),
        })
        .expect("at least two classes");
    let gap = mean[y] - mean[other];
    let mut grad = vec![0.0; x.len()];
    for (z, p) in draws.iter().zip(&probs) {
        // d(F_y - F_o)/d logits = F_y (e_y - F) - F_o (e_o - F).
        let mut coeffs: Vec<f64> = p.iter().map(|pk| (p[other] - p[y]) * pk).collect();
        coeffs[y] += p[y];
        coeffs[other] -= p[other];
        let (_, g) = net.logit_gradient(x, &coeffs, z.as_deref())?;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b / n);
    }
    Ok(MarginEval { gap, grad })
}

fn succeeds(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<bool> {
    Ok(majority_label(net, x, spec.eval_draws, spec.eval_seed)? != y)
}

/// Binary search over the trade-off multiplier. `inner(c, seed)` runs one
/// learner and returns its best successful candidate as `(norm, x)`.
fn binary_search<F>(spec: &AttackSpec, mut inner: F) -> Result<Option<(f64, Vec<f64>)>>
where
    F: FnMut(f64, u64) -> Result<Option<(f64, Vec<f64>)>>,
{
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut c = spec.c_init;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for round in 0..spec.binary_steps {
        match inner(c, derive_seed(spec.seed, round as u64))? {
            Some(cand) => {
                if best.as_ref().is_none_or(|(n, _)| cand.0 < *n) {
                    best = Some(cand);
                }
                // Success: a stronger norm penalty may still succeed with less distortion.
                lo = c;
                c = if hi.is_finite() { 0.5 * (lo + hi) } else { c * 10.0 };
            }
            None => {
                hi = c;
                c = 0.5 * (lo + hi);
            }
        }
    }
    Ok(best)
}

fn finish(x: &[f64], best: Option<(f64, Vec<f64>)>) -> AttackOutcome {
    match best {
        Some((_, x_adv)) => AttackOutcome { x_adv, success: true },
        None => AttackOutcome {
            x_adv: x.to_vec(),
            success: false,
        },
    }
}

const TANH_EDGE: f64 = 1.0 - 1e-9;

/// C&W in `l2`: minimize `c |r|_2 + max(gap(x + r), -kappa)` over
/// `x + r = tanh(w)` by gradient descent, with a binary search on `c`.
///
/// Returns the smallest successful perturbation, or `x` with `success = false`.
pub fn cw_l2(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<AttackOutcome> {
    spec.validate()?;
    if spec.kind != AttackKind::Cw {
        return Err(Error::AttackConfig("spec is not a cw spec".into()));
    }
    check(net, x, y)?;
    let accept = |xa: &[f64], gap: f64| -> Result<bool> { Ok(gap <= -spec.kappa && succeeds(net, xa, y, spec)?) };
    let w0: Vec<f64> = x.iter().map(|v| v.clamp(-TANH_EDGE, TANH_EDGE).atanh()).collect();
    let best = binary_search(spec, |c, seed| {
        let mut w = w0.clone();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..=spec.steps {
            let xa: Vec<f64> = w.iter().map(|v| v.tanh()).collect();
            let r: Vec<f64> = xa.iter().zip(x).map(|(a, b)| a - b).collect();
            let rn = Norm::L2.of(&r);
            let me = margin_and_grad(net, &xa, y, spec.eot_samples, seed)?;
            if me.gap <= -spec.kappa && best.as_ref().is_none_or(|(n, _)| rn < *n) && accept(&xa, me.gap)? {
                best = Some((rn, xa.clone()));
            }
            let active = me.gap > -spec.kappa;
            for i in 0..w.len() {
                let mut g = if rn > 0.0 { c * r[i] / rn } else { 0.0 };
                if active {
                    g += me.grad[i];
                }
                w[i] -= spec.step_size * g * (1.0 - xa[i] * xa[i]);
            }
        }
        Ok(best)
    })?;
    Ok(finish(x, best))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// EAD in `l1`: ISTA on `s c1 |r|_1 + s c2 |r|_2 + max(gap(x + r), -kappa)`
/// with shrinkage threshold `s c1 lr`, box projection after each step, and a
/// binary search on the multiplier `s`.
pub fn ead_l1(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<AttackOutcome> {
    spec.validate()?;
    if spec.kind != AttackKind::Ead {
        return Err(Error::AttackConfig("spec is not an ead spec".into()));
    }
    check(net, x, y)?;
    let best = binary_search(spec, |s, seed| {
        let mut r = vec![0.0; x.len()];
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..=spec.steps {
            let xa: Vec<f64> = r.iter().zip(x).map(|(a, b)| a + b).collect();
            let me = margin_and_grad(net, &xa, y, spec.eot_samples, seed)?;
            let n1 = Norm::L1.of(&r);
            if me.gap <= -spec.kappa && best.as_ref().is_none_or(|(n, _)| n1 < *n) && succeeds(net, &xa, y, spec)? {
                best = Some((n1, xa.clone()));
            }
            let rn = Norm::L2.of(&r);
            let active = me.gap > -spec.kappa;
            for i in 0..r.len() {
                let mut g = if rn > 0.0 { s * spec.c2 * r[i] / rn } else { 0.0 };
                if active {
                    g += me.grad[i];
                }
                let stepped = soft_threshold(r[i] - spec.step_size * g, s * spec.c1 * spec.step_size);
                r[i] = (x[i] + stepped).clamp(-1.0, 1.0) - x[i];
            }
        }
        Ok(best)
    })?;
    Ok(finish(x, best))
}

/// Grid offsets inside `B_norm(0, alpha)`, zero first, then in lexicographic order.
pub fn grid_offsets(dim: usize, norm: Norm, alpha: f64, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if dim > MAX_GRID_DIM {
        return Err(Error::AttackConfig(format!(
            "grid attack supports at most {MAX_GRID_DIM} input dimensions, got {dim}"
        )));
    }
    let mut out = vec![vec![0.0; dim]];
    if alpha == 0.0 {
        return Ok(out);
    }
    let r = resolution as i64;
    let h = alpha / resolution as f64;
    let side = (2 * r + 1) as usize;
    for mut code in 0..side.pow(dim as u32) {
        let mut k = vec![0i64; dim];
        for kj in k.iter_mut() {
            *kj = (code % side) as i64 - r;
            code /= side;
        }
        if k.iter().all(|v| *v == 0) {
            continue;
        }
        let tau: Vec<f64> = k.iter().map(|v| *v as f64 * h).collect();
        if norm.of(&tau) <= alpha * (1.0 + 1e-12) {
            out.push(tau);
        }
    }
    Ok(out)
}

/// Exhaustive search over [`grid_offsets`] for the point that maximizes the
/// misclassification frequency under a shared bank of `grid_draws` noise draws.
/// Points outside the domain box are skipped; ties keep the earlier point.
pub fn grid_attack(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<AttackOutcome> {
    spec.validate()?;
    if spec.kind != AttackKind::Grid {
        return Err(Error::AttackConfig("spec is not a grid spec".into()));
    }
    check(net, x, y)?;
    let offsets = grid_offsets(x.len(), spec.norm, spec.alpha, spec.grid_resolution)?;
    let draws = if net.noise().is_none() { 1 } else { spec.grid_draws };
    let bank: Vec<Option<Vec<f64>>> = (0..draws).map(|j| net.draw_noise(spec.seed, j as u64)).collect();
    let mut tape = Tape::default();
    let mut best_x = x.to_vec();
    let mut best_errors = None;
    let mut cand = vec![0.0; x.len()];
    for tau in &offsets {
        let mut inside = true;
        for ((c, a), t) in cand.iter_mut().zip(x).zip(tau) {
            *c = a + t;
            inside &= (-1.0..=1.0).contains(c);
        }
        if !inside {
            continue;
        }
        let errors = bank
            .iter()
            .filter(|z| net.predict_with_noise(&cand, z.as_deref(), &mut tape) != y)
            .count();
        if best_errors.is_none_or(|b| errors > b) {
            best_errors = Some(errors);
            best_x.copy_from_slice(&cand);
            if errors == draws {
                break;
            }
        }
    }
    let success = succeeds(net, &best_x, y, spec)?;
    Ok(AttackOutcome { x_adv: best_x, success })
}

/// Dispatch on `spec.kind`.
pub fn run_attack(net: &RandomizedNet, x: &[f64], y: usize, spec: &AttackSpec) -> Result<AttackOutcome> {
    match spec.kind {
        AttackKind::Pgd => pgd(net, x, y, spec),
        AttackKind::Cw => cw_l2(net, x, y, spec),
        AttackKind::Ead => ead_l1(net, x, y, spec),
        AttackKind::Grid => grid_attack(net, x, y, spec),
    }
}
