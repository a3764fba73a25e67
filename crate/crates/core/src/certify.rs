//! Sensitivities of network prefixes and the Rényi robustness certificates
//! they yield under Gaussian or Laplace noise injection.
//!
//! A certificate is only ever built from an upper bound on the sensitivity
//! (`ExactLinear` or `LipschitzProduct`). Brute-force sensitivities are
//! lower bounds and exist for testing those upper bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ExponentialFamily, NoiseFamily, NoiseModel};
use crate::divergences::{renyi_to_ladder, renyi_to_tv, DivergenceKind, Metric};
use crate::error::{Error, Result};
use crate::net::{Layer, RandomizedNet};
use crate::norms::Norm;
use crate::rng::{stream_rng, streams};

/// Largest input dimension for which the `linf` ball is enumerated vertex by vertex.
pub const MAX_VERTEX_DIM: usize = 16;

/// Minimum number of sampled pairs for a brute-force sensitivity search.
pub const MIN_BRUTE_FORCE_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensitivityMethod {
    ExactLinear,
    LipschitzProduct,
    BruteForce,
}

/// `sup ||f(x) - f(y)||_out` over `||x - y||_in <= alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub alpha: f64,
    pub input_norm: Norm,
    pub output_norm: Norm,
    pub value: f64,
    pub method: SensitivityMethod,
}

impl Sensitivity {
    /// Sensitivity of the identity map (noise injected at the input).
    pub fn identity(alpha: f64, norm: Norm) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            input_norm: norm,
            output_norm: norm,
            value: alpha,
            method: SensitivityMethod::ExactLinear,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// Operator norm `sup ||W v||_out / ||v||_in`, where an exact formula exists.
pub fn operator_norm(w: &DMatrix<f64>, input: Norm, output: Norm) -> Result<f64> {
    if w.is_empty() {
        return Ok(0.0);
    }
    let column = |j: usize| -> Vec<f64> { w.column(j).iter().copied().collect() };
    Ok(match (input, output) {
        (Norm::L2, Norm::L2) => w.clone().singular_values().max(),
        // The l1 ball is the hull of +-e_j, so a column attains the sup.
        (Norm::L1, out) => (0..w.ncols()).map(|j| out.of(&column(j))).fold(0.0, f64::max),
        (Norm::Linf, Norm::Linf) => w
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        (Norm::L2, Norm::Linf) => w.row_iter().map(|r| r.norm()).fold(0.0, f64::max),
        (Norm::Linf, out) if w.ncols() <= MAX_VERTEX_DIM => {
            // Convex objective over the cube: enumerate the 2^d sign vertices.
            let d = w.ncols();
            let mut best = 0.0f64;
            let mut v = DVector::zeros(d);
            for mask in 0u32..(1u32 << d) {
                for k in 0..d {
                    v[k] = if mask & (1 << k) != 0 { 1.0 } else { -1.0 };
                }
                let img = w * &v;
                best = best.max(out.of(img.as_slice()));
            }
            best
        }
        (input, output) => return Err(Error::UseBruteForce { input, output }),
    })
}

/// Exact sensitivity `alpha * ||W||_{in -> out}` of the linear map `W`.
pub fn sensitivity_linear(w: &DMatrix<f64>, alpha: f64, input: Norm, output: Norm) -> Result<Sensitivity> {
    check_alpha(alpha)?;
    let op = operator_norm(w, input, output)?;
    Ok(Sensitivity {
        alpha,
        input_norm: input,
        output_norm: output,
        value: alpha * op,
        method: SensitivityMethod::ExactLinear,
    })
}

/// Sampling budget and input box for [`sensitivity_bruteforce`].
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub pairs: usize,
    pub seed: u64,
}

fn unit_direction<R: Rng>(rng: &mut R, d: usize, norm: Norm) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = match norm {
            Norm::L2 => (0..d).map(|_| rng.sample(StandardNormal)).collect(),
            Norm::L1 => (0..d)
                .map(|_| {
                    let mag: f64 = rng.sample(Exp1);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect(),
            Norm::Linf => (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        };
        let n = norm.of(&u);
        if n > 1e-300 {
            u.iter_mut().for_each(|v| *v /= n);
            return u;
        }
    }
}

/// Lower bound on the sensitivity of a black-box map from random pairs.
///
/// `x` is drawn uniformly from the box and `y = x + alpha u` with `u` on the
/// unit sphere of `input`. The reported value is the largest output gap seen.
pub fn sensitivity_bruteforce<F>(
    f: F,
    alpha: f64,
    input: Norm,
    output: Norm,
    spec: &BruteForceSpec,
) -> Result<Sensitivity>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    check_alpha(alpha)?;
    if spec.lower.len() != spec.upper.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.lower.len(),
            got: spec.upper.len(),
        });
    }
    if spec
        .lower
        .iter()
        .zip(&spec.upper)
        .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
    {
        return Err(Error::param(
            "bounds",
            "each lower bound must not exceed its upper bound",
        ));
    }
    if spec.pairs < MIN_BRUTE_FORCE_PAIRS {
        return Err(Error::param(
            "pairs",
            format!("brute-force search needs at least {MIN_BRUTE_FORCE_PAIRS} pairs"),
        ));
    }
    let d = spec.lower.len();
    let value = if alpha == 0.0 {
        0.0
    } else {
        (0..spec.pairs)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(spec.seed, streams::SENSITIVITY, k as u64);
                let x: Vec<f64> = (0..d)
                    .map(|i| {
                        if spec.lower[i] == spec.upper[i] {
                            spec.lower[i]
                        } else {
                            rng.random_range(spec.lower[i]..spec.upper[i])
                        }
                    })
                    .collect();
                let u = unit_direction(&mut rng, d, input);
                let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + alpha * b).collect();
                output.distance(&f(&x), &f(&y))
            })
            .reduce(|| 0.0, f64::max)
    };
    Ok(Sensitivity {
        alpha,
        input_norm: input,
        output_norm: output,
        value,
        method: SensitivityMethod::BruteForce,
    })
}

/// Lipschitz constant of one layer when input and output share `norm`.
pub fn layer_lipschitz(layer: &Layer, norm: Norm) -> Result<f64> {
    match layer {
        Layer::Linear(lin) => operator_norm(&lin.matrix(), norm, norm),
        // Coordinate-wise with slopes in {1, s}: Lipschitz max(1, |s|) in every l_p.
        Layer::LeakyRelu { slope } => Ok(slope.abs().max(1.0)),
    }
}

/// Upper bound `alpha * prod_j Lip(layer_j)` in the `l2 -> l2` setting.
pub fn sensitivity_lipschitz(prefix: &[Layer], alpha: f64) -> Result<Sensitivity> {
    sensitivity_lipschitz_in(prefix, alpha, Norm::L2)
}

/// Lipschitz-product sensitivity with input and output measured in `norm`.
pub fn sensitivity_lipschitz_in(prefix: &[Layer], alpha: f64, norm: Norm) -> Result<Sensitivity> {
    check_alpha(alpha)?;
    let mut product = 1.0;
    for layer in prefix {
        product *= layer_lipschitz(layer, norm)?;
    }
    Ok(Sensitivity {
        alpha,
        input_norm: norm,
        output_norm: norm,
        value: alpha * product,
        method: SensitivityMethod::LipschitzProduct,
    })
}

/// Sensitivity summary embedded in a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub value: f64,
    pub norms: [Norm; 2],
    pub method: SensitivityMethod,
}

impl From<&Sensitivity> for DeltaRecord {
    fn from(s: &Sensitivity) -> Self {
        Self {
            value: s.value,
            norms: [s.input_norm, s.output_norm],
            method: s.method,
        }
    }
}

/// A `d-(alpha, epsilon, gamma)` robustness statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(with = "order_serde")]
    pub lambda: f64,
    pub gamma: f64,
    pub metric: Metric,
    pub noise: NoiseModel,
    pub delta: DeltaRecord,
}

/// Orders may be `+inf`, which JSON numbers cannot carry; it is written as `"inf"`.
pub(crate) mod order_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid order `{s}`"))),
        }
    }
}

/// Rényi certificate for noise `noise` injected after a prefix of sensitivity `delta`.
///
/// Gaussian: `epsilon = lambda * delta^2 / (2 sigma_min)`, sensitivity in `l2`.
/// Laplace: `epsilon = |theta| omega_t(delta) + omega_k(delta) = delta / b`,
/// sensitivity in `l1`, valid for every order including `+inf`.
pub fn certificate(noise: &NoiseModel, delta: &Sensitivity, lambda: f64) -> Result<RobustnessCertificate> {
    if lambda.is_nan() || lambda < 1.0 {
        return Err(Error::InvalidOrder(lambda));
    }
    let epsilon = match noise.family() {
        NoiseFamily::Gaussian => {
            if delta.output_norm != Norm::L2 {
                return Err(Error::NormMismatch {
                    expected: Norm::L2,
                    got: delta.output_norm,
                });
            }
            if lambda.is_infinite() {
                return Err(Error::param("lambda", "Gaussian certificates need a finite order"));
            }
            let sigma_min = noise.sigma_min().expect("Gaussian carries sigma_min");
            lambda * delta.value * delta.value / (2.0 * sigma_min)
        }
        NoiseFamily::Laplace => {
            if delta.output_norm != Norm::L1 {
                return Err(Error::NormMismatch {
                    expected: Norm::L1,
                    got: delta.output_norm,
                });
            }
            let t = noise.statistic_modulus()?;
            let k = noise.carrier_modulus()?;
            noise.theta_norm()? * t.eval(delta.value) + k.eval(delta.value)
        }
    };
    Ok(RobustnessCertificate {
        alpha: delta.alpha,
        epsilon,
        lambda,
        gamma: 0.0,
        metric: Metric::Renyi,
        noise: noise.clone(),
        delta: DeltaRecord::from(delta),
    })
}

/// Restate a Rényi certificate in `target` (label-space diameter 1).
pub fn convert_certificate(cert: &RobustnessCertificate, target: Metric) -> Result<RobustnessCertificate> {
    convert_certificate_with_diam(cert, target, 1.0)
}

pub fn convert_certificate_with_diam(
    cert: &RobustnessCertificate,
    target: Metric,
    diam: f64,
) -> Result<RobustnessCertificate> {
    if cert.metric != Metric::Renyi {
        return Err(Error::Conversion(format!(
            "source certificate must be stated in renyi, found {}",
            cert.metric
        )));
    }
    let eps = cert.epsilon;
    let lambda_is_inf = cert.lambda.is_infinite();
    let epsilon = match target {
        Metric::Renyi => eps,
        // KL is the order-1 member and Rényi is non-decreasing in the order.
        Metric::Kl => eps,
        Metric::Tv => renyi_to_tv(eps)?,
        Metric::Separation if !lambda_is_inf => {
            return Err(Error::Conversion(
                "separation bounds require an order-infinity Rényi certificate".into(),
            ))
        }
        other => {
            let wanted = match other {
                Metric::Hellinger => DivergenceKind::Hellinger,
                Metric::Prokhorov => DivergenceKind::Prokhorov,
                Metric::Discrepancy => DivergenceKind::Discrepancy,
                Metric::Wasserstein => DivergenceKind::Wasserstein,
                _ => DivergenceKind::Separation,
            };
            renyi_to_ladder(eps, lambda_is_inf, diam)?
                .into_iter()
                .find(|v| v.kind == wanted)
                .map(|v| v.value)
                .expect("ladder covers every non-TV target")
        }
    };
    Ok(RobustnessCertificate {
        epsilon,
        metric: target,
        ..cert.clone()
    })
}

/// Sensitivity of the pre-noise prefix of `net`, measured in the norm its
/// noise family certifies (`l2` for Gaussian, `l1` for Laplace).
pub fn prefix_sensitivity(net: &RandomizedNet, alpha: f64) -> Result<Sensitivity> {
    let noise = net.noise().ok_or(Error::NoNoiseModel)?;
    let norm = match noise.family() {
        NoiseFamily::Gaussian => Norm::L2,
        NoiseFamily::Laplace => Norm::L1,
    };
    let prefix = net.prefix();
    if prefix.is_empty() {
        Sensitivity::identity(alpha, norm)
    } else {
        sensitivity_lipschitz_in(prefix, alpha, norm)
    }
}

/// Certificate for a randomized network at budget `alpha`.
pub fn certify_net(net: &RandomizedNet, alpha: f64, lambda: f64) -> Result<RobustnessCertificate> {
    let noise = net.noise().ok_or(Error::NoNoiseModel)?;
    let delta = prefix_sensitivity(net, alpha)?;
    certificate(noise, &delta, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Linear;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    /// Oracle: sup of |W u|_2 over a fine grid of the unit circle.
    fn circle_sup(w: &DMatrix<f64>) -> f64 {
        (0..100_000)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 100_000.0;
                (w * DVector::from_vec(vec![t.cos(), t.sin()])).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn linear_sensitivity_reference_values() {
        let s = sensitivity_linear(&(DMatrix::identity(2, 2) * 2.0), 1.0, Norm::L2, Norm::L2).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        let w = diag(&[3.0, 1.0]);
        let s = sensitivity_linear(&w, 0.5, Norm::L2, Norm::L2).unwrap();
        assert!((s.value - 0.5 * circle_sup(&w)).abs() < 1e-6);
        assert!((s.value - 1.5).abs() < 1e-12);
        let s = sensitivity_linear(&DMatrix::identity(2, 2), 1.0, Norm::Linf, Norm::L2).unwrap();
        assert!((s.value - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(s.method, SensitivityMethod::ExactLinear);
    }

    #[test]
    fn operator_norm_closed_forms() {
        let w = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 1.0, -1.0]);
        assert!((operator_norm(&w, Norm::L1, Norm::L1).unwrap() - 4.0).abs() < 1e-12);
        assert!((operator_norm(&w, Norm::Linf, Norm::Linf).unwrap() - 5.0).abs() < 1e-12);
        let vertex = operator_norm(&w, Norm::Linf, Norm::L1).unwrap();
        // (1, -1, 1): |1 + 2 + 0.5| + |3 - 1 - 1| = 4.5; (1,-1,-1): 2.5 + 3 = 5.5; (1,1,-1): 1.5 + 5 = 6.5
        assert!((vertex - 6.5).abs() < 1e-12);
    }

    #[test]
    fn unsupported_pairs_point_to_brute_force() {
        let w = DMatrix::identity(2, 2);
        assert!(matches!(
            sensitivity_linear(&w, 1.0, Norm::L2, Norm::L1),
            Err(Error::UseBruteForce { .. })
        ));
        let big = DMatrix::identity(17, 17);
        assert!(matches!(
            sensitivity_linear(&big, 1.0, Norm::Linf, Norm::L2),
            Err(Error::UseBruteForce { .. })
        ));
    }

    fn unit_box(d: usize, pairs: usize) -> BruteForceSpec {
        BruteForceSpec {
            lower: vec![-1.0; d],
            upper: vec![1.0; d],
            pairs,
            seed: 17,
        }
    }

    #[test]
    fn brute_force_identity_and_zero_budget() {
        let s = sensitivity_bruteforce(|x| x.to_vec(), 0.3, Norm::L2, Norm::L2, &unit_box(2, 10_000)).unwrap();
        assert!(s.value <= 0.3 + 1e-12 && s.value >= 0.3 - 1e-9, "{}", s.value);
        assert_eq!(s.method, SensitivityMethod::BruteForce);
        let z = sensitivity_bruteforce(|x| x.to_vec(), 0.0, Norm::L2, Norm::L2, &unit_box(2, 10_000)).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(sensitivity_bruteforce(|x| x.to_vec(), 0.3, Norm::L2, Norm::L2, &unit_box(2, 100)).is_err());
    }

    #[test]
    fn brute_force_matches_linear_within_two_percent() {
        let w = diag(&[3.0, 1.0]);
        let exact = sensitivity_linear(&w, 0.5, Norm::L2, Norm::L2).unwrap().value;
        let f = |x: &[f64]| (&w * DVector::from_column_slice(x)).as_slice().to_vec();
        let s = sensitivity_bruteforce(f, 0.5, Norm::L2, Norm::L2, &unit_box(2, 10_000)).unwrap();
        assert!(s.value <= exact + 1e-12);
        assert!(s.value >= 0.98 * exact, "{} vs {exact}", s.value);
    }

    fn linear(w: DMatrix<f64>) -> Layer {
        Layer::Linear(Linear::from_matrix(&w, vec![0.0; w.nrows()]).unwrap())
    }

    #[test]
    fn lipschitz_products() {
        let s = sensitivity_lipschitz(&[], 0.7).unwrap();
        assert_eq!(s.value, 0.7);
        let prefix = [linear(DMatrix::identity(2, 2) * 2.0), Layer::LeakyRelu { slope: 0.1 }];
        let s = sensitivity_lipschitz(&prefix, 1.0).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(s.method, SensitivityMethod::LipschitzProduct);
        let prefix = [linear(diag(&[2.0])), linear(diag(&[3.0]))];
        let s = sensitivity_lipschitz(&prefix, 0.5).unwrap();
        assert!((s.value - 3.0).abs() < 1e-12);
        let composed = sensitivity_linear(&(diag(&[3.0]) * diag(&[2.0])), 0.5, Norm::L2, Norm::L2).unwrap();
        assert!((composed.value - s.value).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_upper_bounds_brute_force() {
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let prefix = [linear(w.clone()), Layer::LeakyRelu { slope: 0.1 }];
        let bound = sensitivity_lipschitz(&prefix, 1.0).unwrap().value;
        let f = |x: &[f64]| {
            let y = &w * DVector::from_column_slice(x);
            y.iter()
                .map(|v| if *v < 0.0 { 0.1 * v } else { *v })
                .collect::<Vec<_>>()
        };
        let brute = sensitivity_bruteforce(f, 1.0, Norm::L2, Norm::L2, &unit_box(2, 10_000)).unwrap();
        assert!(brute.value <= bound + 1e-12);
        assert!(brute.value > 1.9);
    }

    #[test]
    fn certificate_reference_values() {
        let g = NoiseModel::gaussian_isotropic(0.5, 2).unwrap();
        let delta = Sensitivity::identity(0.5, Norm::L2).unwrap();
        let c = certificate(&g, &delta, 1.0).unwrap();
        assert!((c.epsilon - 0.5).abs() < 1e-12);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.metric, Metric::Renyi);

        let l = NoiseModel::laplace(0.1, 2).unwrap();
        let delta = Sensitivity::identity(0.3, Norm::L1).unwrap();
        let c = certificate(&l, &delta, f64::INFINITY).unwrap();
        assert!((c.epsilon - 3.0).abs() < 1e-12);

        for noise in [&g, &l] {
            let norm = if noise.family() == NoiseFamily::Gaussian {
                Norm::L2
            } else {
                Norm::L1
            };
            let c = certificate(noise, &Sensitivity::identity(0.0, norm).unwrap(), 2.0).unwrap();
            assert_eq!(c.epsilon, 0.0);
        }
    }

    #[test]
    fn certificate_norm_mismatch() {
        let g = NoiseModel::gaussian_isotropic(0.5, 2).unwrap();
        let l = NoiseModel::laplace(0.5, 2).unwrap();
        assert!(matches!(
            certificate(&g, &Sensitivity::identity(0.1, Norm::L1).unwrap(), 1.0),
            Err(Error::NormMismatch { .. })
        ));
        assert!(matches!(
            certificate(&l, &Sensitivity::identity(0.1, Norm::L2).unwrap(), 1.0),
            Err(Error::NormMismatch { .. })
        ));
        assert!(certificate(&g, &Sensitivity::identity(0.1, Norm::L2).unwrap(), 0.5).is_err());
    }

    #[test]
    fn conversions() {
        let g = NoiseModel::gaussian_isotropic(1.0, 1).unwrap();
        let mut c = certificate(&g, &Sensitivity::identity(0.0, Norm::L2).unwrap(), 2.0).unwrap();
        assert_eq!(convert_certificate(&c, Metric::Tv).unwrap().epsilon, 0.0);
        c.epsilon = 1.0;
        let tv = convert_certificate(&c, Metric::Tv).unwrap();
        assert!((tv.epsilon - 0.673_916).abs() < 1e-6);
        assert_eq!(tv.gamma, c.gamma);
        assert_eq!(tv.alpha, c.alpha);
        assert_eq!(tv.metric, Metric::Tv);
        let h = convert_certificate(&c, Metric::Hellinger).unwrap();
        assert!((h.epsilon - 1.0).abs() < 1e-12);
        assert!(matches!(
            convert_certificate(&c, Metric::Separation),
            Err(Error::Conversion(_))
        ));
        assert!(convert_certificate(&tv, Metric::Hellinger).is_err());

        let l = NoiseModel::laplace(1.0, 1).unwrap();
        let c = certificate(&l, &Sensitivity::identity(0.25, Norm::L1).unwrap(), f64::INFINITY).unwrap();
        let s = convert_certificate(&c, Metric::Separation).unwrap();
        assert_eq!(s.epsilon, 0.25);
    }

    #[test]
    fn certificate_json_shape() {
        let g = NoiseModel::gaussian_isotropic(0.5, 2).unwrap();
        let c = certificate(&g, &Sensitivity::identity(0.1, Norm::L2).unwrap(), 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["metric"], "renyi");
        assert_eq!(v["delta"]["norms"], serde_json::json!(["l2", "l2"]));
        assert_eq!(v["delta"]["method"], "ExactLinear");
        assert_eq!(v["noise"]["family"], "gaussian");
        let back: RobustnessCertificate = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);

        let l = NoiseModel::laplace(1.0, 1).unwrap();
        let c = certificate(&l, &Sensitivity::identity(0.25, Norm::L1).unwrap(), f64::INFINITY).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains(r#""lambda":"inf""#));
        assert_eq!(serde_json::from_str::<RobustnessCertificate>(&s).unwrap(), c);
    }

    #[test]
    fn certificate_monotonicity() {
        let mut prev = 0.0;
        for k in 0..20 {
            let alpha = k as f64 * 0.05;
            let g = NoiseModel::gaussian_isotropic(0.4, 2).unwrap();
            let e = certificate(&g, &Sensitivity::identity(alpha, Norm::L2).unwrap(), 1.5)
                .unwrap()
                .epsilon;
            assert!(e >= prev);
            prev = e;
        }
        let d = Sensitivity::identity(0.2, Norm::L2).unwrap();
        let by_sigma: Vec<f64> = [0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|s| {
                certificate(&NoiseModel::gaussian_isotropic(*s, 2).unwrap(), &d, 1.0)
                    .unwrap()
                    .epsilon
            })
            .collect();
        assert!(by_sigma.windows(2).all(|w| w[0] >= w[1]));
        let by_lambda: Vec<f64> = [1.0, 2.0, 5.0]
            .iter()
            .map(|l| {
                certificate(&NoiseModel::gaussian_isotropic(0.3, 2).unwrap(), &d, *l)
                    .unwrap()
                    .epsilon
            })
            .collect();
        assert!(by_lambda.windows(2).all(|w| w[0] <= w[1]));
        let d1 = Sensitivity::identity(0.2, Norm::L1).unwrap();
        let by_b: Vec<f64> = [0.1, 0.2, 0.4]
            .iter()
            .map(|b| {
                certificate(&NoiseModel::laplace(*b, 2).unwrap(), &d1, 1.0)
                    .unwrap()
                    .epsilon
            })
            .collect();
        assert!(by_b.windows(2).all(|w| w[0] >= w[1]));
    }
}
