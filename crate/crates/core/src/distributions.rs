//! Exponential-family noise models.
//!
//! Two families ship: Gaussian (isotropic or full covariance) and i.i.d.
//! Laplace. Each model can be sampled through the counter-based streams of
//! [`crate::rng`], evaluated as a log-density, and (for Laplace) queried for
//! the continuity moduli of its sufficient statistic and carrier.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::Norm;
use crate::rng::{stream_rng, streams, StreamRng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Eigenvalues at or below this are treated as degenerate.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
enum Covariance {
    Isotropic {
        sigma: f64,
    },
    Full {
        cov: DMatrix<f64>,
        chol: DMatrix<f64>,
        log_det: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Gaussian {
        dim: usize,
        cov: Covariance,
        sigma_min: f64,
    },
    Laplace {
        dim: usize,
        b: f64,
    },
}

/// An additive noise distribution on `R^d`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpec", into = "NoiseSpec")]
pub struct NoiseModel {
    repr: Repr,
}

impl NoiseModel {
    /// Isotropic Gaussian `N(0, sigma^2 I_dim)`.
    pub fn gaussian_isotropic(sigma: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::param("sigma", format!("must be > 0, got {sigma}")));
        }
        if !sigma.is_finite() || sigma * sigma <= DEGENERATE_EIGENVALUE {
            return Err(Error::DegenerateCovariance {
                min_eigenvalue: sigma * sigma,
            });
        }
        Ok(Self {
            repr: Repr::Gaussian {
                dim,
                cov: Covariance::Isotropic { sigma },
                sigma_min: sigma * sigma,
            },
        })
    }

    /// Gaussian `N(0, cov)` with a full symmetric positive-definite covariance.
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        check_dim(dim)?;
        if cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.ncols(),
            });
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("cov", "entries must be finite"));
        }
        let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..dim {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::AsymmetricCovariance);
                }
            }
        }
        let eig = cov.clone().symmetric_eigen();
        let sigma_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if sigma_min <= DEGENERATE_EIGENVALUE {
            return Err(Error::DegenerateCovariance {
                min_eigenvalue: sigma_min,
            });
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or(Error::DegenerateCovariance {
                min_eigenvalue: sigma_min,
            })?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            repr: Repr::Gaussian {
                dim,
                cov: Covariance::Full { cov, chol, log_det },
                sigma_min,
            },
        })
    }

    /// i.i.d. Laplace noise with scale `b` on every coordinate.
    pub fn laplace(b: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::param("b", format!("Laplace scale must be > 0, got {b}")));
        }
        Ok(Self {
            repr: Repr::Laplace { dim, b },
        })
    }

    pub fn family(&self) -> NoiseFamily {
        match self.repr {
            Repr::Gaussian { .. } => NoiseFamily::Gaussian,
            Repr::Laplace { .. } => NoiseFamily::Laplace,
        }
    }

    pub fn dim(&self) -> usize {
        match self.repr {
            Repr::Gaussian { dim, .. } | Repr::Laplace { dim, .. } => dim,
        }
    }

    /// Smallest covariance eigenvalue, Gaussian only.
    pub fn sigma_min(&self) -> Option<f64> {
        match self.repr {
            Repr::Gaussian { sigma_min, .. } => Some(sigma_min),
            Repr::Laplace { .. } => None,
        }
    }

    /// Laplace scale `b`, Laplace only.
    pub fn laplace_scale(&self) -> Option<f64> {
        match self.repr {
            Repr::Laplace { b, .. } => Some(b),
            Repr::Gaussian { .. } => None,
        }
    }

    /// Covariance matrix (Laplace: `2 b^2 I`).
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Gaussian { dim, cov, .. } => match cov {
                Covariance::Isotropic { sigma } => DMatrix::identity(*dim, *dim) * (sigma * sigma),
                Covariance::Full { cov, .. } => cov.clone(),
            },
            Repr::Laplace { dim, b } => DMatrix::identity(*dim, *dim) * (2.0 * b * b),
        }
    }

    /// Fill `out` with one draw.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &self.repr {
            Repr::Gaussian { cov, .. } => {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                match cov {
                    Covariance::Isotropic { sigma } => out.iter_mut().for_each(|v| *v *= sigma),
                    Covariance::Full { chol, .. } => {
                        let g = DVector::from_column_slice(out);
                        let z = chol * g;
                        out.copy_from_slice(z.as_slice());
                    }
                }
            }
            Repr::Laplace { b, .. } => {
                for v in out.iter_mut() {
                    // Inverse CDF on u in (-1/2, 1/2); the open interval keeps ln finite.
                    let u: f64 = rng.random::<f64>() - 0.5;
                    let a = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                    *v = -b * u.signum() * a.ln();
                }
            }
        }
    }

    /// Draw `index` under `seed`; the unit of reproducibility for all noise.
    pub fn draw(&self, seed: u64, index: u64, out: &mut [f64]) {
        let mut rng = stream_rng(seed, streams::NOISE, index);
        self.sample_into(&mut rng, out);
    }

    /// `n x d` matrix whose row `i` is [`NoiseModel::draw`]`(seed, i)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::param("n", "sample count must be >= 1"));
        }
        let d = self.dim();
        let mut m = DMatrix::zeros(n, d);
        let mut row = vec![0.0; d];
        for i in 0..n {
            self.draw(seed, i as u64, &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    /// Natural-log density at `z`.
    pub fn log_density(&self, z: &[f64]) -> Result<f64> {
        let d = self.dim();
        if z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: z.len(),
            });
        }
        Ok(self.log_density_unchecked(z))
    }

    pub(crate) fn log_density_unchecked(&self, z: &[f64]) -> f64 {
        let d = self.dim() as f64;
        match &self.repr {
            Repr::Gaussian { cov, .. } => match cov {
                Covariance::Isotropic { sigma } => {
                    let sq: f64 = z.iter().map(|v| v * v).sum();
                    -0.5 * d * LN_2PI - d * sigma.ln() - sq / (2.0 * sigma * sigma)
                }
                Covariance::Full { chol, log_det, .. } => {
                    let y = chol
                        .solve_lower_triangular(&DVector::from_column_slice(z))
                        .expect("cholesky factor has a positive diagonal");
                    -0.5 * (d * LN_2PI + log_det + y.norm_squared())
                }
            },
            Repr::Laplace { b, .. } => {
                let l1: f64 = z.iter().map(|v| v.abs()).sum();
                -d * (2.0 * b).ln() - l1 / b
            }
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::param("dim", "dimension must be >= 1"))
    } else {
        Ok(())
    }
}

/// Shape of a continuity modulus `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    Linear { slope: f64 },
    Zero,
}

/// A non-decreasing modulus of continuity with `omega(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityModulus {
    pub kind: ModulusKind,
    pub input_norm: Norm,
    pub output_norm: Norm,
}

impl ContinuityModulus {
    pub fn eval(&self, delta: f64) -> f64 {
        match self.kind {
            ModulusKind::Linear { slope } => slope * delta.max(0.0),
            ModulusKind::Zero => 0.0,
        }
    }
}

/// Densities of the form `exp(<t(z), theta> - u(theta) + k(z))`, exposed
/// through the pieces a Rényi certificate needs.
pub trait ExponentialFamily {
    fn log_density(&self, z: &[f64]) -> Result<f64>;
    /// Norm of the natural parameter paired with the statistic modulus.
    fn theta_norm(&self) -> Result<f64>;
    fn statistic_modulus(&self) -> Result<ContinuityModulus>;
    fn carrier_modulus(&self) -> Result<ContinuityModulus>;
}

impl ExponentialFamily for NoiseModel {
    fn log_density(&self, z: &[f64]) -> Result<f64> {
        NoiseModel::log_density(self, z)
    }

    fn theta_norm(&self) -> Result<f64> {
        match self.repr {
            // The Laplace density is written with k(z) = -|z|_1 / b and no statistic term.
            Repr::Laplace { .. } => Ok(0.0),
            Repr::Gaussian { .. } => Err(Error::UseGaussianPath),
        }
    }

    fn statistic_modulus(&self) -> Result<ContinuityModulus> {
        match self.repr {
            Repr::Laplace { .. } => Ok(ContinuityModulus {
                kind: ModulusKind::Zero,
                input_norm: Norm::L1,
                output_norm: Norm::L2,
            }),
            Repr::Gaussian { .. } => Err(Error::UseGaussianPath),
        }
    }

    fn carrier_modulus(&self) -> Result<ContinuityModulus> {
        match self.repr {
            Repr::Laplace { b, .. } => Ok(ContinuityModulus {
                kind: ModulusKind::Linear { slope: 1.0 / b },
                input_norm: Norm::L1,
                output_norm: Norm::L1,
            }),
            Repr::Gaussian { .. } => Err(Error::UseGaussianPath),
        }
    }
}

/// JSON form of a noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<Vec<f64>>>,
}

impl TryFrom<NoiseSpec> for NoiseModel {
    type Error = Error;

    fn try_from(spec: NoiseSpec) -> Result<Self> {
        match spec.family {
            NoiseFamily::Gaussian => match (spec.sigma, spec.cov) {
                (Some(sigma), None) => {
                    let dim = spec
                        .dim
                        .ok_or_else(|| Error::param("dim", "isotropic Gaussian needs `dim`"))?;
                    NoiseModel::gaussian_isotropic(sigma, dim)
                }
                (None, Some(rows)) => {
                    let d = rows.len();
                    if let Some(dim) = spec.dim {
                        if dim != d {
                            return Err(Error::DimensionMismatch { expected: dim, got: d });
                        }
                    }
                    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: bad.len(),
                        });
                    }
                    NoiseModel::gaussian(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
                }
                _ => Err(Error::param(
                    "sigma",
                    "Gaussian noise needs exactly one of `sigma` or `cov`",
                )),
            },
            NoiseFamily::Laplace => {
                if spec.sigma.is_some() || spec.cov.is_some() {
                    return Err(Error::param("b", "Laplace noise takes `b` and `dim` only"));
                }
                let b = spec.b.ok_or_else(|| Error::param("b", "Laplace noise needs `b`"))?;
                let dim = spec
                    .dim
                    .ok_or_else(|| Error::param("dim", "Laplace noise needs `dim`"))?;
                NoiseModel::laplace(b, dim)
            }
        }
    }
}

impl From<NoiseModel> for NoiseSpec {
    fn from(m: NoiseModel) -> Self {
        match m.repr {
            Repr::Gaussian { dim, cov, .. } => match cov {
                Covariance::Isotropic { sigma } => NoiseSpec {
                    family: NoiseFamily::Gaussian,
                    sigma: Some(sigma),
                    b: None,
                    dim: Some(dim),
                    cov: None,
                },
                Covariance::Full { cov, .. } => NoiseSpec {
                    family: NoiseFamily::Gaussian,
                    sigma: None,
                    b: None,
                    dim: None,
                    cov: Some((0..dim).map(|i| (0..dim).map(|j| cov[(i, j)]).collect()).collect()),
                },
            },
            Repr::Laplace { dim, b } => NoiseSpec {
                family: NoiseFamily::Laplace,
                sigma: None,
                b: Some(b),
                dim: Some(dim),
                cov: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [lo, hi] with an even number of panels.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_variance_gaussian_is_rejected() {
        assert!(matches!(
            NoiseModel::gaussian_isotropic(0.0, 1),
            Err(Error::DegenerateCovariance { .. })
        ));
        assert!(matches!(
            NoiseModel::gaussian_isotropic(-1.0, 1),
            Err(Error::InvalidParameter { name: "sigma", .. })
        ));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            NoiseModel::gaussian(singular),
            Err(Error::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn asymmetric_covariance_is_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.4, 1.0]);
        assert!(matches!(NoiseModel::gaussian(cov), Err(Error::AsymmetricCovariance)));
    }

    #[test]
    fn bad_laplace_and_dimension_rejected() {
        assert!(NoiseModel::laplace(0.0, 1).is_err());
        assert!(NoiseModel::laplace(-1.0, 1).is_err());
        assert!(NoiseModel::laplace(1.0, 0).is_err());
    }

    #[test]
    fn sigma_min_matches_eigenvalue() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let m = NoiseModel::gaussian(cov).unwrap();
        assert!((m.sigma_min().unwrap() - 1.0).abs() < 1e-10);
        let iso = NoiseModel::gaussian_isotropic(0.5, 3).unwrap();
        assert_eq!(iso.sigma_min(), Some(0.25));
    }

    #[test]
    fn gaussian_sample_moments() {
        let m = NoiseModel::gaussian_isotropic(1.0, 1).unwrap();
        let n = 100_000;
        let s = m.sample(n, 11).unwrap();
        let mean = s.column(0).mean();
        let var = s.column(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn laplace_sample_variance() {
        let m = NoiseModel::laplace(1.0, 1).unwrap();
        let n = 100_000;
        let s = m.sample(n, 5).unwrap();
        let mean = s.column(0).mean();
        let var = s.column(0).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn full_covariance_sample_matches_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let m = NoiseModel::gaussian(cov.clone()).unwrap();
        let n = 50_000;
        let s = m.sample(n, 3).unwrap();
        let emp = s.transpose() * &s / n as f64;
        for (a, b) in emp.iter().zip(cov.iter()) {
            assert!((a - b).abs() < 0.05, "{emp} vs {cov}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = NoiseModel::laplace(0.3, 4).unwrap();
        assert_eq!(m.sample(64, 9).unwrap(), m.sample(64, 9).unwrap());
        assert_ne!(m.sample(64, 9).unwrap(), m.sample(64, 10).unwrap());
        assert!(m.sample(0, 9).is_err());
    }

    #[test]
    fn log_density_reference_values() {
        let g = NoiseModel::gaussian_isotropic(1.0, 1).unwrap();
        assert!((g.log_density(&[0.0]).unwrap() - (-0.918_938_533_204_672_7)).abs() < 1e-12);
        let l = NoiseModel::laplace(1.0, 1).unwrap();
        assert!((l.log_density(&[0.0]).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        assert!(matches!(
            g.log_density(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn full_and_isotropic_densities_agree() {
        let iso = NoiseModel::gaussian_isotropic(0.7, 2).unwrap();
        let full = NoiseModel::gaussian(DMatrix::identity(2, 2) * 0.49).unwrap();
        for z in [[0.0, 0.0], [0.3, -1.2], [2.0, 0.1]] {
            let a = iso.log_density(&z).unwrap();
            let b = full.log_density(&z).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for m in [
            NoiseModel::gaussian_isotropic(1.0, 1).unwrap(),
            NoiseModel::gaussian_isotropic(0.2, 1).unwrap(),
            NoiseModel::laplace(1.0, 1).unwrap(),
            NoiseModel::laplace(0.1, 1).unwrap(),
        ] {
            let scale = m.covariance()[(0, 0)].sqrt();
            // Even panel count puts a node at 0 where the Laplace kink sits.
            let mass = simpson(
                |z| m.log_density(&[z]).unwrap().exp(),
                -30.0 * scale,
                30.0 * scale,
                200_000,
            );
            assert!((mass - 1.0).abs() < 1e-6, "{m:?}: {mass}");
        }
    }

    #[test]
    fn density_peaks_at_zero() {
        for m in [
            NoiseModel::gaussian_isotropic(0.5, 1).unwrap(),
            NoiseModel::laplace(0.5, 1).unwrap(),
        ] {
            let peak = m.log_density(&[0.0]).unwrap();
            for i in -100..=100 {
                let z = i as f64 * 0.05;
                assert!(m.log_density(&[z]).unwrap() <= peak);
            }
        }
    }

    #[test]
    fn laplace_moduli() {
        let m = NoiseModel::laplace(0.1, 2).unwrap();
        let k = m.carrier_modulus().unwrap();
        assert!((k.eval(0.3) - 3.0).abs() < 1e-12);
        assert_eq!(k.eval(0.0), 0.0);
        assert_eq!(k.input_norm, Norm::L1);
        let t = NoiseModel::laplace(1.0, 2).unwrap().statistic_modulus().unwrap();
        assert_eq!(t.eval(5.0), 0.0);
    }

    #[test]
    fn gaussian_has_no_moduli() {
        let g = NoiseModel::gaussian_isotropic(1.0, 2).unwrap();
        assert!(matches!(g.carrier_modulus(), Err(Error::UseGaussianPath)));
        assert!(matches!(g.statistic_modulus(), Err(Error::UseGaussianPath)));
    }

    #[test]
    fn laplace_sup_ratio_bounded_by_carrier_modulus() {
        // Grid sup of |log p(z - x) - log p(z - y)| against omega_k(|x - y|_1).
        let b = 0.4;
        let m = NoiseModel::laplace(b, 2).unwrap();
        let omega = m.carrier_modulus().unwrap();
        let x = [0.1, -0.2];
        let y = [0.35, 0.05];
        let delta = Norm::L1.distance(&x, &y);
        let mut sup = 0.0f64;
        for i in -60..=60 {
            for j in -60..=60 {
                let z = [i as f64 * 0.05, j as f64 * 0.05];
                let a = m.log_density(&[z[0] - x[0], z[1] - x[1]]).unwrap();
                let c = m.log_density(&[z[0] - y[0], z[1] - y[1]]).unwrap();
                sup = sup.max((a - c).abs());
            }
        }
        assert!(sup <= omega.eval(delta) + 1e-12);
        assert!((sup - omega.eval(delta)).abs() < 1e-9, "sup {sup}");
    }

    #[test]
    fn json_forms() {
        let iso: NoiseModel = serde_json::from_str(r#"{"family":"gaussian","sigma":0.3,"dim":2}"#).unwrap();
        assert_eq!(iso.dim(), 2);
        assert_eq!(
            serde_json::to_string(&iso).unwrap(),
            r#"{"family":"gaussian","sigma":0.3,"dim":2}"#
        );
        let full: NoiseModel = serde_json::from_str(r#"{"family":"gaussian","cov":[[1.0,0.0],[0.0,4.0]]}"#).unwrap();
        assert_eq!(full.sigma_min(), Some(1.0));
        let lap: NoiseModel = serde_json::from_str(r#"{"family":"laplace","b":0.1,"dim":2}"#).unwrap();
        assert_eq!(lap.laplace_scale(), Some(0.1));
        assert!(serde_json::from_str::<NoiseModel>(r#"{"family":"gaussian","sigma":0.0,"dim":2}"#).is_err());
        assert!(serde_json::from_str::<NoiseModel>(r#"{"family":"laplace","b":0.1}"#).is_err());
    }
}
