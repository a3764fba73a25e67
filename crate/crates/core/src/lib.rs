//! Rényi-divergence robustness certificates for noise-injected classifiers,
//! with the attacks and Monte Carlo risk estimators used to check them.

pub mod attacks;
pub mod certify;
pub mod data;
pub mod distributions;
pub mod divergences;
pub mod error;
pub mod net;
pub mod norms;
pub mod numfmt;
pub mod riskbounds;
pub mod rng;

pub use attacks::{AttackKind, AttackOutcome, AttackSpec, EotMode};
pub use certify::{RobustnessCertificate, Sensitivity, SensitivityMethod};
pub use distributions::{NoiseFamily, NoiseModel};
pub use divergences::{DiscreteDistribution, DivergenceKind, DivergenceValue, Metric};
pub use error::{Error, Result};
pub use net::{Dataset, Layer, Linear, RandomizedNet, TrainConfig};
pub use norms::Norm;
pub use riskbounds::{CurveRow, EntropyKind, PredictionChangeReport, RiskEstimate, RiskReport};
