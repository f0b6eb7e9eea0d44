//! Reject-option prediction with aleatoric, total, and epistemic uncertainty.
//!
//! The crate provides three families of reject-option predictors for models
//! learned from finite data: an aleatoric rule that gates on the irreducible
//! noise level, a Bayesian rule that gates on the total predictive risk, and
//! an epistemic rule that gates on the conditional regret against the
//! best predictor that knows the true parameters. Two model families are
//! supported end to end: exact Bayesian polynomial regression with known
//! heteroscedastic Gaussian noise, and finite-grid Bayesian classifiers that
//! admit exhaustive enumeration. The [`eval`] module implements the
//! regret-coverage experiment harness and its AuReC summary metric.

pub mod discrete;
pub mod eval;
pub mod gaussian;
pub mod loss;
pub mod numerics;
pub mod reject;
pub mod report;
pub mod rng;
pub mod synthetic;
pub mod uncertainty;

pub use discrete::{DiscreteModel, DiscretePosterior};
pub use eval::{ExperimentConfig, Method, RegretCoverageCurve, TrialResult};
pub use gaussian::{GaussianPosterior, GaussianPrior, MlEstimate, PredictiveNormal};
pub use loss::{Action, LossKind, Target};
pub use numerics::{Matrix, Vector};
pub use reject::{Decision, RejectConfig};
pub use rng::RngStream;
pub use synthetic::{Dataset, NoiseSpec, TrueProcess};
pub use uncertainty::UncertaintyTriple;
