//! Exact maximum-likelihood and Bayesian inference for polynomial basis
//! regression with known heteroscedastic Gaussian noise.
//!
//! The basis is `phi(x) = [1, x, x^2, ..., x^degree]` (ascending degree).
//! With a diagonal Gaussian prior Λ over the coefficients and per-point noise
//! v(x_i), the posterior is Gaussian with
//!
//! ```text
//! Sigma_m = (X' V^-1 X + Lambda^-1)^-1      mu_m = Sigma_m X' V^-1 y
//! ```
//!
//! and the predictive distribution at x is normal with mean `phi' mu_m` and
//! variance `phi' Sigma_m phi + v(x)`. The weighted-least-squares estimate is
//! `theta_hat = (X' V^-1 X)^-1 X' V^-1 y`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, Matrix, NumericsError, Vector};
use crate::synthetic::{Dataset, NoiseSpec};

/// Condition-number guard on the weighted normal equations. The Bayesian
/// path has no guard: the prior precision regularizes it.
const ML_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("design matrix is singular or too ill-conditioned for ML fitting")]
    SingularDesign,
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Diagonal Gaussian prior over basis coefficients.
///
/// Variances may be zero for sampling degenerate ground-truth processes;
/// posterior inference requires them strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    mean: Vector,
    variances: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mean: Vector, variances: Vec<f64>) -> Result<Self, ModelError> {
        if mean.len() != variances.len() {
            return Err(ModelError::DimensionMismatch {
                context: format!(
                    "prior mean has length {} but {} variances given",
                    mean.len(),
                    variances.len()
                ),
            });
        }
        if !variances.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(ModelError::DimensionMismatch {
                context: "prior variances must be finite and nonnegative".into(),
            });
        }
        Ok(Self { mean, variances })
    }

    pub fn zero_mean(variances: Vec<f64>) -> Result<Self, ModelError> {
        let mean = Vector::zeros(variances.len());
        Self::new(mean, variances)
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn covariance(&self) -> Matrix {
        Matrix::diagonal(&self.variances)
    }
}

/// Exact Gaussian posterior over basis coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    mean: Vector,
    covariance: Matrix,
    degree: usize,
    noise: NoiseSpec,
}

impl GaussianPosterior {
    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("posterior serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One draw of the coefficient vector from N(mu_m, Sigma_m), using a
    /// caller-provided Cholesky factor of the covariance.
    pub fn sample_with_factor(
        &self,
        chol_lower: &Matrix,
        rng: &mut crate::rng::RngStream,
    ) -> Vector {
        let z = rng.standard_normal_vec(self.mean.len());
        let lz = chol_lower.mat_vec(&z).expect("factor dimension");
        let theta: Vec<f64> = self
            .mean
            .iter()
            .zip(lz.iter())
            .map(|(m, d)| m + d)
            .collect();
        Vector::new(theta).expect("finite sample")
    }
}

/// Per-input predictive distribution of y given the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveNormal {
    pub mean: f64,
    pub variance: f64,
    /// Irreducible part v(x).
    pub aleatoric: f64,
    /// Parameter-uncertainty part phi' Sigma_m phi.
    pub epistemic: f64,
}

/// Weighted-least-squares point estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlEstimate {
    theta_hat: Vector,
    degree: usize,
    noise: NoiseSpec,
}

impl MlEstimate {
    pub fn new(theta_hat: Vector, noise: NoiseSpec) -> Self {
        assert!(!theta_hat.is_empty(), "estimate needs at least an intercept");
        let degree = theta_hat.len() - 1;
        Self {
            theta_hat,
            degree,
            noise,
        }
    }

    pub fn theta_hat(&self) -> &Vector {
        &self.theta_hat
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Basis expansion of a single input, ascending degree.
pub fn feature_vector(x: f64, degree: usize) -> Vector {
    let mut phi = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    for _ in 0..=degree {
        phi.push(p);
        p *= x;
    }
    Vector::new(phi).expect("powers of a finite input are finite at desk scale")
}

/// m × (degree+1) design matrix, row i = [1, x_i, x_i^2, ...].
pub fn design_matrix(data: &Dataset, degree: usize) -> Matrix {
    let cols = degree + 1;
    let mut entries = Vec::with_capacity(data.len() * cols);
    for (x, _) in data.iter() {
        let mut p = 1.0;
        for _ in 0..cols {
            entries.push(p);
            p *= x;
        }
    }
    Matrix::new(data.len(), cols, entries).expect("finite design entries")
}

/// Accumulates X' V^-1 X and X' V^-1 y in one pass over the data.
fn weighted_normal_equations(data: &Dataset, degree: usize, noise: &NoiseSpec) -> (Matrix, Vec<f64>) {
    let d = degree + 1;
    let mut a = Matrix::zeros(d, d);
    let mut b = vec![0.0; d];
    for (x, y) in data.iter() {
        let w = 1.0 / noise.variance(*x);
        let phi = feature_vector(*x, degree);
        for i in 0..d {
            let wi = w * phi[i];
            b[i] += wi * y;
            for j in 0..d {
                a.set(i, j, a.get(i, j) + wi * phi[j]);
            }
        }
    }
    (a, b)
}

/// 1-norm condition estimate of a small SPD matrix.
fn condition_estimate(a: &Matrix) -> Result<f64, NumericsError> {
    let n = a.rows();
    let inv = numerics::solve_spd(a, &Matrix::identity(n))?;
    let norm1 = |m: &Matrix| -> f64 {
        (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    Ok(norm1(a) * norm1(&inv))
}

/// Maximum-likelihood fit of the polynomial coefficients under known noise.
pub fn fit_ml(data: &Dataset, degree: usize, noise: &NoiseSpec) -> Result<MlEstimate, ModelError> {
    let (a, b) = weighted_normal_equations(data, degree, noise);
    let cond = condition_estimate(&a).map_err(|_| ModelError::SingularDesign)?;
    if cond > ML_CONDITION_LIMIT {
        return Err(ModelError::SingularDesign);
    }
    let rhs = Vector::new(b).expect("finite accumulation");
    let theta = numerics::solve_spd_vec(&a, &rhs).map_err(|_| ModelError::SingularDesign)?;
    Ok(MlEstimate {
        theta_hat: theta,
        degree,
        noise: *noise,
    })
}

/// Exact Gaussian posterior update. With empty data the posterior equals the
/// prior exactly.
pub fn fit_posterior(
    data: &Dataset,
    prior: &GaussianPrior,
    degree: usize,
    noise: &NoiseSpec,
) -> Result<GaussianPosterior, ModelError> {
    let d = degree + 1;
    if prior.dim() != d {
        return Err(ModelError::DimensionMismatch {
            context: format!(
                "prior dimension {} does not match degree {}",
                prior.dim(),
                degree
            ),
        });
    }
    if !prior.variances().iter().all(|v| *v > 0.0) {
        return Err(ModelError::Numerics(NumericsError::NotPositiveDefinite {
            row: 0,
            pivot: 0.0,
        }));
    }
    if data.is_empty() {
        return Ok(GaussianPosterior {
            mean: prior.mean().clone(),
            covariance: prior.covariance(),
            degree,
            noise: *noise,
        });
    }
    let (mut a, mut b) = weighted_normal_equations(data, degree, noise);
    // Add the prior precision and its pull toward the prior mean.
    for (i, rhs) in b.iter_mut().enumerate() {
        let prec = 1.0 / prior.variances()[i];
        a.set(i, i, a.get(i, i) + prec);
        *rhs += prior.mean()[i] * prec;
    }
    let rhs = Vector::new(b).expect("finite rhs");
    let mean = numerics::solve_spd_vec(&a, &rhs)?;
    let mut covariance = numerics::solve_spd(&a, &Matrix::identity(d))?;
    covariance.symmetrize();
    Ok(GaussianPosterior {
        mean,
        covariance,
        degree,
        noise: *noise,
    })
}

/// Predictive distribution of y at input x.
pub fn predictive(post: &GaussianPosterior, x: f64) -> PredictiveNormal {
    let phi = feature_vector(x, post.degree);
    let mean = phi.dot(&post.mean);
    let epistemic =
        numerics::quadratic_form(&post.covariance, &phi).expect("posterior dimensions agree");
    let aleatoric = post.noise.variance(x);
    PredictiveNormal {
        mean,
        variance: epistemic + aleatoric,
        aleatoric,
        epistemic,
    }
}

/// Plug-in prediction and its conditional risk r(x, theta_hat), which under
/// squared loss with known noise is just v(x).
pub fn ml_predict(est: &MlEstimate, x: f64) -> (f64, f64) {
    let phi = feature_vector(x, est.degree);
    (phi.dot(&est.theta_hat), est.noise.variance(x))
}
