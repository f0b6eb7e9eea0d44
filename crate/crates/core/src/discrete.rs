//! Finite-parameter-grid Bayesian classifiers.
//!
//! A model is a complete table of conditionals p(y | x, θ) over finite index
//! sets, together with a prior over θ and a marginal over x. Everything about
//! these models can be evaluated by exact enumeration, which is what makes
//! them usable as oracles for the classification uncertainty formulas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

/// Simplex sums are accepted within this absolute tolerance.
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DiscreteError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("index out of range: {context}")]
    IndexOutOfRange { context: String },
    #[error("observed data has zero probability under every parameter")]
    ZeroEvidence,
}

/// A finite-grid conditional model p(x, y | θ) = p(x)·p(y | x, θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct DiscreteModel {
    num_classes: usize,
    num_params: usize,
    num_inputs: usize,
    /// Conditional table indexed [θ][x][y].
    likelihood: Vec<Vec<Vec<f64>>>,
    prior: Vec<f64>,
    input_marginal: Vec<f64>,
}

/// On-disk layout of a discrete model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRecord {
    classes: usize,
    params: usize,
    inputs: usize,
    prior: Vec<f64>,
    input_marginal: Vec<f64>,
    likelihood: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<ModelRecord> for DiscreteModel {
    type Error = DiscreteError;
    fn try_from(r: ModelRecord) -> Result<Self, DiscreteError> {
        DiscreteModel::new(r.classes, r.likelihood, r.prior, r.input_marginal)
    }
}

impl From<DiscreteModel> for ModelRecord {
    fn from(m: DiscreteModel) -> ModelRecord {
        ModelRecord {
            classes: m.num_classes,
            params: m.num_params,
            inputs: m.num_inputs,
            prior: m.prior,
            input_marginal: m.input_marginal,
            likelihood: m.likelihood,
        }
    }
}

fn check_simplex(name: &str, v: &[f64]) -> Result<(), DiscreteError> {
    if v.is_empty() {
        return Err(DiscreteError::InvalidModel(format!("{name} is empty")));
    }
    if let Some(bad) = v.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
        return Err(DiscreteError::InvalidModel(format!(
            "{name} has entry {bad} outside [0, 1]"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(DiscreteError::InvalidModel(format!(
            "{name} sums to {total}, not 1"
        )));
    }
    Ok(())
}

impl DiscreteModel {
    pub fn new(
        num_classes: usize,
        likelihood: Vec<Vec<Vec<f64>>>,
        prior: Vec<f64>,
        input_marginal: Vec<f64>,
    ) -> Result<Self, DiscreteError> {
        let num_params = likelihood.len();
        if num_params == 0 {
            return Err(DiscreteError::InvalidModel("no parameters".into()));
        }
        let num_inputs = likelihood[0].len();
        if num_inputs == 0 {
            return Err(DiscreteError::InvalidModel("no inputs".into()));
        }
        for (t, per_input) in likelihood.iter().enumerate() {
            if per_input.len() != num_inputs {
                return Err(DiscreteError::InvalidModel(format!(
                    "parameter {t} has {} input rows, expected {num_inputs}",
                    per_input.len()
                )));
            }
            for (x, pmf) in per_input.iter().enumerate() {
                if pmf.len() != num_classes {
                    return Err(DiscreteError::InvalidModel(format!(
                        "conditional at (theta={t}, x={x}) has {} classes, expected {num_classes}",
                        pmf.len()
                    )));
                }
                check_simplex(&format!("p(y|x={x},theta={t})"), pmf)?;
            }
        }
        if prior.len() != num_params {
            return Err(DiscreteError::InvalidModel(format!(
                "prior has {} entries for {num_params} parameters",
                prior.len()
            )));
        }
        check_simplex("prior", &prior)?;
        if input_marginal.len() != num_inputs {
            return Err(DiscreteError::InvalidModel(format!(
                "input marginal has {} entries for {num_inputs} inputs",
                input_marginal.len()
            )));
        }
        check_simplex("input_marginal", &input_marginal)?;
        Ok(Self {
            num_classes,
            num_params,
            num_inputs,
            likelihood,
            prior,
            input_marginal,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn input_marginal(&self) -> &[f64] {
        &self.input_marginal
    }

    /// The conditional pmf p(· | x, θ).
    pub fn conditional(&self, theta: usize, x: usize) -> &[f64] {
        &self.likelihood[theta][x]
    }

    /// Same model with the prior replaced, for sequential updating.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self, DiscreteError> {
        DiscreteModel::new(
            self.num_classes,
            self.likelihood.clone(),
            prior,
            self.input_marginal.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DiscreteError> {
        serde_json::from_str(text)
            .map_err(|e| DiscreteError::InvalidModel(format!("parse failure: {e}")))
    }

    /// A random model with Dirichlet(1)-style rows; useful for oracle sweeps.
    pub fn random(
        num_params: usize,
        num_inputs: usize,
        num_classes: usize,
        rng: &mut RngStream,
    ) -> Self {
        let mut simplex = |n: usize| -> Vec<f64> {
            let mut raw: Vec<f64> = (0..n)
                .map(|_| (-(1.0 - rng.uniform()).ln()).max(1e-12))
                .collect();
            let total: f64 = raw.iter().sum();
            for v in raw.iter_mut() {
                *v /= total;
            }
            // Push any rounding slack onto the largest entry.
            let drift: f64 = 1.0 - raw.iter().sum::<f64>();
            let imax = crate::loss::argmax_lowest(&raw);
            raw[imax] += drift;
            raw
        };
        let likelihood: Vec<Vec<Vec<f64>>> = (0..num_params)
            .map(|_| (0..num_inputs).map(|_| simplex(num_classes)).collect())
            .collect();
        let prior = simplex(num_params);
        let input_marginal = simplex(num_inputs);
        DiscreteModel::new(num_classes, likelihood, prior, input_marginal)
            .expect("random model is valid")
    }
}

/// Posterior weights over the parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePosterior {
    weights: Vec<f64>,
}

impl DiscretePosterior {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Point-mass posterior on one parameter.
    pub fn point_mass(num_params: usize, theta: usize) -> Self {
        let mut weights = vec![0.0; num_params];
        weights[theta] = 1.0;
        Self { weights }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self, DiscreteError> {
        check_simplex("posterior weights", &weights)?;
        Ok(Self { weights })
    }
}

/// Bayes update of the parameter weights on a sequence of (x, y) index pairs.
///
/// Likelihood products are accumulated in log space and exponentiated once,
/// so datasets of a few hundred observations do not underflow. Empty data
/// returns the prior unchanged.
pub fn posterior_update(
    model: &DiscreteModel,
    data: &[(usize, usize)],
) -> Result<DiscretePosterior, DiscreteError> {
    for (x, y) in data {
        if *x >= model.num_inputs() || *y >= model.num_classes() {
            return Err(DiscreteError::IndexOutOfRange {
                context: format!("observation ({x}, {y})"),
            });
        }
    }
    if data.is_empty() {
        return Ok(DiscretePosterior {
            weights: model.prior().to_vec(),
        });
    }
    let mut log_w: Vec<f64> = model
        .prior()
        .iter()
        .map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();
    for (x, y) in data {
        for (t, lw) in log_w.iter_mut().enumerate() {
            let p = model.conditional(t, *x)[*y];
            *lw += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(DiscreteError::ZeroEvidence);
    }
    let mut weights: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(DiscretePosterior { weights })
}

/// Predictive pmf p(y | x, D) = Σ_θ w(θ)·p(y | x, θ).
pub fn predictive_pmf(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
) -> Vec<f64> {
    assert!(x < model.num_inputs(), "input index {x} out of range");
    assert_eq!(post.weights().len(), model.num_params());
    let mut pmf = vec![0.0; model.num_classes()];
    for (t, w) in post.weights().iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (y, p) in model.conditional(t, x).iter().enumerate() {
            pmf[y] += w * p;
        }
    }
    pmf
}
