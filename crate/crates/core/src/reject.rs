//! The four reject-option decision rules and the exhaustive optimality
//! oracle for the epistemic rule.
//!
//! All rules share the same boundary convention: a prediction is accepted
//! when its uncertainty score is less than or equal to the threshold, so a
//! tie at exactly the threshold predicts. The aleatoric and plug-in rules
//! gate on the known noise level v(x); the Bayesian rule gates on total
//! uncertainty T(x, D); the epistemic rule gates on the conditional regret
//! E(x, D).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrete::{posterior_update, DiscreteModel, DiscretePosterior};
use crate::gaussian::{ml_predict, predictive, GaussianPosterior, MlEstimate};
use crate::loss::{self, Action, LossKind, Target};
use crate::synthetic::TrueProcess;
use crate::uncertainty::{
    cross_entropy_uncertainty, discrete_base_prediction, discrete_bayes_action,
    zero_one_uncertainty,
};

/// Enumeration budget for the optimality oracle: K x |X| x |Y| cells and at most
/// two observations.
const MAX_ENUM_CELLS: usize = 64;
const MAX_ENUM_OBSERVATIONS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum RejectError {
    #[error("model too large to enumerate: {cells} cells (limit {limit}), m = {m}")]
    EnumerationTooLarge { cells: usize, m: usize, limit: usize },
}

/// Either a prediction payload or the abstain action.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Predict(Action),
    Reject,
}

impl Decision {
    pub fn is_reject(&self) -> bool {
        matches!(self, Decision::Reject)
    }

    pub fn predicted_value(&self) -> Option<f64> {
        match self {
            Decision::Predict(Action::Value(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn predicted_class(&self) -> Option<usize> {
        match self {
            Decision::Predict(Action::Class(c)) => Some(*c),
            _ => None,
        }
    }
}

/// Rejection costs for the risk-gated (epsilon) and regret-gated (delta) rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectConfig {
    pub epsilon: f64,
    pub delta: f64,
}

impl RejectConfig {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        assert!(
            epsilon.is_finite() && epsilon >= 0.0 && delta.is_finite() && delta >= 0.0,
            "rejection costs must be finite and nonnegative"
        );
        Self { epsilon, delta }
    }
}

/// The oracle rule under squared loss with the true process known: predict
/// the true mean when v(x) <= epsilon.
pub fn aleatoric_oracle(process: &TrueProcess, x: f64, epsilon: f64) -> Decision {
    if process.noise().variance(x) <= epsilon {
        Decision::Predict(Action::Value(process.eval(x)))
    } else {
        Decision::Reject
    }
}

/// The plug-in rule: same gate as the oracle (the noise is known), but the
/// prediction comes from the ML estimate.
pub fn plug_in_reject(est: &MlEstimate, x: f64, epsilon: f64) -> Decision {
    let (prediction, plug_in_risk) = ml_predict(est, x);
    if plug_in_risk <= epsilon {
        Decision::Predict(Action::Value(prediction))
    } else {
        Decision::Reject
    }
}

/// Bayesian rule for the Gaussian/squared instance: predict the posterior
/// predictive mean when T(x, D) <= epsilon.
pub fn bayesian_reject_gaussian(post: &GaussianPosterior, x: f64, epsilon: f64) -> Decision {
    let pred = predictive(post, x);
    if pred.variance <= epsilon {
        Decision::Predict(Action::Value(pred.mean))
    } else {
        Decision::Reject
    }
}

/// Epistemic rule for the Gaussian/squared instance: same prediction, gated
/// on E(x, D) <= delta.
pub fn epistemic_reject_gaussian(post: &GaussianPosterior, x: f64, delta: f64) -> Decision {
    let pred = predictive(post, x);
    if pred.epistemic <= delta {
        Decision::Predict(Action::Value(pred.mean))
    } else {
        Decision::Reject
    }
}

/// Bayesian rule for a discrete model: gate on T(x, D) <= epsilon; the prediction
/// is the argmax class (0/1) or the full predictive distribution (CE).
pub fn bayesian_reject_discrete(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    epsilon: f64,
    loss_kind: LossKind,
) -> Decision {
    let total = match loss_kind {
        LossKind::ZeroOne => zero_one_uncertainty(model, post, x).total,
        LossKind::CrossEntropy => cross_entropy_uncertainty(model, post, x).total,
        LossKind::Squared => panic!("squared loss needs the Gaussian rule"),
    };
    if total <= epsilon {
        Decision::Predict(discrete_base_prediction(model, post, x, loss_kind))
    } else {
        Decision::Reject
    }
}

/// Epistemic rule for a discrete model: gate on E(x, D) <= delta.
pub fn epistemic_reject_discrete(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    delta: f64,
    loss_kind: LossKind,
) -> Decision {
    epistemic_reject_discrete_biased(model, post, x, delta, loss_kind, 0.0)
}

/// Epistemic rule with an additive bias on the gating score. The bias exists
/// so the verification gate can prove its own sensitivity by perturbing the
/// score; production callers use [`epistemic_reject_discrete`].
#[doc(hidden)]
pub fn epistemic_reject_discrete_biased(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    delta: f64,
    loss_kind: LossKind,
    bias: f64,
) -> Decision {
    let epistemic = match loss_kind {
        LossKind::ZeroOne => zero_one_uncertainty(model, post, x).epistemic,
        LossKind::CrossEntropy => cross_entropy_uncertainty(model, post, x).epistemic,
        LossKind::Squared => panic!("squared loss needs the Gaussian rule"),
    };
    if epistemic + bias <= delta {
        Decision::Predict(discrete_base_prediction(model, post, x, loss_kind))
    } else {
        Decision::Reject
    }
}

/// Per-sample regret-based reject loss: the loss gap against the theta-aware
/// Bayes action when predicting (which may be negative on a single draw),
/// or delta when rejecting.
pub fn regret_reject_loss(
    decision: &Decision,
    bayes_action: &Action,
    y: &Target,
    delta: f64,
    loss_kind: LossKind,
) -> f64 {
    match decision {
        Decision::Reject => delta,
        Decision::Predict(action) => {
            loss::prediction_loss(loss_kind, y, action)
                - loss::prediction_loss(loss_kind, y, bayes_action)
        }
    }
}

/// Outcome of the exhaustive optimality check.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    /// Reachable (x, D) pairs that were enumerated.
    pub pairs_checked: usize,
    /// Number of thresholds on the delta grid.
    pub deltas_checked: usize,
    /// Worst excess of the implemented rule's expected regret-reject loss
    /// over the best available action, across all pairs and thresholds.
    pub max_suboptimality: f64,
}

impl OptimalityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_suboptimality <= tol
    }
}

/// Exhaustively verifies that the epistemic rule's action minimizes the
/// expected regret-reject loss at every reachable (x, D) and every delta on the
/// grid.
///
/// Datasets are enumerated as ordered tuples of at most `m` observations;
/// a pair (x, D) is reachable when every observation and the query input
/// have positive marginal probability and the data has positive likelihood
/// under at least one parameter. Candidate actions are every class, the
/// predictive distribution itself for cross-entropy, and rejection.
pub fn verify_epistemic_optimality(
    model: &DiscreteModel,
    m: usize,
    delta_grid: &[f64],
    loss_kind: LossKind,
) -> Result<OptimalityReport, RejectError> {
    verify_epistemic_optimality_biased(model, m, delta_grid, loss_kind, 0.0)
}

/// [`verify_epistemic_optimality`] with the bias hook exposed; see
/// [`epistemic_reject_discrete_biased`].
#[doc(hidden)]
pub fn verify_epistemic_optimality_biased(
    model: &DiscreteModel,
    m: usize,
    delta_grid: &[f64],
    loss_kind: LossKind,
    bias: f64,
) -> Result<OptimalityReport, RejectError> {
    let cells = model.num_params() * model.num_inputs() * model.num_classes();
    if cells > MAX_ENUM_CELLS || m > MAX_ENUM_OBSERVATIONS {
        return Err(RejectError::EnumerationTooLarge {
            cells,
            m,
            limit: MAX_ENUM_CELLS,
        });
    }

    let mut pairs_checked = 0;
    let mut max_suboptimality: f64 = 0.0;

    for dataset in enumerate_datasets(model, m) {
        let post = match posterior_update(model, &dataset) {
            Ok(p) => p,
            // Data impossible under every parameter: unreachable, skip.
            Err(_) => continue,
        };
        for x in 0..model.num_inputs() {
            if model.input_marginal()[x] == 0.0 {
                continue;
            }
            pairs_checked += 1;

            // Expected regret-reject loss of every candidate prediction
            // under p(theta, y | x, D); rejection costs exactly delta.
            let candidates = candidate_actions(model, &post, x, loss_kind);
            let regrets: Vec<f64> = candidates
                .iter()
                .map(|a| expected_regret_of_action(model, &post, x, a, loss_kind))
                .collect();
            let best_prediction = regrets.iter().cloned().fold(f64::INFINITY, f64::min);

            for &delta in delta_grid {
                let optimum = best_prediction.min(delta);
                let decision =
                    epistemic_reject_discrete_biased(model, &post, x, delta, loss_kind, bias);
                let achieved = match &decision {
                    Decision::Reject => delta,
                    Decision::Predict(action) => {
                        expected_regret_of_action(model, &post, x, action, loss_kind)
                    }
                };
                max_suboptimality = max_suboptimality.max(achieved - optimum);
            }
        }
    }

    Ok(OptimalityReport {
        pairs_checked,
        deltas_checked: delta_grid.len(),
        max_suboptimality,
    })
}

/// All ordered (x, y)-index tuples of length `m` whose inputs have positive
/// marginal probability.
fn enumerate_datasets(model: &DiscreteModel, m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut observations = Vec::new();
    for x in 0..model.num_inputs() {
        if model.input_marginal()[x] == 0.0 {
            continue;
        }
        for y in 0..model.num_classes() {
            observations.push((x, y));
        }
    }
    let mut datasets: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(datasets.len() * observations.len());
        for d in &datasets {
            for obs in &observations {
                let mut extended = d.clone();
                extended.push(*obs);
                next.push(extended);
            }
        }
        datasets = next;
    }
    datasets
}

/// The finite candidate set: each class for 0/1; each class vertex, each
/// theta-conditional, and the predictive itself for cross-entropy.
fn candidate_actions(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    loss_kind: LossKind,
) -> Vec<Action> {
    match loss_kind {
        LossKind::ZeroOne => (0..model.num_classes()).map(Action::Class).collect(),
        LossKind::CrossEntropy => {
            let mut actions: Vec<Action> = (0..model.num_classes())
                .map(|c| {
                    let mut vertex = vec![0.0; model.num_classes()];
                    vertex[c] = 1.0;
                    Action::Distribution(vertex)
                })
                .collect();
            for t in 0..model.num_params() {
                actions.push(Action::Distribution(model.conditional(t, x).to_vec()));
            }
            actions.push(discrete_base_prediction(model, post, x, loss_kind));
            actions
        }
        LossKind::Squared => panic!("squared loss is not enumerable"),
    }
}

/// Exact expected regret-reject loss of a fixed prediction action under
/// p(theta, y | x, D). Terms with zero probability contribute nothing even when
/// the loss is infinite.
fn expected_regret_of_action(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    action: &Action,
    loss_kind: LossKind,
) -> f64 {
    let mut acc = 0.0;
    for (t, w) in post.weights().iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let cond = model.conditional(t, x);
        let bayes = discrete_bayes_action(cond, loss_kind);
        for (y, py) in cond.iter().enumerate() {
            if *py == 0.0 {
                continue;
            }
            let target = Target::Class(y);
            let gap = loss::prediction_loss(loss_kind, &target, action)
                - loss::prediction_loss(loss_kind, &target, &bayes);
            acc += w * py * gap;
            if acc.is_infinite() {
                return acc;
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{fit_posterior, GaussianPrior};
    use crate::numerics::Vector;
    use crate::rng::RngStream;
    use crate::synthetic::{example1_process, Dataset, NoiseSpec};
    use approx::assert_abs_diff_eq;

    fn two_theta_bernoulli() -> DiscreteModel {
        DiscreteModel::new(
            2,
            vec![vec![vec![0.9, 0.1]], vec![vec![0.1, 0.9]]],
            vec![0.5, 0.5],
            vec![1.0],
        )
        .unwrap()
    }

    fn one_point_posterior() -> GaussianPosterior {
        let prior = GaussianPrior::zero_mean(vec![1.0, 1.0]).unwrap();
        let data = Dataset::new(vec![(0.0, 2.0)]);
        fit_posterior(&data, &prior, 1, &NoiseSpec::default()).unwrap()
    }

    #[test]
    fn aleatoric_oracle_examples() {
        let p = example1_process();
        // v(0) = 2.66 exceeds the budget.
        assert_eq!(aleatoric_oracle(&p, 0.0, 1.0), Decision::Reject);
        // v(-8) = 0.1; the prediction is the true mean -3.
        let d = aleatoric_oracle(&p, -8.0, 1.0);
        assert_eq!(d.predicted_value(), Some(-3.0));
    }

    #[test]
    fn aleatoric_boundary_roots() {
        // v(x) = 1 at x = -8 +- sqrt(0.9/0.04).
        let p = example1_process();
        let root = (0.9_f64 / 0.04).sqrt();
        assert_abs_diff_eq!(root, 4.743416, epsilon = 1e-6);
        for sign in [-1.0, 1.0] {
            let inside = -8.0 + sign * (root - 1e-9);
            let outside = -8.0 + sign * (root + 1e-9);
            assert!(!aleatoric_oracle(&p, inside, 1.0).is_reject());
            assert!(aleatoric_oracle(&p, outside, 1.0).is_reject());
        }
    }

    #[test]
    fn plug_in_examples() {
        let est = MlEstimate::new(Vector::new(vec![1.0, 0.5]).unwrap(), NoiseSpec::default());
        assert_eq!(plug_in_reject(&est, -8.0, 1.0).predicted_value(), Some(-3.0));
        // Zero budget rejects everywhere since v > 0.
        assert!(plug_in_reject(&est, -8.0, 0.0).is_reject());
        // Unbounded budget always predicts.
        assert!(!plug_in_reject(&est, 100.0, 1e9).is_reject());
    }

    #[test]
    fn plug_in_and_oracle_share_accept_sets() {
        let p = example1_process();
        let est = MlEstimate::new(Vector::new(vec![0.3, -0.2]).unwrap(), *p.noise());
        let mut rng = RngStream::new(130, 0);
        for _ in 0..500 {
            let x = 6.0 * rng.standard_normal();
            let eps = 3.0 * rng.uniform();
            assert_eq!(
                aleatoric_oracle(&p, x, eps).is_reject(),
                plug_in_reject(&est, x, eps).is_reject()
            );
        }
    }

    #[test]
    fn bayesian_gaussian_prior_example() {
        let prior = GaussianPrior::zero_mean(vec![1.0, 1.0]).unwrap();
        let post = fit_posterior(&Dataset::default(), &prior, 1, &NoiseSpec::default()).unwrap();
        // T(0) = 1 + 2.66 = 3.66.
        let accept = bayesian_reject_gaussian(&post, 0.0, 4.0);
        assert_eq!(accept.predicted_value(), Some(0.0));
        assert!(bayesian_reject_gaussian(&post, 0.0, 3.0).is_reject());
    }

    #[test]
    fn epistemic_gaussian_one_point_example() {
        let post = one_point_posterior();
        let accept = epistemic_reject_gaussian(&post, 0.0, 1.0);
        let v = accept.predicted_value().unwrap();
        assert_abs_diff_eq!(v, 0.54645, epsilon = 1e-5);
        assert!(epistemic_reject_gaussian(&post, 0.0, 0.5).is_reject());
    }

    #[test]
    fn discrete_tie_breaks_to_lowest_class() {
        let model = two_theta_bernoulli();
        let post = DiscretePosterior::from_weights(vec![0.5, 0.5]).unwrap();
        // T = 0.5 <= 0.6; the (0.5, 0.5) predictive ties, class 0 wins.
        let d = bayesian_reject_discrete(&model, &post, 0, 0.6, LossKind::ZeroOne);
        assert_eq!(d.predicted_class(), Some(0));
    }

    #[test]
    fn epistemic_discrete_never_rejects_without_disagreement() {
        let model = DiscreteModel::new(
            2,
            vec![vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]],
            vec![0.5, 0.5],
            vec![1.0],
        )
        .unwrap();
        let post = DiscretePosterior::from_weights(vec![0.5, 0.5]).unwrap();
        for delta in [0.0, 0.1, 2.0] {
            let d = epistemic_reject_discrete(&model, &post, 0, delta, LossKind::ZeroOne);
            assert!(!d.is_reject());
        }
    }

    #[test]
    fn accept_sets_are_monotone_in_threshold() {
        let post = one_point_posterior();
        let model = two_theta_bernoulli();
        let dpost = DiscretePosterior::from_weights(vec![0.7, 0.3]).unwrap();
        let mut rng = RngStream::new(131, 0);
        for _ in 0..200 {
            let x = 5.0 * rng.standard_normal();
            let lo = 2.0 * rng.uniform();
            let hi = lo + rng.uniform();
            if !bayesian_reject_gaussian(&post, x, lo).is_reject() {
                assert!(!bayesian_reject_gaussian(&post, x, hi).is_reject());
            }
            if !epistemic_reject_gaussian(&post, x, lo).is_reject() {
                assert!(!epistemic_reject_gaussian(&post, x, hi).is_reject());
            }
            if !epistemic_reject_discrete(&model, &dpost, 0, lo, LossKind::ZeroOne).is_reject() {
                assert!(
                    !epistemic_reject_discrete(&model, &dpost, 0, hi, LossKind::ZeroOne)
                        .is_reject()
                );
            }
        }
    }

    #[test]
    fn bayes_and_epistemic_predict_the_same_payload() {
        let post = one_point_posterior();
        let mut rng = RngStream::new(132, 0);
        for _ in 0..100 {
            let x = 4.0 * rng.standard_normal();
            let qb = bayesian_reject_gaussian(&post, x, 1e9);
            let qe = epistemic_reject_gaussian(&post, x, 1e9);
            assert_eq!(qb, qe);
        }
    }

    #[test]
    fn regret_reject_loss_cases() {
        let costs = RejectConfig::new(1.0, 0.3);
        assert_eq!(
            regret_reject_loss(
                &Decision::Reject,
                &Action::Value(0.0),
                &Target::Real(5.0),
                costs.delta,
                LossKind::Squared
            ),
            0.3
        );
        assert_eq!(
            regret_reject_loss(
                &Decision::Predict(Action::Value(2.0)),
                &Action::Value(2.0),
                &Target::Real(5.0),
                0.3,
                LossKind::Squared
            ),
            0.0
        );
        // Predicting class 1 when the Bayes action is class 0 and y = 0.
        assert_eq!(
            regret_reject_loss(
                &Decision::Predict(Action::Class(1)),
                &Action::Class(0),
                &Target::Class(0),
                0.3,
                LossKind::ZeroOne
            ),
            1.0
        );
        // The gap can be negative on a single draw.
        assert_eq!(
            regret_reject_loss(
                &Decision::Predict(Action::Value(5.0)),
                &Action::Value(0.0),
                &Target::Real(5.0),
                0.3,
                LossKind::Squared
            ),
            -25.0
        );
    }

    fn delta_grid() -> Vec<f64> {
        (0..=20).map(|i| i as f64 * 0.05).collect()
    }

    #[test]
    fn optimality_holds_on_random_small_models() {
        for trial in 0..20 {
            let mut rng = RngStream::new(140, trial);
            let model = DiscreteModel::random(2, 3, 2, &mut rng);
            for kind in [LossKind::ZeroOne, LossKind::CrossEntropy] {
                let report = verify_epistemic_optimality(&model, 1, &delta_grid(), kind).unwrap();
                assert!(
                    report.passed(1e-12),
                    "trial {trial} {kind}: suboptimality {}",
                    report.max_suboptimality
                );
                assert_eq!(report.pairs_checked, 6 * 3);
            }
        }
    }

    #[test]
    fn optimality_with_two_observations() {
        let mut rng = RngStream::new(141, 0);
        let model = DiscreteModel::random(2, 2, 2, &mut rng);
        let report = verify_epistemic_optimality(&model, 2, &delta_grid(), LossKind::ZeroOne).unwrap();
        assert!(report.passed(1e-12));
        assert_eq!(report.pairs_checked, 16 * 2);
    }

    #[test]
    fn zero_delta_makes_reject_optimal() {
        let model = two_theta_bernoulli();
        let report = verify_epistemic_optimality(&model, 1, &[0.0], LossKind::ZeroOne).unwrap();
        assert!(report.passed(1e-12));
        // And the rule indeed rejects where E > 0.
        let post = posterior_update(&model, &[(0, 0)]).unwrap();
        let e = zero_one_uncertainty(&model, &post, 0).epistemic;
        assert!(e > 0.0);
        assert!(epistemic_reject_discrete(&model, &post, 0, 0.0, LossKind::ZeroOne).is_reject());
    }

    #[test]
    fn huge_delta_never_rejects() {
        let model = two_theta_bernoulli();
        let report = verify_epistemic_optimality(&model, 1, &[10.0], LossKind::ZeroOne).unwrap();
        assert!(report.passed(1e-12));
        let post = posterior_update(&model, &[(0, 1)]).unwrap();
        assert!(!epistemic_reject_discrete(&model, &post, 0, 10.0, LossKind::ZeroOne).is_reject());
    }

    #[test]
    fn oversized_models_are_rejected() {
        let mut rng = RngStream::new(142, 0);
        let model = DiscreteModel::random(5, 5, 3, &mut rng);
        assert!(matches!(
            verify_epistemic_optimality(&model, 1, &[0.5], LossKind::ZeroOne),
            Err(RejectError::EnumerationTooLarge { .. })
        ));
        let small = DiscreteModel::random(2, 2, 2, &mut rng);
        assert!(matches!(
            verify_epistemic_optimality(&small, 3, &[0.5], LossKind::ZeroOne),
            Err(RejectError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_detects_a_biased_score() {
        // With the gate score shifted by -0.4 the rule accepts inputs whose
        // regret exceeds delta, and the oracle must notice.
        let mut worst: f64 = 0.0;
        for trial in 0..10 {
            let mut rng = RngStream::new(143, trial);
            let model = DiscreteModel::random(2, 3, 2, &mut rng);
            let report =
                verify_epistemic_optimality_biased(&model, 1, &delta_grid(), LossKind::ZeroOne, -0.4).unwrap();
            worst = worst.max(report.max_suboptimality);
        }
        assert!(worst > 1e-6, "bias went unnoticed: {worst}");
    }
}
