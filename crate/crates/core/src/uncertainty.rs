//! Total, aleatoric, and epistemic uncertainty for the three supported
//! losses, plus the generic Monte-Carlo and exact-enumeration estimators of
//! conditional regret.
//!
//! The decomposition T = A + E holds for every instance:
//!
//! * squared loss - T is the predictive variance, A = v(x), E = phi' Sigma phi;
//! * 0/1 loss - T = 1 - max_y p(y|x,D), E = E_theta[max_y p(y|x,theta)] - max_y p(y|x,D);
//! * cross-entropy - T is the predictive entropy, A the expected conditional
//!   entropy, E the expected KL from the conditionals to the predictive
//!   (all in nats).
//!
//! Epistemic uncertainty equals the conditional regret of the posterior
//! predictor against the best predictor that knows theta, which is what the
//! estimators at the bottom of this module compute without using any of the
//! closed forms above.

use crate::discrete::{predictive_pmf, DiscreteModel, DiscretePosterior};
use crate::gaussian::{predictive, GaussianPosterior};
use crate::loss::{self, Action, LossKind, Target};
use crate::rng::RngStream;

/// One uncertainty decomposition at a single input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyTriple {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
    pub loss: LossKind,
}

/// Squared-loss uncertainty of a Gaussian posterior at x.
pub fn squared_uncertainty(post: &GaussianPosterior, x: f64) -> UncertaintyTriple {
    let pred = predictive(post, x);
    UncertaintyTriple {
        total: pred.epistemic + pred.aleatoric,
        aleatoric: pred.aleatoric,
        epistemic: pred.epistemic,
        loss: LossKind::Squared,
    }
}

/// 0/1-loss uncertainty of a discrete posterior at input x.
pub fn zero_one_uncertainty(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
) -> UncertaintyTriple {
    let pmf = predictive_pmf(model, post, x);
    let max_pred = pmf[loss::argmax_lowest(&pmf)];
    let total = 1.0 - max_pred;
    let expected_max: f64 = post
        .weights()
        .iter()
        .enumerate()
        .map(|(t, w)| {
            let cond = model.conditional(t, x);
            w * cond[loss::argmax_lowest(cond)]
        })
        .sum();
    let epistemic = expected_max - max_pred;
    UncertaintyTriple {
        total,
        aleatoric: total - epistemic,
        epistemic,
        loss: LossKind::ZeroOne,
    }
}

/// Cross-entropy uncertainty of a discrete posterior at input x, in nats.
pub fn cross_entropy_uncertainty(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
) -> UncertaintyTriple {
    let pmf = predictive_pmf(model, post, x);
    let total = loss::entropy_nats(&pmf);
    let mut aleatoric = 0.0;
    let mut epistemic = 0.0;
    for (t, w) in post.weights().iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let cond = model.conditional(t, x);
        aleatoric += w * loss::entropy_nats(cond);
        let kl = loss::kl_divergence_nats(cond, &pmf);
        // A positive-weight conditional cannot put mass where the predictive
        // mixture has none.
        assert!(kl.is_finite(), "conditional escapes the predictive support");
        epistemic += w * kl;
    }
    UncertaintyTriple {
        total,
        aleatoric,
        epistemic,
        loss: LossKind::CrossEntropy,
    }
}

/// Monte-Carlo estimate of the conditional regret
/// E[(loss of base prediction) - (loss of the theta-aware Bayes prediction)]
/// over joint draws of (theta, y), with the standard error of the mean.
pub fn mc_conditional_regret<T>(
    mut sample_theta: impl FnMut(&mut RngStream) -> T,
    mut sample_y: impl FnMut(&T, &mut RngStream) -> Target,
    bayes_rule: impl Fn(&T) -> Action,
    base_prediction: &Action,
    loss_kind: LossKind,
    n: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    assert!(n >= 2, "need at least two draws for a standard error");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let theta = sample_theta(rng);
        let y = sample_y(&theta, rng);
        let term = loss::prediction_loss(loss_kind, &y, base_prediction)
            - loss::prediction_loss(loss_kind, &y, &bayes_rule(&theta));
        sum += term;
        sum_sq += term * term;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Exact conditional regret of a discrete posterior by full enumeration of
/// (theta, y). Deliberately computed from the loss table alone so it can serve
/// as an independent check of the closed forms above.
pub fn exact_conditional_regret(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    loss_kind: LossKind,
) -> f64 {
    assert!(
        matches!(loss_kind, LossKind::ZeroOne | LossKind::CrossEntropy),
        "enumeration applies to the discrete losses"
    );
    let base = discrete_base_prediction(model, post, x, loss_kind);
    let mut regret = 0.0;
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
            regret += w
                * py
                * (loss::prediction_loss(loss_kind, &target, &base)
                    - loss::prediction_loss(loss_kind, &target, &bayes));
        }
    }
    regret
}

/// The posterior predictor's action for a discrete loss: the argmax class for
/// 0/1, the full predictive distribution for cross-entropy.
pub fn discrete_base_prediction(
    model: &DiscreteModel,
    post: &DiscretePosterior,
    x: usize,
    loss_kind: LossKind,
) -> Action {
    let pmf = predictive_pmf(model, post, x);
    match loss_kind {
        LossKind::ZeroOne => Action::Class(loss::argmax_lowest(&pmf)),
        LossKind::CrossEntropy => Action::distribution(pmf),
        LossKind::Squared => panic!("squared loss has no discrete base prediction"),
    }
}

/// The theta-aware Bayes action for a discrete conditional pmf.
pub fn discrete_bayes_action(conditional: &[f64], loss_kind: LossKind) -> Action {
    match loss_kind {
        LossKind::ZeroOne => Action::Class(loss::argmax_lowest(conditional)),
        LossKind::CrossEntropy => Action::distribution(conditional.to_vec()),
        LossKind::Squared => panic!("squared loss has no discrete Bayes action"),
    }
}
