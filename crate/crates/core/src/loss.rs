//! Prediction losses shared by the uncertainty measures, the decision rules,
//! and the enumeration oracles.
//!
//! Entropic quantities use natural log throughout (nats); divide by ln 2 for
//! bits. Argmax ties break toward the lowest class index; this single helper
//! is the one source of truth for tie handling everywhere in the crate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    ZeroOne,
    CrossEntropy,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::Squared => write!(f, "squared"),
            LossKind::ZeroOne => write!(f, "zero_one"),
            LossKind::CrossEntropy => write!(f, "cross_entropy"),
        }
    }
}

/// A realized target value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Real(f64),
    Class(usize),
}

/// A prediction payload: a real value for squared loss, a class index for
/// 0/1 loss, a distribution over classes for cross-entropy loss.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Value(f64),
    Class(usize),
    Distribution(Vec<f64>),
}

impl Action {
    pub fn distribution(pmf: Vec<f64>) -> Action {
        let total: f64 = pmf.iter().sum();
        debug_assert!(
            (total - 1.0).abs() <= 1e-12 && pmf.iter().all(|p| *p >= 0.0),
            "class distribution must lie on the simplex, sums to {total}"
        );
        Action::Distribution(pmf)
    }
}

/// The loss ℓ(y, action) for the given loss kind.
///
/// Panics when the target or action payload does not match the loss kind;
/// that is a programming error, not a data condition.
pub fn prediction_loss(kind: LossKind, y: &Target, action: &Action) -> f64 {
    match (kind, y, action) {
        (LossKind::Squared, Target::Real(y), Action::Value(v)) => (y - v) * (y - v),
        (LossKind::ZeroOne, Target::Class(y), Action::Class(c)) => {
            if y == c {
                0.0
            } else {
                1.0
            }
        }
        (LossKind::CrossEntropy, Target::Class(y), Action::Distribution(p)) => {
            let py = p[*y];
            if py > 0.0 {
                -py.ln()
            } else {
                f64::INFINITY
            }
        }
        _ => panic!("loss kind {kind} does not match target {y:?} / action {action:?}"),
    }
}

/// First index attaining the maximum value.
pub fn argmax_lowest(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of an empty slice");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy of a discrete distribution in nats, with 0·ln 0 = 0.
pub fn entropy_nats(pmf: &[f64]) -> f64 {
    pmf.iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// KL divergence D(p ‖ q) in nats. Terms with p = 0 contribute nothing;
/// p > 0 with q = 0 yields +inf.
pub fn kl_divergence_nats(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "KL over mismatched supports");
    let mut acc = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if *pi > 0.0 {
            if *qi > 0.0 {
                acc += pi * (pi / qi).ln();
            } else {
                return f64::INFINITY;
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_loss() {
        let y = Target::Real(5.0);
        assert_eq!(prediction_loss(LossKind::Squared, &y, &Action::Value(2.0)), 9.0);
        assert_eq!(prediction_loss(LossKind::Squared, &y, &Action::Value(5.0)), 0.0);
    }

    #[test]
    fn zero_one_loss() {
        let y = Target::Class(1);
        assert_eq!(prediction_loss(LossKind::ZeroOne, &y, &Action::Class(1)), 0.0);
        assert_eq!(prediction_loss(LossKind::ZeroOne, &y, &Action::Class(0)), 1.0);
    }

    #[test]
    fn cross_entropy_loss() {
        let y = Target::Class(0);
        let p = Action::distribution(vec![0.25, 0.75]);
        assert!((prediction_loss(LossKind::CrossEntropy, &y, &p) - 0.25_f64.ln().abs()).abs() < 1e-15);
        let degenerate = Action::Distribution(vec![0.0, 1.0]);
        assert_eq!(
            prediction_loss(LossKind::CrossEntropy, &y, &degenerate),
            f64::INFINITY
        );
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest(&[0.5, 0.5]), 0);
        assert_eq!(argmax_lowest(&[0.1, 0.6, 0.6, 0.3]), 1);
        assert_eq!(argmax_lowest(&[1.0]), 0);
    }

    #[test]
    fn entropy_and_kl() {
        assert_eq!(entropy_nats(&[1.0, 0.0]), 0.0);
        assert!((entropy_nats(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(kl_divergence_nats(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        let kl = kl_divergence_nats(&[0.9, 0.1], &[0.5, 0.5]);
        let expected = 0.9 * (1.8_f64).ln() + 0.1 * (0.2_f64).ln();
        assert!((kl - expected).abs() < 1e-15);
        assert_eq!(kl_divergence_nats(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }
}
