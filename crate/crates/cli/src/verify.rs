//! The runtime oracle suite behind `reject-gate verify`.
//!
//! Each check recomputes a closed-form quantity along an independent route
//! (exhaustive enumeration or Monte Carlo) and reports the worst deviation
//! observed. The suite is fully seeded, so a clean build passes identically
//! on every run.

use reject_gate_core::discrete::{posterior_update, DiscreteModel};
use reject_gate_core::eval::ExperimentConfig;
use reject_gate_core::gaussian::{feature_vector, fit_posterior, GaussianPrior};
use reject_gate_core::loss::{Action, LossKind, Target};
use reject_gate_core::numerics::{cholesky_lower, quadratic_form};
use reject_gate_core::reject::verify_epistemic_optimality_biased;
use reject_gate_core::rng::RngStream;
use reject_gate_core::synthetic::{sample_dataset, sample_true_process};
use reject_gate_core::uncertainty::{
    cross_entropy_uncertainty, discrete_base_prediction, discrete_bayes_action,
    exact_conditional_regret, mc_conditional_regret, squared_uncertainty, zero_one_uncertainty,
};

const VERIFY_SEED: u64 = 0x7265_6a65_6374;

#[derive(Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn tolerance_check(name: &'static str, max_deviation: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            max_deviation,
            tolerance,
            passed: max_deviation <= tolerance,
            detail,
        }
    }
}

/// Runs every check. `epistemic_bias` perturbs the epistemic score inside
/// the theorem-1 check only; it exists so the gate can demonstrate that it
/// notices a broken formula (see the `REJECT_GATE_PERTURB_E` hook).
pub fn run_all(epistemic_bias: f64) -> Vec<CheckResult> {
    vec![
        decomposition_check(),
        formula_vs_enumeration_check(),
        theorem1_check(epistemic_bias),
        mc_vs_closed_form_check(),
    ]
}

fn random_discrete_posteriors(
    seed_stream: u64,
    count: usize,
) -> impl Iterator<Item = (DiscreteModel, reject_gate_core::discrete::DiscretePosterior)> {
    (0..count).map(move |i| {
        let mut rng = RngStream::new(VERIFY_SEED, seed_stream + i as u64);
        let params = 2 + (rng.uniform() * 3.0) as usize;
        let inputs = 1 + (rng.uniform() * 2.0) as usize;
        let classes = 2 + (rng.uniform() * 2.0) as usize;
        let model = DiscreteModel::random(params, inputs, classes, &mut rng);
        let n_obs = (rng.uniform() * 4.0) as usize;
        let data: Vec<(usize, usize)> = (0..n_obs)
            .map(|_| {
                (
                    (rng.uniform() * inputs as f64) as usize,
                    (rng.uniform() * classes as f64) as usize,
                )
            })
            .collect();
        let post = posterior_update(&model, &data).expect("positive-density tables");
        (model, post)
    })
}

/// |T - A - E| over random Gaussian posteriors (tol 1e-9) and random
/// discrete instances under 0/1 and CE (tol 1e-12).
fn decomposition_check() -> CheckResult {
    let mut rng = RngStream::new(VERIFY_SEED, 1);
    let prior = GaussianPrior::zero_mean(vec![1.0, 0.1, 0.1, 0.1]).unwrap();
    let noise = reject_gate_core::synthetic::NoiseSpec::default();
    let mut gaussian_dev: f64 = 0.0;
    for _ in 0..100 {
        let process = sample_true_process(&prior, 3, noise, &mut rng).unwrap();
        let m = (rng.uniform() * 30.0) as usize;
        let data = sample_dataset(&process, m, &mut rng);
        let post = fit_posterior(&data, &prior, 3, &noise).unwrap();
        let x = 2.0 * rng.standard_normal();
        let t = squared_uncertainty(&post, x);
        gaussian_dev = gaussian_dev.max((t.total - t.aleatoric - t.epistemic).abs());
    }
    let mut discrete_dev: f64 = 0.0;
    for (model, post) in random_discrete_posteriors(100, 500) {
        for x in 0..model.num_inputs() {
            let zo = zero_one_uncertainty(&model, &post, x);
            let ce = cross_entropy_uncertainty(&model, &post, x);
            discrete_dev = discrete_dev
                .max((zo.total - zo.aleatoric - zo.epistemic).abs())
                .max((ce.total - ce.aleatoric - ce.epistemic).abs());
        }
    }
    let passed = gaussian_dev <= 1e-9 && discrete_dev <= 1e-12;
    CheckResult {
        name: "decomposition",
        max_deviation: gaussian_dev.max(discrete_dev),
        tolerance: 1e-9,
        passed,
        detail: format!(
            "gaussian max {gaussian_dev:.3e} (tol 1e-9), discrete max {discrete_dev:.3e} (tol 1e-12)"
        ),
    }
}

/// Closed-form epistemic uncertainty against the exact enumeration of the
/// conditional regret, 0/1 and CE, 500 random instances.
fn formula_vs_enumeration_check() -> CheckResult {
    let mut dev: f64 = 0.0;
    for (model, post) in random_discrete_posteriors(1000, 500) {
        for x in 0..model.num_inputs() {
            let zo = zero_one_uncertainty(&model, &post, x).epistemic;
            let ce = cross_entropy_uncertainty(&model, &post, x).epistemic;
            dev = dev
                .max((zo - exact_conditional_regret(&model, &post, x, LossKind::ZeroOne)).abs())
                .max((ce - exact_conditional_regret(&model, &post, x, LossKind::CrossEntropy)).abs());
        }
    }
    CheckResult::tolerance_check(
        "formula_vs_enumeration",
        dev,
        1e-12,
        "0/1 and CE closed forms vs exact (theta, y) sums on 500 models".into(),
    )
}

/// Pointwise optimality of the epistemic rule on 20 random small models,
/// both discrete losses, 21-point delta grid.
fn theorem1_check(epistemic_bias: f64) -> CheckResult {
    let delta_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let mut dev: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..20 {
        let mut rng = RngStream::new(VERIFY_SEED, 2000 + i);
        let model = DiscreteModel::random(2, 3, 2, &mut rng);
        for kind in [LossKind::ZeroOne, LossKind::CrossEntropy] {
            let report = verify_epistemic_optimality_biased(&model, 1, &delta_grid, kind, epistemic_bias)
                .expect("small models enumerate");
            dev = dev.max(report.max_suboptimality);
            pairs += report.pairs_checked;
        }
    }
    CheckResult {
        name: "theorem1",
        max_deviation: dev,
        tolerance: 1e-12,
        passed: dev <= 1e-12,
        detail: format!("{pairs} reachable (x, D) pairs, 21 deltas, 0/1 + CE"),
    }
}

/// Monte-Carlo conditional regret against the closed forms: 20 Gaussian
/// cases and 5 discrete 0/1 cases at n = 200000, each within 3 standard
/// errors (one Gaussian miss tolerated).
fn mc_vs_closed_form_check() -> CheckResult {
    let prior = GaussianPrior::zero_mean(vec![1.0, 0.1, 0.1, 0.1]).unwrap();
    let noise = reject_gate_core::synthetic::NoiseSpec::default();
    let mut gaussian_hits = 0;
    let mut worst_sigma: f64 = 0.0;
    for i in 0..20 {
        let mut rng = RngStream::new(VERIFY_SEED, 3000 + i);
        let process = sample_true_process(&prior, 3, noise, &mut rng).unwrap();
        let data = sample_dataset(&process, 5 + (i % 20) as usize, &mut rng);
        let post = fit_posterior(&data, &prior, 3, &noise).unwrap();
        let x = 1.5 * rng.standard_normal();
        let phi = feature_vector(x, post.degree());
        let closed_form = quadratic_form(post.covariance(), &phi).unwrap();
        let chol = cholesky_lower(post.covariance()).unwrap();
        let base = Action::Value(phi.dot(post.mean()));
        let vx = noise.variance(x);
        let (est, se) = mc_conditional_regret(
            |r| post.sample_with_factor(&chol, r),
            |theta, r| Target::Real(phi.dot(theta) + vx.sqrt() * r.standard_normal()),
            |theta| Action::Value(phi.dot(theta)),
            &base,
            LossKind::Squared,
            200_000,
            &mut rng,
        );
        let sigmas = (est - closed_form).abs() / se.max(1e-300);
        worst_sigma = worst_sigma.max(sigmas);
        if sigmas <= 3.0 {
            gaussian_hits += 1;
        }
    }
    let mut discrete_hits = 0;
    for i in 0..5 {
        let mut rng = RngStream::new(VERIFY_SEED, 4000 + i);
        let model = DiscreteModel::random(3, 1, 3, &mut rng);
        let post = posterior_update(&model, &[(0, 0)]).unwrap();
        let closed_form = zero_one_uncertainty(&model, &post, 0).epistemic;
        let base = discrete_base_prediction(&model, &post, 0, LossKind::ZeroOne);
        let (est, se) = mc_conditional_regret(
            |r| r.categorical(post.weights()),
            |theta, r| Target::Class(r.categorical(model.conditional(*theta, 0))),
            |theta| discrete_bayes_action(model.conditional(*theta, 0), LossKind::ZeroOne),
            &base,
            LossKind::ZeroOne,
            200_000,
            &mut rng,
        );
        if (est - closed_form).abs() <= 3.0 * se.max(1e-300) {
            discrete_hits += 1;
        }
    }
    CheckResult {
        name: "mc_vs_closed_form",
        max_deviation: worst_sigma,
        tolerance: 3.0,
        passed: gaussian_hits >= 19 && discrete_hits >= 4,
        detail: format!(
            "gaussian {gaussian_hits}/20 within 3 sigma (worst {worst_sigma:.2} sigma), discrete {discrete_hits}/5"
        ),
    }
}

/// Runs a throwaway desk-scale sanity pass used by `verify` to confirm the
/// experiment plumbing stays deterministic.
pub fn determinism_spot_check() -> bool {
    let config = ExperimentConfig {
        trials: 4,
        m_values: vec![5],
        n_test: 64,
        ..ExperimentConfig::desk_default()
    };
    let a = reject_gate_core::eval::run_trials(&config, 5, 0, 1);
    let b = reject_gate_core::eval::run_trials(&config, 5, 0, 3);
    let flat = |v: Vec<Result<reject_gate_core::eval::TrialResult, _>>| -> Vec<_> {
        v.into_iter().map(|r| r.unwrap()).collect::<Vec<_>>()
    };
    flat(a) == flat(b)
}
