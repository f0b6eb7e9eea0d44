//! Regret-coverage curves, AuReC, and the seeded Monte-Carlo trial harness.
//!
//! A trial samples a ground-truth cubic (by default) from the experiment
//! prior, fits the ML estimate and the exact posterior on `m` observations,
//! and scores four rejection strategies on a fresh batch of test inputs:
//!
//! * `plug_in` - ML predictions ranked by the known noise level v(x);
//! * `bayesian` - posterior-mean predictions ranked by total uncertainty;
//! * `epistemic` - posterior-mean predictions ranked by conditional regret;
//! * `aleatoric_oracle` - posterior-mean predictions ranked by v(x).
//!
//! Each strategy yields a regret-coverage curve (mean squared regret of the
//! k lowest-score points against coverage k/n) whose area is its AuReC.
//! Trials are pure functions of (config, m, seed, trial index), so the
//! harness returns identical bytes for any worker count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{
    fit_ml, fit_posterior, ml_predict, predictive, GaussianPosterior, GaussianPrior, MlEstimate,
    ModelError,
};
use crate::rng::RngStream;
use crate::synthetic::{example1_process, sample_dataset, sample_true_process, NoiseSpec, TrueProcess};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot build a curve from an empty score list")]
    EmptyInput,
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The four rejection strategies compared by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PlugIn,
    Bayesian,
    Epistemic,
    AleatoricOracle,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PlugIn,
        Method::Bayesian,
        Method::Epistemic,
        Method::AleatoricOracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PlugIn => "plug_in",
            Method::Bayesian => "bayesian",
            Method::Epistemic => "epistemic",
            Method::AleatoricOracle => "aleatoric_oracle",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A monotone-coverage regret curve with its trapezoidal area.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCoverageCurve {
    /// (coverage, mean regret on covered points), coverage strictly
    /// increasing from 0 to 1; the empty prefix contributes regret 0.
    pub points: Vec<(f64, f64)>,
    pub aurec: f64,
}

/// Builds the regret-coverage curve from (uncertainty score, regret) pairs.
///
/// Points are accepted in ascending score order (ties by original index);
/// the curve sweeps every top-k prefix rather than a threshold grid, so it
/// is exact.
pub fn build_curve(scores: &[(f64, f64)]) -> Result<RegretCoverageCurve, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    assert!(
        scores.iter().all(|(s, r)| s.is_finite() && r.is_finite()),
        "scores and regrets must be finite"
    );
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| scores[*a].0.partial_cmp(&scores[*b].0).unwrap());

    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut regret_sum = 0.0;
    for (k, idx) in order.iter().enumerate() {
        regret_sum += scores[*idx].1;
        points.push(((k + 1) as f64 / n as f64, regret_sum / (k + 1) as f64));
    }

    let mut aurec = 0.0;
    for pair in points.windows(2) {
        let (c0, r0) = pair[0];
        let (c1, r1) = pair[1];
        aurec += (c1 - c0) * (r0 + r1) * 0.5;
    }
    Ok(RegretCoverageCurve { points, aurec })
}

/// Anything that maps an input to a point prediction of y.
pub trait PointPredictor {
    fn predict(&self, x: f64) -> f64;
}

impl PointPredictor for MlEstimate {
    fn predict(&self, x: f64) -> f64 {
        ml_predict(self, x).0
    }
}

impl PointPredictor for GaussianPosterior {
    fn predict(&self, x: f64) -> f64 {
        predictive(self, x).mean
    }
}

impl PointPredictor for TrueProcess {
    fn predict(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

/// Exact expected squared-loss regret of a prediction at x: the y-noise
/// cancels, leaving (prediction - f(x; theta*))^2.
pub fn per_point_regret(predictor: &impl PointPredictor, process: &TrueProcess, x: f64) -> f64 {
    let gap = predictor.predict(x) - process.eval(x);
    gap * gap
}

/// Experiment parameters; see [`ExperimentConfig::desk_default`] for the
/// stock configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub m_values: Vec<usize>,
    pub degree: usize,
    pub prior_variances: Vec<f64>,
    pub noise: NoiseSpec,
    pub n_test: usize,
    pub out_dir: String,
}

impl ExperimentConfig {
    /// Desk-scale defaults: 300 trials over m in {5, 10, 20, 50, 100, 200},
    /// cubic truth with intercept variance 1 and 0.1 for the other
    /// coefficients, 1000 test inputs per trial.
    pub fn desk_default() -> Self {
        Self {
            master_seed: 12345,
            trials: 300,
            m_values: vec![5, 10, 20, 50, 100, 200],
            degree: 3,
            prior_variances: vec![1.0, 0.1, 0.1, 0.1],
            noise: NoiseSpec::default(),
            n_test: 1000,
            out_dir: "out".into(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let fail = |field: &str, reason: String| {
            Err(EvalError::InvalidConfig {
                field: field.into(),
                reason,
            })
        };
        if self.trials < 1 {
            return fail("trials", "must be at least 1".into());
        }
        if self.m_values.is_empty() {
            return fail("m_values", "must list at least one dataset size".into());
        }
        if self.prior_variances.len() != self.degree + 1 {
            return fail(
                "prior_variances",
                format!(
                    "expected {} entries for degree {}, got {}",
                    self.degree + 1,
                    self.degree,
                    self.prior_variances.len()
                ),
            );
        }
        if !self.prior_variances.iter().all(|v| v.is_finite() && *v > 0.0) {
            return fail("prior_variances", "entries must be positive".into());
        }
        if !(self.noise.a.is_finite() && self.noise.a > 0.0) {
            return fail("noise_a", "must be positive".into());
        }
        if !(self.noise.b.is_finite() && self.noise.b >= 0.0) {
            return fail("noise_b", "must be nonnegative".into());
        }
        if !self.noise.c.is_finite() {
            return fail("noise_c", "must be finite".into());
        }
        if self.n_test < 1 {
            return fail("n_test", "must be at least 1".into());
        }
        Ok(())
    }

    fn prior(&self) -> Result<GaussianPrior, EvalError> {
        Ok(GaussianPrior::zero_mean(self.prior_variances.clone())?)
    }
}

/// AuReC of each method on one trial. `plug_in` is absent when the ML fit
/// was singular (m below the basis dimension, or a degenerate draw).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub m: usize,
    pub seed: u64,
    pub aurec: BTreeMap<Method, f64>,
}

/// Runs one seeded trial: sample truth, fit, score the four strategies.
///
/// The trial consumes exactly one [`RngStream`] keyed by (seed, trial_index),
/// so the result is bitwise reproducible regardless of scheduling.
pub fn run_trial(
    config: &ExperimentConfig,
    m: usize,
    seed: u64,
    trial_index: u64,
) -> Result<TrialResult, EvalError> {
    let mut rng = RngStream::new(seed, trial_index);
    let prior = config.prior()?;
    let process = sample_true_process(&prior, config.degree, config.noise, &mut rng)?;
    let data = sample_dataset(&process, m, &mut rng);
    let test_xs = rng.standard_normal_vec(config.n_test);

    let post = fit_posterior(&data, &prior, config.degree, &config.noise)?;
    let ml = fit_ml(&data, config.degree, &config.noise).ok();

    let n = test_xs.len();
    let mut bayesian = Vec::with_capacity(n);
    let mut epistemic = Vec::with_capacity(n);
    let mut aleatoric = Vec::with_capacity(n);
    let mut plug_in = ml.as_ref().map(|_| Vec::with_capacity(n));

    for &x in test_xs.iter() {
        let pred = predictive(&post, x);
        let truth = process.eval(x);
        let hb_regret = (pred.mean - truth) * (pred.mean - truth);
        bayesian.push((pred.variance, hb_regret));
        epistemic.push((pred.epistemic, hb_regret));
        aleatoric.push((pred.aleatoric, hb_regret));
        if let (Some(scores), Some(est)) = (plug_in.as_mut(), ml.as_ref()) {
            let (p, risk) = ml_predict(est, x);
            scores.push((risk, (p - truth) * (p - truth)));
        }
    }

    let mut aurec = BTreeMap::new();
    aurec.insert(Method::Bayesian, build_curve(&bayesian)?.aurec);
    aurec.insert(Method::Epistemic, build_curve(&epistemic)?.aurec);
    aurec.insert(Method::AleatoricOracle, build_curve(&aleatoric)?.aurec);
    if let Some(scores) = plug_in {
        aurec.insert(Method::PlugIn, build_curve(&scores)?.aurec);
    }
    Ok(TrialResult { m, seed, aurec })
}

/// All trials for one dataset size, fanned out over `workers` threads.
///
/// Trial `t` always computes on stream `m_index * trials + t`, and results
/// are merged back in trial order, so the output is identical for any
/// worker count.
pub fn run_trials(
    config: &ExperimentConfig,
    m: usize,
    m_index: usize,
    workers: usize,
) -> Vec<Result<TrialResult, EvalError>> {
    let workers = workers.max(1).min(config.trials.max(1));
    let base = (m_index * config.trials) as u64;
    let mut merged: Vec<Option<Result<TrialResult, EvalError>>> =
        (0..config.trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for worker in 0..workers {
            let handle = scope.spawn(move || {
                let mut out: Vec<(usize, Result<TrialResult, EvalError>)> = Vec::new();
                let mut t = worker;
                while t < config.trials {
                    let result = run_trial(config, m, config.master_seed, base + t as u64);
                    out.push((t, result));
                    t += workers;
                }
                out
            });
            handles.push(handle);
        }
        for handle in handles {
            for (t, result) in handle.join().expect("trial worker panicked") {
                merged[t] = Some(result);
            }
        }
    });
    merged.into_iter().map(|r| r.expect("all trials ran")).collect()
}

/// One aggregated line of the experiment table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub m: usize,
    pub method: Method,
    pub mean_aurec: f64,
    /// 40th percentile across trials (lower edge of the central 20% band).
    pub q40: f64,
    /// 60th percentile across trials.
    pub q60: f64,
    /// Trials that contributed a value for this method.
    pub trials: usize,
    /// Standard error of the mean across those trials.
    pub stderr: f64,
}

/// A failed trial, recorded without aborting the sweep.
#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub m: usize,
    pub trial_index: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub failures: Vec<TrialFailure>,
}

/// Linear-interpolation percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Sweeps every configured dataset size, aggregating per-method means and
/// the central 20% band. Per-trial failures are recorded, never fatal.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentTable, EvalError> {
    config.validate()?;
    let mut table = ExperimentTable::default();
    for (m_index, &m) in config.m_values.iter().enumerate() {
        let results = run_trials(config, m, m_index, workers);
        let mut per_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
        for (t, result) in results.into_iter().enumerate() {
            match result {
                Ok(trial) => {
                    for (method, value) in trial.aurec {
                        per_method.entry(method).or_default().push(value);
                    }
                }
                Err(e) => table.failures.push(TrialFailure {
                    m,
                    trial_index: (m_index * config.trials + t) as u64,
                    message: e.to_string(),
                }),
            }
        }
        for method in Method::ALL {
            let Some(values) = per_method.get(&method) else {
                continue;
            };
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            table.rows.push(ExperimentRow {
                m,
                method,
                mean_aurec: mean,
                q40: percentile(&sorted, 0.40),
                q60: percentile(&sorted, 0.60),
                trials: n,
                stderr,
            });
        }
    }
    Ok(table)
}

/// Which demo table to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Known-truth rule on the running example, epsilon = 1.
    Fig1,
    /// Total-uncertainty rule on a 10-point posterior, epsilon = 2.
    Fig2a,
    /// Conditional-regret rule on the same posterior, delta = 1.
    Fig2b,
}

impl FigureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FigureKind::Fig1 => "fig1",
            FigureKind::Fig2a => "fig2a",
            FigureKind::Fig2b => "fig2b",
        }
    }
}

/// One row of a figure demo table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    pub x: f64,
    pub prediction: f64,
    pub uncertainty: f64,
    pub threshold: f64,
    pub accepted: bool,
}

/// Demo grid: x in [-15, 5] in steps of 0.01.
pub const FIGURE_GRID_STEP: f64 = 0.01;

fn figure_grid() -> impl Iterator<Item = f64> {
    (0..=2000).map(|i| -15.0 + FIGURE_GRID_STEP * i as f64)
}

/// Tabulates prediction, uncertainty score, threshold, and the accept flag
/// over the demo grid. Fig2a/Fig2b fit the running example's linear model on
/// the same ten seeded observations.
pub fn figure_demo_data(which: FigureKind, seed: u64) -> Result<Vec<FigureRow>, EvalError> {
    let process = example1_process();
    match which {
        FigureKind::Fig1 => {
            let threshold = 1.0;
            Ok(figure_grid()
                .map(|x| {
                    let uncertainty = process.noise().variance(x);
                    FigureRow {
                        x,
                        prediction: process.eval(x),
                        uncertainty,
                        threshold,
                        accepted: uncertainty <= threshold,
                    }
                })
                .collect())
        }
        FigureKind::Fig2a | FigureKind::Fig2b => {
            let mut rng = RngStream::new(seed, 0);
            let data = sample_dataset(&process, 10, &mut rng);
            let prior = GaussianPrior::zero_mean(vec![1.0, 1.0])?;
            let post = fit_posterior(&data, &prior, 1, process.noise())?;
            let threshold = if which == FigureKind::Fig2a { 2.0 } else { 1.0 };
            Ok(figure_grid()
                .map(|x| {
                    let pred = predictive(&post, x);
                    let uncertainty = if which == FigureKind::Fig2a {
                        pred.variance
                    } else {
                        pred.epistemic
                    };
                    FigureRow {
                        x,
                        prediction: pred.mean,
                        uncertainty,
                        threshold,
                        accepted: uncertainty <= threshold,
                    }
                })
                .collect())
        }
    }
}
