//! Generative processes for the regression experiments: polynomial ground
//! truth with heteroscedastic Gaussian observation noise.
//!
//! Polynomial coefficients are kept in ascending-degree order everywhere:
//! `[intercept, x, x^2, ...]`. Inputs are always drawn from N(0, 1); the
//! noise law is known to every learner and passed around explicitly, never
//! estimated.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::gaussian::{GaussianPrior, ModelError};
use crate::numerics::Vector;
use crate::rng::RngStream;

/// Input-dependent observation variance v(x) = a + b·(x + c)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NoiseSpec {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a > 0.0, "noise floor must be strictly positive");
        assert!(b >= 0.0, "quadratic noise coefficient must be nonnegative");
        Self { a, b, c }
    }

    /// v(x) = a + b·(x + c)².
    pub fn variance(&self, x: f64) -> f64 {
        self.a + self.b * (x + self.c) * (x + self.c)
    }
}

impl Default for NoiseSpec {
    /// The running example's noise law: v(x) = 0.1 + 0.04·(x + 8)².
    fn default() -> Self {
        Self {
            a: 0.1,
            b: 0.04,
            c: 8.0,
        }
    }
}

/// Input-dependent observation variance.
pub fn noise_variance(spec: &NoiseSpec, x: f64) -> f64 {
    spec.variance(x)
}

/// A fully known data-generating process: polynomial mean, heteroscedastic
/// Gaussian noise, standard normal inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueProcess {
    theta_star: Vector,
    degree: usize,
    noise: NoiseSpec,
}

impl TrueProcess {
    pub fn new(theta_star: Vector, noise: NoiseSpec) -> Self {
        assert!(!theta_star.is_empty(), "process needs at least an intercept");
        let degree = theta_star.len() - 1;
        Self {
            theta_star,
            degree,
            noise,
        }
    }

    pub fn theta_star(&self) -> &Vector {
        &self.theta_star
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// True mean f(x; θ*) via Horner evaluation of the ascending coefficients.
    pub fn eval(&self, x: f64) -> f64 {
        let c = self.theta_star.as_slice();
        let mut acc = c[c.len() - 1];
        for k in (0..c.len() - 1).rev() {
            acc = acc * x + c[k];
        }
        acc
    }
}

/// A sequence of (x, y) observations in draw order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pairs: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn new(pairs: Vec<(f64, f64)>) -> Self {
        assert!(
            pairs.iter().all(|(x, y)| x.is_finite() && y.is_finite()),
            "dataset values must be finite"
        );
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, (f64, f64)> {
        self.pairs.iter()
    }

    /// First `m` observations, in draw order.
    pub fn prefix(&self, m: usize) -> Dataset {
        Dataset {
            pairs: self.pairs[..m.min(self.pairs.len())].to_vec(),
        }
    }

    /// CSV dump with an `x,y` header, '.' decimals and '\n' line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in &self.pairs {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    /// Parses the `to_csv` format back.
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some("x,y") => {}
            other => return Err(format!("expected `x,y` header, got {other:?}")),
        }
        let mut pairs = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (xs, ys) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: missing comma", i + 2))?;
            let x: f64 = xs.parse().map_err(|e| format!("line {}: {e}", i + 2))?;
            let y: f64 = ys.parse().map_err(|e| format!("line {}: {e}", i + 2))?;
            pairs.push((x, y));
        }
        Ok(Dataset::new(pairs))
    }
}

/// Draws true coefficients from a diagonal Gaussian prior.
pub fn sample_true_process(
    prior: &GaussianPrior,
    degree: usize,
    noise: NoiseSpec,
    rng: &mut RngStream,
) -> Result<TrueProcess, ModelError> {
    if prior.dim() != degree + 1 {
        return Err(ModelError::DimensionMismatch {
            context: format!(
                "prior dimension {} does not match degree {} (+1)",
                prior.dim(),
                degree
            ),
        });
    }
    let theta: Vec<f64> = prior
        .mean()
        .iter()
        .zip(prior.variances())
        .map(|(m, v)| m + v.sqrt() * rng.standard_normal())
        .collect();
    Ok(TrueProcess::new(
        Vector::new(theta).expect("finite draws"),
        noise,
    ))
}

/// Draws `m` i.i.d. observations: x ~ N(0,1), y ~ N(f(x; θ*), v(x)).
pub fn sample_dataset(process: &TrueProcess, m: usize, rng: &mut RngStream) -> Dataset {
    let mut pairs = Vec::with_capacity(m);
    for _ in 0..m {
        let x = rng.standard_normal();
        let y = process.eval(x) + process.noise().variance(x).sqrt() * rng.standard_normal();
        pairs.push((x, y));
    }
    Dataset::new(pairs)
}

/// The running example: mean 0.5x + 1 with the default noise law.
pub fn example1_process() -> TrueProcess {
    TrueProcess::new(
        Vector::new(vec![1.0, 0.5]).unwrap(),
        NoiseSpec::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noise_variance_examples() {
        let spec = NoiseSpec::default();
        assert_abs_diff_eq!(spec.variance(-8.0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.variance(0.0), 2.66, epsilon = 1e-12);
        let flat = NoiseSpec::new(1.0, 0.0, 0.0);
        for x in [-5.0, 0.0, 17.3] {
            assert_eq!(flat.variance(x), 1.0);
        }
    }

    #[test]
    fn noise_variance_strictly_positive() {
        let spec = NoiseSpec::default();
        let mut x = -100.0;
        while x <= 100.0 {
            assert!(spec.variance(x) > 0.0);
            x += 0.25;
        }
    }

    #[test]
    fn example1_evaluations() {
        let p = example1_process();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(2.0), 2.0);
        assert_eq!(p.eval(-2.0), 0.0);
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn degenerate_prior_returns_mean() {
        let prior = GaussianPrior::new(
            Vector::new(vec![2.0, -1.0]).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap();
        let mut rng = RngStream::new(3, 0);
        let p = sample_true_process(&prior, 1, NoiseSpec::default(), &mut rng).unwrap();
        assert_eq!(p.theta_star().as_slice(), &[2.0, -1.0]);
    }

    #[test]
    fn prior_dimension_checked() {
        let prior = GaussianPrior::zero_mean(vec![1.0, 0.1]).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert!(sample_true_process(&prior, 3, NoiseSpec::default(), &mut rng).is_err());
    }

    #[test]
    fn process_sampler_matches_prior_variances() {
        let prior = GaussianPrior::zero_mean(vec![1.0, 0.1, 0.1, 0.1]).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 10_000;
        let mut sums = [0.0_f64; 4];
        let mut sq = [0.0_f64; 4];
        for _ in 0..n {
            let p = sample_true_process(&prior, 3, NoiseSpec::default(), &mut rng).unwrap();
            for (k, &t) in p.theta_star().iter().enumerate() {
                sums[k] += t;
                sq[k] += t * t;
            }
        }
        for (k, want) in [1.0, 0.1, 0.1, 0.1].iter().enumerate() {
            let mean = sums[k] / n as f64;
            let var = sq[k] / n as f64 - mean * mean;
            assert!(
                (var - want).abs() < 0.05 * want,
                "coordinate {k}: variance {var} vs {want}"
            );
        }
    }

    #[test]
    fn empty_dataset() {
        let mut rng = RngStream::new(4, 0);
        let data = sample_dataset(&example1_process(), 0, &mut rng);
        assert!(data.is_empty());
    }

    #[test]
    fn dataset_reproducible_for_fixed_seed() {
        let mut a = RngStream::new(21, 9);
        let mut b = RngStream::new(21, 9);
        let p = example1_process();
        assert_eq!(sample_dataset(&p, 5, &mut a), sample_dataset(&p, 5, &mut b));
    }

    #[test]
    fn near_noiseless_data_recovers_line() {
        let p = TrueProcess::new(
            Vector::new(vec![1.0, 0.5]).unwrap(),
            NoiseSpec::new(1e-12, 0.0, 0.0),
        );
        let mut rng = RngStream::new(8, 0);
        let data = sample_dataset(&p, 2_000, &mut rng);
        // Plain least squares on the (x, y) pairs.
        let n = data.len() as f64;
        let sx: f64 = data.iter().map(|(x, _)| x).sum();
        let sy: f64 = data.iter().map(|(_, y)| y).sum();
        let sxx: f64 = data.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = data.iter().map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        assert!((slope - 0.5).abs() < 1e-3);
        assert!((intercept - 1.0).abs() < 1e-3);
    }

    #[test]
    fn conditional_moments_at_fixed_x() {
        // Residuals y - f(x) at fixed x should be centered with variance v(x).
        let p = example1_process();
        let x = 1.5;
        let v = p.noise().variance(x);
        let mut rng = RngStream::new(9, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let y = p.eval(x) + v.sqrt() * rng.standard_normal();
            let r = y - p.eval(x);
            sum += r;
            sq += r * r;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let sigma = v.sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!((var - v).abs() < 0.05 * v, "variance {var} vs {v}");
    }

    #[test]
    fn disjoint_streams_agree_in_distribution() {
        let p = example1_process();
        let n = 50_000;
        let batch = |stream: u64| {
            let mut rng = RngStream::new(33, stream);
            let data = sample_dataset(&p, n, &mut rng);
            let mean: f64 = data.iter().map(|(_, y)| y).sum::<f64>() / n as f64;
            let var: f64 = data
                .iter()
                .map(|(_, y)| (y - mean) * (y - mean))
                .sum::<f64>()
                / (n - 1) as f64;
            (mean, var)
        };
        let (m1, v1) = batch(100);
        let (m2, v2) = batch(200);
        let se = ((v1 + v2) / n as f64).sqrt();
        assert!(
            (m1 - m2).abs() < 4.0 * se,
            "two-sample gap {} vs 4se {}",
            (m1 - m2).abs(),
            4.0 * se
        );
    }

    #[test]
    fn csv_round_trip() {
        let data = Dataset::new(vec![(0.125, -3.5), (2.0, 0.7500000000000003)]);
        let csv = data.to_csv();
        assert!(csv.starts_with("x,y\n"));
        assert_eq!(Dataset::from_csv(&csv).unwrap(), data);
    }
}
