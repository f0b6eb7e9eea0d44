//! Deterministic random streams.
//!
//! Every worker or Monte-Carlo trial owns its own [`RngStream`], keyed by a
//! master seed plus a stream index. Identical keys reproduce the identical
//! sample sequence on every platform and regardless of what other streams do,
//! which is what makes the experiment harness byte-stable across worker
//! counts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::Vector;

/// A single-owner deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    /// Stream `stream_index` of the generator family keyed by `master_seed`.
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            rng,
            master_seed,
            stream_index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `n` i.i.d. standard normal draws.
    pub fn standard_normal_vec(&mut self, n: usize) -> Vector {
        let draws: Vec<f64> = (0..n).map(|_| self.standard_normal()).collect();
        Vector::new(draws).expect("normal draws are finite")
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Index draw from the categorical distribution given by `weights`
    /// (nonnegative, summing to ~1). Falls back to the last index when
    /// rounding leaves a sliver of unassigned mass.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        assert!(!weights.is_empty(), "categorical needs at least one weight");
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }
}

/// `n` i.i.d. standard normal draws from the given stream.
pub fn sample_standard_normal(rng: &mut RngStream, n: usize) -> Vector {
    rng.standard_normal_vec(n)
}
