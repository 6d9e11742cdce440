//! Bandit environments: per-arm loss distributions, seeded sampling, and the
//! benchmark instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, Landscape};

/// A reproducible random stream: a base seed plus a stream id.
///
/// ChaCha gives 2^64 independent streams per seed, so replication `i` of an
/// experiment can own stream `i` and run in parallel with the others while
/// the overall result stays deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Whether results are reported as losses (canonical) or rewards.
///
/// Internally everything minimizes losses; reward-oriented instances are
/// negated at the boundary so a single acceptance rule serves both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LossMinimization,
    RewardMaximization,
}

/// A stochastic bandit: a loss landscape plus Gaussian observation noise
/// with standard deviation `sigma`. `sigma = 0` is the noiseless setting.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    landscape: Landscape,
    sigma: f64,
    orientation: Orientation,
}

impl BanditInstance {
    pub fn new(landscape: Landscape, sigma: f64) -> Self {
        Self { landscape, sigma, orientation: Orientation::LossMinimization }
    }

    /// Builds a reward-maximization instance; means are negated into losses.
    pub fn from_rewards(rewards: &[f64], sigma: f64) -> Result<Self, GraphError> {
        Ok(Self {
            landscape: Landscape::from_rewards(rewards)?,
            sigma,
            orientation: Orientation::RewardMaximization,
        })
    }

    /// The benchmark generator: reward 0 at the optimal arm and
    /// `-delta_min - |N(0, 0.1)|` elsewhere (scale 0.1 is the half-normal
    /// standard deviation), with the optimal position randomized. Stored
    /// internally as losses.
    pub fn generated(k: usize, sigma: f64, delta_min: f64, stream: RngStream) -> Self {
        assert!(k >= 2, "need at least 2 arms");
        assert!(delta_min > 0.0, "delta_min must be positive");
        let mut rng = stream.rng();
        let optimal = rng.random_range(0..k);
        let mut rewards = vec![0.0f64; k];
        for (a, r) in rewards.iter_mut().enumerate() {
            if a != optimal {
                let z: f64 = rng.sample(StandardNormal);
                *r = -delta_min - (0.1 * z).abs();
            }
        }
        Self::from_rewards(&rewards, sigma).expect("generated rewards have a unique optimum")
    }

    pub fn landscape(&self) -> &Landscape {
        &self.landscape
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn arm_count(&self) -> usize {
        self.landscape.arm_count()
    }

    /// Mean rewards in the instance's reported orientation.
    pub fn reported_means(&self) -> Vec<f64> {
        match self.orientation {
            Orientation::LossMinimization => self.landscape.losses().to_vec(),
            Orientation::RewardMaximization => {
                self.landscape.losses().iter().map(|x| -x).collect()
            }
        }
    }

    /// Draws one loss observation for `arm`: `mu_arm + sigma * Z`.
    ///
    /// Always returns the loss-orientation value so every policy minimizes;
    /// panics if `arm` is out of range.
    pub fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        let mean = self.landscape.loss(arm);
        if self.sigma == 0.0 {
            return mean;
        }
        let z: f64 = rng.sample(StandardNormal);
        mean + self.sigma * z
    }
}
