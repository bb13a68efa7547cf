//! Seeded stochastic gradients with additive Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::objective::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// Every worker samples the mean objective.
    #[default]
    Homogeneous,
    /// Worker of rank `r` samples component `r mod n_components`.
    Heterogeneous,
}

/// Draw `c` of worker `w` is a pure function of `(seed, w, c)`, so results do
/// not depend on evaluation order or thread count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticOracle {
    /// `E ||g - grad f||^2`, spread evenly over coordinates.
    pub sigma2: f64,
    pub seed: u64,
    pub mode: OracleMode,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StochasticOracle {
    pub fn new(sigma2: f64, seed: u64, mode: OracleMode) -> Self {
        StochasticOracle { sigma2, seed, mode }
    }

    /// Stochastic gradient at `x` for worker node `worker` of rank `rank`.
    pub fn sample(&self, problem: &Problem, x: &[f64], worker: usize, rank: usize, counter: u64) -> Vec<f64> {
        let f = match self.mode {
            OracleMode::Homogeneous => &problem.objective,
            OracleMode::Heterogeneous => &problem.components[rank % problem.components.len()],
        };
        let mut g = f.gradient(x);
        if self.sigma2 > 0.0 {
            let key = splitmix(splitmix(splitmix(self.seed) ^ worker as u64) ^ counter);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let sd = (self.sigma2 / g.len() as f64).sqrt();
            for v in &mut g {
                *v += sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        g
    }
}
