//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] built
//! from an explicit seed. Sampled checks derive one stream per trial from
//! `(seed, trial)` so that results do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::tensor::{ImageTensor, Shape};

pub type StdRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for trial `index` of a run seeded with `seed`.
pub fn trial_stream(seed: u64, index: u64) -> StdRng {
    seeded(mix64(seed ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03))))
}

/// Standard normal sampler (Box–Muller, both outputs used).
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: StdRng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeded(seed), spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * math::sin(theta));
        r * math::cos(theta)
    }
}

pub fn uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Tensor with entries uniform in `[lo, hi)`.
pub fn uniform_tensor(rng: &mut StdRng, shape: Shape, lo: f64, hi: f64) -> ImageTensor {
    let data = (0..shape.len()).map(|_| uniform(rng, lo, hi)).collect();
    ImageTensor::from_vec(shape, data).expect("length matches shape")
}

pub fn gaussian_tensor(seed: u64, shape: Shape, std_dev: f64) -> ImageTensor {
    let mut g = Gaussian::new(seed);
    let data = (0..shape.len()).map(|_| std_dev * g.sample()).collect();
    ImageTensor::from_vec(shape, data).expect("length matches shape")
}
