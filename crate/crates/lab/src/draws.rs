//! Seeded random inputs.

use homog_core::GridFunction;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cap of the heavy-tailed draws `1/u`.
pub const HEAVY_CAP: f64 = 1e3;

/// Independent uniform `[0,1]` values, or `min(1/u, cap)` when `heavy`.
pub fn nonnegative(rng: &mut ChaCha8Rng, n: usize, heavy: bool) -> GridFunction {
    GridFunction::new(
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                if heavy {
                    (1.0 / u.max(f64::MIN_POSITIVE)).min(HEAVY_CAP)
                } else {
                    u
                }
            })
            .collect(),
    )
}

/// Independent uniform `[-1,1]` values.
pub fn signed(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    GridFunction::new((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}

/// Strictly positive weights, log-uniform on `[e^{-spread}, e^{spread}]`.
pub fn weight(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> GridFunction {
    GridFunction::new((0..n).map(|_| rng.gen_range(-spread..=spread).exp()).collect())
}
