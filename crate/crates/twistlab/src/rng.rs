//! Seeded randomness. One root seed drives every experiment; per-task seeds
//! are derived with a splitmix64 step so results do not depend on execution
//! order or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::scalar::derive_seed;

/// RNG for the task at `index` under the given root seed.
pub fn task_rng(root: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, index))
}

/// `count` points sampled uniformly from [0,1)^n; the j-th point only depends
/// on `(root, j)`.
pub fn uniform_points(n: usize, count: usize, root: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|j| {
            let mut rng = task_rng(root, j as u64);
            (0..n).map(|_| rng.gen::<f64>()).collect()
        })
        .collect()
}
