//! Synthetic benchmark datasets.

use autodiff_core::Tensor;
use inference_algos::Batches;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call keeps sampling order seed-stable
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random regression batches: x has standard-normal entries, y is the sine
/// of the first coordinate plus 0.1-scale noise. Deterministic per seed.
pub fn gen_synthetic(d: usize, batches: usize, batch_size: usize, seed: u64) -> Batches {
    assert!(d > 0 && batches > 0 && batch_size > 0, "positive sizes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..batches)
        .map(|_| {
            let x: Vec<f64> =
                (0..batch_size * d).map(|_| standard_normal(&mut rng)).collect();
            let y: Vec<f64> = (0..batch_size)
                .map(|i| (x[i * d]).sin() + 0.1 * standard_normal(&mut rng))
                .collect();
            (
                Tensor::matrix(batch_size, d, x).unwrap(),
                Tensor::matrix(batch_size, 1, y).unwrap(),
            )
        })
        .collect()
}
