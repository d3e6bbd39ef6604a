//! Benchmark fixtures shared by the bench targets.

use neurowise_core::psychometrics::RatingMatrix;

/// Two tie-free samples of `n` each, interleaved so U sits mid-distribution.
pub fn interleaved_samples(n: usize) -> (Vec<f64>, Vec<f64>) {
    let x = (0..n).map(|i| (2 * i) as f64 + if i % 3 == 0 { 1.5 } else { 0.0 }).collect();
    let y = (0..n).map(|i| (2 * i + 1) as f64).collect();
    (x, y)
}

/// An `n` x `k` rating matrix with rater offsets and deterministic noise.
pub fn rating_matrix(n: usize, k: usize) -> RatingMatrix {
    let rows = (0..n)
        .map(|i| {
            (0..k)
                .map(|j| (i * 7 % 50) as f64 + j as f64 * 2.0 + ((i * 31 + j * 17) % 5) as f64)
                .collect()
        })
        .collect();
    RatingMatrix::new(rows).expect("fixture matrix is valid")
}
