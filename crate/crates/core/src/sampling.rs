//! Deterministic quasi-random sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 4] = [2, 3, 5, 7];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    acc
}

/// Halton points in `[0,1)^d` with a seeded Cranley–Patterson rotation.
pub fn halton(count: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(d <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..d)
                .map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract())
                .collect()
        })
        .collect()
}

/// Maps a point of `[0,1)^n` into the ball of radius `r` in `R^n`, `n ≤ 2`.
pub fn to_ball(u: &[f64], r: f64) -> Vec<f64> {
    match u.len() {
        1 => vec![r * (2.0 * u[0] - 1.0)],
        _ => {
            let rad = r * u[0].sqrt();
            let th = 2.0 * std::f64::consts::PI * u[1];
            vec![rad * th.cos(), rad * th.sin()]
        }
    }
}

/// Maps a point of `[0,1)^n` to a nonzero point in the punctured ball
/// `0 < |y| < r` (in 1D both signs are covered).
pub fn to_punctured_ball(u: &[f64], r: f64) -> Vec<f64> {
    match u.len() {
        1 => {
            let y = r * (2.0 * u[0] - 1.0);
            if y.abs() < 1e-12 * r { vec![r] } else { vec![y] }
        }
        _ => {
            let rad = r * (1.0 - u[0]).max(1e-12);
            let th = 2.0 * std::f64::consts::PI * u[1];
            vec![rad * th.cos(), rad * th.sin()]
        }
    }
}

/// Deterministic generator for randomized tests and suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = halton(64, 2, 7);
        let b = halton(64, 2, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        assert_ne!(halton(8, 1, 1), halton(8, 1, 2));
    }

    #[test]
    fn punctured_ball_avoids_origin() {
        for p in halton(256, 1, 3) {
            let y = to_punctured_ball(&p, 0.5);
            assert!(y[0] != 0.0 && y[0].abs() <= 0.5);
        }
    }
}
