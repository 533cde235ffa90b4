//! Normalization constants and factorial helpers.

use std::f64::consts::PI;

/// `c_{n,s} = 2^{2s} s Γ(n/2 + s) / (π^{n/2} Γ(1 - s))`, the constant that
/// makes `(-Δ)^s` have Fourier symbol `|ξ|^{2s}`.
pub fn fractional_normalization(n: usize, s: f64) -> f64 {
    let half = n as f64 / 2.0;
    4f64.powf(s) * s * libm::tgamma(half + s) / (PI.powf(half) * libm::tgamma(1.0 - s))
}

/// `ln k!`.
pub fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        libm::lgamma(k as f64 + 1.0)
    }
}

/// `ln [p!]` with the convention `[p!] = 1` for negative `p`.
pub fn ln_bracket_factorial(p: i64) -> f64 {
    if p < 0 {
        0.0
    } else {
        ln_factorial(p as usize)
    }
}

/// Rising factorial `(a)_k = a (a+1) ... (a+k-1)`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Surface measure of the unit sphere `S^{n-1}` (counting measure in 1D).
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0),
    }
}
