//! Truncated Taylor series ("jets") and the scalar abstraction that lets one
//! expression be evaluated on plain floats, univariate jets, or jets of jets.
//!
//! A `JetPoly` with coefficients `a_0..a_m` represents `t ↦ Σ a_k t^k` modulo
//! `t^{m+1}`. Every operation here is the exact truncation of the formal
//! power-series operation, computed with the usual recurrences. Nesting
//! (`JetPoly<JetPoly<f64>>`) gives tensor-product bivariate expansions, which
//! is how mixed partial derivatives are obtained.
//!
//! Jets of different lengths may be combined: missing coefficients are zero
//! and the result takes the longer length. Constants are length-one jets.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Numbers that support the analytic primitives used by field and kernel
/// expressions.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    /// The constant term (recursively for nested jets).
    fn value(&self) -> f64;
    fn scale(&self, c: f64) -> Self;
    fn add_f64(&self, c: f64) -> Self;
    fn recip(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn powf(&self, r: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    /// Integer power by repeated squaring; valid at a zero base for `k >= 0`.
    fn powi(&self, k: i32) -> Self {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut result = Self::from_f64(1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        result
    }
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn add_f64(&self, c: f64) -> Self {
        self + c
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn powf(&self, r: f64) -> Self {
        f64::powf(*self, r)
    }
}

/// Truncated power series with coefficients in `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoly<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Scalar> JetPoly<T> {
    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The jet of `t ↦ x + v t` truncated at order `m`.
    pub fn variable(x: T, v: T, m: usize) -> Self {
        let mut coeffs = vec![T::zero(); m + 1];
        coeffs[0] = x;
        if m >= 1 {
            coeffs[1] = v;
        }
        Self { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Truncation order (`len - 1`).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `a_k`, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// `k`-th derivative at the expansion point, `k! a_k`.
    pub fn derivative(&self, k: usize) -> T {
        self.coeff(k).scale(factorial_f64(k))
    }

    /// Re-truncate (or zero-pad) to order `m`.
    pub fn truncate(mut self, m: usize) -> Self {
        self.coeffs.resize(m + 1, T::zero());
        self
    }

    fn len(&self) -> usize {
        self.coeffs.len()
    }

    fn c0(&self) -> &T {
        &self.coeffs[0]
    }
}

pub(crate) fn factorial_f64(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl<T: Scalar> Add for JetPoly<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let n = self.len().max(rhs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Self { coeffs }
    }
}

impl<T: Scalar> Sub for JetPoly<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let n = self.len().max(rhs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Self { coeffs }
    }
}

impl<T: Scalar> Neg for JetPoly<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl<T: Scalar> Mul for JetPoly<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let n = self.len().max(rhs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let lo = k.saturating_sub(rhs.len() - 1);
            let hi = k.min(self.len() - 1);
            let mut acc = T::zero();
            for j in lo..=hi {
                acc = acc + self.coeffs[j].clone() * rhs.coeffs[k - j].clone();
            }
            coeffs.push(acc);
        }
        Self { coeffs }
    }
}

impl<T: Scalar> Scalar for JetPoly<T> {
    fn from_f64(c: f64) -> Self {
        Self::constant(T::from_f64(c))
    }

    fn value(&self) -> f64 {
        self.c0().value()
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect(),
        }
    }

    fn add_f64(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0].add_f64(c);
        out
    }

    fn recip(&self) -> Self {
        let n = self.len();
        let b0 = self.c0().recip();
        let mut b: Vec<T> = Vec::with_capacity(n);
        b.push(b0.clone());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.coeffs[j].clone() * b[k - j].clone();
            }
            b.push(-(acc * b0.clone()));
        }
        Self { coeffs: b }
    }

    fn exp(&self) -> Self {
        let n = self.len();
        let mut b: Vec<T> = Vec::with_capacity(n);
        b.push(self.c0().exp());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + self.coeffs[j].scale(j as f64) * b[k - j].clone();
            }
            b.push(acc.scale(1.0 / k as f64));
        }
        Self { coeffs: b }
    }

    fn ln(&self) -> Self {
        let n = self.len();
        let inv0 = self.c0().recip();
        let mut b: Vec<T> = Vec::with_capacity(n);
        b.push(self.c0().ln());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + b[j].scale(j as f64) * self.coeffs[k - j].clone();
            }
            let bk = (self.coeffs[k].clone() - acc.scale(1.0 / k as f64)) * inv0.clone();
            b.push(bk);
        }
        Self { coeffs: b }
    }

    fn sin_cos(&self) -> (Self, Self) {
        let n = self.len();
        let (s0, c0) = self.c0().sin_cos();
        let mut s: Vec<T> = Vec::with_capacity(n);
        let mut c: Vec<T> = Vec::with_capacity(n);
        s.push(s0);
        c.push(c0);
        for k in 1..n {
            let mut acc_s = T::zero();
            let mut acc_c = T::zero();
            for j in 1..=k {
                let ja = self.coeffs[j].scale(j as f64);
                acc_s = acc_s + ja.clone() * c[k - j].clone();
                acc_c = acc_c + ja * s[k - j].clone();
            }
            s.push(acc_s.scale(1.0 / k as f64));
            c.push(acc_c.scale(-1.0 / k as f64));
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }

    fn powf(&self, r: f64) -> Self {
        let n = self.len();
        let inv0 = self.c0().recip();
        let mut b: Vec<T> = Vec::with_capacity(n);
        b.push(self.c0().powf(r));
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = r * j as f64 - (k - j) as f64;
                acc = acc + self.coeffs[j].scale(w) * b[k - j].clone();
            }
            b.push((acc * inv0.clone()).scale(1.0 / k as f64));
        }
        Self { coeffs: b }
    }
}

/// Composition `outer ∘ inner` where `outer` is the Taylor jet of an analytic
/// function expanded at `inner.a_0`. Used to check chain-rule consistency.
pub fn compose<T: Scalar>(outer: &JetPoly<T>, inner: &JetPoly<T>) -> JetPoly<T> {
    let m = inner.order().max(outer.order());
    let shift = JetPoly {
        coeffs: {
            let mut c = inner.coeffs.clone();
            c.resize(m + 1, T::zero());
            c[0] = T::zero();
            c
        },
    };
    // Horner in the shifted inner series.
    let mut acc = JetPoly::constant(outer.coeff(outer.order()));
    for k in (0..outer.order()).rev() {
        acc = (acc * shift.clone()).truncate(m);
        acc.coeffs[0] = acc.coeffs[0].clone() + outer.coeff(k);
    }
    acc.truncate(m)
}

/// Formal derivative `d/dt` of a jet (loses one order).
pub fn differentiate<T: Scalar>(a: &JetPoly<T>) -> JetPoly<T> {
    if a.order() == 0 {
        return JetPoly::constant(T::zero());
    }
    JetPoly {
        coeffs: (1..a.len())
            .map(|k| a.coeffs[k].scale(k as f64))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn exp_series_at_zero() {
        let t = JetPoly::variable(0.0, 1.0, 5);
        let e = t.exp();
        for k in 0..=5 {
            assert!(close(e.coeff(k), 1.0 / factorial_f64(k), 1e-15));
        }
    }

    #[test]
    fn cos_series_at_zero() {
        let t = JetPoly::variable(0.0, 1.0, 4);
        let (_, c) = t.sin_cos();
        let expected = [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0];
        for (k, e) in expected.iter().enumerate() {
            assert!(close(c.coeff(k), *e, 1e-15));
        }
    }

    #[test]
    fn recip_times_self_is_one() {
        let a = JetPoly::from_coeffs(vec![2.0, -0.5, 0.25, 3.0, 1.0]);
        let p = a.clone() * a.recip();
        assert!(close(p.coeff(0), 1.0, 1e-15));
        for k in 1..=4 {
            assert!(p.coeff(k).abs() < 1e-14);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let a = JetPoly::from_coeffs(vec![0.3, 1.0, -2.0, 0.5, 0.1, 0.7]);
        let b = a.exp().ln();
        for k in 0..=5 {
            assert!(close(a.coeff(k), b.coeff(k), 1e-13));
        }
    }

    #[test]
    fn powf_matches_repeated_product() {
        let a = JetPoly::from_coeffs(vec![1.5, 0.2, -0.3, 0.4]);
        let p = a.powf(3.0);
        let q = a.clone() * a.clone() * a.clone();
        for k in 0..=3 {
            assert!(close(p.coeff(k), q.coeff(k), 1e-14));
        }
        let r = a.powi(3);
        for k in 0..=3 {
            assert!(close(r.coeff(k), q.coeff(k), 1e-14));
        }
    }

    #[test]
    fn nested_jets_give_mixed_partials() {
        // f(x, y) = x^2 y^3 at (1, 2): d/dx d/dy f = 2x * 3y^2 = 24.
        let m = 3;
        let x = JetPoly::variable(
            JetPoly::constant(1.0),
            JetPoly::constant(1.0),
            m,
        );
        let y = JetPoly::constant(JetPoly::variable(2.0, 1.0, m));
        let f = x.powi(2) * y.powi(3);
        let c11 = f.coeff(1).coeff(1);
        assert!(close(c11, 24.0, 1e-14));
    }

    #[test]
    fn compose_with_exp_matches_chain_rule() {
        let f = JetPoly::from_coeffs(vec![0.2, 1.0, 0.5, -0.25, 0.125]);
        let direct = f.exp();
        // outer: exp expanded at f.a_0
        let outer = JetPoly::variable(f.coeff(0), 1.0, 4).exp();
        let composed = compose(&outer, &f);
        for k in 0..=4 {
            assert!(close(direct.coeff(k), composed.coeff(k), 1e-14));
        }
        // (exp ∘ f)' = f' (exp ∘ f), coefficientwise after truncation
        let lhs = differentiate(&direct);
        let rhs = (differentiate(&f) * direct.clone()).truncate(3);
        for k in 0..=3 {
            assert!(close(lhs.coeff(k), rhs.coeff(k), 1e-14));
        }
    }
}
