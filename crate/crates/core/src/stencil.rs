//! Incremental quotients of arbitrary order.
//!
//! The order-`k` quotient samples `u` on the `k+1` consecutive integers of
//! `(-(k+1)/2, (k+1)/2]` and weights them with the solution of the
//! Vandermonde moment system `Σ_i c_i j_i^{m-1} = 0` (m ≤ k), `= k!` (m = k+1).
//! Coefficients are computed exactly over the rationals.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Largest order built by [`Stencil::build`].
pub const DEFAULT_MAX_ORDER: usize = 16;

/// The `k+1` integers in `(-(k+1)/2, (k+1)/2]`, ascending.
pub fn stencil_nodes(k: usize) -> Vec<i64> {
    let upper = k.div_ceil(2) as i64;
    let lower = upper - k as i64;
    (lower..=upper).collect()
}

fn factorial_big(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Solves `A c = b` for a square integer system by fraction-free (Bareiss)
/// elimination followed by rational back substitution.
fn solve_integer_system(mut a: Vec<Vec<BigInt>>, mut b: Vec<BigInt>) -> Option<Vec<BigRational>> {
    let n = b.len();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let swap = (k + 1..n).find(|&i| !a[i][k].is_zero())?;
            a.swap(k, swap);
            b.swap(k, swap);
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
            b[i] = (&b[i] * &a[k][k] - &a[i][k] * &b[k]) / &prev;
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(b[i].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(a[i][j].clone()) * &x[j];
        }
        x[i] = acc / BigRational::from_integer(a[i][i].clone());
    }
    Some(x)
}

/// An order-`k` incremental quotient with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    order: usize,
    nodes: Vec<i64>,
    coefficients: Vec<BigRational>,
    weights: Vec<f64>,
}

impl Stencil {
    pub fn build(k: usize) -> Result<Self> {
        Self::build_with_max(k, DEFAULT_MAX_ORDER)
    }

    pub fn build_with_max(k: usize, max_order: usize) -> Result<Self> {
        if k > max_order {
            return Err(Error::OrderTooLarge {
                order: k,
                max: max_order,
            });
        }
        let nodes = stencil_nodes(k);
        let n = k + 1;
        let matrix: Vec<Vec<BigInt>> = (0..n)
            .map(|m| {
                nodes
                    .iter()
                    .map(|&j| num_traits::pow(BigInt::from(j), m))
                    .collect()
            })
            .collect();
        let mut rhs = vec![BigInt::zero(); n];
        rhs[k] = factorial_big(k);
        let coefficients =
            solve_integer_system(matrix, rhs).expect("Vandermonde matrix on distinct nodes is invertible");
        Ok(Self::from_parts(k, nodes, coefficients))
    }

    fn from_parts(order: usize, nodes: Vec<i64>, coefficients: Vec<BigRational>) -> Self {
        let weights = coefficients
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect();
        Self {
            order,
            nodes,
            coefficients,
            weights,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coefficients
    }

    /// Coefficients rounded to `f64`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact moment `Σ_i c_i j_i^m`.
    pub fn moment(&self, m: usize) -> BigRational {
        self.nodes
            .iter()
            .zip(&self.coefficients)
            .map(|(&j, c)| c * BigRational::from_integer(num_traits::pow(BigInt::from(j), m)))
            .fold(BigRational::zero(), |acc, t| acc + t)
    }

    /// True when the moment system holds with exact equality.
    pub fn moments_hold(&self) -> bool {
        let k = self.order;
        (0..k).all(|m| self.moment(m).is_zero())
            && self.moment(k) == BigRational::from_integer(factorial_big(k))
    }

    /// `Σ c_i f(x + j_i h v)` for an arbitrary evaluator.
    pub fn apply_with<F>(&self, f: F, x: &[f64], h: f64, v: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        check_step(h)?;
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        let mut point = vec![0.0; x.len()];
        let mut acc = 0.0;
        for (&j, &c) in self.nodes.iter().zip(&self.weights) {
            for d in 0..x.len() {
                point[d] = x[d] + j as f64 * h * v[d];
            }
            acc += c * f(&point)?;
        }
        Ok(acc)
    }

    /// `T_h^v u(x)`.
    pub fn apply(&self, u: &ScalarField, x: &[f64], h: f64, v: &[f64]) -> Result<f64> {
        self.apply_with(|p| u.eval(p), x, h, v)
    }

    /// `T_h^v u(x) / h^k`, the finite-difference estimate of `D_v^k u(x)`.
    pub fn derivative_estimate(&self, u: &ScalarField, x: &[f64], h: f64, v: &[f64]) -> Result<f64> {
        Ok(self.apply(u, x, h, v)? / h.powi(self.order as i32))
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step h must be positive, got {h}")))
    }
}

/// Convenience wrapper: order-`k` derivative estimate along `v`.
pub fn derivative_estimate(u: &ScalarField, x: &[f64], k: usize, v: &[f64], h: f64) -> Result<f64> {
    Stencil::build(k)?.derivative_estimate(u, x, h, v)
}

/// Composition of incremental quotients along several directions.
#[derive(Debug, Clone)]
pub struct MultiStencil {
    factors: Vec<(Vec<f64>, Stencil)>,
}

impl MultiStencil {
    pub fn new(factors: &[(Vec<f64>, usize)]) -> Result<Self> {
        let dim = factors.first().map(|(v, _)| v.len()).unwrap_or(0);
        let mut built = Vec::with_capacity(factors.len());
        for (v, k) in factors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            built.push((v.clone(), Stencil::build(*k)?));
        }
        Ok(Self { factors: built })
    }

    /// Builds the quotient for a multi-index `γ` along the coordinate axes.
    pub fn for_multi_index(gamma: &[usize]) -> Result<Self> {
        let n = gamma.len();
        let factors: Vec<(Vec<f64>, usize)> = gamma
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0)
            .map(|(i, &g)| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                (e, g)
            })
            .collect();
        Self::new(&factors)
    }

    pub fn total_order(&self) -> usize {
        self.factors.iter().map(|(_, s)| s.order()).sum()
    }

    pub fn factors(&self) -> impl Iterator<Item = (&[f64], &Stencil)> {
        self.factors.iter().map(|(v, s)| (v.as_slice(), s))
    }

    /// Largest `|j_i|` summed over factors; the footprint in units of `h`.
    pub fn footprint(&self) -> f64 {
        self.factors
            .iter()
            .map(|(v, s)| {
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                let jmax = s.nodes().iter().map(|j| j.unsigned_abs()).max().unwrap_or(0);
                norm * jmax as f64
            })
            .sum()
    }

    fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.factors.len()).collect();
        idx.sort_by(|&a, &b| {
            let (va, sa) = &self.factors[a];
            let (vb, sb) = &self.factors[b];
            for (x, y) in va.iter().zip(vb) {
                match x.total_cmp(y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            sa.order().cmp(&sb.order())
        });
        idx
    }

    /// Flattened sum over index tuples with product coefficients, evaluated
    /// in a canonical factor order so that permuted factor lists give
    /// bit-identical results.
    pub fn apply_with<F>(&self, f: F, x: &[f64], h: f64) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        check_step(h)?;
        if self.factors.is_empty() {
            return f(x);
        }
        for (v, _) in &self.factors {
            if v.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    got: v.len(),
                });
            }
        }
        let order = self.canonical_order();
        let sizes: Vec<usize> = order.iter().map(|&i| self.factors[i].1.nodes().len()).collect();
        let mut counter = vec![0usize; order.len()];
        let mut point = vec![0.0; x.len()];
        let mut acc = 0.0;
        loop {
            let mut coeff = 1.0;
            point.copy_from_slice(x);
            for (slot, &fi) in order.iter().enumerate() {
                let (v, s) = &self.factors[fi];
                let i = counter[slot];
                coeff *= s.weights()[i];
                let jh = s.nodes()[i] as f64 * h;
                for d in 0..x.len() {
                    point[d] += jh * v[d];
                }
            }
            acc += coeff * f(&point)?;
            // odometer increment, last slot fastest
            let mut slot = order.len();
            loop {
                if slot == 0 {
                    return Ok(acc);
                }
                slot -= 1;
                counter[slot] += 1;
                if counter[slot] < sizes[slot] {
                    break;
                }
                counter[slot] = 0;
            }
        }
    }

    pub fn apply(&self, u: &ScalarField, x: &[f64], h: f64) -> Result<f64> {
        self.apply_with(|p| u.eval(p), x, h)
    }

    /// Nested application `T^{v_1}(T^{v_2}(... u))` in the stored order.
    pub fn apply_nested(&self, u: &ScalarField, x: &[f64], h: f64) -> Result<f64> {
        fn rec(
            factors: &[(Vec<f64>, Stencil)],
            u: &ScalarField,
            x: &[f64],
            h: f64,
        ) -> Result<f64> {
            match factors.split_first() {
                None => u.eval(x),
                Some(((v, s), rest)) => s.apply_with(|p| rec(rest, u, p, h), x, h, v),
            }
        }
        check_step(h)?;
        rec(&self.factors, u, x, h)
    }
}

/// Both sides of the first-order discrete Leibniz rule
/// `T(fg)(x) = f(x+hv) T g(x) + T f(x) g(x)`.
pub fn leibniz_split(
    f: &ScalarField,
    g: &ScalarField,
    x: &[f64],
    h: f64,
    v: &[f64],
) -> Result<(f64, f64)> {
    check_step(h)?;
    let shifted: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let (f0, f1) = (f.eval(x)?, f.eval(&shifted)?);
    let (g0, g1) = (g.eval(x)?, g.eval(&shifted)?);
    let lhs = f1 * g1 - f0 * g0;
    let rhs = f1 * (g1 - g0) + (f1 - f0) * g0;
    Ok((lhs, rhs))
}

/// Samples on the integer lattice `start, start+1, ...` (lattice spacing `h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSamples {
    pub start: i64,
    pub values: Vec<f64>,
}

impl LatticeSamples {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }

    pub fn get(&self, i: i64) -> f64 {
        if i < self.start || i >= self.end() {
            0.0
        } else {
            self.values[(i - self.start) as usize]
        }
    }

    fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.start && hi < self.end()
    }

    /// Smallest window `[lo, hi]` holding the nonzero samples.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.values.iter().position(|v| *v != 0.0)?;
        let last = self.values.iter().rposition(|v| *v != 0.0)?;
        Some((self.start + first as i64, self.start + last as i64))
    }
}

/// `|Σ_x T_h f(x) g(x) - Σ_x f(x) T_{-h} g(x)|` with first-order quotients,
/// for `f` of finite support. `g` must cover the support of `f` widened by
/// one node on the left, which is every node either sum touches.
pub fn summation_by_parts_residual(f: &LatticeSamples, g: &LatticeSamples, h: f64) -> Result<f64> {
    check_step(h)?;
    let Some((lo, hi)) = f.support() else {
        return Ok(0.0);
    };
    if !g.covers(lo - 1, hi) {
        return Err(Error::WindowMismatch(format!(
            "g covers [{}, {}) but [{}, {}] is required",
            g.start,
            g.end(),
            lo - 1,
            hi
        )));
    }
    // T_h f(x) g(x) = f(x+1) g(x) - f(x) g(x), nonzero only for x in [lo-1, hi].
    let left: f64 = (lo - 1..=hi)
        .map(|x| f.get(x + 1) * g.get(x) - f.get(x) * g.get(x))
        .sum();
    // f(x) T_{-h} g(x) = f(x) g(x-1) - f(x) g(x).
    let right: f64 = (lo..=hi)
        .map(|x| f.get(x) * g.get(x - 1) - f.get(x) * g.get(x))
        .sum();
    Ok((left - right).abs())
}

#[derive(Serialize, Deserialize)]
struct RationalJson {
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct StencilJson {
    k: usize,
    nodes: Vec<i64>,
    coefficients: Vec<RationalJson>,
}

impl Serialize for Stencil {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StencilJson {
            k: self.order,
            nodes: self.nodes.clone(),
            coefficients: self
                .coefficients
                .iter()
                .map(|c| RationalJson {
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Stencil {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = StencilJson::deserialize(deserializer)?;
        if raw.nodes.len() != raw.k + 1 || raw.coefficients.len() != raw.k + 1 {
            return Err(D::Error::custom("stencil needs k+1 nodes and coefficients"));
        }
        let mut coefficients = Vec::with_capacity(raw.k + 1);
        for c in raw.coefficients {
            let num: BigInt = c.num.parse().map_err(D::Error::custom)?;
            let den: BigInt = c.den.parse().map_err(D::Error::custom)?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            coefficients.push(BigRational::new(num, den));
        }
        Ok(Stencil::from_parts(raw.k, raw.nodes, coefficients))
    }
}
