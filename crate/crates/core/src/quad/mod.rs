//! Evaluation of `Lu(x) = ∫ δu(x,y) K(x,y) dy` and exterior kernel integrals.
//!
//! The integral is split into three zones:
//! - inner `|y| < ρ`: the even Taylor terms of `δu` up to order 4 are
//!   integrated in closed form against the homogeneous kernel, with an
//!   explicit `O(ρ^{6-2s})` remainder bound;
//! - middle `ρ ≤ |y| ≤ R_c`: adaptive Gauss–Kronrod on geometric panels
//!   (polar coordinates in two dimensions);
//! - tail `|y| > R_c`: the `-2u(x)` part exactly, the rest by the map
//!   `y = R_c / t` when the field decays and by the field's value range
//!   otherwise.

pub mod gk;

use std::cell::Cell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::kernel::{KernelKind, KernelSpec};
use crate::stencil::MultiStencil;
use gk::{geometric_breaks, integrate};

/// Angular trapezoid nodes for the two-dimensional inner zone.
const INNER_ANGLES: usize = 64;
/// Factor applied to the sampled order-6 remainder coefficient.
const REMAINDER_SAFETY: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    BoundOnly,
    /// Mapped quadrature when the field decays, bound-only otherwise.
    MappedQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rho: f64,
    pub r_cut: f64,
    pub tol: f64,
    pub max_subdivisions: usize,
    pub tail_mode: TailMode,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rho: 1e-2,
            r_cut: 1e3,
            tol: 1e-10,
            max_subdivisions: 20_000,
            tail_mode: TailMode::MappedQuadrature,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < self.r_cut && self.r_cut.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < rho < R_c, got rho = {}, R_c = {}",
                self.rho, self.r_cut
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("panel tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Operator value with per-zone contributions and error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    pub inner: f64,
    pub middle: f64,
    pub tail: f64,
    pub error_bound: f64,
    pub inner_bound: f64,
    pub middle_bound: f64,
    pub tail_bound: f64,
    pub tail_mode: TailMode,
    pub subdivisions: usize,
}

/// `u(x+y) + u(x-y) - 2u(x)`.
pub fn second_increment(u: &ScalarField, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(u.eval(&plus)? + u.eval(&minus)? - 2.0 * u.eval(x)?)
}

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn offset(x: &[f64], t: f64, omega: &[f64]) -> Vec<f64> {
    x.iter().zip(omega).map(|(a, w)| a + t * w).collect()
}

/// Directions with quadrature weights for integrals over the unit sphere
/// (counting measure on `{±1}` in one dimension).
fn sphere_nodes(n: usize) -> Vec<(f64, Vec<f64>)> {
    match n {
        1 => vec![(1.0, vec![1.0]), (1.0, vec![-1.0])],
        _ => (0..INNER_ANGLES)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / INNER_ANGLES as f64;
                (2.0 * PI / INNER_ANGLES as f64, unit(th).to_vec())
            })
            .collect(),
    }
}

struct Zone {
    value: f64,
    bound: f64,
    subdivisions: usize,
}

/// `g(t) = (u(x+tω) + u(x-tω))(K(x,tω) + K(x,-tω)) t^{n-1}`, optionally
/// with `-2u(x)` subtracted from the field factor.
fn folded_integrand(
    u: &ScalarField,
    k: &KernelSpec,
    x: &[f64],
    ux: f64,
    omega: &[f64],
    t: f64,
    subtract_center: bool,
) -> Result<f64> {
    let yp: Vec<f64> = omega.iter().map(|w| t * w).collect();
    let ym: Vec<f64> = omega.iter().map(|w| -t * w).collect();
    let mut field = u.eval(&offset(x, t, omega))? + u.eval(&offset(x, -t, omega))?;
    if subtract_center {
        field -= 2.0 * ux;
    }
    let kern = k.eval(x, &yp)? + k.eval(x, &ym)?;
    Ok(field * kern * t.powi(k.dim() as i32 - 1))
}

/// Integral of `g(ω, t)` over `t` on `breaks` and over the directions of
/// half the sphere (polar angle in `[0, π]` in two dimensions).
fn shell_integral<G>(n: usize, breaks: &[f64], tol: f64, max_sub: usize, g: G) -> Result<Zone>
where
    G: Fn(&[f64], f64) -> Result<f64>,
{
    match n {
        1 => {
            let e = integrate(|t| g(&[1.0], t), breaks, tol, max_sub)?;
            Ok(Zone {
                value: e.value,
                bound: e.error,
                subdivisions: e.subdivisions,
            })
        }
        _ => {
            let worst_inner = Cell::new(0.0f64);
            let subs = Cell::new(0usize);
            let outer = integrate(
                |theta| {
                    let e = integrate(|t| g(&unit(theta), t), breaks, tol / 8.0, max_sub)?;
                    worst_inner.set(worst_inner.get().max(e.error));
                    subs.set(subs.get() + e.subdivisions);
                    Ok(e.value)
                },
                &[0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI],
                tol,
                max_sub,
            )?;
            Ok(Zone {
                value: outer.value,
                bound: outer.error + PI * worst_inner.get(),
                subdivisions: outer.subdivisions + subs.get(),
            })
        }
    }
}

fn inner_homogeneous(u: &ScalarField, k: &KernelSpec, x: &[f64], rho: f64) -> Result<Zone> {
    let s = k.s();
    let half_c = k.normalization() / 2.0;
    let (mut a2, mut a4, mut a6) = (0.0, 0.0, 0.0);
    for (w, omega) in sphere_nodes(k.dim()) {
        let m = k.modulation(x, &omega)?.expect("homogeneous kernel");
        let jet = u.jet(x, &omega, 4)?;
        a2 += w * m * jet.coeff(2);
        a4 += w * m * jet.coeff(4);
        let mut sup6: f64 = 0.0;
        for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let p = offset(x, frac * rho, &omega);
            sup6 = sup6.max(u.jet(&p, &omega, 6)?.coeff(6).abs());
        }
        a6 += w * m.abs() * sup6;
    }
    let value = 2.0
        * half_c
        * (a2 * rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) + a4 * rho.powf(4.0 - 2.0 * s) / (4.0 - 2.0 * s));
    let bound = REMAINDER_SAFETY * 2.0 * half_c * a6 * rho.powf(6.0 - 2.0 * s) / (6.0 - 2.0 * s);
    if !value.is_finite() || !bound.is_finite() {
        return Err(Error::NonSmooth(format!("Taylor jet at {x:?} is not finite")));
    }
    Ok(Zone {
        value,
        bound,
        subdivisions: 0,
    })
}

/// Smallest radius reached by the inner-zone moment integrals of
/// non-homogeneous kernels, as a fraction of `ρ`.
const INNER_CUTOFF: f64 = 1e-60;

/// Directions over half the sphere for folded integrands.
fn half_sphere_nodes(n: usize) -> Vec<(f64, Vec<f64>)> {
    match n {
        1 => vec![(1.0, vec![1.0])],
        _ => {
            let m = INNER_ANGLES / 2;
            (0..m)
                .map(|i| (PI / m as f64, unit(PI * i as f64 / m as f64).to_vec()))
                .collect()
        }
    }
}

/// Inner zone for kernels without known homogeneity: the same jet terms,
/// with the radial moments `∫_0^ρ t^k (K(x,tω) + K(x,-tω)) t^{n-1} dt`
/// computed numerically through `t = ρ e^{-z}`.
fn inner_numeric(u: &ScalarField, k: &KernelSpec, x: &[f64], cfg: &QuadratureConfig) -> Result<Zone> {
    let rho = cfg.rho;
    let z_max = -INNER_CUTOFF.ln();
    let breaks = geometric_breaks(1.0, z_max);
    let breaks: Vec<f64> = std::iter::once(0.0).chain(breaks).collect();
    let (mut value, mut bound, mut subdivisions) = (0.0, 0.0, 0);
    for (w, omega) in half_sphere_nodes(k.dim()) {
        let neg: Vec<f64> = omega.iter().map(|c| -c).collect();
        let moment = |p: i32| {
            integrate(
                |z| {
                    let t = rho * (-z).exp();
                    let yp: Vec<f64> = omega.iter().map(|c| t * c).collect();
                    let ym: Vec<f64> = neg.iter().map(|c| t * c).collect();
                    Ok((k.eval(x, &yp)? + k.eval(x, &ym)?) * t.powi(p + k.dim() as i32))
                },
                &breaks,
                cfg.tol,
                cfg.max_subdivisions,
            )
        };
        let jet = u.jet(x, &omega, 4)?;
        let (m2, m4, m6) = (moment(2)?, moment(4)?, moment(6)?);
        let mut sup6: f64 = 0.0;
        for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let p = offset(x, frac * rho, &omega);
            sup6 = sup6.max(u.jet(&p, &omega, 6)?.coeff(6).abs());
        }
        value += w * 2.0 * (jet.coeff(2) * m2.value + jet.coeff(4) * m4.value);
        bound += w
            * 2.0
            * (jet.coeff(2).abs() * m2.error
                + jet.coeff(4).abs() * m4.error
                + REMAINDER_SAFETY * sup6 * m6.value);
        subdivisions += m2.subdivisions + m4.subdivisions + m6.subdivisions;
    }
    if !value.is_finite() || !bound.is_finite() {
        return Err(Error::NonSmooth(format!("Taylor jet at {x:?} is not finite")));
    }
    Ok(Zone {
        value,
        bound,
        subdivisions,
    })
}

fn tail_zone(u: &ScalarField, k: &KernelSpec, x: &[f64], ux: f64, cfg: &QuadratureConfig) -> Result<(Zone, TailMode)> {
    let (lo, hi) = u.range();
    let r = cfg.r_cut;
    let mass = kernel_tail_mass(k, x, r, cfg)?;
    let exact = -2.0 * ux * mass;
    if cfg.tail_mode == TailMode::MappedQuadrature && u.decay().decays() {
        let n = k.dim();
        let mapped = shell_integral(n, &[0.0, 1e-3, 1e-2, 0.1, 1.0], cfg.tol, cfg.max_subdivisions, |omega, t| {
            let y = r / t;
            if !y.is_finite() {
                return Ok(0.0);
            }
            Ok(folded_integrand(u, k, x, ux, omega, y, false)? * r / (t * t))
        })?;
        Ok((
            Zone {
                value: exact + mapped.value,
                bound: mapped.bound,
                subdivisions: mapped.subdivisions,
            },
            TailMode::MappedQuadrature,
        ))
    } else {
        Ok((
            Zone {
                value: exact + (lo + hi) * mass,
                bound: (hi - lo) * mass,
                subdivisions: 0,
            },
            TailMode::BoundOnly,
        ))
    }
}

/// `∫_{|y|>r} K(x,y) dy`.
fn kernel_tail_mass(k: &KernelSpec, x: &[f64], r: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if k.is_radially_homogeneous() {
        return k.tail_mass(x, r);
    }
    let e = shell_integral(k.dim(), &[0.0, 1e-3, 1e-2, 0.1, 1.0], cfg.tol, cfg.max_subdivisions, |omega, t| {
        let y = r / t;
        if !y.is_finite() {
            return Ok(0.0);
        }
        let yp: Vec<f64> = omega.iter().map(|w| y * w).collect();
        let ym: Vec<f64> = omega.iter().map(|w| -y * w).collect();
        Ok((k.eval(x, &yp)? + k.eval(x, &ym)?) * y.powi(k.dim() as i32 - 1) * r / (t * t))
    })?;
    Ok(e.value)
}

/// `Lu(x) = ∫ δu(x,y) K(x,y) dy` by the three-zone scheme.
pub fn evaluate(u: &ScalarField, k: &KernelSpec, x: &[f64], cfg: &QuadratureConfig) -> Result<OperatorValue> {
    cfg.validate()?;
    if u.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: u.dim(),
        });
    }
    if x.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: x.len(),
        });
    }
    let (lo, hi) = u.range();
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::UnboundedField);
    }
    let ux = u.eval(x)?;
    let inner = if k.is_radially_homogeneous() {
        inner_homogeneous(u, k, x, cfg.rho)?
    } else {
        inner_numeric(u, k, x, cfg)?
    };
    let breaks = geometric_breaks(cfg.rho, cfg.r_cut);
    let middle = shell_integral(k.dim(), &breaks, cfg.tol, cfg.max_subdivisions, |omega, t| {
        folded_integrand(u, k, x, ux, omega, t, true)
    })?;
    let (tail, tail_mode) = tail_zone(u, k, x, ux, cfg)?;
    Ok(OperatorValue {
        value: inner.value + middle.value + tail.value,
        inner: inner.value,
        middle: middle.value,
        tail: tail.value,
        error_bound: inner.bound + middle.bound + tail.bound,
        inner_bound: inner.bound,
        middle_bound: middle.bound,
        tail_bound: tail.bound,
        tail_mode,
        subdivisions: inner.subdivisions + middle.subdivisions + tail.subdivisions,
    })
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius must be positive, got {r}")))
    }
}

/// `∫_{|y|>r} |D_y^γ K(x,y)| dy`, reduced to a sphere integral by
/// homogeneity (closed form for the one-dimensional fractional kernel).
pub fn exterior_derivative_integral(k: &KernelSpec, x: &[f64], gamma: &[usize], r: f64) -> Result<f64> {
    check_radius(r)?;
    if gamma.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: gamma.len(),
        });
    }
    let order: usize = gamma.iter().sum();
    let s = k.s();
    let radial = r.powf(-2.0 * s - order as f64) / (2.0 * s + order as f64);
    match (k.kind(), k.dim()) {
        (KernelKind::Custom { .. }, _) => Err(Error::Unsupported(
            "derivatives of a custom kernel are unchecked".into(),
        )),
        (KernelKind::Fractional, 1) => {
            let prod: f64 = (0..order).map(|i| 1.0 + 2.0 * s + i as f64).product();
            Ok(2.0 * k.normalization() / 2.0 * prod * radial)
        }
        (_, 1) => {
            let a = k.y_derivative(x, &[1.0], gamma)?.abs();
            let b = k.y_derivative(x, &[-1.0], gamma)?.abs();
            Ok((a + b) * radial)
        }
        _ => {
            let e = integrate(
                |th| Ok(k.y_derivative(x, &unit(th), gamma)?.abs()),
                &(0..=16).map(|i| 2.0 * PI * i as f64 / 16.0).collect::<Vec<_>>(),
                1e-12,
                5_000,
            )?;
            Ok(e.value * radial)
        }
    }
}

/// Same integral by mapped quadrature `y = r/t`, without homogeneity.
pub fn exterior_derivative_integral_numeric(
    k: &KernelSpec,
    x: &[f64],
    gamma: &[usize],
    r: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_radius(r)?;
    exterior_abs_integral(k.dim(), r, cfg, |y| k.y_derivative(x, y, gamma))
}

/// `∫_{|y|>r} |g(y)| dy` through `y = r/t` on each ray.
fn exterior_abs_integral<G>(n: usize, r: f64, cfg: &QuadratureConfig, g: G) -> Result<f64>
where
    G: Fn(&[f64]) -> Result<f64>,
{
    let e = match n {
        1 => integrate(
            |t| {
                let y = r / t;
                if !y.is_finite() {
                    return Ok(0.0);
                }
                Ok((g(&[y])?.abs() + g(&[-y])?.abs()) * r / (t * t))
            },
            &[0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0],
            cfg.tol,
            cfg.max_subdivisions,
        )?,
        _ => integrate(
            |th| {
                let omega = unit(th);
                Ok(integrate(
                    |t| {
                        let y = r / t;
                        if !y.is_finite() {
                            return Ok(0.0);
                        }
                        Ok(g(&[y * omega[0], y * omega[1]])?.abs() * y * r / (t * t))
                    },
                    &[0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0],
                    cfg.tol / 8.0,
                    cfg.max_subdivisions,
                )?
                .value)
            },
            &(0..=16).map(|i| 2.0 * PI * i as f64 / 16.0).collect::<Vec<_>>(),
            cfg.tol,
            cfg.max_subdivisions,
        )?,
    };
    Ok(e.value)
}

/// One row of a Proposition-style convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProintRow {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `lhs(h) = ∫_{|y|>r} |T_h^γ K(x, ·)(y)| / h^{|γ|} dy` (quotient in `y`)
/// against `rhs = ∫_{|y|>r} |D_y^γ K(x,y)| dy`. Requires
/// `h (|γ| + 1) < r` so that the stencil never reaches the origin.
pub fn proint_convergence(
    k: &KernelSpec,
    x: &[f64],
    gamma: &[usize],
    r: f64,
    hs: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<ProintRow>> {
    check_radius(r)?;
    let order: usize = gamma.iter().sum();
    let rhs = exterior_derivative_integral(k, x, gamma, r)?;
    let stencil = MultiStencil::for_multi_index(gamma)?;
    hs.iter()
        .map(|&h| {
            let limit = r;
            if !(h > 0.0) || h * (order as f64 + 1.0) >= limit {
                return Err(Error::StepTooLarge { h, limit });
            }
            let scale = h.powi(order as i32);
            let lhs = exterior_abs_integral(k.dim(), r, cfg, |y| {
                Ok(stencil.apply_with(|p| k.eval(x, p), y, h)? / scale)
            })?;
            Ok(ProintRow {
                h,
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gaussian_pair, trig_pair};

    fn frac(s: f64) -> KernelSpec {
        KernelSpec::fractional(1, s).unwrap()
    }

    #[test]
    fn second_increment_examples() {
        let sq = ScalarField::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let lin = ScalarField::polynomial(vec![3.0, -2.0]).unwrap();
        let c = ScalarField::trig(1.0, 0.0).unwrap();
        for &(x, y) in &[(0.3, 0.7), (-1.2, 2.5), (4.0, -0.1)] {
            assert!((second_increment(&sq, &[x], &[y]).unwrap() - 2.0 * y * y).abs() < 1e-12);
            assert!(second_increment(&lin, &[x], &[y]).unwrap().abs() < 1e-12);
            let expect = 2.0 * f64::cos(x) * (f64::cos(y) - 1.0);
            assert!((second_increment(&c, &[x], &[y]).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn symbol_test() {
        let cfg = QuadratureConfig::default();
        for s in [0.6, 0.75, 0.9] {
            for omega in [1.0, 2.0] {
                let (u, f) = trig_pair(omega, 0.0, s).unwrap();
                for x in [0.0, 0.3] {
                    let v = evaluate(&u, &frac(s), &[x], &cfg).unwrap();
                    let exact = f.eval(&[x]).unwrap();
                    let rel = (v.value - exact).abs() / exact.abs();
                    assert!(rel <= 1e-4, "s={s} ω={omega} x={x}: {} vs {exact}", v.value);
                    assert!((v.value - (v.inner + v.middle + v.tail)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn constant_field_is_zero() {
        let u = ScalarField::constant(3.0, 1);
        let v = evaluate(&u, &frac(0.75), &[0.2], &QuadratureConfig::default()).unwrap();
        assert!(v.value.abs() < 1e-14 && v.error_bound < 1e-14, "{v:?}");
    }

    #[test]
    fn classical_limit() {
        let u = ScalarField::gaussian(1.0, 1).unwrap();
        let v = evaluate(&u, &frac(0.999), &[0.0], &QuadratureConfig::default()).unwrap();
        assert!((v.value + 2.0).abs() <= 0.04, "{v:?}");
    }

    #[test]
    fn gaussian_pair_matches() {
        let cfg = QuadratureConfig::default();
        for s in [0.6, 0.8] {
            let (u, f) = gaussian_pair(1.0, s, 1).unwrap();
            for x in [0.0, 0.5, 1.7] {
                let v = evaluate(&u, &frac(s), &[x], &cfg).unwrap();
                let exact = f.eval(&[x]).unwrap();
                assert!((v.value - exact).abs() <= 1e-7 + v.error_bound, "s={s} x={x}: {v:?} vs {exact}");
            }
        }
    }

    #[test]
    fn gaussian_pair_two_dimensional() {
        let cfg = QuadratureConfig { tol: 1e-8, ..Default::default() };
        let s = 0.7;
        let k = KernelSpec::fractional(2, s).unwrap();
        let (u, f) = gaussian_pair(1.0, s, 2).unwrap();
        for x in [[0.0, 0.0], [0.4, -0.3]] {
            let v = evaluate(&u, &k, &x, &cfg).unwrap();
            let exact = f.eval(&x).unwrap();
            assert!((v.value - exact).abs() <= 1e-5 * exact.abs(), "{v:?} vs {exact}");
        }
    }

    #[test]
    fn zone_additivity() {
        let u = ScalarField::lorentzian(1).unwrap();
        let k = frac(0.7);
        let base = QuadratureConfig::default();
        let a = evaluate(&u, &k, &[0.4], &base).unwrap();
        for cfg in [
            QuadratureConfig { rho: 2e-2, ..base },
            QuadratureConfig { r_cut: 2e3, ..base },
        ] {
            let b = evaluate(&u, &k, &[0.4], &cfg).unwrap();
            assert!((a.value - b.value).abs() <= a.error_bound + b.error_bound + 1e-12);
        }
    }

    #[test]
    fn bound_only_tail_contains_mapped_value() {
        let u = ScalarField::gaussian(0.5, 1).unwrap();
        let k = frac(0.75);
        let mapped = evaluate(&u, &k, &[0.1], &QuadratureConfig::default()).unwrap();
        let bound = evaluate(
            &u,
            &k,
            &[0.1],
            &QuadratureConfig {
                tail_mode: TailMode::BoundOnly,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(bound.tail_mode, TailMode::BoundOnly);
        assert!((mapped.value - bound.value).abs() <= bound.error_bound + mapped.error_bound);
    }

    #[test]
    fn unbounded_field_rejected() {
        let u = ScalarField::exponential(1.0).unwrap();
        assert_eq!(
            evaluate(&u, &frac(0.75), &[0.0], &QuadratureConfig::default()),
            Err(Error::UnboundedField)
        );
    }

    #[test]
    fn custom_kernel_matches_fractional() {
        let s = 0.75;
        let k0 = frac(s);
        let half_c = k0.normalization() / 2.0;
        let custom = KernelSpec::custom(
            1,
            s,
            "power",
            std::sync::Arc::new(move |_, y: &[f64]| half_c * y[0].abs().powf(-1.0 - 2.0 * s)),
        )
        .unwrap();
        let (u, f) = gaussian_pair(1.0, s, 1).unwrap();
        let v = evaluate(&u, &custom, &[0.3], &QuadratureConfig::default()).unwrap();
        let exact = f.eval(&[0.3]).unwrap();
        assert!((v.value - exact).abs() < 1e-6, "{v:?} vs {exact}");
    }

    #[test]
    fn exterior_integral_forms() {
        let s = 0.75;
        let k = frac(s);
        let c = k.normalization();
        let cfg = QuadratureConfig::default();
        let closed = exterior_derivative_integral(&k, &[0.0], &[0], 3.0).unwrap();
        assert!((closed - c * 3f64.powf(-2.0 * s) / (2.0 * s)).abs() < 1e-15);
        for g in 0..=3 {
            let a = exterior_derivative_integral(&k, &[0.0], &[g], 3.0).unwrap();
            let b = exterior_derivative_integral_numeric(&k, &[0.0], &[g], 3.0, &cfg).unwrap();
            assert!((a - b).abs() <= 1e-8 * a, "γ={g}: {a} vs {b}");
            let d = exterior_derivative_integral(&k, &[0.0], &[g], 6.0).unwrap();
            assert!((d / a - 2f64.powf(-2.0 * s - g as f64)).abs() < 1e-14);
        }
        let i0 = exterior_derivative_integral(&k, &[0.0], &[0], 2.0).unwrap();
        let i1 = exterior_derivative_integral(&k, &[0.0], &[1], 2.0).unwrap();
        assert!((i1 / i0 - 2.0 * s / 2.0).abs() < 1e-14);
    }

    #[test]
    fn exterior_integral_two_dimensional() {
        let k = KernelSpec::fractional(2, 0.7).unwrap();
        let cfg = QuadratureConfig { tol: 1e-9, ..Default::default() };
        for gamma in [[0, 0], [1, 0], [1, 1]] {
            let a = exterior_derivative_integral(&k, &[0.0, 0.0], &gamma, 2.0).unwrap();
            let b = exterior_derivative_integral_numeric(&k, &[0.0, 0.0], &gamma, 2.0, &cfg).unwrap();
            assert!((a - b).abs() <= 1e-6 * a, "{gamma:?}: {a} vs {b}");
        }
    }

    #[test]
    fn proint_tables() {
        let k = frac(0.75);
        let cfg = QuadratureConfig::default();
        let hs: Vec<f64> = (3..=7).map(|e| 2f64.powi(-e)).collect();
        let rows = proint_convergence(&k, &[0.0], &[0], 2.0, &hs, &cfg).unwrap();
        for row in &rows {
            assert!((row.ratio - 1.0).abs() < 1e-9);
        }
        for (gamma, tol) in [(1, 1e-2), (2, 5e-2)] {
            let rows = proint_convergence(&k, &[0.0], &[gamma], 2.0, &hs, &cfg).unwrap();
            let errs: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
            assert!(*errs.last().unwrap() <= tol);
        }
        assert!(matches!(
            proint_convergence(&k, &[0.0], &[2], 2.0, &[0.7], &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
