//! Kernels `K(x, y)` and the structural assumptions on them.
//!
//! Kernels are positive: the fractional kernel is
//! `K_0(y) = (c_{n,s}/2) |y|^{-(n+2s)}`, so that `∫ δu K_0 = -(-Δ)^s u`.
//! The perturbed family is
//! `K(x,y) = (1 + ε φ(x) ψ(y/|y|)) K_0(y)` with `|ε| sup|φ| sup|ψ| < 1`.
//!
//! Suprema over `x ∈ B_1` and `y ∈ B_{r0} \ {0}` are estimated by rotated
//! Halton sampling followed by a coordinate-search refinement around the
//! extremal samples. Reported values are sampled, not certified.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{PartialTable, ScalarField};
use crate::jet::{JetPoly, Scalar};
use crate::lsq::least_squares;
use crate::sampling::{halton, to_ball, to_punctured_ball};
use crate::special::{fractional_normalization, ln_factorial};

/// Residual (RMS in log space) above which the `(K3)` growth law is not
/// considered consistent with the measured `H_k`.
pub const K3_RESIDUAL_TOL: f64 = 0.5;

/// User-supplied kernel evaluator `(x, y) ↦ K(x, y)`.
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelKind {
    Fractional,
    /// `(1 + ε φ(x) ψ(y/|y|)) K_0(y)`.
    Perturbed {
        eps: f64,
        phi: ScalarField,
        psi: ScalarField,
    },
    /// Evaluator only; derivatives are unavailable and checks that need
    /// them return [`Error::Unsupported`].
    Custom { name: String, eval: KernelFn },
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Fractional => write!(f, "Fractional"),
            KernelKind::Perturbed { eps, phi, psi } => f
                .debug_struct("Perturbed")
                .field("eps", eps)
                .field("phi", phi)
                .field("psi", psi)
                .finish(),
            KernelKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    n: usize,
    s: f64,
    c_ns: f64,
    kind: KernelKind,
}

fn check_order(n: usize, s: f64) -> Result<()> {
    if n != 1 && n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (1/2, 1), got {s}")));
    }
    Ok(())
}

fn norm2<T: Scalar>(y: &[T]) -> T {
    y.iter()
        .map(|c| c.square())
        .reduce(|a, b| a + b)
        .unwrap_or_else(T::zero)
}

/// `sup |φ|` over the unit ball: the closed-form bound when finite, a
/// fine sample otherwise.
fn ball_sup(phi: &ScalarField) -> Result<f64> {
    let b = phi.sup_bound();
    if b.is_finite() {
        return Ok(b);
    }
    let m = 400;
    let mut best: f64 = 0.0;
    match phi.dim() {
        1 => {
            for i in 0..=m {
                let x = -1.0 + 2.0 * i as f64 / m as f64;
                best = best.max(phi.eval(&[x])?.abs());
            }
        }
        _ => {
            let g = 80;
            for i in 0..=g {
                for j in 0..=g {
                    let x = [-1.0 + 2.0 * i as f64 / g as f64, -1.0 + 2.0 * j as f64 / g as f64];
                    if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                        best = best.max(phi.eval(&x)?.abs());
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `sup |ψ|` over the unit sphere (`{±1}` in one dimension).
fn sphere_sup(psi: &ScalarField) -> Result<f64> {
    match psi.dim() {
        1 => Ok(psi.eval(&[1.0])?.abs().max(psi.eval(&[-1.0])?.abs())),
        _ => {
            let m = 720;
            let mut best: f64 = 0.0;
            for i in 0..m {
                let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                best = best.max(psi.eval(&[th.cos(), th.sin()])?.abs());
            }
            Ok(best)
        }
    }
}

impl KernelSpec {
    pub fn fractional(n: usize, s: f64) -> Result<Self> {
        check_order(n, s)?;
        Ok(Self {
            n,
            s,
            c_ns: fractional_normalization(n, s),
            kind: KernelKind::Fractional,
        })
    }

    pub fn perturbed(n: usize, s: f64, eps: f64, phi: ScalarField, psi: ScalarField) -> Result<Self> {
        check_order(n, s)?;
        for f in [&phi, &psi] {
            if f.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.dim(),
                });
            }
        }
        if !(eps.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("|eps| must be < 1, got {eps}")));
        }
        let worst = eps.abs() * ball_sup(&phi)? * sphere_sup(&psi)?;
        if !(worst < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|eps| sup|phi| sup|psi| = {worst} must be < 1 for positivity"
            )));
        }
        Ok(Self {
            n,
            s,
            c_ns: fractional_normalization(n, s),
            kind: KernelKind::Perturbed { eps, phi, psi },
        })
    }

    pub fn custom(n: usize, s: f64, name: &str, eval: KernelFn) -> Result<Self> {
        check_order(n, s)?;
        Ok(Self {
            n,
            s,
            c_ns: fractional_normalization(n, s),
            kind: KernelKind::Custom {
                name: name.to_string(),
                eval,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `c_{n,s}`.
    pub fn normalization(&self) -> f64 {
        self.c_ns
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &str {
        match &self.kind {
            KernelKind::Fractional => "fractional",
            KernelKind::Perturbed { .. } => "perturbed",
            KernelKind::Custom { name, .. } => name,
        }
    }

    /// Homogeneity degree `n + 2s` of the singularity.
    pub fn order(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    /// True when `K(x, t ω) = m(x, ω) (c/2) t^{-(n+2s)}` for all `t > 0`.
    pub fn is_radially_homogeneous(&self) -> bool {
        !matches!(self.kind, KernelKind::Custom { .. })
    }

    /// True when `K` does not depend on `x`.
    pub fn is_translation_invariant(&self) -> bool {
        match &self.kind {
            KernelKind::Fractional => true,
            KernelKind::Perturbed { eps, .. } => *eps == 0.0,
            KernelKind::Custom { .. } => false,
        }
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for len in [x.len(), y.len()] {
            if len != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: len,
                });
            }
        }
        if y.iter().all(|c| *c == 0.0) {
            return Err(Error::SingularPoint);
        }
        Ok(())
    }

    /// `K_0(y) = (c/2) |y|^{-(n+2s)}` on any scalar type.
    pub fn homogeneous_part<T: Scalar>(&self, y: &[T]) -> T {
        norm2(y).powf(-self.order() / 2.0).scale(self.c_ns / 2.0)
    }

    /// `ψ(y/|y|) K_0(y)` for perturbed kernels.
    fn angular_part<T: Scalar>(&self, psi: &ScalarField, y: &[T]) -> Result<T> {
        let inv = norm2(y).powf(-0.5);
        let dir: Vec<T> = y.iter().map(|c| c.clone() * inv.clone()).collect();
        Ok(psi.eval_generic(&dir)? * self.homogeneous_part(y))
    }

    /// `m(x, ω)` in `K(x, tω) = m(x, ω) K_0(tω)`; `None` for custom kernels.
    pub fn modulation(&self, x: &[f64], omega: &[f64]) -> Result<Option<f64>> {
        match &self.kind {
            KernelKind::Fractional => Ok(Some(1.0)),
            KernelKind::Perturbed { eps, phi, psi } => {
                Ok(Some(1.0 + eps * phi.eval(x)? * psi.eval(omega)?))
            }
            KernelKind::Custom { .. } => Ok(None),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dims(x, y)?;
        match &self.kind {
            KernelKind::Custom { eval, .. } => Ok(eval(x, y)),
            _ => self.eval_generic(x, y),
        }
    }

    /// Evaluation on any scalar type; unsupported for custom kernels.
    pub fn eval_generic<T: Scalar>(&self, x: &[T], y: &[T]) -> Result<T> {
        match &self.kind {
            KernelKind::Fractional => Ok(self.homogeneous_part(y)),
            KernelKind::Perturbed { eps, phi, psi } => {
                let k0 = self.homogeneous_part(y);
                let m = (phi.eval_generic(x)? * self.angular_part(psi, y)?).scale(*eps);
                Ok(k0 + m)
            }
            KernelKind::Custom { .. } => Err(Error::Unsupported(
                "derivatives of a custom kernel are unchecked".into(),
            )),
        }
    }

    /// `D_y^θ K(x, y)` by jet arithmetic.
    pub fn y_derivative(&self, x: &[f64], y: &[f64], theta: &[usize]) -> Result<f64> {
        self.check_dims(x, y)?;
        if theta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: theta.len(),
            });
        }
        if theta.iter().all(|t| *t == 0) {
            return self.eval(x, y);
        }
        let m = *theta.iter().max().unwrap();
        let table = PartialTable::from_evaluator(
            y,
            m,
            |p| {
                let xs: Vec<JetPoly<f64>> = x.iter().map(|c| JetPoly::constant(*c)).collect();
                self.eval_generic(&xs, p)
            },
            |p| {
                let xs: Vec<JetPoly<JetPoly<f64>>> =
                    x.iter().map(|c| JetPoly::constant(JetPoly::constant(*c))).collect();
                self.eval_generic(&xs, p)
            },
        )?;
        Ok(table.get(theta))
    }

    /// `D_x^μ D_y^θ K(x, y)` using the product structure of the family.
    pub fn mixed_derivative(&self, x: &[f64], y: &[f64], mu: &[usize], theta: &[usize]) -> Result<f64> {
        self.check_dims(x, y)?;
        let tables = self.derivative_tables(x, y, mu.iter().chain(theta).copied().max().unwrap_or(0))?;
        Ok(tables.mixed(mu, theta))
    }

    fn derivative_tables(&self, x: &[f64], y: &[f64], m: usize) -> Result<DerivativeTables> {
        let k0 = PartialTable::from_evaluator(y, m, |p| Ok(self.homogeneous_part(p)), |p| {
            Ok(self.homogeneous_part(p))
        })?;
        let perturbation = match &self.kind {
            KernelKind::Fractional => None,
            KernelKind::Perturbed { eps, phi, psi } => {
                let g = PartialTable::from_evaluator(
                    y,
                    m,
                    |p| self.angular_part(psi, p),
                    |p| self.angular_part(psi, p),
                )?;
                let ph = phi.partials(x, m)?;
                Some((*eps, ph, g))
            }
            KernelKind::Custom { .. } => {
                return Err(Error::Unsupported(
                    "derivatives of a custom kernel are unchecked".into(),
                ))
            }
        };
        Ok(DerivativeTables { k0, perturbation })
    }

    /// Kernel tail mass `∫_{|y|>r} K(x, y) dy`, in closed form for the
    /// homogeneous families.
    pub fn tail_mass(&self, x: &[f64], r: f64) -> Result<f64> {
        let radial = self.c_ns / 2.0 * r.powf(-2.0 * self.s) / (2.0 * self.s);
        Ok(radial * self.angular_integral(x)?)
    }

    /// `∫_{S^{n-1}} m(x, ω) dω` (sum over `±1` in one dimension).
    pub fn angular_integral(&self, x: &[f64]) -> Result<f64> {
        match self.n {
            1 => {
                let a = self.modulation(x, &[1.0])?;
                let b = self.modulation(x, &[-1.0])?;
                match (a, b) {
                    (Some(a), Some(b)) => Ok(a + b),
                    _ => Err(Error::Unsupported("custom kernel has no angular profile".into())),
                }
            }
            _ => {
                let nodes = 128;
                let mut acc = 0.0;
                for i in 0..nodes {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
                    let m = self
                        .modulation(x, &[th.cos(), th.sin()])?
                        .ok_or_else(|| Error::Unsupported("custom kernel has no angular profile".into()))?;
                    acc += m;
                }
                Ok(acc * 2.0 * std::f64::consts::PI / nodes as f64)
            }
        }
    }
}

struct DerivativeTables {
    k0: PartialTable,
    perturbation: Option<(f64, PartialTable, PartialTable)>,
}

impl DerivativeTables {
    fn mixed(&self, mu: &[usize], theta: &[usize]) -> f64 {
        let mu_zero = mu.iter().all(|m| *m == 0);
        let base = if mu_zero { self.k0.get(theta) } else { 0.0 };
        match &self.perturbation {
            None => base,
            Some((eps, phi, g)) => base + eps * phi.get(mu) * g.get(theta),
        }
    }
}

/// Multi-indices of dimension `n` and total order `k`.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![k]],
        2 => (0..=k).map(|a| vec![a, k - a]).collect(),
        _ => unimplemented!("dimensions above 2"),
    }
}

/// Sampling budget and domain for the kernel checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub r0: f64,
    pub budget: usize,
    pub seed: u64,
    /// Coordinate-search rounds around the extremal samples.
    pub refine_rounds: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            r0: 0.5,
            budget: 4096,
            seed: 0,
            refine_rounds: 24,
        }
    }
}

/// Coordinate search in `[0,1)^d` maximizing `f`, starting from `start`.
fn refine_max<F>(start: &[f64], mut best: f64, rounds: usize, f: F) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut point = start.to_vec();
    let mut step = 1.0 / 64.0;
    for _ in 0..rounds {
        let mut improved = false;
        for d in 0..point.len() {
            for dir in [-1.0, 1.0] {
                let mut trial = point.clone();
                trial[d] = (trial[d] + dir * step).clamp(0.0, 1.0 - 1e-12);
                let v = f(&trial)?;
                if v > best {
                    best = v;
                    point = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((point, best))
}

fn split_sample(kernel: &KernelSpec, u: &[f64], r0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = kernel.n;
    (to_ball(&u[..n], 1.0), to_punctured_ball(&u[n..], r0))
}

/// Result of the `(K1)` check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K1Result {
    pub a0: f64,
    pub eta: f64,
    pub pass: bool,
}

/// Samples `|y|^{n+2s} K(x,y) / (2-2s)` over `x ∈ B_1`, `0 < |y| < r0`;
/// `a0` is the midpoint of the sampled range and `eta` its half-width.
pub fn check_k1(kernel: &KernelSpec, cfg: &SamplingConfig) -> Result<K1Result> {
    if !(cfg.r0 > 0.0) {
        return Err(Error::InvalidParameter("r0 must be positive".into()));
    }
    let n = kernel.n;
    let scale = 2.0 - 2.0 * kernel.s;
    let ratio = |u: &[f64]| -> Result<f64> {
        let (x, y) = split_sample(kernel, u, cfg.r0);
        let k = kernel.eval(&x, &y)?;
        if !(k > 0.0) {
            return Err(Error::NonPositiveKernel { value: k });
        }
        let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(r.powf(kernel.order()) * k / scale)
    };
    let samples = halton(cfg.budget.max(1), 2 * n, cfg.seed);
    let mut lo = (f64::INFINITY, samples[0].clone());
    let mut hi = (f64::NEG_INFINITY, samples[0].clone());
    for u in &samples {
        let v = ratio(u)?;
        if v < lo.0 {
            lo = (v, u.clone());
        }
        if v > hi.0 {
            hi = (v, u.clone());
        }
    }
    let (_, max) = refine_max(&hi.1, hi.0, cfg.refine_rounds, ratio)?;
    let (_, neg_min) = refine_max(&lo.1, -lo.0, cfg.refine_rounds, |u| Ok(-ratio(u)?))?;
    let min = -neg_min;
    let a0 = 0.5 * (max + min);
    let eta = 0.5 * (max - min);
    Ok(K1Result {
        a0,
        eta,
        pass: eta < a0 / 4.0,
    })
}

/// Sampled `H_0..H_m`: the largest `|D_x^μ D_y^θ K(x,y)| |y|^{n+2s+|θ|}`
/// over `|μ| + |θ| = k`, `x ∈ B_1`, `0 < |y| < r0`.
pub fn estimate_h(kernel: &KernelSpec, m: usize, cfg: &SamplingConfig) -> Result<Vec<f64>> {
    if m > 12 {
        return Err(Error::InvalidParameter(format!("H_k supported for k <= 12, got {m}")));
    }
    let n = kernel.n;
    let weighted = |u: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = split_sample(kernel, u, cfg.r0);
        let tables = kernel.derivative_tables(&x, &y, m)?;
        let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut out = vec![0.0; m + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            for j in 0..=k {
                // |μ| = j, |θ| = k - j
                for mu in multi_indices(n, j) {
                    for theta in multi_indices(n, k - j) {
                        let d = tables.mixed(&mu, &theta).abs();
                        let w = d * r.powf(kernel.order() + (k - j) as f64);
                        *slot = f64::max(*slot, w);
                    }
                }
            }
        }
        Ok(out)
    };
    // x-independent kernels need no x samples beyond one.
    let budget = if kernel.is_translation_invariant() && n == 1 {
        cfg.budget.clamp(1, 64)
    } else {
        cfg.budget.max(1)
    };
    let samples = halton(budget, 2 * n, cfg.seed);
    let mut best = vec![0.0; m + 1];
    let mut arg = vec![samples[0].clone(); m + 1];
    for u in &samples {
        let w = weighted(u)?;
        for k in 0..=m {
            if w[k] > best[k] {
                best[k] = w[k];
                arg[k] = u.clone();
            }
        }
    }
    if !kernel.is_translation_invariant() || n > 1 {
        for k in 0..=m {
            let (_, v) = refine_max(&arg[k], best[k], cfg.refine_rounds / 2, |u| Ok(weighted(u)?[k]))?;
            best[k] = v;
        }
    }
    Ok(best)
}

/// `H_k` for a single order.
pub fn estimate_hk(kernel: &KernelSpec, k: usize, cfg: &SamplingConfig) -> Result<f64> {
    Ok(estimate_h(kernel, k, cfg)?[k])
}

/// Fitted growth law `H_k ≈ e^{b} Λ^k (k!)^ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub lambda: f64,
    pub nu: f64,
    /// Intercept `b` of the log-linear fit.
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
}

/// Least squares of `ln H_k` on `(1, k, ln k!)`.
pub fn fit_kernel_growth(h: &[f64]) -> Result<GrowthFit> {
    if h.len() < 5 {
        return Err(Error::DegenerateFit(format!("need H_0..H_m with m >= 4, got {} values", h.len())));
    }
    if h.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("all H_k must be positive and finite".into()));
    }
    if h.iter().all(|v| *v == h[0]) {
        return Err(Error::DegenerateFit("all H_k are equal".into()));
    }
    let rows: Vec<Vec<f64>> = (0..h.len())
        .map(|k| vec![1.0, k as f64, ln_factorial(k)])
        .collect();
    let y: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&rows, &y)?;
    Ok(GrowthFit {
        lambda: fit.coefficients[1].exp(),
        nu: fit.coefficients[2],
        intercept: fit.coefficients[0],
        residual: fit.rms,
    })
}

/// Smallest `Λ` with `H_k ≤ Λ^k (k!)^ν` for every `k ≥ 1`, at fixed `ν`.
pub fn growth_envelope(h: &[f64], nu: f64) -> f64 {
    (1..h.len())
        .map(|k| ((h[k].ln() - nu * ln_factorial(k)) / k as f64).exp())
        .fold(0.0, f64::max)
}

/// Constants of the analyticity bound `|D^α K_0(y)| ≤ C j!/R^j` on `|y| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityProfile {
    /// Sphere suprema `max_{|y|=1, |α|=j} |D^α K_0(y)|`.
    pub sphere_sup: Vec<f64>,
    pub c: f64,
    pub radius: f64,
    /// `sphere_sup[j] R^j / j!`.
    pub ratios: Vec<f64>,
}

pub fn analyticity_profile(kernel: &KernelSpec, jmax: usize, angles: usize) -> Result<AnalyticityProfile> {
    let points: Vec<Vec<f64>> = match kernel.n {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..angles.max(1))
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / angles.max(1) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
    };
    let mut sup = vec![0.0f64; jmax + 1];
    for y in &points {
        let table = PartialTable::from_evaluator(y, jmax, |p| Ok(kernel.homogeneous_part(p)), |p| {
            Ok(kernel.homogeneous_part(p))
        })?;
        for (j, s) in sup.iter_mut().enumerate() {
            for alpha in multi_indices(kernel.n, j) {
                *s = s.max(table.get(&alpha).abs());
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..=jmax).map(|j| vec![1.0, j as f64]).collect();
    let y: Vec<f64> = (0..=jmax).map(|j| sup[j].ln() - ln_factorial(j)).collect();
    let fit = least_squares(&rows, &y)?;
    let radius = (-fit.coefficients[1]).exp();
    let ratios: Vec<f64> = (0..=jmax)
        .map(|j| (sup[j].ln() + j as f64 * radius.ln() - ln_factorial(j)).exp())
        .collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(AnalyticityProfile {
        sphere_sup: sup,
        c,
        radius,
        ratios,
    })
}

/// Diagnostic report for `(K1)`–`(K3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheckReport {
    pub kernel: String,
    pub n: usize,
    pub s: f64,
    pub c_ns: f64,
    pub sampling: SamplingConfig,
    pub a0: f64,
    pub eta: f64,
    pub r0: f64,
    pub k1_pass: bool,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub k2_pass: bool,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub nu: f64,
    pub fit_residual: f64,
    /// Smallest `Λ` at the fitted `ν` for which the growth law holds on the
    /// sampled `H_k`, `k ≥ 1`.
    pub lambda_envelope: f64,
    pub k3_pass: bool,
    /// Always `"sampled, not certified"`.
    pub certification: String,
}

impl KernelCheckReport {
    pub fn verdicts(&self) -> [(&'static str, bool); 3] {
        [("K1", self.k1_pass), ("K2", self.k2_pass), ("K3", self.k3_pass)]
    }
}

/// Runs `(K1)`, `(K2)` and `(K3)` with `H_0..H_m`.
pub fn check_kernel(kernel: &KernelSpec, m: usize, cfg: &SamplingConfig) -> Result<KernelCheckReport> {
    let k1 = check_k1(kernel, cfg)?;
    let h = estimate_h(kernel, m, cfg)?;
    let k2_pass = h.iter().all(|v| v.is_finite() && *v > 0.0);
    let growth = fit_kernel_growth(&h)?;
    let lambda_envelope = growth_envelope(&h, growth.nu);
    let k3_pass = k2_pass && h[0] <= 1.0 && lambda_envelope.is_finite() && growth.residual <= K3_RESIDUAL_TOL;
    Ok(KernelCheckReport {
        kernel: kernel.kind_name().to_string(),
        n: kernel.n,
        s: kernel.s,
        c_ns: kernel.c_ns,
        sampling: *cfg,
        a0: k1.a0,
        eta: k1.eta,
        r0: cfg.r0,
        k1_pass: k1.pass,
        h,
        k2_pass,
        lambda: growth.lambda,
        nu: growth.nu,
        fit_residual: growth.residual,
        lambda_envelope,
        k3_pass,
        certification: "sampled, not certified".into(),
    })
}

/// JSON description of a kernel:
/// `{"kind": "fractional", "n": 1, "s": 0.75}` or
/// `{"kind": "perturbed", "n": 1, "s": 0.75, "eps": 0.1, "phi": {...}, "psi": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub kind: String,
    #[serde(default = "default_dim")]
    pub n: usize,
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<ScalarField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<ScalarField>,
}

fn default_dim() -> usize {
    1
}

impl TryFrom<&KernelJson> for KernelSpec {
    type Error = Error;

    fn try_from(j: &KernelJson) -> Result<Self> {
        match j.kind.as_str() {
            "fractional" => KernelSpec::fractional(j.n, j.s),
            "perturbed" => {
                let missing = |k: &str| Error::Parse(format!("perturbed kernel needs '{k}'"));
                KernelSpec::perturbed(
                    j.n,
                    j.s,
                    j.eps.ok_or_else(|| missing("eps"))?,
                    j.phi.clone().ok_or_else(|| missing("phi"))?,
                    j.psi.clone().ok_or_else(|| missing("psi"))?,
                )
            }
            other => Err(Error::Parse(format!("unknown kernel kind '{other}'"))),
        }
    }
}

impl KernelSpec {
    pub fn to_json(&self) -> Result<KernelJson> {
        match &self.kind {
            KernelKind::Fractional => Ok(KernelJson {
                kind: "fractional".into(),
                n: self.n,
                s: self.s,
                eps: None,
                phi: None,
                psi: None,
            }),
            KernelKind::Perturbed { eps, phi, psi } => Ok(KernelJson {
                kind: "perturbed".into(),
                n: self.n,
                s: self.s,
                eps: Some(*eps),
                phi: Some(phi.clone()),
                psi: Some(psi.clone()),
            }),
            KernelKind::Custom { .. } => Err(Error::Unsupported("custom kernels are not serializable".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::pochhammer;

    fn frac(s: f64) -> KernelSpec {
        KernelSpec::fractional(1, s).unwrap()
    }

    /// `D^k |y|^{-a} = (-1)^k (a)_k sign(y)^k |y|^{-a-k}`.
    fn power_law_derivative(a: f64, k: usize, y: f64) -> f64 {
        let sign = if y < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let alt = if k % 2 == 1 { -1.0 } else { 1.0 };
        alt * sign * pochhammer(a, k) * y.abs().powf(-a - k as f64)
    }

    #[test]
    fn rejects_bad_order() {
        assert!(KernelSpec::fractional(1, 0.5).is_err());
        assert!(KernelSpec::fractional(1, 1.0).is_err());
        assert!(KernelSpec::fractional(3, 0.75).is_err());
    }

    #[test]
    fn homogeneity_and_positivity() {
        let k = frac(0.75);
        for &y in &[0.1, 0.7, -1.3, 4.0] {
            let a = k.eval(&[0.0], &[2.0 * y]).unwrap();
            let b = k.eval(&[0.0], &[y]).unwrap();
            assert!(b > 0.0);
            assert!((a / b - 2f64.powf(-2.5)).abs() < 1e-12);
        }
        assert_eq!(k.eval(&[0.0], &[0.0]), Err(Error::SingularPoint));
    }

    #[test]
    fn first_y_derivative() {
        let k = frac(0.75);
        let c = k.normalization();
        let d = k.y_derivative(&[0.0], &[1.0], &[1]).unwrap();
        assert!((d + 2.5 * c / 2.0).abs() < 1e-14);
        assert_eq!(k.y_derivative(&[0.0], &[0.6], &[0]).unwrap(), k.eval(&[0.0], &[0.6]).unwrap());
        for kk in 0..=8 {
            for &y in &[0.3, -0.9, 2.2] {
                let jet = k.y_derivative(&[0.0], &[y], &[kk]).unwrap();
                let exact = c / 2.0 * power_law_derivative(2.5, kk, y);
                assert!((jet - exact).abs() <= 1e-12 * exact.abs(), "k = {kk}, y = {y}");
            }
        }
    }

    #[test]
    fn fractional_k1() {
        let k = frac(0.75);
        let r = check_k1(&k, &SamplingConfig { budget: 512, ..Default::default() }).unwrap();
        let expected = k.normalization() / (2.0 * (2.0 - 1.5));
        assert!((r.a0 - expected).abs() < 1e-14);
        assert!(r.eta < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn zero_perturbation_matches_fractional() {
        let phi = ScalarField::trig(1.0, 0.0).unwrap();
        let psi = ScalarField::polynomial(vec![0.0, 1.0]).unwrap();
        let kp = KernelSpec::perturbed(1, 0.75, 0.0, phi, psi).unwrap();
        let cfg = SamplingConfig { budget: 256, ..Default::default() };
        let a = check_k1(&kp, &cfg).unwrap();
        let b = check_k1(&frac(0.75), &cfg).unwrap();
        assert!((a.a0 - b.a0).abs() < 1e-15 && a.eta < 1e-14);
    }

    #[test]
    fn perturbation_threshold_flips_k1() {
        // ratio ranges over a(1 ± ε); the verdict flips at ε = 1/4.
        let phi = ScalarField::trig(1.0, 0.0).unwrap();
        let psi = ScalarField::polynomial(vec![0.0, 1.0]).unwrap();
        let cfg = SamplingConfig { budget: 256, ..Default::default() };
        let verdict = |eps: f64| {
            let k = KernelSpec::perturbed(1, 0.75, eps, phi.clone(), psi.clone()).unwrap();
            check_k1(&k, &cfg).unwrap()
        };
        let (mut lo, mut hi) = (0.0, 0.9);
        assert!(verdict(lo).pass && !verdict(hi).pass);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if verdict(mid).pass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = verdict(hi);
        assert!(r.eta >= r.a0 / 4.0);
        assert!((hi - 0.25).abs() < 1e-6, "threshold {hi}");
    }

    #[test]
    fn positivity_guard() {
        let phi = ScalarField::trig(1.0, 0.0).unwrap();
        let psi = ScalarField::constant(1.0, 1);
        assert!(KernelSpec::perturbed(1, 0.75, 1.0, phi.clone(), psi.clone()).is_err());
        let neg: KernelFn = Arc::new(|_, _| -1.0);
        let k = KernelSpec::custom(1, 0.75, "negative", neg).unwrap();
        assert!(matches!(
            check_k1(&k, &SamplingConfig { budget: 16, ..Default::default() }),
            Err(Error::NonPositiveKernel { .. })
        ));
    }

    #[test]
    fn h_closed_form_fractional() {
        let s = 0.75;
        let k = frac(s);
        let c = k.normalization();
        let h = estimate_h(&k, 10, &SamplingConfig { budget: 64, ..Default::default() }).unwrap();
        assert!((h[0] - c / 2.0).abs() < 1e-14);
        for (kk, v) in h.iter().enumerate() {
            let exact = c / 2.0 * libm::tgamma(1.0 + 2.0 * s + kk as f64) / libm::tgamma(1.0 + 2.0 * s);
            assert!((v - exact).abs() <= 1e-8 * exact, "k = {kk}");
        }
    }

    #[test]
    fn perturbed_h_within_product_bound() {
        let s = 0.75;
        let eps = 0.2;
        let phi = ScalarField::trig(1.0, 0.0).unwrap();
        let psi = ScalarField::polynomial(vec![0.0, 1.0]).unwrap();
        let kp = KernelSpec::perturbed(1, s, eps, phi, psi).unwrap();
        let cfg = SamplingConfig { budget: 256, ..Default::default() };
        let hp = estimate_h(&kp, 6, &cfg).unwrap();
        let h0 = estimate_h(&frac(s), 6, &cfg).unwrap();
        // |D^μ cos| ≤ 1 and ψ(ŷ) = ±1 is locally constant, so
        // |D_x^μ D_y^θ K| ≤ (1 + ε) |D^θ K_0|.
        for k in 0..=6 {
            assert!(hp[k] <= (1.0 + eps) * h0[k] * (1.0 + 1e-12), "k = {k}");
            assert!(hp[k] >= h0[k] * (1.0 - eps));
        }
    }

    #[test]
    fn growth_fits() {
        let geo: Vec<f64> = (0..=10).map(|k| 3f64.powi(k)).collect();
        let g = fit_kernel_growth(&geo).unwrap();
        assert!(g.nu.abs() < 1e-10 && (g.lambda - 3.0).abs() < 1e-9 && g.residual <= 1e-10);
        let fac2: Vec<f64> = (0..=10).map(|k| ln_factorial(k).exp().powi(2)).collect();
        let g = fit_kernel_growth(&fac2).unwrap();
        assert!((g.nu - 2.0).abs() < 1e-8 && g.residual <= 1e-6);
        assert!(fit_kernel_growth(&[2.0; 6]).is_err());
        assert!(fit_kernel_growth(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn fractional_growth_fit_matches_closed_form() {
        let s = 0.75;
        let k = frac(s);
        let h = estimate_h(&k, 10, &SamplingConfig { budget: 16, ..Default::default() }).unwrap();
        let exact: Vec<f64> = (0..=10)
            .map(|j| k.normalization() / 2.0 * pochhammer(1.0 + 2.0 * s, j))
            .collect();
        let a = fit_kernel_growth(&h).unwrap();
        let b = fit_kernel_growth(&exact).unwrap();
        assert!((a.nu - b.nu).abs() < 1e-8 && (a.lambda - b.lambda).abs() < 1e-8);
        // H_k = (c/2)(1+2s)_k ~ k! k^{2s}: the polynomial factor is shared
        // between the k and ln k! regressors on 0..10.
        assert!(a.nu > 0.6 && a.nu < 1.0, "nu = {}", a.nu);
        assert!(growth_envelope(&h, 1.0).is_finite());
    }

    #[test]
    fn analyticity_ratios_bounded() {
        for n in [1, 2] {
            let k = KernelSpec::fractional(n, 0.75).unwrap();
            let p = analyticity_profile(&k, 10, 32).unwrap();
            let lo = p.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(p.c / lo < 10.0, "n = {n}: {:?}", p.ratios);
        }
    }

    #[test]
    fn two_dimensional_derivatives_are_homogeneous() {
        let k = KernelSpec::fractional(2, 0.6).unwrap();
        let y = [0.4, -0.3];
        let lam = 1.7;
        let ys = [lam * y[0], lam * y[1]];
        for theta in [[1, 0], [2, 1], [0, 3], [2, 2]] {
            let a = k.y_derivative(&[0.0, 0.0], &ys, &theta).unwrap();
            let b = k.y_derivative(&[0.0, 0.0], &y, &theta).unwrap();
            let deg = -(2.0 + 1.2 + (theta[0] + theta[1]) as f64);
            assert!((a - lam.powf(deg) * b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn json_round_trip() {
        let j: KernelJson = serde_json::from_str(r#"{"kind":"fractional","n":1,"s":0.75}"#).unwrap();
        let k = KernelSpec::try_from(&j).unwrap();
        assert_eq!(k.to_json().unwrap(), j);
        let bad: KernelJson = serde_json::from_str(r#"{"kind":"perturbed","s":0.75}"#).unwrap();
        assert!(KernelSpec::try_from(&bad).is_err());
    }
}
