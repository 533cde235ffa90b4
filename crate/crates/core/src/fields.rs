//! Manufactured test functions with exact jet access.
//!
//! A [`ScalarField`] is an expression tree over a handful of analytic
//! primitives. The same tree is evaluated on `f64` for values, on
//! [`JetPoly<f64>`] for directional Taylor expansions, and on
//! `JetPoly<JetPoly<f64>>` for mixed partials in two dimensions. Each node
//! carries a closed-form value range (from which the sup bound follows) and a
//! decay descriptor used by the tail quadrature.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::jet::{factorial_f64, JetPoly, Scalar};

/// Largest jet order served by [`ScalarField::jet`].
pub const MAX_JET_ORDER: usize = 24;

/// Behaviour of a field as `|x| → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// Not bounded on `R^n`.
    Unbounded,
    BoundedOnly,
    /// `|u(x)| ≲ |x|^{-power}`.
    Algebraic { power: f64 },
    /// `|u(x)| ≲ exp(-rate |x|^2)`.
    GaussianLike { rate: f64 },
    /// Vanishes outside the ball of the given radius.
    Compact { radius: f64 },
}

impl Decay {
    fn rank(&self) -> u8 {
        match self {
            Decay::Unbounded => 0,
            Decay::BoundedOnly => 1,
            Decay::Algebraic { .. } => 2,
            Decay::GaussianLike { .. } => 3,
            Decay::Compact { .. } => 4,
        }
    }

    /// True when the tail integral can be computed by mapped quadrature.
    pub fn decays(&self) -> bool {
        self.rank() >= 2
    }

    /// The slower of two decay laws.
    fn weakest(self, other: Decay) -> Decay {
        use Decay::*;
        match (self, other) {
            (Algebraic { power: a }, Algebraic { power: b }) => Algebraic { power: a.min(b) },
            (GaussianLike { rate: a }, GaussianLike { rate: b }) => GaussianLike { rate: a.min(b) },
            (Compact { radius: a }, Compact { radius: b }) => Compact { radius: a.max(b) },
            (a, b) => {
                if a.rank() <= b.rank() {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// The faster of two decay laws.
    fn strongest(self, other: Decay) -> Decay {
        use Decay::*;
        match (self, other) {
            (Algebraic { power: a }, Algebraic { power: b }) => Algebraic { power: a.max(b) },
            (GaussianLike { rate: a }, GaussianLike { rate: b }) => GaussianLike { rate: a.max(b) },
            (Compact { radius: a }, Compact { radius: b }) => Compact { radius: a.min(b) },
            (a, b) => {
                if a.rank() >= b.rank() {
                    a
                } else {
                    b
                }
            }
        }
    }
}

/// Where the field is `C^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Everywhere,
    /// Smooth wherever the bases of non-integer powers are positive.
    PositiveBases,
}

/// Field node kinds. Leaves with an `axis` depend on that coordinate only.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    /// `cos(ω x_axis + φ)`.
    Trig { omega: f64, phi: f64 },
    /// `exp(-α |x|^2)`.
    Gaussian { alpha: f64 },
    /// `1 / (1 + |x|^2)`.
    Lorentzian,
    /// `exp(-1 / (1 - |x|^2))` in the unit ball, zero outside.
    FlatBump,
    /// `Σ_i c_i x_axis^i`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(rate x_axis)`.
    Exp { rate: f64 },
    /// `amplitude · 1F1(a; b; -α |x|^2)`, evaluated through Kummer's
    /// transformation. With `a = n/2 + s`, `b = n/2` this is the fractional
    /// Laplacian of a Gaussian up to a constant.
    Hyp1F1 { a: f64, b: f64, alpha: f64, amplitude: f64 },
    Sum(Vec<ScalarField>),
    Product(Vec<ScalarField>),
    Scale { factor: f64, child: Box<ScalarField> },
    /// `x ↦ child(x + offset)`.
    Translate { offset: Vec<f64>, child: Box<ScalarField> },
    /// `child^exponent`.
    Power { exponent: f64, child: Box<ScalarField> },
}

/// A function on `R^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    kind: FieldKind,
    dim: usize,
    axis: usize,
    range: (f64, f64),
    decay: Decay,
    smoothness: Smoothness,
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn interval_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let m = |x: f64, y: f64| if x == 0.0 || y == 0.0 { 0.0 } else { x * y };
    let c = [m(a.0, b.0), m(a.0, b.1), m(a.1, b.0), m(a.1, b.1)];
    (
        c.iter().cloned().fold(f64::INFINITY, f64::min),
        c.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

impl ScalarField {
    pub fn new(kind: FieldKind, dim: usize) -> Result<Self> {
        Self::with_axis(kind, dim, 0)
    }

    /// Like [`ScalarField::new`] for leaves that act along coordinate `axis`.
    pub fn with_axis(kind: FieldKind, dim: usize, axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if axis >= dim {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range for dimension {dim}")));
        }
        let (range, decay, smoothness) = Self::describe(&kind, dim)?;
        Ok(Self {
            kind,
            dim,
            axis,
            range,
            decay,
            smoothness,
        })
    }

    fn describe(kind: &FieldKind, dim: usize) -> Result<((f64, f64), Decay, Smoothness)> {
        use FieldKind::*;
        let inf = f64::INFINITY;
        let children_ok = |children: &[ScalarField]| -> Result<()> {
            for c in children {
                if c.dim != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: c.dim,
                    });
                }
            }
            Ok(())
        };
        let smooth_all = |children: &[&ScalarField]| {
            if children.iter().all(|c| c.smoothness == Smoothness::Everywhere) {
                Smoothness::Everywhere
            } else {
                Smoothness::PositiveBases
            }
        };
        Ok(match kind {
            Trig { omega, phi } => {
                finite("omega", *omega)?;
                finite("phi", *phi)?;
                if *omega == 0.0 {
                    let c = phi.cos();
                    ((c, c), Decay::BoundedOnly, Smoothness::Everywhere)
                } else {
                    ((-1.0, 1.0), Decay::BoundedOnly, Smoothness::Everywhere)
                }
            }
            Gaussian { alpha } => {
                if !(finite("alpha", *alpha)? > 0.0) {
                    return Err(Error::InvalidParameter("gaussian needs alpha > 0".into()));
                }
                ((0.0, 1.0), Decay::GaussianLike { rate: *alpha }, Smoothness::Everywhere)
            }
            Lorentzian => ((0.0, 1.0), Decay::Algebraic { power: 2.0 }, Smoothness::Everywhere),
            FlatBump => ((0.0, (-1.0f64).exp()), Decay::Compact { radius: 1.0 }, Smoothness::Everywhere),
            Polynomial { coeffs } => {
                for c in coeffs {
                    finite("polynomial coefficient", *c)?;
                }
                let degree = coeffs.iter().rposition(|c| *c != 0.0);
                match degree {
                    None => ((0.0, 0.0), Decay::Compact { radius: 0.0 }, Smoothness::Everywhere),
                    Some(0) => ((coeffs[0], coeffs[0]), Decay::BoundedOnly, Smoothness::Everywhere),
                    Some(_) => ((-inf, inf), Decay::Unbounded, Smoothness::Everywhere),
                }
            }
            Exp { rate } => {
                if finite("rate", *rate)? == 0.0 {
                    ((1.0, 1.0), Decay::BoundedOnly, Smoothness::Everywhere)
                } else {
                    ((0.0, inf), Decay::Unbounded, Smoothness::Everywhere)
                }
            }
            Hyp1F1 { a, b, alpha, amplitude } => {
                finite("a", *a)?;
                finite("amplitude", *amplitude)?;
                if !(finite("b", *b)? > 0.0) || !(finite("alpha", *alpha)? > 0.0) || !(*a > 0.0) {
                    return Err(Error::InvalidParameter("hyp1f1 needs a > 0, b > 0, alpha > 0".into()));
                }
                let bound = amplitude.abs() * hyp1f1_sup(*a, *b);
                ((-bound, bound), Decay::Algebraic { power: 2.0 * a }, Smoothness::Everywhere)
            }
            Sum(children) => {
                if children.is_empty() {
                    return Err(Error::InvalidParameter("sum needs at least one child".into()));
                }
                children_ok(children)?;
                let lo = children.iter().map(|c| c.range.0).sum();
                let hi = children.iter().map(|c| c.range.1).sum();
                let decay = children
                    .iter()
                    .map(|c| c.decay)
                    .reduce(Decay::weakest)
                    .unwrap_or(Decay::BoundedOnly);
                let refs: Vec<&ScalarField> = children.iter().collect();
                ((lo, hi), decay, smooth_all(&refs))
            }
            Product(children) => {
                if children.is_empty() {
                    return Err(Error::InvalidParameter("product needs at least one child".into()));
                }
                children_ok(children)?;
                let range = children
                    .iter()
                    .map(|c| c.range)
                    .reduce(interval_mul)
                    .unwrap_or((1.0, 1.0));
                let decay = if children.iter().any(|c| c.decay == Decay::Unbounded) {
                    Decay::Unbounded
                } else {
                    children
                        .iter()
                        .map(|c| c.decay)
                        .reduce(Decay::strongest)
                        .unwrap_or(Decay::BoundedOnly)
                };
                let refs: Vec<&ScalarField> = children.iter().collect();
                (range, decay, smooth_all(&refs))
            }
            Scale { factor, child } => {
                children_ok(std::slice::from_ref(child))?;
                finite("factor", *factor)?;
                let range = interval_mul((*factor, *factor), child.range);
                let decay = if *factor == 0.0 { Decay::Compact { radius: 0.0 } } else { child.decay };
                (range, decay, child.smoothness)
            }
            Translate { offset, child } => {
                children_ok(std::slice::from_ref(child))?;
                if offset.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: offset.len(),
                    });
                }
                for o in offset {
                    finite("offset", *o)?;
                }
                (child.range, child.decay, child.smoothness)
            }
            Power { exponent, child } => {
                children_ok(std::slice::from_ref(child))?;
                let e = finite("exponent", *exponent)?;
                let integer = e >= 0.0 && e.fract() == 0.0 && e <= i32::MAX as f64;
                let (lo, hi) = child.range;
                if integer {
                    let k = e as i32;
                    let range = if k == 0 {
                        (1.0, 1.0)
                    } else if k % 2 == 0 {
                        let top = lo.abs().max(hi.abs()).powi(k);
                        let bottom = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()).powi(k) };
                        (bottom, top)
                    } else {
                        (lo.powi(k), hi.powi(k))
                    };
                    let decay = if k == 0 {
                        Decay::BoundedOnly
                    } else if range.1.is_finite() && range.0.is_finite() {
                        child.decay
                    } else {
                        Decay::Unbounded
                    };
                    (range, decay, child.smoothness)
                } else if lo > 0.0 {
                    let (a, b) = (lo.powf(e), hi.powf(e));
                    let range = (a.min(b), a.max(b));
                    let decay = if range.1.is_finite() { Decay::BoundedOnly } else { Decay::Unbounded };
                    (range, decay, child.smoothness)
                } else {
                    let range = if e > 0.0 { (0.0, hi.max(0.0).powf(e)) } else { (0.0, f64::INFINITY) };
                    let decay = if range.1.is_finite() { Decay::BoundedOnly } else { Decay::Unbounded };
                    (range, decay, Smoothness::PositiveBases)
                }
            }
        })
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::new(FieldKind::Polynomial { coeffs: vec![value] }, dim).expect("constant field")
    }

    /// `cos(ω x_1 + φ)` in one dimension.
    pub fn trig(omega: f64, phi: f64) -> Result<Self> {
        Self::new(FieldKind::Trig { omega, phi }, 1)
    }

    pub fn gaussian(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(FieldKind::Gaussian { alpha }, dim)
    }

    pub fn lorentzian(dim: usize) -> Result<Self> {
        Self::new(FieldKind::Lorentzian, dim)
    }

    pub fn flat_bump(dim: usize) -> Result<Self> {
        Self::new(FieldKind::FlatBump, dim)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(FieldKind::Polynomial { coeffs }, 1)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(FieldKind::Exp { rate }, 1)
    }

    pub fn sum(children: Vec<ScalarField>) -> Result<Self> {
        let dim = children.first().map(|c| c.dim).unwrap_or(1);
        Self::new(FieldKind::Sum(children), dim)
    }

    pub fn product(children: Vec<ScalarField>) -> Result<Self> {
        let dim = children.first().map(|c| c.dim).unwrap_or(1);
        Self::new(FieldKind::Product(children), dim)
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        let dim = self.dim;
        Self::new(FieldKind::Scale { factor, child: Box::new(self) }, dim)
    }

    pub fn translated(self, offset: Vec<f64>) -> Result<Self> {
        let dim = self.dim;
        Self::new(FieldKind::Translate { offset, child: Box::new(self) }, dim)
    }

    pub fn powered(self, exponent: f64) -> Result<Self> {
        let dim = self.dim;
        Self::new(FieldKind::Power { exponent, child: Box::new(self) }, dim)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Closed-form enclosure `[inf u, sup u]` over `R^n`.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Bound on `‖u‖_{L^∞(R^n)}` (infinite for unbounded fields).
    pub fn sup_bound(&self) -> f64 {
        self.range.0.abs().max(self.range.1.abs())
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    fn check_point(&self, x: usize) -> Result<()> {
        if x == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x,
            })
        }
    }

    /// Point value.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x.len())?;
        self.eval_generic(x)
    }

    /// Evaluates the expression on any [`Scalar`].
    pub fn eval_generic<T: Scalar>(&self, x: &[T]) -> Result<T> {
        use FieldKind::*;
        let r2 = || x.iter().map(|c| c.square()).reduce(|a, b| a + b).unwrap_or_else(T::zero);
        Ok(match &self.kind {
            Trig { omega, phi } => x[self.axis].scale(*omega).add_f64(*phi).sin_cos().1,
            Gaussian { alpha } => r2().scale(-alpha).exp(),
            Lorentzian => r2().add_f64(1.0).recip(),
            FlatBump => {
                let q = r2();
                if q.value() >= 1.0 {
                    T::zero()
                } else {
                    let g = (-q).add_f64(1.0).recip();
                    if g.value() > 745.0 {
                        T::zero()
                    } else {
                        (-g).exp()
                    }
                }
            }
            Polynomial { coeffs } => {
                let t = &x[self.axis];
                let mut acc = T::from_f64(*coeffs.last().unwrap_or(&0.0));
                for c in coeffs.iter().rev().skip(1) {
                    acc = (acc * t.clone()).add_f64(*c);
                }
                acc
            }
            Exp { rate } => x[self.axis].scale(*rate).exp(),
            Hyp1F1 { a, b, alpha, amplitude } => {
                let z = r2().scale(*alpha);
                kummer_series(&z, b - a, *b).scale(*amplitude) * (-z).exp()
            }
            Sum(children) => {
                let mut acc = children[0].eval_generic(x)?;
                for c in &children[1..] {
                    acc = acc + c.eval_generic(x)?;
                }
                acc
            }
            Product(children) => {
                let mut acc = children[0].eval_generic(x)?;
                for c in &children[1..] {
                    acc = acc * c.eval_generic(x)?;
                }
                acc
            }
            Scale { factor, child } => child.eval_generic(x)?.scale(*factor),
            Translate { offset, child } => {
                let shifted: Vec<T> = x.iter().zip(offset).map(|(c, o)| c.add_f64(*o)).collect();
                child.eval_generic(&shifted)?
            }
            Power { exponent, child } => {
                let base = child.eval_generic(x)?;
                let e = *exponent;
                if e >= 0.0 && e.fract() == 0.0 && e <= i32::MAX as f64 {
                    base.powi(e as i32)
                } else if base.value() > 0.0 {
                    base.powf(e)
                } else {
                    return Err(Error::NonSmooth(format!(
                        "power {e} of a non-positive base ({})",
                        base.value()
                    )));
                }
            }
        })
    }

    /// Taylor coefficients `a_0..a_m` of `t ↦ u(x + t v)`.
    pub fn jet(&self, x: &[f64], v: &[f64], m: usize) -> Result<JetPoly<f64>> {
        self.check_point(x.len())?;
        self.check_point(v.len())?;
        if m > MAX_JET_ORDER {
            return Err(Error::JetOrderOverflow {
                order: m,
                max: MAX_JET_ORDER,
            });
        }
        let vars: Vec<JetPoly<f64>> = x
            .iter()
            .zip(v)
            .map(|(&xi, &vi)| JetPoly::variable(xi, vi, m))
            .collect();
        Ok(self.eval_generic(&vars)?.truncate(m))
    }

    /// All partials `∂^α u(x)` with `α_i ≤ m` (tensor-product truncation).
    pub fn partials(&self, x: &[f64], m: usize) -> Result<PartialTable> {
        self.check_point(x.len())?;
        if m > MAX_JET_ORDER {
            return Err(Error::JetOrderOverflow {
                order: m,
                max: MAX_JET_ORDER,
            });
        }
        PartialTable::from_evaluator(x, m, |p| self.eval_generic(p), |p| self.eval_generic(p))
    }

    /// `∂^γ u(x)`.
    pub fn derivative(&self, x: &[f64], gamma: &[usize]) -> Result<f64> {
        self.check_point(x.len())?;
        self.check_point(gamma.len())?;
        let nonzero: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i] > 0).collect();
        match nonzero.as_slice() {
            [] => self.eval(x),
            [axis] => {
                let mut e = vec![0.0; self.dim];
                e[*axis] = 1.0;
                Ok(self.jet(x, &e, gamma[*axis])?.derivative(gamma[*axis]))
            }
            _ => {
                let m = *gamma.iter().max().unwrap();
                Ok(self.partials(x, m)?.get(gamma))
            }
        }
    }

    /// `|∇^q u(x)|` for `q = 0..=m`, taken as the largest `|∂^α u(x)|` over
    /// multi-indices with `|α| = q`.
    pub fn gradient_norms(&self, x: &[f64], m: usize) -> Result<Vec<f64>> {
        if self.dim == 1 {
            let jet = self.jet(x, &[1.0], m)?;
            Ok((0..=m).map(|q| jet.derivative(q).abs()).collect())
        } else {
            Ok(self.partials(x, m)?.norms(m))
        }
    }
}

/// Mixed partial derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTable {
    dim: usize,
    order: usize,
    /// Row-major `(m+1)^dim` array of `∂^α u`.
    values: Vec<f64>,
}

impl PartialTable {
    /// Builds the table from an evaluator generic over the jet types that
    /// Rust closures cannot abstract over; callers pass the same expression
    /// twice.
    pub fn from_evaluator<F1, F2>(x: &[f64], m: usize, eval1: F1, eval2: F2) -> Result<Self>
    where
        F1: Fn(&[JetPoly<f64>]) -> Result<JetPoly<f64>>,
        F2: Fn(&[JetPoly<JetPoly<f64>>]) -> Result<JetPoly<JetPoly<f64>>>,
    {
        match x.len() {
            1 => {
                let jet = eval1(&[JetPoly::variable(x[0], 1.0, m)])?;
                let values = (0..=m).map(|k| jet.derivative(k)).collect();
                Ok(Self { dim: 1, order: m, values })
            }
            2 => {
                let outer = JetPoly::variable(JetPoly::constant(x[0]), JetPoly::constant(1.0), m);
                let inner = JetPoly::constant(JetPoly::variable(x[1], 1.0, m));
                let jet = eval2(&[outer, inner])?;
                let mut values = vec![0.0; (m + 1) * (m + 1)];
                for a in 0..=m {
                    let row = jet.coeff(a);
                    for b in 0..=m {
                        values[a * (m + 1) + b] = row.coeff(b) * factorial_f64(a) * factorial_f64(b);
                    }
                }
                Ok(Self { dim: 2, order: m, values })
            }
            n => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∂^α`; zero outside the stored range.
    pub fn get(&self, alpha: &[usize]) -> f64 {
        let m = self.order;
        match (self.dim, alpha) {
            (1, [a]) if *a <= m => self.values[*a],
            (2, [a, b]) if *a <= m && *b <= m => self.values[a * (m + 1) + b],
            _ => 0.0,
        }
    }

    /// Largest `|∂^α|` over `|α| = q`, for `q = 0..=min(order, qmax)`.
    pub fn norms(&self, qmax: usize) -> Vec<f64> {
        let top = qmax.min(self.order);
        (0..=top)
            .map(|q| match self.dim {
                1 => self.values[q].abs(),
                _ => (0..=q)
                    .map(|a| self.get(&[a, q - a]).abs())
                    .fold(0.0, f64::max),
            })
            .collect()
    }
}

/// `Σ_k (p)_k / ((b)_k k!) z^k` by Horner, with enough terms for `z(0)`.
fn kummer_series<T: Scalar>(z: &T, p: f64, b: f64) -> T {
    let z0 = z.value().abs();
    let terms = (2.0 * z0 + 60.0).ceil().min(2000.0) as usize;
    let mut acc = T::from_f64(1.0);
    for k in (0..terms).rev() {
        let ratio = (p + k as f64) / ((b + k as f64) * (k as f64 + 1.0));
        acc = (acc * z.clone()).scale(ratio).add_f64(1.0);
    }
    acc
}

/// Sampled bound on `|1F1(a; b; -z)|` over `z ≥ 0`. Beyond the sampled
/// window the function decays like `z^{-a}` and is dominated by the bound.
fn hyp1f1_sup(a: f64, b: f64) -> f64 {
    let n = 8000;
    let zmax = 400.0;
    let mut best: f64 = 1.0;
    for i in 0..=n {
        let z = zmax * (i as f64 / n as f64).powi(2);
        let v = kummer_series(&z, b - a, b) * (-z).exp();
        if v.is_finite() {
            best = best.max(v.abs());
        }
    }
    best * (1.0 + 1e-6)
}

/// Field description in the JSON expression-tree format
/// `{"kind": "...", "params": {...}, "children": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub children: Vec<FieldSpec>,
}

fn param(params: &Map<String, Value>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("missing numeric parameter '{key}'")))
}

fn param_or(params: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("parameter '{key}' must be a number"))),
    }
}

fn param_vec(params: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    params
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("missing array parameter '{key}'")))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::Parse(format!("'{key}' must hold numbers"))))
        .collect()
}

impl TryFrom<&FieldSpec> for ScalarField {
    type Error = Error;

    fn try_from(spec: &FieldSpec) -> Result<Self> {
        let p = &spec.params;
        let dim = param_or(p, "dim", 1.0)? as usize;
        let axis = param_or(p, "axis", 0.0)? as usize;
        let children: Vec<ScalarField> = spec
            .children
            .iter()
            .map(ScalarField::try_from)
            .collect::<Result<_>>()?;
        let leaf = |kind: FieldKind| -> Result<ScalarField> {
            if !children.is_empty() {
                return Err(Error::Parse(format!("'{}' takes no children", spec.kind)));
            }
            ScalarField::with_axis(kind, dim, axis)
        };
        let single = || -> Result<ScalarField> {
            match children.as_slice() {
                [c] => Ok(c.clone()),
                _ => Err(Error::Parse(format!("'{}' takes exactly one child", spec.kind))),
            }
        };
        match spec.kind.as_str() {
            "trig" => leaf(FieldKind::Trig {
                omega: param_or(p, "omega", 1.0)?,
                phi: param_or(p, "phi", 0.0)?,
            }),
            "gaussian" => leaf(FieldKind::Gaussian { alpha: param_or(p, "alpha", 1.0)? }),
            "lorentzian" => leaf(FieldKind::Lorentzian),
            "flat_bump" => leaf(FieldKind::FlatBump),
            "polynomial" => leaf(FieldKind::Polynomial { coeffs: param_vec(p, "coeffs")? }),
            "constant" => leaf(FieldKind::Polynomial { coeffs: vec![param(p, "value")?] }),
            "exp" => leaf(FieldKind::Exp { rate: param_or(p, "rate", 1.0)? }),
            "hyp1f1" => leaf(FieldKind::Hyp1F1 {
                a: param(p, "a")?,
                b: param(p, "b")?,
                alpha: param_or(p, "alpha", 1.0)?,
                amplitude: param_or(p, "amplitude", 1.0)?,
            }),
            "sum" => ScalarField::sum(children.clone()),
            "product" => ScalarField::product(children.clone()),
            "scale" => single()?.scaled(param(p, "factor")?),
            "translate" => single()?.translated(param_vec(p, "offset")?),
            "power" => single()?.powered(param(p, "exponent")?),
            other => Err(Error::Parse(format!("unknown field kind '{other}'"))),
        }
    }
}

impl From<&ScalarField> for FieldSpec {
    fn from(f: &ScalarField) -> Self {
        use FieldKind::*;
        let mut params = Map::new();
        let mut children = Vec::new();
        let leaf_params = |params: &mut Map<String, Value>| {
            params.insert("dim".into(), json!(f.dim));
            if f.axis != 0 {
                params.insert("axis".into(), json!(f.axis));
            }
        };
        let kind = match &f.kind {
            Trig { omega, phi } => {
                leaf_params(&mut params);
                params.insert("omega".into(), json!(omega));
                params.insert("phi".into(), json!(phi));
                "trig"
            }
            Gaussian { alpha } => {
                leaf_params(&mut params);
                params.insert("alpha".into(), json!(alpha));
                "gaussian"
            }
            Lorentzian => {
                leaf_params(&mut params);
                "lorentzian"
            }
            FlatBump => {
                leaf_params(&mut params);
                "flat_bump"
            }
            Polynomial { coeffs } => {
                leaf_params(&mut params);
                params.insert("coeffs".into(), json!(coeffs));
                "polynomial"
            }
            Exp { rate } => {
                leaf_params(&mut params);
                params.insert("rate".into(), json!(rate));
                "exp"
            }
            Hyp1F1 { a, b, alpha, amplitude } => {
                leaf_params(&mut params);
                params.insert("a".into(), json!(a));
                params.insert("b".into(), json!(b));
                params.insert("alpha".into(), json!(alpha));
                params.insert("amplitude".into(), json!(amplitude));
                "hyp1f1"
            }
            Sum(cs) => {
                children = cs.iter().map(FieldSpec::from).collect();
                "sum"
            }
            Product(cs) => {
                children = cs.iter().map(FieldSpec::from).collect();
                "product"
            }
            Scale { factor, child } => {
                params.insert("factor".into(), json!(factor));
                children.push(FieldSpec::from(child.as_ref()));
                "scale"
            }
            Translate { offset, child } => {
                params.insert("offset".into(), json!(offset));
                children.push(FieldSpec::from(child.as_ref()));
                "translate"
            }
            Power { exponent, child } => {
                params.insert("exponent".into(), json!(exponent));
                children.push(FieldSpec::from(child.as_ref()));
                "power"
            }
        };
        FieldSpec {
            kind: kind.into(),
            params,
            children,
        }
    }
}

impl ScalarField {
    pub fn from_json(value: &Value) -> Result<Self> {
        let spec: FieldSpec = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        ScalarField::try_from(&spec)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(FieldSpec::from(self)).expect("field spec serializes")
    }
}

impl Serialize for ScalarField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FieldSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = FieldSpec::deserialize(deserializer)?;
        ScalarField::try_from(&spec).map_err(serde::de::Error::custom)
    }
}

/// The exact pair `u = cos(ω x + φ)`, `f = -ω^{2s} cos(ω x + φ)`, which
/// satisfies `∫ δu(x,y) K_0(y) dy = f` for the one-dimensional fractional
/// kernel.
pub fn trig_pair(omega: f64, phi: f64, s: f64) -> Result<(ScalarField, ScalarField)> {
    let u = ScalarField::trig(omega, phi)?;
    let f = u.clone().scaled(-omega.abs().powf(2.0 * s))?;
    Ok((u, f))
}

/// The exact pair `u = exp(-α|x|^2)` and its image under the fractional
/// kernel operator: `f = -α^s 4^s Γ(n/2+s)/Γ(n/2) · 1F1(n/2+s; n/2; -α|x|^2)`.
pub fn gaussian_pair(alpha: f64, s: f64, dim: usize) -> Result<(ScalarField, ScalarField)> {
    let u = ScalarField::gaussian(alpha, dim)?;
    let half = dim as f64 / 2.0;
    let amplitude = -alpha.powf(s) * 4f64.powf(s) * libm::tgamma(half + s) / libm::tgamma(half);
    let f = ScalarField::new(
        FieldKind::Hyp1F1 {
            a: half + s,
            b: half,
            alpha,
            amplitude,
        },
        dim,
    )?;
    Ok((u, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::derivative_estimate;

    #[test]
    fn sup_bounds_and_decay() {
        let c = ScalarField::trig(1.0, 0.0).unwrap();
        assert_eq!(c.sup_bound(), 1.0);
        assert_eq!(c.decay(), Decay::BoundedOnly);
        let g = ScalarField::gaussian(1.0, 1).unwrap();
        assert_eq!(g.sup_bound(), 1.0);
        assert!(matches!(g.decay(), Decay::GaussianLike { .. }));
        let b = ScalarField::flat_bump(1).unwrap();
        assert_eq!(b.sup_bound(), (-1.0f64).exp());
        assert_eq!(b.eval(&[1.0]).unwrap(), 0.0);
        assert_eq!(b.eval(&[-3.0]).unwrap(), 0.0);
        assert_eq!(b.eval(&[0.0]).unwrap(), (-1.0f64).exp());
    }

    #[test]
    fn invalid_parameters() {
        assert!(ScalarField::gaussian(-1.0, 1).is_err());
        assert!(ScalarField::trig(f64::NAN, 0.0).is_err());
        assert!(ScalarField::gaussian(1.0, 3).is_err());
        let a = ScalarField::gaussian(1.0, 1).unwrap();
        let b = ScalarField::gaussian(1.0, 2).unwrap();
        assert!(ScalarField::sum(vec![a, b]).is_err());
    }

    #[test]
    fn exp_and_cos_jets() {
        let e = ScalarField::exponential(1.0).unwrap();
        let j = e.jet(&[0.0], &[1.0], 5).unwrap();
        for k in 0..=5 {
            assert!((j.coeff(k) - 1.0 / factorial_f64(k)).abs() < 1e-15);
        }
        let c = ScalarField::trig(1.0, 0.0).unwrap();
        let j = c.jet(&[0.0], &[1.0], 4).unwrap();
        let expected = [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0];
        for (k, v) in expected.iter().enumerate() {
            assert!((j.coeff(k) - v).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_bump_jet_against_stencil() {
        let b = ScalarField::flat_bump(1).unwrap();
        let j = b.jet(&[0.0], &[1.0], 2).unwrap();
        assert!((j.coeff(0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!(j.coeff(1).abs() < 1e-16);
        let est = derivative_estimate(&b, &[0.0], 2, &[1.0], 1e-3).unwrap();
        assert!((est - 2.0 * j.coeff(2)).abs() < 1e-6, "{est} vs {}", 2.0 * j.coeff(2));
    }

    #[test]
    fn polynomial_and_gaussian_derivatives() {
        let p = ScalarField::polynomial(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        for &x in &[-2.0, 0.0, 0.7] {
            assert_eq!(p.derivative(&[x], &[3]).unwrap(), 6.0);
        }
        let g = ScalarField::gaussian(1.0, 1).unwrap();
        assert_eq!(g.derivative(&[0.0], &[1]).unwrap(), 0.0);
        let d4 = g.derivative(&[0.0], &[4]).unwrap();
        assert!((d4 - 12.0).abs() < 1e-12);
        let est = derivative_estimate(&g, &[0.0], 4, &[1.0], 1e-2).unwrap();
        assert!((est - 12.0).abs() < 1e-2);
    }

    #[test]
    fn mixed_partials_in_two_dimensions() {
        // u = exp(-(x^2 + y^2)); ∂x∂y u = 4xy u
        let g = ScalarField::gaussian(1.0, 2).unwrap();
        let (x, y) = (0.3, -0.7);
        let d = g.derivative(&[x, y], &[1, 1]).unwrap();
        let expected = 4.0 * x * y * (-(x * x + y * y)).exp();
        assert!((d - expected).abs() < 1e-14);
        // pure axis derivative agrees with directional jet
        let dx2 = g.derivative(&[x, y], &[2, 0]).unwrap();
        let table = g.partials(&[x, y], 2).unwrap();
        assert!((dx2 - table.get(&[2, 0])).abs() < 1e-14);
    }

    #[test]
    fn non_smooth_power_refuses() {
        let id = ScalarField::polynomial(vec![0.0, 1.0]).unwrap();
        let root = id.powered(0.5).unwrap();
        assert_eq!(root.smoothness(), Smoothness::PositiveBases);
        assert!(root.jet(&[4.0], &[1.0], 3).is_ok());
        assert!(matches!(root.jet(&[-1.0], &[1.0], 3), Err(Error::NonSmooth(_))));
        let flat = ScalarField::flat_bump(1).unwrap();
        let j = flat.jet(&[1.0], &[1.0], 4).unwrap();
        assert!(j.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn jet_order_guard() {
        let g = ScalarField::gaussian(1.0, 1).unwrap();
        assert!(g.jet(&[0.0], &[1.0], 24).is_ok());
        assert!(matches!(
            g.jet(&[0.0], &[1.0], 25),
            Err(Error::JetOrderOverflow { .. })
        ));
    }

    #[test]
    fn json_tree_round_trip() {
        let spec = json!({
            "kind": "sum",
            "children": [
                {"kind": "trig", "params": {"omega": 2.0, "phi": 0.5}},
                {"kind": "scale", "params": {"factor": -0.5},
                 "children": [{"kind": "gaussian", "params": {"alpha": 1.5}}]}
            ]
        });
        let f = ScalarField::from_json(&spec).unwrap();
        let x = 0.4;
        let expected = (2.0 * x + 0.5f64).cos() - 0.5 * (-1.5 * x * x).exp();
        assert!((f.eval(&[x]).unwrap() - expected).abs() < 1e-15);
        let back = ScalarField::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(ScalarField::from_json(&json!({"kind": "nope"})).is_err());
        assert!(ScalarField::from_json(&json!({"kind": "scale", "params": {"factor": 1.0}})).is_err());
    }

    #[test]
    fn gaussian_image_at_origin() {
        // s → 1 limit of the amplitude: 4 Γ(3/2)/Γ(1/2) = 2 = -u''(0)
        let (_, f) = gaussian_pair(1.0, 0.9999999, 1).unwrap();
        assert!((f.eval(&[0.0]).unwrap() + 2.0).abs() < 1e-5);
    }
}
