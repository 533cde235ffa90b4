//! Norm ladders `N*_{R,p}`, `M^s_{R,p}`, Gevrey fits and the key criterion
//! `N*_{R,p} ≤ V Γ^p [p!]^σ`.
//!
//! Suprema over balls are sampled on spatial grids with jet-exact
//! derivatives and golden-section refinement of local maxima (1D); the sup
//! over `r ∈ (R/2, R)` is taken on an equispaced grid of the closed interval
//! with a golden-section pass around the grid argmax.

mod closure;
mod lemmas;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::lsq::least_squares;
use crate::special::ln_bracket_factorial;

pub use closure::{induction_bracket, induction_closure, ClosureResult, InductionConstants};
pub use lemmas::{
    calibrate, delta_schedule, fit_source_constants, verify_apriori, verify_apriori_with, verify_step,
    AprioriRow, Calibration, SourceFit, StepRow,
};

/// Largest `p_max` accepted by [`ladder`].
pub const MAX_LADDER_ORDER: usize = 18;
/// Largest `R` accepted by [`ladder`].
pub const MAX_RADIUS: f64 = 5.0;
const GOLDEN_ITERS: usize = 48;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[a, b]`; returns the best
/// point seen, endpoints included.
fn golden_max<F>(mut a: f64, mut b: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best = (a, f(a)?);
    let fb = f(b)?;
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_ITERS {
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best)
}

fn finite_norms(u: &ScalarField, x: &[f64], qmax: usize) -> Result<Vec<f64>> {
    let v = u.gradient_norms(x, qmax)?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonSmooth(format!("derivatives are not finite at {x:?}")));
    }
    Ok(v)
}

/// Sampled suprema `S(q, r) = sup_{B_r} |∇^q u|` for `q ≤ qmax`, `r ≤ radius`.
#[derive(Debug, Clone)]
pub struct SupProfile {
    field: ScalarField,
    radius: f64,
    qmax: usize,
    /// `(|x|, running max of |∇^q u| over samples with smaller |x|)`.
    prefix: Vec<(f64, Vec<f64>)>,
}

impl SupProfile {
    /// Samples `u` on `grid_points` equispaced points of `[-radius, radius]`
    /// (a polar grid in two dimensions) and refines local maxima.
    pub fn new(u: &ScalarField, radius: f64, qmax: usize, grid_points: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        let mut samples = match u.dim() {
            1 => Self::samples_1d(u, radius, qmax, grid_points.max(3))?,
            _ => Self::samples_2d(u, radius, qmax, grid_points.max(8))?,
        };
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut running = vec![0.0f64; qmax + 1];
        let prefix = samples
            .into_iter()
            .map(|(r, v)| {
                for (m, x) in running.iter_mut().zip(&v) {
                    *m = m.max(*x);
                }
                (r, running.clone())
            })
            .collect();
        Ok(Self {
            field: u.clone(),
            radius,
            qmax,
            prefix,
        })
    }

    fn samples_1d(u: &ScalarField, radius: f64, qmax: usize, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let xs: Vec<f64> = (0..n)
            .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
            .collect();
        let vals: Vec<Vec<f64>> = xs.iter().map(|&x| finite_norms(u, &[x], qmax)).collect::<Result<_>>()?;
        let mut out: Vec<(f64, Vec<f64>)> = xs.iter().zip(&vals).map(|(x, v)| (x.abs(), v.clone())).collect();
        for q in 0..=qmax {
            for i in 1..n - 1 {
                let (l, c, r) = (vals[i - 1][q], vals[i][q], vals[i + 1][q]);
                if c > 0.0 && c >= l && c >= r && (c > l || c > r) {
                    let (x, _) = golden_max(xs[i - 1], xs[i + 1], |x| {
                        Ok(u.jet(&[x], &[1.0], q)?.derivative(q).abs())
                    })?;
                    out.push((x.abs(), finite_norms(u, &[x], qmax)?));
                }
            }
        }
        Ok(out)
    }

    fn samples_2d(u: &ScalarField, radius: f64, qmax: usize, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let rings = (n as f64).sqrt().ceil() as usize;
        let angles = 2 * rings;
        let mut out = vec![(0.0, finite_norms(u, &[0.0, 0.0], qmax)?)];
        for j in 1..=rings {
            let rho = radius * j as f64 / rings as f64;
            for i in 0..angles {
                let th = 2.0 * std::f64::consts::PI * i as f64 / angles as f64;
                out.push((rho, finite_norms(u, &[rho * th.cos(), rho * th.sin()], qmax)?));
            }
        }
        Ok(out)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn qmax(&self) -> usize {
        self.qmax
    }

    /// `max |∇^q u|` over the sphere of radius `r` (`{±r}` in 1D).
    pub fn boundary(&self, r: f64) -> Result<Vec<f64>> {
        let pts: Vec<Vec<f64>> = match self.field.dim() {
            1 => vec![vec![r], vec![-r]],
            _ => (0..64)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect(),
        };
        let mut best = vec![0.0f64; self.qmax + 1];
        for p in pts {
            for (b, v) in best.iter_mut().zip(finite_norms(&self.field, &p, self.qmax)?) {
                *b = b.max(v);
            }
        }
        Ok(best)
    }

    /// Interior samples only: `max |∇^q u|` over samples with `|x| ≤ r`.
    fn interior(&self, q: usize, r: f64) -> f64 {
        let idx = self.prefix.partition_point(|(rr, _)| *rr <= r);
        if idx == 0 {
            0.0
        } else {
            self.prefix[idx - 1].1[q]
        }
    }

    /// `S(q, r)` for all `q` at once.
    pub fn sup_all(&self, r: f64) -> Result<Vec<f64>> {
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "radius {r} exceeds the sampled ball of radius {}",
                self.radius
            )));
        }
        let b = self.boundary(r)?;
        Ok((0..=self.qmax).map(|q| b[q].max(self.interior(q, r))).collect())
    }

    pub fn sup(&self, q: usize, r: f64) -> Result<f64> {
        if q > self.qmax {
            return Err(Error::MissingEntry(format!("derivative order {q} beyond {}", self.qmax)));
        }
        Ok(self.sup_all(r)?[q])
    }
}

/// The ladders `p ↦ N*_{R,p}(u)` for `p = -2..=p_max` and
/// `p ↦ M^s_{R,p}(f)` for `p = 0..=p_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLadder {
    #[serde(rename = "R")]
    pub r_big: f64,
    pub s: f64,
    pub p_max: usize,
    pub r_points: usize,
    pub spatial_points: usize,
    #[serde(rename = "Nstar")]
    pub nstar: BTreeMap<i64, f64>,
    #[serde(rename = "M")]
    pub m: BTreeMap<i64, f64>,
    /// Maximizing `r` for each `N*` entry.
    pub nstar_argmax: BTreeMap<i64, f64>,
    pub certification: String,
}

/// Grid and refinement controls for [`ladder_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub r_points: usize,
    pub spatial_points: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            r_points: 64,
            spatial_points: 512,
        }
    }
}

/// `sup_{r ∈ [R/2, R]} (R - r)^w S(q, r)`, grid plus golden refinement.
fn weighted_sup(profile: &SupProfile, grid: &[(f64, Vec<f64>)], big_r: f64, q: usize, w: f64) -> Result<(f64, f64)> {
    let weight = |r: f64| if w == 0.0 { 1.0 } else { (big_r - r).max(0.0).powf(w) };
    let mut best = (grid[0].0, f64::NEG_INFINITY);
    let mut arg = 0;
    for (i, (r, sups)) in grid.iter().enumerate() {
        let v = weight(*r) * sups[q];
        if v > best.1 {
            best = (*r, v);
            arg = i;
        }
    }
    if best.1 > 0.0 && grid.len() > 2 {
        let lo = grid[arg.saturating_sub(1)].0;
        let hi = grid[(arg + 1).min(grid.len() - 1)].0;
        let refined = golden_max(lo, hi, |r| Ok(weight(r) * profile.sup(q, r)?))?;
        if refined.1 > best.1 {
            best = refined;
        }
    }
    Ok((best.1.max(0.0), best.0))
}

/// Ladders with the default grids (64 radii, 512 spatial points).
pub fn ladder(u: &ScalarField, f: Option<&ScalarField>, big_r: f64, s: f64, p_max: usize, r_points: usize) -> Result<NormLadder> {
    ladder_with(
        u,
        f,
        big_r,
        s,
        p_max,
        &LadderConfig {
            r_points,
            ..Default::default()
        },
    )
}

pub fn ladder_with(
    u: &ScalarField,
    f: Option<&ScalarField>,
    big_r: f64,
    s: f64,
    p_max: usize,
    cfg: &LadderConfig,
) -> Result<NormLadder> {
    if !(big_r > 0.0 && big_r <= MAX_RADIUS) {
        return Err(Error::InvalidParameter(format!("R must lie in (0, {MAX_RADIUS}], got {big_r}")));
    }
    if p_max > MAX_LADDER_ORDER {
        return Err(Error::InvalidParameter(format!("p_max must be at most {MAX_LADDER_ORDER}, got {p_max}")));
    }
    if cfg.r_points < 2 {
        return Err(Error::InvalidParameter("need at least two radii".into()));
    }
    if let Some(f) = f {
        if f.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                got: f.dim(),
            });
        }
    }
    let radii: Vec<f64> = (0..cfg.r_points)
        .map(|i| big_r / 2.0 + big_r / 2.0 * i as f64 / (cfg.r_points - 1) as f64)
        .collect();

    let up = SupProfile::new(u, big_r, p_max + 2, cfg.spatial_points)?;
    let ugrid: Vec<(f64, Vec<f64>)> = radii.iter().map(|&r| Ok((r, up.sup_all(r)?))).collect::<Result<_>>()?;
    let mut nstar = BTreeMap::new();
    let mut nstar_argmax = BTreeMap::new();
    for p in -2..=p_max as i64 {
        let q = (p + 2) as usize;
        let (v, r) = weighted_sup(&up, &ugrid, big_r, q, (p + 2) as f64)?;
        nstar.insert(p, v);
        nstar_argmax.insert(p, r);
    }

    let mut m = BTreeMap::new();
    if let Some(f) = f {
        let fp = SupProfile::new(f, big_r, p_max + 1, cfg.spatial_points)?;
        let fgrid: Vec<(f64, Vec<f64>)> = radii.iter().map(|&r| Ok((r, fp.sup_all(r)?))).collect::<Result<_>>()?;
        for p in 0..=p_max as i64 {
            let q = (p + 1) as usize;
            let (v, _) = weighted_sup(&fp, &fgrid, big_r, q, 2.0 * s + p as f64 + 1.0)?;
            m.insert(p, v);
        }
    }
    Ok(NormLadder {
        r_big: big_r,
        s,
        p_max,
        r_points: cfg.r_points,
        spatial_points: cfg.spatial_points,
        nstar,
        m,
        nstar_argmax,
        certification: "sampled supremum".into(),
    })
}

impl NormLadder {
    /// Builds a ladder from explicit `N*` values for `p = -2, -1, 0, ..`.
    pub fn from_values(nstar: &[f64]) -> Self {
        let map: BTreeMap<i64, f64> = nstar.iter().enumerate().map(|(i, v)| (i as i64 - 2, *v)).collect();
        Self {
            r_big: f64::NAN,
            s: f64::NAN,
            p_max: nstar.len().saturating_sub(3),
            r_points: 0,
            spatial_points: 0,
            nstar: map,
            m: BTreeMap::new(),
            nstar_argmax: BTreeMap::new(),
            certification: "supplied".into(),
        }
    }

    pub fn nstar(&self, p: i64) -> Result<f64> {
        self.nstar
            .get(&p)
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("N*_{{R,{p}}}")))
    }

    pub fn m(&self, p: i64) -> Result<f64> {
        self.m
            .get(&p)
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("M_{{R,{p}}}")))
    }
}

/// Outcome of the key criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyCheck {
    /// `min_p (ln V + p ln Γ + σ ln[p!] - ln N*(p))`; `+∞` when every entry
    /// vanishes.
    pub log_margin: f64,
    pub worst_p: Option<i64>,
    pub pass: bool,
}

/// Log-space check of `N*(p) ≤ V Γ^p [p!]^σ` over the whole ladder.
pub fn check_key(ladder: &NormLadder, v: f64, gamma: f64, sigma: f64) -> KeyCheck {
    let (lv, lg) = (v.ln(), gamma.ln());
    let mut out = KeyCheck {
        log_margin: f64::INFINITY,
        worst_p: None,
        pass: true,
    };
    for (&p, &n) in &ladder.nstar {
        if n <= 0.0 {
            continue;
        }
        let margin = lv + p as f64 * lg + sigma * ln_bracket_factorial(p) - n.ln();
        if margin < out.log_margin {
            out.log_margin = margin;
            out.worst_p = Some(p);
        }
    }
    out.pass = out.log_margin >= 0.0;
    out
}

/// `min_p (V Γ^p [p!]^σ - N*(p))` in plain floating point, over `p ≤ 12`.
pub fn check_key_direct(ladder: &NormLadder, v: f64, gamma: f64, sigma: f64) -> f64 {
    ladder
        .nstar
        .iter()
        .filter(|(&p, _)| p <= 12)
        .map(|(&p, &n)| {
            let fact: f64 = (1..=p.max(0)).map(|i| i as f64).product();
            v * gamma.powi(p as i32) * fact.powf(sigma) - n
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gevrey constants fitted to a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyFit {
    /// Fitted order, clamped to `σ ≥ 1`.
    pub sigma: f64,
    /// Unclamped regression coefficient of `ln p!`.
    pub sigma_raw: f64,
    #[serde(rename = "logGamma")]
    pub log_gamma: f64,
    /// Envelope: the smallest `ln V` (up to rounding slack) for which the
    /// key criterion holds on every ladder entry with the fitted `Γ`, `σ`.
    #[serde(rename = "logV")]
    pub log_v: f64,
    /// Regression intercept.
    #[serde(rename = "logV_fit")]
    pub log_v_fit: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub p_min: i64,
    pub p_max: i64,
    /// True when the ladder vanishes beyond some order (polynomial input).
    pub finitely_supported: bool,
}

/// Least squares of `ln N*(p)` on `(1, p, ln p!)` over `p_min..=p_max`.
pub fn fit_gevrey(ladder: &NormLadder, p_min: i64, p_max: i64) -> Result<GevreyFit> {
    let entries: Vec<(i64, f64)> = ladder
        .nstar
        .iter()
        .filter(|(&p, _)| p >= p_min && p <= p_max)
        .map(|(&p, &n)| (p, n))
        .collect();
    let usable: Vec<(i64, f64)> = entries.iter().copied().filter(|(_, n)| *n > 0.0).collect();
    let tail_zero = entries.last().map(|(_, n)| *n == 0.0).unwrap_or(true);
    if usable.len() < 5 && tail_zero {
        let vmax = ladder.nstar.values().cloned().fold(0.0, f64::max);
        return Ok(GevreyFit {
            sigma: 1.0,
            sigma_raw: 1.0,
            log_gamma: 0.0,
            log_v: if vmax > 0.0 { vmax.ln() } else { 0.0 },
            log_v_fit: if vmax > 0.0 { vmax.ln() } else { 0.0 },
            residual: 0.0,
            p_min,
            p_max,
            finitely_supported: true,
        });
    }
    if usable.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 positive ladder entries, got {}",
            usable.len()
        )));
    }
    let rows: Vec<Vec<f64>> = usable
        .iter()
        .map(|(p, _)| vec![1.0, *p as f64, ln_bracket_factorial(*p)])
        .collect();
    let y: Vec<f64> = usable.iter().map(|(_, n)| n.ln()).collect();
    let fit = least_squares(&rows, &y)?;
    let sigma_raw = fit.coefficients[2];
    let (sigma, log_v_fit, log_gamma, residual) = if sigma_raw >= 1.0 {
        (sigma_raw, fit.coefficients[0], fit.coefficients[1], fit.rms)
    } else {
        let rows: Vec<Vec<f64>> = usable.iter().map(|(p, _)| vec![1.0, *p as f64]).collect();
        let y: Vec<f64> = usable.iter().map(|(p, n)| n.ln() - ln_bracket_factorial(*p)).collect();
        let refit = least_squares(&rows, &y)?;
        (1.0, refit.coefficients[0], refit.coefficients[1], refit.rms)
    };
    let envelope = ladder
        .nstar
        .iter()
        .filter(|(_, &n)| n > 0.0)
        .map(|(&p, &n)| n.ln() - p as f64 * log_gamma - sigma * ln_bracket_factorial(p))
        .fold(f64::NEG_INFINITY, f64::max);
    // absorbs the rounding of the exp/ln round trip in check_key
    let log_v = envelope + 1e-12 * envelope.abs().max(1.0);
    Ok(GevreyFit {
        sigma,
        sigma_raw,
        log_gamma,
        log_v,
        log_v_fit,
        residual,
        p_min,
        p_max,
        finitely_supported: false,
    })
}

impl GevreyFit {
    pub fn check(&self, ladder: &NormLadder) -> KeyCheck {
        check_key(ladder, self.log_v.exp(), self.log_gamma.exp(), self.sigma)
    }
}
