//! Choice of `(Γ, V)` closing the induction
//! `E[1/Γ + 1/Γ² + (F/Γ)^p ‖u‖/V + L/(VΓ^p) (R/2)^{2s} (A/2)^{p+1} (p+1)^τ] ≤ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductionConstants {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub nu: f64,
    pub tau: f64,
    #[serde(rename = "uSup")]
    pub u_sup: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub s: f64,
    pub sigma: f64,
    /// The `V` the search is run at (`V ≥ 1`).
    #[serde(rename = "V")]
    pub v: f64,
}

impl InductionConstants {
    /// Constants with `σ = max(1 + ν, τ)` and `V = 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(e: f64, f: f64, l: f64, a: f64, nu: f64, tau: f64, u_sup: f64, r: f64, s: f64) -> Self {
        Self {
            e,
            f,
            l,
            a,
            nu,
            tau,
            u_sup,
            r,
            s,
            sigma: (1.0 + nu).max(tau),
            v: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [("E", self.e), ("F", self.f), ("R", self.r)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [("L", self.l), ("A", self.a), ("nu", self.nu), ("tau", self.tau), ("uSup", self.u_sup)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.v >= 1.0) {
            return Err(Error::InvalidParameter(format!("V must be at least 1, got {}", self.v)));
        }
        let floor = (1.0 + self.nu).max(self.tau);
        if self.sigma < floor {
            return Err(Error::InvalidParameter(format!(
                "sigma = {} is below max(1 + nu, tau) = {floor}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// The bracket at order `p`, evaluated in log space for the `p`-dependent
/// terms.
pub fn induction_bracket(c: &InductionConstants, gamma: f64, v: f64, p: usize) -> f64 {
    let pf = p as f64;
    let mut sum = 1.0 / gamma + 1.0 / (gamma * gamma);
    if c.u_sup > 0.0 {
        sum += (pf * (c.f / gamma).ln() + c.u_sup.ln() - v.ln()).exp();
    }
    if c.l > 0.0 && c.a > 0.0 {
        let log = c.l.ln() - v.ln() - pf * gamma.ln()
            + 2.0 * c.s * (c.r / 2.0).ln()
            + (pf + 1.0) * (c.a / 2.0).ln()
            + c.tau * (pf + 1.0).ln();
        sum += log.exp();
    }
    c.e * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResult {
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub feasible: bool,
    pub p_check: usize,
    /// Largest bracket over `p = 1..=p_check` at the returned `Γ`.
    pub max_bracket: f64,
    pub worst_p: usize,
    /// Ratio of the `p`-dependent parts of the bracket at `p_check + 1` and
    /// `p_check` (zero when those parts vanish).
    pub terminal_ratio: f64,
    /// Every `p`-dependent term is nonincreasing beyond `p_check`.
    pub asymptotic: bool,
}

fn terminal_ratio(c: &InductionConstants, gamma: f64, p: usize) -> f64 {
    let base = c.e * (1.0 / gamma + 1.0 / (gamma * gamma));
    let now = induction_bracket(c, gamma, c.v, p) - base;
    let next = induction_bracket(c, gamma, c.v, p + 1) - base;
    if now > 0.0 {
        next / now
    } else {
        0.0
    }
}

/// True when each `p`-dependent term is nonincreasing for all `p ≥ p_check`.
fn asymptotic_ok(c: &InductionConstants, gamma: f64, p_check: usize) -> bool {
    let f_ok = c.u_sup == 0.0 || gamma > c.f;
    let l_ok = c.l == 0.0 || c.a == 0.0 || {
        let p = p_check as f64;
        c.a / (2.0 * gamma) * ((p + 2.0) / (p + 1.0)).powf(c.tau) < 1.0
    };
    f_ok && l_ok
}

fn scan(c: &InductionConstants, gamma: f64, p_check: usize) -> (f64, usize) {
    (1..=p_check)
        .map(|p| (induction_bracket(c, gamma, c.v, p), p))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}

fn feasible(c: &InductionConstants, gamma: f64, p_check: usize) -> bool {
    scan(c, gamma, p_check).0 <= 1.0 && asymptotic_ok(c, gamma, p_check)
}

/// Smallest feasible `Γ` (to bisection precision) at the given `V`, by
/// doubling from `Γ = 1` then bisection; feasibility is monotone in `Γ`.
pub fn induction_closure(c: &InductionConstants, p_check: usize) -> Result<ClosureResult> {
    c.validate()?;
    if p_check == 0 {
        return Err(Error::InvalidParameter("p_check must be at least 1".into()));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while !feasible(c, hi, p_check) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1000 || !hi.is_finite() {
            let (max_bracket, worst_p) = scan(c, hi, p_check);
            return Ok(ClosureResult {
                gamma: hi,
                v: c.v,
                feasible: false,
                p_check,
                max_bracket,
                worst_p,
                terminal_ratio: f64::NAN,
                asymptotic: asymptotic_ok(c, hi, p_check),
            });
        }
    }
    let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid > 0.0 && feasible(c, mid, p_check) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (max_bracket, worst_p) = scan(c, hi, p_check);
    Ok(ClosureResult {
        gamma: hi,
        v: c.v,
        feasible: true,
        p_check,
        max_bracket,
        worst_p,
        terminal_ratio: terminal_ratio(c, hi, p_check),
        asymptotic: asymptotic_ok(c, hi, p_check),
    })
}
