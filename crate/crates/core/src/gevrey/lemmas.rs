//! Numerical surrogates for the a priori estimate and the induction step,
//! with suite calibration of their constants.

use serde::{Deserialize, Serialize};

use super::{NormLadder, SupProfile};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::kernel::KernelSpec;
use crate::lsq::least_squares;
use crate::special::ln_factorial;

/// Default spatial grid for the suprema in [`verify_apriori`].
const APRIORI_GRID: usize = 512;

/// `δ = (R - r) / p`.
pub fn delta_schedule(big_r: f64, r: f64, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "the schedule (R - r)/p is undefined at p = 0; supply delta explicitly".into(),
        ));
    }
    if !(big_r / 2.0 < r && r < big_r) {
        return Err(Error::InvalidParameter(format!("need R/2 < r < R, got R = {big_r}, r = {r}")));
    }
    Ok((big_r - r) / p as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriRow {
    pub p: usize,
    pub r: f64,
    pub delta: f64,
    /// `sup_{B_r} |∇^{p+2} u|`.
    pub lhs: f64,
    /// `δ^{-1} sup_{B_{r+δ}} |∇^{p+1} u|`.
    pub first: f64,
    /// `δ^{-2} sup_{B_{r+δ}} |∇^p u|`.
    pub second: f64,
    /// `δ^{2s-1} sup_{B_{r+δ}} |∇^{p+1} f|`.
    pub source: f64,
    /// `H_{p+1} 2^p δ^{-(p+2)} ‖u‖_∞`.
    pub tail: f64,
    pub bracket: f64,
    pub ratio: f64,
}

fn check_apriori_args(r: f64, delta: f64, p: usize, h: &[f64]) -> Result<()> {
    if !(r > 0.0 && delta > 0.0 && r + delta < 5.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r < r + delta < 5, got r = {r}, delta = {delta}"
        )));
    }
    if h.len() < p + 2 {
        return Err(Error::MissingEntry(format!("H_{} (have {} entries)", p + 1, h.len())));
    }
    Ok(())
}

/// Both sides of the a priori estimate for one `(r, δ, p)`:
/// `lhs = sup_{B_r}|∇^{p+2}u|` against the bracket
/// `δ^{-1}S_u(p+1) + δ^{-2}S_u(p) + δ^{2s-1}S_f(p+1) + H_{p+1}2^pδ^{-(p+2)}‖u‖_∞`
/// with suprema over `B_{r+δ}`.
pub fn verify_apriori(
    u: &ScalarField,
    f: &ScalarField,
    k: &KernelSpec,
    r: f64,
    delta: f64,
    p: usize,
    h: &[f64],
) -> Result<AprioriRow> {
    check_apriori_args(r, delta, p, h)?;
    let up = SupProfile::new(u, r + delta, p + 2, APRIORI_GRID)?;
    let fp = SupProfile::new(f, r + delta, p + 1, APRIORI_GRID)?;
    verify_apriori_with(&up, &fp, u.sup_bound(), k.s(), r, delta, p, h)
}

/// [`verify_apriori`] on precomputed profiles (radius at least `r + δ`).
#[allow(clippy::too_many_arguments)]
pub fn verify_apriori_with(
    up: &SupProfile,
    fp: &SupProfile,
    u_sup: f64,
    s: f64,
    r: f64,
    delta: f64,
    p: usize,
    h: &[f64],
) -> Result<AprioriRow> {
    check_apriori_args(r, delta, p, h)?;
    if !u_sup.is_finite() {
        return Err(Error::UnboundedField);
    }
    let outer = r + delta;
    let su = up.sup_all(outer)?;
    let sf = fp.sup_all(outer)?;
    let get = |v: &[f64], q: usize| {
        v.get(q)
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("derivative order {q}")))
    };
    let lhs = up.sup(p + 2, r)?;
    let first = get(&su, p + 1)? / delta;
    let second = get(&su, p)? / (delta * delta);
    let source = delta.powf(2.0 * s - 1.0) * get(&sf, p + 1)?;
    let tail = h[p + 1] * 2f64.powi(p as i32) * delta.powi(-(p as i32 + 2)) * u_sup;
    let bracket = first + second + source + tail;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / bracket };
    Ok(AprioriRow {
        p,
        r,
        delta,
        lhs,
        first,
        second,
        source,
        tail,
        bracket,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub p: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `N*(p)` against `E [p N*(p-1) + p(p-1) N*(p-2) + M(p) + F^p H_{p+1} p! ‖u‖_∞]`.
pub fn verify_step(ladder: &NormLadder, p: usize, e: f64, f: f64, h: &[f64], u_sup: f64) -> Result<StepRow> {
    if p == 0 {
        return Err(Error::InvalidParameter("the step is checked for p >= 1".into()));
    }
    let hp = *h
        .get(p + 1)
        .ok_or_else(|| Error::MissingEntry(format!("H_{} (have {} entries)", p + 1, h.len())))?;
    let pi = p as i64;
    let pf = p as f64;
    let lhs = ladder.nstar(pi)?;
    let tail = (pf * f.ln() + ln_factorial(p)).exp() * hp * u_sup;
    let rhs = e * (pf * ladder.nstar(pi - 1)? + pf * (pf - 1.0) * ladder.nstar(pi - 2)? + ladder.m(pi)? + tail);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(StepRow { p, lhs, rhs, ratio })
}

/// Constants calibrated as suite maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Largest a priori ratio.
    #[serde(rename = "C")]
    pub c: f64,
    /// Largest step ratio at `E = 1`.
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

/// `C` and `E` from suite rows; `steps_unit` must be computed with `E = 1`
/// and the given `F`.
pub fn calibrate(apriori: &[AprioriRow], steps_unit: &[StepRow], f: f64) -> Calibration {
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    Calibration {
        c: max(&mut apriori.iter().map(|r| r.ratio)),
        e: max(&mut steps_unit.iter().map(|r| r.ratio)),
        f,
    }
}

/// Source-side constants `‖∇^p f‖_{B_R} ≤ L (A/R)^p (p!)^τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceFit {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub tau: f64,
    pub tau_raw: f64,
    pub residual: f64,
}

/// Fits `(L, A, τ)` to the sampled `sup_{B_R} |∇^p f|`, `p = 0..=p_max`;
/// `τ` is clamped to at least 1 and `L` is the envelope over all orders.
pub fn fit_source_constants(f: &ScalarField, big_r: f64, p_max: usize, grid: usize) -> Result<SourceFit> {
    let prof = SupProfile::new(f, big_r, p_max, grid)?;
    let sups = prof.sup_all(big_r)?;
    let usable: Vec<(usize, f64)> = sups.iter().copied().enumerate().filter(|(_, v)| *v > 0.0).collect();
    if usable.len() < 4 {
        let l = sups.iter().cloned().fold(0.0, f64::max);
        return Ok(SourceFit {
            l,
            a: big_r,
            tau: 1.0,
            tau_raw: 1.0,
            residual: 0.0,
        });
    }
    let rows: Vec<Vec<f64>> = usable.iter().map(|(p, _)| vec![1.0, *p as f64, ln_factorial(*p)]).collect();
    let y: Vec<f64> = usable.iter().map(|(_, v)| v.ln()).collect();
    let fit = least_squares(&rows, &y)?;
    let tau_raw = fit.coefficients[2];
    let (tau, slope, residual) = if tau_raw >= 1.0 {
        (tau_raw, fit.coefficients[1], fit.rms)
    } else {
        let rows: Vec<Vec<f64>> = usable.iter().map(|(p, _)| vec![1.0, *p as f64]).collect();
        let y: Vec<f64> = usable.iter().map(|(p, v)| v.ln() - ln_factorial(*p)).collect();
        let refit = least_squares(&rows, &y)?;
        (1.0, refit.coefficients[1], refit.rms)
    };
    let log_l = usable
        .iter()
        .map(|(p, v)| v.ln() - *p as f64 * slope - tau * ln_factorial(*p))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SourceFit {
        l: log_l.exp(),
        a: big_r * slope.exp(),
        tau,
        tau_raw,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::trig_pair;
    use crate::gevrey::ladder;
    use crate::kernel::{estimate_h, SamplingConfig};

    fn h_fractional(m: usize) -> Vec<f64> {
        let k = KernelSpec::fractional(1, 0.75).unwrap();
        estimate_h(&k, m, &SamplingConfig { budget: 16, ..Default::default() }).unwrap()
    }

    #[test]
    fn schedule() {
        assert_eq!(delta_schedule(4.0, 3.0, 2).unwrap(), 0.5);
        assert!((delta_schedule(4.0, 3.9, 10).unwrap() - 0.01).abs() < 1e-15);
        assert!(delta_schedule(4.0, 3.0, 0).is_err());
        assert!(delta_schedule(4.0, 1.5, 2).is_err());
        for p in 2..40 {
            let r = 3.3;
            assert!(r + delta_schedule(4.0, r, p).unwrap() < 4.0);
        }
    }

    #[test]
    fn apriori_constant_and_scaling() {
        let h = h_fractional(10);
        let k = KernelSpec::fractional(1, 0.75).unwrap();
        let one = ScalarField::constant(2.0, 1);
        let zero = ScalarField::constant(0.0, 1);
        let row = verify_apriori(&one, &zero, &k, 1.0, 0.5, 2, &h).unwrap();
        assert_eq!((row.lhs, row.ratio), (0.0, 0.0));

        let (u, f) = trig_pair(1.0, 0.0, 0.75).unwrap();
        let a = verify_apriori(&u, &f, &k, 1.0, 0.5, 3, &h).unwrap();
        let b = verify_apriori(&u.clone().scaled(2.0).unwrap(), &f.clone().scaled(2.0).unwrap(), &k, 1.0, 0.5, 3, &h)
            .unwrap();
        assert!((b.lhs - 2.0 * a.lhs).abs() < 1e-14 && (b.bracket - 2.0 * a.bracket).abs() < 1e-12 * b.bracket);
        assert!((a.ratio - b.ratio).abs() < 1e-14);
        assert!(verify_apriori(&u, &f, &k, 4.8, 0.5, 3, &h).is_err());
        assert!(matches!(verify_apriori(&u, &f, &k, 1.0, 0.5, 10, &h), Err(Error::MissingEntry(_))));
    }

    #[test]
    fn step_properties() {
        let h = h_fractional(12);
        let (u, f) = trig_pair(1.0, 0.0, 0.75).unwrap();
        let l = ladder(&u, Some(&f), 2.0, 0.75, 10, 64).unwrap();
        for p in 1..=10 {
            let a = verify_step(&l, p, 1.0, 2.0, &h, 1.0).unwrap();
            let b = verify_step(&l, p, 2.0, 2.0, &h, 1.0).unwrap();
            let c = verify_step(&l, p, 1.0, 3.0, &h, 1.0).unwrap();
            assert!(b.ratio <= a.ratio && c.ratio <= a.ratio);
        }
        let cubic = ScalarField::polynomial(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let l = ladder(&cubic, Some(&ScalarField::constant(0.0, 1)), 2.0, 0.75, 6, 64).unwrap();
        for p in 2..=6 {
            assert_eq!(verify_step(&l, p, 1.0, 2.0, &h, 1.0).unwrap().ratio, 0.0);
        }
        assert!(verify_step(&l, 0, 1.0, 2.0, &h, 1.0).is_err());
    }

    #[test]
    fn calibrated_step_holds_on_suite() {
        let h = h_fractional(12);
        let (u, f) = trig_pair(1.0, 0.0, 0.75).unwrap();
        let l = ladder(&u, Some(&f), 2.0, 0.75, 10, 64).unwrap();
        let unit: Vec<StepRow> = (1..=10).map(|p| verify_step(&l, p, 1.0, 2.0, &h, 1.0).unwrap()).collect();
        let cal = calibrate(&[], &unit, 2.0);
        for p in 1..=10 {
            assert!(verify_step(&l, p, cal.e, cal.f, &h, 1.0).unwrap().ratio <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn source_fit_envelope() {
        let (_, f) = trig_pair(2.0, 0.0, 0.75).unwrap();
        let fit = fit_source_constants(&f, 2.0, 12, 256).unwrap();
        assert!(fit.tau >= 1.0 && fit.l > 0.0 && fit.a > 0.0);
        let prof = SupProfile::new(&f, 2.0, 12, 256).unwrap();
        for p in 0..=12 {
            let bound = fit.l * (fit.a / 2.0).powi(p as i32) * ln_factorial(p).exp().powf(fit.tau);
            assert!(prof.sup(p, 2.0).unwrap() <= bound * (1.0 + 1e-12));
        }
    }
}
