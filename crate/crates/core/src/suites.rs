//! Batch verification suites with per-check verdicts, CSV tables and a
//! deterministic JSON report.
//!
//! CSV layouts:
//! - `stencil`: `convergence_<field>.csv` with `k, h, estimate, exact, error`.
//! - `proint`: `proint_g<γ>_r<r>.csv` with `h, lhs, rhs, ratio`.
//! - `apriori`: `apriori_<pair>_d<δ>.csv` with `p, lhs, rhs, ratio`.
//! - `step`: `step_<pair>.csv` with `p, lhs, rhs, ratio`.
//! - `closure`: `closure.csv` with `p, lhs, rhs, ratio` where `lhs` is the
//!   bracket at the returned `Γ`, `rhs = 1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fields::{gaussian_pair, trig_pair, ScalarField};
use crate::gevrey::{
    calibrate, fit_source_constants, induction_bracket, induction_closure, ladder_with, verify_apriori,
    verify_step, InductionConstants, LadderConfig,
};
use crate::kernel::{estimate_h, fit_kernel_growth, GrowthFit, KernelSpec, SamplingConfig};
use crate::quad::{proint_convergence, QuadratureConfig};
use crate::sampling::rng;
use crate::stencil::{leibniz_split, summation_by_parts_residual, LatticeSamples, Stencil};
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Stencil,
    Proint,
    Apriori,
    Step,
    Closure,
    All,
}

impl SuiteName {
    pub const EACH: [SuiteName; 5] = [
        SuiteName::Stencil,
        SuiteName::Proint,
        SuiteName::Apriori,
        SuiteName::Step,
        SuiteName::Closure,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::Stencil => "stencil",
            SuiteName::Proint => "proint",
            SuiteName::Apriori => "apriori",
            SuiteName::Step => "step",
            SuiteName::Closure => "closure",
            SuiteName::All => "all",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stencil" => Ok(SuiteName::Stencil),
            "proint" => Ok(SuiteName::Proint),
            "apriori" => Ok(SuiteName::Apriori),
            "step" => Ok(SuiteName::Step),
            "closure" => Ok(SuiteName::Closure),
            "all" => Ok(SuiteName::All),
            other => Err(Error::Parse(format!(
                "unknown suite '{other}' (expected stencil, proint, apriori, step, closure or all)"
            ))),
        }
    }
}

/// Parameters of every suite. Defaults reproduce the acceptance settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub s: f64,
    pub seed: u64,
    pub stencil_max_order: usize,
    pub convergence_max_order: usize,
    pub convergence_point: f64,
    pub halvings: usize,
    pub min_convergence_order: f64,
    pub random_cases: usize,
    pub identity_tol: f64,
    pub proint_radii: Vec<f64>,
    pub proint_orders: Vec<usize>,
    pub proint_steps: Vec<f64>,
    pub proint_tol: f64,
    pub apriori_r: f64,
    pub apriori_deltas: Vec<f64>,
    pub apriori_p_max: usize,
    pub calibration_omegas: Vec<f64>,
    pub spread_limit: f64,
    #[serde(rename = "step_R")]
    pub step_radius: f64,
    pub step_p_max: usize,
    pub transfer_limit: f64,
    pub closure_p_check: usize,
    pub ladder: LadderConfig,
    pub quadrature: QuadratureConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            s: 0.75,
            seed: 0,
            stencil_max_order: 12,
            convergence_max_order: 6,
            convergence_point: 0.7,
            halvings: 5,
            min_convergence_order: 0.9,
            random_cases: 100,
            identity_tol: 1e-10,
            proint_radii: vec![2.0, 3.0],
            proint_orders: vec![1, 2],
            proint_steps: (3..=8).map(|e| 2f64.powi(-e)).collect(),
            proint_tol: 1e-2,
            apriori_r: 1.0,
            apriori_deltas: vec![0.25, 0.5],
            apriori_p_max: 8,
            calibration_omegas: vec![1.0, 2.0],
            spread_limit: 1e2,
            step_radius: 3.0,
            step_p_max: 10,
            transfer_limit: 1.5,
            closure_p_check: 200,
            ladder: LadderConfig::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl SuiteConfig {
    fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            pass: value <= limit,
            value,
            limit,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            pass: value >= limit,
            value,
            limit,
            detail,
        }
    }

    fn holds(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            limit: 1.0,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: String, columns: &[&str]) -> Self {
        Self {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// CSV text, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: SuiteName,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Calibrated constants and witnesses.
    pub summary: Value,
}

impl SuiteResult {
    fn new(suite: SuiteName, checks: Vec<Check>, tables: Vec<Table>, summary: Value) -> Self {
        Self {
            suite,
            pass: checks.iter().all(|c| c.pass),
            checks,
            tables,
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: usize,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub suite: SuiteName,
    pub config: SuiteConfig,
    pub verdict: Verdict,
    pub suites: Vec<SuiteResult>,
}

impl SuiteReport {
    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.suites.iter().flat_map(|s| s.tables.iter())
    }
}

/// Runs one suite (or all of them, in order).
pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let names: Vec<SuiteName> = match name {
        SuiteName::All => SuiteName::EACH.to_vec(),
        one => vec![one],
    };
    let suites = names
        .into_iter()
        .map(|n| match n {
            SuiteName::Stencil => stencil_suite(cfg),
            SuiteName::Proint => proint_suite(cfg),
            SuiteName::Apriori => apriori_suite(cfg),
            SuiteName::Step => step_suite(cfg),
            SuiteName::Closure => closure_suite(cfg),
            SuiteName::All => unreachable!(),
        })
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> = suites
        .iter()
        .flat_map(|s| s.checks.iter().filter(|c| !c.pass).map(move |c| format!("{}/{}", s.suite, c.name)))
        .collect();
    Ok(SuiteReport {
        version: VERSION.into(),
        suite: name,
        config: cfg.clone(),
        verdict: Verdict {
            pass: failed.is_empty(),
            checks: suites.iter().map(|s| s.checks.len()).sum(),
            failed,
        },
        suites,
    })
}

/// Largest first step for an order-`k` quotient such that, after the
/// configured halvings, the roundoff floor `ε ‖c‖₁ h^{-k}` stays below
/// `1e-4`; never below `1/4`.
pub fn convergence_start(stencil: &Stencil, halvings: usize) -> f64 {
    let k = stencil.order();
    if k == 0 {
        return 0.25;
    }
    let l1: f64 = stencil.weights().iter().map(|w| w.abs()).sum();
    let finest = (f64::EPSILON * l1 / 1e-4).powf(1.0 / k as f64);
    (finest * 2f64.powi(halvings as i32)).max(0.25)
}

/// Least-squares slope of `log err` against `log h`.
fn empirical_order(hs: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs.iter().zip(errs).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn stencil_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let mut checks = Vec::new();
    let mut tables = Vec::new();

    let mut bad_moments = Vec::new();
    let mut worst_annihilation: f64 = 0.0;
    let mut rng = rng(cfg.seed);
    for k in 0..=cfg.stencil_max_order {
        let st = Stencil::build(k)?;
        if !st.moments_hold() {
            bad_moments.push(k);
        }
        if k > 0 {
            let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let poly = ScalarField::polynomial(coeffs)?;
            let x = [rng.gen_range(-1.0..1.0)];
            let h = rng.gen_range(0.05..0.5);
            let value = st.apply(&poly, &x, h, &[1.0])?;
            let scale: f64 = st
                .nodes()
                .iter()
                .zip(st.weights())
                .map(|(&j, w)| Ok(w.abs() * poly.eval(&[x[0] + j as f64 * h])?.abs()))
                .sum::<Result<f64>>()?;
            worst_annihilation = worst_annihilation.max(value.abs() / scale.max(f64::MIN_POSITIVE));
        }
    }
    checks.push(Check::holds(
        "moments",
        bad_moments.is_empty(),
        format!(
            "exact moment system for k = 0..={}; failing orders {bad_moments:?}",
            cfg.stencil_max_order
        ),
    ));
    checks.push(Check::at_most(
        "annihilation",
        worst_annihilation,
        1e-12,
        "largest relative quotient of a polynomial of degree below the order".into(),
    ));

    let fields = [
        ("cos", ScalarField::trig(1.0, 0.0)?),
        ("exp", ScalarField::exponential(1.0)?),
        ("gaussian", ScalarField::gaussian(1.0, 1)?),
    ];
    let x = [cfg.convergence_point];
    let mut worst = (f64::INFINITY, String::new());
    for (name, u) in &fields {
        let mut table = Table::new(format!("convergence_{name}"), &["k", "h", "estimate", "exact", "error"]);
        for k in 1..=cfg.convergence_max_order {
            let st = Stencil::build(k)?;
            let h0 = convergence_start(&st, cfg.halvings);
            let exact = u.jet(&x, &[1.0], k)?.derivative(k);
            let mut hs = Vec::new();
            let mut errs = Vec::new();
            for i in 0..=cfg.halvings {
                let h = h0 / 2f64.powi(i as i32);
                let est = st.derivative_estimate(u, &x, h, &[1.0])?;
                let err = (est - exact).abs();
                table.rows.push(vec![k as f64, h, est, exact, err]);
                hs.push(h);
                errs.push(err);
            }
            let order = empirical_order(&hs, &errs);
            if order < worst.0 {
                worst = (order, format!("{name}, k = {k}"));
            }
        }
        tables.push(table);
    }
    checks.push(Check::at_least(
        "convergence",
        worst.0,
        cfg.min_convergence_order,
        format!("smallest empirical order ({}) over {} halvings", worst.1, cfg.halvings),
    ));

    let (leibniz, sbp) = identity_residuals(cfg)?;
    checks.push(Check::at_most(
        "leibniz",
        leibniz,
        cfg.identity_tol,
        format!("largest relative residual over {} random cases", cfg.random_cases),
    ));
    checks.push(Check::at_most(
        "summation_by_parts",
        sbp,
        cfg.identity_tol,
        format!("largest relative residual over {} random cases", cfg.random_cases),
    ));
    Ok(SuiteResult::new(SuiteName::Stencil, checks, tables, json!({})))
}

fn random_field<R: Rng>(rng: &mut R) -> Result<ScalarField> {
    match rng.gen_range(0..3) {
        0 => ScalarField::trig(rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)),
        1 => ScalarField::gaussian(rng.gen_range(0.2..2.0), 1),
        _ => ScalarField::polynomial((0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()),
    }
}

/// Largest relative residuals of the discrete Leibniz rule and of summation
/// by parts on random inputs, each normalized by the magnitude of the
/// terms it is built from.
pub fn identity_residuals(cfg: &SuiteConfig) -> Result<(f64, f64)> {
    let mut rng = rng(cfg.seed.wrapping_add(1));
    let mut leibniz: f64 = 0.0;
    for _ in 0..cfg.random_cases {
        let f = random_field(&mut rng)?;
        let g = random_field(&mut rng)?;
        let x = [rng.gen_range(-2.0..2.0)];
        let h = rng.gen_range(1e-3..0.5);
        let (l, r) = leibniz_split(&f, &g, &x, h, &[1.0])?;
        let scale = (f.eval(&[x[0] + h])? * g.eval(&[x[0] + h])?).abs() + (f.eval(&x)? * g.eval(&x)?).abs();
        leibniz = leibniz.max((l - r).abs() / scale.max(f64::MIN_POSITIVE));
    }
    let mut sbp: f64 = 0.0;
    for _ in 0..cfg.random_cases {
        let len = rng.gen_range(1..20);
        let start = rng.gen_range(-10..10);
        let f = LatticeSamples::new(start, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let g = LatticeSamples::new(start - 3, (0..len + 6).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let h = rng.gen_range(1e-3..1.0);
        let res = summation_by_parts_residual(&f, &g, h)?;
        let scale: f64 = (start - 1..start + len as i64 + 1)
            .map(|x| f.get(x).abs() * (g.get(x).abs() + g.get(x - 1).abs()) + f.get(x + 1).abs() * g.get(x).abs())
            .sum();
        sbp = sbp.max(res / scale.max(f64::MIN_POSITIVE));
    }
    Ok((leibniz, sbp))
}

fn proint_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let k = KernelSpec::fractional(1, cfg.s)?;
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    for &gamma in &cfg.proint_orders {
        for &r in &cfg.proint_radii {
            let rows = proint_convergence(&k, &[0.0], &[gamma], r, &cfg.proint_steps, &cfg.quadrature)?;
            let mut table = Table::new(format!("proint_g{gamma}_r{r}"), &["h", "lhs", "rhs", "ratio"]);
            table.rows = rows.iter().map(|row| vec![row.h, row.lhs, row.rhs, row.ratio]).collect();
            tables.push(table);
            let finest = rows.last().map(|row| (row.ratio - 1.0).abs()).unwrap_or(f64::NAN);
            checks.push(Check::at_most(
                &format!("gamma{gamma}_r{r}"),
                finest,
                cfg.proint_tol,
                format!("|lhs/rhs - 1| at h = {}", cfg.proint_steps.last().copied().unwrap_or(f64::NAN)),
            ));
        }
    }
    Ok(SuiteResult::new(SuiteName::Proint, checks, tables, json!({})))
}

/// `H_0..H_{m}` of the one-dimensional fractional kernel and its growth fit
/// over `H_0..H_10`.
fn kernel_constants(cfg: &SuiteConfig, m: usize) -> Result<(KernelSpec, Vec<f64>, GrowthFit)> {
    let k = KernelSpec::fractional(1, cfg.s)?;
    let h = estimate_h(&k, m.max(10), &cfg.sampling())?;
    let growth = fit_kernel_growth(&h[..11])?;
    Ok((k, h, growth))
}

/// Outcome of the a priori suite, reused by the acceptance tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriOutcome {
    #[serde(rename = "C")]
    pub c: f64,
    /// `max/min` of the cos-pair ratios.
    pub spread: f64,
    pub all_finite: bool,
    /// `C - max` held-out ratio.
    pub holdout_margin: f64,
    pub scaling_defect: f64,
}

pub fn apriori_outcome(cfg: &SuiteConfig) -> Result<(AprioriOutcome, Vec<Table>)> {
    let (k, h, _) = kernel_constants(cfg, cfg.apriori_p_max + 1)?;
    let mut tables = Vec::new();
    let mut rows_for = |label: String, u: &ScalarField, f: &ScalarField| -> Result<Vec<f64>> {
        let mut ratios = Vec::new();
        for &delta in &cfg.apriori_deltas {
            let mut table = Table::new(format!("apriori_{label}_d{delta}"), &["p", "lhs", "rhs", "ratio"]);
            for p in 0..=cfg.apriori_p_max {
                let row = verify_apriori(u, f, &k, cfg.apriori_r, delta, p, &h)?;
                table.rows.push(vec![p as f64, row.lhs, row.bracket, row.ratio]);
                ratios.push(row.ratio);
            }
            tables.push(table);
        }
        Ok(ratios)
    };
    let mut calibration = Vec::new();
    let mut cos_ratios = Vec::new();
    for &omega in &cfg.calibration_omegas {
        let (u, f) = trig_pair(omega, 0.0, cfg.s)?;
        let ratios = rows_for(format!("trig{omega}"), &u, &f)?;
        if omega == 1.0 {
            cos_ratios = ratios.clone();
        }
        calibration.extend(ratios);
    }
    if cos_ratios.is_empty() {
        let (u, f) = trig_pair(1.0, 0.0, cfg.s)?;
        cos_ratios = rows_for("trig1".into(), &u, &f)?;
    }
    let (gu, gf) = gaussian_pair(1.0, cfg.s, 1)?;
    let held = rows_for("gaussian".into(), &gu, &gf)?;

    let c = calibration.iter().cloned().fold(0.0, f64::max);
    let all_finite = calibration.iter().chain(&held).all(|r| r.is_finite());
    let max = cos_ratios.iter().cloned().fold(0.0, f64::max);
    let min = cos_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let holdout_margin = c - held.iter().cloned().fold(0.0, f64::max);

    let (u, f) = trig_pair(1.0, 0.0, cfg.s)?;
    let (u2, f2) = (u.clone().scaled(2.0)?, f.clone().scaled(2.0)?);
    let delta = cfg.apriori_deltas.first().copied().unwrap_or(0.5);
    let mut scaling_defect: f64 = 0.0;
    for p in 0..=cfg.apriori_p_max {
        let a = verify_apriori(&u, &f, &k, cfg.apriori_r, delta, p, &h)?;
        let b = verify_apriori(&u2, &f2, &k, cfg.apriori_r, delta, p, &h)?;
        scaling_defect = scaling_defect.max((a.ratio - b.ratio).abs() / a.ratio.abs().max(f64::MIN_POSITIVE));
    }
    Ok((
        AprioriOutcome {
            c,
            spread,
            all_finite,
            holdout_margin,
            scaling_defect,
        },
        tables,
    ))
}

fn apriori_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let (out, tables) = apriori_outcome(cfg)?;
    let checks = vec![
        Check::holds("finite", out.all_finite, "every ratio is finite".into()),
        Check::at_most(
            "spread",
            out.spread,
            cfg.spread_limit,
            "max/min of the cos-pair ratios over p and delta".into(),
        ),
        Check::at_least(
            "holdout",
            out.holdout_margin,
            0.0,
            format!("C = {} minus the largest gaussian-pair ratio", out.c),
        ),
        Check::at_most(
            "scaling",
            out.scaling_defect,
            1e-12,
            "relative ratio change under u, f -> 2u, 2f".into(),
        ),
    ];
    let summary = serde_json::to_value(&out).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(SuiteResult::new(SuiteName::Apriori, checks, tables, summary))
}

/// Outcome of the step suite, reused by the closure suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub nu: f64,
    pub calibrated_max: f64,
    pub holdout_max: f64,
}

pub fn step_outcome(cfg: &SuiteConfig) -> Result<(StepOutcome, Vec<Table>)> {
    let (_, h, growth) = kernel_constants(cfg, cfg.step_p_max + 1)?;
    let f_cal = growth.lambda;
    let (u, f) = trig_pair(1.0, 0.0, cfg.s)?;
    let (gu, gf) = gaussian_pair(1.0, cfg.s, 1)?;
    let lc = ladder_with(&u, Some(&f), cfg.step_radius, cfg.s, cfg.step_p_max, &cfg.ladder)?;
    let lg = ladder_with(&gu, Some(&gf), cfg.step_radius, cfg.s, cfg.step_p_max, &cfg.ladder)?;
    let unit = (1..=cfg.step_p_max)
        .map(|p| verify_step(&lc, p, 1.0, f_cal, &h, u.sup_bound()))
        .collect::<Result<Vec<_>>>()?;
    let e = calibrate(&[], &unit, f_cal).e;
    let mut tables = Vec::new();
    let mut maxima = Vec::new();
    for (label, l, sup) in [("cos", &lc, u.sup_bound()), ("gaussian", &lg, gu.sup_bound())] {
        let mut table = Table::new(format!("step_{label}"), &["p", "lhs", "rhs", "ratio"]);
        let mut max: f64 = 0.0;
        for p in 1..=cfg.step_p_max {
            let row = verify_step(l, p, e, f_cal, &h, sup)?;
            table.rows.push(vec![p as f64, row.lhs, row.rhs, row.ratio]);
            max = max.max(row.ratio);
        }
        tables.push(table);
        maxima.push(max);
    }
    Ok((
        StepOutcome {
            e,
            f: f_cal,
            nu: growth.nu,
            calibrated_max: maxima[0],
            holdout_max: maxima[1],
        },
        tables,
    ))
}

fn step_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let (out, tables) = step_outcome(cfg)?;
    let checks = vec![
        Check::at_most(
            "calibrated",
            out.calibrated_max,
            1.0 + 1e-12,
            format!("largest cos-pair ratio at E = {}, F = {}", out.e, out.f),
        ),
        Check::at_most(
            "holdout",
            out.holdout_max,
            cfg.transfer_limit,
            "largest gaussian-pair ratio with the frozen (E, F)".into(),
        ),
    ];
    let summary = serde_json::to_value(&out).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(SuiteResult::new(SuiteName::Step, checks, tables, summary))
}

/// Induction constants assembled from the step calibration and the source
/// fit of the cos pair.
pub fn calibrated_constants(cfg: &SuiteConfig) -> Result<InductionConstants> {
    let (step, _) = step_outcome(cfg)?;
    let (u, f) = trig_pair(1.0, 0.0, cfg.s)?;
    let src = fit_source_constants(&f, cfg.step_radius, cfg.step_p_max, cfg.ladder.spatial_points)?;
    Ok(InductionConstants::new(
        step.e,
        step.f,
        src.l,
        src.a,
        step.nu,
        src.tau,
        u.sup_bound(),
        cfg.step_radius,
        cfg.s,
    ))
}

fn closure_suite(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let simple = InductionConstants::new(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, cfg.step_radius, cfg.s);
    let simple_res = induction_closure(&simple, cfg.closure_p_check)?;
    let constants = calibrated_constants(cfg)?;
    let res = induction_closure(&constants, cfg.closure_p_check)?;
    let mut table = Table::new("closure".into(), &["p", "lhs", "rhs", "ratio"]);
    let mut worst: f64 = 0.0;
    for p in 1..=cfg.closure_p_check {
        let b = induction_bracket(&constants, res.gamma, res.v, p);
        table.rows.push(vec![p as f64, b, 1.0, b]);
        worst = worst.max(b);
    }
    let checks = vec![
        Check::at_most(
            "two_term",
            simple_res.gamma,
            2.0,
            "minimal Gamma with E = F = 1, L = 0, uSup = 0".into(),
        ),
        Check::holds(
            "calibrated_feasible",
            res.feasible && res.asymptotic && res.gamma.is_finite(),
            format!("Gamma = {}, V = {}", res.gamma, res.v),
        ),
        Check::at_most(
            "witness",
            worst,
            1.0,
            format!("largest re-evaluated bracket for p = 1..={}", cfg.closure_p_check),
        ),
    ];
    let summary = json!({
        "two_term": simple_res,
        "constants": constants,
        "witness": res,
    });
    Ok(SuiteResult::new(SuiteName::Closure, checks, vec![table], summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in SuiteName::EACH.iter().chain(&[SuiteName::All]) {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), *n);
        }
        assert!("bogus".parse::<SuiteName>().is_err());
    }

    #[test]
    fn csv_shortest_floats() {
        let mut t = Table::new("t".into(), &["p", "x"]);
        t.rows.push(vec![1.0, 0.1]);
        t.rows.push(vec![2.0, 1e-20]);
        assert_eq!(t.to_csv(), "p,x\n1,0.1\n2,0.00000000000000000001\n");
    }

    #[test]
    fn convergence_start_rule() {
        assert_eq!(convergence_start(&Stencil::build(1).unwrap(), 5), 0.25);
        assert!(convergence_start(&Stencil::build(6).unwrap(), 5) > 0.5);
    }

    #[test]
    fn closure_suite_passes() {
        let r = run_suite(SuiteName::Closure, &SuiteConfig::default()).unwrap();
        assert!(r.verdict.pass, "{:?}", r.verdict);
    }
}
