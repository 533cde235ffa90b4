use gevrey_core::fields::{gaussian_pair, trig_pair, FieldKind};
use gevrey_core::gevrey::{fit_gevrey, ladder_with, NormLadder};
use gevrey_core::kernel::{check_kernel, SamplingConfig};
use gevrey_core::quad::evaluate;
use gevrey_core::suites::Table;
use gevrey_core::{run_suite, KernelSpec, ScalarField, Stencil, SuiteName, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::job::JobConfig;

/// Result of one command, written once at the end of the run.
pub struct Output {
    pub report: Value,
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    pub exit: u8,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn report(job: &JobConfig, result: Value) -> Value {
    json!({ "version": VERSION, "job": to_value(job), "result": result })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn stencil(job: &JobConfig) -> CliResult<Output> {
    let k = job.k.ok_or_else(|| CliError::Usage("missing --k".into()))?;
    let st = Stencil::build(k)?;
    let summary = vec![format!(
        "k = {k}: nodes {:?}, coefficients {:?}",
        st.nodes(),
        st.coefficients().iter().map(|c| c.to_string()).collect::<Vec<_>>()
    )];
    Ok(Output {
        report: report(job, to_value(&st)),
        tables: Vec::new(),
        summary,
        exit: 0,
    })
}

fn kernel_for(job: &JobConfig, dim: usize) -> CliResult<KernelSpec> {
    match (&job.kernel, job.s) {
        (Some(k), _) => Ok(KernelSpec::try_from(k)?),
        (None, Some(s)) => Ok(KernelSpec::fractional(dim, s)?),
        (None, None) => Err(CliError::Usage(
            "missing kernel parameter: pass --kernel FILE.json or --s".into(),
        )),
    }
}

/// Closed-form image of `u` under the fractional kernel, when known.
fn exact_image(u: &ScalarField, k: &KernelSpec) -> CliResult<Option<ScalarField>> {
    if k.kind_name() != "fractional" || k.dim() != u.dim() {
        return Ok(None);
    }
    Ok(match u.kind() {
        FieldKind::Trig { omega, phi } if u.dim() == 1 => Some(trig_pair(*omega, *phi, k.s())?.1),
        FieldKind::Gaussian { alpha } => Some(gaussian_pair(*alpha, k.s(), u.dim())?.1),
        FieldKind::Polynomial { coeffs } if coeffs.len() <= 1 => Some(ScalarField::constant(0.0, u.dim())),
        _ => None,
    })
}

pub fn eval(job: &JobConfig) -> CliResult<Output> {
    let u = job.require_field()?;
    let k = kernel_for(job, u.dim())?;
    let x = job.x.clone().unwrap_or_else(|| vec![0.0; u.dim()]);
    let value = evaluate(u, &k, &x, &job.quadrature)?;
    let mut result = json!({ "x": x, "operator": to_value(&value) });
    let mut summary = vec![format!("value = {} (error bound {})", value.value, value.error_bound)];
    if let Some(f) = exact_image(u, &k)? {
        let exact = f.eval(&x)?;
        let rel = if exact == 0.0 {
            value.value.abs()
        } else {
            (value.value - exact).abs() / exact.abs()
        };
        result["exact"] = json!(exact);
        result["relative_error"] = json!(rel);
        summary.push(format!("exact = {exact}, relative error = {rel}"));
    }
    Ok(Output {
        report: report(job, result),
        tables: Vec::new(),
        summary,
        exit: 0,
    })
}

pub fn verify(job: &JobConfig) -> CliResult<Output> {
    let name: SuiteName = job
        .suite
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing --suite".into()))?
        .parse()
        .map_err(|e: gevrey_core::Error| CliError::Usage(e.to_string()))?;
    let rep = run_suite(name, &job.suites)?;
    let mut summary = Vec::new();
    for s in &rep.suites {
        for c in &s.checks {
            summary.push(format!(
                "{} {}/{}: {} (limit {}) {}",
                verdict(c.pass),
                s.suite,
                c.name,
                c.value,
                c.limit,
                c.detail
            ));
        }
    }
    summary.push(format!(
        "{}: {} checks, {} failed",
        verdict(rep.verdict.pass),
        rep.verdict.checks,
        rep.verdict.failed.len()
    ));
    let tables = rep.tables().cloned().collect();
    Ok(Output {
        exit: if rep.verdict.pass { 0 } else { 1 },
        report: report(job, to_value(&rep)),
        tables,
        summary,
    })
}

fn ladder_of(job: &JobConfig) -> CliResult<NormLadder> {
    let u = job.require_field()?;
    Ok(ladder_with(
        u,
        None,
        job.r_big.unwrap_or(2.0),
        job.s.unwrap_or(0.75),
        job.p_max.unwrap_or(14),
        &job.ladder,
    )?)
}

fn ladder_table(l: &NormLadder) -> Table {
    Table {
        name: "ladder".into(),
        columns: vec!["p".into(), "nstar".into(), "argmax_r".into()],
        rows: l
            .nstar
            .iter()
            .map(|(&p, &n)| vec![p as f64, n, l.nstar_argmax.get(&p).copied().unwrap_or(f64::NAN)])
            .collect(),
    }
}

pub fn ladder(job: &JobConfig) -> CliResult<Output> {
    let l = ladder_of(job)?;
    let summary = vec![format!("N* for p = -2..={} ({})", l.p_max, l.certification)];
    Ok(Output {
        tables: vec![ladder_table(&l)],
        report: report(job, to_value(&l)),
        summary,
        exit: 0,
    })
}

pub fn fit(job: &JobConfig) -> CliResult<Output> {
    let l = ladder_of(job)?;
    let fit = fit_gevrey(&l, job.p_min.unwrap_or(4), l.p_max as i64)?;
    let key = fit.check(&l);
    let mut result = json!({ "ladder": to_value(&l), "fit": to_value(&fit), "key": to_value(&key) });
    let mut summary = vec![format!(
        "sigma = {} (raw {}), logGamma = {}, logV = {}",
        fit.sigma, fit.sigma_raw, fit.log_gamma, fit.log_v
    )];
    if fit.finitely_supported {
        result["marker"] = json!("finitely supported ladder");
        summary.push("finitely supported ladder".into());
    }
    summary.push(format!("{} key criterion, log margin {}", verdict(key.pass), key.log_margin));
    Ok(Output {
        tables: vec![ladder_table(&l)],
        report: report(job, result),
        summary,
        exit: if key.pass { 0 } else { 1 },
    })
}

pub fn kernel(job: &JobConfig) -> CliResult<Output> {
    let spec = kernel_for(job, 1)?;
    let cfg = SamplingConfig {
        seed: job.seed,
        ..Default::default()
    };
    let rep = check_kernel(&spec, job.m.unwrap_or(10), &cfg)?;
    let summary: Vec<String> = rep
        .verdicts()
        .iter()
        .map(|(name, pass)| format!("{} {name}", verdict(*pass)))
        .collect();
    let pass = rep.verdicts().iter().all(|(_, p)| *p);
    Ok(Output {
        report: report(job, to_value(&rep)),
        tables: Vec::new(),
        summary,
        exit: if pass { 0 } else { 1 },
    })
}
