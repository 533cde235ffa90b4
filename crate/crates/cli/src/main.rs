//! `gevrey`: batch driver for stencils, operator evaluation, verification
//! suites, norm ladders and Gevrey fits.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or configuration
//! error.

mod commands;
mod error;
mod job;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Output;
use crate::error::{CliError, CliResult};
use crate::job::JobConfig;

#[derive(Debug, Parser)]
#[command(name = "gevrey", version, about = "Incremental quotients, nonlocal operators and Gevrey ladders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JobConfig JSON; flags override its values.
    #[arg(long, value_name = "FILE.json")]
    config: Option<PathBuf>,
    /// Directory for report.json and tables/*.csv (default: report on stdout).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact incremental-quotient coefficients of order k.
    Stencil {
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluates the nonlocal operator on a field at a point.
    Eval {
        /// Field description (file or inline JSON).
        #[arg(long, value_name = "FILE.json")]
        field: Option<String>,
        /// Kernel description; `--s` alone selects the fractional kernel.
        #[arg(long, value_name = "FILE.json")]
        kernel: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        /// Evaluation point, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a verification suite: stencil, proint, apriori, step, closure or all.
    Verify {
        #[arg(long, value_name = "NAME")]
        suite: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm ladder N*_{R,p} of a field.
    Ladder {
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Norm ladder plus Gevrey fit and key criterion.
    Fit {
        #[command(flatten)]
        ladder: LadderArgs,
        /// Smallest order used by the fit.
        #[arg(long)]
        pmin: Option<i64>,
        #[command(flatten)]
        common: Common,
    },
    /// Structural checks (K1)-(K3) of a kernel.
    Kernel {
        #[arg(long, value_name = "FILE.json")]
        kernel: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        /// Highest derivative order H_m.
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct LadderArgs {
    #[arg(long, value_name = "FILE.json")]
    field: Option<String>,
    #[arg(long = "R")]
    r_big: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    pmax: Option<usize>,
}

fn base(common: &Common, command: &str) -> CliResult<JobConfig> {
    let mut job = JobConfig::load(common.config.as_deref())?;
    job.command = command.into();
    if let Some(seed) = common.seed {
        job.seed = seed;
    }
    job.suites.seed = job.seed;
    if common.out.is_some() {
        job.out = common.out.clone();
    }
    Ok(job)
}

fn apply_ladder(job: &mut JobConfig, a: &LadderArgs) -> CliResult<()> {
    job.set_field(a.field.as_deref())?;
    job.r_big = a.r_big.or(job.r_big);
    job.s = a.s.or(job.s);
    job.p_max = a.pmax.or(job.p_max);
    Ok(())
}

fn run(cli: Cli) -> CliResult<(JobConfig, Output)> {
    let (job, out) = match cli.command {
        Command::Stencil { k, common } => {
            let mut job = base(&common, "stencil")?;
            job.k = k.or(job.k);
            let out = commands::stencil(&job)?;
            (job, out)
        }
        Command::Eval {
            field,
            kernel,
            s,
            x,
            common,
        } => {
            let mut job = base(&common, "eval")?;
            job.set_field(field.as_deref())?;
            job.set_kernel(kernel.as_deref())?;
            job.s = s.or(job.s);
            job.x = x.or(job.x);
            let out = commands::eval(&job)?;
            (job, out)
        }
        Command::Verify { suite, s, common } => {
            let mut job = base(&common, "verify")?;
            job.suite = suite.or(job.suite);
            if let Some(s) = s {
                job.s = Some(s);
            }
            if let Some(s) = job.s {
                job.suites.s = s;
            }
            let out = commands::verify(&job)?;
            (job, out)
        }
        Command::Ladder { ladder, common } => {
            let mut job = base(&common, "ladder")?;
            apply_ladder(&mut job, &ladder)?;
            let out = commands::ladder(&job)?;
            (job, out)
        }
        Command::Fit { ladder, pmin, common } => {
            let mut job = base(&common, "fit")?;
            apply_ladder(&mut job, &ladder)?;
            job.p_min = pmin.or(job.p_min);
            let out = commands::fit(&job)?;
            (job, out)
        }
        Command::Kernel { kernel, s, m, common } => {
            let mut job = base(&common, "kernel")?;
            job.set_kernel(kernel.as_deref())?;
            job.s = s.or(job.s);
            job.m = m.or(job.m);
            let out = commands::kernel(&job)?;
            (job, out)
        }
    };
    Ok((job, out))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(job: &JobConfig, out: &Output) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(&out.report).expect("report serializes");
    text.push('\n');
    match &job.out {
        None => print!("{text}"),
        Some(dir) => {
            let tables = dir.join("tables");
            fs::create_dir_all(&tables).map_err(|source| CliError::Io {
                path: tables.clone(),
                source,
            })?;
            write(&dir.join("report.json"), &text)?;
            for t in &out.tables {
                write(&tables.join(format!("{}.csv", t.name)), &t.to_csv())?;
            }
        }
    }
    for line in &out.summary {
        eprintln!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|(job, out)| emit(&job, &out).map(|_| out.exit)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
