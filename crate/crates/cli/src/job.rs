//! `JobConfig`: everything that determines a run. Identical configs give
//! byte-identical reports; the output directory is not part of the report.

use std::fs;
use std::path::{Path, PathBuf};

use gevrey_core::gevrey::LadderConfig;
use gevrey_core::kernel::KernelJson;
use gevrey_core::{QuadratureConfig, ScalarField, SuiteConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct JobConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<ScalarField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r_big: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    /// Highest kernel derivative order for `kernel`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub ladder: LadderConfig,
    pub suites: SuiteConfig,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}


fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inline JSON (starting with `{`) or a path to a JSON file.
fn json_arg(arg: &str) -> CliResult<Value> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid JSON in {arg}: {e}")))
}

impl JobConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => serde_json::from_str(&read(p)?)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display()))),
        }
    }

    pub fn set_field(&mut self, arg: Option<&str>) -> CliResult<()> {
        if let Some(arg) = arg {
            self.field = Some(ScalarField::from_json(&json_arg(arg)?)?);
        }
        Ok(())
    }

    pub fn set_kernel(&mut self, arg: Option<&str>) -> CliResult<()> {
        if let Some(arg) = arg {
            let kernel: KernelJson = serde_json::from_value(json_arg(arg)?)
                .map_err(|e| CliError::Usage(format!("invalid kernel description: {e}")))?;
            self.kernel = Some(kernel);
        }
        Ok(())
    }

    pub fn require_field(&self) -> CliResult<&ScalarField> {
        self.field
            .as_ref()
            .ok_or_else(|| CliError::Usage("missing field: pass --field FILE.json".into()))
    }
}
