//! Single runs: config echo, task dispatch, manifest and error record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use fkpp_core::periodic::validate_hypotheses;

use crate::config::{LedgerOrder, RunConfig, Task};
use crate::error::{ErrorRecord, Result, RunError};
use crate::output::ArtifactDir;

/// Environment variable naming a root directory for relative output directories.
pub const OUTPUT_ROOT_VAR: &str = "FKPP_OUTPUT_ROOT";

/// Options that come from the command line rather than the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir` (and the output root).
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Reject options whose effect depends on scheduling or the clock, and keep wall time
    /// out of the manifest.
    pub seedless: bool,
    /// Value of [`OUTPUT_ROOT_VAR`], if set.
    pub output_root: Option<PathBuf>,
}

impl RunOptions {
    pub fn output_dir(&self, cfg: &RunConfig) -> PathBuf {
        if let Some(out) = &self.out {
            return out.clone();
        }
        let dir = Path::new(&cfg.output.dir);
        match &self.output_root {
            Some(root) if dir.is_relative() => root.join(dir),
            _ => dir.to_path_buf(),
        }
    }

    pub fn check(&self, cfg: &RunConfig) -> Result<()> {
        if self.seedless && cfg.output.ledger_order == LedgerOrder::Completion {
            return Err(crate::config::ConfigError::Validation {
                key: "output.ledgerOrder".into(),
                constraint: "`completion` order depends on scheduling and is rejected under --seedless".into(),
            }
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub schema: u32,
    pub task: &'static str,
    pub status: &'static str,
    /// Name of the echoed config inside the run directory.
    pub config_file: &'static str,
    pub config: &'a RunConfig,
    pub artifacts: Vec<String>,
    pub wall_time_seconds: Option<f64>,
    pub hypotheses: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

pub const CONFIG_ECHO: &str = "config.toml";
pub const MANIFEST: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

/// Runs a non-sweep config into `dir`. Always leaves the config echo and a manifest; on
/// failure also `error.json`.
pub fn run_into(cfg: &RunConfig, dir: &Path, opts: &RunOptions) -> Result<Value> {
    debug_assert!(!matches!(cfg.task, Task::Sweep(_)));
    let start = Instant::now();
    let mut out = ArtifactDir::create(dir)?;
    out.text(CONFIG_ECHO, &cfg.to_toml())?;
    let hypotheses = hypotheses_value(cfg);
    let result = crate::tasks::run_task(cfg, &mut out);
    let (status, summary, error) = match &result {
        Ok(summary) => ("ok", Some(summary.clone()), None),
        Err(e) => {
            let record = e.record();
            out.json(ERROR_FILE, &record)?;
            ("error", None, Some(record))
        }
    };
    let manifest = Manifest {
        tool: "fkpp",
        version: env!("CARGO_PKG_VERSION"),
        core_version: fkpp_core::VERSION,
        schema: cfg.schema,
        task: cfg.task.kind().name(),
        status,
        config_file: CONFIG_ECHO,
        config: cfg,
        artifacts: out.written().to_vec(),
        wall_time_seconds: (!opts.seedless).then(|| start.elapsed().as_secs_f64()),
        hypotheses,
        summary,
        error,
    };
    out.json(MANIFEST, &manifest)?;
    result
}

pub fn hypotheses_value(cfg: &RunConfig) -> Value {
    let built = (|| -> fkpp_core::Result<_> { Ok(validate_hypotheses(&cfg.beta()?, &cfg.mu()?, &cfg.reaction()?)) })();
    match built {
        Ok(report) => serde_json::json!({ "all_passed": report.all_passed(), "checks": report.checks }),
        Err(e) => serde_json::json!({ "all_passed": false, "error": e.to_string() }),
    }
}

/// Entry point for every subcommand except `validate`.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<Value> {
    opts.check(cfg)?;
    let dir = opts.output_dir(cfg);
    match &cfg.task {
        Task::Sweep(sweep) => crate::sweep::run_sweep(cfg, sweep, &dir, opts),
        _ => run_into(cfg, &dir, opts),
    }
}

/// `validate`: the normalised config and the hypothesis checks; fails when any check does.
pub fn validate(cfg: &RunConfig) -> Result<Value> {
    let hypotheses = hypotheses_value(cfg);
    let passed = hypotheses["all_passed"].as_bool().unwrap_or(false);
    let report = serde_json::json!({ "config": cfg, "hypotheses": hypotheses });
    if passed {
        Ok(report)
    } else {
        Err(RunError::Hypotheses(serde_json::to_string(&report["hypotheses"]).expect("json")))
    }
}
