//! Cartesian parameter sweeps. Every grid point is an independent run in its own
//! directory; a ledger records which runs completed.

use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_config, LedgerOrder, RunConfig, SweepTask};
use crate::error::{Result, RunError};
use crate::output::{fmt_f64, ArtifactDir};
use crate::run::{run_into, RunOptions, CONFIG_ECHO};

pub const LEDGER: &str = "ledger.csv";

#[derive(Debug, Clone)]
struct LedgerRow {
    index: usize,
    status: &'static str,
    dir: String,
    values: Vec<String>,
    error: String,
}

/// All grid points, last axis varying fastest.
pub fn grid_points(axes: &[crate::config::SweepAxis]) -> Vec<Vec<toml::Value>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    points
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => fmt_f64(*f),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Sets `dotted.key` in `doc`, creating intermediate tables.
fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> std::result::Result<(), String> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| format!("empty key `{key}`"))?;
    let mut table = doc;
    for part in parts {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| format!("`{part}` in `{key}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// The run config for one grid point, validated like a standalone config.
fn point_config(cfg: &RunConfig, sweep: &SweepTask, point: &[toml::Value]) -> Result<RunConfig> {
    let mut doc: toml::Table = toml::from_str(&cfg.to_toml()).expect("echo parses");
    let mut task = sweep.base.clone();
    task.insert("kind".into(), toml::Value::String(sweep.run.name().into()));
    doc.insert("task".into(), toml::Value::Table(task));
    for (axis, value) in sweep.axes.iter().zip(point) {
        set_path(&mut doc, &axis.key, value.clone()).map_err(|constraint| crate::config::ConfigError::Validation {
            key: axis.key.clone(),
            constraint,
        })?;
    }
    let text = toml::to_string(&doc).expect("toml table serialises");
    Ok(parse_config(&text, Some(sweep.run))?)
}

fn write_ledger(out: &Path, axes: &[String], rows: &[LedgerRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(out.join(LEDGER)).map_err(std::io::Error::other)?;
    let mut header = vec!["index".to_string(), "status".into(), "dir".into()];
    header.extend(axes.iter().cloned());
    header.push("error".into());
    w.write_record(&header).map_err(std::io::Error::other)?;
    for r in rows {
        let mut rec = vec![r.index.to_string(), r.status.to_string(), r.dir.clone()];
        rec.extend(r.values.iter().cloned());
        rec.push(r.error.clone());
        w.write_record(&rec).map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn run_sweep(cfg: &RunConfig, sweep: &SweepTask, dir: &Path, opts: &RunOptions) -> Result<Value> {
    let mut out = ArtifactDir::create(dir)?;
    out.text(CONFIG_ECHO, &cfg.to_toml())?;
    let points = grid_points(&sweep.axes);
    let axes: Vec<String> = sweep.axes.iter().map(|a| a.key.clone()).collect();
    let width = points.len().saturating_sub(1).to_string().len().max(4);
    let ledger: Mutex<Vec<LedgerRow>> = Mutex::new(Vec::new());
    let order = cfg.output.ledger_order;

    let job = |index: usize| {
        let point = &points[index];
        let name = format!("run-{index:0width$}");
        let result = point_config(cfg, sweep, point).and_then(|c| run_into(&c, &dir.join(&name), opts));
        let row = LedgerRow {
            index,
            status: if result.is_ok() { "ok" } else { "error" },
            dir: name,
            values: point.iter().map(value_text).collect(),
            error: result.as_ref().err().map(|e: &RunError| e.to_string()).unwrap_or_default(),
        };
        let mut rows = ledger.lock().expect("ledger lock");
        rows.push(row);
        if order == LedgerOrder::Index {
            rows.sort_by_key(|r| r.index);
        }
        // Rewritten after every run so an interrupted sweep still leaves a ledger.
        let _ = write_ledger(dir, &axes, &rows);
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(std::io::Error::other)?;
    pool.install(|| (0..points.len()).into_par_iter().for_each(job));

    let rows = ledger.into_inner().expect("ledger lock");
    write_ledger(dir, &axes, &rows)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let summary = json!({ "runs": rows.len(), "failed": failed, "ledger": LEDGER, "axes": axes });
    out.json("sweep.json", &summary)?;
    if failed > 0 {
        return Err(RunError::SweepIncomplete { failed, total: rows.len() });
    }
    Ok(summary)
}
