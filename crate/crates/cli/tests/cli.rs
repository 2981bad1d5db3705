use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// Small grids shared by every numerical test.
const COARSE: &str = r#"
[grid]
eigenNodes = 128
eigenSteps = 128
semiwaveNodesPerUnit = 32
semiwaveSteps = 128
fluxSamples = 64
nxi = 128
dtfrac = 0.0078125
"#;

struct Run {
    output: Output,
    out: PathBuf,
}

impl Run {
    fn ok(&self) -> Value {
        assert!(
            self.output.status.success(),
            "exit {:?}\nstderr: {}",
            self.output.status.code(),
            String::from_utf8_lossy(&self.output.stderr)
        );
        serde_json::from_slice(&self.output.stdout).expect("summary on stdout")
    }

    fn code(&self) -> Option<i32> {
        self.output.status.code()
    }

    fn error_record(&self) -> Value {
        let stderr = String::from_utf8_lossy(&self.output.stderr);
        let line = stderr.lines().last().expect("error record on stderr");
        serde_json::from_str(line).expect("error record is json")
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

fn fkpp(dir: &Path, sub: &str, config: &str, out: &str, extra: &[&str]) -> Run {
    let path = dir.join(format!("{out}.toml"));
    fs::write(&path, config).unwrap();
    let out = dir.join(out);
    let output = Command::new(env!("CARGO_BIN_EXE_fkpp"))
        .arg(sub)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .env_remove("FKPP_OUTPUT_ROOT")
        .output()
        .unwrap();
    Run { output, out }
}

fn config(body: &str) -> String {
    format!("schema = 1\n{COARSE}\n{body}")
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

/// Front slope `q'(0)` of the travelling-wave orbit for drift `k`, by integrating the
/// phase-plane ODE `p dp/dq = -k p - q (1 - q)` from the saddle at `q = 1`.
fn phase_plane_slope(k: f64) -> f64 {
    let m = 0.5 * (-k - (k * k + 4.0).sqrt());
    let delta = 1e-7;
    let n = 20000;
    let (mut q, mut p) = (1.0 - delta, -m * delta);
    let h = -q / n as f64;
    let rhs = |q: f64, p: f64| -k - q * (1.0 - q) / p;
    for _ in 0..n {
        let k1 = rhs(q, p);
        let k2 = rhs(q + 0.5 * h, p + 0.5 * h * k1);
        let k3 = rhs(q + 0.5 * h, p + 0.5 * h * k2);
        let k4 = rhs(q + h, p + h * k3);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        q += h;
    }
    p
}

fn speed_oracle(beta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, beta + 2.0);
    for _ in 0..60 {
        let c = 0.5 * (lo + hi);
        if c < phase_plane_slope(beta - c) {
            lo = c;
        } else {
            hi = c;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn critical_on_homogeneous_preset() {
    let dir = TempDir::new().unwrap();
    let run = fkpp(dir.path(), "critical", &config(""), "crit", &[]);
    let s = run.ok();
    assert_eq!(s["cbar"].as_f64().unwrap(), 2.0);
    assert_eq!(s["regime"], "Small");
    let mean_r = s["mean_r"].as_f64().unwrap();
    assert!((mean_r - speed_oracle(0.0)).abs() < 1e-3, "{mean_r}");
    // B(0) = A[cbar] + cbar for a constant shape, with A[k] = q'(0; k).
    let b = s["b_theta"].as_f64().unwrap();
    assert!((b - (phase_plane_slope(2.0) + 2.0)).abs() < 1e-2, "{b}");
    assert_eq!(run.json("critical.json"), s);
    let r = csv_rows(&run.read("r.csv"));
    assert_eq!(r.len(), 256);
    assert!(r.iter().all(|row| (row[1] - mean_r).abs() < 1e-6));
}

#[test]
fn eigen_table_matches_separable_oracle() {
    let dir = TempDir::new().unwrap();
    let body = r#"
[problem]
beta = { kind = "const", value = -1.0 }
[task]
kind = "eigen"
lengths = [1.0, 2.0]
lengthRange = { from = 3.0, to = 4.0, count = 3 }
"#;
    let run = fkpp(dir.path(), "eigen", &config(body), "eig", &[]);
    let s = run.ok();
    // k = -beta = 1, a = 1: lambda = pi^2/l^2 + 1/4 - 1, l* = 2 pi / sqrt(3).
    let rows = csv_rows(&run.read("eigen.csv"));
    assert_eq!(rows.len(), 5);
    for row in rows {
        let exact = std::f64::consts::PI.powi(2) / (row[0] * row[0]) - 0.75;
        assert!((row[1] - exact).abs() < 1e-4, "{row:?}");
    }
    let l = s["critical_length"]["value"].as_f64().unwrap();
    assert!((l - 2.0 * std::f64::consts::PI / 3f64.sqrt()).abs() < 1e-4);
}

#[test]
fn semiwave_flux_for_zero_drift() {
    let dir = TempDir::new().unwrap();
    let body = "[task]\nkind = \"semiwave\"\n";
    let run = fkpp(dir.path(), "semiwave", &config(body), "sw", &[]);
    let s = run.ok();
    let flux = s["flux_mean"].as_f64().unwrap();
    assert!((flux - 1.0 / 3f64.sqrt()).abs() < 2e-3, "{flux}");
    let profile = csv_rows(&run.read("profile.csv"));
    assert!(profile.iter().all(|row| row.len() == 3 && row[2] >= -1e-12 && row[2] <= 1.0 + 1e-9));
    // mu is sampled on grid.periodNodes = 256 points, finer than the 64 flux samples.
    assert_eq!(csv_rows(&run.read("flux.csv")).len(), 256);
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let body = "[task]\nkind = \"simulate\"\nh0 = 1.0\nsigma = 0.5\nhorizonPeriods = 3\nsnapshotEveryPeriods = 1\n";
    let a = fkpp(dir.path(), "simulate", &config(body), "a", &[]);
    let b = fkpp(dir.path(), "simulate", &config(body), "b", &[]);
    a.ok();
    b.ok();
    for name in ["trajectory.csv", "snapshots.csv", "config.toml"] {
        assert_eq!(a.read(name), b.read(name), "{name}");
    }
    let header = a.read("trajectory.csv");
    assert!(header.starts_with("t,g,h,gdot,hdot,supnorm\n"));
    assert!(a.read("snapshots.csv").starts_with("t,xi,x,w\n"));
    let rows = csv_rows(&header);
    assert!((rows.last().unwrap()[0] - 3.0).abs() < 1e-12);
    // The echoed config is a complete, valid config.
    let echo = a.read("config.toml");
    let again = fkpp_cli::parse_config(&echo, None).unwrap();
    assert_eq!(again.task.kind(), fkpp_cli::TaskKind::Simulate);
    let manifest = a.json("manifest.json");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config_file"], "config.toml");
    assert!(manifest["wall_time_seconds"].as_f64().is_some());
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|v| v == "trajectory.csv"));
}

#[test]
fn classify_large_data_spreads() {
    let dir = TempDir::new().unwrap();
    let body = "[task]\nkind = \"classify\"\nh0 = 2.0\nsigma = 1.0\nasymptotics = true\n";
    let run = fkpp(dir.path(), "classify", &config(body), "cls", &[]);
    let s = run.ok();
    assert_eq!(s["outcome"]["kind"], "Spreading");
    assert_eq!(run.json("outcome.json")["kind"], "Spreading");
    assert!(s["asymptotics"]["h1"].as_f64().unwrap().is_finite());
    assert!(run.read("asymptotics.csv").starts_with("t,h_minus_r,speed_residual\n"));
}

#[test]
fn threshold_in_small_regime_meets_tolerance() {
    let dir = TempDir::new().unwrap();
    let body = "[task]\nkind = \"threshold\"\nh0 = 0.5\nbracket = [0.5, 8.0]\nrelTol = 0.05\n";
    let run = fkpp(dir.path(), "threshold", &config(body), "thr", &[]);
    let s = run.ok();
    let r = &s["result"];
    let (lo, hi) = (r["sigma_low"].as_f64().unwrap(), r["sigma_high"].as_f64().unwrap());
    assert!(0.0 < lo && lo < hi);
    assert!(r["bracket_width"].as_f64().unwrap() <= 0.05 * hi + 1e-12);
    assert_eq!(s["monotone"], true);
    let probes = run.read("probes.csv");
    assert!(probes.starts_with("sigma,kind,confidence,t_end,width,grid\n"));
    assert_eq!(probes.lines().count() - 1, r["probes"].as_array().unwrap().len());
}

#[test]
fn threshold_rejects_large_regime() {
    let dir = TempDir::new().unwrap();
    let body = "[problem]\nbeta = { kind = \"const\", value = 5.0 }\n[task]\nkind = \"threshold\"\n";
    let run = fkpp(dir.path(), "threshold", &config(body), "large", &[]);
    assert_eq!(run.code(), Some(1));
    let rec = run.error_record();
    assert_eq!(rec["code"], "regime_error");
    assert_eq!(run.json("error.json"), rec);
    assert_eq!(run.json("manifest.json")["status"], "error");
}

#[test]
fn unknown_key_is_a_parse_error_with_suggestion() {
    let dir = TempDir::new().unwrap();
    let text = "schema = 1\n[problem]\nperiod = 1.0\nbetaa = { kind = \"const\", value = 0.0 }\n";
    let run = fkpp(dir.path(), "critical", text, "typo", &[]);
    assert_eq!(run.code(), Some(2));
    let rec = run.error_record();
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["code"], "parse");
    assert_eq!(rec["key"], "betaa");
    assert_eq!(rec["line"], 4);
    assert!(rec["message"].as_str().unwrap().contains("did you mean `beta`"));
    assert_eq!(run.json("error.json"), rec);
}

#[test]
fn unknown_task_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = "schema = 1\n[task]\nkind = \"simulate\"\nsigmaa = 1.0\n";
    let run = fkpp(dir.path(), "simulate", text, "typo", &[]);
    assert_eq!(run.code(), Some(2));
    assert!(run.error_record()["message"].as_str().unwrap().contains("`sigma`"));
}

#[test]
fn negative_period_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let run = fkpp(dir.path(), "eigen", "schema = 1\n[problem]\nperiod = -1.0\n", "neg", &[]);
    assert_eq!(run.code(), Some(2));
    let rec = run.error_record();
    assert_eq!(rec["code"], "validation");
    assert_eq!(rec["key"], "problem.period");
    assert!(rec["message"].as_str().unwrap().contains("T > 0"));
}

#[test]
fn validate_reports_hypotheses() {
    let dir = TempDir::new().unwrap();
    let good = fkpp(dir.path(), "validate", "schema = 1\n", "good", &["--task", "critical"]);
    let s = good.ok();
    assert_eq!(s["hypotheses"]["all_passed"], true);
    assert!(!good.out.exists(), "validate writes nothing");

    let bad = "schema = 1\n[problem]\nreaction = { preset = \"logistic\", a = { kind = \"const\", value = -1.0 } }\n";
    let run = fkpp(dir.path(), "validate", bad, "bad", &["--task", "critical"]);
    assert_eq!(run.code(), Some(3));
    assert_eq!(run.error_record()["kind"], "hypotheses");
}

fn sweep_config(extra: &str) -> String {
    config(&format!(
        r#"
[task]
kind = "sweep"
run = "simulate"
base = {{ horizonPeriods = 2 }}
axes = [
  {{ key = "task.sigma", values = [0.5, 1.0] }},
  {{ key = "task.h0", values = [0.5, 1.0, 1.5] }},
]
{extra}
"#
    ))
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let one = fkpp(dir.path(), "sweep", &sweep_config(""), "one", &["--workers", "1"]);
    let many = fkpp(dir.path(), "sweep", &sweep_config(""), "many", &["--workers", "3"]);
    assert_eq!(one.ok()["runs"], 6);
    many.ok();
    assert_eq!(one.read("ledger.csv"), many.read("ledger.csv"));
    let ledger = one.read("ledger.csv");
    assert!(ledger.starts_with("index,status,dir,task.sigma,task.h0,error\n"));
    assert!(ledger.contains("\n4,ok,run-0004,1,1,\n") || ledger.contains("\n4,ok,run-0004,1.0,1.0,\n"), "{ledger}");
    for i in 0..6 {
        let name = format!("run-{i:04}/trajectory.csv");
        assert_eq!(one.read(&name), many.read(&name));
        let cfg = fkpp_cli::parse_config(&one.read(&format!("run-{i:04}/config.toml")), None).unwrap();
        match cfg.task {
            fkpp_cli::config::Task::Simulate(t) => {
                assert_eq!(t.sigma, [0.5, 1.0][i / 3]);
                assert_eq!(t.h0, [0.5, 1.0, 1.5][i % 3]);
                assert_eq!(t.horizon_periods, 2);
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn sweep_keeps_partial_results() {
    let dir = TempDir::new().unwrap();
    let text = config(
        r#"
[task]
kind = "sweep"
run = "simulate"
base = { horizonPeriods = 1 }
axes = [{ key = "task.sigma", values = [0.5, -1.0, 1.0] }]
"#,
    );
    let run = fkpp(dir.path(), "sweep", &text, "partial", &[]);
    assert_eq!(run.code(), Some(4));
    let ledger = run.read("ledger.csv");
    let rows: Vec<&str> = ledger.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0,ok,"));
    assert!(rows[1].starts_with("1,error,") && rows[1].contains("task.sigma"));
    assert!(rows[2].starts_with("2,ok,"));
    assert!(run.out.join("run-0002/trajectory.csv").exists());
}

#[test]
fn seedless_rejects_completion_order_and_drops_wall_time() {
    let dir = TempDir::new().unwrap();
    let text = sweep_config("[output]\nledgerOrder = \"completion\"\n");
    let run = fkpp(dir.path(), "sweep", &text, "order", &["--seedless"]);
    assert_eq!(run.code(), Some(2));
    assert_eq!(run.error_record()["key"], "output.ledgerOrder");

    let body = "[task]\nkind = \"simulate\"\nhorizonPeriods = 1\n";
    let run = fkpp(dir.path(), "simulate", &config(body), "sl", &["--seedless"]);
    run.ok();
    assert!(run.json("manifest.json")["wall_time_seconds"].is_null());
}

#[test]
fn output_root_variable_applies_without_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, config("[task]\nkind = \"simulate\"\nhorizonPeriods = 1\n[output]\ndir = \"nested/run\"\n")).unwrap();
    let root = dir.path().join("root");
    let status = Command::new(env!("CARGO_BIN_EXE_fkpp"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .env("FKPP_OUTPUT_ROOT", &root)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(root.join("nested/run/trajectory.csv").exists());
}
