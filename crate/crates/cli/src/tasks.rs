//! One function per subcommand. Each writes its artifacts into the run directory and
//! returns a JSON summary, which also ends up in the manifest.

use serde::Serialize;
use serde_json::{json, Value};

use fkpp_core::classify::{classify_run, critical_sigma, front_asymptotics, ThresholdContext};
use fkpp_core::critical::{advection_regime_with, critical_average_with, CriticalSpeeds, Regime, SpeedSolver};
use fkpp_core::eigen::{critical_length, principal_eigenvalue};
use fkpp_core::fbp::{simulate, Trajectory};
use fkpp_core::periodic::{Environment, PeriodicFn};
use fkpp_core::semiwave::{boundary_flux, half_line_profile, relax_dirichlet_pinned, relax_dirichlet_zero};

use crate::config::{
    ClassifyTask, CriticalTask, EigenTask, ProfileChoice, RunConfig, SemiwaveTask, SimulateTask, Task, ThresholdTask,
};
use crate::error::Result;
use crate::output::ArtifactDir;

/// Runs the (non-sweep) task of `cfg`.
pub fn run_task(cfg: &RunConfig, out: &mut ArtifactDir) -> Result<Value> {
    match &cfg.task {
        Task::Eigen(t) => eigen(cfg, t, out),
        Task::Semiwave(t) => semiwave(cfg, t, out),
        Task::Critical(t) => critical(cfg, t, out),
        Task::Simulate(t) => simulate_task(cfg, t, out),
        Task::Classify(t) => classify(cfg, t, out),
        Task::Threshold(t) => threshold(cfg, t, out),
        Task::Sweep(_) => unreachable!("sweeps are dispatched by the sweep runner"),
    }
}

fn periodic_csv(out: &mut ArtifactDir, name: &str, column: &str, f: &PeriodicFn) -> Result<()> {
    let mut table = out.csv(name, &["t", column])?;
    for (t, v) in f.times().zip(f.values()) {
        table.row(&[t, *v])?;
    }
    table.finish()?;
    Ok(())
}

fn environment(cfg: &RunConfig) -> Result<Environment> {
    Ok(Environment::new(cfg.reaction()?)?)
}

fn eigen(cfg: &RunConfig, task: &EigenTask, out: &mut ArtifactDir) -> Result<Value> {
    let k = match &task.drift {
        Some(spec) => cfg.coef(spec)?,
        None => cfg.coef(&cfg.problem.beta.negated())?,
    };
    let a = cfg.reaction()?.linearization(cfg.grid.period_nodes);
    let settings = cfg.eigen_settings();
    let mut table = out.csv("eigen.csv", &["length", "lambda1"])?;
    let mut rows = Vec::new();
    for l in task.all_lengths() {
        let r = principal_eigenvalue(&k, &a, l, &settings)?;
        table.row(&[l, r.lambda1])?;
        rows.push(json!({ "length": l, "lambda1": r.lambda1, "iterations": r.iterations }));
    }
    table.finish()?;
    let critical = if task.critical_length {
        match critical_length(&k, &a, cfg.tolerance.critical_length, &settings) {
            Ok(l) => json!({ "value": l }),
            Err(e @ fkpp_core::Error::NoCriticalLength { .. }) => json!({ "value": null, "reason": e.to_string() }),
            Err(e) => return Err(e.into()),
        }
    } else {
        Value::Null
    };
    Ok(json!({
        "drift_mean": k.mean(),
        "a_mean": a.mean(),
        "eigenvalues": rows,
        "critical_length": critical,
    }))
}

fn semiwave(cfg: &RunConfig, task: &SemiwaveTask, out: &mut ArtifactDir) -> Result<Value> {
    let env = environment(cfg)?;
    let k = cfg.coef(&task.drift)?;
    let mu = cfg.mu()?;
    let settings = cfg.semiwave_settings();
    let profile = match task.profile {
        ProfileChoice::HalfLine => half_line_profile(&k, &env, task.length, &settings)?,
        ProfileChoice::DirichletZero => relax_dirichlet_zero(&k, &env, task.length.unwrap_or_default(), &settings)?,
        ProfileChoice::Pinned => relax_dirichlet_pinned(&k, &env, task.length.unwrap_or_default(), &settings)?,
    };
    let field = &profile.field;
    let mut table = out.csv("profile.csv", &["t", "z", "value"])?;
    for (j, level) in field.levels().iter().enumerate() {
        let t = field.time_of_level(j);
        for (i, v) in level.iter().enumerate() {
            table.row(&[t, i as f64 * field.dz(), *v])?;
        }
    }
    table.finish()?;
    let flux = boundary_flux(&profile, &mu)?;
    periodic_csv(out, "flux.csv", "A", &flux)?;
    Ok(json!({
        "profile": task.profile,
        "length": profile.length,
        "is_zero": profile.is_zero,
        "periods": profile.periods,
        "period_change": profile.period_change,
        "flux_mean": flux.mean(),
        "flux_min": flux.min(),
        "flux_max": flux.max(),
    }))
}

#[derive(Debug, Serialize)]
struct CriticalSummary {
    cbar: f64,
    beta_mean: f64,
    mean_r: f64,
    mean_l: Option<f64>,
    /// `B(shape(beta))`.
    b_theta: f64,
    regime: Regime,
    /// `mean(beta) - cbar`.
    margin_cbar: f64,
    /// `mean(beta) - B(shape(beta))`.
    margin_b: f64,
    low_confidence: bool,
    /// `l*(-beta, a)` when the advection is small.
    ell_star: Option<f64>,
    r_residual: f64,
    r_iterations: usize,
}

fn critical(cfg: &RunConfig, task: &CriticalTask, out: &mut ArtifactDir) -> Result<Value> {
    let env = environment(cfg)?;
    let beta = cfg.beta()?;
    let mu = cfg.mu()?;
    let mut solver = SpeedSolver::new(&env, &mu, cfg.speed_settings())?;
    let regime = advection_regime_with(&mut solver, &beta)?;
    let b_theta = match regime.b_theta {
        Some(b) => b,
        None => critical_average_with(&mut solver, &beta.shape())?.value,
    };
    let right = solver.rightward(&beta)?;
    periodic_csv(out, "r.csv", "r", &right.speed)?;
    let small = regime.regime == Regime::Small;
    let mean_l = if small && task.leftward {
        let left = solver.leftward(&beta)?;
        periodic_csv(out, "l.csv", "l", &left.speed)?;
        Some(left.mean())
    } else {
        None
    };
    let ell_star = if small {
        Some(critical_length(&(-&beta), &env.linearization, cfg.tolerance.critical_length, &cfg.eigen_settings())?)
    } else {
        None
    };
    let summary = CriticalSummary {
        cbar: regime.cbar,
        beta_mean: regime.beta_mean,
        mean_r: right.mean(),
        mean_l,
        b_theta,
        regime: regime.regime,
        margin_cbar: regime.beta_mean - regime.cbar,
        margin_b: regime.beta_mean - b_theta,
        low_confidence: regime.low_confidence,
        ell_star,
        r_residual: right.residual,
        r_iterations: right.iterations,
    };
    out.json("critical.json", &summary)?;
    Ok(serde_json::to_value(summary).expect("plain data"))
}

fn trajectory_csv(out: &mut ArtifactDir, traj: &Trajectory) -> Result<()> {
    let mut table = out.csv("trajectory.csv", &["t", "g", "h", "gdot", "hdot", "supnorm"])?;
    for i in 0..traj.len() {
        table.row(&[traj.times[i], traj.g[i], traj.h[i], traj.gdot[i], traj.hdot[i], traj.sup[i]])?;
    }
    table.finish()?;
    Ok(())
}

fn snapshots_csv(out: &mut ArtifactDir, traj: &Trajectory) -> Result<()> {
    let mut table = out.csv("snapshots.csv", &["t", "xi", "x", "w"])?;
    for snap in &traj.snapshots {
        let n = snap.w.len() - 1;
        for (j, w) in snap.w.iter().enumerate() {
            table.row(&[snap.t, j as f64 / n as f64, snap.x_of(j), *w])?;
        }
    }
    table.finish()?;
    Ok(())
}

fn run_summary(traj: &Trajectory) -> Value {
    let last = &traj.last;
    json!({
        "t_end": traj.end_time(),
        "g": last.g,
        "h": last.h,
        "supnorm": last.sup(),
        "iterated_steps": traj.iterated_steps,
        "stopped_early": traj.stopped_early,
    })
}

fn simulate_task(cfg: &RunConfig, task: &SimulateTask, out: &mut ArtifactDir) -> Result<Value> {
    let problem = cfg.fbp_problem()?;
    let init = cfg.initial_data(task.h0, task.sigma)?;
    let traj = simulate(&problem, &init, task.horizon_periods, &cfg.fbp_settings(task.snapshot_every_periods), None)?;
    trajectory_csv(out, &traj)?;
    if task.snapshot_every_periods > 0 {
        snapshots_csv(out, &traj)?;
    }
    Ok(run_summary(&traj))
}

fn speeds(cfg: &RunConfig, env: &Environment) -> Result<CriticalSpeeds> {
    Ok(CriticalSpeeds::compute(&cfg.beta()?, &cfg.mu()?, env, &cfg.speed_settings())?)
}

fn classify(cfg: &RunConfig, task: &ClassifyTask, out: &mut ArtifactDir) -> Result<Value> {
    let env = environment(cfg)?;
    let crit = speeds(cfg, &env)?;
    let problem = cfg.fbp_problem()?;
    let init = cfg.initial_data(task.h0, task.sigma)?;
    let (traj, outcome) = classify_run(&problem, &init, &crit, &env, &cfg.fbp_settings(1), &task.rules.settings())?;
    out.json("outcome.json", &outcome)?;
    if cfg.output.diagnostics {
        trajectory_csv(out, &traj)?;
    }
    let mut summary = json!({
        "outcome": outcome,
        "regime": crit.regime,
        "run": run_summary(&traj),
    });
    if task.asymptotics && outcome.kind.spreads() {
        let report = front_asymptotics(&traj, &crit);
        let mut table = out.csv("asymptotics.csv", &["t", "h_minus_r", "speed_residual"])?;
        for i in 0..report.times.len() {
            table.row(&[report.times[i], report.h_minus_r[i], report.speed_residual[i]])?;
        }
        table.finish()?;
        let mut table = out.csv("profile_residual.csv", &["t", "profile_sup"])?;
        for (t, v) in report.profile_times.iter().zip(&report.profile_sup) {
            table.row(&[*t, *v])?;
        }
        table.finish()?;
        let from = 0.75 * report.end_time();
        summary["asymptotics"] = json!({
            "h1": report.h1,
            "c_l": report.c_l,
            "eps0": report.eps0,
            "speed_residual_max": report.speed_residual_max(from),
            "h_minus_r_peak_to_peak": report.h_minus_r_peak_to_peak(from),
            "profile_sup_max": report.profile_sup_max(from),
            "g1": report.left.as_ref().map(|l| l.g1),
            "left_speed_residual_max": report.left_speed_residual_max(from),
            "g_plus_l_peak_to_peak": report.g_plus_l_peak_to_peak(from),
            "left_profile_sup_max": report.left_profile_sup_max(from),
        });
    }
    Ok(summary)
}

fn threshold(cfg: &RunConfig, task: &ThresholdTask, out: &mut ArtifactDir) -> Result<Value> {
    let env = environment(cfg)?;
    let crit = speeds(cfg, &env)?;
    let problem = cfg.fbp_problem()?;
    let ctx = ThresholdContext {
        problem: &problem,
        crit: &crit,
        env: &env,
        fbp: cfg.fbp_settings(1),
        classify: task.rules.settings(),
    };
    let init = cfg.initial_data(task.h0, task.bracket[0])?;
    let result = critical_sigma(&ctx, &init, &task.settings())?;
    let mut table = out.csv("probes.csv", &["sigma", "kind", "confidence", "t_end", "width", "grid"])?;
    for p in &result.probes {
        table.record(&[
            crate::output::fmt_f64(p.sigma),
            format!("{:?}", p.kind),
            format!("{:?}", p.confidence),
            crate::output::fmt_f64(p.t_end),
            crate::output::fmt_f64(p.width),
            crate::output::fmt_f64(p.grid),
        ])?;
    }
    table.finish()?;
    let summary = json!({
        "result": result,
        "monotone": result.is_monotone(),
        "regime": crit.regime,
        "ell_star": crit.ell_star,
    });
    out.json("threshold.json", &summary)?;
    Ok(summary)
}
