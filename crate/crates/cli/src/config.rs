//! Run configuration: a versioned TOML document with five blocks.
//!
//! ```toml
//! schema = 1
//!
//! [problem]
//! period = 1.0
//! beta = { kind = "const", value = 0.0 }
//! mu = { kind = "sin-offset", mean = 1.0, amp = 0.5, harmonics = 1 }
//! reaction = { preset = "logistic", a = { kind = "const", value = 1.0 } }
//!
//! [grid]
//! nxi = 1024
//! dtfrac = 0.0009765625
//!
//! [task]
//! kind = "simulate"
//! h0 = 2.0
//! sigma = 1.0
//! horizonPeriods = 30
//! ```
//!
//! Every table rejects keys it does not know, and the error names the closest known key.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use fkpp_core::classify::{ClassifySettings, ThresholdSettings};
use fkpp_core::critical::SpeedSettings;
use fkpp_core::eigen::EigenSettings;
use fkpp_core::fbp::{FbpProblem, FbpSettings, InitialData};
use fkpp_core::periodic::{PeriodicFn, Reaction, MIN_NODES};
use fkpp_core::semiwave::SemiWaveSettings;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error{}: {message}", location(*.line, .key.as_deref()))]
    Parse { line: Option<usize>, key: Option<String>, message: String },
    #[error("validation error: {key}: {constraint}")]
    Validation { key: String, constraint: String },
}

fn location(line: Option<usize>, key: Option<&str>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" at line {l} (key `{k}`)"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

fn invalid(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.into(), constraint: constraint.into() }
}

/// A T-periodic coefficient as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefSpec {
    Const { value: f64 },
    /// `mean + amp sin(2 pi harmonics t / T)`.
    SinOffset {
        mean: f64,
        #[serde(default)]
        amp: f64,
        #[serde(default = "one_u32")]
        harmonics: u32,
    },
    /// Uniform samples over one period, starting at `t = 0`.
    Samples { period: f64, values: Vec<f64> },
}

fn one_u32() -> u32 {
    1
}

impl CoefSpec {
    pub fn constant(value: f64) -> Self {
        CoefSpec::Const { value }
    }

    fn validate(&self, key: &str, period: f64) -> Result<(), ConfigError> {
        match self {
            CoefSpec::Const { value } if !value.is_finite() => Err(invalid(key, "value must be finite")),
            CoefSpec::SinOffset { mean, amp, .. } if !(mean.is_finite() && amp.is_finite()) => {
                Err(invalid(key, "mean and amp must be finite"))
            }
            CoefSpec::SinOffset { harmonics: 0, .. } => Err(invalid(key, "harmonics >= 1 required")),
            CoefSpec::Samples { period: p, values } => {
                if (p - period).abs() > 1e-12 * period {
                    return Err(invalid(key, format!("declared period {p} differs from problem.period {period}")));
                }
                if values.len() < MIN_NODES || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(key, format!("needs >= {MIN_NODES} finite samples")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, period: f64, nodes: usize) -> fkpp_core::Result<PeriodicFn> {
        match self {
            CoefSpec::Const { value } => Ok(PeriodicFn::constant_with_nodes(period, *value, nodes)),
            CoefSpec::SinOffset { mean, amp, harmonics } => PeriodicFn::sin_offset(period, *mean, *amp, *harmonics, nodes),
            CoefSpec::Samples { values, .. } => PeriodicFn::from_samples(period, values.clone()),
        }
    }

    /// The spec of `-self`.
    pub fn negated(&self) -> Self {
        match self {
            CoefSpec::Const { value } => CoefSpec::Const { value: -value },
            CoefSpec::SinOffset { mean, amp, harmonics } => {
                CoefSpec::SinOffset { mean: -mean, amp: -amp, harmonics: *harmonics }
            }
            CoefSpec::Samples { period, values } => {
                CoefSpec::Samples { period: *period, values: values.iter().map(|v| -v).collect() }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `f = u (a(t) - b(t) u)`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionConfig {
    pub preset: Preset,
    #[serde(default = "unit_coef")]
    pub a: CoefSpec,
    #[serde(default = "unit_coef")]
    pub b: CoefSpec,
}

fn unit_coef() -> CoefSpec {
    CoefSpec::constant(1.0)
}

impl Default for ReactionConfig {
    fn default() -> Self {
        Self { preset: Preset::Logistic, a: unit_coef(), b: unit_coef() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// `T`.
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default = "zero_coef")]
    pub beta: CoefSpec,
    #[serde(default = "unit_coef")]
    pub mu: CoefSpec,
    #[serde(default)]
    pub reaction: ReactionConfig,
}

fn one() -> f64 {
    1.0
}

fn zero_coef() -> CoefSpec {
    CoefSpec::constant(0.0)
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { period: 1.0, beta: zero_coef(), mu: unit_coef(), reaction: ReactionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct GridConfig {
    /// Samples per period of every coefficient function.
    pub period_nodes: usize,
    pub eigen_nodes: usize,
    pub eigen_steps: usize,
    pub semiwave_nodes_per_unit: usize,
    pub semiwave_steps: usize,
    pub stored_levels: usize,
    pub flux_samples: usize,
    /// Smallest truncation radius of the half-line problem.
    pub min_radius: f64,
    pub max_doublings: usize,
    /// Intervals of the front-fixed grid.
    pub nxi: usize,
    /// Time step as a fraction of the period.
    pub dtfrac: f64,
    pub record_every: usize,
    /// Double the front-fixed grid whenever `(h - g) / nxi` exceeds this.
    pub dx_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let e = EigenSettings::default();
        let s = SemiWaveSettings::default();
        let f = FbpSettings::default();
        Self {
            period_nodes: 256,
            eigen_nodes: e.nodes,
            eigen_steps: e.steps_per_period,
            semiwave_nodes_per_unit: s.nodes_per_unit,
            semiwave_steps: s.steps_per_period,
            stored_levels: s.stored_levels,
            flux_samples: s.flux_samples,
            min_radius: s.min_radius,
            max_doublings: s.max_doublings,
            nxi: f.nodes,
            dtfrac: 1.0 / f.steps_per_period as f64,
            record_every: f.record_every,
            dx_max: f.dx_max,
        }
    }
}

impl GridConfig {
    pub fn steps_per_period(&self) -> usize {
        (1.0 / self.dtfrac).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct ToleranceConfig {
    /// Relative change of the Floquet multiplier.
    pub eigen: f64,
    /// `|lambda_1(l*)|`.
    pub critical_length: f64,
    pub semiwave_period: f64,
    pub truncation: f64,
    /// Fixed-point residual of the front speeds.
    pub speed: f64,
    pub speed_damping: f64,
    /// Bracket width for `B(theta)`.
    pub b: f64,
    pub regime_margin: f64,
    /// Corrector change of a front velocity.
    pub velocity: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let e = EigenSettings::default();
        let s = SpeedSettings::default();
        Self {
            eigen: e.tol,
            critical_length: 1e-7,
            semiwave_period: s.semiwave.period_tol,
            truncation: s.semiwave.truncation_tol,
            speed: s.tol,
            speed_damping: s.damping,
            b: s.b_tol,
            regime_margin: s.confidence_margin,
            velocity: FbpSettings::default().velocity_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct LengthRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct EigenTask {
    /// Drift `k` of the eigenproblem; `-beta` when absent.
    pub drift: Option<CoefSpec>,
    pub lengths: Vec<f64>,
    pub length_range: Option<LengthRange>,
    pub critical_length: bool,
}

impl Default for EigenTask {
    fn default() -> Self {
        Self { drift: None, lengths: vec![1.0, 2.0, PI], length_range: None, critical_length: true }
    }
}

impl EigenTask {
    pub fn all_lengths(&self) -> Vec<f64> {
        let mut out = self.lengths.clone();
        if let Some(r) = &self.length_range {
            let n = r.count.max(1);
            out.extend((0..n).map(|i| if n == 1 { r.from } else { r.from + (r.to - r.from) * i as f64 / (n - 1) as f64 }));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileChoice {
    HalfLine,
    DirichletZero,
    Pinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct SemiwaveTask {
    /// Drift `k` of the profile equation `v_t = v_zz + k v_z + f(t, v)`.
    pub drift: CoefSpec,
    pub profile: ProfileChoice,
    /// Interval length for the Dirichlet problems.
    pub length: Option<f64>,
}

impl Default for SemiwaveTask {
    fn default() -> Self {
        Self { drift: zero_coef(), profile: ProfileChoice::HalfLine, length: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct CriticalTask {
    /// Also solve the leftward speed when it is defined.
    pub leftward: bool,
}

impl Default for CriticalTask {
    fn default() -> Self {
        Self { leftward: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct SimulateTask {
    pub h0: f64,
    pub sigma: f64,
    pub horizon_periods: usize,
    /// Write `w` every this many periods; 0 disables the snapshot file.
    pub snapshot_every_periods: usize,
}

impl Default for SimulateTask {
    fn default() -> Self {
        Self { h0: 1.0, sigma: 1.0, horizon_periods: 20, snapshot_every_periods: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct ClassifyConfig {
    pub window: f64,
    pub extinction: f64,
    pub near_state: f64,
    pub horizon_periods: usize,
    pub max_extensions: usize,
    pub min_periods: usize,
    pub confirm_periods: usize,
    pub margin_cells: f64,
    pub drift_tol: f64,
    pub window_samples: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let s = ClassifySettings::default();
        Self {
            window: s.window,
            extinction: s.extinction,
            near_state: s.near_state,
            horizon_periods: s.horizon_periods,
            max_extensions: s.max_extensions,
            min_periods: s.min_periods,
            confirm_periods: s.confirm_periods,
            margin_cells: s.margin_cells,
            drift_tol: s.drift_tol,
            window_samples: s.window_samples,
        }
    }
}

impl ClassifyConfig {
    pub fn settings(&self) -> ClassifySettings {
        ClassifySettings {
            window: self.window,
            extinction: self.extinction,
            near_state: self.near_state,
            horizon_periods: self.horizon_periods,
            max_extensions: self.max_extensions,
            min_periods: self.min_periods,
            confirm_periods: self.confirm_periods,
            margin_cells: self.margin_cells,
            drift_tol: self.drift_tol,
            window_samples: self.window_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct ClassifyTask {
    pub h0: f64,
    pub sigma: f64,
    /// Also write the front asymptotics when the run spreads.
    pub asymptotics: bool,
    pub rules: ClassifyConfig,
}

impl Default for ClassifyTask {
    fn default() -> Self {
        Self { h0: 1.0, sigma: 1.0, asymptotics: false, rules: ClassifyConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct ThresholdTask {
    pub h0: f64,
    pub bracket: [f64; 2],
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_probes: usize,
    pub expansion_factor: f64,
    pub max_expansions: usize,
    pub rules: ClassifyConfig,
}

impl Default for ThresholdTask {
    fn default() -> Self {
        let s = ThresholdSettings::default();
        Self {
            h0: 0.5,
            bracket: [s.bracket.0, s.bracket.1],
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_probes: s.max_probes,
            expansion_factor: s.expansion_factor,
            max_expansions: s.max_expansions,
            rules: ClassifyConfig::default(),
        }
    }
}

impl ThresholdTask {
    pub fn settings(&self) -> ThresholdSettings {
        ThresholdSettings {
            bracket: (self.bracket[0], self.bracket[1]),
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_probes: self.max_probes,
            expansion_factor: self.expansion_factor,
            max_expansions: self.max_expansions,
        }
    }
}

/// One axis of a sweep: a dotted key into the run config and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SweepTask {
    /// The task run at every grid point; its parameters live in `[task.base]`.
    pub run: TaskKind,
    #[serde(default)]
    pub base: toml::Table,
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Eigen,
    Semiwave,
    Critical,
    Simulate,
    Classify,
    Threshold,
    Sweep,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Eigen => "eigen",
            TaskKind::Semiwave => "semiwave",
            TaskKind::Critical => "critical",
            TaskKind::Simulate => "simulate",
            TaskKind::Classify => "classify",
            TaskKind::Threshold => "threshold",
            TaskKind::Sweep => "sweep",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Eigen(EigenTask),
    Semiwave(SemiwaveTask),
    Critical(CriticalTask),
    Simulate(SimulateTask),
    Classify(ClassifyTask),
    Threshold(ThresholdTask),
    Sweep(SweepTask),
}

impl Task {
    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Eigen(_) => TaskKind::Eigen,
            Task::Semiwave(_) => TaskKind::Semiwave,
            Task::Critical(_) => TaskKind::Critical,
            Task::Simulate(_) => TaskKind::Simulate,
            Task::Classify(_) => TaskKind::Classify,
            Task::Threshold(_) => TaskKind::Threshold,
            Task::Sweep(_) => TaskKind::Sweep,
        }
    }

    /// The task with every parameter at its default; `None` for sweeps, which need axes.
    pub fn default_for(kind: TaskKind) -> Option<Self> {
        Some(match kind {
            TaskKind::Eigen => Task::Eigen(EigenTask::default()),
            TaskKind::Semiwave => Task::Semiwave(SemiwaveTask::default()),
            TaskKind::Critical => Task::Critical(CriticalTask::default()),
            TaskKind::Simulate => Task::Simulate(SimulateTask::default()),
            TaskKind::Classify => Task::Classify(ClassifyTask::default()),
            TaskKind::Threshold => Task::Threshold(ThresholdTask::default()),
            TaskKind::Sweep => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerOrder {
    /// Sweep ledger sorted by run index.
    Index,
    /// Ledger rows in completion order; depends on scheduling.
    Completion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase", default)]
pub struct OutputConfig {
    pub dir: String,
    /// Write per-snapshot and diagnostic CSVs in addition to the summaries.
    pub diagnostics: bool,
    pub ledger_order: LedgerOrder,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "fkpp-out".into(), diagnostics: true, ledger_order: LedgerOrder::Index }
    }
}

/// The raw document, before the task is resolved.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    #[serde(default)]
    problem: ProblemConfig,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    tolerance: ToleranceConfig,
    task: Option<Task>,
    #[serde(default)]
    output: OutputConfig,
}

/// A fully validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema: u32,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub tolerance: ToleranceConfig,
    pub task: Task,
    pub output: OutputConfig,
}

/// Parses and validates `text`. `kind` picks the task when the document has no `[task]`
/// table; when both are present they must agree.
pub fn parse_config(text: &str, kind: Option<TaskKind>) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    if raw.schema != SCHEMA_VERSION {
        return Err(invalid("schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", raw.schema)));
    }
    let task = match (raw.task, kind) {
        (Some(task), Some(k)) if task.kind() != k => {
            return Err(invalid("task.kind", format!("config describes `{}` but `{k}` was requested", task.kind())));
        }
        (Some(task), _) => task,
        (None, Some(k)) => Task::default_for(k).ok_or_else(|| invalid("task", "a sweep needs a [task] table with axes"))?,
        (None, None) => return Err(invalid("task", "no [task] table and no subcommand to pick one")),
    };
    let config = RunConfig {
        schema: raw.schema,
        problem: raw.problem,
        grid: raw.grid,
        tolerance: raw.tolerance,
        task,
        output: raw.output,
    };
    config.validate()?;
    Ok(config)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Turns a TOML error into a [`ConfigError::Parse`], adding a suggestion for unknown keys.
fn parse_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let message = err.message().to_string();
    let line = err.span().map(|s| line_of(text, s.start));
    let mut key = None;
    let mut out = message.clone();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some((unknown, expected)) = rest.split_once('`') {
            key = Some(unknown.to_string());
            let candidates: Vec<&str> = expected.split('`').skip(1).step_by(2).collect();
            if let Some(best) = suggest(unknown, &candidates) {
                out = format!("unknown key `{unknown}`; did you mean `{best}`?");
            } else {
                out = format!("unknown key `{unknown}`; expected one of {}", candidates.join(", "));
            }
        }
    }
    ConfigError::Parse { line, key, message: out }
}

/// Closest candidate by normalised Levenshtein similarity, if reasonably close.
pub fn suggest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::normalized_levenshtein(&word.to_lowercase(), &c.to_lowercase()), *c))
        .filter(|(score, _)| *score >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(invalid(key, format!("must be >= {min}, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        if !(p.period.is_finite() && p.period > 0.0) {
            return Err(invalid("problem.period", format!("T > 0 required, got {}", p.period)));
        }
        p.beta.validate("problem.beta", p.period)?;
        p.mu.validate("problem.mu", p.period)?;
        p.reaction.a.validate("problem.reaction.a", p.period)?;
        p.reaction.b.validate("problem.reaction.b", p.period)?;

        let g = &self.grid;
        at_least("grid.periodNodes", g.period_nodes, 64)?;
        at_least("grid.eigenNodes", g.eigen_nodes, 64)?;
        at_least("grid.eigenSteps", g.eigen_steps, 64)?;
        at_least("grid.semiwaveNodesPerUnit", g.semiwave_nodes_per_unit, 4)?;
        at_least("grid.semiwaveSteps", g.semiwave_steps, 64)?;
        at_least("grid.fluxSamples", g.flux_samples, 64)?;
        at_least("grid.storedLevels", g.stored_levels, 1)?;
        if g.semiwave_steps % g.stored_levels != 0 || g.semiwave_steps % g.flux_samples != 0 {
            return Err(invalid("grid.semiwaveSteps", "must be a multiple of grid.storedLevels and grid.fluxSamples"));
        }
        positive("grid.minRadius", g.min_radius)?;
        at_least("grid.nxi", g.nxi, 64)?;
        if !(g.dtfrac > 0.0 && g.dtfrac <= 1.0) {
            return Err(invalid("grid.dtfrac", format!("must lie in (0, 1], got {}", g.dtfrac)));
        }
        let steps = g.steps_per_period();
        if ((steps as f64) * g.dtfrac - 1.0).abs() > 1e-9 {
            return Err(invalid("grid.dtfrac", format!("1/dtfrac must be an integer, got {}", 1.0 / g.dtfrac)));
        }
        at_least("grid.recordEvery", g.record_every, 1)?;
        if let Some(dx) = g.dx_max {
            positive("grid.dxMax", dx)?;
        }

        let t = &self.tolerance;
        for (key, v) in [
            ("tolerance.eigen", t.eigen),
            ("tolerance.criticalLength", t.critical_length),
            ("tolerance.semiwavePeriod", t.semiwave_period),
            ("tolerance.truncation", t.truncation),
            ("tolerance.speed", t.speed),
            ("tolerance.b", t.b),
            ("tolerance.regimeMargin", t.regime_margin),
            ("tolerance.velocity", t.velocity),
        ] {
            positive(key, v)?;
        }
        if !(t.speed_damping > 0.0 && t.speed_damping <= 1.0) {
            return Err(invalid("tolerance.speedDamping", format!("must lie in (0, 1], got {}", t.speed_damping)));
        }

        match &self.task {
            Task::Eigen(e) => {
                if let Some(d) = &e.drift {
                    d.validate("task.drift", p.period)?;
                }
                if let Some(r) = &e.length_range {
                    positive("task.lengthRange.from", r.from)?;
                    positive("task.lengthRange.to", r.to)?;
                    at_least("task.lengthRange.count", r.count, 1)?;
                }
                if e.all_lengths().is_empty() {
                    return Err(invalid("task.lengths", "at least one length required"));
                }
                for l in e.all_lengths() {
                    positive("task.lengths", l)?;
                }
            }
            Task::Semiwave(s) => {
                s.drift.validate("task.drift", p.period)?;
                match (s.profile, s.length) {
                    (ProfileChoice::HalfLine, _) => {}
                    (_, Some(l)) => positive("task.length", l)?,
                    (_, None) => return Err(invalid("task.length", "required for Dirichlet profiles")),
                }
            }
            Task::Critical(_) => {}
            Task::Simulate(s) => {
                positive("task.h0", s.h0)?;
                positive("task.sigma", s.sigma)?;
                at_least("task.horizonPeriods", s.horizon_periods, 1)?;
            }
            Task::Classify(c) => {
                positive("task.h0", c.h0)?;
                positive("task.sigma", c.sigma)?;
                validate_rules(&c.rules)?;
            }
            Task::Threshold(th) => {
                positive("task.h0", th.h0)?;
                positive("task.bracket", th.bracket[0])?;
                if !(th.bracket[1] > th.bracket[0]) {
                    return Err(invalid("task.bracket", "needs lo < hi"));
                }
                positive("task.relTol", th.rel_tol)?;
                if th.abs_tol < 0.0 {
                    return Err(invalid("task.absTol", "must be >= 0"));
                }
                at_least("task.maxProbes", th.max_probes, 2)?;
                if !(th.expansion_factor > 1.0) {
                    return Err(invalid("task.expansionFactor", "must be > 1"));
                }
                validate_rules(&th.rules)?;
            }
            Task::Sweep(s) => {
                if s.run == TaskKind::Sweep {
                    return Err(invalid("task.run", "sweeps cannot be nested"));
                }
                if s.axes.is_empty() {
                    return Err(invalid("task.axes", "at least one axis required"));
                }
                for (i, axis) in s.axes.iter().enumerate() {
                    if axis.values.is_empty() {
                        return Err(invalid(&format!("task.axes[{i}].values"), "must not be empty"));
                    }
                    if axis.key.starts_with("task.") && matches!(axis.key.as_str(), "task.kind" | "task.run") {
                        return Err(invalid(&format!("task.axes[{i}].key"), "cannot sweep the task kind"));
                    }
                }
            }
        }
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises to TOML")
    }

    fn nodes(&self) -> usize {
        self.grid.period_nodes
    }

    pub fn beta(&self) -> fkpp_core::Result<PeriodicFn> {
        self.problem.beta.build(self.problem.period, self.nodes())
    }

    pub fn mu(&self) -> fkpp_core::Result<PeriodicFn> {
        self.problem.mu.build(self.problem.period, self.nodes())
    }

    pub fn coef(&self, spec: &CoefSpec) -> fkpp_core::Result<PeriodicFn> {
        spec.build(self.problem.period, self.nodes())
    }

    pub fn reaction(&self) -> fkpp_core::Result<Reaction> {
        let r = &self.problem.reaction;
        match r.preset {
            Preset::Logistic => Reaction::logistic(self.coef(&r.a)?, self.coef(&r.b)?),
        }
    }

    pub fn fbp_problem(&self) -> fkpp_core::Result<FbpProblem> {
        FbpProblem::new(self.beta()?, self.mu()?, self.reaction()?)
    }

    pub fn eigen_settings(&self) -> EigenSettings {
        EigenSettings {
            nodes: self.grid.eigen_nodes,
            steps_per_period: self.grid.eigen_steps,
            tol: self.tolerance.eigen,
            ..Default::default()
        }
    }

    pub fn semiwave_settings(&self) -> SemiWaveSettings {
        SemiWaveSettings {
            nodes_per_unit: self.grid.semiwave_nodes_per_unit,
            steps_per_period: self.grid.semiwave_steps,
            period_tol: self.tolerance.semiwave_period,
            stored_levels: self.grid.stored_levels,
            flux_samples: self.grid.flux_samples,
            truncation_tol: self.tolerance.truncation,
            min_radius: self.grid.min_radius,
            max_doublings: self.grid.max_doublings,
            ..Default::default()
        }
    }

    pub fn speed_settings(&self) -> SpeedSettings {
        SpeedSettings {
            damping: self.tolerance.speed_damping,
            tol: self.tolerance.speed,
            b_tol: self.tolerance.b,
            confidence_margin: self.tolerance.regime_margin,
            semiwave: self.semiwave_settings(),
            ..Default::default()
        }
    }

    pub fn fbp_settings(&self, snapshot_every_periods: usize) -> FbpSettings {
        FbpSettings {
            nodes: self.grid.nxi,
            steps_per_period: self.grid.steps_per_period(),
            velocity_tol: self.tolerance.velocity,
            dx_max: self.grid.dx_max,
            record_every: self.grid.record_every,
            snapshot_every_periods: snapshot_every_periods.max(1),
            ..Default::default()
        }
    }

    pub fn initial_data(&self, h0: f64, sigma: f64) -> fkpp_core::Result<InitialData> {
        InitialData::cosine(h0, sigma)
    }
}

fn validate_rules(r: &ClassifyConfig) -> Result<(), ConfigError> {
    for (key, v) in [
        ("task.rules.window", r.window),
        ("task.rules.extinction", r.extinction),
        ("task.rules.nearState", r.near_state),
        ("task.rules.driftTol", r.drift_tol),
    ] {
        positive(key, v)?;
    }
    at_least("task.rules.horizonPeriods", r.horizon_periods, 1)?;
    at_least("task.rules.windowSamples", r.window_samples, 2)?;
    if r.margin_cells < 0.0 {
        return Err(invalid("task.rules.marginCells", "must be >= 0"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_documented_defaults() {
        let c = parse_config("schema = 1\n", Some(TaskKind::Simulate)).unwrap();
        assert_eq!(c.problem, ProblemConfig::default());
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.grid.steps_per_period(), 1024);
        assert_eq!(c.task, Task::Simulate(SimulateTask::default()));
        assert_eq!(c.output.dir, "fkpp-out");
    }

    #[test]
    fn negative_period_names_the_constraint() {
        let err = parse_config("schema = 1\n[problem]\nperiod = -1\n", Some(TaskKind::Eigen)).unwrap_err();
        match err {
            ConfigError::Validation { key, constraint } => {
                assert_eq!(key, "problem.period");
                assert!(constraint.contains("T > 0"), "{constraint}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_gets_a_suggestion_and_line() {
        let text = "schema = 1\n\n[problem]\nperiod = 1.0\nbetaa = { kind = \"const\", value = 1.0 }\n";
        let err = parse_config(text, Some(TaskKind::Critical)).unwrap_err();
        match &err {
            ConfigError::Parse { line, key, message } => {
                assert_eq!(*line, Some(5));
                assert_eq!(key.as_deref(), Some("betaa"));
                assert!(message.contains("did you mean `beta`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn task_kind_must_match_subcommand() {
        let text = "schema = 1\n[task]\nkind = \"eigen\"\n";
        assert!(parse_config(text, Some(TaskKind::Eigen)).is_ok());
        assert!(matches!(parse_config(text, Some(TaskKind::Critical)), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn coefficient_forms() {
        let text = r#"
schema = 1
[problem]
period = 2.0
beta = { kind = "sin-offset", mean = 0.5, amp = 0.2, harmonics = 2 }
mu = { kind = "samples", period = 2.0, values = [1.0, 1.5, 1.0, 0.5, 1.0, 1.5, 1.0, 0.5, 1.0, 1.5, 1.0, 0.5, 1.0, 1.5, 1.0, 0.5] }
"#;
        let c = parse_config(text, Some(TaskKind::Critical)).unwrap();
        let beta = c.beta().unwrap();
        assert!((beta.mean() - 0.5).abs() < 1e-12);
        assert!((beta.eval(0.25) - 0.7).abs() < 1e-9);
        assert!((c.mu().unwrap().eval(0.125) - 1.5).abs() < 1e-12);
        let short = text.replace("1.0, 1.5, 1.0, 0.5, 1.0, 1.5, 1.0, 0.5, 1.0, 1.5, 1.0, 0.5, ", "");
        assert!(matches!(parse_config(&short, Some(TaskKind::Critical)), Err(ConfigError::Validation { .. })));

        let wrong = text.replace("period = 2.0, values", "period = 1.0, values");
        assert!(matches!(parse_config(&wrong, Some(TaskKind::Critical)), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn grid_and_tolerance_ranges() {
        let small = "schema = 1\n[grid]\nnxi = 32\n";
        assert!(matches!(parse_config(small, Some(TaskKind::Simulate)), Err(ConfigError::Validation { key, .. }) if key == "grid.nxi"));
        let tol = "schema = 1\n[tolerance]\nspeed = 0.0\n";
        assert!(matches!(parse_config(tol, Some(TaskKind::Simulate)), Err(ConfigError::Validation { key, .. }) if key == "tolerance.speed"));
        let frac = "schema = 1\n[grid]\ndtfrac = 0.3\n";
        assert!(parse_config(frac, Some(TaskKind::Simulate)).is_err());
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        assert!(parse_config("schema = 2\n", Some(TaskKind::Eigen)).is_err());
        assert!(matches!(parse_config("", Some(TaskKind::Eigen)), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn echo_round_trips() {
        let text = r#"
schema = 1
[problem]
beta = { kind = "sin-offset", mean = 0.5, amp = 0.2 }
[task]
kind = "threshold"
h0 = 0.5
bracket = [0.5, 4.0]
[task.rules]
window = 8.0
"#;
        let c = parse_config(text, None).unwrap();
        let again = parse_config(&c.to_toml(), None).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn suggestions_need_some_similarity() {
        assert_eq!(suggest("betaa", &["period", "beta", "mu"]), Some("beta"));
        assert_eq!(suggest("zzzzzz", &["period", "beta", "mu"]), None);
    }
}
