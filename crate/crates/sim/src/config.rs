//! Run configuration files.
//!
//! A config is a TOML document with a top-level `command` and one table per
//! concern. Every key is checked; anything unknown is rejected. After
//! [`parse_config`] every optional field holds its resolved value, so the
//! serialized form is a complete, re-runnable echo.

use std::fmt;
use std::path::{Path, PathBuf};

use frontier_core::classify::{ClassifyRules, SweepParameter};
use frontier_core::habitat::{CoefficientProfile, Habitat};
use frontier_core::pde::{InitialShape, SimConfig, SteadyVariant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Eigen,
    Threshold,
    Speed,
    Dichotomy,
    Sweep,
    Steady,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Simulate => "simulate",
            Command::Eigen => "eigen",
            Command::Threshold => "threshold",
            Command::Speed => "speed",
            Command::Dichotomy => "dichotomy",
            Command::Sweep => "sweep",
            Command::Steady => "steady",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub habitat: HabitatConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub speed: SpeedConfig,
    #[serde(default)]
    pub dichotomy: DichotomyConfig,
    #[serde(default)]
    pub steady: SteadyConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

/// A coefficient: either a bare number or a `{ kind = ..., ... }` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Value", into = "ProfileConfig")]
pub struct Profile(pub ProfileConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { value: f64 },
    Step { at: f64, left: f64, right: f64 },
    Ramp { r0: f64, v0: f64, r1: f64, v1: f64 },
    Tanh { center: f64, width: f64, left: f64, right: f64 },
    Table { points: Vec<[f64; 2]> },
}

impl From<Profile> for ProfileConfig {
    fn from(p: Profile) -> Self {
        p.0
    }
}

impl TryFrom<toml::Value> for Profile {
    type Error = String;

    fn try_from(value: toml::Value) -> Result<Self, String> {
        match value {
            toml::Value::Float(v) => Ok(Profile(ProfileConfig::Constant { value: v })),
            toml::Value::Integer(v) => Ok(Profile(ProfileConfig::Constant { value: v as f64 })),
            other => other.try_into().map(Profile).map_err(|e: toml::de::Error| e.message().to_string()),
        }
    }
}

impl ProfileConfig {
    pub fn to_profile(&self) -> CoefficientProfile {
        match *self {
            ProfileConfig::Constant { value } => CoefficientProfile::Constant(value),
            ProfileConfig::Step { at, left, right } => CoefficientProfile::Step { at, left, right },
            ProfileConfig::Ramp { r0, v0, r1, v1 } => CoefficientProfile::LinearRamp { r0, v0, r1, v1 },
            ProfileConfig::Tanh {
                center,
                width,
                left,
                right,
            } => CoefficientProfile::Tanh {
                center,
                width,
                left,
                right,
            },
            ProfileConfig::Table { ref points } => {
                CoefficientProfile::Tabulated(points.iter().map(|p| (p[0], p[1])).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HabitatConfig {
    #[serde(default = "one")]
    pub n: usize,
    pub b: Profile,
    pub d: Profile,
    pub beta: Profile,
    /// Lower band bound; defaults to the smallest coefficient value.
    pub b1: Option<f64>,
    /// Upper band bound; defaults to the largest coefficient value.
    pub b2: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiKind {
    Cosine,
    Parabolic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(rename = "D")]
    pub diffusion: Option<f64>,
    pub mu: Option<f64>,
    pub h0: Option<f64>,
    pub delta: Option<f64>,
    pub phi_kind: Option<PhiKind>,
    #[serde(rename = "N")]
    pub cells: Option<usize>,
    pub dt: Option<f64>,
    #[serde(rename = "T_max")]
    pub t_max: Option<f64>,
    pub output_interval: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    /// Cells for the R0_front eigenproblem at each sample.
    pub eigen_cells: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(rename = "eps_R0")]
    pub eps_r0: Option<f64>,
    pub eps_h: Option<f64>,
    pub eps_vanish: Option<f64>,
    pub eps_front: Option<f64>,
    pub window: Option<f64>,
    /// T_max multiplier for the single rerun of an undetermined case;
    /// 1 disables the rerun.
    pub t_max_extension: Option<f64>,
    /// Stop `simulate` at the first verdict.
    pub stop_on_verdict: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    D,
    #[serde(rename = "h0")]
    H0,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "mu")]
    Mu,
}

impl SweepParam {
    pub fn core(self) -> SweepParameter {
        match self {
            SweepParam::D => SweepParameter::Diffusion,
            SweepParam::H0 => SweepParameter::InitialRadius,
            SweepParam::Delta => SweepParameter::Amplitude,
            SweepParam::Mu => SweepParameter::Mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParam,
    pub values: Option<Vec<f64>>,
    /// Evenly spaced values, expanded into `values` on resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeConfig>,
    /// Relative margin around D* and h* for the structure checks.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(rename = "N")]
    pub cells: Option<usize>,
    /// Ball radii; defaults to `[solver.h0]`.
    pub radii: Option<Vec<f64>>,
    /// Diffusion rates; defaults to `[solver.D]`.
    #[serde(rename = "D")]
    pub diffusions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Target {
    #[serde(rename = "Dstar")]
    #[value(name = "Dstar")]
    Dstar,
    #[serde(rename = "hstar")]
    #[value(name = "hstar")]
    Hstar,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub target: Option<Target>,
    /// Ball radius for D*; defaults to `solver.h0`.
    pub radius: Option<f64>,
    pub tol: Option<f64>,
    #[serde(rename = "N")]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    /// Defaults to lim (b − d) of the habitat.
    pub a: Option<f64>,
    /// Defaults to lim β of the habitat.
    pub b: Option<f64>,
    #[serde(rename = "D")]
    pub diffusion: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub tol: Option<f64>,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyKind {
    FixedBall,
    EntireSpace,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyConfig {
    pub variant: Option<SteadyKind>,
    /// Fixed ball: defaults to `solver.h0`. Entire space: max(10 h*, 50).
    pub radius: Option<f64>,
    #[serde(rename = "N")]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub out: Option<PathBuf>,
}

pub const DEFAULT_EIGEN_CELLS: usize = 2000;
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-6;

/// Reads, parses and resolves a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text, path)
}

pub fn parse_str(text: &str, origin: &Path) -> Result<RunConfig, CliError> {
    let raw: RunConfig = toml::from_str(text).map_err(|e| {
        let message = match e.span() {
            Some(span) => {
                let line = text[..span.start].matches('\n').count() + 1;
                format!("line {line}: {}", e.message().trim())
            }
            None => e.message().trim().to_string(),
        };
        CliError::Parse {
            path: origin.to_path_buf(),
            message,
        }
    })?;
    raw.resolve()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(x: Option<f64>, what: &str) -> Result<(), CliError> {
    match x {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(invalid(format!("{what} must be positive"))),
        _ => Ok(()),
    }
}

fn require(x: Option<f64>, what: &str, command: Command) -> Result<f64, CliError> {
    x.ok_or_else(|| invalid(format!("solver.{what} is required for `{command}`")))
}

impl RunConfig {
    /// Fills defaults and checks every constraint that can be checked
    /// before any numerics run.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let cmd = self.command;
        let s = &mut self.solver;
        positive(s.diffusion, "D")?;
        positive(s.mu, "mu")?;
        positive(s.h0, "h0")?;
        positive(s.delta, "delta")?;
        positive(s.dt, "dt")?;
        positive(s.t_max, "T_max")?;
        positive(s.output_interval, "output_interval")?;

        // the habitat is needed by every command
        let habitat = self.habitat.build()?;
        let (lo, hi) = habitat.bounds();
        self.habitat.b1 = Some(lo);
        self.habitat.b2 = Some(hi);

        let sweep_param = self.sweep.as_ref().map(|w| w.parameter);
        let needs_run = matches!(cmd, Command::Simulate | Command::Dichotomy | Command::Sweep);
        if needs_run || matches!(cmd, Command::Eigen | Command::Threshold | Command::Steady) {
            let d_free = (cmd == Command::Sweep && sweep_param == Some(SweepParam::D))
                || (cmd == Command::Eigen && self.eigen.diffusions.is_some());
            let h0_free = cmd == Command::Sweep && sweep_param == Some(SweepParam::H0);
            if !d_free || s.diffusion.is_some() {
                require(s.diffusion, "D", cmd)?;
            }
            if needs_run && !h0_free {
                require(s.h0, "h0", cmd)?;
            }
        }
        if needs_run {
            if !(cmd == Command::Sweep && sweep_param == Some(SweepParam::Mu)) {
                require(s.mu, "mu", cmd)?;
            }
            if cmd == Command::Simulate
                || (cmd == Command::Sweep && sweep_param != Some(SweepParam::Delta))
            {
                require(s.delta, "delta", cmd)?;
            }
            s.phi_kind.get_or_insert(PhiKind::Cosine);
            s.cells.get_or_insert(SimConfig::DEFAULT_CELLS);
            if s.dt.is_none() {
                if let (Some(h0), Some(d)) = (s.h0, s.diffusion) {
                    s.dt = Some(1e-3 * h0 * h0 / d);
                }
            }
            s.t_max.get_or_insert(SimConfig::DEFAULT_T_MAX);
            s.output_interval.get_or_insert(SimConfig::DEFAULT_OUTPUT_INTERVAL);
            s.snapshot_times.get_or_insert_with(Vec::new);
            s.eigen_cells.get_or_insert(SimConfig::DEFAULT_EIGEN_CELLS);
            if s.cells.unwrap() < 2 {
                return Err(invalid("solver.N must be at least 2"));
            }
            if s.eigen_cells.unwrap() < 32 {
                return Err(invalid("solver.eigen_cells must be at least 32"));
            }
            if s.snapshot_times.as_ref().unwrap().iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(invalid("snapshot_times must be nonnegative"));
            }
        }

        let c = &mut self.classify;
        let rules = ClassifyRules::default();
        for (v, name) in [
            (c.eps_r0, "eps_R0"),
            (c.eps_h, "eps_h"),
            (c.eps_vanish, "eps_vanish"),
            (c.eps_front, "eps_front"),
            (c.window, "window"),
            (c.t_max_extension, "t_max_extension"),
        ] {
            positive(v, name)?;
        }
        c.eps_r0.get_or_insert(rules.eps_r0);
        c.eps_h.get_or_insert(rules.eps_h);
        c.eps_vanish.get_or_insert(rules.eps_vanish);
        c.eps_front.get_or_insert(rules.eps_front);
        c.window.get_or_insert(rules.window);
        c.t_max_extension.get_or_insert(rules.extension);
        c.stop_on_verdict.get_or_insert(false);
        if c.window.unwrap() > 1.0 {
            return Err(invalid("window must lie in (0, 1]"));
        }

        match cmd {
            Command::Sweep => self.resolve_sweep()?,
            Command::Eigen => {
                let e = &mut self.eigen;
                e.cells.get_or_insert(DEFAULT_EIGEN_CELLS);
                if e.radii.is_none() {
                    e.radii = Some(vec![self.solver.h0.ok_or_else(|| {
                        invalid("eigen.radii or solver.h0 is required for `eigen`")
                    })?]);
                }
                if e.diffusions.is_none() {
                    e.diffusions = Some(vec![self.solver.diffusion.ok_or_else(|| {
                        invalid("eigen.D or solver.D is required for `eigen`")
                    })?]);
                }
                for &x in e.radii.iter().flatten().chain(e.diffusions.iter().flatten()) {
                    positive(Some(x), "eigen radii and D values")?;
                }
                check_cells(e.cells, "eigen.N")?;
            }
            Command::Threshold => {
                let t = &mut self.threshold;
                t.target.get_or_insert(Target::Hstar);
                t.tol.get_or_insert(DEFAULT_THRESHOLD_TOL);
                t.cells.get_or_insert(DEFAULT_EIGEN_CELLS);
                positive(t.tol, "threshold.tol")?;
                positive(t.radius, "threshold.radius")?;
                check_cells(t.cells, "threshold.N")?;
                if t.radius.is_none() {
                    t.radius = self.solver.h0;
                }
                if t.radius.is_none() {
                    return Err(invalid("threshold.radius or solver.h0 is required"));
                }
            }
            Command::Speed => {
                let sp = &mut self.speed;
                let tails = habitat.tail_limits();
                sp.a.get_or_insert(tails.alpha);
                sp.b.get_or_insert(tails.beta_inf);
                if sp.diffusion.is_none() {
                    sp.diffusion = self.solver.diffusion;
                }
                if sp.mu.is_none() {
                    sp.mu = self.solver.mu;
                }
                for (v, name) in [
                    (sp.a, "speed.a"),
                    (sp.b, "speed.b"),
                    (sp.diffusion, "D"),
                    (sp.mu, "mu"),
                ] {
                    match v {
                        None => return Err(invalid(format!("{name} is required for `speed`"))),
                        Some(_) => positive(v, name)?,
                    }
                }
            }
            Command::Dichotomy => {
                let d = &mut self.dichotomy;
                d.lo.get_or_insert(1e-3);
                d.hi.get_or_insert(1.0);
                d.tol.get_or_insert(0.02);
                d.cap.get_or_insert(1e3);
                for (v, name) in [(d.lo, "lo"), (d.hi, "hi"), (d.tol, "tol"), (d.cap, "cap")] {
                    positive(v, &format!("dichotomy.{name}"))?;
                }
                if d.hi <= d.lo {
                    return Err(invalid("dichotomy.hi must exceed dichotomy.lo"));
                }
            }
            Command::Steady => {
                let st = &mut self.steady;
                let kind = *st.variant.get_or_insert(SteadyKind::FixedBall);
                st.cells.get_or_insert(DEFAULT_EIGEN_CELLS);
                check_cells(st.cells, "steady.N")?;
                positive(st.radius, "steady.radius")?;
                if kind == SteadyKind::FixedBall && st.radius.is_none() {
                    st.radius = self.solver.h0;
                    if st.radius.is_none() {
                        return Err(invalid("steady.radius or solver.h0 is required"));
                    }
                }
                if kind == SteadyKind::EntireSpace && !habitat.tail_limits().satisfies_h {
                    return Err(invalid("entire-space steady state needs lim (b - d) > 0"));
                }
            }
            Command::Simulate => {}
        }
        self.paths.out.get_or_insert_with(|| PathBuf::from("out"));

        // last gate: the core's own checks on the assembled run
        if needs_run {
            let template = self.sim_config_with(habitat)?;
            if cmd == Command::Simulate {
                template.validate()?;
            }
        }
        Ok(self)
    }

    fn resolve_sweep(&mut self) -> Result<(), CliError> {
        let w = self
            .sweep
            .as_mut()
            .ok_or_else(|| invalid("`sweep` needs a [sweep] table"))?;
        if let Some(r) = w.range.take() {
            if w.values.is_some() {
                return Err(invalid("give sweep.values or sweep.range, not both"));
            }
            if r.count < 2 || !(r.stop > r.start) {
                return Err(invalid("sweep.range needs count >= 2 and stop > start"));
            }
            w.values = Some(
                (0..r.count)
                    .map(|i| r.start + (r.stop - r.start) * i as f64 / (r.count - 1) as f64)
                    .collect(),
            );
        }
        let values = w
            .values
            .as_ref()
            .ok_or_else(|| invalid("sweep.values or sweep.range is required"))?;
        if values.is_empty() {
            return Err(invalid("sweep.values is empty"));
        }
        if values.windows(2).any(|p| p[1] < p[0]) {
            return Err(invalid("sweep.values must be sorted"));
        }
        for &v in values {
            positive(Some(v), &format!("sweep value for {:?}", w.parameter))?;
        }
        w.margin.get_or_insert(1e-2);
        positive(w.margin, "sweep.margin")?;
        let (param, first) = (w.parameter, values[0]);
        // fill the swept field so the template is complete
        let s = &mut self.solver;
        match param {
            SweepParam::D => {
                s.diffusion.get_or_insert(first);
            }
            SweepParam::H0 => {
                s.h0.get_or_insert(first);
            }
            SweepParam::Delta => {
                s.delta.get_or_insert(first);
            }
            SweepParam::Mu => {
                s.mu.get_or_insert(first);
            }
        }
        if s.dt.is_none() {
            s.dt = Some(1e-3 * s.h0.unwrap() * s.h0.unwrap() / s.diffusion.unwrap());
        }
        Ok(())
    }

    pub fn habitat(&self) -> Result<Habitat, CliError> {
        self.habitat.build()
    }

    pub fn rules(&self) -> ClassifyRules {
        let c = &self.classify;
        let d = ClassifyRules::default();
        ClassifyRules {
            eps_r0: c.eps_r0.unwrap_or(d.eps_r0),
            eps_h: c.eps_h.unwrap_or(d.eps_h),
            eps_vanish: c.eps_vanish.unwrap_or(d.eps_vanish),
            eps_front: c.eps_front.unwrap_or(d.eps_front),
            window: c.window.unwrap_or(d.window),
            extension: c.t_max_extension.unwrap_or(d.extension),
        }
    }

    /// Simulation template; δ defaults to 1 when free (dichotomy).
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        self.sim_config_with(self.habitat()?)
    }

    fn sim_config_with(&self, habitat: Habitat) -> Result<SimConfig, CliError> {
        let s = &self.solver;
        let missing = |what: &str| invalid(format!("solver.{what} is required"));
        let mut cfg = SimConfig::new(
            habitat,
            s.diffusion.ok_or_else(|| missing("D"))?,
            s.mu.ok_or_else(|| missing("mu"))?,
            s.h0.ok_or_else(|| missing("h0"))?,
            s.delta.unwrap_or(1.0),
        );
        if let Some(kind) = s.phi_kind {
            cfg.shape = match kind {
                PhiKind::Cosine => InitialShape::Cosine,
                PhiKind::Parabolic => InitialShape::Parabolic,
            };
        }
        if let Some(n) = s.cells {
            cfg.cells = n;
        }
        if let Some(dt) = s.dt {
            cfg.dt = dt;
        }
        if let Some(t) = s.t_max {
            cfg.t_max = t;
        }
        if let Some(t) = s.output_interval {
            cfg.output_interval = t;
        }
        if let Some(ts) = &s.snapshot_times {
            cfg.snapshot_times = ts.clone();
        }
        if let Some(n) = s.eigen_cells {
            cfg.eigen_cells = n;
        }
        Ok(cfg)
    }

    pub fn steady_variant(&self) -> SteadyVariant {
        match self.steady.variant {
            Some(SteadyKind::EntireSpace) => SteadyVariant::EntireSpace,
            _ => SteadyVariant::FixedBall,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// TOML text of the resolved config.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn check_cells(n: Option<usize>, what: &str) -> Result<(), CliError> {
    match n {
        Some(n) if n < 32 => Err(invalid(format!("{what} must be at least 32"))),
        _ => Ok(()),
    }
}

impl HabitatConfig {
    pub fn build(&self) -> Result<Habitat, CliError> {
        let b = self.b.0.to_profile();
        let d = self.d.0.to_profile();
        let beta = self.beta.0.to_profile();
        for p in [&b, &d, &beta] {
            p.validate()?;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in [&b, &d, &beta] {
            let (a, c) = p.range();
            lo = lo.min(a);
            hi = hi.max(c);
        }
        let b1 = self.b1.unwrap_or(lo);
        let b2 = self.b2.unwrap_or(hi);
        Ok(Habitat::new(b, d, beta, self.n, b1, b2)?)
    }
}
