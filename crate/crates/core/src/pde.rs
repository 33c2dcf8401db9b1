//! Time integration of the free-boundary problem in front-fixed coordinates
//! and the associated stationary problems.
//!
//! With `s = r h₀ / h(t)` the moving ball `[0, h(t)]` becomes `[0, h₀]` and
//! `v(s, t) = u(r, t)` satisfies
//!
//! ```text
//! v_t = (h₀/h)² D Δ_s v + (h'/h) s v_s + v (b − d − β v)(s h / h₀)
//! h'  = −μ (h₀/h) v_s(h₀, t)
//! ```
//!
//! Diffusion is implicit (one tridiagonal solve per step); advection and
//! reaction are explicit. The front position is advanced with the speed of
//! the previous profile.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::classify::{classify_outcome, ClassifyRules, Outcome, Verdict};
use crate::eigen::{self, GridPolicy};
use crate::error::{Error, Result};
use crate::grid::{thomas, RadialLaplacian};
use crate::habitat::Habitat;
use crate::math;

/// Shape φ of the initial datum u₀ = δ φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialShape {
    /// `cos(π r / (2 h₀))`
    #[default]
    Cosine,
    /// `1 − (r / h₀)²`
    Parabolic,
}

impl InitialShape {
    pub fn eval(&self, r: f64, h0: f64) -> f64 {
        match self {
            InitialShape::Cosine => math::cos(0.5 * PI * r / h0),
            InitialShape::Parabolic => {
                let x = r / h0;
                1.0 - x * x
            }
        }
    }

    /// ‖φ‖_{C¹([0, h₀])} = sup |φ| + sup |φ'|.
    pub fn c1_norm(&self, h0: f64) -> f64 {
        match self {
            InitialShape::Cosine => 1.0 + 0.5 * PI / h0,
            InitialShape::Parabolic => 1.0 + 2.0 / h0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub habitat: Habitat,
    pub diffusion: f64,
    pub mu: f64,
    pub h0: f64,
    pub delta: f64,
    pub shape: InitialShape,
    /// Spatial cells on the fixed s-grid.
    pub cells: usize,
    pub dt: f64,
    pub t_max: f64,
    pub output_interval: f64,
    /// Times at which full profiles are recorded.
    pub snapshot_times: Vec<f64>,
    /// Cells used for the R₀ᶠʳ solve at each output sample.
    pub eigen_cells: usize,
}

impl SimConfig {
    pub const DEFAULT_CELLS: usize = 800;
    pub const DEFAULT_T_MAX: f64 = 200.0;
    pub const DEFAULT_OUTPUT_INTERVAL: f64 = 0.5;
    pub const DEFAULT_EIGEN_CELLS: usize = 256;

    /// Configuration with the documented defaults:
    /// N = 800, dt = 10⁻³ h₀² / D, T_max = 200, output every 0.5.
    pub fn new(habitat: Habitat, diffusion: f64, mu: f64, h0: f64, delta: f64) -> Self {
        SimConfig {
            habitat,
            diffusion,
            mu,
            h0,
            delta,
            shape: InitialShape::Cosine,
            cells: Self::DEFAULT_CELLS,
            dt: 1e-3 * h0 * h0 / diffusion,
            t_max: Self::DEFAULT_T_MAX,
            output_interval: Self::DEFAULT_OUTPUT_INTERVAL,
            snapshot_times: Vec::new(),
            eigen_cells: Self::DEFAULT_EIGEN_CELLS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.diffusion) {
            return Err(Error::InvalidParameter("D must be positive"));
        }
        // μ = 0 freezes the front: the fixed-ball problem
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidParameter("mu must be nonnegative"));
        }
        if !positive(self.h0) {
            return Err(Error::InvalidParameter("h0 must be positive"));
        }
        if !positive(self.delta) {
            return Err(Error::InvalidInitialData("delta must be positive"));
        }
        if self.cells < 2 {
            return Err(Error::InvalidParameter("need at least 2 cells"));
        }
        if !positive(self.dt) || !positive(self.t_max) || !positive(self.output_interval) {
            return Err(Error::InvalidParameter("dt, T_max and output_interval must be positive"));
        }
        if self.eigen_cells < crate::grid::RadialGrid::MIN_CELLS {
            return Err(Error::InvalidParameter("eigen_cells must be at least 32"));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParameter("snapshot times must be nonnegative"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.h0 / self.cells as f64
    }

    /// u₀ on the s-grid.
    pub fn initial_profile(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..=self.cells)
            .map(|j| self.delta * self.shape.eval(self.spacing() * j as f64, self.h0))
            .collect();
        // φ(h₀) is 0 analytically; remove the round-off of cos(π/2)
        if v[self.cells].abs() < 1e-12 * self.delta {
            v[self.cells] = 0.0;
        }
        v
    }

    pub fn bounds(&self) -> AprioriBounds {
        AprioriBounds::new(self)
    }
}

/// Upper bounds for u and h' from the maximum principle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriBounds {
    /// C₁ = max{ sup(b − d) / inf β, ‖u₀‖_∞ }
    pub c1: f64,
    /// M = max{ 1/h₀, √(b₂ / 2D), 4 ‖u₀‖_{C¹} / (3 C₁) }
    pub m: f64,
    /// C₂ = 2 μ M C₁
    pub c2: f64,
}

impl AprioriBounds {
    pub fn new(cfg: &SimConfig) -> Self {
        let hab = &cfg.habitat;
        let u0_sup = cfg.delta;
        let c1 = (hab.sup_growth() / hab.inf_crowding()).max(u0_sup);
        let (_, b2) = hab.bounds();
        let m = (1.0 / cfg.h0)
            .max(math::sqrt(b2 / (2.0 * cfg.diffusion)))
            .max(4.0 * cfg.delta * cfg.shape.c1_norm(cfg.h0) / (3.0 * c1));
        AprioriBounds {
            c1,
            m,
            c2: 2.0 * cfg.mu * m * c1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Front radius h(t).
    pub h: f64,
    /// Front speed h'(t).
    pub hp: f64,
    /// v on `s_j = j h₀ / N`, `j = 0..=N`.
    pub v: Vec<f64>,
}

impl SimState {
    pub fn max_u(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(*x))
    }

    /// Physical radii of the grid nodes.
    pub fn radii(&self) -> Vec<f64> {
        let n = self.v.len() - 1;
        (0..=n).map(|j| self.h * j as f64 / n as f64).collect()
    }
}

/// One output record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub h: f64,
    pub hp: f64,
    pub max_u: f64,
    /// ∫₀^h u r^{n−1} dr
    pub mass: f64,
    pub r0_front: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Profile in physical coordinates at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl Snapshot {
    /// Linear interpolation of u at radius `r`, 0 beyond the front.
    pub fn interpolate(&self, r: f64) -> f64 {
        let last = self.r.len() - 1;
        if r >= self.r[last] {
            return 0.0;
        }
        let dr = self.r[1] - self.r[0];
        let x = r / dr;
        let j = (x as usize).min(last - 1);
        let w = x - j as f64;
        (1.0 - w) * self.u[j] + w * self.u[j + 1]
    }
}

/// Running check of the maximum-principle bounds on accepted steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsMonitor {
    pub bounds: AprioriBounds,
    pub steps: usize,
    pub min_v: f64,
    pub max_v: f64,
    pub min_hp: f64,
    pub max_hp: f64,
    /// Steps where h failed to increase by a representable amount.
    pub front_stalls: usize,
}

impl BoundsMonitor {
    fn new(bounds: AprioriBounds) -> Self {
        BoundsMonitor {
            bounds,
            steps: 0,
            min_v: f64::INFINITY,
            max_v: f64::NEG_INFINITY,
            min_hp: f64::INFINITY,
            max_hp: f64::NEG_INFINITY,
            front_stalls: 0,
        }
    }

    fn record(&mut self, before: &SimState, after: &SimState) {
        self.steps += 1;
        for &x in &after.v {
            self.min_v = self.min_v.min(x);
            self.max_v = self.max_v.max(x);
        }
        self.min_hp = self.min_hp.min(after.hp);
        self.max_hp = self.max_hp.max(after.hp);
        // an increment below one ulp of h is not a stall
        let expected = before.h + (after.t - before.t) * before.hp;
        if after.h < before.h || (after.h == before.h && expected > before.h) {
            self.front_stalls += 1;
        }
    }

    pub fn u_within_c1(&self) -> bool {
        self.max_v <= self.bounds.c1 + 1e-6
    }

    pub fn u_nonnegative(&self) -> bool {
        self.min_v >= -1e-10
    }

    pub fn speed_within_c2(&self) -> bool {
        self.min_hp > 0.0 && self.max_hp <= self.bounds.c2
    }

    pub fn front_increasing(&self) -> bool {
        self.front_stalls == 0 && self.min_hp > 0.0
    }

    pub fn all_hold(&self) -> bool {
        self.u_within_c1() && self.u_nonnegative() && self.speed_within_c2() && self.front_increasing()
    }
}

/// When [`run`] may stop before T_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Never,
    /// Stop at the first output sample where a verdict is reached.
    OnVerdict { hstar: f64, rules: ClassifyRules },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub state: SimState,
    pub snapshots: Vec<Snapshot>,
    pub monitor: BoundsMonitor,
    /// Verdict when the run stopped on [`StopRule::OnVerdict`].
    pub outcome: Option<Outcome>,
}

/// Front speed from the Stefan condition with the second-order one-sided
/// derivative `(3v_N − 4v_{N−1} + v_{N−2}) / (2Δs)`, v_N = 0.
pub fn stefan_speed(v: &[f64], spacing: f64, mu: f64, h0: f64, h: f64) -> f64 {
    let n = v.len() - 1;
    let vs = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * spacing);
    -mu * (h0 / h) * vs
}

pub fn init_state(cfg: &SimConfig) -> Result<SimState> {
    cfg.validate()?;
    let v = cfg.initial_profile();
    let n = cfg.cells;
    if v[n] != 0.0 {
        return Err(Error::InvalidInitialData("u0(h0) must vanish"));
    }
    if v[..n].iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInitialData("u0 must be positive on [0, h0)"));
    }
    // ghost-node symmetry gives u0'(0) = 0 on the grid; it needs v_1 ≤ v_0
    if v[1] > v[0] {
        return Err(Error::InvalidInitialData("u0 must have a maximum at the axis"));
    }
    let hp = stefan_speed(&v, cfg.spacing(), cfg.mu, cfg.h0, cfg.h0);
    Ok(SimState {
        t: 0.0,
        h: cfg.h0,
        hp,
        v,
    })
}

/// Explicit logistic update `v ← v + dt v (b − d − β v)` at radii `r`.
pub fn reaction_update(habitat: &Habitat, v: &mut [f64], r: &[f64], dt: f64) {
    for (x, &rj) in v.iter_mut().zip(r) {
        *x += dt * *x * (habitat.growth(rj) - habitat.beta(rj) * *x);
    }
}

/// Reusable stepping machinery for one configuration.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    cfg: &'a SimConfig,
    op: RadialLaplacian,
    bounds: AprioriBounds,
    s: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let op = RadialLaplacian::new(cfg.h0, cfg.cells, cfg.habitat.dimension());
        let s = (0..=cfg.cells).map(|j| cfg.spacing() * j as f64).collect();
        Ok(Integrator {
            cfg,
            op,
            bounds: AprioriBounds::new(cfg),
            s,
        })
    }

    pub fn bounds(&self) -> AprioriBounds {
        self.bounds
    }

    /// Largest stable step at this state: advection CFL
    /// `dt (h'/h) h₀ / Δs ≤ 0.5` and reaction accuracy `dt b₂ (1 + ‖v‖) ≤ 0.1`.
    pub fn max_dt(&self, state: &SimState) -> f64 {
        let (_, b2) = self.cfg.habitat.bounds();
        let mut dt = self.cfg.dt.min(0.1 / (b2 * (1.0 + state.max_u())));
        if state.hp > 0.0 {
            let rate = state.hp / state.h * self.cfg.h0 / self.cfg.spacing();
            dt = dt.min(0.5 / rate);
        }
        dt
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let cfg = self.cfg;
        let n = cfg.cells;
        let ds = cfg.spacing();
        let h = state.h;
        let stretch = h / cfg.h0;
        let v = &state.v;
        let habitat = &cfg.habitat;

        // explicit advection (central) and reaction
        let advect = state.hp / h;
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            let r = self.s[j] * stretch;
            let mut dv = v[j] * (habitat.growth(r) - habitat.beta(r) * v[j]);
            if j > 0 {
                dv += advect * self.s[j] * (v[j + 1] - v[j - 1]) / (2.0 * ds);
            }
            rhs[j] = self.op.volumes[j] * (v[j] + dt * dv);
        }

        // implicit diffusion: (V + dt κ S) v_new = V rhs
        let kappa = cfg.diffusion / (stretch * stretch);
        let mut sys = self.op.stiffness_dirichlet(dt * kappa);
        sys.add_diagonal(&self.op.volumes[..n]);
        let mut next = thomas(&sys.off, &sys.diag, &sys.off, &rhs);
        next.push(0.0);

        let ceiling = self.bounds.c1 * (1.0 + 1e-3);
        for x in next.iter_mut() {
            if *x < -1e-10 || *x > ceiling || !x.is_finite() {
                return Err(Error::StabilityFailure { t: state.t, dt });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }

        let h_next = h + dt * state.hp;
        let hp_next = stefan_speed(&next, ds, cfg.mu, cfg.h0, h_next);
        Ok(SimState {
            t: state.t + dt,
            h: h_next,
            hp: hp_next,
            v: next,
        })
    }

    pub fn mass(&self, state: &SimState) -> f64 {
        let stretch = state.h / self.cfg.h0;
        let weighted: f64 = self.op.volumes.iter().zip(&state.v).map(|(w, x)| w * x).sum();
        weighted * math::powi(stretch, self.cfg.habitat.dimension())
    }

    pub fn snapshot(&self, state: &SimState) -> Snapshot {
        let stretch = state.h / self.cfg.h0;
        Snapshot {
            t: state.t,
            r: self.s.iter().map(|s| s * stretch).collect(),
            u: state.v.clone(),
        }
    }

    fn sample(&self, state: &SimState) -> Result<Sample> {
        let policy = GridPolicy::new(self.cfg.eigen_cells, self.cfg.h0);
        Ok(Sample {
            t: state.t,
            h: state.h,
            hp: state.hp,
            max_u: state.max_u(),
            mass: self.mass(state),
            r0_front: eigen::r0_front(&self.cfg.habitat, self.cfg.diffusion, state.h, &policy)?,
        })
    }
}

/// One step of size `cfg.dt` (clamped to the stability limits).
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState> {
    let integrator = Integrator::new(cfg)?;
    integrator.step(state, integrator.max_dt(state))
}

const MAX_HALVINGS: usize = 10;

/// Integrates to `cfg.t_max` or until `stop` fires, sampling every
/// `cfg.output_interval`.
pub fn run(cfg: &SimConfig, stop: &StopRule) -> Result<RunOutput> {
    let integrator = Integrator::new(cfg)?;
    let mut state = init_state(cfg)?;
    let mut monitor = BoundsMonitor::new(integrator.bounds());
    let mut series = TimeSeries::default();
    series.samples.push(integrator.sample(&state)?);

    let mut snapshot_times = cfg.snapshot_times.clone();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snapshot_times.dedup();
    let mut snapshots = Vec::new();
    let mut pending = snapshot_times.into_iter().peekable();
    while pending.peek().is_some_and(|&t| t <= 0.0) {
        pending.next();
        snapshots.push(integrator.snapshot(&state));
    }

    let mut outputs_done = 0usize;
    let mut next_output = cfg.output_interval.min(cfg.t_max);
    let mut scale = 1.0;
    let mut outcome = None;

    while state.t < cfg.t_max {
        let mut event = next_output;
        if let Some(&t) = pending.peek() {
            event = event.min(t);
        }
        let remaining = event - state.t;
        let mut dt = scale * integrator.max_dt(&state);
        let lands = dt >= remaining;
        if lands {
            dt = remaining;
        }

        let mut halvings = 0;
        let mut next = loop {
            match integrator.step(&state, dt) {
                Ok(s) => break s,
                Err(Error::StabilityFailure { .. }) if halvings < MAX_HALVINGS => {
                    halvings += 1;
                    scale *= 0.5;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        let landed = lands && halvings == 0;
        if landed {
            next.t = event;
        }
        monitor.record(&state, &next);
        state = next;

        if landed && pending.peek() == Some(&event) {
            pending.next();
            snapshots.push(integrator.snapshot(&state));
        }
        if landed && event == next_output {
            series.samples.push(integrator.sample(&state)?);
            outputs_done += 1;
            next_output = (cfg.output_interval * (outputs_done + 1) as f64).min(cfg.t_max);
            if let StopRule::OnVerdict { hstar, rules } = stop {
                let o = classify_outcome(&series, *hstar, rules);
                if o.verdict != Verdict::Undetermined {
                    outcome = Some(o);
                    break;
                }
            }
        }
    }

    Ok(RunOutput {
        series,
        state,
        snapshots,
        monitor,
        outcome,
    })
}

/// Least-squares slope of h against t over the trailing `window` fraction
/// of samples.
pub fn front_speed_estimate(series: &TimeSeries, window: f64) -> Result<f64> {
    let total = series.len();
    if total < 10 {
        return Err(Error::InsufficientData { samples: total });
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter("window must lie in (0, 1]"));
    }
    let take = (math::ceil(window * total as f64) as usize).clamp(2, total);
    let tail = &series.samples[total - take..];
    let k = tail.len() as f64;
    let t_mean = tail.iter().map(|s| s.t).sum::<f64>() / k;
    let h_mean = tail.iter().map(|s| s.h).sum::<f64>() / k;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in tail {
        num += (s.t - t_mean) * (s.h - h_mean);
        den += (s.t - t_mean) * (s.t - t_mean);
    }
    Ok(num / den)
}

/// Which stationary problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyVariant {
    /// Dirichlet data on the ball B_R.
    FixedBall,
    /// The whole-space problem truncated at R with a zero-flux far end.
    EntireSpace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub variant: SteadyVariant,
    pub radius: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl SteadyState {
    /// Linear interpolation of the steady profile at `r ≤ radius`.
    pub fn interpolate(&self, r: f64) -> f64 {
        let last = self.r.len() - 1;
        let dr = self.r[1] - self.r[0];
        let x = (r / dr).max(0.0);
        let j = (x as usize).min(last - 1);
        let w = (x - j as f64).min(1.0);
        (1.0 - w) * self.u[j] + w * self.u[j + 1]
    }
}

/// Truncation radius for the whole-space steady state: max(10 h*, 50).
pub fn entire_space_radius(hstar: f64) -> f64 {
    if hstar.is_finite() {
        (10.0 * hstar).max(50.0)
    } else {
        50.0
    }
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

/// Strong-form residual `max |−DΔu − u (b − d − βu)|` over the unknowns.
pub fn steady_residual(habitat: &Habitat, diffusion: f64, state: &SteadyState) -> f64 {
    let cells = state.r.len() - 1;
    let op = RadialLaplacian::new(state.radius, cells, habitat.dimension());
    let unknowns = match state.variant {
        SteadyVariant::FixedBall => cells,
        SteadyVariant::EntireSpace => cells + 1,
    };
    let sys = match state.variant {
        SteadyVariant::FixedBall => op.stiffness_dirichlet(diffusion),
        SteadyVariant::EntireSpace => op.stiffness_neumann(diffusion),
    };
    let u = &state.u[..unknowns];
    let mut su = vec![0.0; unknowns];
    sys.mul_vec(u, &mut su);
    (0..unknowns)
        .map(|i| {
            let r = state.r[i];
            let f = u[i] * (habitat.growth(r) - habitat.beta(r) * u[i]);
            (su[i] / op.volumes[i] - f).abs()
        })
        .fold(0.0, f64::max)
}

/// Positive solution of `−DΔ_r u = u (b − d − βu)` by Newton's method.
pub fn solve_steady_state(
    habitat: &Habitat,
    diffusion: f64,
    radius: f64,
    cells: usize,
    variant: SteadyVariant,
) -> Result<SteadyState> {
    let grid = crate::grid::RadialGrid::new(radius, cells)?;
    if !(diffusion.is_finite() && diffusion > 0.0) {
        return Err(Error::InvalidParameter("D must be positive"));
    }
    match variant {
        SteadyVariant::FixedBall => {
            let r0 = eigen::compute_r0(habitat, diffusion, &grid)?;
            if r0 <= 1.0 {
                return Err(Error::BelowThreshold { r0 });
            }
        }
        SteadyVariant::EntireSpace => {
            if !habitat.tail_limits().satisfies_h {
                return Err(Error::InvalidParameter(
                    "whole-space steady state needs lim (b - d) > 0",
                ));
            }
        }
    }

    let op = RadialLaplacian::for_grid(&grid, habitat.dimension());
    let (stiff, unknowns) = match variant {
        SteadyVariant::FixedBall => (op.stiffness_dirichlet(diffusion), cells),
        SteadyVariant::EntireSpace => (op.stiffness_neumann(diffusion), cells + 1),
    };
    let r = grid.nodes();
    let growth: Vec<f64> = r[..unknowns].iter().map(|&x| habitat.growth(x)).collect();
    let crowd: Vec<f64> = r[..unknowns].iter().map(|&x| habitat.beta(x)).collect();
    let vol = &op.volumes[..unknowns];

    let residual_vec = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; unknowns];
        stiff.mul_vec(u, &mut out);
        for i in 0..unknowns {
            out[i] -= vol[i] * u[i] * (growth[i] - crowd[i] * u[i]);
        }
        out
    };
    let strong = |f: &[f64]| f.iter().zip(vol).map(|(x, w)| (x / w).abs()).fold(0.0, f64::max);

    let mut u: Vec<f64> = (0..unknowns)
        .map(|i| growth[i].max(1e-3) / crowd[i])
        .collect();
    let mut f = residual_vec(&u);
    let mut res = strong(&f);
    for it in 1..=NEWTON_MAX_ITER {
        let mut jac = stiff.clone();
        let diag: Vec<f64> = (0..unknowns)
            .map(|i| -vol[i] * (growth[i] - 2.0 * crowd[i] * u[i]))
            .collect();
        jac.add_diagonal(&diag);
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = thomas(&jac.off, &jac.diag, &jac.off, &neg);

        // backtrack to keep u nonnegative and the residual decreasing
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if trial.iter().all(|&x| x >= 0.0) {
                let ft = residual_vec(&trial);
                let rt = strong(&ft);
                if rt < res || lambda < 1e-6 {
                    accepted = Some((trial, ft, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let step_norm = delta.iter().fold(0.0f64, |m, d| m.max(d.abs())) * lambda;
        let Some((trial, ft, rt)) = accepted else {
            return Err(Error::NewtonDivergence {
                iterations: it,
                residual: res,
            });
        };
        u = trial;
        f = ft;
        res = rt;
        let u_norm = u.iter().fold(0.0f64, |m, x| m.max(*x));
        if res < NEWTON_TOL || (step_norm <= 1e-14 * u_norm.max(1.0) && res < 1e-8) {
            if u_norm <= 0.0 {
                return Err(Error::NewtonDivergence {
                    iterations: it,
                    residual: res,
                });
            }
            if variant == SteadyVariant::FixedBall {
                u.push(0.0);
            }
            return Ok(SteadyState {
                variant,
                radius,
                r,
                u,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(Error::NewtonDivergence {
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}
