//! Subcommand implementations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use frontier_core::classify::{
    self, classify_outcome, critical_radius, find_delta0, structure_violations, sweep_point,
    SweepRow, Verdict,
};
use frontier_core::eigen::{self, GridPolicy, ThresholdResult, ThresholdStatus};
use frontier_core::grid::RadialGrid;
use frontier_core::pde::{self, entire_space_radius, solve_steady_state, StopRule};
use frontier_core::semiwave::{find_k0, SemiWaveProblem};
use log::{info, warn};

use crate::config::{Command, RunConfig, Target};
use crate::output::{num, OutputDir, RunManifest};
use crate::CliError;

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Every classification came back undetermined.
    Undetermined,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Undetermined => 2,
        }
    }
}

/// Runs the configured command, writing CSVs and `manifest.json` into the
/// output directory.
pub fn dispatch(cfg: &RunConfig, jobs: usize) -> Result<Status, CliError> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.out_dir())?;
    info!("{} -> {}", cfg.command, out.root().display());
    let status = match cfg.command {
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Eigen => eigen_table(cfg, &mut out)?,
        Command::Threshold => threshold(cfg, &mut out)?,
        Command::Speed => speed(cfg, &mut out)?,
        Command::Dichotomy => dichotomy(cfg, &mut out)?,
        Command::Sweep => sweep(cfg, jobs, &mut out)?,
        Command::Steady => steady(cfg, &mut out)?,
    };
    out.write_manifest(&RunManifest {
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.to_string(),
        config: cfg.echo(),
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: out.files().to_vec(),
    })?;
    Ok(status)
}

fn simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let sim = cfg.sim_config()?;
    let rules = cfg.rules();
    let hstar = critical_radius(&sim)?;
    let stop = if cfg.classify.stop_on_verdict == Some(true) {
        StopRule::OnVerdict { hstar, rules }
    } else {
        StopRule::Never
    };
    let run = pde::run(&sim, &stop)?;
    let outcome = run
        .outcome
        .unwrap_or_else(|| classify_outcome(&run.series, hstar, &rules));
    info!(
        "t = {}, h = {}, verdict {}",
        run.state.t,
        run.state.h,
        outcome.verdict.as_str()
    );
    if !run.monitor.all_hold() {
        warn!("a-priori bounds violated: {:?}", run.monitor);
    }

    out.write_csv(
        "timeseries.csv",
        &["t", "h", "hp", "max_u", "mass", "R0_front"],
        run.series.samples.iter().map(|s| {
            [s.t, s.h, s.hp, s.max_u, s.mass, s.r0_front].map(num)
        }),
    )?;
    for snap in &run.snapshots {
        out.write_csv(
            &format!("profile_{}.csv", num(snap.t)),
            &["r", "u"],
            snap.r.iter().zip(&snap.u).map(|(r, u)| [num(*r), num(*u)]),
        )?;
    }
    out.write_csv(
        "outcome.csv",
        &["verdict", "evidence", "t_decided", "h_inf_estimate", "hstar", "bounds_hold"],
        [[
            outcome.verdict.as_str().to_string(),
            outcome.evidence.as_str().to_string(),
            num(outcome.t_decided),
            num(outcome.h_inf_estimate),
            num(hstar),
            run.monitor.all_hold().to_string(),
        ]],
    )?;
    Ok(if outcome.verdict == Verdict::Undetermined {
        Status::Undetermined
    } else {
        Status::Success
    })
}

fn eigen_table(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let habitat = cfg.habitat()?;
    let e = &cfg.eigen;
    let cells = e.cells.unwrap_or(crate::config::DEFAULT_EIGEN_CELLS);
    let mut rows = Vec::new();
    for &d in e.diffusions.iter().flatten() {
        for &r in e.radii.iter().flatten() {
            let res = eigen::solve(&habitat, d, &RadialGrid::new(r, cells)?)?;
            rows.push([num(d), num(r), num(res.lambda_star), num(res.r0)]);
        }
    }
    out.write_csv("eigen.csv", &["D", "R", "lambda_star", "R0"], rows)?;
    Ok(Status::Success)
}

fn status_name(s: ThresholdStatus) -> &'static str {
    match s {
        ThresholdStatus::Finite => "finite",
        ThresholdStatus::NoFavorableSite => "no_favorable_site",
        ThresholdStatus::Infinite => "infinite",
    }
}

fn threshold(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let habitat = cfg.habitat()?;
    let t = &cfg.threshold;
    let cells = t.cells.unwrap_or(crate::config::DEFAULT_EIGEN_CELLS);
    let tol = t.tol.unwrap_or(crate::config::DEFAULT_THRESHOLD_TOL);
    let radius = t
        .radius
        .ok_or_else(|| CliError::Validation("threshold.radius is required".into()))?;
    let diffusion = cfg.solver.diffusion.unwrap_or(f64::NAN);
    let (name, res): (&str, ThresholdResult) = match t.target.unwrap_or(Target::Hstar) {
        Target::Dstar => {
            let grid = RadialGrid::new(radius, cells)?;
            ("Dstar", eigen::find_dstar(&habitat, radius, &grid, tol)?)
        }
        Target::Hstar => {
            let policy = GridPolicy::new(cells, radius);
            ("hstar", eigen::find_hstar(&habitat, diffusion, &policy, tol)?)
        }
    };
    info!("{name} = {} ({})", res.value, status_name(res.status));
    out.write_csv(
        "threshold.csv",
        &["target", "value", "lo", "hi", "residual", "status"],
        [[
            name.to_string(),
            num(res.value),
            num(res.bracket.0),
            num(res.bracket.1),
            num(res.residual),
            status_name(res.status).to_string(),
        ]],
    )?;
    Ok(Status::Success)
}

fn speed(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let s = &cfg.speed;
    let missing = || CliError::Validation("speed parameters unresolved".into());
    let p = SemiWaveProblem::new(
        s.a.ok_or_else(missing)?,
        s.b.ok_or_else(missing)?,
        s.diffusion.ok_or_else(missing)?,
        s.mu.ok_or_else(missing)?,
    )?;
    let res = find_k0(&p)?;
    info!("k0 = {} (c* = {})", res.k0, res.cstar);
    out.write_csv(
        "speed.csv",
        &["a", "b", "D", "mu", "k0", "cstar", "U0_slope"],
        [[p.a, p.b, p.diffusion, p.mu, res.k0, res.cstar, res.u0_slope].map(num)],
    )?;
    out.write_csv(
        "semiwave_profile.csv",
        &["xi", "U"],
        res.profile.iter().map(|(x, u)| [num(*x), num(*u)]),
    )?;
    Ok(Status::Success)
}

fn dichotomy(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let template = cfg.sim_config()?;
    let d = &cfg.dichotomy;
    let res = find_delta0(
        &template,
        d.lo.unwrap_or(1e-3),
        d.hi.unwrap_or(1.0),
        d.tol.unwrap_or(0.02),
        d.cap.unwrap_or(1e3),
        &cfg.rules(),
    )?;
    if !res.converged {
        warn!(
            "bisection stopped on an undetermined run; bracket width {}",
            res.relative_width()
        );
    }
    info!("delta0 = {} after {} runs", res.delta0, res.runs);
    out.write_csv(
        "delta0.csv",
        &["delta0", "lo", "hi", "runs"],
        [[
            num(res.delta0),
            num(res.bracket.0),
            num(res.bracket.1),
            res.runs.to_string(),
        ]],
    )?;
    Ok(if res.converged {
        Status::Success
    } else {
        Status::Undetermined
    })
}

/// Applies `f` to every item on up to `jobs` threads; results keep input
/// order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

fn sweep(cfg: &RunConfig, jobs: usize, out: &mut OutputDir) -> Result<Status, CliError> {
    let w = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [sweep] table".into()))?;
    let template = cfg.sim_config()?;
    let rules = cfg.rules();
    let parameter = w.parameter.core();
    let values = w.values.clone().unwrap_or_default();
    let rows: Vec<SweepRow> = parallel_map(&values, jobs, |&v| {
        let row = sweep_point(parameter, v, &template, &rules);
        info!("{} = {}: {:?}", parameter.name(), v, row.outcome.as_ref().map(|o| o.verdict));
        row
    });

    out.write_csv(
        "sweep.csv",
        &["value", "verdict", "t_decided", "h_final"],
        rows.iter().map(|r| match &r.outcome {
            Ok(o) => [
                num(r.value),
                o.verdict.as_str().to_string(),
                num(o.t_decided),
                num(r.h_final),
            ],
            Err(_) => [num(r.value), "Error".to_string(), num(f64::NAN), num(f64::NAN)],
        }),
    )?;

    let mut failures = Vec::new();
    for r in &rows {
        if let Err(e) = &r.outcome {
            failures.push(format!("{} = {}: {e}", parameter.name(), r.value));
        }
    }
    let bad = structure_violations(parameter, &rows, &template, w.margin.unwrap_or(1e-2))?;
    if !bad.is_empty() {
        failures.push(format!(
            "verdict structure violated at {} = {:?}",
            parameter.name(),
            bad
        ));
    }
    if !failures.is_empty() {
        return Err(CliError::Failed(failures.join("; ")));
    }
    let all_undetermined = rows
        .iter()
        .all(|r| matches!(&r.outcome, Ok(o) if o.verdict == classify::Verdict::Undetermined));
    Ok(if all_undetermined {
        Status::Undetermined
    } else {
        Status::Success
    })
}

fn steady(cfg: &RunConfig, out: &mut OutputDir) -> Result<Status, CliError> {
    let habitat = cfg.habitat()?;
    let st = &cfg.steady;
    let cells = st.cells.unwrap_or(crate::config::DEFAULT_EIGEN_CELLS);
    let diffusion = cfg.solver.diffusion.unwrap_or(f64::NAN);
    let variant = cfg.steady_variant();
    let radius = match st.radius {
        Some(r) => r,
        None => {
            let policy = GridPolicy::new(512, cfg.solver.h0.unwrap_or(1.0));
            let hstar = eigen::find_hstar(&habitat, diffusion, &policy, 1e-6)?;
            entire_space_radius(hstar.value)
        }
    };
    let ss = solve_steady_state(&habitat, diffusion, radius, cells, variant)?;
    info!(
        "steady state on [0, {radius}] after {} Newton steps, residual {:e}",
        ss.iterations, ss.residual
    );
    out.write_csv(
        "steady.csv",
        &["r", "u"],
        ss.r.iter().zip(&ss.u).map(|(r, u)| [num(*r), num(*u)]),
    )?;
    Ok(Status::Success)
}
