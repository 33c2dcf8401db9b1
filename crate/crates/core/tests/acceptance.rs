//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use frontier_core::classify::*;
use frontier_core::eigen::*;
use frontier_core::grid::RadialGrid;
use frontier_core::habitat::{CoefficientProfile, Habitat};
use frontier_core::pde::*;
use frontier_core::semiwave::*;

type Check = Result<String, String>;

fn logistic(n: usize) -> Habitat {
    Habitat::constant(2.0, 1.0, 1.0, n).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// Monitors of every simulation run below, for the bounds criterion.
#[derive(Default)]
struct Ledger {
    monitors: Vec<(String, BoundsMonitor)>,
}

impl Ledger {
    fn run(&mut self, label: &str, cfg: &SimConfig, stop: &StopRule) -> Result<RunOutput, String> {
        let out = run(cfg, stop).map_err(err)?;
        self.monitors.push((label.to_string(), out.monitor));
        Ok(out)
    }
}

// 1
fn closed_form_hstar() -> Check {
    let mut notes = Vec::new();
    for (n, exact) in [(1usize, PI / 2.0), (3, PI)] {
        let res = find_hstar(&logistic(n), 1.0, &GridPolicy::new(2000, 1.0), 1e-9).map_err(err)?;
        let rel = (res.value / exact - 1.0).abs();
        ensure(rel < 1e-4, || format!("n={n}: h* = {} vs {exact}", res.value))?;
        notes.push(format!("n={n} h*={:.8} rel {rel:.1e}", res.value));
    }
    Ok(notes.join(", "))
}

// 2
fn constant_r0_formula() -> Check {
    let h = logistic(1);
    let mut worst: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for d in [0.5, 1.0, 2.0] {
        for r in [0.5, 1.0, 2.0] {
            let lambda = PI * PI / (4.0 * r * r);
            let exact = 2.0 / (lambda * d + 1.0);
            let at = |cells| compute_r0(&h, d, &RadialGrid::new(r, cells).unwrap()).map_err(err);
            let e1 = (at(1000)? - exact).abs();
            let e2 = (at(2000)? - exact).abs();
            worst = worst.max(e2);
            min_order = min_order.min((e1 / e2).log2());
        }
    }
    ensure(worst <= 5e-6, || format!("max error {worst:.2e}"))?;
    ensure(min_order >= 1.9, || format!("observed order {min_order:.3}"))?;
    Ok(format!("max |err| {worst:.2e} at N=2000, min order {min_order:.3}"))
}

// 3
fn sign_test() -> Check {
    let mut rng = common::rng(3);
    let (mut decisive, mut sub, mut sup) = (0, 0, 0);
    for i in 0..50 {
        let h = common::random_habitat(&mut rng);
        let d = 0.05 * 100f64.powf(rand::Rng::random::<f64>(&mut rng));
        let r = rand::Rng::random_range(&mut rng, 0.3..4.0);
        let res = solve(&h, d, &RadialGrid::new(r, 800).unwrap()).map_err(err)?;
        if (1.0 - res.r0).abs() > 1e-6 && res.lambda_star.abs() > 1e-6 {
            decisive += 1;
            ensure((res.r0 < 1.0) == (res.lambda_star > 0.0), || {
                format!("sample {i}: R0 = {}, lambda* = {}", res.r0, res.lambda_star)
            })?;
            if res.r0 < 1.0 {
                sub += 1
            } else {
                sup += 1
            }
        }
    }
    ensure(sub > 0 && sup > 0, || format!("one-sided sample: {sub} below, {sup} above"))?;
    Ok(format!("{decisive}/50 decisive ({sub} with R0<1, {sup} with R0>1), no mismatch"))
}

// 4
fn r0_monotonicity() -> Check {
    let mut rng = common::rng(4);
    let mut violations = 0;
    for _ in 0..10 {
        let h = common::random_habitat(&mut rng);
        let d = rand::Rng::random_range(&mut rng, 0.2..2.0);
        let r = rand::Rng::random_range(&mut rng, 0.5..1.5);
        // radii on one fixed spacing, so each discrete ball contains the last
        let spacing = r / 400.0;
        let at = |d: f64, cells: usize| {
            compute_r0(&h, d, &RadialGrid::new(spacing * cells as f64, cells).unwrap()).map_err(err)
        };
        let mut ds = Vec::new();
        let mut rs = Vec::new();
        for i in 0..5 {
            ds.push(at(d * 1.5f64.powi(i), 400)?);
            rs.push(at(d, 400 + 100 * i as usize)?);
        }
        violations += ds.windows(2).filter(|w| !(w[1] < w[0])).count();
        violations += rs.windows(2).filter(|w| !(w[1] > w[0])).count();
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("10 habitats, 5-point D and R sweeps, 0 violations".into())
}

fn dichotomy_template(cells: usize) -> SimConfig {
    let mut cfg = SimConfig::new(logistic(1), 1.0, 1.0, 1.0, 0.1);
    cfg.cells = cells;
    cfg
}

// 5
fn dichotomy(ledger: &mut Ledger, bracket_out: &mut Option<(f64, f64)>) -> Check {
    let rules = ClassifyRules::default();
    let template = dichotomy_template(200);
    let res = find_delta0(&template, 0.05, 0.1, 0.02, 100.0, &rules).map_err(err)?;
    let width = res.relative_width();
    ensure(width < 0.05, || format!("bracket {:?} width {width:.3}", res.bracket))?;
    *bracket_out = Some(res.bracket);

    let mut check = dichotomy_template(400);
    check.t_max *= 4.0;
    let hstar = critical_radius(&check).map_err(err)?;
    let stop = StopRule::OnVerdict { hstar, rules };
    let mut verdicts = Vec::new();
    for (delta, want) in [(res.bracket.0, Verdict::Vanishing), (res.bracket.1, Verdict::Spreading)] {
        check.delta = delta;
        let out = ledger.run("dichotomy endpoint", &check, &stop)?;
        let v = out
            .outcome
            .unwrap_or_else(|| classify_outcome(&out.series, hstar, &rules))
            .verdict;
        ensure(v == want, || format!("delta = {delta} gave {v:?} at 2N, 4T_max"))?;
        verdicts.push(v);
    }
    Ok(format!(
        "delta0 = {:.5}, bracket ({:.5}, {:.5}) width {:.2}%, {} runs; endpoints keep {:?}/{:?} at 2N, 4T_max",
        res.delta0,
        res.bracket.0,
        res.bracket.1,
        100.0 * width,
        res.runs,
        verdicts[0],
        verdicts[1]
    ))
}

// 6
fn spreading_speed(ledger: &mut Ledger, delta: f64) -> Check {
    let mut cfg = dichotomy_template(800);
    cfg.delta = delta;
    cfg.t_max = 150.0;
    let out = ledger.run("speed run", &cfg, &StopRule::Never)?;
    let speed = front_speed_estimate(&out.series, 0.2).map_err(err)?;
    let sw = find_k0(&SemiWaveProblem::new(1.0, 1.0, 1.0, 1.0).unwrap()).map_err(err)?;
    let rel = (speed / sw.k0 - 1.0).abs();
    ensure(sw.k0 > 0.0 && sw.k0 < 2.0, || format!("k0 = {}", sw.k0))?;
    ensure(rel < 0.05, || format!("speed {speed} vs k0 {}", sw.k0))?;
    Ok(format!("delta = {delta:.5}: h'/t fit {speed:.6}, k0 = {:.6}, rel diff {rel:.1e}", sw.k0))
}

// 7
fn comparison(ledger: &mut Ledger) -> Check {
    let make = |delta: f64| {
        let mut cfg = dichotomy_template(400);
        cfg.delta = delta;
        cfg.t_max = 20.0;
        cfg.snapshot_times = (1..=40).map(|i| 0.5 * i as f64).collect();
        cfg
    };
    let lo = ledger.run("comparison delta=0.3", &make(0.3), &StopRule::Never)?;
    let hi = ledger.run("comparison delta=0.6", &make(0.6), &StopRule::Never)?;
    let mut worst_h = f64::NEG_INFINITY;
    let mut worst_u = f64::NEG_INFINITY;
    for (a, b) in lo.series.samples.iter().zip(&hi.series.samples) {
        ensure(a.t == b.t, || "sample times differ".into())?;
        worst_h = worst_h.max(a.h - b.h);
    }
    for (sa, sb) in lo.snapshots.iter().zip(&hi.snapshots) {
        for (r, u) in sa.r.iter().zip(&sa.u) {
            worst_u = worst_u.max(u - sb.interpolate(*r));
        }
    }
    ensure(worst_h <= 1e-6, || format!("h(1) - h(2) reaches {worst_h:e}"))?;
    ensure(worst_u <= 1e-6, || format!("u(1) - u(2) reaches {worst_u:e}"))?;
    Ok(format!(
        "{} common samples; max h1-h2 = {worst_h:.3e}, max u1-u2 = {worst_u:.3e}",
        lo.series.len()
    ))
}

// 9
fn profile_convergence(ledger: &mut Ledger) -> Check {
    let b = CoefficientProfile::Tanh {
        center: 3.0,
        width: 1.0,
        left: 0.5,
        right: 2.0,
    };
    let h = Habitat::new(b, CoefficientProfile::Constant(1.0), CoefficientProfile::Constant(1.0), 2, 0.5, 2.0)
        .map_err(err)?;
    let tails = h.tail_limits();
    ensure(tails.alpha == 1.0 && tails.beta_inf == 1.0 && tails.satisfies_h, || format!("{tails:?}"))?;
    let hstar = find_hstar(&h, 1.0, &GridPolicy::new(1000, 3.0), 1e-8).map_err(err)?.value;
    let mut cfg = SimConfig::new(h.clone(), 1.0, 1.0, 1.2 * hstar, 1.0);
    cfg.t_max = 120.0;
    cfg.snapshot_times = vec![120.0];
    let out = ledger.run("tanh habitat", &cfg, &StopRule::Never)?;
    let ss = solve_steady_state(&h, 1.0, entire_space_radius(hstar), 4000, SteadyVariant::EntireSpace)
        .map_err(err)?;
    let snap = &out.snapshots[0];
    let sup = (0..=1000)
        .map(|i| {
            let r = 5.0 * i as f64 / 1000.0;
            (snap.interpolate(r) - ss.interpolate(r)).abs()
        })
        .fold(0.0, f64::max);
    ensure(sup < 5e-2, || format!("sup |u - u~| = {sup}"))?;
    Ok(format!("h* = {hstar:.5}, h(120) = {:.3}, sup_[0,5] |u - u~| = {sup:.2e}", out.state.h))
}

// 8
fn apriori_bounds(ledger: &Ledger) -> Check {
    ensure(!ledger.monitors.is_empty(), || "no runs recorded".into())?;
    let mut steps = 0;
    for (label, m) in &ledger.monitors {
        steps += m.steps;
        ensure(m.u_within_c1(), || format!("{label}: max u {} > C1 {}", m.max_v, m.bounds.c1))?;
        ensure(m.u_nonnegative(), || format!("{label}: min u {}", m.min_v))?;
        ensure(m.speed_within_c2(), || {
            format!("{label}: h' in [{}, {}], C2 = {}", m.min_hp, m.max_hp, m.bounds.c2)
        })?;
        ensure(m.front_increasing(), || format!("{label}: {} stalls", m.front_stalls))?;
    }
    Ok(format!("{} runs, {steps} accepted steps, all bounds hold", ledger.monitors.len()))
}

// 10
fn semiwave_monotonicity() -> Check {
    let grid = [0.5, 0.75, 1.0, 1.5, 2.0];
    let k0 = |a: f64, b: f64, mu: f64| -> Result<f64, String> {
        Ok(find_k0(&SemiWaveProblem::new(a, b, 1.0, mu).map_err(err)?).map_err(err)?.k0)
    };
    let mut report = Vec::new();
    for (name, increasing) in [("mu", true), ("a", true), ("b", false)] {
        let mut ks = Vec::new();
        for &x in &grid {
            ks.push(match name {
                "mu" => k0(1.0, 1.0, x)?,
                "a" => k0(x, 1.0, 1.0)?,
                _ => k0(1.0, x, 1.0)?,
            });
        }
        let ok = ks.windows(2).all(|w| {
            if increasing {
                w[1] > w[0] + 1e-6
            } else {
                w[1] < w[0] - 1e-6
            }
        });
        ensure(ok, || format!("{name} sweep {ks:?}"))?;
        report.push(format!("{name}: {:.4}..{:.4}", ks[0], ks[4]));
    }
    Ok(report.join(", "))
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let mut bracket = None;
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS  {id:>2}  {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {id:>2}  {name}: {msg} [{secs:.1}s]");
            }
        }
    };
    report(1, "closed-form critical radius", &mut closed_form_hstar);
    report(2, "constant-coefficient R0 formula", &mut constant_r0_formula);
    report(3, "R0 / lambda* sign agreement", &mut sign_test);
    report(4, "R0 monotone in D and R", &mut r0_monotonicity);
    report(5, "sharp amplitude delta0", &mut || dichotomy(&mut ledger, &mut bracket));
    let spread_delta = bracket.map_or(1.0, |b| b.1);
    report(6, "front speed vs semi-wave k0", &mut || spreading_speed(&mut ledger, spread_delta));
    report(7, "comparison principle", &mut || comparison(&mut ledger));
    report(9, "spreading profile convergence", &mut || profile_convergence(&mut ledger));
    report(8, "a-priori bounds over all runs", &mut || apriori_bounds(&ledger));
    report(10, "semi-wave k0 monotonicity", &mut semiwave_monotonicity);
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
