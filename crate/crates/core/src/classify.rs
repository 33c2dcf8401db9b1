//! Spreading/vanishing verdicts, the sharp amplitude δ₀ and parameter sweeps.

use alloc::vec::Vec;

use crate::eigen::{self, GridPolicy, THRESHOLD_TOL};
use crate::error::{Error, Result};
use crate::math;
use crate::pde::{self, SimConfig, StopRule, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Spreading => "Spreading",
            Verdict::Vanishing => "Vanishing",
            Verdict::Undetermined => "Undetermined",
        }
    }
}

/// Rule that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    /// R₀ᶠʳ ≥ 1 + ε_R0 at some sample.
    FrontThreshold,
    /// h ≥ h* (1 + ε_h) at some sample.
    BeyondCriticalRadius,
    /// u and h' small over the trailing window with h < h*.
    Decay,
    None,
}

impl Evidence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Evidence::FrontThreshold => "R0_front >= 1",
            Evidence::BeyondCriticalRadius => "h >= h*",
            Evidence::Decay => "u -> 0, h' -> 0",
            Evidence::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    /// Last h for Vanishing, +∞ for Spreading, last h otherwise.
    pub h_inf_estimate: f64,
    pub t_decided: f64,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyRules {
    pub eps_r0: f64,
    pub eps_h: f64,
    pub eps_vanish: f64,
    pub eps_front: f64,
    /// Trailing fraction of samples examined for decay.
    pub window: f64,
    /// T_max multiplier for the single rerun of an undetermined case.
    pub extension: f64,
}

impl Default for ClassifyRules {
    fn default() -> Self {
        ClassifyRules {
            eps_r0: 1e-3,
            eps_h: 1e-3,
            eps_vanish: 1e-5,
            eps_front: 1e-6,
            window: 0.2,
            extension: 2.0,
        }
    }
}

pub fn classify_outcome(ts: &TimeSeries, hstar: f64, rules: &ClassifyRules) -> Outcome {
    let samples = &ts.samples;
    for s in samples {
        let evidence = if s.h >= hstar * (1.0 + rules.eps_h) {
            Evidence::BeyondCriticalRadius
        } else if s.r0_front >= 1.0 + rules.eps_r0 {
            Evidence::FrontThreshold
        } else {
            continue;
        };
        return Outcome {
            verdict: Verdict::Spreading,
            h_inf_estimate: f64::INFINITY,
            t_decided: s.t,
            evidence,
        };
    }

    let Some(last) = samples.last() else {
        return Outcome {
            verdict: Verdict::Undetermined,
            h_inf_estimate: f64::NAN,
            t_decided: 0.0,
            evidence: Evidence::None,
        };
    };
    let take = math::ceil(rules.window * samples.len() as f64) as usize;
    let decayed = take >= 2
        && last.h < hstar
        && samples[samples.len() - take..]
            .iter()
            .all(|s| s.max_u < rules.eps_vanish && s.hp < rules.eps_front);
    Outcome {
        verdict: if decayed {
            Verdict::Vanishing
        } else {
            Verdict::Undetermined
        },
        h_inf_estimate: last.h,
        t_decided: last.t,
        evidence: if decayed { Evidence::Decay } else { Evidence::None },
    }
}

/// Critical radius for a configuration, solved on the grid used for the
/// R₀ᶠʳ samples so the two rules agree.
pub fn critical_radius(cfg: &SimConfig) -> Result<f64> {
    let policy = GridPolicy::new(cfg.eigen_cells, cfg.h0);
    Ok(eigen::find_hstar(&cfg.habitat, cfg.diffusion, &policy, THRESHOLD_TOL)?.value)
}

/// Run one configuration to a verdict, extending T_max once if it stays
/// undetermined. Returns the outcome and the number of simulations used.
pub fn decide(cfg: &SimConfig, hstar: f64, rules: &ClassifyRules) -> Result<(Outcome, usize)> {
    let stop = StopRule::OnVerdict {
        hstar,
        rules: *rules,
    };
    let first = pde::run(cfg, &stop)?;
    let outcome = first
        .outcome
        .unwrap_or_else(|| classify_outcome(&first.series, hstar, rules));
    if outcome.verdict != Verdict::Undetermined || rules.extension <= 1.0 {
        return Ok((outcome, 1));
    }
    let mut longer = cfg.clone();
    longer.t_max *= rules.extension;
    let second = pde::run(&longer, &stop)?;
    let outcome = second
        .outcome
        .unwrap_or_else(|| classify_outcome(&second.series, hstar, rules));
    Ok((outcome, 2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyResult {
    pub delta0: f64,
    /// (δ_vanish, δ_spread)
    pub bracket: (f64, f64),
    pub runs: usize,
    /// False when an undetermined midpoint stopped the bisection early;
    /// the bracket is still valid but wider than requested.
    pub converged: bool,
}

impl DichotomyResult {
    pub fn relative_width(&self) -> f64 {
        self.bracket.1 / self.bracket.0 - 1.0
    }
}

/// Bisection on the initial amplitude δ for the sharp threshold δ₀.
///
/// `hi` is doubled until the run spreads; reaching `cap` first is a
/// [`Error::BracketFailure`].
pub fn find_delta0(
    template: &SimConfig,
    lo: f64,
    hi: f64,
    tol: f64,
    cap: f64,
    rules: &ClassifyRules,
) -> Result<DichotomyResult> {
    if !(lo > 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::InvalidParameter("need 0 < lo < hi and tol > 0"));
    }
    let hstar = critical_radius(template)?;
    if template.h0 >= hstar {
        return Ok(DichotomyResult {
            delta0: 0.0,
            bracket: (0.0, 0.0),
            runs: 0,
            converged: true,
        });
    }

    let mut runs = 0;
    let mut verdict = |delta: f64| -> Result<Verdict> {
        let mut cfg = template.clone();
        cfg.delta = delta;
        let (o, used) = decide(&cfg, hstar, rules)?;
        runs += used;
        Ok(o.verdict)
    };

    let (mut lo, mut hi) = (lo, hi);
    if verdict(lo)? != Verdict::Vanishing {
        return Err(Error::BracketFailure("lower amplitude does not vanish"));
    }
    loop {
        match verdict(hi)? {
            Verdict::Spreading => break,
            Verdict::Vanishing => lo = hi,
            Verdict::Undetermined => {}
        }
        hi *= 2.0;
        if hi > cap {
            return Err(Error::BracketFailure("no spreading amplitude below the cap"));
        }
    }

    let mut converged = true;
    while hi / lo - 1.0 >= tol {
        let mid = 0.5 * (lo + hi);
        match verdict(mid)? {
            Verdict::Vanishing => lo = mid,
            Verdict::Spreading => hi = mid,
            Verdict::Undetermined => {
                converged = false;
                break;
            }
        }
    }
    Ok(DichotomyResult {
        delta0: 0.5 * (lo + hi),
        bracket: (lo, hi),
        runs,
        converged,
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Diffusion,
    InitialRadius,
    Amplitude,
    Mu,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Diffusion => "D",
            SweepParameter::InitialRadius => "h0",
            SweepParameter::Amplitude => "delta",
            SweepParameter::Mu => "mu",
        }
    }

    pub fn apply(&self, template: &SimConfig, value: f64) -> SimConfig {
        let mut cfg = template.clone();
        match self {
            SweepParameter::Diffusion => cfg.diffusion = value,
            SweepParameter::InitialRadius => cfg.h0 = value,
            SweepParameter::Amplitude => cfg.delta = value,
            SweepParameter::Mu => cfg.mu = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<Outcome>,
    /// Front radius at the end of the deciding run.
    pub h_final: f64,
}

/// One point of a sweep: configure, locate h*, run to a verdict.
pub fn sweep_point(
    parameter: SweepParameter,
    value: f64,
    template: &SimConfig,
    rules: &ClassifyRules,
) -> SweepRow {
    let cfg = parameter.apply(template, value);
    let outcome = critical_radius(&cfg).and_then(|hstar| decide(&cfg, hstar, rules).map(|o| o.0));
    let h_final = match &outcome {
        Ok(o) if o.verdict == Verdict::Spreading => f64::INFINITY,
        Ok(o) => o.h_inf_estimate,
        Err(_) => f64::NAN,
    };
    SweepRow {
        value,
        outcome,
        h_final,
    }
}

/// Independent runs for each value, in input order. Errors stay in their
/// row.
pub fn sweep(
    parameter: SweepParameter,
    values: &[f64],
    template: &SimConfig,
    rules: &ClassifyRules,
) -> Result<Vec<SweepRow>> {
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sweep values must be sorted"));
    }
    Ok(values
        .iter()
        .map(|&v| sweep_point(parameter, v, template, rules))
        .collect())
}

/// Values violating the verdict structure the theory guarantees:
/// spreading for D ≤ D*(1 − margin) and for h₀ ≥ h*(1 + margin), and at
/// most one Vanishing→Spreading flip in δ.
pub fn structure_violations(
    parameter: SweepParameter,
    rows: &[SweepRow],
    template: &SimConfig,
    margin: f64,
) -> Result<Vec<f64>> {
    let verdict = |row: &SweepRow| row.outcome.as_ref().ok().map(|o| o.verdict);
    let mut bad = Vec::new();
    match parameter {
        SweepParameter::Diffusion => {
            let grid = GridPolicy::new(template.eigen_cells, template.h0).grid(template.h0)?;
            let dstar = eigen::find_dstar(&template.habitat, template.h0, &grid, THRESHOLD_TOL)?;
            for row in rows {
                if row.value <= dstar.value * (1.0 - margin)
                    && verdict(row).is_some_and(|v| v != Verdict::Spreading)
                {
                    bad.push(row.value);
                }
            }
        }
        SweepParameter::InitialRadius => {
            let hstar = critical_radius(template)?;
            for row in rows {
                if row.value >= hstar * (1.0 + margin)
                    && verdict(row).is_some_and(|v| v != Verdict::Spreading)
                {
                    bad.push(row.value);
                }
            }
        }
        SweepParameter::Amplitude => {
            let mut spread_seen = false;
            for row in rows {
                match verdict(row) {
                    Some(Verdict::Spreading) => spread_seen = true,
                    Some(Verdict::Vanishing) if spread_seen => bad.push(row.value),
                    _ => {}
                }
            }
        }
        SweepParameter::Mu => {}
    }
    Ok(bad)
}
