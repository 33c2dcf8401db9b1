//! Semi-wave profiles `−D U'' + k U' = aU − bU²`, `U(0) = 0`, `U(∞) = a/b`,
//! and the spreading speed k₀ selected by the front condition μ U'(0) = k.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::ode::{self, Flow, Tolerance};

const SLOPE_TOL: f64 = 1e-10;
const SPEED_TOL: f64 = 1e-8;
const PROFILE_SAMPLES: usize = 400;
const UNRESOLVED: &str = "no undershooting initial slope";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiWaveProblem {
    /// Growth rate at the tail (α).
    pub a: f64,
    /// Crowding at the tail (β∞).
    pub b: f64,
    pub diffusion: f64,
    pub mu: f64,
}

impl SemiWaveProblem {
    pub fn new(a: f64, b: f64, diffusion: f64, mu: f64) -> Result<Self> {
        for (v, what) in [
            (a, "a must be positive"),
            (b, "b must be positive"),
            (diffusion, "D must be positive"),
            (mu, "mu must be positive"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(what));
            }
        }
        Ok(SemiWaveProblem {
            a,
            b,
            diffusion,
            mu,
        })
    }

    /// KPP minimal traveling-wave speed 2√(aD).
    pub fn cstar(&self) -> f64 {
        2.0 * math::sqrt(self.a * self.diffusion)
    }

    pub fn carrying_capacity(&self) -> f64 {
        self.a / self.b
    }

    /// Length of the sampled profile, 40 √(D/a).
    pub fn profile_length(&self) -> f64 {
        40.0 * math::sqrt(self.diffusion / self.a)
    }

    fn rhs(&self, k: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        move |_, y| {
            let (u, v) = (y[0], y[1]);
            [v, (k * v - self.a * u + self.b * u * u) / self.diffusion]
        }
    }
}

/// Semi-wave at one speed.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiWaveProfile {
    pub k: f64,
    /// U'(0).
    pub slope: f64,
    /// `(ξ, U(ξ))` on `[0, 40 √(D/a)]`.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiWaveResult {
    pub k0: f64,
    pub u0_slope: f64,
    pub cstar: f64,
    pub profile: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// U turns back (V reaches 0) below a/b.
    Under,
    /// U passes a/b while still increasing.
    Over,
}

fn shoot(p: &SemiWaveProblem, k: f64, slope: f64) -> Shot {
    let cap = p.carrying_capacity();
    let horizon = 1e3 * math::sqrt(p.diffusion / p.a);
    let mut verdict = None;
    let end = ode::integrate(
        p.rhs(k),
        0.0,
        [0.0, slope],
        horizon,
        Tolerance::default(),
        |_, y| {
            if y[0] > cap || y[0] > 1.5 * cap {
                verdict = Some(Shot::Over);
                Flow::Stop
            } else if y[1] <= 0.0 || y[0] < -0.1 * cap {
                verdict = Some(Shot::Under);
                Flow::Stop
            } else {
                Flow::Continue
            }
        },
    );
    verdict.unwrap_or(if end.y[0] < cap { Shot::Under } else { Shot::Over })
}

/// U'(0) of the semi-wave at speed `k`, bracketed between an undershooting
/// and an overshooting initial slope and bisected to relative width 1e-10.
pub fn semiwave_slope(p: &SemiWaveProblem, k: f64) -> Result<f64> {
    let (lo, hi) = slope_bracket(p, k)?;
    Ok(0.5 * (lo + hi))
}

fn slope_bracket(p: &SemiWaveProblem, k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k < p.cstar()) {
        return Err(Error::BracketFailure("k must lie in (0, 2 sqrt(aD))"));
    }
    let mut hi = 10.0 * p.carrying_capacity() * math::sqrt(p.a / p.diffusion);
    if shoot(p, k, hi) != Shot::Over {
        return Err(Error::BracketFailure("largest initial slope does not overshoot"));
    }
    let mut lo = 0.5 * hi;
    let mut halvings = 0;
    while shoot(p, k, lo) != Shot::Under {
        hi = lo;
        lo *= 0.5;
        halvings += 1;
        if halvings > 60 {
            return Err(Error::BracketFailure(UNRESOLVED));
        }
    }
    while hi - lo > SLOPE_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(p, k, mid) {
            Shot::Under => lo = mid,
            Shot::Over => hi = mid,
        }
    }
    Ok((lo, hi))
}

/// Full semi-wave profile at speed `k`.
///
/// The shot from U'(0) follows the saddle's stable manifold until round-off
/// in the slope makes it peel away; past the point where U is within 10⁻³
/// of a/b (or the trajectory starts to bend off) the linearized approach
/// `a/b − c e^{λ₋ ξ}` continues the profile.
pub fn solve_profile(p: &SemiWaveProblem, k: f64) -> Result<SemiWaveProfile> {
    let (lo, hi) = slope_bracket(p, k)?;
    let slope = 0.5 * (lo + hi);
    let cap = p.carrying_capacity();
    let lambda_minus =
        (k - math::sqrt(k * k + 4.0 * p.a * p.diffusion)) / (2.0 * p.diffusion);
    let length = p.profile_length();
    let dx = length / PROFILE_SAMPLES as f64;

    let mut samples = Vec::with_capacity(PROFILE_SAMPLES + 1);
    samples.push((0.0, 0.0));
    let mut y = [0.0, slope];
    let mut x = 0.0;
    let mut tail: Option<(f64, f64)> = None;
    for i in 1..=PROFILE_SAMPLES {
        let target = dx * i as f64;
        if tail.is_none() {
            let end = ode::integrate(p.rhs(k), x, y, target, Tolerance::default(), |_, _| {
                Flow::Continue
            });
            let gap = cap - end.y[0];
            // on the stable manifold V ≈ −λ₋ (a/b − U)
            let departing = end.y[1] < 0.5 * (-lambda_minus) * gap;
            if gap <= 1e-3 * cap || departing || gap <= 0.0 {
                // switch at the last trusted state
                let (xs, us) = if departing || gap <= 0.0 {
                    (x, y[0])
                } else {
                    (end.x, end.y[0])
                };
                tail = Some((xs, cap - us));
            } else {
                x = end.x;
                y = end.y;
                samples.push((target, y[0]));
                continue;
            }
        }
        let (xs, gap) = tail.unwrap();
        samples.push((target, cap - gap * math::exp(lambda_minus * (target - xs))));
    }
    Ok(SemiWaveProfile {
        k,
        slope,
        samples,
    })
}

/// Asymptotic spreading speed: the root k₀ ∈ (0, 2√(aD)) of μ U'_k(0) = k.
pub fn find_k0(p: &SemiWaveProblem) -> Result<SemiWaveResult> {
    let cstar = p.cstar();
    // U'(0) collapses towards 0 as k → c*; once no undershooting slope is
    // resolvable the front condition is certainly violated from below.
    let g = |k: f64| -> Result<f64> {
        match semiwave_slope(p, k) {
            Ok(s) => Ok(p.mu * s - k),
            Err(Error::BracketFailure(UNRESOLVED)) => Ok(-k),
            Err(e) => Err(e),
        }
    };

    let mut lo = 1e-6 * cstar;
    if g(lo)? <= 0.0 {
        return Err(Error::BracketFailure("mu U'(0) - k is not positive near k = 0"));
    }
    let mut hi = None;
    for j in 1..=40 {
        let k = cstar * (1.0 - libm::ldexp(1.0, -j));
        if g(k)? < 0.0 {
            hi = Some(k);
            break;
        }
        lo = k;
    }
    let mut hi = hi.ok_or(Error::BracketFailure("mu U'(0) - k has no sign change below c*"))?;

    let mut k0 = 0.5 * (lo + hi);
    for _ in 0..200 {
        k0 = 0.5 * (lo + hi);
        let value = g(k0)?;
        if value.abs() < SPEED_TOL || hi - lo < 1e-14 * cstar {
            break;
        }
        if value > 0.0 {
            lo = k0;
        } else {
            hi = k0;
        }
    }
    let profile = solve_profile(p, k0)?;
    Ok(SemiWaveResult {
        k0,
        u0_slope: profile.slope,
        cstar,
        profile: profile.samples,
    })
}
