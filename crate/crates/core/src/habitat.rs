//! Heterogeneous coefficients b(r), d(r), β(r) on the half line.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Number of validation points used for the `[b1, b2]` band check.
const VALIDATION_MESH: usize = 4096;

/// A radial coefficient r ↦ value, defined for every r ≥ 0.
///
/// Every kind has an exact limit as r → ∞, which is what makes the tail
/// condition on b − d and β checkable.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientProfile {
    Constant(f64),
    /// `left` on `[0, at)`, `right` on `[at, ∞)`.
    Step { at: f64, left: f64, right: f64 },
    /// `v0` up to `r0`, linear to `v1` at `r1`, then `v1`.
    LinearRamp { r0: f64, v0: f64, r1: f64, v1: f64 },
    /// `left + (right - left) (1 + tanh((r - center) / width)) / 2`.
    Tanh {
        center: f64,
        width: f64,
        left: f64,
        right: f64,
    },
    /// Piecewise linear through `(r, value)` samples with strictly
    /// increasing r, constant beyond either end.
    Tabulated(Vec<(f64, f64)>),
}

impl CoefficientProfile {
    /// Structural checks: finite parameters, positive values, ordered nodes.
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            CoefficientProfile::Constant(v) => {
                if !finite_pos(*v) {
                    return Err(Error::InvalidProfile("constant value must be positive"));
                }
            }
            CoefficientProfile::Step { at, left, right } => {
                if !(at.is_finite() && *at > 0.0) {
                    return Err(Error::InvalidProfile("step location must be positive"));
                }
                if !finite_pos(*left) || !finite_pos(*right) {
                    return Err(Error::InvalidProfile("step values must be positive"));
                }
            }
            CoefficientProfile::LinearRamp { r0, v0, r1, v1 } => {
                if !(r0.is_finite() && r1.is_finite() && *r0 >= 0.0 && r1 > r0) {
                    return Err(Error::InvalidProfile("ramp needs 0 <= r0 < r1"));
                }
                if !finite_pos(*v0) || !finite_pos(*v1) {
                    return Err(Error::InvalidProfile("ramp values must be positive"));
                }
            }
            CoefficientProfile::Tanh {
                center,
                width,
                left,
                right,
            } => {
                if !center.is_finite() || !finite_pos(*width) {
                    return Err(Error::InvalidProfile("tanh needs a finite center and width > 0"));
                }
                if !finite_pos(*left) || !finite_pos(*right) {
                    return Err(Error::InvalidProfile("tanh asymptotes must be positive"));
                }
            }
            CoefficientProfile::Tabulated(table) => {
                if table.is_empty() {
                    return Err(Error::InvalidProfile("tabulated profile needs samples"));
                }
                if table.iter().any(|&(r, v)| !(r.is_finite() && r >= 0.0) || !finite_pos(v)) {
                    return Err(Error::InvalidProfile(
                        "tabulated samples need r >= 0 and positive values",
                    ));
                }
                if table.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidProfile("tabulated r must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            CoefficientProfile::Constant(v) => *v,
            CoefficientProfile::Step { at, left, right } => {
                if r < *at {
                    *left
                } else {
                    *right
                }
            }
            CoefficientProfile::LinearRamp { r0, v0, r1, v1 } => {
                if r <= *r0 {
                    *v0
                } else if r >= *r1 {
                    *v1
                } else {
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                }
            }
            CoefficientProfile::Tanh {
                center,
                width,
                left,
                right,
            } => left + (right - left) * 0.5 * (1.0 + math::tanh((r - center) / width)),
            CoefficientProfile::Tabulated(table) => interpolate(table, r),
        }
    }

    /// Limit from the left; differs from [`eval`](Self::eval) only at a step.
    pub fn eval_left(&self, r: f64) -> f64 {
        match self {
            CoefficientProfile::Step { at, left, right } => {
                if r <= *at {
                    *left
                } else {
                    *right
                }
            }
            _ => self.eval(r),
        }
    }

    /// Limit as r → ∞.
    pub fn tail(&self) -> f64 {
        match self {
            CoefficientProfile::Constant(v) => *v,
            CoefficientProfile::Step { right, .. } => *right,
            CoefficientProfile::LinearRamp { v1, .. } => *v1,
            CoefficientProfile::Tanh { right, .. } => *right,
            CoefficientProfile::Tabulated(table) => table[table.len() - 1].1,
        }
    }

    /// Exact (min, max) of the profile over r ≥ 0.
    pub fn range(&self) -> (f64, f64) {
        let pair = |a: f64, b: f64| (a.min(b), a.max(b));
        match self {
            CoefficientProfile::Constant(v) => (*v, *v),
            CoefficientProfile::Step { left, right, .. } => pair(*left, *right),
            CoefficientProfile::LinearRamp { v0, v1, .. } => pair(*v0, *v1),
            // At r = 0 the tanh has not reached `left`; the value there is
            // the true extreme on that side.
            CoefficientProfile::Tanh { right, .. } => pair(self.eval(0.0), *right),
            CoefficientProfile::Tabulated(table) => table.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)),
            ),
        }
    }

    /// Points where the profile changes character (kinks, jumps, centers).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CoefficientProfile::Constant(_) => Vec::new(),
            CoefficientProfile::Step { at, .. } => alloc::vec![*at],
            CoefficientProfile::LinearRamp { r0, r1, .. } => alloc::vec![*r0, *r1],
            CoefficientProfile::Tanh { center, .. } => alloc::vec![center.max(0.0)],
            CoefficientProfile::Tabulated(table) => table.iter().map(|&(r, _)| r).collect(),
        }
    }

    /// Radius beyond which the profile equals its tail to double precision.
    pub fn settle_radius(&self) -> f64 {
        match self {
            // tanh reaches 1 - 2^-53 at about 18.7 widths
            CoefficientProfile::Tanh { center, width, .. } => (center + 20.0 * width).max(0.0),
            _ => self.breakpoints().into_iter().fold(0.0, f64::max),
        }
    }
}

fn interpolate(table: &[(f64, f64)], r: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if r <= first.0 {
        return first.1;
    }
    if r >= last.0 {
        return last.1;
    }
    // partition_point gives the first sample with r_k > r
    let k = table.partition_point(|&(rk, _)| rk <= r);
    let (r0, v0) = table[k - 1];
    let (r1, v1) = table[k];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

/// Limits of b − d and β at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLimits {
    pub alpha: f64,
    pub beta_inf: f64,
    pub satisfies_h: bool,
}

/// Sign structure of b − d on [0, R] and the volume averages of b and d.
#[derive(Debug, Clone, PartialEq)]
pub struct HabitatReport {
    pub radius: f64,
    pub favorable_intervals: Vec<(f64, f64)>,
    pub unfavorable_intervals: Vec<(f64, f64)>,
    pub average_birth: f64,
    pub average_death: f64,
}

impl HabitatReport {
    /// Ball is favorable when mean birth exceeds mean death.
    pub fn is_favorable(&self) -> bool {
        self.average_birth > self.average_death
    }

    pub fn has_favorable_site(&self) -> bool {
        !self.favorable_intervals.is_empty()
    }

    /// Total length of the set where b = d.
    pub fn neutral_length(&self) -> f64 {
        let len = |v: &[(f64, f64)]| v.iter().map(|(a, b)| b - a).sum::<f64>();
        self.radius - len(&self.favorable_intervals) - len(&self.unfavorable_intervals)
    }
}

/// Birth, death and crowding profiles in dimension `n`, bounded in `[b1, b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Habitat {
    b: CoefficientProfile,
    d: CoefficientProfile,
    beta: CoefficientProfile,
    n: usize,
    b1: f64,
    b2: f64,
}

impl Habitat {
    pub fn new(
        b: CoefficientProfile,
        d: CoefficientProfile,
        beta: CoefficientProfile,
        n: usize,
        b1: f64,
        b2: f64,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("dimension n must be at least 1"));
        }
        if !(b1.is_finite() && b2.is_finite() && b1 > 0.0 && b1 <= b2) {
            return Err(Error::InvalidParameter("bounds need 0 < b1 <= b2"));
        }
        for p in [&b, &d, &beta] {
            p.validate()?;
        }
        let habitat = Habitat {
            b,
            d,
            beta,
            n,
            b1,
            b2,
        };
        habitat.check_bounds(habitat.validation_extent())?;
        Ok(habitat)
    }

    /// Homogeneous habitat with the band set to the coefficient range.
    pub fn constant(b: f64, d: f64, beta: f64, n: usize) -> Result<Self> {
        let lo = b.min(d).min(beta);
        let hi = b.max(d).max(beta);
        Habitat::new(
            CoefficientProfile::Constant(b),
            CoefficientProfile::Constant(d),
            CoefficientProfile::Constant(beta),
            n,
            lo,
            hi,
        )
    }

    pub fn birth(&self) -> &CoefficientProfile {
        &self.b
    }

    pub fn death(&self) -> &CoefficientProfile {
        &self.d
    }

    pub fn crowding(&self) -> &CoefficientProfile {
        &self.beta
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }

    #[inline]
    pub fn b(&self, r: f64) -> f64 {
        self.b.eval(r)
    }

    #[inline]
    pub fn d(&self, r: f64) -> f64 {
        self.d.eval(r)
    }

    #[inline]
    pub fn beta(&self, r: f64) -> f64 {
        self.beta.eval(r)
    }

    /// Local growth rate b(r) − d(r).
    #[inline]
    pub fn growth(&self, r: f64) -> f64 {
        self.b.eval(r) - self.d.eval(r)
    }

    fn profiles(&self) -> [&CoefficientProfile; 3] {
        [&self.b, &self.d, &self.beta]
    }

    /// Radius past which all three profiles sit at their tails.
    pub fn settle_radius(&self) -> f64 {
        self.profiles()
            .iter()
            .map(|p| p.settle_radius())
            .fold(0.0, f64::max)
    }

    fn validation_extent(&self) -> f64 {
        100.0 * self.settle_radius().max(1.0)
    }

    fn sample_points(&self, extent: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..=VALIDATION_MESH)
            .map(|i| extent * i as f64 / VALIDATION_MESH as f64)
            .collect();
        for p in self.profiles() {
            pts.extend(p.breakpoints());
        }
        pts
    }

    /// Checks `b1 <= b, d, β <= b2` on a validation mesh over `[0, extent]`
    /// plus all breakpoints, and on the exact profile ranges.
    pub fn check_bounds(&self, extent: f64) -> Result<()> {
        let tol = 1e-12;
        for p in self.profiles() {
            let (lo, hi) = p.range();
            if lo < self.b1 - tol || hi > self.b2 + tol {
                let value = if lo < self.b1 - tol { lo } else { hi };
                return Err(Error::OutOfBounds { r: f64::NAN, value });
            }
            for r in self.sample_points(extent) {
                for value in [p.eval(r), p.eval_left(r)] {
                    if value < self.b1 - tol || value > self.b2 + tol {
                        return Err(Error::OutOfBounds { r, value });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn tail_limits(&self) -> TailLimits {
        let alpha = self.b.tail() - self.d.tail();
        TailLimits {
            alpha,
            beta_inf: self.beta.tail(),
            satisfies_h: alpha > 0.0,
        }
    }

    /// sup over r ≥ 0 of b − d, sampled on the validation mesh.
    pub fn sup_growth(&self) -> f64 {
        let extent = 2.0 * self.settle_radius().max(1.0);
        self.sample_points(extent)
            .into_iter()
            .flat_map(|r| [self.growth(r), self.b.eval_left(r) - self.d.eval_left(r)])
            .fold(self.tail_limits().alpha, f64::max)
    }

    /// inf over r ≥ 0 of β (exact for every supported kind).
    pub fn inf_crowding(&self) -> f64 {
        self.beta.range().0
    }

    /// sup over r ≥ 0 of b / d, sampled like [`sup_growth`](Self::sup_growth).
    pub fn sup_birth_death_ratio(&self, radius: f64) -> f64 {
        let mut pts = self.sample_points(radius);
        pts.retain(|&r| r <= radius);
        pts.into_iter()
            .map(|r| self.b(r) / self.d(r))
            .fold(0.0, f64::max)
    }

    /// Favorable / unfavorable intervals of b − d on [0, R] and the
    /// r^{n−1}-weighted averages of b and d over B_R.
    pub fn classify(&self, radius: f64, mesh: usize) -> Result<HabitatReport> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive"));
        }
        if mesh < 16 {
            return Err(Error::InvalidParameter("classification mesh must be >= 16"));
        }
        let sign = |r: f64| sign_of(self.growth(r));
        let nodes: Vec<f64> = (0..=mesh).map(|i| radius * i as f64 / mesh as f64).collect();

        // Runs of constant sign, split at bisected crossings.
        let mut segments: Vec<(f64, f64, i8)> = Vec::new();
        let mut start = 0.0;
        let mut current = sign(0.0);
        for w in nodes.windows(2) {
            let next = sign(w[1]);
            if next != current {
                let (mut lo, mut hi) = (w[0], w[1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if sign(mid) == current {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                segments.push((start, hi, current));
                start = hi;
                current = next;
            }
        }
        segments.push((start, radius, current));

        let mut favorable = Vec::new();
        let mut unfavorable = Vec::new();
        for (a, b, s) in segments {
            if b <= a {
                continue;
            }
            match s {
                1 => favorable.push((a, b)),
                -1 => unfavorable.push((a, b)),
                _ => {}
            }
        }

        let volume = self.weighted_integral(radius, mesh, |_| 1.0, |_| 1.0);
        let birth = self.weighted_integral(radius, mesh, |r| self.b.eval(r), |r| self.b.eval_left(r));
        let death = self.weighted_integral(radius, mesh, |r| self.d.eval(r), |r| self.d.eval_left(r));
        Ok(HabitatReport {
            radius,
            favorable_intervals: favorable,
            unfavorable_intervals: unfavorable,
            average_birth: birth / volume,
            average_death: death / volume,
        })
    }

    /// Composite trapezoid of f(r) r^{n−1} over [0, R], split at profile
    /// breakpoints so jumps are integrated exactly.
    fn weighted_integral(
        &self,
        radius: f64,
        mesh: usize,
        f: impl Fn(f64) -> f64,
        f_left: impl Fn(f64) -> f64,
    ) -> f64 {
        let mut cuts: Vec<f64> = self
            .profiles()
            .iter()
            .flat_map(|p| p.breakpoints())
            .filter(|&r| r > 0.0 && r < radius)
            .collect();
        cuts.push(0.0);
        cuts.push(radius);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let weight = |r: f64| math::powi(r, self.n - 1);
        let per_piece = mesh.max(64);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let step = (b - a) / per_piece as f64;
            let mut piece = 0.5 * (f(a) * weight(a) + f_left(b) * weight(b));
            for i in 1..per_piece {
                let r = a + step * i as f64;
                piece += f(r) * weight(r);
            }
            total += piece * step;
        }
        total
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn one() -> CoefficientProfile {
        CoefficientProfile::Constant(1.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(CoefficientProfile::Constant(2.0).eval(5.0), 2.0);
        let tab = CoefficientProfile::Tabulated(vec![(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(tab.eval(1.0), 2.0);
        assert_eq!(tab.eval(7.0), 3.0);
        let t = CoefficientProfile::Tanh {
            center: 10.0,
            width: 1.0,
            left: 2.0,
            right: 1.0,
        };
        assert!((t.eval(10.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn malformed_profiles_rejected() {
        assert!(CoefficientProfile::Tabulated(vec![(0.0, 1.0), (0.0, 2.0)])
            .validate()
            .is_err());
        assert!(CoefficientProfile::Constant(-1.0).validate().is_err());
        assert!(CoefficientProfile::LinearRamp {
            r0: 2.0,
            v0: 1.0,
            r1: 1.0,
            v1: 2.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn bounds_are_enforced() {
        let err = Habitat::new(CoefficientProfile::Constant(3.0), one(), one(), 1, 0.5, 2.0);
        assert!(matches!(err, Err(Error::OutOfBounds { .. })));
        assert!(Habitat::new(one(), one(), one(), 0, 0.5, 2.0).is_err());
    }

    #[test]
    fn tail_limit_examples() {
        let t = Habitat::constant(2.0, 1.0, 1.0, 1).unwrap().tail_limits();
        assert_eq!((t.alpha, t.beta_inf, t.satisfies_h), (1.0, 1.0, true));

        let b = CoefficientProfile::Tanh {
            center: 5.0,
            width: 1.0,
            left: 2.0,
            right: 1.5,
        };
        let h = Habitat::new(b, one(), one(), 2, 1.0, 2.0).unwrap();
        assert_eq!(h.tail_limits().alpha, 0.5);

        let t = Habitat::constant(1.0, 2.0, 1.0, 1).unwrap().tail_limits();
        assert_eq!(t.alpha, -1.0);
        assert!(!t.satisfies_h);
    }

    #[test]
    fn classify_constant() {
        let h = Habitat::constant(2.0, 1.0, 1.0, 3).unwrap();
        let rep = h.classify(1.0, 16).unwrap();
        assert_eq!(rep.favorable_intervals, vec![(0.0, 1.0)]);
        assert!(rep.unfavorable_intervals.is_empty());
        assert!((rep.average_birth - rep.average_death - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_step() {
        let b = CoefficientProfile::Step {
            at: 1.0,
            left: 2.0,
            right: 0.5,
        };
        let h = Habitat::new(b, one(), one(), 1, 0.5, 2.0).unwrap();
        let rep = h.classify(2.0, 16).unwrap();
        assert_eq!(rep.favorable_intervals.len(), 1);
        assert_eq!(rep.unfavorable_intervals.len(), 1);
        let (a, c) = rep.favorable_intervals[0];
        assert_eq!(a, 0.0);
        assert!((c - 1.0).abs() < 1e-12);
        let (a, c) = rep.unfavorable_intervals[0];
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(c, 2.0);
        // (2·1 + 0.5·1)/2 = 1.25 against d = 1
        assert!((rep.average_birth - 1.25).abs() < 1e-12);
        assert!((rep.average_death - 1.0).abs() < 1e-12);
        assert!(rep.is_favorable());
    }

    #[test]
    fn classify_neutral_habitat() {
        let h = Habitat::constant(1.0, 1.0, 1.0, 1).unwrap();
        let rep = h.classify(3.0, 32).unwrap();
        assert!(!rep.has_favorable_site());
        assert!((rep.neutral_length() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_average_uses_volume_element() {
        // b = 1 + r on [0, 1], n = 2: ∫ (1 + r) r dr / ∫ r dr = (5/6) / (1/2)
        let b = CoefficientProfile::LinearRamp {
            r0: 0.0,
            v0: 1.0,
            r1: 1.0,
            v1: 2.0,
        };
        let h = Habitat::new(b, one(), one(), 2, 1.0, 2.0).unwrap();
        let rep = h.classify(1.0, 256).unwrap();
        assert!((rep.average_birth - 5.0 / 3.0).abs() < 1e-5);
    }

    fn arb_profile() -> impl Strategy<Value = CoefficientProfile> {
        prop_oneof![
            (0.5f64..2.0).prop_map(CoefficientProfile::Constant),
            (0.1f64..5.0, 0.5f64..2.0, 0.5f64..2.0)
                .prop_map(|(r0, v0, v1)| CoefficientProfile::LinearRamp { r0, v0, r1: r0 + 1.0, v1 }),
            (0.0f64..5.0, 0.1f64..2.0, 0.5f64..2.0, 0.5f64..2.0).prop_map(
                |(center, width, left, right)| CoefficientProfile::Tanh {
                    center,
                    width,
                    left,
                    right
                }
            ),
            proptest::collection::vec(0.5f64..2.0, 2..6).prop_map(|vals| {
                CoefficientProfile::Tabulated(
                    vals.into_iter().enumerate().map(|(i, v)| (i as f64 * 0.7, v)).collect(),
                )
            }),
        ]
    }

    proptest! {
        #[test]
        fn profiles_stay_in_band(p in arb_profile(), r in 0.0f64..50.0) {
            let v = p.eval(r);
            prop_assert!(v >= 0.5 - 1e-12 && v <= 2.0 + 1e-12);
            let (lo, hi) = p.range();
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }

        #[test]
        fn continuous_kinds_have_no_jumps(p in arb_profile()) {
            for r in p.breakpoints().into_iter().chain([0.0, 1.0, 3.3]) {
                let eps = 1e-8;
                prop_assert!((p.eval(r + eps) - p.eval(r)).abs() < 1e-6);
            }
        }

        #[test]
        fn intervals_tile_the_ball(
            left in 0.5f64..2.0, right in 0.5f64..2.0, at in 0.2f64..3.0, radius in 0.5f64..4.0,
        ) {
            let b = CoefficientProfile::Step { at, left, right };
            let d = CoefficientProfile::Tanh { center: 1.5, width: 0.5, left: 1.2, right: 0.9 };
            let h = Habitat::new(b, d, one(), 1, 0.5, 2.0).unwrap();
            let rep = h.classify(radius, 64).unwrap();
            let mut all: Vec<(f64, f64)> = rep.favorable_intervals.clone();
            all.extend(rep.unfavorable_intervals.iter().copied());
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in all.windows(2) {
                prop_assert!(w[0].1 <= w[1].0 + 1e-12);
            }
            prop_assert!(rep.neutral_length().abs() < radius / 64.0);
        }

        #[test]
        fn constant_tail_is_exact(v in 0.5f64..2.0) {
            prop_assert_eq!(CoefficientProfile::Constant(v).tail(), v);
        }
    }
}
