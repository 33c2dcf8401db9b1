#![allow(dead_code)]

use frontier_core::habitat::{CoefficientProfile, Habitat};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn profile(rng: &mut impl Rng, lo: f64, hi: f64) -> CoefficientProfile {
    let mut v = || rng.random_range(lo..hi);
    let (a, b) = (v(), v());
    match rng.random_range(0..5) {
        0 => CoefficientProfile::Constant(a),
        1 => CoefficientProfile::Step {
            at: rng.random_range(0.2..3.0),
            left: a,
            right: b,
        },
        2 => {
            let r0 = rng.random_range(0.0..1.5);
            CoefficientProfile::LinearRamp {
                r0,
                v0: a,
                r1: r0 + rng.random_range(0.2..2.0),
                v1: b,
            }
        }
        3 => CoefficientProfile::Tanh {
            center: rng.random_range(0.5..3.0),
            width: rng.random_range(0.1..1.0),
            left: a,
            right: b,
        },
        _ => {
            let mut r = 0.0;
            let points = (0..rng.random_range(2..6))
                .map(|_| {
                    r += rng.random_range(0.2..1.0);
                    (r, rng.random_range(lo..hi))
                })
                .collect();
            CoefficientProfile::Tabulated(points)
        }
    }
}

/// Heterogeneous habitat with b ∈ [0.5, 3), d ∈ [0.5, 2), β ∈ [0.5, 2)
/// in dimension 1, 2 or 3.
pub fn random_habitat(rng: &mut impl Rng) -> Habitat {
    let b = profile(rng, 0.5, 3.0);
    let d = profile(rng, 0.5, 2.0);
    let beta = profile(rng, 0.5, 2.0);
    let n = rng.random_range(1..=3);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in [&b, &d, &beta] {
        let (a, c) = p.range();
        lo = lo.min(a);
        hi = hi.max(c);
    }
    Habitat::new(b, d, beta, n, lo, hi).unwrap()
}
