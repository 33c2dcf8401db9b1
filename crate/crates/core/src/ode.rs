//! Adaptive Dormand-Prince 5(4) integrator for small autonomous systems.

use crate::math;

/// What an observer wants after seeing an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

/// Where an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub steps: usize,
    /// True when the observer requested the stop.
    pub stopped: bool,
}

// Dormand-Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end`, calling `observer` after
/// every accepted step. The final step is clipped to land on `x_end`.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    tol: Tolerance,
    mut observer: impl FnMut(f64, &[f64; N]) -> Flow,
) -> Endpoint<N> {
    let mut x = x0;
    let mut y = y0;
    let span = x_end - x0;
    let mut h = (span.abs() * 1e-3).min(1e-2).max(1e-12) * span.signum();
    let mut k1 = f(x, &y);
    let mut steps = 0;
    while (x_end - x) * span.signum() > 0.0 {
        if (x + h - x_end) * span.signum() > 0.0 {
            h = x_end - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            x + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(x + h, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / scale) * (e / scale);
        }
        let err = math::sqrt(err / N as f64);

        if err <= 1.0 || h.abs() < 1e-14 * x.abs().max(1.0) {
            x += h;
            y = y_new;
            k1 = k7;
            steps += 1;
            if observer(x, &y) == Flow::Stop {
                return Endpoint {
                    x,
                    y,
                    steps,
                    stopped: true,
                };
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * math::pow(err, -0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Endpoint {
        x,
        y,
        steps,
        stopped: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_round_trip() {
        let end = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * core::f64::consts::PI,
            Tolerance::default(),
            |_, _| Flow::Continue,
        );
        assert!((end.y[0] - 1.0).abs() < 1e-9);
        assert!(end.y[1].abs() < 1e-9);
        assert!(!end.stopped);
    }

    #[test]
    fn observer_can_stop() {
        let end = integrate(
            |_, _y: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            10.0,
            Tolerance::default(),
            |_, y| if y[0] > 1.0 { Flow::Stop } else { Flow::Continue },
        );
        assert!(end.stopped);
        assert!(end.x > 1.0 && end.x < 10.0);
    }

    #[test]
    fn exponential_growth_accuracy() {
        let end = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            3.0,
            Tolerance::default(),
            |_, _| Flow::Continue,
        );
        assert!((end.y[0] / libm::exp(3.0) - 1.0).abs() < 1e-9);
    }
}
