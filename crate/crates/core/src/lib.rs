//! Numerics for the radially symmetric diffusive-logistic model with a
//! Stefan-type free boundary:
//!
//! ```text
//! u_t - D Δu = u (b(r) - d(r) - β(r) u),   0 < r < h(t)
//! u_r(0, t) = 0,  u(h(t), t) = 0,  h'(t) = -μ u_r(h(t), t)
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation; file formats and the command line live in `frontier-sim`.
//!
//! * [`habitat`]: coefficient profiles b, d, β and their structure.
//! * [`eigen`]: principal eigenvalue, threshold value R₀ and the critical
//!   diffusion / radius.
//! * [`pde`]: front-fixed time integration and steady states.
//! * [`semiwave`]: semi-wave shooting and the asymptotic spreading speed.
//! * [`classify`]: spreading / vanishing verdicts, amplitude thresholds and
//!   parameter sweeps.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod classify;
pub mod eigen;
pub mod grid;
pub mod habitat;
pub mod ode;
pub mod pde;
pub mod semiwave;

pub use error::{Error, Result};
