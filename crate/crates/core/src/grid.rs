//! Uniform radial grids, the finite-volume radial Laplacian and tridiagonal
//! linear algebra shared by the eigen, steady-state and time solvers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Uniform nodes `r_i = i R / N`, `i = 0..=N`, on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    cells: usize,
}

impl RadialGrid {
    pub const MIN_CELLS: usize = 32;

    pub fn new(radius: f64, cells: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter("grid radius must be positive"));
        }
        if cells < Self::MIN_CELLS {
            return Err(Error::InvalidParameter("grid needs at least 32 cells"));
        }
        Ok(RadialGrid { radius, cells })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.radius * i as f64 / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }
}

/// Conservative discretization of `Δψ = ψ'' + (n−1)/r ψ'` on a uniform grid.
///
/// Node `i` owns the shell `[r_i − h/2, r_i + h/2] ∩ [0, R]`; `volumes[i]`
/// is its exact r^{n−1} measure and `conductance[i]` couples nodes `i` and
/// `i+1` through the face `r_i + h/2`. With `S` the resulting stiffness
/// matrix, `−Δ ≈ V⁻¹ S`. At the axis the stencil reduces to
/// `Δψ(0) ≈ 2n (ψ_1 − ψ_0) / h²`, i.e. n ψ''(0).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLaplacian {
    pub spacing: f64,
    pub volumes: Vec<f64>,
    pub conductance: Vec<f64>,
}

impl RadialLaplacian {
    /// Operator on `cells + 1` nodes over `[0, radius]` in dimension `n`.
    pub fn new(radius: f64, cells: usize, n: usize) -> Self {
        let h = radius / cells as f64;
        let nf = n as f64;
        let shell = |a: f64, b: f64| (math::powi(b, n) - math::powi(a, n)) / nf;
        let mut volumes = Vec::with_capacity(cells + 1);
        volumes.push(shell(0.0, 0.5 * h));
        for i in 1..cells {
            let r = h * i as f64;
            volumes.push(shell(r - 0.5 * h, r + 0.5 * h));
        }
        volumes.push(shell(radius - 0.5 * h, radius));
        let conductance = (0..cells)
            .map(|i| math::powi(h * (i as f64 + 0.5), n - 1) / h)
            .collect();
        RadialLaplacian {
            spacing: h,
            volumes,
            conductance,
        }
    }

    pub fn for_grid(grid: &RadialGrid, n: usize) -> Self {
        Self::new(grid.radius(), grid.cells(), n)
    }

    pub fn cells(&self) -> usize {
        self.conductance.len()
    }

    /// `scale · S` restricted to nodes `0..N` (Dirichlet at node N).
    pub fn stiffness_dirichlet(&self, scale: f64) -> SymTridiagonal {
        let m = self.cells();
        let c = &self.conductance;
        let diag = (0..m)
            .map(|i| scale * (c[i] + if i > 0 { c[i - 1] } else { 0.0 }))
            .collect();
        let off = (0..m - 1).map(|i| -scale * c[i]).collect();
        SymTridiagonal { diag, off }
    }

    /// `scale · S` on nodes `0..=N` with zero flux through r = R.
    pub fn stiffness_neumann(&self, scale: f64) -> SymTridiagonal {
        let m = self.cells();
        let c = &self.conductance;
        let diag = (0..=m)
            .map(|i| {
                let right = if i < m { c[i] } else { 0.0 };
                let left = if i > 0 { c[i - 1] } else { 0.0 };
                scale * (right + left)
            })
            .collect();
        let off = (0..m).map(|i| -scale * c[i]).collect();
        SymTridiagonal { diag, off }
    }

    /// Discrete `Δψ` at nodes `0..N` for a full node vector with ψ_N given.
    pub fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let m = self.cells();
        let c = &self.conductance;
        for i in 0..m {
            let mut flux = c[i] * (psi[i + 1] - psi[i]);
            if i > 0 {
                flux -= c[i - 1] * (psi[i] - psi[i - 1]);
            }
            out[i] = flux / self.volumes[i];
        }
    }
}

/// Symmetric tridiagonal matrix: `diag` has length m, `off` length m − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Adds a diagonal matrix.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let m = self.len();
        for i in 0..m {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < self.len() {
                acc += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        acc
    }

    /// Solves `(self − shift·W) x = rhs` for diagonal `W`.
    pub fn solve_shifted(&self, shift: f64, weight: &[f64], rhs: &[f64]) -> Vec<f64> {
        let m = self.len();
        let diag: Vec<f64> = (0..m).map(|i| self.diag[i] - shift * weight[i]).collect();
        thomas(&self.off, &diag, &self.off, rhs)
    }

    /// Number of eigenvalues of `W⁻¹ self` strictly below `x` (Sturm count
    /// via the LDLᵀ inertia of `self − x W`).
    pub fn count_below(&self, x: f64, weight: &[f64]) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / q } else { 0.0 };
            q = self.diag[i] - x * weight[i] - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() * weight[i]).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval for the eigenvalues of `W⁻¹ self`.
    pub fn gershgorin(&self, weight: &[f64]) -> (f64, f64) {
        let m = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.off[i - 1].abs() / math::sqrt(weight[i] * weight[i - 1]);
            }
            if i + 1 < m {
                radius += self.off[i].abs() / math::sqrt(weight[i] * weight[i + 1]);
            }
            let center = self.diag[i] / weight[i];
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }
}

/// Thomas algorithm for `sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut denom = diag[0];
    if m > 1 {
        c[0] = sup[0] / denom;
    }
    x[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - sub[i - 1] * c[i - 1];
        if i + 1 < m {
            c[i] = sup[i] / denom;
        }
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..m.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Smallest eigenpair of the symmetric-definite pencil `T ψ = μ W ψ` with
/// positive diagonal `W`.
///
/// Sturm bisection isolates μ₁ from below; the bracket endpoint then serves
/// as the shift for inverse iteration, which polishes the eigenvalue through
/// the Rayleigh quotient until successive estimates differ by < `tol`.
pub(crate) fn smallest_eigenpair(
    t: &SymTridiagonal,
    weight: &[f64],
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let (mut lo, mut hi) = t.gershgorin(weight);
    let span = (hi - lo).abs().max(1.0);
    lo -= 1e-3 * span;
    hi += 1e-3 * span;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t.count_below(mid, weight) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi.abs().max(1.0) {
            break;
        }
    }
    // Back the shift off slightly so T − σW stays safely definite.
    let shift = lo - 1e-9 * lo.abs().max(1.0);

    let mut x = start.to_vec();
    let mut rhs = vec![0.0; x.len()];
    let mut tx = vec![0.0; x.len()];
    let mut previous = f64::INFINITY;
    for it in 1..=max_iter {
        for i in 0..x.len() {
            rhs[i] = weight[i] * x[i];
        }
        let mut y = t.solve_shifted(shift, weight, &rhs);
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonConvergence { iterations: it });
        }
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for v in &mut y {
            *v *= sign / scale;
        }
        t.mul_vec(&y, &mut tx);
        let num: f64 = y.iter().zip(&tx).map(|(a, b)| a * b).sum();
        let den: f64 = y.iter().zip(weight).map(|(a, w)| a * a * w).sum();
        let mu = num / den;
        x = y;
        if (mu - previous).abs() < tol * mu.abs().max(1.0) {
            return Ok((mu, x));
        }
        previous = mu;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
    })
}
