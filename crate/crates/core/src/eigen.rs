//! Principal eigenvalue λ*(D, B_R), threshold value R₀(D, B_R) and the
//! critical diffusion D*(R) and radius h*(D).
//!
//! All problems are discretized with [`RadialLaplacian`], which makes every
//! operator a symmetric tridiagonal pencil in the r^{n−1}-weighted inner
//! product. This keeps the discrete sign relation between `1 − R₀` and `λ*`
//! exact: both are decided by the inertia of `D S + V (d − b)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{smallest_eigenpair, RadialGrid, RadialLaplacian, SymTridiagonal};
use crate::habitat::Habitat;

/// Convergence threshold for eigenvalue changes between iterations.
pub const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 500;

/// Default relative tolerance for the D* / h* bisections.
pub const THRESHOLD_TOL: f64 = 1e-6;
const THRESHOLD_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Smallest eigenvalue of −DΔ + (d − b) with Dirichlet data at r = R.
    pub lambda_star: f64,
    /// Threshold value R₀ᴰⁱ(D, B_R).
    pub r0: f64,
    /// Principal eigenfunction of the λ* problem on all grid nodes,
    /// normalized to max 1 (so `psi[N] = 0`).
    pub psi: Vec<f64>,
    /// Principal Dirichlet eigenvalue λ(R) of −Δ.
    pub lambda_dirichlet: f64,
}

/// How a threshold search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStatus {
    Finite,
    /// No site with b > d where it matters; D* = 0 or h* = ∞.
    NoFavorableSite,
    /// R₀ stayed below 1 up to the radius cap; h* = ∞.
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub value: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub status: ThresholdStatus,
}

impl ThresholdResult {
    pub fn is_finite(&self) -> bool {
        self.status == ThresholdStatus::Finite
    }
}

/// Grid resolution for problems posed on varying radii: `nodes` cells on
/// whatever ball is being solved, with `reference_radius` (typically h₀)
/// seeding brackets and the search cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub cells: usize,
    pub reference_radius: f64,
}

impl GridPolicy {
    pub fn new(cells: usize, reference_radius: f64) -> Self {
        GridPolicy {
            cells,
            reference_radius,
        }
    }

    pub fn grid(&self, radius: f64) -> Result<RadialGrid> {
        RadialGrid::new(radius, self.cells)
    }
}

fn check_positive(x: f64, what: &'static str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what))
    }
}

fn start_vector(grid: &RadialGrid) -> Vec<f64> {
    let r = grid.radius();
    (0..grid.cells())
        .map(|i| {
            let x = grid.node(i) / r;
            1.0 - x * x
        })
        .collect()
}

fn sample(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.cells()).map(|i| f(grid.node(i))).collect()
}

fn with_boundary(mut psi: Vec<f64>) -> Vec<f64> {
    let max = psi.iter().fold(0.0f64, |m, v| m.max(*v));
    for v in &mut psi {
        *v /= max;
    }
    psi.push(0.0);
    psi
}

/// Principal eigenvalue of `−DΔ_r ψ + (d − b) ψ = λ ψ`, ψ'(0) = 0, ψ(R) = 0.
pub fn principal_eigenvalue(
    habitat: &Habitat,
    diffusion: f64,
    grid: &RadialGrid,
) -> Result<(f64, Vec<f64>)> {
    check_positive(diffusion, "D must be positive")?;
    let op = RadialLaplacian::for_grid(grid, habitat.dimension());
    let mut t = op.stiffness_dirichlet(diffusion);
    let v = &op.volumes[..grid.cells()];
    let potential: Vec<f64> = sample(grid, |r| -habitat.growth(r))
        .into_iter()
        .zip(v)
        .map(|(c, w)| c * w)
        .collect();
    t.add_diagonal(&potential);
    let (lambda, psi) = smallest_eigenpair(&t, v, &start_vector(grid), EIGEN_TOL, EIGEN_MAX_ITER)?;
    Ok((lambda, with_boundary(psi)))
}

/// Principal eigenvalue λ(R) of −Δ on B_R with Dirichlet data.
pub fn dirichlet_eigenvalue(n: usize, grid: &RadialGrid) -> Result<f64> {
    let op = RadialLaplacian::for_grid(grid, n);
    let t = op.stiffness_dirichlet(1.0);
    let (lambda, _) = smallest_eigenpair(
        &t,
        &op.volumes[..grid.cells()],
        &start_vector(grid),
        EIGEN_TOL,
        EIGEN_MAX_ITER,
    )?;
    Ok(lambda)
}

// A = D S + V d,  B = V b.  R₀ = 1 / (smallest eigenvalue of A ψ = μ B ψ).
fn r0_pencil(habitat: &Habitat, diffusion: f64, grid: &RadialGrid) -> (SymTridiagonal, Vec<f64>) {
    let op = RadialLaplacian::for_grid(grid, habitat.dimension());
    let mut a = op.stiffness_dirichlet(diffusion);
    let v = &op.volumes[..grid.cells()];
    let death: Vec<f64> = sample(grid, |r| habitat.d(r))
        .into_iter()
        .zip(v)
        .map(|(d, w)| d * w)
        .collect();
    a.add_diagonal(&death);
    let birth = sample(grid, |r| habitat.b(r))
        .into_iter()
        .zip(v)
        .map(|(b, w)| b * w)
        .collect();
    (a, birth)
}

/// Threshold value: the supremum over ψ of ∫ b ψ² / ∫ (D|∇ψ|² + d ψ²) on
/// B_R, realized as the largest ρ with `B ψ = ρ A ψ`.
pub fn compute_r0(habitat: &Habitat, diffusion: f64, grid: &RadialGrid) -> Result<f64> {
    check_positive(diffusion, "D must be positive")?;
    let (a, birth) = r0_pencil(habitat, diffusion, grid);
    let (mu, _) = smallest_eigenpair(&a, &birth, &start_vector(grid), EIGEN_TOL, EIGEN_MAX_ITER)?;
    Ok(1.0 / mu)
}

/// λ*, R₀, ψ and λ(R) on one grid.
pub fn solve(habitat: &Habitat, diffusion: f64, grid: &RadialGrid) -> Result<EigenResult> {
    let (lambda_star, psi) = principal_eigenvalue(habitat, diffusion, grid)?;
    Ok(EigenResult {
        lambda_star,
        r0: compute_r0(habitat, diffusion, grid)?,
        psi,
        lambda_dirichlet: dirichlet_eigenvalue(habitat.dimension(), grid)?,
    })
}

/// R₀ᶠʳ(D, t): the threshold value on the current front ball B_{h(t)}.
pub fn r0_front(
    habitat: &Habitat,
    diffusion: f64,
    front_radius: f64,
    policy: &GridPolicy,
) -> Result<f64> {
    check_positive(front_radius, "front radius must be positive")?;
    compute_r0(habitat, diffusion, &policy.grid(front_radius)?)
}

/// Bisection for a monotone `f` crossing 1 inside `[lo, hi]`, where
/// `increasing` says whether f grows with its argument.
fn bisect_unit_crossing(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    increasing: bool,
    tol: f64,
) -> Result<ThresholdResult> {
    for _ in 0..THRESHOLD_MAX_ITER {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let above = f(mid)? >= 1.0;
        // keep f(lo) on the "decreasing-argument" side of the crossing
        if above != increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    let residual = (f(value)? - 1.0).abs();
    Ok(ThresholdResult {
        value,
        bracket: (lo, hi),
        residual,
        status: ThresholdStatus::Finite,
    })
}

/// Critical diffusion D*(R): R₀(D, B_R) ≥ 1 for D ≤ D* and < 1 above.
pub fn find_dstar(
    habitat: &Habitat,
    radius: f64,
    grid: &RadialGrid,
    tol: f64,
) -> Result<ThresholdResult> {
    check_positive(radius, "radius must be positive")?;
    check_positive(tol, "tolerance must be positive")?;
    let grid = RadialGrid::new(radius, grid.cells())?;
    let report = habitat.classify(radius, 4096)?;
    if !report.has_favorable_site() {
        return Ok(ThresholdResult {
            value: 0.0,
            bracket: (0.0, 0.0),
            residual: f64::NAN,
            status: ThresholdStatus::NoFavorableSite,
        });
    }
    let r0 = |d: f64| compute_r0(habitat, d, &grid);
    let mut lo = 1e-6;
    let mut hi = 1.0;
    let mut guard = 0;
    while r0(lo)? < 1.0 {
        hi = lo;
        lo *= 0.1;
        guard += 1;
        if guard > 20 {
            // favorable set below grid resolution; R₀ never reaches 1
            return Ok(ThresholdResult {
                value: 0.0,
                bracket: (0.0, hi),
                residual: (r0(hi)? - 1.0).abs(),
                status: ThresholdStatus::NoFavorableSite,
            });
        }
    }
    while r0(hi)? >= 1.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 400 {
            return Err(Error::BracketFailure("R0 stays above 1 for every D"));
        }
    }
    bisect_unit_crossing(r0, lo, hi, false, tol)
}

/// Critical radius h*(D): R₀(D, B_R) ≥ 1 exactly when R ≥ h*.
pub fn find_hstar(
    habitat: &Habitat,
    diffusion: f64,
    policy: &GridPolicy,
    tol: f64,
) -> Result<ThresholdResult> {
    check_positive(diffusion, "D must be positive")?;
    check_positive(tol, "tolerance must be positive")?;
    check_positive(policy.reference_radius, "reference radius must be positive")?;
    if habitat.sup_growth() <= 0.0 {
        return Ok(ThresholdResult {
            value: f64::INFINITY,
            bracket: (0.0, f64::INFINITY),
            residual: f64::NAN,
            status: ThresholdStatus::NoFavorableSite,
        });
    }
    let r0 = |radius: f64| -> Result<f64> { r0_front(habitat, diffusion, radius, policy) };
    let reference = policy.reference_radius;
    let cap = 1e3 * reference;
    let (mut lo, mut hi);
    if r0(reference)? >= 1.0 {
        hi = reference;
        lo = 0.5 * reference;
        while r0(lo)? >= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 * reference {
                return Err(Error::BracketFailure("R0 stays above 1 as R -> 0"));
            }
        }
    } else {
        lo = reference;
        hi = 2.0 * reference;
        while r0(hi)? < 1.0 {
            lo = hi;
            hi *= 2.0;
            if lo >= cap {
                return Ok(ThresholdResult {
                    value: f64::INFINITY,
                    bracket: (lo, f64::INFINITY),
                    residual: (r0(lo)? - 1.0).abs(),
                    status: ThresholdStatus::Infinite,
                });
            }
        }
    }
    bisect_unit_crossing(r0, lo, hi, true, tol)
}

/// D* through its variational form, sup ∫ (b − d) φ² / ∫ |∇φ|² over φ with
/// ∫ (b − d) φ² > 0: the largest eigenvalue of `V (b − d) φ = κ S φ`,
/// found by shifted power iteration. Cross-checks [`find_dstar`].
pub fn dstar_variational(habitat: &Habitat, grid: &RadialGrid) -> Result<f64> {
    let op = RadialLaplacian::for_grid(grid, habitat.dimension());
    let s = op.stiffness_dirichlet(1.0);
    let m = grid.cells();
    let v = &op.volumes[..m];
    let weight: Vec<f64> = sample(grid, |r| habitat.growth(r))
        .into_iter()
        .zip(v)
        .map(|(g, w)| g * w)
        .collect();
    // Negative spectrum of S⁻¹ V g is bounded by max(g⁻) / λ₁(S, V).
    let (lambda1, _) = smallest_eigenpair(&s, v, &start_vector(grid), EIGEN_TOL, EIGEN_MAX_ITER)?;
    let worst_loss = sample(grid, |r| -habitat.growth(r))
        .into_iter()
        .fold(0.0f64, f64::max);
    let shift = worst_loss / lambda1;

    let mut x = start_vector(grid);
    let mut sx = alloc::vec![0.0; m];
    let mut previous = f64::INFINITY;
    for it in 1..=200_000 {
        let rhs: Vec<f64> = x.iter().zip(&weight).map(|(a, w)| a * w).collect();
        let mut y = s.solve_shifted(0.0, v, &rhs);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += shift * xi;
        }
        let scale = y.iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
        for t in &mut y {
            *t /= scale;
        }
        s.mul_vec(&y, &mut sx);
        let num: f64 = y.iter().zip(&weight).map(|(a, w)| a * a * w).sum();
        let den: f64 = y.iter().zip(&sx).map(|(a, b)| a * b).sum();
        let kappa = num / den;
        x = y;
        if (kappa - previous).abs() < 1e-13 * kappa.abs().max(1e-300) {
            if kappa <= 0.0 {
                return Ok(0.0);
            }
            return Ok(kappa);
        }
        previous = kappa;
        if it == 200_000 {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: 200_000,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::habitat::CoefficientProfile;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn constant(b: f64, d: f64, n: usize) -> Habitat {
        Habitat::constant(b, d, 1.0, n).unwrap()
    }

    #[test]
    fn critical_ball_has_zero_eigenvalue() {
        let h = constant(2.0, 1.0, 1);
        let grid = RadialGrid::new(PI / 2.0, 400).unwrap();
        let (lambda, psi) = principal_eigenvalue(&h, 1.0, &grid).unwrap();
        assert!(lambda.abs() < 1e-5, "{lambda}");
        assert_eq!(psi[400], 0.0);
        assert!(psi[..400].iter().all(|&p| p > 0.0));
        // discrete ψ'(0) = 0: symmetric ghost node, so ψ_1 < ψ_0 = max
        assert_eq!(psi[0], 1.0);
    }

    #[test]
    fn neutral_eigenvalues_match_closed_forms() {
        let grid = RadialGrid::new(1.0, 800).unwrap();
        let (l1, _) = principal_eigenvalue(&constant(1.0, 1.0, 1), 1.0, &grid).unwrap();
        assert!((l1 - PI * PI / 4.0).abs() < 1e-5);
        let (l3, _) = principal_eigenvalue(&constant(1.0, 1.0, 3), 1.0, &grid).unwrap();
        assert!((l3 - PI * PI).abs() < 1e-4, "{l3}");
    }

    #[test]
    fn r0_examples() {
        let h = constant(2.0, 1.0, 1);
        let g = RadialGrid::new(PI / 2.0, 400).unwrap();
        assert!((compute_r0(&h, 1.0, &g).unwrap() - 1.0).abs() < 1e-5);
        let g = RadialGrid::new(PI / 4.0, 400).unwrap();
        assert!((compute_r0(&h, 1.0, &g).unwrap() - 0.4).abs() < 1e-5);
        let g = RadialGrid::new(1.0, 200).unwrap();
        assert!(compute_r0(&h, 1e6, &g).unwrap() < 1e-3);
    }

    #[test]
    fn small_diffusion_limit_is_b_over_d() {
        let h = constant(2.0, 1.0, 2);
        let g = RadialGrid::new(1.0, 400).unwrap();
        let r0 = compute_r0(&h, 1e-6, &g).unwrap();
        assert!((r0 - 2.0).abs() < 1e-3, "{r0}");
    }

    #[test]
    fn dstar_examples() {
        let h = constant(2.0, 1.0, 1);
        let g = RadialGrid::new(PI / 2.0, 400).unwrap();
        let res = find_dstar(&h, PI / 2.0, &g, 1e-8).unwrap();
        assert!((res.value - 1.0).abs() < 1e-5, "{res:?}");
        let res = find_dstar(&h, PI / 4.0, &g, 1e-8).unwrap();
        assert!((res.value - 0.25).abs() < 1e-5, "{res:?}");

        let res = find_dstar(&constant(1.0, 2.0, 1), 1.0, &g, 1e-6).unwrap();
        assert_eq!(res.status, ThresholdStatus::NoFavorableSite);
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn dstar_variational_agrees_with_bisection() {
        let h = constant(2.0, 1.0, 1);
        let g = RadialGrid::new(1.0, 400).unwrap();
        let bis = find_dstar(&h, 1.0, &g, 1e-10).unwrap().value;
        let var = dstar_variational(&h, &g).unwrap();
        assert!((bis - var).abs() < 1e-4, "{bis} vs {var}");
    }

    #[test]
    fn dstar_variational_handles_indefinite_weight() {
        let b = CoefficientProfile::Step {
            at: 0.5,
            left: 2.0,
            right: 0.5,
        };
        let h = Habitat::new(b, CoefficientProfile::Constant(1.0), CoefficientProfile::Constant(1.0), 1, 0.5, 2.0)
            .unwrap();
        let g = RadialGrid::new(1.5, 300).unwrap();
        let bis = find_dstar(&h, 1.5, &g, 1e-10).unwrap().value;
        let var = dstar_variational(&h, &g).unwrap();
        assert!((bis - var).abs() < 1e-6 * bis.max(1.0), "{bis} vs {var}");
    }

    #[test]
    fn hstar_examples() {
        let policy = GridPolicy::new(400, 1.0);
        let res = find_hstar(&constant(2.0, 1.0, 1), 1.0, &policy, 1e-8).unwrap();
        assert!((res.value - PI / 2.0).abs() < 1e-5);
        let res = find_hstar(&constant(2.0, 1.0, 1), 4.0, &policy, 1e-8).unwrap();
        assert!((res.value - PI).abs() < 1e-5);
        let res = find_hstar(&constant(2.0, 1.0, 3), 1.0, &policy, 1e-8).unwrap();
        assert!((res.value - PI).abs() < 1e-4);
        let res = find_hstar(&constant(1.0, 2.0, 1), 1.0, &policy, 1e-8).unwrap();
        assert_eq!(res.status, ThresholdStatus::NoFavorableSite);
        assert!(res.value.is_infinite());
    }

    #[test]
    fn r0_front_examples() {
        let h = constant(2.0, 1.0, 1);
        let policy = GridPolicy::new(400, 1.0);
        let at_h0 = r0_front(&h, 1.0, 1.0, &policy).unwrap();
        let direct = compute_r0(&h, 1.0, &RadialGrid::new(1.0, 400).unwrap()).unwrap();
        assert_eq!(at_h0, direct);
        let hstar = find_hstar(&h, 1.0, &policy, 1e-10).unwrap().value;
        assert!((r0_front(&h, 1.0, hstar, &policy).unwrap() - 1.0).abs() < 1e-6);
        assert!(r0_front(&h, 1.0, 1.2, &policy).unwrap() > at_h0);
    }

    #[test]
    fn negative_diffusion_rejected() {
        let g = RadialGrid::new(1.0, 64).unwrap();
        assert!(compute_r0(&constant(2.0, 1.0, 1), -1.0, &g).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn eigenfunction_is_positive(
            left in 0.6f64..2.0, right in 0.6f64..2.0, d in 1e-2f64..5.0, radius in 0.2f64..6.0,
        ) {
            let b = CoefficientProfile::Tanh { center: 1.0, width: 0.3, left, right };
            let h = Habitat::new(b, CoefficientProfile::Constant(1.0),
                CoefficientProfile::Constant(1.0), 2, 0.5, 2.0).unwrap();
            let g = RadialGrid::new(radius, 128).unwrap();
            let (_, psi) = principal_eigenvalue(&h, d, &g).unwrap();
            prop_assert!(psi[..128].iter().all(|&p| p > 0.0));
        }
    }
}
