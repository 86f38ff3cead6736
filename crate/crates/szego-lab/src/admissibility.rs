//! The admissibility problem: find a zero-free holomorphic g with |g*|² = w.
//!
//! On T^n the construction goes through the Fourier series of u = ½ log w:
//! when its support lies in Y_n = Z_+^n ∪ (−Z_+^n) the function
//! h = û(0) + Σ_{0≠k∈Z_+^n} 2û(k) z^k has Re h = u and g = e^h. Otherwise the
//! off-orthant mass is reported and the weight is flagged as needing a
//! singular measure; that measure is not constructed.

use serde::{Deserialize, Serialize};

use crate::boundary_geometry::{integrate_real, make_sphere3_grid, make_torus_grid, BoundaryGrid, ManifoldId};
use crate::error::{LabError, Result};
use crate::numeric::{pairwise_sum, signed_freq, torus_coefficients, torus_synthesize, unravel, C64};
use crate::quotient_maps::{act, closed_form_density, density_from_jacobian, DomainId, Group, ProperMapSpec, WeightField};
use crate::szego_core::BoundaryField;

pub const HERGLOTZ_SHELLS: [f64; 3] = [0.9, 0.99, 0.999];
/// Relative off-orthant Fourier mass below which the orthant construction is used.
pub const ORTHANT_TOL: f64 = 1e-8;
/// Relative increment below which log-integral estimates count as settled.
pub const CAUCHY_TOL: f64 = 0.05;
pub const MIN_WEIGHT: f64 = 1e-300;
/// Estimates below this magnitude are round-off and count as zero.
pub const LOG_L1_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogIntegrabilityReport {
    pub levels: Vec<usize>,
    /// ∫ |log w| dσ at each level.
    pub estimates: Vec<f64>,
    pub relative_increments: Vec<f64>,
    pub verdict: Verdict,
}

fn check_positive(w: &WeightField) -> Result<()> {
    if let Some(i) = w.values().iter().position(|&v| !(v > MIN_WEIGHT)) {
        return Err(LabError::Precondition(format!("weight is not positive at node {i} ({})", w.values()[i])));
    }
    Ok(())
}

/// ∫ |log w| dσ on one grid.
pub fn log_l1(grid: &BoundaryGrid, w: &WeightField) -> Result<f64> {
    check_positive(w)?;
    let vals: Vec<f64> = w.values().iter().map(|v| v.ln().abs()).collect();
    integrate_real(grid, &vals)
}

/// Classify a refinement sequence of ∫|log w| estimates.
pub fn classify_refinement(estimates: &[f64]) -> (Vec<f64>, Verdict) {
    let incs: Vec<f64> = estimates
        .windows(2)
        .map(|p| {
            let scale = p[1].abs().max(p[0].abs());
            if scale < LOG_L1_FLOOR {
                0.0
            } else {
                (p[1] - p[0]).abs() / scale
            }
        })
        .collect();
    if incs.len() < 2 {
        return (incs, Verdict::Inconclusive);
    }
    let last = &incs[incs.len() - 2..];
    if last.iter().all(|&r| r < CAUCHY_TOL) {
        return (incs, Verdict::Finite);
    }
    let n = estimates.len();
    let d1 = estimates[n - 2] - estimates[n - 3];
    let d2 = estimates[n - 1] - estimates[n - 2];
    let verdict = if d2 > 0.0 && d1 > 0.0 && d2 >= d1 { Verdict::Divergent } else { Verdict::Inconclusive };
    (incs, verdict)
}

/// Log-integrability over a refinement sequence; `sampler(level)` builds the
/// grid and weight at that level.
pub fn log_integrability(
    levels: &[usize],
    sampler: &dyn Fn(usize) -> Result<(BoundaryGrid, WeightField)>,
) -> Result<LogIntegrabilityReport> {
    let mut estimates = Vec::with_capacity(levels.len());
    for &level in levels {
        let (grid, w) = sampler(level)?;
        estimates.push(log_l1(&grid, &w)?);
    }
    let (relative_increments, verdict) = classify_refinement(&estimates);
    Ok(LogIntegrabilityReport { levels: levels.to_vec(), estimates, relative_increments, verdict })
}

/// Log-integrability of a named density computed by the Jacobian pipeline;
/// levels are per-axis resolutions.
pub fn log_integrability_domain(domain: &DomainId, levels: &[usize]) -> Result<LogIntegrabilityReport> {
    let spec = domain.map_spec()?;
    let manifold = domain.manifold();
    log_integrability(levels, &|n| {
        let grid = match manifold {
            ManifoldId::Torus(d) => make_torus_grid(d, n)?,
            ManifoldId::Sphere3 => make_sphere3_grid(n, n, n)?,
        };
        let w = match domain {
            DomainId::Conformal1d { .. } => closed_form_density(domain, &grid)?,
            _ => density_from_jacobian(&spec, &grid)?,
        };
        Ok((grid, w))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellReport {
    pub r: f64,
    /// ‖|g_r|² − w‖₁ / ‖w‖₁.
    pub residual_l1: f64,
    /// sup |g_r|² − w| / sup w.
    pub residual_sup: f64,
    pub min_abs_g: f64,
}

/// g = e^h with h = Σ_{k ∈ Z_+^n} c_k z^k, evaluated on shells r·T^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HerglotzSolution {
    pub dim: usize,
    pub side: usize,
    offsets: Vec<f64>,
    /// Coefficients of h in DFT index layout (zero off the orthant).
    coeffs: Vec<C64>,
    pub shells: Vec<ShellReport>,
    pub boundary_residual_l1: f64,
    pub boundary_residual_sup: f64,
    /// Zero-free certificate: min |g| over all sampled shells.
    pub min_abs_g: f64,
    pub invariance_residual: f64,
}

impl HerglotzSolution {
    /// h on the shell r·T^n at the grid angles (r = 1 gives the boundary values).
    pub fn h_on_shell(&self, r: f64) -> Vec<C64> {
        let mut data = self.coeffs.clone();
        let mut idx = vec![0usize; self.dim];
        for (flat, v) in data.iter_mut().enumerate() {
            if *v == C64::new(0.0, 0.0) {
                continue;
            }
            unravel(flat, self.dim, self.side, &mut idx);
            let deg: i64 = idx.iter().map(|&q| signed_freq(q, self.side)).sum();
            *v *= r.powi(deg as i32);
        }
        torus_synthesize(&data, self.dim, self.side, &self.offsets)
    }

    pub fn g_on_shell(&self, r: f64) -> Vec<C64> {
        self.h_on_shell(r).into_iter().map(|h| h.exp()).collect()
    }

    /// g at an arbitrary point of the closed polydisc.
    pub fn eval_point(&self, z: &[C64]) -> C64 {
        let mut idx = vec![0usize; self.dim];
        let mut h = C64::new(0.0, 0.0);
        for (flat, v) in self.coeffs.iter().enumerate() {
            if *v == C64::new(0.0, 0.0) {
                continue;
            }
            unravel(flat, self.dim, self.side, &mut idx);
            let mono: C64 = idx
                .iter()
                .zip(z)
                .map(|(&q, zj)| zj.powu(signed_freq(q, self.side) as u32))
                .product();
            h += v * mono;
        }
        h.exp()
    }

    /// Boundary values g* at the grid nodes.
    pub fn boundary_values(&self) -> Vec<C64> {
        self.g_on_shell(1.0)
    }
}

fn shell_report(grid: &BoundaryGrid, g: &[C64], w: &[f64], r: f64) -> Result<ShellReport> {
    let diff: Vec<f64> = g.iter().zip(w).map(|(a, b)| (a.norm_sqr() - b).abs()).collect();
    let l1 = integrate_real(grid, &diff)? / integrate_real(grid, w)?;
    let wmax = w.iter().copied().fold(0.0, f64::max);
    let sup = diff.iter().copied().fold(0.0, f64::max) / wmax;
    Ok(ShellReport {
        r,
        residual_l1: l1,
        residual_sup: sup,
        min_abs_g: g.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min),
    })
}

fn invariance_of_values(grid: &BoundaryGrid, values: Vec<C64>, group: &Group) -> Result<f64> {
    let f = BoundaryField::from_values(values)?;
    let mut worst = 0.0f64;
    for g in group.elements() {
        let moved = act(grid, &f, g)?;
        for (a, b) in moved.iter().zip(f.values()) {
            worst = worst.max((a - b).norm() / b.norm().max(1e-300));
        }
    }
    Ok(worst)
}

fn torus_dims(grid: &BoundaryGrid) -> Result<(usize, usize)> {
    match grid.manifold() {
        ManifoldId::Torus(n) => Ok((n, grid.torus_side().unwrap_or(0))),
        ManifoldId::Sphere3 => Err(LabError::Parameter("the orthant construction needs a torus grid".into())),
    }
}

/// Build the solution from the Fourier coefficients of u = ½ log w.
fn solution_from_log(grid: &BoundaryGrid, u_hat: &[C64], w: &WeightField, group: &Group) -> Result<HerglotzSolution> {
    let (dim, side) = torus_dims(grid)?;
    let mut coeffs = vec![C64::new(0.0, 0.0); u_hat.len()];
    let mut idx = vec![0usize; dim];
    for (flat, v) in u_hat.iter().enumerate() {
        unravel(flat, dim, side, &mut idx);
        let ks: Vec<i64> = idx.iter().map(|&q| signed_freq(q, side)).collect();
        if ks.iter().all(|&k| k == 0) {
            coeffs[flat] = C64::new(v.re, 0.0);
        } else if ks.iter().all(|&k| k >= 0) {
            coeffs[flat] = v * 2.0;
        }
    }
    let mut sol = HerglotzSolution {
        dim,
        side,
        offsets: grid.torus_offsets(),
        coeffs,
        shells: Vec::new(),
        boundary_residual_l1: 0.0,
        boundary_residual_sup: 0.0,
        min_abs_g: f64::INFINITY,
        invariance_residual: 0.0,
    };
    let report = verify_admissible(&sol, grid, w, group)?;
    sol.shells = report.shells;
    sol.boundary_residual_l1 = report.boundary_residual_l1;
    sol.boundary_residual_sup = report.boundary_residual_sup;
    sol.min_abs_g = report.min_abs_g;
    sol.invariance_residual = report.invariance_residual;
    Ok(sol)
}

/// Outer function with |g*|² = w on T via the Herglotz integral of log w^{1/2}.
///
/// The integral is applied as the exact Fourier multiplier of the Herglotz
/// kernel on the trigonometric interpolant of log w^{1/2}, so shells up to
/// r = 0.999 are resolved without the N ≳ 1/(1−r) kernel-sampling constraint.
pub fn herglotz_solve(grid: &BoundaryGrid, w: &WeightField) -> Result<HerglotzSolution> {
    if grid.manifold() != ManifoldId::Torus(1) {
        return Err(LabError::Parameter("herglotz_solve works on T¹ grids".into()));
    }
    check_positive(w).map_err(|e| LabError::Admissibility(format!("log w is not integrable: {e}")))?;
    let l1 = log_l1(grid, w)?;
    if !l1.is_finite() {
        return Err(LabError::Admissibility("∫|log w| diverges".into()));
    }
    let u: Vec<C64> = w.values().iter().map(|v| C64::new(0.5 * v.ln(), 0.0)).collect();
    let side = grid.torus_side().unwrap_or(0);
    let u_hat = torus_coefficients(&u, 1, side, &grid.torus_offsets());
    solution_from_log(grid, &u_hat, w, &Group::trivial(1))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierSupport {
    /// Σ_k |û(k)|² for u = ½ log w.
    pub total_mass: f64,
    /// Σ_{k ∉ Y_n} |û(k)|².
    pub outside_mass: f64,
    pub relative_outside: f64,
    pub needs_singular_measure: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// ∫ |log w| dσ on the working grid.
    pub log_l1: f64,
    pub log_integrability: Option<LogIntegrabilityReport>,
    pub fourier_support: FourierSupport,
    pub herglotz: Option<HerglotzSolution>,
}

/// Orthant construction on T^n with singular-measure diagnostics.
pub fn fourier_construct_polydisc(grid: &BoundaryGrid, w: &WeightField, group: &Group) -> Result<AdmissibilityReport> {
    let (dim, side) = torus_dims(grid)?;
    let log_l1 = log_l1(grid, w)?;
    let u: Vec<C64> = w.values().iter().map(|v| C64::new(0.5 * v.ln(), 0.0)).collect();
    let u_hat = torus_coefficients(&u, dim, side, &grid.torus_offsets());
    let mut total = Vec::with_capacity(u_hat.len());
    let mut outside = Vec::new();
    let mut idx = vec![0usize; dim];
    for (flat, v) in u_hat.iter().enumerate() {
        unravel(flat, dim, side, &mut idx);
        let ks: Vec<i64> = idx.iter().map(|&q| signed_freq(q, side)).collect();
        let m = v.norm_sqr();
        total.push(m);
        let in_y = ks.iter().all(|&k| k >= 0) || ks.iter().all(|&k| k <= 0);
        if !in_y {
            outside.push(m);
        }
    }
    let total_mass = pairwise_sum(&total);
    let outside_mass = pairwise_sum(&outside);
    let relative_outside = if total_mass > 0.0 { outside_mass / total_mass } else { 0.0 };
    let needs_singular_measure = relative_outside >= ORTHANT_TOL;
    let herglotz = if needs_singular_measure { None } else { Some(solution_from_log(grid, &u_hat, w, group)?) };
    Ok(AdmissibilityReport {
        log_l1,
        log_integrability: None,
        fourier_support: FourierSupport { total_mass, outside_mass, relative_outside, needs_singular_measure },
        herglotz,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibleResidualReport {
    pub shells: Vec<ShellReport>,
    pub boundary_residual_l1: f64,
    pub boundary_residual_sup: f64,
    pub min_abs_g: f64,
    /// max relative |g_r∘τ − g_r| over shells and group elements.
    pub invariance_residual: f64,
}

/// Residuals of |g_r|² against w on the standard shells and on the boundary.
pub fn verify_admissible(sol: &HerglotzSolution, grid: &BoundaryGrid, w: &WeightField, group: &Group) -> Result<AdmissibleResidualReport> {
    let (dim, side) = torus_dims(grid)?;
    if dim != sol.dim || side != sol.side {
        return Err(LabError::GridMismatch { field: sol.side.pow(sol.dim as u32), grid: grid.len() });
    }
    let mut shells = Vec::new();
    let mut min_abs = f64::INFINITY;
    let mut inv = 0.0f64;
    for &r in &HERGLOTZ_SHELLS {
        let g = sol.g_on_shell(r);
        let rep = shell_report(grid, &g, w.values(), r)?;
        min_abs = min_abs.min(rep.min_abs_g);
        inv = inv.max(invariance_of_values(grid, g, group)?);
        shells.push(rep);
    }
    let gb = sol.boundary_values();
    let b = shell_report(grid, &gb, w.values(), 1.0)?;
    inv = inv.max(invariance_of_values(grid, gb, group)?);
    Ok(AdmissibleResidualReport {
        shells,
        boundary_residual_l1: b.residual_l1,
        boundary_residual_sup: b.residual_sup,
        min_abs_g: min_abs.min(b.min_abs_g),
        invariance_residual: inv,
    })
}

/// Solution for a constant weight that is exactly admissible by a constant: w ≡ c, g ≡ √c.
pub fn constant_solution(grid: &BoundaryGrid, c: f64, group: &Group) -> Result<HerglotzSolution> {
    let w = WeightField::new(vec![c; grid.len()], crate::quotient_maps::Provenance::User)?;
    let rep = fourier_construct_polydisc(grid, &w, group)?;
    rep.herglotz.ok_or_else(|| LabError::NumericalConsistency("constant weight flagged off-orthant".into()))
}

/// Pipeline weight of a map on a torus grid, checked positive.
pub fn pipeline_weight(spec: &ProperMapSpec, grid: &BoundaryGrid) -> Result<WeightField> {
    let w = density_from_jacobian(spec, grid)?;
    check_positive(&w)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient_maps::Provenance;

    #[test]
    fn constant_weight_gives_constant_g() {
        let g = make_torus_grid(1, 16).unwrap();
        let w = WeightField::new(vec![3.0; 16], Provenance::User).unwrap();
        let sol = herglotz_solve(&g, &w).unwrap();
        for v in sol.boundary_values() {
            assert!((v - C64::new(3f64.sqrt(), 0.0)).norm() < 1e-13);
        }
        assert!(sol.boundary_residual_sup < 1e-14);
    }

    #[test]
    fn log_integrability_of_one_is_zero() {
        let rep = log_integrability(&[8, 16, 32], &|n| {
            let g = make_torus_grid(1, n)?;
            let w = WeightField::new(vec![1.0; g.len()], Provenance::User)?;
            Ok((g, w))
        })
        .unwrap();
        assert!(rep.estimates.iter().all(|&e| e == 0.0));
        assert_eq!(rep.verdict, Verdict::Finite);
    }

    #[test]
    fn nonpositive_weight_is_precondition_error() {
        let g = make_torus_grid(1, 8).unwrap();
        let mut v = vec![1.0; 8];
        v[2] = 0.0;
        let w = WeightField::new(v, Provenance::User).unwrap();
        assert!(matches!(log_l1(&g, &w), Err(LabError::Precondition(_))));
        assert!(matches!(herglotz_solve(&g, &w), Err(LabError::Admissibility(_))));
    }

    #[test]
    fn growing_estimates_are_divergent() {
        let (_, v) = classify_refinement(&[1.0, 2.0, 3.5, 5.5]);
        assert_eq!(v, Verdict::Divergent);
        let (_, v) = classify_refinement(&[1.0, 1.01, 1.011, 1.0111]);
        assert_eq!(v, Verdict::Finite);
    }

    #[test]
    fn constant_four_gives_two() {
        let g = make_torus_grid(2, 8).unwrap();
        let sol = constant_solution(&g, 4.0, &Group::rotations2(2, 2)).unwrap();
        for v in sol.boundary_values() {
            assert!((v - C64::new(2.0, 0.0)).norm() < 1e-13);
        }
        assert!(sol.invariance_residual < 1e-12);
    }
}
