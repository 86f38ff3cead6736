//! Szegő projection of a quotient domain Ω = Φ(X), realized on G-invariant
//! pullbacks over the boundary of X.
//!
//! A function f on the boundary of Ω is stored as f∘Φ on the grid of X. The
//! projection is S_Ω f ↔ (1/g*)·S_X(g*·f∘Φ); the push-forward and the 1/|G|
//! factor cancel against the pullback representation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::admissibility::fourier_construct_polydisc;
use crate::boundary_geometry::{inner, integrate_real, BoundaryGrid, ManifoldId};
use crate::error::{LabError, Result};
use crate::numeric::C64;
use crate::quotient_maps::{density_from_jacobian, is_invariant, symmetrize, ProperMapSpec, WeightField};
use crate::szego_core::{BoundaryField, SzegoProjector};

/// Invariance certificate tolerance for quotient functions.
pub const QUOTIENT_INVARIANCE_TOL: f64 = 1e-8;
/// |g*| below this at a node makes division by g* near-singular.
pub const NEAR_SINGULAR: f64 = 1e-12;
/// Relative gap allowed between the two forms of a weighted norm.
pub const NORM_FORM_TOL: f64 = 1e-8;
/// Relative tolerance of the holomorphy certificate S_X(g*h) = g*h.
pub const HOLOMORPHY_TOL: f64 = 1e-9;

/// (X, Ω, Φ, G) with its pullback density, optional admissibility data and the projector of X.
#[derive(Debug, Clone)]
pub struct QuadrupleContext {
    pub spec: ProperMapSpec,
    pub grid: BoundaryGrid,
    pub w: WeightField,
    g_star: Option<Vec<C64>>,
    /// sup |(|g*|² − w)| / sup w.
    pub g_residual: Option<f64>,
    pub projector: SzegoProjector,
}

fn modulus_residual(g: &[C64], w: &[f64]) -> f64 {
    let wmax = w.iter().copied().fold(0.0, f64::max);
    g.iter().zip(w).map(|(a, b)| (a.norm_sqr() - b).abs()).fold(0.0, f64::max) / wmax.max(f64::MIN_POSITIVE)
}

impl QuadrupleContext {
    /// Density only; g is unknown.
    pub fn weights_only(spec: ProperMapSpec, grid: BoundaryGrid) -> Result<Self> {
        let w = density_from_jacobian(&spec, &grid)?;
        let projector = SzegoProjector::for_grid(&grid)?;
        Ok(Self { spec, grid, w, g_star: None, g_residual: None, projector })
    }

    /// Build g from the orthant construction on a torus grid.
    pub fn admissible(spec: ProperMapSpec, grid: BoundaryGrid) -> Result<Self> {
        if !matches!(grid.manifold(), ManifoldId::Torus(_)) {
            return Err(LabError::Configuration("g is constructible only on torus grids".into()));
        }
        let mut ctx = Self::weights_only(spec, grid)?;
        let report = fourier_construct_polydisc(&ctx.grid, &ctx.w, &ctx.spec.group)?;
        let sol = report.herglotz.ok_or_else(|| {
            LabError::Admissibility(format!(
                "log w has relative Fourier mass {:e} outside the orthants; a singular measure is needed",
                report.fourier_support.relative_outside
            ))
        })?;
        let g = sol.boundary_values();
        ctx.g_residual = Some(modulus_residual(&g, ctx.w.values()));
        ctx.g_star = Some(g);
        Ok(ctx)
    }

    /// Attach user-supplied boundary values of g (e.g. a surrogate); the modulus residual is reported, not enforced.
    pub fn with_g(mut self, g_star: Vec<C64>) -> Result<Self> {
        if g_star.len() != self.grid.len() {
            return Err(LabError::GridMismatch { field: g_star.len(), grid: self.grid.len() });
        }
        self.g_residual = Some(modulus_residual(&g_star, self.w.values()));
        self.g_star = Some(g_star);
        Ok(self)
    }

    pub fn g_star(&self) -> Option<&[C64]> {
        self.g_star.as_deref()
    }

    fn require_g(&self) -> Result<&[C64]> {
        self.g_star().ok_or_else(|| LabError::Precondition("context has no admissibility data g".into()))
    }

    pub fn group_order(&self) -> f64 {
        self.spec.group.order() as f64
    }

    fn singular_nodes(&self) -> Result<()> {
        let g = self.require_g()?;
        let nodes: Vec<usize> = g.iter().enumerate().filter(|(_, v)| v.norm() < NEAR_SINGULAR).map(|(i, _)| i).collect();
        if nodes.is_empty() {
            Ok(())
        } else {
            Err(LabError::NearSingular { nodes })
        }
    }
}

/// A function on the boundary of Ω, stored as its certified G-invariant pullback.
#[derive(Debug, Clone)]
pub struct QuotientFunction {
    field: BoundaryField,
    pub invariance_residual: f64,
}

impl QuotientFunction {
    pub fn new(ctx: &QuadrupleContext, field: BoundaryField) -> Result<Self> {
        if field.len() != ctx.grid.len() {
            return Err(LabError::GridMismatch { field: field.len(), grid: ctx.grid.len() });
        }
        let scale = field.values().iter().map(|v| v.norm()).fold(1.0, f64::max);
        let (ok, dev) = is_invariant(&ctx.grid, &field, &ctx.spec.group, QUOTIENT_INVARIANCE_TOL * scale)?;
        if !ok {
            return Err(LabError::Precondition(format!(
                "pullback is not G-invariant (deviation {dev:e}); symmetrize it first"
            )));
        }
        Ok(Self { field, invariance_residual: dev })
    }

    /// Symmetrize an arbitrary field over G and certify it.
    pub fn lift(ctx: &QuadrupleContext, field: &BoundaryField) -> Result<Self> {
        Self::new(ctx, symmetrize(&ctx.grid, field, &ctx.spec.group)?)
    }

    pub fn from_fn<F>(ctx: &QuadrupleContext, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> C64 + Send + Sync + 'static,
    {
        Self::new(ctx, BoundaryField::from_fn(&ctx.grid, f)?)
    }

    pub fn field(&self) -> &BoundaryField {
        &self.field
    }

    pub fn values(&self) -> &[C64] {
        self.field.values()
    }
}

fn times(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// (1/g*)·S_X(g*·f∘Φ), re-certified invariant.
pub fn project_quotient(ctx: &QuadrupleContext, f: &QuotientFunction) -> Result<QuotientFunction> {
    let raw = project_raw(ctx, f.values())?;
    QuotientFunction::new(ctx, BoundaryField::from_values(raw)?)
}

/// The projection formula applied without an invariance requirement.
fn project_raw(ctx: &QuadrupleContext, f: &[C64]) -> Result<Vec<C64>> {
    ctx.singular_nodes()?;
    let g = ctx.require_g()?;
    let s = ctx.projector.apply(&times(g, f))?;
    Ok(s.iter().zip(g).map(|(a, b)| a / b).collect())
}

/// ⟨f − T f, h⟩ on Ω, computed as (1/|G|)⟨g*(f − Tf)∘Φ, g*·h∘Φ⟩ on the grid of X.
pub fn orthogonality_residual(ctx: &QuadrupleContext, f: &QuotientFunction, h: &QuotientFunction) -> Result<C64> {
    let g = ctx.require_g()?;
    let gh = times(g, h.values());
    let sgh = ctx.projector.apply(&gh)?;
    let scale = gh.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let gap = sgh.iter().zip(&gh).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if gap > HOLOMORPHY_TOL * scale {
        return Err(LabError::Certificate(format!("h is not holomorphic on the quotient (S_X(g*h) − g*h = {gap:e})")));
    }
    let tf = project_quotient(ctx, f)?;
    let diff: Vec<C64> = f.values().iter().zip(tf.values()).zip(g).map(|((a, b), gv)| (a - b) * gv).collect();
    Ok(inner(&ctx.grid, &diff, &gh)? / ctx.group_order())
}

/// (1/|G|)∫ |h|^p w^{1−p/2} dσ for a field h on the boundary of X.
pub fn weighted_lp(grid: &BoundaryGrid, h: &[C64], w: &[f64], p: f64, group_order: f64) -> Result<f64> {
    if h.len() != grid.len() || w.len() != grid.len() {
        return Err(LabError::GridMismatch { field: h.len(), grid: grid.len() });
    }
    let e = 1.0 - 0.5 * p;
    let vals: Vec<f64> = h.iter().zip(w).map(|(a, b)| a.norm().powf(p) * b.powf(e)).collect();
    Ok(integrate_real(grid, &vals)? / group_order)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub p: f64,
    /// (1/|G|)∫ |f∘Φ|^p w dσ.
    pub quotient_form: f64,
    /// (1/|G|)∫ |g*·f∘Φ|^p w^{1−p/2} dσ.
    pub pullback_form: f64,
    pub relative_gap: f64,
}

/// ‖f‖^p on the boundary of Ω in both forms, cross-checked.
pub fn weighted_norm(ctx: &QuadrupleContext, f: &QuotientFunction, p: f64) -> Result<WeightedNorm> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(LabError::Parameter(format!("p = {p} must lie in (1, ∞)")));
    }
    if ctx.w.min() <= 0.0 {
        return Err(LabError::Precondition("weight vanishes at a node".into()));
    }
    let g = ctx.require_g()?;
    let vals: Vec<f64> = f.values().iter().zip(ctx.w.values()).map(|(a, b)| a.norm().powf(p) * b).collect();
    let quotient_form = integrate_real(&ctx.grid, &vals)? / ctx.group_order();
    let pullback_form = weighted_lp(&ctx.grid, &times(g, f.values()), ctx.w.values(), p, ctx.group_order())?;
    let relative_gap = (quotient_form - pullback_form).abs() / quotient_form.abs().max(f64::MIN_POSITIVE);
    if relative_gap > NORM_FORM_TOL {
        return Err(LabError::NumericalConsistency(format!(
            "weighted norm forms disagree: {quotient_form:e} vs {pullback_form:e}"
        )));
    }
    Ok(WeightedNorm { p, quotient_form, pullback_form, relative_gap })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceEntry {
    /// ‖S_X(g*f∘Φ)‖^p / ‖g*f∘Φ‖^p in L^p(w^{1−p/2}).
    pub pullback_ratio: f64,
    /// ‖T f‖^p / ‖f‖^p in L^p(w) on the quotient side.
    pub quotient_ratio: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub entries: Vec<EquivalenceEntry>,
    pub max_relative_gap: f64,
}

/// Compare the quotient-side norm ratio of T with the weighted ratio of S_X on invariant pullbacks.
pub fn weighted_equivalence_check(ctx: &QuadrupleContext, p: f64, family: &[QuotientFunction]) -> Result<EquivalenceReport> {
    let g = ctx.require_g()?;
    let order = ctx.group_order();
    let mut entries = Vec::with_capacity(family.len());
    for f in family {
        let gf = times(g, f.values());
        let sgf = ctx.projector.apply(&gf)?;
        let pullback_ratio =
            weighted_lp(&ctx.grid, &sgf, ctx.w.values(), p, order)? / weighted_lp(&ctx.grid, &gf, ctx.w.values(), p, order)?;
        let tf = project_quotient(ctx, f)?;
        let quotient_ratio = weighted_norm(ctx, &tf, p)?.quotient_form / weighted_norm(ctx, f, p)?.quotient_form;
        let relative_gap = (pullback_ratio - quotient_ratio).abs() / pullback_ratio.abs().max(f64::MIN_POSITIVE);
        entries.push(EquivalenceEntry { pullback_ratio, quotient_ratio, relative_gap });
    }
    let max_relative_gap = entries.iter().map(|e| e.relative_gap).fold(0.0, f64::max);
    Ok(EquivalenceReport { p, entries, max_relative_gap })
}

/// `count` symmetrized fields with i.i.d. complex Gaussian-like node values.
pub fn random_invariant_family(ctx: &QuadrupleContext, count: usize, seed: u64) -> Result<Vec<QuotientFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let vals: Vec<C64> =
                (0..ctx.grid.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            QuotientFunction::lift(ctx, &BoundaryField::from_values(vals)?)
        })
        .collect()
}

/// max |T(sym f) − sym(T_raw f)| for a non-invariant field f.
pub fn commutation_residual(ctx: &QuadrupleContext, f: &BoundaryField) -> Result<f64> {
    let left = project_quotient(ctx, &QuotientFunction::lift(ctx, f)?)?;
    let raw = BoundaryField::from_values(project_raw(ctx, f.values())?)?;
    let right = symmetrize(&ctx.grid, &raw, &ctx.spec.group)?;
    Ok(left.values().iter().zip(right.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Contexts where g is exactly constructible: z ↦ z^m on T (w ≡ m, g ≡ √m).
pub fn power1d_context(m: u32, side: usize) -> Result<QuadrupleContext> {
    QuadrupleContext::admissible(ProperMapSpec::power1d(m)?, crate::boundary_geometry::make_torus_grid(1, side)?)
}

/// (z1^m, z2^k) on T² (w ≡ mk, g ≡ √(mk)).
pub fn product_power_context(m: u32, k: u32, side: usize) -> Result<QuadrupleContext> {
    QuadrupleContext::admissible(ProperMapSpec::power(m, k)?, crate::boundary_geometry::make_torus_grid(2, side)?)
}
