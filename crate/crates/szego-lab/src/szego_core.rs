//! Boundary Szegő projections on T^n (Fourier orthant mask) and S^3
//! (holomorphic monomial Gram projection), Szegő kernels for interior
//! evaluation, and the Poisson extension on T^n.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_geometry::{BoundaryGrid, ManifoldId};
use crate::error::{LabError, Result};
use crate::numeric::{fft_nd, pairwise_sum_c, signed_freq, unravel, C64};

/// Default truncation degree of the sphere projector.
pub const DEFAULT_SPHERE_DEGREE: usize = 24;
/// Largest tolerated deviation of the sphere Gram matrix from the exact diagonal.
pub const GRAM_TOLERANCE: f64 = 1e-6;

pub type Evaluator = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// Complex samples on a grid, optionally with an analytic evaluator used
/// when a group element moves nodes off the grid.
#[derive(Clone)]
pub struct BoundaryField {
    values: Vec<C64>,
    evaluator: Option<Evaluator>,
}

impl fmt::Debug for BoundaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryField")
            .field("len", &self.values.len())
            .field("analytic", &self.evaluator.is_some())
            .finish()
    }
}

impl BoundaryField {
    pub fn from_values(values: Vec<C64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::Precondition(format!("non-finite field value at node {i}")));
        }
        Ok(Self { values, evaluator: None })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_values(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Sample `f` on the grid and keep it as the analytic evaluator.
    pub fn from_fn<F>(grid: &BoundaryGrid, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> C64 + Send + Sync + 'static,
    {
        let values: Vec<C64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        let mut field = Self::from_values(values)?;
        field.evaluator = Some(Arc::new(f));
        Ok(field)
    }

    pub fn with_evaluator(mut self, evaluator: Evaluator) -> Self {
        self.evaluator = Some(evaluator);
        self
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn evaluator(&self) -> Option<&Evaluator> {
        self.evaluator.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::from_values(self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Metadata of a projector, reported in experiment outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProjectorInfo {
    pub manifold_id: String,
    pub degree: Option<usize>,
    pub gram_residual: Option<f64>,
}

/// Orthogonal projection onto boundary values of holomorphic functions,
/// realized exactly on the finite-dimensional space resolved by the grid.
#[derive(Debug, Clone)]
pub enum SzegoProjector {
    Torus { dim: usize, side: usize, len: usize },
    Sphere(Box<SphereProjector>),
}

#[derive(Debug, Clone)]
pub struct SphereProjector {
    degree: usize,
    n12: usize,
    n3: usize,
    /// z1 at each (φ1, φ2) pair.
    z1: Vec<C64>,
    /// |z2| at each (φ1, φ2) pair.
    s: Vec<f64>,
    /// Weight of each (φ1, φ2, φ3) node; independent of φ3.
    w12: Vec<f64>,
    /// e^{i b φ3_l}, indexed [b * n3 + l].
    phases: Vec<C64>,
    /// Cholesky factors of the per-b Gram blocks.
    blocks: Vec<nalgebra::Cholesky<C64, nalgebra::Dyn>>,
    gram_residual: f64,
}

impl SzegoProjector {
    pub fn new(grid: &BoundaryGrid, degree: usize) -> Result<Self> {
        match grid.manifold() {
            ManifoldId::Torus(dim) => Ok(Self::Torus {
                dim,
                side: grid.torus_side().unwrap_or(0),
                len: grid.len(),
            }),
            ManifoldId::Sphere3 => Ok(Self::Sphere(Box::new(SphereProjector::new(grid, degree)?))),
        }
    }

    pub fn for_grid(grid: &BoundaryGrid) -> Result<Self> {
        Self::new(grid, DEFAULT_SPHERE_DEGREE)
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Torus { len, .. } => *len,
            Self::Sphere(p) => p.n12 * p.n3,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn info(&self) -> ProjectorInfo {
        match self {
            Self::Torus { dim, .. } => ProjectorInfo {
                manifold_id: ManifoldId::Torus(*dim).label(),
                degree: None,
                gram_residual: None,
            },
            Self::Sphere(p) => ProjectorInfo {
                manifold_id: ManifoldId::Sphere3.label(),
                degree: Some(p.degree),
                gram_residual: Some(p.gram_residual),
            },
        }
    }

    pub fn apply(&self, values: &[C64]) -> Result<Vec<C64>> {
        if values.len() != self.len() {
            return Err(LabError::GridMismatch { field: values.len(), grid: self.len() });
        }
        Ok(match self {
            Self::Torus { dim, side, .. } => torus_orthant(values, *dim, *side),
            Self::Sphere(p) => p.apply(values),
        })
    }

    pub fn project(&self, f: &BoundaryField) -> Result<BoundaryField> {
        BoundaryField::from_values(self.apply(f.values())?)
    }
}

fn torus_orthant(values: &[C64], dim: usize, side: usize) -> Vec<C64> {
    let mut data = values.to_vec();
    fft_nd(&mut data, dim, side, false);
    let mut idx = vec![0usize; dim];
    let scale = 1.0 / data.len() as f64;
    for (flat, v) in data.iter_mut().enumerate() {
        unravel(flat, dim, side, &mut idx);
        if idx.iter().any(|&q| signed_freq(q, side) < 0) {
            *v = C64::new(0.0, 0.0);
        } else {
            *v *= scale;
        }
    }
    fft_nd(&mut data, dim, side, true);
    data
}

fn factorial_ratio(a: usize, b: usize) -> f64 {
    // a! b! / (a+b+1)!
    let mut r = 1.0 / (a + b + 1) as f64;
    for j in 1..=b {
        r *= j as f64 / (a + j) as f64;
    }
    r
}

/// ∫_{S³} |z1^a z2^b|² dσ = 2π² a! b! / (a+b+1)!.
pub fn sphere_monomial_norm_sq(a: usize, b: usize) -> f64 {
    2.0 * PI * PI * factorial_ratio(a, b)
}

impl SphereProjector {
    fn new(grid: &BoundaryGrid, degree: usize) -> Result<Self> {
        let res = grid.resolutions();
        let (n1, n2, n3) = (res[0], res[1], res[2]);
        if degree >= n3 {
            return Err(LabError::UnderResolved(format!(
                "degree {degree} needs at least {} points in φ3, grid has {n3}",
                degree + 1
            )));
        }
        let n12 = n1 * n2;
        let mut z1 = Vec::with_capacity(n12);
        let mut s = Vec::with_capacity(n12);
        let mut w12 = Vec::with_capacity(n12);
        for ij in 0..n12 {
            let p = grid.point(ij * n3);
            z1.push(p[0]);
            s.push(p[1].norm());
            w12.push(grid.weights()[ij * n3]);
        }
        let phi3 = &grid.axes()[2];
        let mut phases = Vec::with_capacity((degree + 1) * n3);
        for b in 0..=degree {
            for &t in phi3 {
                phases.push(C64::from_polar(1.0, b as f64 * t));
            }
        }
        // Σ_l e^{iΔφ3_l} for the cross-b Gram entries.
        let mut cross = 0.0f64;
        for delta in 1..=degree {
            let e: C64 = phi3.iter().map(|&t| C64::from_polar(1.0, delta as f64 * t)).sum();
            cross = cross.max(e.norm() / n3 as f64);
        }
        let sum_w3 = n3 as f64;
        let mut blocks = Vec::with_capacity(degree + 1);
        let mut residual = cross;
        for b in 0..=degree {
            let size = degree - b + 1;
            let mut gram = DMatrix::<C64>::zeros(size, size);
            // gram[(β, α)] = Σ W z1^α conj(z1^β) s^{2b}
            let entries: Vec<C64> = (0..size * size)
                .into_par_iter()
                .map(|e| {
                    let (beta, alpha) = (e / size, e % size);
                    let terms: Vec<C64> = (0..n12)
                        .map(|ij| {
                            let za = z1[ij].powu(alpha as u32);
                            let zb = z1[ij].powu(beta as u32);
                            za * zb.conj() * (w12[ij] * sum_w3 * s[ij].powi(2 * b as i32))
                        })
                        .collect();
                    pairwise_sum_c(&terms)
                })
                .collect();
            for (e, v) in entries.into_iter().enumerate() {
                gram[(e / size, e % size)] = v;
            }
            for beta in 0..size {
                let exact_b = sphere_monomial_norm_sq(beta, b);
                let gbb = gram[(beta, beta)].re;
                residual = residual.max((gbb - exact_b).abs() / exact_b);
                for alpha in 0..size {
                    if alpha != beta {
                        let cos = gram[(beta, alpha)].norm()
                            / (gram[(alpha, alpha)].re * gbb).sqrt();
                        residual = residual.max(cos);
                    }
                }
            }
            let chol = gram.cholesky().ok_or_else(|| {
                LabError::UnderResolved(format!("Gram block b = {b} is not positive definite"))
            })?;
            blocks.push(chol);
        }
        if residual > GRAM_TOLERANCE {
            return Err(LabError::UnderResolved(format!(
                "Gram matrix deviates from diagonal by {residual:e} (> {GRAM_TOLERANCE:e}) at degree {degree}, grid {n1}x{n2}x{n3}"
            )));
        }
        Ok(Self { degree, n12, n3, z1, s, w12, phases, blocks, gram_residual: residual })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// Monomial coefficients c[b][a] of the projection of `values`.
    pub fn coefficients(&self, values: &[C64]) -> Vec<Vec<C64>> {
        let d = self.degree;
        let n3 = self.n3;
        // F_b(ij) = Σ_l f(ij, l) e^{-ibφ3_l}
        let fb: Vec<Vec<C64>> = (0..self.n12)
            .into_par_iter()
            .map(|ij| {
                let row = &values[ij * n3..(ij + 1) * n3];
                (0..=d)
                    .map(|b| {
                        let ph = &self.phases[b * n3..(b + 1) * n3];
                        row.iter().zip(ph).map(|(f, p)| f * p.conj()).sum()
                    })
                    .collect()
            })
            .collect();
        (0..=d)
            .into_par_iter()
            .map(|b| {
                let size = d - b + 1;
                let rhs: Vec<C64> = (0..size)
                    .map(|beta| {
                        let terms: Vec<C64> = (0..self.n12)
                            .map(|ij| {
                                self.z1[ij].powu(beta as u32).conj()
                                    * (self.w12[ij] * self.s[ij].powi(b as i32))
                                    * fb[ij][b]
                            })
                            .collect();
                        pairwise_sum_c(&terms)
                    })
                    .collect();
                let sol = self.blocks[b].solve(&DVector::from_vec(rhs));
                sol.iter().copied().collect()
            })
            .collect()
    }

    fn apply(&self, values: &[C64]) -> Vec<C64> {
        let coeffs = self.coefficients(values);
        self.synthesize(&coeffs)
    }

    /// Σ c[b][a] z1^a z2^b at every node.
    pub fn synthesize(&self, coeffs: &[Vec<C64>]) -> Vec<C64> {
        let n3 = self.n3;
        let mut out = vec![C64::new(0.0, 0.0); self.n12 * n3];
        out.par_chunks_mut(n3).enumerate().for_each(|(ij, chunk)| {
            let z = self.z1[ij];
            for (b, cb) in coeffs.iter().enumerate() {
                let mut poly = C64::new(0.0, 0.0);
                for c in cb.iter().rev() {
                    poly = poly * z + c;
                }
                let radial = poly * self.s[ij].powi(b as i32);
                if radial == C64::new(0.0, 0.0) {
                    continue;
                }
                let ph = &self.phases[b * n3..(b + 1) * n3];
                for (o, p) in chunk.iter_mut().zip(ph) {
                    *o += radial * p;
                }
            }
        });
        out
    }
}

/// Szegő projection on a torus grid: zero every Fourier mode with a negative index.
pub fn project_torus(grid: &BoundaryGrid, f: &BoundaryField) -> Result<BoundaryField> {
    match grid.manifold() {
        ManifoldId::Torus(_) => SzegoProjector::new(grid, 0)?.project(f),
        ManifoldId::Sphere3 => Err(LabError::Parameter("project_torus needs a torus grid".into())),
    }
}

/// Szegő projection on a sphere grid truncated at total degree `degree`.
pub fn project_sphere(grid: &BoundaryGrid, f: &BoundaryField, degree: usize) -> Result<BoundaryField> {
    match grid.manifold() {
        ManifoldId::Sphere3 => SzegoProjector::new(grid, degree)?.project(f),
        ManifoldId::Torus(_) => Err(LabError::Parameter("project_sphere needs a sphere3 grid".into())),
    }
}

/// Szegő kernel K(z, ζ) with respect to the unnormalized boundary measure.
pub fn kernel_eval(manifold: ManifoldId, z: &[C64], zeta: &[C64]) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    match manifold {
        ManifoldId::Torus(n) => {
            if z.len() != n || zeta.len() != n {
                return Err(LabError::Parameter("kernel point dimension mismatch".into()));
            }
            if z.iter().any(|c| c.norm() >= 1.0) {
                return Err(LabError::Domain("kernel point is not interior to the polydisc".into()));
            }
            Ok(z.iter()
                .zip(zeta)
                .map(|(a, b)| one / ((one - a * b.conj()) * (2.0 * PI)))
                .product())
        }
        ManifoldId::Sphere3 => {
            if z.len() != 2 || zeta.len() != 2 {
                return Err(LabError::Parameter("kernel point dimension mismatch".into()));
            }
            if z[0].norm_sqr() + z[1].norm_sqr() >= 1.0 {
                return Err(LabError::Domain("kernel point is not interior to the ball".into()));
            }
            let t = one - crate::boundary_geometry::hermitian(z, zeta);
            Ok(one / (t * t * (2.0 * PI * PI)))
        }
    }
}

/// S_X f(z) = ∫ K(z, ζ) f(ζ) dσ(ζ) by grid quadrature.
pub fn interior_eval(grid: &BoundaryGrid, f: &[C64], z: &[C64]) -> Result<C64> {
    if f.len() != grid.len() {
        return Err(LabError::GridMismatch { field: f.len(), grid: grid.len() });
    }
    let terms = (0..grid.len())
        .map(|i| Ok(kernel_eval(grid.manifold(), z, grid.point(i))? * f[i] * grid.weights()[i]))
        .collect::<Result<Vec<C64>>>()?;
    Ok(pairwise_sum_c(&terms))
}

/// ∫ K(z, ·) dσ, which equals 1 for the correctly normalized kernel.
pub fn kernel_normalization(grid: &BoundaryGrid, z: &[C64]) -> Result<C64> {
    interior_eval(grid, &vec![C64::new(1.0, 0.0); grid.len()], z)
}

/// Poisson extension of a real field on T^n to the shell r·T^n, sampled at
/// the same angles: Fourier multiplier Π r^{|k_j|}.
pub fn poisson_extend(grid: &BoundaryGrid, f: &[f64], r: f64) -> Result<Vec<f64>> {
    let (dim, side) = match grid.manifold() {
        ManifoldId::Torus(n) => (n, grid.torus_side().unwrap_or(0)),
        ManifoldId::Sphere3 => return Err(LabError::Parameter("poisson_extend needs a torus grid".into())),
    };
    if !(r > 0.0 && r < 1.0) {
        return Err(LabError::Domain(format!("Poisson radius {r} outside (0, 1)")));
    }
    if f.len() != grid.len() {
        return Err(LabError::GridMismatch { field: f.len(), grid: grid.len() });
    }
    let mut data: Vec<C64> = f.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_nd(&mut data, dim, side, false);
    let scale = 1.0 / data.len() as f64;
    let mut idx = vec![0usize; dim];
    for (flat, v) in data.iter_mut().enumerate() {
        unravel(flat, dim, side, &mut idx);
        let k1: i64 = idx.iter().map(|&q| signed_freq(q, side).abs()).sum();
        *v *= scale * r.powi(k1 as i32);
    }
    fft_nd(&mut data, dim, side, true);
    Ok(data.into_iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_geometry::{make_sphere3_grid, make_torus_grid};

    #[test]
    fn torus_projection_kills_antiholomorphic() {
        let g = make_torus_grid(2, 16).unwrap();
        let f = BoundaryField::from_fn(&g, |z| z[0].conj()).unwrap();
        let p = project_torus(&g, &f).unwrap();
        assert!(p.values().iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn torus_projection_fixes_holomorphic() {
        let g = make_torus_grid(2, 16).unwrap();
        let f = BoundaryField::from_fn(&g, |z| z[0].powu(2) * z[1].powu(3)).unwrap();
        let p = project_torus(&g, &f).unwrap();
        for (a, b) in p.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_monomial_norms_match_factorials() {
        assert!((sphere_monomial_norm_sq(0, 0) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((sphere_monomial_norm_sq(1, 1) - 2.0 * PI * PI / 6.0).abs() < 1e-14);
        assert!((sphere_monomial_norm_sq(2, 0) - 2.0 * PI * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_projector_fixes_monomials() {
        let g = make_sphere3_grid(24, 24, 16).unwrap();
        let proj = SzegoProjector::new(&g, 6).unwrap();
        let f = BoundaryField::from_fn(&g, |z| z[0] * z[1]).unwrap();
        let p = proj.project(&f).unwrap();
        for (a, b) in p.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let f = BoundaryField::from_fn(&g, |z| z[0].conj() * z[1]).unwrap();
        let p = proj.project(&f).unwrap();
        assert!(p.values().iter().all(|v| v.norm() < 1e-8));
    }

    #[test]
    fn sphere_projector_rejects_underresolved_grid() {
        let g = make_sphere3_grid(4, 4, 8).unwrap();
        assert!(matches!(SzegoProjector::new(&g, 6), Err(LabError::UnderResolved(_))));
        let g = make_sphere3_grid(8, 8, 4).unwrap();
        assert!(matches!(SzegoProjector::new(&g, 6), Err(LabError::UnderResolved(_))));
    }

    #[test]
    fn kernel_constant_term() {
        let k = kernel_eval(ManifoldId::Torus(1), &[C64::new(0.0, 0.0)], &[C64::new(0.0, 1.0)]).unwrap();
        assert!((k - C64::new(1.0 / (2.0 * PI), 0.0)).norm() < 1e-15);
        assert!(kernel_eval(ManifoldId::Torus(1), &[C64::new(1.0, 0.0)], &[C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn poisson_multiplier_on_cosine() {
        let g = make_torus_grid(1, 32).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| g.node(i)[0].cos()).collect();
        let u = poisson_extend(&g, &f, 0.5).unwrap();
        for (a, b) in u.iter().zip(&f) {
            assert!((a - 0.5 * b).abs() < 1e-14);
        }
        assert!(poisson_extend(&g, &f, 1.0).is_err());
    }
}
