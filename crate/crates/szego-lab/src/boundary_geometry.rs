//! Quadrature grids on the distinguished boundaries T^n and S^3, the
//! anisotropic boundary metric on S^3, metric-ball volumes and the Forelli
//! reduction of sphere integrals of functions of z1 to disc integrals.
//!
//! The surface measure is always the unnormalized one: σ(T^n) = (2π)^n and
//! σ(S^3) = 2π².

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::{gauss_legendre, pairwise_sum, pairwise_sum_c, C64};
use crate::szego_core::BoundaryField;

pub const SPHERE3_MASS: f64 = 2.0 * PI * PI;
pub const GRID_FORMAT_VERSION: u32 = 1;
/// Minimum node count for a metric ball to count as resolved.
pub const MIN_BALL_NODES: usize = 32;
/// Limit of σ(Q_δ(η))/δ⁴ as δ → 0: the Forelli constant 2π times γ_0 = π/2.
pub const BALL_VOLUME_CONSTANT: f64 = PI * PI;

pub fn torus_mass(n: usize) -> f64 {
    (2.0 * PI).powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldId {
    Torus(usize),
    Sphere3,
}

impl ManifoldId {
    pub fn label(&self) -> String {
        match self {
            ManifoldId::Torus(n) => format!("torus_{n}"),
            ManifoldId::Sphere3 => "sphere3".to_string(),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        if label == "sphere3" {
            return Ok(ManifoldId::Sphere3);
        }
        label
            .strip_prefix("torus_")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(ManifoldId::Torus)
            .ok_or_else(|| LabError::Parameter(format!("unknown manifold id {label:?}")))
    }

    /// Complex dimension of the ambient space.
    pub fn complex_dim(&self) -> usize {
        match self {
            ManifoldId::Torus(n) => *n,
            ManifoldId::Sphere3 => 2,
        }
    }

    /// Number of real parameters of the boundary.
    pub fn param_dim(&self) -> usize {
        match self {
            ManifoldId::Torus(n) => *n,
            ManifoldId::Sphere3 => 3,
        }
    }
}

/// Quadrature mesh on T^n or S^3.
///
/// Torus grids are uniform products; axis `a` is offset by `(a+1)h/(n+1)` so
/// that no two coordinates of a node coincide. Sphere grids use Gauss-Legendre
/// nodes in φ1, φ2 (even counts, so z1 = 0 and z2 = 0 are never hit) and the
/// midpoint rule in φ3.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    manifold: ManifoldId,
    resolutions: Vec<usize>,
    nodes: Vec<f64>,
    points: Vec<C64>,
    weights: Vec<f64>,
    axes: Vec<Vec<f64>>,
    axis_weights: Vec<Vec<f64>>,
}

/// Embedding of the sphere coordinates (φ1, φ2, φ3).
pub fn sphere_point(phi1: f64, phi2: f64, phi3: f64) -> [C64; 2] {
    let (s1, c1) = phi1.sin_cos();
    let (s2, c2) = phi2.sin_cos();
    [C64::new(c1, s1 * c2), C64::from_polar(s1 * s2, phi3)]
}

/// Inverse of [`sphere_point`].
pub fn sphere_params(z: &[C64]) -> [f64; 3] {
    let phi1 = z[0].re.clamp(-1.0, 1.0).acos();
    let phi2 = z[1].norm().atan2(z[0].im);
    let phi3 = z[1].arg().rem_euclid(2.0 * PI);
    [phi1, phi2, phi3]
}

impl BoundaryGrid {
    pub fn manifold(&self) -> ManifoldId {
        self.manifold
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.manifold.param_dim()
    }

    pub fn complex_dim(&self) -> usize {
        self.manifold.complex_dim()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.param_dim();
        &self.nodes[i * d..(i + 1) * d]
    }

    pub fn point(&self, i: usize) -> &[C64] {
        let n = self.complex_dim();
        &self.points[i * n..(i + 1) * n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis_weights(&self) -> &[Vec<f64>] {
        &self.axis_weights
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Side length of a torus grid.
    pub fn torus_side(&self) -> Option<usize> {
        match self.manifold {
            ManifoldId::Torus(_) => Some(self.resolutions[0]),
            ManifoldId::Sphere3 => None,
        }
    }

    /// Per-axis offsets of a torus grid.
    pub fn torus_offsets(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[0]).collect()
    }

    /// Density of σ with respect to the parameter measure at node `i`.
    pub fn param_volume_element(&self, i: usize) -> f64 {
        match self.manifold {
            ManifoldId::Torus(_) => 1.0,
            ManifoldId::Sphere3 => {
                let x = self.node(i);
                x[0].sin().powi(2) * x[1].sin()
            }
        }
    }

    /// Boundary parameters of an arbitrary boundary point.
    pub fn params_of_point(&self, z: &[C64]) -> Vec<f64> {
        match self.manifold {
            ManifoldId::Torus(_) => z.iter().map(|c| c.arg().rem_euclid(2.0 * PI)).collect(),
            ManifoldId::Sphere3 => sphere_params(z).to_vec(),
        }
    }

    /// Boundary point of a parameter tuple.
    pub fn point_of_params(&self, x: &[f64]) -> Vec<C64> {
        match self.manifold {
            ManifoldId::Torus(_) => x.iter().map(|&t| C64::from_polar(1.0, t)).collect(),
            ManifoldId::Sphere3 => sphere_point(x[0], x[1], x[2]).to_vec(),
        }
    }

    /// Index of the grid node at boundary point `z`, if one lies within `tol`.
    pub fn locate(&self, z: &[C64], tol: f64) -> Option<usize> {
        let x = self.params_of_point(z);
        let mut flat = 0usize;
        for (a, axis) in self.axes.iter().enumerate() {
            let periodic = matches!(self.manifold, ManifoldId::Torus(_)) || a == 2;
            let i = nearest_on_axis(axis, x[a], periodic)?;
            flat = flat * axis.len() + i;
        }
        let p = self.point(flat);
        let err = p.iter().zip(z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        (err <= tol).then_some(flat)
    }

    /// Versioned JSON document of the grid.
    pub fn to_document(&self) -> GridDocument {
        let d = self.param_dim();
        GridDocument {
            format_version: GRID_FORMAT_VERSION,
            manifold_id: self.manifold.label(),
            resolutions: self.resolutions.clone(),
            nodes: self.nodes.chunks(d).map(|c| c.to_vec()).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Rebuild a grid from its JSON document, verifying nodes and weights.
    pub fn from_document(doc: &GridDocument) -> Result<Self> {
        if doc.format_version != GRID_FORMAT_VERSION {
            return Err(LabError::Configuration(format!(
                "unsupported grid format version {}",
                doc.format_version
            )));
        }
        let grid = match ManifoldId::parse(&doc.manifold_id)? {
            ManifoldId::Torus(n) => {
                let side = *doc
                    .resolutions
                    .first()
                    .ok_or_else(|| LabError::Configuration("missing resolutions".into()))?;
                make_torus_grid(n, side)?
            }
            ManifoldId::Sphere3 => {
                if doc.resolutions.len() != 3 {
                    return Err(LabError::Configuration("sphere3 needs 3 resolutions".into()));
                }
                make_sphere3_grid(doc.resolutions[0], doc.resolutions[1], doc.resolutions[2])?
            }
        };
        if grid.resolutions != doc.resolutions || grid.len() != doc.weights.len() || grid.len() != doc.nodes.len()
        {
            return Err(LabError::Configuration("grid document shape mismatch".into()));
        }
        let drift = grid
            .weights
            .iter()
            .zip(&doc.weights)
            .map(|(a, b)| (a - b).abs())
            .chain(
                doc.nodes
                    .iter()
                    .enumerate()
                    .flat_map(|(i, x)| grid.node(i).iter().zip(x).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()),
            )
            .fold(0.0, f64::max);
        if drift > 1e-12 {
            return Err(LabError::Configuration(format!("grid document drift {drift:e}")));
        }
        Ok(grid)
    }
}

fn nearest_on_axis(axis: &[f64], x: f64, periodic: bool) -> Option<usize> {
    let pos = axis.partition_point(|&a| a < x);
    let mut best: Option<(usize, f64)> = None;
    let n = axis.len();
    let mut consider = |i: usize| {
        let mut d = (axis[i] - x).abs();
        if periodic {
            d = d.min(2.0 * PI - d);
        }
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    };
    if pos < n {
        consider(pos);
    }
    if pos > 0 {
        consider(pos - 1);
    }
    if periodic {
        consider(0);
        consider(n - 1);
    }
    best.map(|(i, _)| i)
}

/// Serialized grid.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridDocument {
    pub format_version: u32,
    pub manifold_id: String,
    pub resolutions: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Uniform product grid on T^n with N points per axis.
pub fn make_torus_grid(n: usize, side: usize) -> Result<BoundaryGrid> {
    if n == 0 {
        return Err(LabError::Parameter("torus dimension must be at least 1".into()));
    }
    if side < 4 || side % 2 != 0 {
        return Err(LabError::Parameter(format!(
            "torus resolution must be even and at least 4, got {side}"
        )));
    }
    let total = side
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 26)
        .ok_or_else(|| LabError::Parameter("torus grid too large".into()))?;
    let h = 2.0 * PI / side as f64;
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let off = h * (a + 1) as f64 / (n + 1) as f64;
            (0..side).map(|i| i as f64 * h + off).collect()
        })
        .collect();
    let weight = h.powi(n as i32);
    let mut nodes = Vec::with_capacity(total * n);
    let mut points = Vec::with_capacity(total * n);
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        crate::numeric::unravel(flat, n, side, &mut idx);
        for a in 0..n {
            let t = axes[a][idx[a]];
            nodes.push(t);
            points.push(C64::from_polar(1.0, t));
        }
    }
    Ok(BoundaryGrid {
        manifold: ManifoldId::Torus(n),
        resolutions: vec![side; n],
        nodes,
        points,
        weights: vec![weight; total],
        axis_weights: vec![vec![h; side]; n],
        axes,
    })
}

/// Tensor grid on S^3 in the coordinates (φ1, φ2, φ3) ∈ [0,π]×[0,π]×[0,2π].
pub fn make_sphere3_grid(n1: usize, n2: usize, n3: usize) -> Result<BoundaryGrid> {
    if n1 < 4 || n2 < 4 || n3 < 4 {
        return Err(LabError::Parameter(format!(
            "sphere3 resolutions must be at least 4, got ({n1},{n2},{n3})"
        )));
    }
    if n1 % 2 != 0 || n2 % 2 != 0 {
        return Err(LabError::Parameter(
            "sphere3 resolutions N1, N2 must be even so no node lies on z1 = 0".into(),
        ));
    }
    let r1 = gauss_legendre(n1, 0.0, PI);
    let r2 = gauss_legendre(n2, 0.0, PI);
    let h3 = 2.0 * PI / n3 as f64;
    let ax3: Vec<f64> = (0..n3).map(|l| (l as f64 + 0.5) * h3).collect();
    let total = n1 * n2 * n3;
    let mut nodes = Vec::with_capacity(total * 3);
    let mut points = Vec::with_capacity(total * 2);
    let mut weights = Vec::with_capacity(total);
    for &(p1, w1) in &r1 {
        for &(p2, w2) in &r2 {
            let dens = p1.sin().powi(2) * p2.sin();
            for &p3 in &ax3 {
                nodes.extend_from_slice(&[p1, p2, p3]);
                points.extend_from_slice(&sphere_point(p1, p2, p3));
                weights.push(w1 * w2 * h3 * dens);
            }
        }
    }
    Ok(BoundaryGrid {
        manifold: ManifoldId::Sphere3,
        resolutions: vec![n1, n2, n3],
        nodes,
        points,
        weights,
        axes: vec![
            r1.iter().map(|p| p.0).collect(),
            r2.iter().map(|p| p.0).collect(),
            ax3,
        ],
        axis_weights: vec![
            r1.iter().map(|p| p.1).collect(),
            r2.iter().map(|p| p.1).collect(),
            vec![h3; n3],
        ],
    })
}

fn check_len(grid: &BoundaryGrid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(LabError::GridMismatch { field: len, grid: grid.len() });
    }
    Ok(())
}

/// Σ f(node)·weight(node).
pub fn integrate(grid: &BoundaryGrid, f: &BoundaryField) -> Result<C64> {
    integrate_values(grid, f.values())
}

pub fn integrate_values(grid: &BoundaryGrid, values: &[C64]) -> Result<C64> {
    check_len(grid, values.len())?;
    let terms: Vec<C64> = values.iter().zip(&grid.weights).map(|(v, w)| v * w).collect();
    Ok(pairwise_sum_c(&terms))
}

pub fn integrate_real(grid: &BoundaryGrid, values: &[f64]) -> Result<f64> {
    check_len(grid, values.len())?;
    let terms: Vec<f64> = values.iter().zip(&grid.weights).map(|(v, w)| v * w).collect();
    Ok(pairwise_sum(&terms))
}

/// Hermitian inner product ⟨a, b⟩ = ∫ a b̄ dσ on the grid.
pub fn inner(grid: &BoundaryGrid, a: &[C64], b: &[C64]) -> Result<C64> {
    check_len(grid, a.len())?;
    check_len(grid, b.len())?;
    let terms: Vec<C64> = a
        .iter()
        .zip(b)
        .zip(&grid.weights)
        .map(|((x, y), w)| x * y.conj() * w)
        .collect();
    Ok(pairwise_sum_c(&terms))
}

pub fn l2_norm(grid: &BoundaryGrid, a: &[C64]) -> Result<f64> {
    Ok(inner(grid, a, a)?.re.max(0.0).sqrt())
}

/// ⟨ζ, η⟩ = Σ ζ_j η̄_j.
pub fn hermitian(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

/// d(ζ, η) = |1 − ⟨ζ, η⟩|^{1/2}.
pub fn metric_distance(zeta: &[C64], eta: &[C64]) -> f64 {
    (C64::new(1.0, 0.0) - hermitian(zeta, eta)).norm().sqrt()
}

/// Q_δ(η) = {ζ ∈ S³ : d(ζ, η) < δ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBall {
    pub center: [C64; 2],
    pub radius: f64,
}

impl MetricBall {
    pub fn new(center: [C64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= SQRT_2 + 1e-12) {
            return Err(LabError::Parameter(format!("ball radius {radius} outside (0, √2]")));
        }
        let norm = (center[0].norm_sqr() + center[1].norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(LabError::Parameter(format!("ball center not on S³ (|η| = {norm})")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        metric_distance(z, &self.center) < self.radius
    }

    /// Node indices of `grid` inside the ball.
    pub fn mask(&self, grid: &BoundaryGrid) -> Vec<usize> {
        (0..grid.len()).filter(|&i| self.contains(grid.point(i))).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallVolume {
    pub volume: f64,
    pub node_count: usize,
    /// BALL_VOLUME_CONSTANT · δ⁴.
    pub predicted: f64,
    pub under_resolved: bool,
}

/// σ(Q_δ(η)) by masking grid nodes.
pub fn ball_volume(grid: &BoundaryGrid, ball: &MetricBall) -> Result<BallVolume> {
    if grid.manifold() != ManifoldId::Sphere3 {
        return Err(LabError::Parameter("metric balls live on sphere3 grids".into()));
    }
    let idx = ball.mask(grid);
    let terms: Vec<f64> = idx.iter().map(|&i| grid.weights[i]).collect();
    Ok(BallVolume {
        volume: pairwise_sum(&terms),
        node_count: idx.len(),
        predicted: BALL_VOLUME_CONSTANT * ball.radius.powi(4),
        under_resolved: idx.len() < MIN_BALL_NODES,
    })
}

/// Engulfing property on sampled nodes: if Q_δ(η1) and Q_δ(η2) share a node,
/// every node of Q_δ(η2) must lie in Q_{c1 δ}(η1). Returns `None` when the
/// balls share no node.
pub fn engulfing_holds(grid: &BoundaryGrid, eta1: [C64; 2], eta2: [C64; 2], delta: f64, c1: f64) -> Option<bool> {
    let overlap = (0..grid.len()).any(|i| {
        let z = grid.point(i);
        metric_distance(z, &eta1) < delta && metric_distance(z, &eta2) < delta
    });
    if !overlap {
        return None;
    }
    Some((0..grid.len()).all(|i| {
        let z = grid.point(i);
        metric_distance(z, &eta2) >= delta || metric_distance(z, &eta1) < c1 * delta
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForelliReport {
    pub sphere_integral: f64,
    pub disc_integral: f64,
    pub ratio: f64,
    /// Set when the disc integral fails to settle under refinement.
    pub divergent: bool,
}

/// Compare ∫_{S³} f(z1) dσ with ∫_D f dA. The ratio is the Forelli constant
/// c_F of the unnormalized measures (2π).
pub fn forelli_reduce(grid: &BoundaryGrid, f: &dyn Fn(C64) -> f64) -> Result<ForelliReport> {
    if grid.manifold() != ManifoldId::Sphere3 {
        return Err(LabError::Parameter("forelli_reduce needs a sphere3 grid".into()));
    }
    let vals: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i)[0])).collect();
    let sphere_integral = integrate_real(grid, &vals)?;
    let coarse = disc_integral(f, 128);
    let fine = disc_integral(f, 256);
    let divergent = !(coarse.0.is_finite() && fine.0.is_finite())
        || (fine.0 - coarse.0).abs() > 1e-6 * fine.0.abs().max(1e-300)
        || fine.1 > 1e-6 * fine.0.abs().max(1.0);
    Ok(ForelliReport {
        sphere_integral,
        disc_integral: fine.0,
        ratio: sphere_integral / fine.0,
        divergent,
    })
}

/// ∫_D f dA in polar coordinates: midpoint rule in angle, double-exponential
/// rule in the radius. Returns (value, accumulated error estimate).
fn disc_integral(f: &dyn Fn(C64) -> f64, angles: usize) -> (f64, f64) {
    let ht = 2.0 * PI / angles as f64;
    let mut vals = Vec::with_capacity(angles);
    let mut err = 0.0;
    for j in 0..angles {
        let t = (j as f64 + 0.5) * ht;
        let out = quadrature::double_exponential::integrate(|r| r * f(C64::from_polar(r, t)), 0.0, 1.0, 1e-13);
        vals.push(out.integral * ht);
        err += out.error_estimate * ht;
    }
    (pairwise_sum(&vals), err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_grid_shapes_and_weights() {
        let g = make_torus_grid(1, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.total_weight() - 2.0 * PI).abs() < 1e-14);
        let g = make_torus_grid(2, 4).unwrap();
        assert_eq!(g.len(), 16);
        for w in g.weights() {
            assert!((w - (PI / 2.0).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn torus_grid_avoids_diagonal() {
        let g = make_torus_grid(2, 64).unwrap();
        for i in 0..g.len() {
            let x = g.node(i);
            assert!((x[0] - x[1]).abs() > 1e-3);
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(make_torus_grid(0, 8).is_err());
        assert!(make_torus_grid(2, 6).is_ok());
        assert!(make_torus_grid(2, 7).is_err());
        assert!(make_torus_grid(2, 2).is_err());
        assert!(make_sphere3_grid(3, 8, 8).is_err());
        assert!(make_sphere3_grid(9, 8, 8).is_err());
    }

    #[test]
    fn sphere_points_on_sphere() {
        let g = make_sphere3_grid(8, 8, 8).unwrap();
        for i in 0..g.len() {
            let z = g.point(i);
            assert!((z[0].norm_sqr() + z[1].norm_sqr() - 1.0).abs() < 1e-12);
            assert!(z[0].norm() > 1e-3 && z[1].norm() > 1e-3);
        }
    }

    #[test]
    fn sphere_params_invert_points() {
        let z = sphere_point(0.7, 2.1, 5.0);
        let x = sphere_params(&z);
        assert!((x[0] - 0.7).abs() < 1e-12 && (x[1] - 2.1).abs() < 1e-12 && (x[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn locate_finds_nodes() {
        let g = make_sphere3_grid(8, 6, 10).unwrap();
        for i in [0, 17, 250, g.len() - 1] {
            assert_eq!(g.locate(g.point(i), 1e-12), Some(i));
        }
        let t = make_torus_grid(2, 8).unwrap();
        for i in [0, 9, 63] {
            assert_eq!(t.locate(t.point(i), 1e-12), Some(i));
        }
    }

    #[test]
    fn metric_basic_values() {
        let a = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let b = [C64::new(-1.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(metric_distance(&a, &a), 0.0);
        assert!((metric_distance(&a, &b) - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn ball_radius_validation() {
        let c = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!(MetricBall::new(c, 1.5).is_err());
        assert!(MetricBall::new(c, 0.0).is_err());
        assert!(MetricBall::new([C64::new(2.0, 0.0), C64::new(0.0, 0.0)], 0.5).is_err());
    }

    #[test]
    fn document_roundtrip() {
        let g = make_torus_grid(2, 8).unwrap();
        let doc = g.to_document();
        let text = serde_json::to_string(&doc).unwrap();
        let back: GridDocument = serde_json::from_str(&text).unwrap();
        let g2 = BoundaryGrid::from_document(&back).unwrap();
        assert_eq!(g2.len(), g.len());
        let mut bad = back.clone();
        bad.weights[3] += 1.0;
        assert!(BoundaryGrid::from_document(&bad).is_err());
    }
}
