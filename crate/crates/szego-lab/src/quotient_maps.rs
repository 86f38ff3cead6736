//! Proper holomorphic covering maps with their deck groups, and the pullback
//! density w = sqrt(det Re(A Ā^t)) with A = J_R Z · J_C Φ.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::boundary_geometry::{torus_mass, BoundaryGrid, ManifoldId, SPHERE3_MASS};
use crate::error::{LabError, Result};
use crate::numeric::{pairwise_sum, signed_freq, torus_coefficients, torus_synthesize, unravel, C64};
use crate::szego_core::BoundaryField;

/// Determinants above -DET_CLAMP are clamped to zero.
pub const DET_CLAMP: f64 = 1e-12;
pub const INVARIANCE_TOL: f64 = 1e-10;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Rotation,
    Permutation,
    Composite,
}

/// Unitary n×n matrix acting by z ↦ U z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub n: usize,
    /// Row-major entries.
    pub matrix: Vec<C64>,
    pub kind: GroupKind,
}

impl GroupElement {
    pub fn new(n: usize, matrix: Vec<C64>, kind: GroupKind) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(LabError::Configuration("group element has wrong shape".into()));
        }
        let g = Self { n, matrix, kind };
        let dev = g.compose(&g.adjoint()).distance(&Self::identity(n));
        if dev > 1e-12 {
            return Err(LabError::Configuration(format!("group element is not unitary (deviation {dev:e})")));
        }
        Ok(g)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = vec![c(0.0); n * n];
        for i in 0..n {
            m[i * n + i] = c(1.0);
        }
        Self { n, matrix: m, kind: GroupKind::Rotation }
    }

    /// Diagonal rotation z_j ↦ e^{2πi k_j / q_j} z_j.
    pub fn rotation(steps: &[(i64, i64)]) -> Self {
        let n = steps.len();
        let mut m = vec![c(0.0); n * n];
        for (j, &(k, q)) in steps.iter().enumerate() {
            m[j * n + j] = C64::from_polar(1.0, 2.0 * PI * k as f64 / q as f64);
        }
        Self { n, matrix: m, kind: GroupKind::Rotation }
    }

    /// Coordinate permutation (Uz)_i = z_{perm[i]}.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = vec![c(0.0); n * n];
        for (i, &p) in perm.iter().enumerate() {
            m[i * n + p] = c(1.0);
        }
        Self { n, matrix: m, kind: GroupKind::Permutation }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[i * self.n + j]
    }

    pub fn apply(&self, z: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j) * z[j]).sum())
            .collect()
    }

    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n;
        let mut m = vec![c(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..n).map(|l| self.entry(i, l) * other.entry(l, j)).sum();
            }
        }
        let kind = if self.kind == other.kind { self.kind } else { GroupKind::Composite };
        Self { n, matrix: m, kind }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut m = vec![c(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.entry(j, i).conj();
            }
        }
        Self { n, matrix: m, kind: self.kind }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix.iter().zip(&other.matrix).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// (perm, phases) with (Uz)_i = phases[i] z_{perm[i]}, if U is monomial.
    pub fn as_monomial(&self) -> Option<(Vec<usize>, Vec<C64>)> {
        let n = self.n;
        let mut perm = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for i in 0..n {
            let nz: Vec<usize> = (0..n).filter(|&j| self.entry(i, j).norm() > 1e-12).collect();
            if nz.len() != 1 {
                return None;
            }
            perm.push(nz[0]);
            phases.push(self.entry(i, nz[0]));
        }
        Some((perm, phases))
    }
}

/// Finite group of unitaries, closed under products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    elements: Vec<GroupElement>,
}

impl Group {
    /// Closure of the generators under products.
    pub fn generate(n: usize, generators: &[GroupElement]) -> Result<Self> {
        let mut elements = vec![GroupElement::identity(n)];
        let mut frontier = elements.clone();
        while let Some(g) = frontier.pop() {
            for s in generators {
                if s.n != n {
                    return Err(LabError::Configuration("generator dimension mismatch".into()));
                }
                let h = s.compose(&g);
                if !elements.iter().any(|e| e.distance(&h) < 1e-10) {
                    if elements.len() >= 4096 {
                        return Err(LabError::Configuration("group generated by the given matrices is not finite".into()));
                    }
                    elements.push(h.clone());
                    frontier.push(h);
                }
            }
        }
        let group = Self { elements };
        group.verify()?;
        Ok(group)
    }

    pub fn trivial(n: usize) -> Self {
        Self { elements: vec![GroupElement::identity(n)] }
    }

    /// S₂ acting on C² by swapping coordinates.
    pub fn swap2() -> Self {
        Self::generate(2, &[GroupElement::permutation(&[1, 0])]).expect("swap group")
    }

    /// Cyclic rotations z ↦ e^{2πi/q} z on C.
    pub fn cyclic(q: usize) -> Self {
        Self::generate(1, &[GroupElement::rotation(&[(1, q as i64)])]).expect("cyclic group")
    }

    /// Z_m × Z_k acting diagonally on C².
    pub fn rotations2(m: usize, k: usize) -> Self {
        Self::generate(
            2,
            &[
                GroupElement::rotation(&[(1, m as i64), (0, 1)]),
                GroupElement::rotation(&[(0, 1), (1, k as i64)]),
            ],
        )
        .expect("rotation group")
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].n
    }

    fn find(&self, g: &GroupElement) -> bool {
        self.elements.iter().any(|e| e.distance(g) < 1e-10)
    }

    /// Identity, inverses and closure, by matrix products.
    pub fn verify(&self) -> Result<()> {
        let n = self.dim();
        if !self.find(&GroupElement::identity(n)) {
            return Err(LabError::Configuration("group lacks the identity".into()));
        }
        for a in &self.elements {
            if !self.find(&a.adjoint()) {
                return Err(LabError::Configuration("group lacks an inverse".into()));
            }
            for b in &self.elements {
                if !self.find(&a.compose(b)) {
                    return Err(LabError::Configuration("group is not closed".into()));
                }
            }
        }
        Ok(())
    }
}

/// Closed-form family of covering maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "map")]
pub enum MapId {
    Identity { n: usize },
    /// (z1, z2) ↦ (z1 + z2, z1 z2).
    Symmetrize2,
    /// (z1, z2) ↦ (z1^m, z2^k).
    Power { m: u32, k: u32 },
    /// z ↦ Σ_j coeffs[j] z^j on C.
    Polynomial1d { coeffs: Vec<f64> },
    /// z ↦ U z.
    LinearUnitary { matrix: Vec<C64>, n: usize },
    /// outer ∘ inner.
    Composite { outer: Box<MapId>, inner: Box<MapId> },
}

impl MapId {
    pub fn dim(&self) -> usize {
        match self {
            MapId::Identity { n } => *n,
            MapId::Symmetrize2 | MapId::Power { .. } => 2,
            MapId::Polynomial1d { .. } => 1,
            MapId::LinearUnitary { n, .. } => *n,
            MapId::Composite { inner, .. } => inner.dim(),
        }
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        match self {
            MapId::Identity { .. } => z.to_vec(),
            MapId::Symmetrize2 => vec![z[0] + z[1], z[0] * z[1]],
            MapId::Power { m, k } => vec![z[0].powu(*m), z[1].powu(*k)],
            MapId::Polynomial1d { coeffs } => vec![coeffs.iter().rev().fold(c(0.0), |acc, &a| acc * z[0] + a)],
            MapId::LinearUnitary { matrix, n } => (0..*n)
                .map(|i| (0..*n).map(|j| matrix[i * n + j] * z[j]).sum())
                .collect(),
            MapId::Composite { outer, inner } => outer.eval(&inner.eval(z)),
        }
    }

    /// J_C Φ with entry (i, j) = ∂φ_j/∂z_i, row-major.
    pub fn jacobian(&self, z: &[C64]) -> Vec<C64> {
        match self {
            MapId::Identity { n } => GroupElement::identity(*n).matrix,
            MapId::Symmetrize2 => vec![c(1.0), z[1], c(1.0), z[0]],
            MapId::Power { m, k } => vec![
                z[0].powu(m - 1) * *m as f64,
                c(0.0),
                c(0.0),
                z[1].powu(k - 1) * *k as f64,
            ],
            MapId::Polynomial1d { coeffs } => {
                let d = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(c(0.0), |acc, (j, &a)| acc * z[0] + a * j as f64);
                vec![d]
            }
            MapId::LinearUnitary { matrix, n } => {
                let mut t = vec![c(0.0); n * n];
                for i in 0..*n {
                    for j in 0..*n {
                        t[i * n + j] = matrix[j * n + i];
                    }
                }
                t
            }
            MapId::Composite { outer, inner } => {
                let n = inner.dim();
                let ji = inner.jacobian(z);
                let jo = outer.jacobian(&inner.eval(z));
                let mut out = vec![c(0.0); n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = (0..n).map(|l| ji[i * n + l] * jo[l * n + j]).sum();
                    }
                }
                out
            }
        }
    }
}

/// Covering map together with its deck group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperMapSpec {
    pub map: MapId,
    pub group: Group,
}

/// The unitary F(ζ) = ((ζ1+ζ2)/√2, (iζ1−iζ2)/√2) taking Ω_{2,2} to the minimal ball.
pub fn minimal_ball_unitary() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![c(s), c(s), C64::new(0.0, s), C64::new(0.0, -s)]
}

impl ProperMapSpec {
    pub fn new(map: MapId, group: Group) -> Result<Self> {
        if map.dim() != group.dim() {
            return Err(LabError::Configuration("map and group dimensions differ".into()));
        }
        Ok(Self { map, group })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: MapId::Identity { n }, group: Group::trivial(n) }
    }

    pub fn symmetrized_bidisc() -> Self {
        Self { map: MapId::Symmetrize2, group: Group::swap2() }
    }

    /// (z1^m, z2^k) with deck group Z_m × Z_k; on S³ this covers Ω_{m,k}, on T² a product of power maps.
    pub fn power(m: u32, k: u32) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(LabError::Parameter("power map exponents must be at least 1".into()));
        }
        Ok(Self { map: MapId::Power { m, k }, group: Group::rotations2(m as usize, k as usize) })
    }

    /// z ↦ z^m on the disc with deck group Z_m.
    pub fn power1d(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(LabError::Parameter("power exponent must be at least 1".into()));
        }
        let mut coeffs = vec![0.0; m as usize + 1];
        coeffs[m as usize] = 1.0;
        Ok(Self { map: MapId::Polynomial1d { coeffs }, group: Group::cyclic(m as usize) })
    }

    /// A univalent polynomial map of the disc (trivial deck group).
    pub fn conformal1d(coeffs: Vec<f64>) -> Self {
        Self { map: MapId::Polynomial1d { coeffs }, group: Group::trivial(1) }
    }

    pub fn minimal_ball() -> Self {
        Self {
            map: MapId::Composite {
                outer: Box::new(MapId::LinearUnitary { matrix: minimal_ball_unitary(), n: 2 }),
                inner: Box::new(MapId::Power { m: 2, k: 2 }),
            },
            group: Group::rotations2(2, 2),
        }
    }

    /// Post-compose the map with a unitary.
    pub fn post_compose(&self, u: &GroupElement) -> Self {
        Self {
            map: MapId::Composite {
                outer: Box::new(MapId::LinearUnitary { matrix: u.matrix.clone(), n: u.n }),
                inner: Box::new(self.map.clone()),
            },
            group: self.group.clone(),
        }
    }

    /// max |Φ(τz) − Φ(z)| over grid nodes and group elements.
    pub fn invariance_residual(&self, grid: &BoundaryGrid) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            let z = grid.point(i);
            let fz = self.map.eval(z);
            for g in self.group.elements() {
                let fgz = self.map.eval(&g.apply(z));
                for (a, b) in fgz.iter().zip(&fz) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
        worst
    }
}

/// J_R Z at parameters x: rows ∂z/∂x_i, row-major d×n.
pub fn real_param_jacobian_at(manifold: ManifoldId, x: &[f64]) -> Vec<C64> {
    match manifold {
        ManifoldId::Torus(n) => {
            let mut m = vec![c(0.0); n * n];
            for j in 0..n {
                m[j * n + j] = C64::new(0.0, 1.0) * C64::from_polar(1.0, x[j]);
            }
            m
        }
        ManifoldId::Sphere3 => {
            let (s1, c1) = x[0].sin_cos();
            let (s2, c2) = x[1].sin_cos();
            let (s3, c3) = x[2].sin_cos();
            let e3 = C64::new(c3, s3);
            vec![
                C64::new(-s1, c1 * c2),
                e3 * (c1 * s2),
                C64::new(0.0, -s1 * s2),
                e3 * (s1 * c2),
                c(0.0),
                C64::new(-s3, c3) * (s1 * s2),
            ]
        }
    }
}

/// J_R Z at a grid node.
pub fn real_param_jacobian(grid: &BoundaryGrid, node: usize) -> Vec<C64> {
    real_param_jacobian_at(grid.manifold(), grid.node(node))
}

fn param_volume_element(manifold: ManifoldId, x: &[f64]) -> f64 {
    match manifold {
        ManifoldId::Torus(_) => 1.0,
        ManifoldId::Sphere3 => x[0].sin().powi(2) * x[1].sin(),
    }
}

/// Density of Φ*(surface measure) with respect to σ at parameters x.
/// The determinant gives the density with respect to the parameter measure;
/// dividing by the σ volume element converts it.
pub fn density_at(map: &MapId, manifold: ManifoldId, x: &[f64]) -> Result<f64> {
    let d = manifold.param_dim();
    let n = manifold.complex_dim();
    let jr = real_param_jacobian_at(manifold, x);
    let z: Vec<C64> = match manifold {
        ManifoldId::Torus(_) => x.iter().map(|&t| C64::from_polar(1.0, t)).collect(),
        ManifoldId::Sphere3 => crate::boundary_geometry::sphere_point(x[0], x[1], x[2]).to_vec(),
    };
    let jc = map.jacobian(&z);
    let mut a = vec![c(0.0); d * n];
    for i in 0..d {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|l| jr[i * n + l] * jc[l * n + j]).sum();
        }
    }
    let m = DMatrix::from_fn(d, d, |i, k| {
        (0..n).map(|j| a[i * n + j] * a[k * n + j].conj()).sum::<C64>().re
    });
    let det = m.clone().lu().determinant();
    let scale = (0..d).map(|i| m[(i, i)].abs()).product::<f64>().max(1.0);
    let det = if det < 0.0 {
        if det < -DET_CLAMP * scale {
            return Err(LabError::NumericalConsistency(format!(
                "Re(A Ā^t) has negative determinant {det:e} at {x:?}"
            )));
        }
        0.0
    } else {
        det
    };
    Ok(det.sqrt() / param_volume_element(manifold, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    JacobianPipeline,
    ClosedForm,
    User,
}

pub type RealEvaluator = Arc<dyn Fn(&[C64]) -> f64 + Send + Sync>;

/// Nonnegative weight on a grid.
#[derive(Clone)]
pub struct WeightField {
    values: Vec<f64>,
    provenance: Provenance,
    evaluator: Option<RealEvaluator>,
}

impl fmt::Debug for WeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightField")
            .field("len", &self.values.len())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl WeightField {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LabError::Precondition(format!("weight value {} at node {i} is not a nonnegative real", values[i])));
        }
        Ok(Self { values, provenance, evaluator: None })
    }

    pub fn from_fn<F>(grid: &BoundaryGrid, provenance: Provenance, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> f64 + Send + Sync + 'static,
    {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        let mut w = Self::new(values, provenance)?;
        w.evaluator = Some(Arc::new(f));
        Ok(w)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Complex field view, keeping the analytic evaluator.
    pub fn to_field(&self) -> BoundaryField {
        let f = BoundaryField::from_values(self.values.iter().map(|&v| c(v)).collect()).expect("finite weights");
        match &self.evaluator {
            Some(e) => {
                let e = e.clone();
                f.with_evaluator(Arc::new(move |z: &[C64]| c(e(z))))
            }
            None => f,
        }
    }
}

/// Pullback density of `map` on `grid` by the Jacobian pipeline.
pub fn density_from_jacobian(map: &ProperMapSpec, grid: &BoundaryGrid) -> Result<WeightField> {
    if map.map.dim() != grid.complex_dim() {
        return Err(LabError::Parameter("map dimension differs from grid dimension".into()));
    }
    let manifold = grid.manifold();
    let values = (0..grid.len())
        .map(|i| density_at(&map.map, manifold, grid.node(i)))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(i) = values.iter().position(|&v| v <= 0.0) {
        return Err(LabError::NumericalConsistency(format!("pipeline density vanishes at node {i}")));
    }
    let m = map.map.clone();
    let eval: RealEvaluator = Arc::new(move |z: &[C64]| {
        let x: Vec<f64> = match manifold {
            ManifoldId::Torus(_) => z.iter().map(|c| c.arg()).collect(),
            ManifoldId::Sphere3 => crate::boundary_geometry::sphere_params(z).to_vec(),
        };
        density_at(&m, manifold, &x).unwrap_or(f64::NAN)
    });
    let w = WeightField { values, provenance: Provenance::JacobianPipeline, evaluator: Some(eval) };
    let (ok, dev) = is_invariant(grid, &w.to_field(), &map.group, INVARIANCE_TOL * w.values.iter().copied().fold(1.0, f64::max))?;
    if !ok {
        return Err(LabError::NumericalConsistency(format!("pipeline density is not G-invariant (deviation {dev:e})")));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "domain")]
pub enum DomainId {
    SymmetrizedBidisc,
    Thullen { m: u32, k: u32 },
    MinimalBall,
    /// w = |φ′| on T for φ(z) = Σ coeffs[j] z^j.
    Conformal1d { coeffs: Vec<f64> },
    /// (z1^m, z2^k) on T²: w = mk.
    ProductPower { m: u32, k: u32 },
}

impl DomainId {
    pub fn parse(label: &str, m: u32, k: u32) -> Result<Self> {
        match label {
            "symmetrized_bidisc" => Ok(Self::SymmetrizedBidisc),
            "thullen" => Ok(Self::Thullen { m, k }),
            "minimal_ball" => Ok(Self::MinimalBall),
            "product_power" => Ok(Self::ProductPower { m, k }),
            _ => Err(LabError::Parameter(format!("unknown domain id {label:?}"))),
        }
    }

    pub fn manifold(&self) -> ManifoldId {
        match self {
            Self::SymmetrizedBidisc | Self::ProductPower { .. } => ManifoldId::Torus(2),
            Self::Thullen { .. } | Self::MinimalBall => ManifoldId::Sphere3,
            Self::Conformal1d { .. } => ManifoldId::Torus(1),
        }
    }

    /// The covering map whose pullback density this closed form describes.
    pub fn map_spec(&self) -> Result<ProperMapSpec> {
        match self {
            Self::SymmetrizedBidisc => Ok(ProperMapSpec::symmetrized_bidisc()),
            Self::Thullen { m, k } | Self::ProductPower { m, k } => ProperMapSpec::power(*m, *k),
            Self::MinimalBall => Ok(ProperMapSpec::minimal_ball()),
            Self::Conformal1d { coeffs } => Ok(ProperMapSpec::conformal1d(coeffs.clone())),
        }
    }
}

/// sqrt(2 − 2cos t + sin² t), the symmetrized-bidisc density at θ1 − θ2 = t,
/// evaluated as sqrt(4 sin²(t/2) + sin² t) to stay accurate near t = 0.
pub fn bidisc_density(t: f64) -> f64 {
    (4.0 * (0.5 * t).sin().powi(2) + t.sin().powi(2)).sqrt()
}

/// mk|z1|^{m−1}|z2|^{k−1}(m²|z1|^{2m−2}|z2|² + k²|z1|²|z2|^{2k−2})^{1/2}.
pub fn thullen_density(m: u32, k: u32, r1: f64, r2: f64) -> f64 {
    let (mf, kf) = (m as f64, k as f64);
    let inner = mf * mf * r1.powi(2 * m as i32 - 2) * r2 * r2 + kf * kf * r1 * r1 * r2.powi(2 * k as i32 - 2);
    mf * kf * r1.powi(m as i32 - 1) * r2.powi(k as i32 - 1) * inner.sqrt()
}

pub fn closed_form_evaluator(domain: &DomainId) -> Result<RealEvaluator> {
    Ok(match domain.clone() {
        DomainId::SymmetrizedBidisc => Arc::new(|z: &[C64]| bidisc_density(z[0].arg() - z[1].arg())),
        DomainId::Thullen { m, k } => {
            if m == 0 || k == 0 {
                return Err(LabError::Parameter("Thullen exponents must be at least 1".into()));
            }
            Arc::new(move |z: &[C64]| thullen_density(m, k, z[0].norm(), z[1].norm()))
        }
        DomainId::MinimalBall => Arc::new(|z: &[C64]| thullen_density(2, 2, z[0].norm(), z[1].norm())),
        DomainId::Conformal1d { coeffs } => {
            let map = MapId::Polynomial1d { coeffs };
            Arc::new(move |z: &[C64]| map.jacobian(z)[0].norm())
        }
        DomainId::ProductPower { m, k } => {
            if m == 0 || k == 0 {
                return Err(LabError::Parameter("power exponents must be at least 1".into()));
            }
            Arc::new(move |_z: &[C64]| (m * k) as f64)
        }
    })
}

/// Direct evaluation of the closed-form densities.
pub fn closed_form_density(domain: &DomainId, grid: &BoundaryGrid) -> Result<WeightField> {
    if domain.manifold() != grid.manifold() {
        return Err(LabError::Parameter(format!(
            "domain lives on {} but grid is {}",
            domain.manifold().label(),
            grid.manifold().label()
        )));
    }
    let e = closed_form_evaluator(domain)?;
    let values = (0..grid.len()).map(|i| e(grid.point(i))).collect();
    let mut w = WeightField::new(values, Provenance::ClosedForm)?;
    w.evaluator = Some(e);
    Ok(w)
}

/// Samples of f∘τ at the grid nodes, i.e. f(τ z_i).
///
/// Resolution order: exact node permutation, analytic evaluator, and on
/// torus grids exact trigonometric interpolation for monomial unitaries.
pub fn act(grid: &BoundaryGrid, f: &BoundaryField, g: &GroupElement) -> Result<Vec<C64>> {
    if f.len() != grid.len() {
        return Err(LabError::GridMismatch { field: f.len(), grid: grid.len() });
    }
    let images: Option<Vec<usize>> = (0..grid.len()).map(|i| grid.locate(&g.apply(grid.point(i)), 1e-9)).collect();
    if let Some(map) = images {
        return Ok(map.iter().map(|&j| f.values()[j]).collect());
    }
    if let Some(e) = f.evaluator() {
        return Ok((0..grid.len()).map(|i| e(&g.apply(grid.point(i)))).collect());
    }
    match grid.manifold() {
        ManifoldId::Torus(n) => {
            if g.kind == GroupKind::Rotation {
                return Err(LabError::Configuration(format!(
                    "rotation does not permute the torus grid nodes; N = {} must be a multiple of the rotation order",
                    grid.torus_side().unwrap_or(0)
                )));
            }
            let (perm, phases) = g.as_monomial().ok_or_else(|| {
                LabError::Configuration("group element leaves the torus".into())
            })?;
            Ok(torus_monomial_action(grid, f.values(), n, &perm, &phases))
        }
        ManifoldId::Sphere3 => Err(LabError::Configuration(
            "group element moves sphere nodes off the grid and the field has no analytic evaluator".into(),
        )),
    }
}

fn torus_monomial_action(grid: &BoundaryGrid, values: &[C64], n: usize, perm: &[usize], phases: &[C64]) -> Vec<C64> {
    let side = grid.torus_side().unwrap_or(0);
    let offsets = grid.torus_offsets();
    let coeffs = torus_coefficients(values, n, side, &offsets);
    let beta: Vec<f64> = phases.iter().map(|p| p.arg()).collect();
    let mut out = vec![c(0.0); coeffs.len()];
    let mut idx = vec![0usize; n];
    let mut new_idx = vec![0usize; n];
    for (flat, v) in coeffs.iter().enumerate() {
        unravel(flat, n, side, &mut idx);
        // f(τθ) = Σ c_k e^{ik·β} e^{i Σ_i k_i θ_{perm[i]}}
        let mut phase = 0.0;
        for i in 0..n {
            let k = signed_freq(idx[i], side);
            phase += k as f64 * beta[i];
            new_idx[perm[i]] = idx[i];
        }
        out[crate::numeric::ravel(&new_idx, side)] += v * C64::from_polar(1.0, phase);
    }
    torus_synthesize(&out, n, side, &offsets)
}

/// (1/|G|) Σ_τ f∘τ.
pub fn symmetrize(grid: &BoundaryGrid, f: &BoundaryField, group: &Group) -> Result<BoundaryField> {
    let mut acc = vec![c(0.0); grid.len()];
    for g in group.elements() {
        for (a, v) in acc.iter_mut().zip(act(grid, f, g)?) {
            *a += v;
        }
    }
    let inv = 1.0 / group.order() as f64;
    let out = BoundaryField::from_values(acc.into_iter().map(|v| v * inv).collect())?;
    Ok(match f.evaluator() {
        Some(e) => {
            let e = e.clone();
            let elems = group.elements().to_vec();
            out.with_evaluator(Arc::new(move |z: &[C64]| {
                elems.iter().map(|g| e(&g.apply(z))).sum::<C64>() * inv
            }))
        }
        None => out,
    })
}

/// (max_τ,i |f(τ z_i) − f(z_i)| ≤ tol, that maximum).
pub fn is_invariant(grid: &BoundaryGrid, f: &BoundaryField, group: &Group, tol: f64) -> Result<(bool, f64)> {
    let mut worst = 0.0f64;
    for g in group.elements() {
        let moved = act(grid, f, g)?;
        for (a, b) in moved.iter().zip(f.values()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok((worst <= tol, worst))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassCheck {
    /// (1/|G|) ∫_{Γ_X} w dσ.
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub relative_error: Option<f64>,
    pub oracle_free: bool,
}

/// Surface mass of ∂Ω_{m,k} from its Reinhardt profile (cos^m t, sin^k t).
pub fn reinhardt_boundary_mass(m: u32, k: u32) -> f64 {
    let (mf, kf) = (m as f64, k as f64);
    let f = |t: f64| {
        let (s, c) = t.sin_cos();
        let r1 = c.powi(m as i32);
        let r2 = s.powi(k as i32);
        let d1 = mf * c.powi(m as i32 - 1) * s;
        let d2 = kf * s.powi(k as i32 - 1) * c;
        r1 * r2 * (d1 * d1 + d2 * d2).sqrt()
    };
    4.0 * PI * PI * quadrature::double_exponential::integrate(f, 0.0, PI / 2.0, 1e-14).integral
}

/// Independent estimate of the surface mass of Γ_Ω, when one is known.
pub fn boundary_mass_oracle(map: &MapId, manifold: ManifoldId) -> Option<f64> {
    match (map, manifold) {
        (MapId::Identity { n }, ManifoldId::Torus(_)) => Some(torus_mass(*n)),
        (MapId::Identity { .. }, ManifoldId::Sphere3) => Some(SPHERE3_MASS),
        (MapId::Polynomial1d { coeffs }, ManifoldId::Torus(1)) => {
            let nz: Vec<usize> = (0..coeffs.len()).filter(|&j| coeffs[j] != 0.0).collect();
            // z ↦ a z^m covers the circle of radius |a|.
            (nz.len() == 1).then(|| 2.0 * PI * coeffs[nz[0]].abs())
        }
        (MapId::Power { .. }, ManifoldId::Torus(2)) => Some(torus_mass(2)),
        (MapId::Power { m, k }, ManifoldId::Sphere3) => Some(reinhardt_boundary_mass(*m, *k)),
        (MapId::Composite { outer, inner }, _) => match outer.as_ref() {
            MapId::LinearUnitary { .. } => boundary_mass_oracle(inner, manifold),
            _ => None,
        },
        _ => None,
    }
}

/// (1/|G|) ∫ w dσ against an independent mass of Γ_Ω.
pub fn pushforward_mass_check(map: &ProperMapSpec, grid: &BoundaryGrid, w: &WeightField) -> Result<MassCheck> {
    if w.len() != grid.len() {
        return Err(LabError::GridMismatch { field: w.len(), grid: grid.len() });
    }
    let terms: Vec<f64> = w.values().iter().zip(grid.weights()).map(|(a, b)| a * b).collect();
    let lhs = pairwise_sum(&terms) / map.group.order() as f64;
    let rhs = boundary_mass_oracle(&map.map, grid.manifold());
    Ok(MassCheck {
        lhs,
        rhs,
        relative_error: rhs.map(|r| (lhs - r).abs() / r.abs()),
        oracle_free: rhs.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_geometry::{make_sphere3_grid, make_torus_grid};

    #[test]
    fn groups_have_expected_orders() {
        assert_eq!(Group::swap2().order(), 2);
        assert_eq!(Group::cyclic(3).order(), 3);
        assert_eq!(Group::rotations2(2, 3).order(), 6);
        assert!(Group::rotations2(2, 3).verify().is_ok());
    }

    #[test]
    fn non_unitary_rejected() {
        assert!(GroupElement::new(1, vec![c(2.0)], GroupKind::Rotation).is_err());
    }

    #[test]
    fn torus_jacobian_is_diagonal() {
        let j = real_param_jacobian_at(ManifoldId::Torus(2), &[0.3, 1.1]);
        assert!((j[0] - C64::new(0.0, 1.0) * C64::from_polar(1.0, 0.3)).norm() < 1e-15);
        assert_eq!(j[1], c(0.0));
        assert_eq!(j[2], c(0.0));
    }

    #[test]
    fn sphere_jacobian_third_row() {
        let (p1, p2, p3) = (0.4, 1.3, 2.2f64);
        let j = real_param_jacobian_at(ManifoldId::Sphere3, &[p1, p2, p3]);
        assert_eq!(j[4], c(0.0));
        let want = C64::new(-p3.sin(), p3.cos()) * (p1.sin() * p2.sin());
        assert!((j[5] - want).norm() < 1e-15);
    }

    #[test]
    fn identity_density_is_one() {
        let g = make_torus_grid(1, 16).unwrap();
        let w = density_from_jacobian(&ProperMapSpec::identity(1), &g).unwrap();
        assert!(w.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        let s = make_sphere3_grid(8, 8, 8).unwrap();
        let w = density_from_jacobian(&ProperMapSpec::identity(2), &s).unwrap();
        assert!(w.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bidisc_density_at_antipodal_difference() {
        assert!((bidisc_density(PI) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn symmetrize_orbit_average() {
        let g = make_torus_grid(2, 8).unwrap();
        let f = BoundaryField::from_fn(&g, |z| z[0]).unwrap();
        let s = symmetrize(&g, &f, &Group::swap2()).unwrap();
        for i in 0..g.len() {
            let z = g.point(i);
            assert!((s.values()[i] - (z[0] + z[1]) * 0.5).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_incommensurate_with_grid_is_configuration_error() {
        let g = make_torus_grid(1, 8).unwrap();
        let f = BoundaryField::from_values(vec![c(1.0); 8]).unwrap();
        assert!(matches!(symmetrize(&g, &f, &Group::cyclic(3)), Err(LabError::Configuration(_))));
        assert!(symmetrize(&g, &f, &Group::cyclic(4)).is_ok());
    }

    #[test]
    fn reinhardt_mass_of_ball() {
        assert!((reinhardt_boundary_mass(1, 1) - SPHERE3_MASS).abs() < 1e-12);
    }
}
