//! Muckenhoupt A_p scans, endpoint witnesses and the boundary-layer integral
//! I(α, δ) = ∫_{E(δ)} (1 − |λ|²)^α dA(λ), E(δ) = {λ ∈ D : |1 − λ| < δ²}.
//!
//! A_p verdicts come from a dyadic shell test: for a weight μ with an
//! isolated zero or pole, the characteristic over shrinking balls stays
//! bounded exactly when both μ and μ^{−1/(p−1)} are integrable near the
//! singular set. With ln S_i the log-integral over the shell
//! [t₀2^{−i−1}, t₀2^{−i}], the factor is integrable when the tail log-ratio
//! ln S_{i+1} − ln S_i is negative. Self-similar shells make this ratio
//! insensitive to the per-shell quadrature error. Characteristics on the
//! ball families are still computed and reported.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissibility::Verdict;
use crate::boundary_geometry::{
    ball_volume, engulfing_holds, integrate_real, make_sphere3_grid, make_torus_grid, metric_distance, BoundaryGrid,
    ManifoldId, MetricBall, MIN_BALL_NODES,
};
use crate::error::{LabError, Result};
use crate::numeric::{gauss_legendre, linear_fit, pairwise_sum, C64};
use crate::quotient_maps::{bidisc_density, closed_form_density, density_from_jacobian, thullen_density, DomainId, ProperMapSpec};
use crate::szego_core::{project_sphere, project_torus, BoundaryField};

/// Dyadic arcs I_j, j = 0..=J, in the circle scans.
pub const DYADIC_LEVELS: usize = 14;
/// Number of dyadic shells in the integrability test.
pub const SHELL_DEPTH: usize = 36;
/// Shells averaged for the tail log-ratio.
pub const SHELL_TAIL: usize = 4;
/// Tail log-ratios closer to zero than this are inconclusive.
pub const SHELL_MARGIN: f64 = 1e-6;
/// Resolution cutoff ε around singular points in characteristic quadrature.
pub const CUTOFF: f64 = 2.0 * PI / 16_777_216.0;
/// Exponent search range for interval detection.
pub const P_LOWER: f64 = 1.0 + 1e-3;
pub const P_UPPER: f64 = 64.0;
/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_WIDTH: f64 = 0.01;
/// Relative spread under which endpoint ratios count as stable.
pub const STABLE_SPREAD: f64 = 0.02;
/// Minimum R² of the log-N fit for a growing ratio.
pub const GROWTH_R2: f64 = 0.9;
/// Jensen lower bound slack for log-characteristics.
const JENSEN_SLACK: f64 = 1e-9;

fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16, 0.0, 1.0))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + pairwise_sum(&shifted).ln()
}

fn push_panel(out: &mut Vec<f64>, lnf: &dyn Fn(f64) -> f64, a: f64, b: f64) {
    let len = b - a;
    for &(x, w) in gl16() {
        out.push(lnf(a + len * x) + (w * len).ln());
    }
}

/// Panels graded by halving toward the singular end `s` down to distance `eps`.
fn push_graded(out: &mut Vec<f64>, lnf: &dyn Fn(f64) -> f64, s: f64, e: f64, eps: f64) {
    let dir = (e - s).signum();
    let mut d = (e - s).abs();
    while d > eps {
        let lo = 0.5 * d;
        let (a, b) = if dir > 0.0 { (s + lo, s + d) } else { (s - d, s - lo) };
        push_panel(out, lnf, a, b);
        d = lo;
    }
}

/// ln ∫_a^b e^{lnf}, excluding eps-neighbourhoods of the listed singular points.
pub fn log_integral(lnf: &dyn Fn(f64) -> f64, a: f64, b: f64, singular: &[f64], eps: f64) -> f64 {
    let mut cuts = vec![a];
    let mut sing: Vec<f64> = singular.iter().copied().filter(|&s| s > a && s < b).collect();
    sing.sort_by(f64::total_cmp);
    cuts.extend(&sing);
    cuts.push(b);
    let is_sing = |x: f64| singular.iter().any(|&s| (s - x).abs() < 1e-15);
    let mut terms = Vec::new();
    for pair in cuts.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        match (is_sing(x0), is_sing(x1)) {
            (true, true) => {
                let mid = 0.5 * (x0 + x1);
                push_graded(&mut terms, lnf, x0, mid, eps);
                push_graded(&mut terms, lnf, x1, mid, eps);
            }
            (true, false) => push_graded(&mut terms, lnf, x0, x1, eps),
            (false, true) => push_graded(&mut terms, lnf, x1, x0, eps),
            (false, false) => {
                let h = (x1 - x0) / 4.0;
                for q in 0..4 {
                    push_panel(&mut terms, lnf, x0 + q as f64 * h, x0 + (q + 1) as f64 * h);
                }
            }
        }
    }
    log_sum_exp(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApVerdict {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellTest {
    pub factor: String,
    pub log_ratios: Vec<f64>,
    pub tail_log_ratio: f64,
    pub integrable: bool,
}

/// Dyadic shell test of ∫_0^{t0} e^{lnf(t)} dt.
pub fn shell_test(factor: &str, lnf: &dyn Fn(f64) -> f64, t0: f64) -> ShellTest {
    let logs: Vec<f64> = (0..=SHELL_DEPTH)
        .map(|i| {
            let hi = t0 * 0.5f64.powi(i as i32);
            let mut terms = Vec::with_capacity(16);
            push_panel(&mut terms, lnf, 0.5 * hi, hi);
            log_sum_exp(&terms)
        })
        .collect();
    let log_ratios: Vec<f64> = logs.windows(2).map(|p| p[1] - p[0]).collect();
    let tail = &log_ratios[log_ratios.len() - SHELL_TAIL..];
    let tail_log_ratio = tail.iter().sum::<f64>() / SHELL_TAIL as f64;
    ShellTest { factor: factor.to_string(), log_ratios, tail_log_ratio, integrable: tail_log_ratio < 0.0 }
}

type LnWeight = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type LnMeasure = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A weight family μ_p near its singular set, in a transversal distance t > 0.
pub struct SingularProfile {
    pub id: String,
    /// (t, p) ↦ ln μ_p(t).
    ln_mu: LnWeight,
    /// ln of the transversal measure density.
    ln_measure: LnMeasure,
    pub t0: f64,
}

impl SingularProfile {
    /// |e^{iθ} − 1|^{α(2−p)} on T near θ = 0.
    pub fn circle_power(alpha: f64) -> Self {
        Self {
            id: format!("circle_power(alpha={alpha})"),
            ln_mu: Box::new(move |t, p| alpha * (2.0 - p) * (2.0 * (0.5 * t).sin()).ln()),
            ln_measure: Box::new(|_| 0.0),
            t0: 0.5,
        }
    }

    /// w^{1−p/2} for the symmetrized-bidisc density near the diagonal,
    /// reduced to Δ = θ1 − θ2 with the square-overlap measure (1 − Δ).
    pub fn bidisc(weight: BidiscWeight) -> Self {
        Self {
            id: format!("bidisc_{}", weight.label()),
            ln_mu: Box::new(move |t, p| (1.0 - 0.5 * p) * weight.eval(t).ln()),
            ln_measure: Box::new(|t| (1.0 - t).ln()),
            t0: 0.5,
        }
    }

    /// w^{1−p/2} for the Thullen density near Z₂ = {z1 = 0} (t = |z1|) or
    /// Z₁ = {z2 = 0} (t = |z2|), with the reduced ball measure t·L(t, δ).
    pub fn thullen(m: u32, k: u32, near_z2: bool) -> Self {
        let delta = 0.5;
        Self {
            id: format!("thullen({m},{k})_{}", if near_z2 { "Z2" } else { "Z1" }),
            ln_mu: Box::new(move |t, p| {
                let s = (1.0 - t * t).sqrt();
                let w = if near_z2 { thullen_density(m, k, t, s) } else { thullen_density(m, k, s, t) };
                (1.0 - 0.5 * p) * w.ln()
            }),
            ln_measure: Box::new(move |t| t.ln() + zero_circle_arc(t, delta).ln()),
            t0: 0.25,
        }
    }

    pub fn factor_tests(&self, p: f64) -> [ShellTest; 2] {
        let direct = |t: f64| (self.ln_mu)(t, p) + (self.ln_measure)(t);
        let dual = |t: f64| -(self.ln_mu)(t, p) / (p - 1.0) + (self.ln_measure)(t);
        [
            shell_test(&format!("{}:mu", self.id), &direct, self.t0),
            shell_test(&format!("{}:dual", self.id), &dual, self.t0),
        ]
    }
}

/// Verdict from the shell tests of every profile.
pub fn profile_verdict(profiles: &[SingularProfile], p: f64) -> (Vec<ShellTest>, ApVerdict) {
    let tests: Vec<ShellTest> = profiles.iter().flat_map(|pr| pr.factor_tests(p)).collect();
    let verdict = if tests.iter().any(|t| t.tail_log_ratio.abs() < SHELL_MARGIN) {
        ApVerdict::Inconclusive
    } else if tests.iter().all(|t| t.integrable) {
        ApVerdict::Bounded
    } else {
        ApVerdict::Divergent
    };
    (tests, verdict)
}

/// Open interval of exponents; `None` marks no finite endpoint (1 or ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl PInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lower.is_none_or(|l| p > l) && self.upper.is_none_or(|u| p < u)
    }

    /// Largest endpoint discrepancy; a missing endpoint must match a missing one.
    pub fn distance(&self, other: &PInterval) -> f64 {
        let d = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (None, None) => 0.0,
            (Some(x), Some(y)) => (x - y).abs(),
            _ => f64::INFINITY,
        };
        d(self.lower, other.lower).max(d(self.upper, other.upper))
    }
}

fn bisect(bounded: &dyn Fn(f64) -> bool, mut good: f64, mut bad: f64) -> f64 {
    while (good - bad).abs() > BISECTION_WIDTH {
        let mid = 0.5 * (good + bad);
        if bounded(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    0.5 * (good + bad)
}

/// Endpoints of {p : verdict bounded}, searched on both sides of p = 2.
pub fn detect_interval(profiles: &[SingularProfile]) -> PInterval {
    let bounded = |p: f64| profile_verdict(profiles, p).1 == ApVerdict::Bounded;
    let lower = if bounded(P_LOWER) { None } else { Some(bisect(&bounded, 2.0, P_LOWER)) };
    let upper = if bounded(P_UPPER) { None } else { Some(bisect(&bounded, 2.0, P_UPPER)) };
    PInterval { lower, upper }
}

/// ((2α+1)/(α+1), (2α+1)/α) for the power weights on T.
pub fn predicted_circle_interval(alpha: f64) -> PInterval {
    if alpha == 0.0 {
        return PInterval { lower: None, upper: None };
    }
    PInterval { lower: Some((2.0 * alpha + 1.0) / (alpha + 1.0)), upper: Some((2.0 * alpha + 1.0) / alpha) }
}

/// ((2m+4)/(m+4), (2m+4)/m) ∩ ((2k+4)/(k+4), (2k+4)/k); an exponent 1 adds no constraint.
pub fn predicted_thullen_interval(m: u32, k: u32) -> PInterval {
    let mut out = PInterval { lower: None, upper: None };
    for e in [m, k] {
        if e < 2 {
            continue;
        }
        let ef = e as f64;
        let lo = (2.0 * ef + 4.0) / (ef + 4.0);
        let hi = (2.0 * ef + 4.0) / ef;
        out.lower = Some(out.lower.map_or(lo, |l: f64| l.max(lo)));
        out.upper = Some(out.upper.map_or(hi, |u: f64| u.min(hi)));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApEntry {
    pub center_id: String,
    pub center: Vec<f64>,
    pub delta: f64,
    pub log_characteristic: f64,
    pub characteristic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApScanReport {
    pub weight: String,
    pub p: f64,
    pub entries: Vec<ApEntry>,
    /// Running supremum of the characteristic along `entries`.
    pub running_sup: Vec<f64>,
    /// Slope of log-characteristic against log-radius over the singular-center family.
    pub log_slope: f64,
    pub shell_tests: Vec<ShellTest>,
    pub verdict: ApVerdict,
}

fn entry(center_id: &str, center: Vec<f64>, delta: f64, log_char: f64) -> Result<ApEntry> {
    if log_char < -JENSEN_SLACK || log_char.is_nan() {
        return Err(LabError::NumericalConsistency(format!(
            "A_p characteristic below 1 (log {log_char:e}) at {center_id}, delta {delta}"
        )));
    }
    Ok(ApEntry { center_id: center_id.to_string(), center, delta, log_characteristic: log_char, characteristic: log_char.exp() })
}

fn assemble(weight: String, p: f64, entries: Vec<ApEntry>, singular_id: &str, shell_tests: Vec<ShellTest>, verdict: ApVerdict) -> ApScanReport {
    let mut sup = f64::NEG_INFINITY;
    let running_sup = entries
        .iter()
        .map(|e| {
            sup = sup.max(e.characteristic);
            sup
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter(|e| e.center_id == singular_id)
        .map(|e| (e.delta.ln(), e.log_characteristic))
        .unzip();
    let (_, log_slope, _) = linear_fit(&xs, &ys);
    ApScanReport { weight, p, entries, running_sup, log_slope, shell_tests, verdict }
}

fn log_characteristic(log_int_mu: f64, log_int_dual: f64, log_measure: f64, p: f64) -> f64 {
    (log_int_mu - log_measure) + (p - 1.0) * (log_int_dual - log_measure)
}

/// [μ]_{p,I} for the arc of the given center and length; `singular` lists
/// angles where μ vanishes or blows up.
pub fn ap_characteristic_interval(mu: &dyn Fn(f64) -> f64, center: f64, length: f64, p: f64, singular: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(LabError::Parameter(format!("p = {p} must exceed 1")));
    }
    if length <= 2.0 * CUTOFF {
        return Err(LabError::UnderResolved(format!("arc of length {length:e} is below two resolution cells")));
    }
    let ln_mu = |t: f64| mu(t).ln();
    Ok(log_char_arc(&ln_mu, center, length, p, singular).exp())
}

fn log_char_arc(ln_mu: &dyn Fn(f64) -> f64, center: f64, length: f64, p: f64, singular: &[f64]) -> f64 {
    let (a, b) = (center - 0.5 * length, center + 0.5 * length);
    let dual = |t: f64| -ln_mu(t) / (p - 1.0);
    let l1 = log_integral(ln_mu, a, b, singular, CUTOFF);
    let l2 = log_integral(&dual, a, b, singular, CUTOFF);
    // Measure of the same truncated set, so the averages obey Jensen exactly.
    let l0 = log_integral(&|_| 0.0, a, b, singular, CUTOFF);
    log_characteristic(l1, l2, l0, p)
}

/// Scan of |e^{iθ} − 1|^{α(2−p)} over dyadic arcs at 1 and a few generic arcs.
pub fn circle_power_scan(alpha: f64, p: f64) -> Result<ApScanReport> {
    let ln_mu = move |t: f64| alpha * (2.0 - p) * (2.0 * (0.5 * t).sin()).abs().ln();
    let singular: Vec<f64> = vec![-2.0 * PI, 0.0, 2.0 * PI];
    let mut entries = Vec::new();
    for j in 0..=DYADIC_LEVELS {
        let len = 2.0 * PI * 0.5f64.powi(j as i32);
        entries.push(entry("one", vec![0.0], len, log_char_arc(&ln_mu, 0.0, len, p, &singular))?);
    }
    for (i, c) in [PI / 2.0, PI, 3.0 * PI / 2.0].iter().enumerate() {
        for j in 2..=6 {
            let len = 2.0 * PI * 0.5f64.powi(j);
            entries.push(entry(&format!("generic_{i}"), vec![*c], len, log_char_arc(&ln_mu, *c, len, p, &singular))?);
        }
    }
    let (tests, verdict) = profile_verdict(&[SingularProfile::circle_power(alpha)], p);
    Ok(assemble(format!("circle_power(alpha={alpha})"), p, entries, "one", tests, verdict))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalDetection {
    pub weight: String,
    pub predicted: PInterval,
    pub detected: PInterval,
    pub max_endpoint_error: f64,
}

/// Detected A_p range of |z − 1|^{α(2−p)}.
pub fn ap_interval_detect(alpha: f64) -> Result<IntervalDetection> {
    if !(alpha >= 0.0) {
        return Err(LabError::Parameter(format!("alpha = {alpha} must be nonnegative")));
    }
    let detected = detect_interval(&[SingularProfile::circle_power(alpha)]);
    let predicted = predicted_circle_interval(alpha);
    Ok(IntervalDetection {
        weight: format!("circle_power(alpha={alpha})"),
        predicted,
        detected,
        max_endpoint_error: detected.distance(&predicted),
    })
}

/// Weights on T² that depend on θ1 − θ2 only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidiscWeight {
    /// The symmetrized-bidisc pullback density.
    Density,
    /// |z1 − z2| = |2 sin(Δ/2)|, comparable to the density.
    Comparable,
}

impl BidiscWeight {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Density => bidisc_density(t),
            Self::Comparable => (2.0 * (0.5 * t).sin()).abs(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Comparable => "comparable",
        }
    }
}

/// Squares I × J of side s centered at (θ, θ + c): by translation invariance
/// the integral of μ(θ1 − θ2) reduces to ∫ μ(Δ)(s − |Δ − c|)₊ dΔ.
fn log_char_square(weight: BidiscWeight, c: f64, side: f64, p: f64) -> f64 {
    let e = 1.0 - 0.5 * p;
    let tri = move |t: f64| (side - (t - c).abs()).max(0.0).ln();
    let mu = move |t: f64| e * weight.eval(t).ln() + tri(t);
    let dual = move |t: f64| -e * weight.eval(t).ln() / (p - 1.0) + tri(t);
    let singular = [-2.0 * PI, 0.0, 2.0 * PI];
    let (a, b) = (c - side, c + side);
    let l1 = log_integral(&mu, a, b, &singular, CUTOFF);
    let l2 = log_integral(&dual, a, b, &singular, CUTOFF);
    let l0 = log_integral(&tri, a, b, &singular, CUTOFF);
    log_characteristic(l1, l2, l0, p)
}

/// A_p scan of w^{1−p/2} on T² over squares on and off the diagonal.
pub fn bidisc_ap_scan(weight: BidiscWeight, p: f64) -> Result<ApScanReport> {
    let mut entries = Vec::new();
    for j in 0..=DYADIC_LEVELS {
        let side = PI * 0.5f64.powi(j as i32);
        entries.push(entry("diagonal", vec![0.0, 0.0], side, log_char_square(weight, 0.0, side, p))?);
    }
    for i in 0..8 {
        let c = 0.5 + 0.3 * i as f64;
        for j in 3..=6 {
            let side = PI * 0.5f64.powi(j);
            entries.push(entry(&format!("generic_{i}"), vec![0.0, c], side, log_char_square(weight, c, side, p))?);
        }
    }
    let (tests, verdict) = profile_verdict(&[SingularProfile::bidisc(weight)], p);
    Ok(assemble(format!("bidisc_{}", weight.label()), p, entries, "diagonal", tests, verdict))
}

pub fn bidisc_interval_detect(weight: BidiscWeight) -> IntervalDetection {
    let detected = detect_interval(&[SingularProfile::bidisc(weight)]);
    let predicted = PInterval { lower: Some(4.0 / 3.0), upper: Some(4.0) };
    IntervalDetection {
        weight: format!("bidisc_{}", weight.label()),
        predicted,
        detected,
        max_endpoint_error: detected.distance(&predicted),
    }
}

/// Angular length of {ψ : |1 − ρe^{iψ}| < δ²} with ρ = √(1 − t²): the slice
/// of a metric ball centered on a zero circle at transversal radius t.
pub fn zero_circle_arc(t: f64, delta: f64) -> f64 {
    let rho = (1.0 - t * t).max(0.0).sqrt();
    if rho == 0.0 {
        return if delta * delta > 1.0 { 2.0 * PI } else { 0.0 };
    }
    // 1 − cos ψ at the arc end, written without cancellation: (δ⁴ − (1 − ρ)²)/(2ρ).
    let gap = t * t / (1.0 + rho);
    let one_minus_cos = (delta.powi(4) - gap * gap) / (2.0 * rho);
    if one_minus_cos <= 0.0 {
        0.0
    } else if one_minus_cos >= 2.0 {
        2.0 * PI
    } else {
        4.0 * (0.5 * one_minus_cos).sqrt().asin()
    }
}

fn zero_circle_reach(delta: f64) -> f64 {
    let d2 = delta * delta;
    if d2 >= 1.0 {
        1.0
    } else {
        delta * (2.0 - d2).sqrt()
    }
}

/// log [μ]_{p,Q} for Q_δ centered on a zero circle, by the exact reduction
/// ∫_Q f dσ = 2π ∫ t f(t) L(t, δ) dt for f depending on the transversal modulus t.
fn log_char_zero_circle(ln_mu: &dyn Fn(f64) -> f64, delta: f64, p: f64) -> f64 {
    let reach = zero_circle_reach(delta);
    let meas = |t: f64| t.ln() + zero_circle_arc(t, delta).ln();
    let f1 = |t: f64| ln_mu(t) + meas(t);
    let f2 = |t: f64| -ln_mu(t) / (p - 1.0) + meas(t);
    let one = |t: f64| meas(t);
    let integral = |f: &dyn Fn(f64) -> f64| {
        let mut terms = Vec::new();
        push_graded(&mut terms, f, 0.0, 0.5 * reach, CUTOFF * reach);
        let h = 0.5 * reach / 8.0;
        for q in 0..8 {
            push_panel(&mut terms, f, 0.5 * reach + q as f64 * h, 0.5 * reach + (q + 1) as f64 * h);
        }
        log_sum_exp(&terms)
    };
    log_characteristic(integral(&f1), integral(&f2), integral(&one), p)
}

/// [μ]_{p,Q} by masked quadrature; μ given at the grid nodes.
pub fn ap_characteristic_ball(grid: &BoundaryGrid, mu: &[f64], ball: &MetricBall, p: f64) -> Result<f64> {
    if mu.len() != grid.len() {
        return Err(LabError::GridMismatch { field: mu.len(), grid: grid.len() });
    }
    let idx = ball.mask(grid);
    let ln_mu: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    Ok(masked_log_char(grid, &idx, &ln_mu, p)?.exp())
}

fn masked_log_char(grid: &BoundaryGrid, idx: &[usize], ln_mu: &[f64], p: f64) -> Result<f64> {
    if idx.len() < MIN_BALL_NODES {
        return Err(LabError::UnderResolved(format!("ball holds {} nodes, fewer than {MIN_BALL_NODES}", idx.len())));
    }
    let w = grid.weights();
    let t1: Vec<f64> = idx.iter().map(|&i| w[i].ln() + ln_mu[i]).collect();
    let t2: Vec<f64> = idx.iter().map(|&i| w[i].ln() - ln_mu[i] / (p - 1.0)).collect();
    let t0: Vec<f64> = idx.iter().map(|&i| w[i].ln()).collect();
    Ok(log_characteristic(log_sum_exp(&t1), log_sum_exp(&t2), log_sum_exp(&t0), p))
}

/// Centers off the zero circles used by the sphere scans.
pub fn generic_centers() -> Vec<[C64; 2]> {
    (0..8)
        .map(|i| {
            let a = 0.3 + 0.13 * i as f64;
            let b = 0.7 * i as f64;
            [C64::from_polar(a.cos(), b), C64::from_polar(a.sin(), 1.3 * b + 0.4)]
        })
        .collect()
}

/// Ball masks for the generic centers with dyadic radii down to grid resolution.
pub struct GenericBalls {
    pub balls: Vec<(String, [C64; 2], f64, Vec<usize>)>,
}

impl GenericBalls {
    pub fn new(grid: &BoundaryGrid) -> Result<Self> {
        let centers = generic_centers();
        let balls = centers
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let mut out = Vec::new();
                let mut delta = 0.8;
                loop {
                    let idx = MetricBall::new(*c, delta)?.mask(grid);
                    if idx.len() < MIN_BALL_NODES {
                        break;
                    }
                    out.push((format!("generic_{i}"), *c, delta, idx));
                    delta *= 0.5;
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { balls: balls.into_iter().flatten().collect() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThullenScanReport {
    pub m: u32,
    pub k: u32,
    pub grid: Vec<usize>,
    pub predicted: PInterval,
    pub detected: PInterval,
    pub max_endpoint_error: f64,
    pub scans: Vec<ApScanReport>,
}

/// Zero-circle profiles of the Thullen density (only exponents ≥ 2 create a zero).
pub fn thullen_profiles(m: u32, k: u32) -> Vec<SingularProfile> {
    vec![SingularProfile::thullen(m, k, true), SingularProfile::thullen(m, k, false)]
}

/// A_p scan of w^{1−p/2} for the Thullen density at one exponent.
pub fn thullen_ap_scan(m: u32, k: u32, p: f64, grid: &BoundaryGrid, balls: &GenericBalls, ln_w: &[f64]) -> Result<ApScanReport> {
    let e = 1.0 - 0.5 * p;
    let mut entries = Vec::new();
    for near_z2 in [true, false] {
        let id = if near_z2 { "Z2" } else { "Z1" };
        let center = if near_z2 { vec![0.0, 0.0, 1.0, 0.0] } else { vec![1.0, 0.0, 0.0, 0.0] };
        let ln_mu = |t: f64| {
            let s = (1.0 - t * t).sqrt();
            e * if near_z2 { thullen_density(m, k, t, s) } else { thullen_density(m, k, s, t) }.ln()
        };
        for j in 0..=DYADIC_LEVELS {
            let delta = 0.8 * 0.5f64.powi(j as i32);
            entries.push(entry(id, center.clone(), delta, log_char_zero_circle(&ln_mu, delta, p))?);
        }
    }
    let ln_mu: Vec<f64> = ln_w.iter().map(|v| e * v).collect();
    let generic = balls
        .balls
        .par_iter()
        .map(|(id, c, delta, idx)| {
            let lc = masked_log_char(grid, idx, &ln_mu, p)?;
            entry(id, vec![c[0].re, c[0].im, c[1].re, c[1].im], *delta, lc)
        })
        .collect::<Result<Vec<_>>>()?;
    entries.extend(generic);
    let (tests, verdict) = profile_verdict(&thullen_profiles(m, k), p);
    Ok(assemble(format!("thullen({m},{k})"), p, entries, "Z2", tests, verdict))
}

/// Interval detection for Ω_{m,k} plus per-exponent scans on a sphere grid.
pub fn thullen_interval_scan(m: u32, k: u32, p_grid: &[f64], resolution: [usize; 3]) -> Result<ThullenScanReport> {
    if m == 0 || k == 0 {
        return Err(LabError::Parameter("Thullen exponents must be at least 1".into()));
    }
    let grid = make_sphere3_grid(resolution[0], resolution[1], resolution[2])?;
    let w = closed_form_density(&DomainId::Thullen { m, k }, &grid)?;
    let ln_w: Vec<f64> = w.values().iter().map(|v| v.ln()).collect();
    let balls = GenericBalls::new(&grid)?;
    let scans = p_grid
        .iter()
        .map(|&p| thullen_ap_scan(m, k, p, &grid, &balls, &ln_w))
        .collect::<Result<Vec<_>>>()?;
    let detected = detect_interval(&thullen_profiles(m, k));
    let predicted = predicted_thullen_interval(m, k);
    Ok(ThullenScanReport {
        m,
        k,
        grid: resolution.to_vec(),
        predicted,
        detected,
        max_endpoint_error: detected.distance(&predicted),
        scans,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Stable,
    Growing,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointWitnessReport {
    pub domain: String,
    pub p: f64,
    pub grid_sizes: Vec<usize>,
    pub ratios: Vec<f64>,
    /// max |S h − constant| on each grid.
    pub projection_deviation: Vec<f64>,
    /// The constant value of S h on each grid.
    pub projected_constant: Vec<f64>,
    pub relative_spread: f64,
    pub log_slope: f64,
    pub r_squared: f64,
    pub monotone: bool,
    pub classification: GrowthClass,
}

fn classify_growth(domain: String, p: f64, sizes: &[usize], ratios: Vec<f64>, dev: Vec<f64>, constant: Vec<f64>) -> EndpointWitnessReport {
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let relative_spread = (hi - lo) / lo;
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let (_, log_slope, r_squared) = linear_fit(&xs, &ratios);
    let monotone = ratios.windows(2).all(|q| q[1] > q[0]);
    let classification = if relative_spread < STABLE_SPREAD {
        GrowthClass::Stable
    } else if monotone && log_slope > 0.0 && r_squared > GROWTH_R2 {
        GrowthClass::Growing
    } else {
        GrowthClass::Inconclusive
    };
    EndpointWitnessReport {
        domain,
        p,
        grid_sizes: sizes.to_vec(),
        ratios,
        projection_deviation: dev,
        projected_constant: constant,
        relative_spread,
        log_slope,
        r_squared,
        monotone,
        classification,
    }
}

fn constant_fit(values: &[C64]) -> (f64, f64) {
    let mean = values.iter().sum::<C64>() / values.len() as f64;
    let dev = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
    (mean.re, dev)
}

fn weighted_ratio(grid: &BoundaryGrid, sh: &[C64], h: &[C64], w: &[f64], p: f64) -> Result<f64> {
    let e = 1.0 - 0.5 * p;
    let num: Vec<f64> = sh.iter().zip(w).map(|(a, b)| a.norm().powf(p) * b.powf(e)).collect();
    let den: Vec<f64> = h.iter().zip(w).map(|(a, b)| a.norm().powf(p) * b.powf(e)).collect();
    Ok(integrate_real(grid, &num)? / integrate_real(grid, &den)?)
}

/// R(N) = ‖S h‖^p / ‖h‖^p in L^p(T², w^{1−p/2}) for h = |z1 − z2|².
pub fn endpoint_witness_bidisc(p: f64, sizes: &[usize]) -> Result<EndpointWitnessReport> {
    let spec = ProperMapSpec::symmetrized_bidisc();
    let mut ratios = Vec::new();
    let mut devs = Vec::new();
    let mut consts = Vec::new();
    for &n in sizes {
        let grid = make_torus_grid(2, n)?;
        let w = density_from_jacobian(&spec, &grid)?;
        let h = BoundaryField::from_fn(&grid, |z| C64::new((z[0] - z[1]).norm_sqr(), 0.0))?;
        let sh = project_torus(&grid, &h)?;
        let (c, dev) = constant_fit(sh.values());
        ratios.push(weighted_ratio(&grid, sh.values(), h.values(), w.values(), p)?);
        devs.push(dev);
        consts.push(c);
    }
    Ok(classify_growth("symmetrized_bidisc".into(), p, sizes, ratios, devs, consts))
}

/// Witness |z1^m z2^k| on S³ over sphere grids (N, N, n3) with projector degree `degree`.
pub fn endpoint_witness_thullen(m: u32, k: u32, p: f64, sizes: &[usize], degree: usize) -> Result<EndpointWitnessReport> {
    let n3 = 2 * degree + 2;
    let mut ratios = Vec::new();
    let mut devs = Vec::new();
    let mut consts = Vec::new();
    for &n in sizes {
        let grid = make_sphere3_grid(n, n, n3)?;
        let w = closed_form_density(&DomainId::Thullen { m, k }, &grid)?;
        let h = BoundaryField::from_fn(&grid, move |z| C64::new(z[0].norm().powi(m as i32) * z[1].norm().powi(k as i32), 0.0))?;
        let sh = project_sphere(&grid, &h, degree)?;
        let (c, dev) = constant_fit(sh.values());
        ratios.push(weighted_ratio(&grid, sh.values(), h.values(), w.values(), p)?);
        devs.push(dev);
        consts.push(c);
    }
    Ok(classify_growth(format!("thullen({m},{k})"), p, sizes, ratios, devs, consts))
}

/// (1/σ(S³))∫|z1|^p|z2|^q dσ = Γ(p/2+1)Γ(q/2+1)/Γ((p+q)/2+2).
pub fn sphere_moment_mean(p: f64, q: f64) -> f64 {
    (ln_gamma(0.5 * p + 1.0) + ln_gamma(0.5 * q + 1.0) - ln_gamma(0.5 * (p + q) + 2.0)).exp()
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const DE_TOL: f64 = 1e-13;

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, DE_TOL).integral
}

/// Inner integral in polar coordinates λ = 1 − ρe^{iψ}, ρ = c·u, c = 2cos ψ,
/// restricted to u ∈ [u_lo, u_hi].
fn intsize_inner(alpha: f64, c: f64, u_lo: f64, u_hi: f64) -> f64 {
    c.powf(2.0 * alpha + 2.0) * de(|u| u.powf(alpha + 1.0) * (1.0 - u).powf(alpha), u_lo, u_hi)
}

fn intsize_with_cutoff(alpha: f64, delta: f64, eps: f64) -> f64 {
    let d2 = delta * delta;
    let outer = |psi: f64| {
        let c = 2.0 * psi.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let (lo, hi) = if eps > 0.0 {
            let disc = 1.0 - 4.0 * eps / (c * c);
            if disc <= 0.0 {
                return 0.0;
            }
            (0.5 * (1.0 - disc.sqrt()), 0.5 * (1.0 + disc.sqrt()))
        } else {
            (0.0, 1.0)
        };
        intsize_inner(alpha, c, lo, hi.min(d2 / c))
    };
    let split = if d2 < 2.0 { (0.5 * d2).acos() } else { 0.0 };
    2.0 * (de(outer, 0.0, split) + de(outer, split, PI / 2.0))
}

/// I(α, δ) for α > −1 and δ ∈ (0, √2].
pub fn intsize_integral(alpha: f64, delta: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(LabError::Domain(format!("I(α, δ) diverges for α = {alpha} ≤ −1")));
    }
    if !(delta > 0.0 && delta <= 2f64.sqrt() + 1e-15) {
        return Err(LabError::Parameter(format!("delta = {delta} must lie in (0, √2]")));
    }
    Ok(intsize_with_cutoff(alpha, delta, 0.0))
}

/// γ_α = 2^{α+1}/(α+2) · ∫_0^{π/2} cos^α θ dθ.
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(LabError::Domain(format!("γ_α needs α > −1, got {alpha}")));
    }
    Ok(2f64.powf(alpha + 1.0) / (alpha + 2.0) * de(|t| t.cos().powf(alpha), 0.0, PI / 2.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub alpha: f64,
    pub delta: f64,
    pub cutoffs: Vec<f64>,
    pub estimates: Vec<f64>,
    /// (I_{j+2} − I_{j+1}) / (I_{j+1} − I_j).
    pub increment_ratios: Vec<f64>,
    pub verdict: Verdict,
}

/// Integrals restricted to {1 − |λ|² > ε} for ε = 10^{-2}, …, 10^{-8}; ratios
/// of successive increments near 1 or above mean divergence.
pub fn intsize_refinement(alpha: f64, delta: f64) -> DivergenceReport {
    let cutoffs: Vec<f64> = (2..=8).map(|e| 10f64.powi(-e)).collect();
    let estimates: Vec<f64> = cutoffs.iter().map(|&eps| intsize_with_cutoff(alpha, delta, eps)).collect();
    let incs: Vec<f64> = estimates.windows(2).map(|q| q[1] - q[0]).collect();
    let increment_ratios: Vec<f64> = incs.windows(2).map(|q| q[1] / q[0]).collect();
    let last = *increment_ratios.last().unwrap_or(&f64::NAN);
    let verdict = if last >= 0.95 {
        Verdict::Divergent
    } else if last <= 0.5 {
        Verdict::Finite
    } else {
        Verdict::Inconclusive
    };
    DivergenceReport { alpha, delta, cutoffs, estimates, increment_ratios, verdict }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub alpha: f64,
    pub deltas: Vec<f64>,
    /// I(α, δ)/δ^{2α+4}.
    pub ratios: Vec<f64>,
    pub gamma: Option<f64>,
    pub final_relative_error: Option<f64>,
    /// Ratios increase as δ decreases.
    pub monotone: bool,
    /// Final ratio within 2% of γ_α.
    pub converged: bool,
    pub divergence: Option<DivergenceReport>,
}

pub const ASYMPTOTIC_TOL: f64 = 0.02;

pub fn asymptotic_check(alpha: f64, deltas: &[f64]) -> Result<AsymptoticReport> {
    if alpha <= -1.0 {
        let delta = deltas.first().copied().unwrap_or(0.3);
        return Ok(AsymptoticReport {
            alpha,
            deltas: deltas.to_vec(),
            ratios: Vec::new(),
            gamma: None,
            final_relative_error: None,
            monotone: false,
            converged: false,
            divergence: Some(intsize_refinement(alpha, delta)),
        });
    }
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    let ratios = ds
        .iter()
        .map(|&d| Ok(intsize_integral(alpha, d)? / d.powf(2.0 * alpha + 4.0)))
        .collect::<Result<Vec<f64>>>()?;
    let gamma = gamma_alpha(alpha)?;
    let err = ratios.last().map(|r| (r - gamma).abs() / gamma);
    Ok(AsymptoticReport {
        alpha,
        deltas: ds,
        monotone: ratios.windows(2).all(|q| q[1] > q[0]),
        converged: err.is_some_and(|e| e < ASYMPTOTIC_TOL),
        ratios,
        gamma: Some(gamma),
        final_relative_error: err,
        divergence: None,
    })
}

/// A point distributed uniformly on S³.
pub fn random_sphere_point(rng: &mut impl Rng) -> [C64; 2] {
    loop {
        let v: [f64; 4] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [C64::new(v[0] / n, v[1] / n), C64::new(v[2] / n, v[3] / n)];
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleReport {
    pub samples: usize,
    pub violations: usize,
    /// max d(x,z) − d(x,y) − d(y,z).
    pub worst_excess: f64,
}

pub fn triangle_check(samples: usize, seed: u64) -> TriangleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let (x, y, z) = (random_sphere_point(&mut rng), random_sphere_point(&mut rng), random_sphere_point(&mut rng));
        let excess = metric_distance(&x, &z) - metric_distance(&x, &y) - metric_distance(&y, &z);
        worst = worst.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    TriangleReport { samples, violations, worst_excess: worst }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingEntry {
    pub center: [f64; 4],
    pub delta: f64,
    /// Masked grid volumes of Q_δ and Q_{3δ}.
    pub grid_volume: f64,
    pub grid_volume_tripled: f64,
    pub grid_ratio: f64,
    /// σ(Q_{3δ})/σ(Q_δ) from the exact volume 2π·I(0, δ).
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricGeometryReport {
    pub grid: Vec<usize>,
    pub doubling: Vec<DoublingEntry>,
    pub max_doubling_ratio: f64,
    pub doubling_bound: f64,
    pub doubling_holds: bool,
    /// max |grid volume / exact volume − 1| over resolved balls.
    pub max_grid_volume_error: f64,
    /// Balls skipped because they hold fewer than the minimum node count.
    pub under_resolved: usize,
    pub engulfing_pairs: usize,
    pub engulfing_failures: usize,
}

pub const DOUBLING_BOUND: f64 = 81.0 * 1.05;

/// σ(Q_δ(η)) = 2π·I(0, δ) for every center, by unitary invariance; balls with δ ≥ √2 are the whole sphere.
pub fn ball_volume_exact(delta: f64) -> Result<f64> {
    Ok(2.0 * PI * intsize_integral(0.0, delta.min(2f64.sqrt()))?)
}

/// Doubling σ(Q_{3δ}) ≤ c₂σ(Q_δ) and engulfing with c₁ = 3 on sampled balls.
pub fn metric_geometry_check(grid: &BoundaryGrid, deltas: &[f64], centers: usize, seed: u64) -> Result<MetricGeometryReport> {
    if grid.manifold() != ManifoldId::Sphere3 {
        return Err(LabError::Parameter("metric geometry checks need a sphere grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[C64; 2]> = (0..centers).map(|_| random_sphere_point(&mut rng)).collect();
    let mut doubling = Vec::new();
    let mut under_resolved = 0;
    let mut grid_err = 0.0f64;
    for c in &pts {
        for &d in deltas {
            let v = ball_volume(grid, &MetricBall::new(*c, d)?)?;
            let v3 = ball_volume(grid, &MetricBall::new(*c, 3.0 * d)?)?;
            if v.under_resolved {
                under_resolved += 1;
                continue;
            }
            let (e1, e3) = (ball_volume_exact(d)?, ball_volume_exact(3.0 * d)?);
            grid_err = grid_err.max((v.volume / e1 - 1.0).abs()).max((v3.volume / e3 - 1.0).abs());
            doubling.push(DoublingEntry {
                center: [c[0].re, c[0].im, c[1].re, c[1].im],
                delta: d,
                grid_volume: v.volume,
                grid_volume_tripled: v3.volume,
                grid_ratio: v3.volume / v.volume,
                ratio: e3 / e1,
            });
        }
    }
    let max_doubling_ratio = doubling.iter().map(|e| e.ratio).fold(0.0, f64::max);
    let mut pairs = 0;
    let mut failures = 0;
    for (i, a) in pts.iter().enumerate() {
        let b = pts[(i + 1) % pts.len()];
        for &d in deltas {
            // Pull the second center toward the first so the balls overlap.
            let t = 0.5 * d * d;
            let mix = [a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t];
            let n = (mix[0].norm_sqr() + mix[1].norm_sqr()).sqrt();
            let eta2 = [mix[0] / n, mix[1] / n];
            if let Some(ok) = engulfing_holds(grid, *a, eta2, d, 3.0) {
                pairs += 1;
                if !ok {
                    failures += 1;
                }
            }
        }
    }
    Ok(MetricGeometryReport {
        grid: grid.resolutions().to_vec(),
        doubling,
        max_doubling_ratio,
        doubling_bound: DOUBLING_BOUND,
        doubling_holds: max_doubling_ratio <= DOUBLING_BOUND,
        max_grid_volume_error: grid_err,
        under_resolved,
        engulfing_pairs: pairs,
        engulfing_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_has_unit_characteristic() {
        let v = ap_characteristic_interval(&|_| 3.0, 0.4, 1.0, 2.5, &[]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shell_test_matches_power_exponent() {
        let t = shell_test("x", &|t: f64| -0.5 * t.ln(), 1.0);
        assert!((t.tail_log_ratio - (-0.5 * 2f64.ln())).abs() < 1e-10);
        assert!(t.integrable);
        let t = shell_test("x", &|t: f64| -1.2 * t.ln(), 1.0);
        assert!(!t.integrable);
    }

    #[test]
    fn gamma_zero_is_half_pi() {
        assert!((gamma_alpha(0.0).unwrap() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn intsize_full_disc_is_pi() {
        assert!((intsize_integral(0.0, 2f64.sqrt()).unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn ln_gamma_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn predicted_intervals() {
        let t = predicted_thullen_interval(1, 2);
        assert!((t.lower.unwrap() - 4.0 / 3.0).abs() < 1e-15 && (t.upper.unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(predicted_thullen_interval(1, 1), PInterval { lower: None, upper: None });
    }
}
