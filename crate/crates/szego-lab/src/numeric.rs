//! Shared numerical helpers: deterministic summation, tensor FFTs on torus
//! grids, Gauss-Legendre panels and small regressions.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rustfft::FftPlanner;

pub type C64 = Complex64;

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (tree) summation; the reduction order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_c(xs: &[C64]) -> C64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
}

/// Signed frequency for DFT index `q` on `n` points. The Nyquist index maps to `-n/2`.
pub fn signed_freq(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

/// DFT index of signed frequency `k` on `n` points.
pub fn freq_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Decompose a flat row-major index (axis 0 slowest) into per-axis indices.
pub fn unravel(mut flat: usize, dim: usize, n: usize, out: &mut [usize]) {
    for a in (0..dim).rev() {
        out[a] = flat % n;
        flat /= n;
    }
}

pub fn ravel(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// In-place unnormalized multidimensional FFT over a cube of side `n`.
pub fn fft_nd(data: &mut [C64], dim: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![C64::new(0.0, 0.0); n];
    let total = data.len();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Fourier coefficients c_k of the trigonometric interpolant
/// f(θ) = Σ c_k e^{ik·θ} of samples on an offset tensor grid.
/// The output uses DFT index layout.
pub fn torus_coefficients(samples: &[C64], dim: usize, n: usize, offsets: &[f64]) -> Vec<C64> {
    let mut data = samples.to_vec();
    fft_nd(&mut data, dim, n, false);
    let scale = 1.0 / (n.pow(dim as u32) as f64);
    let mut idx = vec![0usize; dim];
    for (flat, v) in data.iter_mut().enumerate() {
        unravel(flat, dim, n, &mut idx);
        let phase: f64 = idx
            .iter()
            .zip(offsets)
            .map(|(&q, &o)| signed_freq(q, n) as f64 * o)
            .sum();
        *v *= C64::from_polar(scale, -phase);
    }
    data
}

/// Inverse of [`torus_coefficients`]: samples of Σ c_k e^{ik·θ} at the grid nodes.
pub fn torus_synthesize(coeffs: &[C64], dim: usize, n: usize, offsets: &[f64]) -> Vec<C64> {
    let mut data = coeffs.to_vec();
    let mut idx = vec![0usize; dim];
    for (flat, v) in data.iter_mut().enumerate() {
        unravel(flat, dim, n, &mut idx);
        let phase: f64 = idx
            .iter()
            .zip(offsets)
            .map(|(&q, &o)| signed_freq(q, n) as f64 * o)
            .sum();
        *v *= C64::from_polar(1.0, phase);
    }
    fft_nd(&mut data, dim, n, true);
    data
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`, ascending in the node.
pub fn gauss_legendre(points: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(points.max(1)).expect("nonzero"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Composite Gauss-Legendre over `[a, b]` with panels graded geometrically
/// towards `a`: panels [a + L r^{j+1}, a + L r^j], j < depth, plus the
/// innermost panel [a, a + L r^depth] when `include_core` is set.
pub fn graded_panels(a: f64, b: f64, ratio: f64, depth: usize, include_core: bool) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut panels = Vec::with_capacity(depth + 1);
    let mut hi = len;
    for _ in 0..depth {
        let lo = hi * ratio;
        panels.push((a + lo, a + hi));
        hi = lo;
    }
    if include_core {
        panels.push((a, a + hi));
    }
    panels
}

/// Ordinary least squares y = a + b x; returns (intercept, slope, r_squared).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (ys.first().copied().unwrap_or(0.0), 0.0, 0.0);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (intercept, slope, r2)
}

/// Float formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_sum() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn signed_frequency_roundtrip() {
        for n in [4usize, 8, 9] {
            for q in 0..n {
                assert_eq!(freq_index(signed_freq(q, n), n), q);
            }
        }
        assert_eq!(signed_freq(4, 8), -4);
    }

    #[test]
    fn torus_coefficients_recover_a_character() {
        let n = 8;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let offsets = [h / 3.0, 2.0 * h / 3.0];
        let mut samples = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let t1 = i as f64 * h + offsets[0];
                let t2 = j as f64 * h + offsets[1];
                samples[i * n + j] = C64::from_polar(1.0, 2.0 * t1 - t2);
            }
        }
        let c = torus_coefficients(&samples, 2, n, &offsets);
        let k = freq_index(2, n) * n + freq_index(-1, n);
        assert!((c[k] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let back = torus_synthesize(&c, 2, n, &offsets);
        for (a, b) in back.iter().zip(&samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(5, 0.0, 2.0);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn linear_fit_exact_line() {
        let (a, b, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
