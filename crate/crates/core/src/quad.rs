//! Gauss–Legendre quadrature utilities shared by the kernel-evaluating
//! modules.
//!
//! Three integral shapes recur throughout the crate:
//!
//! * smooth integrands on finite intervals (composite panels),
//! * Gaussian-windowed integrands, smooth × e^{-(x-μ)²/4σ}, where everything
//!   outside a window around μ is below target accuracy,
//! * weakly singular time convolutions ∫₀ᵗ F(τ)(t-τ)^{-1/2} dτ, where the
//!   endpoint is tamed by the substitution t-τ = s².

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Gaussian window cut-off: the factor e^{-(x-μ)²/4σ} is treated as zero
/// once the exponent is below -41.5 (≈ 1e-18).
const WINDOW_LOG_EPS: f64 = 41.5;

/// Gauss–Legendre order used inside every composite panel.
const GL_ORDER: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("y_max must be positive and finite, got {0}")]
    BadYMax(f64),
    #[error("n_space must be at least 16, got {0}")]
    BadNSpace(usize),
    #[error("n_time must be at least 16, got {0}")]
    BadNTime(usize),
    #[error("sing_split must lie strictly inside (0, 1), got {0}")]
    BadSingSplit(f64),
}

/// Resolution knobs for the kernel quadratures.
///
/// `sing_split` is the fraction of a time-convolution interval, measured from
/// the singular endpoint τ = t, that is integrated in the substituted
/// variable s = √(t-τ); the remainder is integrated directly in τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Spatial truncation radius for half-line integrals.
    pub y_max: f64,
    /// Gauss–Legendre panel count per spatial axis.
    pub n_space: usize,
    /// Gauss–Legendre panel count per time-integral segment.
    pub n_time: usize,
    /// Fraction of each time interval handled in the substituted variable.
    pub sing_split: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            y_max: 40.0,
            n_space: 32,
            n_time: 32,
            sing_split: 0.5,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.y_max > 0.0) || !self.y_max.is_finite() {
            return Err(QuadError::BadYMax(self.y_max));
        }
        if self.n_space < 16 {
            return Err(QuadError::BadNSpace(self.n_space));
        }
        if self.n_time < 16 {
            return Err(QuadError::BadNTime(self.n_time));
        }
        if !(self.sing_split > 0.0 && self.sing_split < 1.0) {
            return Err(QuadError::BadSingSplit(self.sing_split));
        }
        Ok(())
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes via Newton iteration on P_n; weights w = 2 / ((1-x²) P_n'(x)²).
    fn compute(n: usize) -> GaussLegendre {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P_n'(x).
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f, single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Cached rule lookup; rules are built once and leaked (a handful of orders
/// exist over a process lifetime).
pub fn gl(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::compute(n))))
}

/// Composite Gauss–Legendre over [a, b] with `panels` equal panels.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = gl(GL_ORDER);
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        acc += rule.integrate(lo, lo + width, &mut f);
    }
    acc
}

/// Window outside which e^{-(x-μ)²/4σ} is below the truncation threshold.
pub fn gaussian_window(mu: f64, sigma: f64) -> (f64, f64) {
    let hw = 2.0 * (sigma * WINDOW_LOG_EPS).sqrt();
    (mu - hw, mu + hw)
}

/// Clip intervals to [lo, hi], drop empty ones, and merge overlaps.
pub fn merge_clip(mut intervals: Vec<(f64, f64)>, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    for iv in intervals.iter_mut() {
        iv.0 = iv.0.max(lo);
        iv.1 = iv.1.min(hi);
    }
    intervals.retain(|iv| iv.1 > iv.0);
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
            _ => merged.push(iv),
        }
    }
    merged
}

/// Integrate a smooth × Gaussian integrand over the union of the given
/// windows (already clipped/merged), `panels` panels per window.
pub fn integrate_windows<F: FnMut(f64) -> f64>(
    windows: &[(f64, f64)],
    panels: usize,
    mut f: F,
) -> f64 {
    let mut acc = 0.0;
    for &(a, b) in windows {
        acc += integrate(a, b, panels, &mut f);
    }
    acc
}

/// Kernel weight attached to the quadrature nodes of a time convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKernel {
    /// Nodes approximate ∫₀ᵗ F(τ) (t-τ)^{-1/2} dτ ≈ Σ wᵢ F(τᵢ).
    InvSqrt,
    /// Nodes approximate ∫₀ᵗ F(τ) dτ, robust to √(t-τ)-type behaviour of F
    /// near τ = t (the substituted segment absorbs it).
    Flat,
}

/// One node of a time convolution: position τ, distance σ = t-τ to the
/// endpoint, and quadrature weight.
///
/// σ is carried explicitly because recomputing it as t-τ cancels
/// catastrophically once σ ≪ t·ε, and kernels like e^{-y²/4σ} amplify any
/// relative error in σ.
#[derive(Debug, Clone, Copy)]
pub struct TimeNode {
    pub tau: f64,
    pub sigma: f64,
    pub weight: f64,
}

/// Quadrature nodes for time convolutions on [0, t].
///
/// The interval is split at τ = (1-sing_split)·t. The left segment is
/// integrated directly in τ; the right segment in s = √(t-τ), which removes
/// an inverse-square-root endpoint singularity exactly.
pub fn time_nodes(t: f64, spec: &QuadratureSpec, kernel: TimeKernel) -> Vec<TimeNode> {
    if t <= 0.0 {
        return Vec::new();
    }
    let rule = gl(GL_ORDER);
    let split = (1.0 - spec.sing_split) * t;
    let s_max = (t - split).sqrt();
    let mut out = Vec::with_capacity(2 * spec.n_time * rule.nodes.len());

    // Direct segment [0, split]: t-τ ≥ sing_split·t > 0, kernel is smooth.
    let width = split / spec.n_time as f64;
    for p in 0..spec.n_time {
        let lo = p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let tau = mid + 0.5 * width * x;
            let sigma = t - tau;
            let wq = 0.5 * width * w;
            let weight = match kernel {
                TimeKernel::InvSqrt => wq / sigma.sqrt(),
                TimeKernel::Flat => wq,
            };
            out.push(TimeNode { tau, sigma, weight });
        }
    }

    // Substituted segment: τ = t - s², dτ = -2s ds, s ∈ (0, s_max].
    let width = s_max / spec.n_time as f64;
    for p in 0..spec.n_time {
        let lo = p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let s = mid + 0.5 * width * x;
            let sigma = s * s;
            let tau = t - sigma;
            let wq = 0.5 * width * w;
            let weight = match kernel {
                TimeKernel::InvSqrt => 2.0 * wq,
                TimeKernel::Flat => 2.0 * s * wq,
            };
            out.push(TimeNode { tau, sigma, weight });
        }
    }
    out
}

/// Time-convolution nodes (InvSqrt semantics) for kernels that additionally
/// carry a factor like (y+σ) σ^{-1} e^{-(y+σ)²/4σ}, σ = t-τ.
///
/// In the substituted variable s = √σ such kernels have a bump of height
/// O(1/y) and width ~ y/4 centred at s ≈ y/2; uniform panels miss it once y
/// is below the panel width. The whole interval is integrated in s with
/// geometric panel refinement anchored at the scale of y.
pub fn time_nodes_graded(t: f64, y: f64, spec: &QuadratureSpec) -> Vec<TimeNode> {
    if t <= 0.0 {
        return Vec::new();
    }
    let s_max = t.sqrt();
    let y = y.abs();

    // Breakpoints: geometric ladder upward from y/16, resolving both the
    // bump at s ≈ y/2 and the slow y/s² decay past it, then a uniform tail
    // over the last partial rung. Quarter-octave rungs keep the steep
    // turn-on of e^{-y²/4s²} (about 12 e-foldings per octave) to a few
    // e-foldings per panel.
    let ratio = 2f64.powf(0.25);
    let mut breaks = vec![0.0];
    if y > 0.0 && y / 16.0 < s_max {
        let mut b = y / 16.0;
        while b < s_max {
            breaks.push(b);
            b *= ratio;
        }
    }
    let tail_lo = *breaks.last().unwrap();
    if tail_lo < s_max {
        let n_tail = spec.n_time.max(8);
        let width = (s_max - tail_lo) / n_tail as f64;
        for p in 1..=n_tail {
            breaks.push(tail_lo + p as f64 * width);
        }
    }

    let rule = gl(GL_ORDER);
    let mut out = Vec::with_capacity((breaks.len() - 1) * rule.nodes.len());
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let s = mid + half * x;
            let sigma = s * s;
            out.push(TimeNode {
                tau: t - sigma,
                sigma,
                weight: 2.0 * half * w,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gl(GL_ORDER);
        // Degree 2n-1 = 23 is the exactness limit.
        for k in 0..=23u32 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
            assert!(
                (got - exact).abs() < 1e-13,
                "degree {k}: got {got}, want {exact}"
            );
        }
    }

    #[test]
    fn composite_panels_handle_smooth_integrands() {
        let got = integrate(0.0, 2.0, 8, f64::exp);
        let exact = 2.0_f64.exp() - 1.0;
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn window_bound_is_below_threshold() {
        let sigma = 0.37;
        let (lo, hi) = gaussian_window(1.3, sigma);
        for x in [lo, hi] {
            let val = (-(x - 1.3) * (x - 1.3) / (4.0 * sigma)).exp();
            assert!(val < 1e-17);
        }
    }

    #[test]
    fn merge_clip_merges_and_clips() {
        let merged = merge_clip(vec![(3.0, 5.0), (-1.0, 2.0), (1.5, 3.5)], 0.0, 4.0);
        assert_eq!(merged, vec![(0.0, 4.0)]);
        let merged = merge_clip(vec![(3.0, 5.0), (-1.0, 2.0)], 0.0, 4.0);
        assert_eq!(merged, vec![(0.0, 2.0), (3.0, 4.0)]);
        let merged = merge_clip(vec![(-3.0, -1.0)], 0.0, 4.0);
        assert!(merged.is_empty());
    }

    #[test]
    fn inv_sqrt_nodes_reproduce_the_constant_convolution() {
        // ∫₀ᵗ (t-τ)^{-1/2} dτ = 2√t.
        let spec = QuadratureSpec::default();
        for t in [0.25, 1.0, std::f64::consts::PI] {
            let sum: f64 = time_nodes(t, &spec, TimeKernel::InvSqrt)
                .iter()
                .map(|n| n.weight)
                .sum();
            assert!((sum - 2.0 * t.sqrt()).abs() < 1e-10, "t={t}: {sum}");
        }
    }

    #[test]
    fn flat_nodes_handle_sqrt_endpoint_behaviour() {
        let spec = QuadratureSpec::default();
        let t = 1.7;
        let total: f64 = time_nodes(t, &spec, TimeKernel::Flat)
            .iter()
            .map(|n| n.weight * n.sigma.sqrt())
            .sum();
        let exact = 2.0 / 3.0 * t.powf(1.5);
        assert!((total - exact).abs() < 1e-10);
        let plain: f64 = time_nodes(t, &spec, TimeKernel::Flat)
            .iter()
            .map(|n| n.weight)
            .sum();
        assert!((plain - t).abs() < 1e-10);
    }

    #[test]
    fn graded_nodes_match_plain_nodes_on_smooth_data() {
        let spec = QuadratureSpec::default();
        let t = 0.9;
        let f = |tau: f64| (1.0 + tau).cos();
        let plain: f64 = time_nodes(t, &spec, TimeKernel::InvSqrt)
            .iter()
            .map(|n| n.weight * f(n.tau))
            .sum();
        let graded: f64 = time_nodes_graded(t, 0.3, &spec)
            .iter()
            .map(|n| n.weight * f(n.tau))
            .sum();
        assert!((plain - graded).abs() < 1e-9, "{plain} vs {graded}");
    }

    #[test]
    fn graded_nodes_resolve_a_narrow_boundary_layer_kernel() {
        // ∫₀ᵗ (y+σ) σ^{-3/2} e^{-(y+σ)²/4σ} dτ, σ = t-τ, has an O(1/y)-high,
        // O(y)-wide feature in s = √σ; compare against a dense trapezoid in s.
        let spec = QuadratureSpec::default();
        let t = 1.0;
        for y in [1e-3_f64, 0.02, 0.1, 0.5] {
            let kernel = |sigma: f64| {
                (y + sigma) / sigma * (-(y + sigma) * (y + sigma) / (4.0 * sigma)).exp()
            };
            let got: f64 = time_nodes_graded(t, y, &spec)
                .iter()
                .map(|n| n.weight * kernel(n.sigma))
                .sum();
            // Dense reference: ∫ = ∫₀^√t kernel(s²) · 2 ds.
            let n = 4_000_000;
            let ds = t.sqrt() / n as f64;
            let mut reference = 0.0;
            for i in 0..=n {
                let s = i as f64 * ds;
                let v = if s == 0.0 { 0.0 } else { 2.0 * kernel(s * s) };
                reference += if i == 0 || i == n { 0.5 * v } else { v };
            }
            reference *= ds;
            // The trapezoid reference itself degrades as the feature narrows.
            let tol = if y < 0.01 { 5e-7 } else { 1e-8 };
            assert!(
                (got - reference).abs() < tol,
                "y={y}: got {got}, reference {reference}"
            );
        }
    }

    #[test]
    fn spec_validation_rejects_bad_fields() {
        let ok = QuadratureSpec::default();
        assert!(ok.validate().is_ok());
        assert_eq!(
            QuadratureSpec { y_max: -1.0, ..ok }.validate(),
            Err(QuadError::BadYMax(-1.0))
        );
        assert_eq!(
            QuadratureSpec { n_space: 8, ..ok }.validate(),
            Err(QuadError::BadNSpace(8))
        );
        assert_eq!(
            QuadratureSpec { n_time: 15, ..ok }.validate(),
            Err(QuadError::BadNTime(15))
        );
        assert_eq!(
            QuadratureSpec { sing_split: 1.0, ..ok }.validate(),
            Err(QuadError::BadSingSplit(1.0))
        );
    }
}
