//! Fixed-point solver for the coupled half-line perturbation system
//!
//!   u±_t = (1 ± γ) u±_y + u±_yy + γ e^{−y},   u±(t, 0) = 0,
//!
//! written in integral form: u± = u₁± + u₂ ± u₃± (free evolution of the
//! data, the γ·e^{−y} source response, and the γ·u_y convolution) together
//! with γ = γ₁ + γ₂ + γ₃ built from the boundary traces. Iterating the two
//! maps from (u₁±, 0) converges for small data and serves as an oracle for
//! the difference scheme on short horizons.
//!
//! Derivatives of the iterates are evaluated through analytically
//! differentiated kernels (with boundary terms collected into the
//! boundary-layer solution ν), never by differencing samples.

use crate::field::{FieldError, GammaSignal, PerturbationField};
use crate::heat_kernel::{odd_exact_solution, HeatError};
use crate::quad::{self, gl, merge_clip, time_nodes, QuadError, QuadratureSpec, TimeKernel, TimeNode};
use crate::Side;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PicardError {
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("need at least 4 time levels, got {0}")]
    TooFewLevels(usize),
    #[error("grid step must be positive and smaller than the span, got {0}")]
    BadGridStep(f64),
    #[error("span must be positive and finite, got {0}")]
    BadSpan(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("max_iter must be at least 1")]
    BadMaxIter,
    #[error("data does not vanish at the interface, u0(0) = {0}")]
    NonzeroBoundary(f64),
    #[error("initial continuity violated: u0+'(0) + u0-'(0) = {0}")]
    ContinuityViolated(f64),
    #[error("data outside the small-perturbation regime, combined norm {0}")]
    DataTooLarge(f64),
    #[error("field map produced a non-finite value at t = {t}, y = {y}")]
    NonFiniteField { t: f64, y: f64 },
    #[error("gamma map produced a non-finite value at t = {t}")]
    NonFiniteGamma { t: f64 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Heat(#[from] HeatError),
}

/// Discretization and stopping parameters of the fixed-point iteration.
///
/// Kernel-evaluation cost grows quadratically in the number of time levels;
/// the defaults keep a solve in the tens of seconds while staying well
/// inside the tolerance needed to cross-check the difference scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub t_final: f64,
    /// Number of time steps; the grid stores n_time_levels + 1 levels.
    pub n_time_levels: usize,
    pub grid_step: f64,
    /// Spatial truncation of the stored iterates.
    pub y_span: f64,
    /// Sup-norm change over the grid below which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Outer γ loop with an inner u± loop instead of alternating sweeps.
    pub nested: bool,
    pub quad: QuadratureSpec,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            t_final: 0.5,
            n_time_levels: 64,
            grid_step: 0.05,
            y_span: 8.0,
            tol: 1e-4,
            max_iter: 12,
            nested: false,
            quad: QuadratureSpec {
                y_max: 12.0,
                n_space: 16,
                n_time: 16,
                sing_split: 0.5,
            },
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<(), PicardError> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(PicardError::BadHorizon(self.t_final));
        }
        if self.n_time_levels < 4 {
            return Err(PicardError::TooFewLevels(self.n_time_levels));
        }
        if !(self.y_span > 0.0) || !self.y_span.is_finite() {
            return Err(PicardError::BadSpan(self.y_span));
        }
        if !(self.grid_step > 0.0) || self.grid_step >= self.y_span {
            return Err(PicardError::BadGridStep(self.grid_step));
        }
        if !(self.tol > 0.0) {
            return Err(PicardError::BadTolerance(self.tol));
        }
        if self.max_iter == 0 {
            return Err(PicardError::BadMaxIter);
        }
        self.quad.validate()?;
        Ok(())
    }

    pub fn time_step(&self) -> f64 {
        self.t_final / self.n_time_levels as f64
    }

    fn node_count(&self) -> usize {
        (self.y_span / self.grid_step).round() as usize + 1
    }
}

/// The iterate: u± levels on a shared (time × space) grid, each carrying
/// analytic d1/d2 samples, and γ on the same time grid. u±(t, 0) = 0 at
/// every level by construction of the maps.
#[derive(Debug, Clone)]
pub struct PicardState {
    pub time_step: f64,
    pub u_plus: Vec<PerturbationField>,
    pub u_minus: Vec<PerturbationField>,
    pub gamma: GammaSignal,
}

impl PicardState {
    /// Starting iterate of the fixed point: u± = u₁± (free half-line
    /// evolution of the data) and γ ≡ 0.
    pub fn initial(
        u0_plus: &PerturbationField,
        u0_minus: &PerturbationField,
        cfg: &PicardConfig,
    ) -> Result<PicardState, PicardError> {
        cfg.validate()?;
        let rs_p = resample(u0_plus, cfg)?;
        let rs_m = resample(u0_minus, cfg)?;
        let (u1p, u1m) = build_free_evolution(&rs_p, &rs_m, cfg)?;
        let gamma = GammaSignal::new(cfg.time_step(), vec![0.0; cfg.n_time_levels + 1])?;
        Ok(PicardState {
            time_step: cfg.time_step(),
            u_plus: u1p,
            u_minus: u1m,
            gamma,
        })
    }

    pub fn level_count(&self) -> usize {
        self.u_plus.len()
    }

    pub fn t_final(&self) -> f64 {
        (self.level_count() - 1) as f64 * self.time_step
    }

    fn side_levels(&self, side: Side) -> &[PerturbationField] {
        match side {
            Side::Plus => &self.u_plus,
            Side::Minus => &self.u_minus,
        }
    }

    /// One-sided boundary traces at y = 0⁺ from the stored derivative
    /// samples.
    pub fn boundary_d1(&self, side: Side, level: usize) -> f64 {
        self.side_levels(side)[level].d1().unwrap()[0]
    }

    pub fn boundary_d2(&self, side: Side, level: usize) -> f64 {
        self.side_levels(side)[level].d2().unwrap()[0]
    }

    /// |u_y + u_yy + γ(1 ± u_y)| at y = 0⁺, the residual of the interface
    /// velocity law each side must satisfy (the minus side carries 1 − u_y).
    pub fn dynamical_residual(&self, side: Side, level: usize) -> f64 {
        let g = self.gamma.values()[level];
        let d1 = self.boundary_d1(side, level);
        let d2 = self.boundary_d2(side, level);
        let drift = match side {
            Side::Plus => 1.0 + d1,
            Side::Minus => 1.0 - d1,
        };
        (d1 + d2 + g * drift).abs()
    }

    fn continuity_residual(&self, level: usize) -> f64 {
        (self.boundary_d1(Side::Plus, level) + self.boundary_d1(Side::Minus, level)).abs()
    }

    fn interface_residual(&self, level: usize) -> f64 {
        (self.boundary_d2(Side::Plus, level) - self.boundary_d2(Side::Minus, level)
            + 2.0 * self.boundary_d1(Side::Plus, level))
        .abs()
    }
}

/// Convergence record of a solve.
#[derive(Debug, Clone)]
pub struct PicardReport {
    pub iterations: usize,
    pub converged: bool,
    /// Sup change of the iterate after each sweep.
    pub sweep_changes: Vec<f64>,
    /// |u⁺_y + u⁻_y|(t, 0⁺) per level at the final iterate.
    pub continuity_residuals: Vec<f64>,
    /// |u⁺_yy − u⁻_yy + 2u⁺_y|(t, 0⁺) per level at the final iterate.
    pub interface_residuals: Vec<f64>,
}

impl PicardReport {
    pub fn max_continuity_residual(&self) -> f64 {
        self.continuity_residuals.iter().fold(0.0, |m, r| m.max(*r))
    }

    pub fn max_interface_residual(&self) -> f64 {
        self.interface_residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

const INV_SQRT_4PI: f64 = 0.28209479177387814; // (4π)^{−1/2}

/// Gaussian truncation for the picard kernels: e^{−(x−μ)²/4σ} is dropped
/// below e^{−16}; iterate magnitudes are O(10⁻¹), so the truncation sits
/// around 1e−8, far below the fixed-point tolerance.
fn kernel_window(mu: f64, sigma: f64) -> (f64, f64) {
    let hw = 8.0 * sigma.sqrt();
    (mu - hw, mu + hw)
}

const LADDER_GL: usize = 8;
const LADDER_TAIL: usize = 8;

/// Time-convolution nodes on [0, t] in the substituted variable s = √(t−τ)
/// with half-octave geometric refinement anchored at the scale of y, a
/// cheaper cousin of the shared graded ladder (the fixed-point sweeps visit
/// every (t, y) pair, so node economy dominates accuracy headroom here).
/// InvSqrt semantics: Σ wᵢ F(τᵢ) ≈ ∫₀ᵗ F(τ)(t−τ)^{−1/2} dτ.
fn ladder(t: f64, y: f64) -> Vec<TimeNode> {
    if t <= 0.0 {
        return Vec::new();
    }
    let s_max = t.sqrt();
    let y = y.abs();
    let ratio = std::f64::consts::SQRT_2;
    let mut breaks = vec![0.0];
    if y > 0.0 && y / 8.0 < s_max {
        let mut b = y / 8.0;
        while b < s_max {
            breaks.push(b);
            b *= ratio;
        }
    }
    let tail_lo = *breaks.last().unwrap();
    if tail_lo < s_max {
        let width = (s_max - tail_lo) / LADDER_TAIL as f64;
        for p in 1..=LADDER_TAIL {
            breaks.push(tail_lo + p as f64 * width);
        }
    }
    let rule = gl(LADDER_GL);
    let mut out = Vec::with_capacity((breaks.len() - 1) * LADDER_GL);
    for pair in breaks.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let half = 0.5 * (pair[1] - pair[0]);
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

/// Interpolate a boundary-trace series between levels. Heat-flow traces at
/// the interface behave like c₀ + c₁√t + c₂t near t = 0; the first two
/// intervals fit that model through levels 0, 1, 2 (quadratic in √τ), and
/// linear interpolation takes over where the traces are smooth.
fn lerp_trace(trace: &[f64], dt: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return trace[0];
    }
    let pos = tau / dt;
    if pos < 2.0 && trace.len() > 2 {
        let s = pos.sqrt();
        let r = std::f64::consts::SQRT_2;
        let l0 = (s - 1.0) * (s - r) / r;
        let l1 = s * (s - r) / (1.0 - r);
        let l2 = s * (s - 1.0) / (r * (r - 1.0));
        return trace[0] * l0 + trace[1] * l1 + trace[2] * l2;
    }
    let idx = (pos.floor() as usize).min(trace.len() - 1);
    if idx + 1 >= trace.len() {
        return trace[trace.len() - 1];
    }
    let fr = pos - idx as f64;
    trace[idx] * (1.0 - fr) + trace[idx + 1] * fr
}

/// Resample data onto the solver grid, requiring d1 samples; d2 falls back
/// to differenced d1 when the data does not carry it.
fn resample(u0: &PerturbationField, cfg: &PicardConfig) -> Result<PerturbationField, PicardError> {
    let h = cfg.grid_step;
    let n = cfg.node_count();
    let mut values = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    for j in 0..n {
        let y = j as f64 * h;
        values.push(u0.eval(y));
        d1.push(u0.eval_d1(y)?);
    }
    if values[0].abs() > 1e-10 {
        return Err(PicardError::NonzeroBoundary(values[0]));
    }
    let d2 = if u0.has_d2() {
        (0..n)
            .map(|j| u0.eval_d2(j as f64 * h))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let mut fd = vec![0.0; n];
        for j in 1..n - 1 {
            fd[j] = (d1[j + 1] - d1[j - 1]) / (2.0 * h);
        }
        fd[0] = (d1[1] - d1[0]) / h;
        fd[n - 1] = (d1[n - 1] - d1[n - 2]) / h;
        fd
    };
    Ok(PerturbationField::new(h, values)?.with_d1(d1)?.with_d2(d2)?)
}

/// u₁± on every level: free half-line evolution of the resampled data,
/// evaluated with value/d1/d2 kernels. Level 0 is the data itself.
fn build_free_evolution(
    rs_p: &PerturbationField,
    rs_m: &PerturbationField,
    cfg: &PicardConfig,
) -> Result<(Vec<PerturbationField>, Vec<PerturbationField>), PicardError> {
    let dt = cfg.time_step();
    let h = cfg.grid_step;
    let n = cfg.node_count();
    let mut out_p = vec![rs_p.clone()];
    let mut out_m = vec![rs_m.clone()];
    for k in 1..=cfg.n_time_levels {
        let t = k as f64 * dt;
        for (rs, out) in [(rs_p, &mut out_p), (rs_m, &mut out_m)] {
            let mut values = Vec::with_capacity(n);
            let mut d1 = Vec::with_capacity(n);
            let mut d2 = Vec::with_capacity(n);
            for j in 0..n {
                let y = j as f64 * h;
                values.push(odd_exact_solution(rs, t, y, 0, &cfg.quad)?);
                d1.push(odd_exact_solution(rs, t, y, 1, &cfg.quad)?);
                d2.push(odd_exact_solution(rs, t, y, 2, &cfg.quad)?);
            }
            out.push(PerturbationField::new(h, values)?.with_d1(d1)?.with_d2(d2)?);
        }
    }
    Ok((out_p, out_m))
}

/// The γ·u_y convolution term at one time node: inner η-integrals of the
/// direct and image kernels against the interpolated iterate, returning the
/// (value, ∂_y, ∂²_y) triple with all derivative weight shifted onto the
/// kernels by parts.
#[allow(clippy::too_many_arguments)]
fn inner_convolution(
    f_lo: &PerturbationField,
    f_hi: &PerturbationField,
    fr: f64,
    y: f64,
    sigma: f64,
    ey: f64,
    windows: &[(f64, f64)],
) -> (f64, f64, f64) {
    let rule = gl(LADDER_GL);
    let inv4s = 1.0 / (4.0 * sigma);
    let inv2s = 1.0 / (2.0 * sigma);
    let (mut iv, mut id1, mut id2) = (0.0, 0.0, 0.0);
    for &(a, b) in windows {
        let panels = 4;
        let pw = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * pw;
            let mid = lo + 0.5 * pw;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let eta = mid + 0.5 * pw * x;
                let wq = 0.5 * pw * w;
                let a1 = y - eta + sigma;
                let a2 = y + eta - sigma;
                let k1 = (-a1 * a1 * inv4s).exp();
                let k2 = ey * (-a2 * a2 * inv4s).exp();
                if k1 == 0.0 && k2 == 0.0 {
                    continue;
                }
                let u = (1.0 - fr) * f_lo.eval(eta) + fr * f_hi.eval(eta);
                let du = (1.0 - fr) * f_lo.eval_d1(eta).unwrap()
                    + fr * f_hi.eval_d1(eta).unwrap();
                let ddu = (1.0 - fr) * f_lo.eval_d2(eta).unwrap()
                    + fr * f_hi.eval_d2(eta).unwrap();
                let w1 = a1 * inv2s;
                let w2 = a2 * inv2s;
                iv += wq * du * (k1 - k2);
                id1 += wq * (-du * w1 * k1 + k2 * w2 * (du + u));
                id2 += wq * (-ddu * w1 * k1 - k2 * w2 * (ddu + 2.0 * du + u));
            }
        }
    }
    (iv, id1, id2)
}

/// One application of A±: u± = u₁± + u₂ ± u₃± with derivatives, on every
/// level and node. `u1_*` are the cached free-evolution levels; γ and the
/// convolution argument come from `state`.
fn field_sweep(
    state: &PicardState,
    u1_p: &[PerturbationField],
    u1_m: &[PerturbationField],
    cfg: &PicardConfig,
) -> Result<(Vec<PerturbationField>, Vec<PerturbationField>), PicardError> {
    let dt = cfg.time_step();
    let h = cfg.grid_step;
    let n = cfg.node_count();
    let levels = cfg.n_time_levels;
    let gamma_vals = state.gamma.values();
    let gam = |tau: f64| lerp_trace(gamma_vals, dt, tau);

    let mut result = Vec::with_capacity(2);
    for side in [Side::Plus, Side::Minus] {
        let u1 = match side {
            Side::Plus => u1_p,
            Side::Minus => u1_m,
        };
        let old = state.side_levels(side);
        let sign = side.sign();
        // ∂_y u±(τ, 0⁺) trace feeding the boundary-layer correction of u₃.
        let trace: Vec<f64> = old.iter().map(|f| f.d1().unwrap()[0]).collect();
        let gam_t = |tau: f64| gam(tau) * lerp_trace(&trace, dt, tau);

        let mut out = vec![u1[0].clone()];
        for k in 1..=levels {
            let t = k as f64 * dt;
            let mut values = Vec::with_capacity(n);
            let mut d1 = Vec::with_capacity(n);
            let mut d2 = Vec::with_capacity(n);
            for j in 0..n {
                let y = j as f64 * h;
                let ey = (-y).exp();
                let (mut u2v, mut u2j1) = (0.0, 0.0);
                let (mut nu, mut nu_y, mut nu_t, mut nu_ty) = (0.0, 0.0, 0.0, 0.0);
                let (mut u3v, mut u3d1, mut u3d2) = (0.0, 0.0, 0.0);
                for node in ladder(t, y) {
                    let sigma = node.sigma;
                    let w = node.weight;
                    let g = gam(node.tau);
                    let gt = gam_t(node.tau);
                    let sq = sigma.sqrt();

                    // Source response: J0 and its derivative building block.
                    if g != 0.0 {
                        let j1 = 0.5 * ey * libm::erfc((sigma - y) / (2.0 * sq));
                        let j0 = j1 - 0.5 * libm::erfc((sigma + y) / (2.0 * sq));
                        u2v += w * g * j0 * sq;
                        u2j1 += w * g * j1 * sq;
                    }

                    // Boundary-layer kernels, shared by ν and ν̃.
                    let z = y + sigma;
                    let e_z = (-z * z / (4.0 * sigma)).exp();
                    if e_z > 0.0 {
                        let k0 = 2.0 * INV_SQRT_4PI * e_z;
                        let k1 = -INV_SQRT_4PI * z / sigma * e_z;
                        nu += w * g * k0;
                        nu_y += w * g * k1;
                        nu_t += w * gt * k0;
                        nu_ty += w * gt * k1;
                    }

                    // γ·u_y convolution against the previous iterate.
                    if g != 0.0 {
                        let windows = merge_clip(
                            vec![kernel_window(y + sigma, sigma), kernel_window(sigma - y, sigma)],
                            0.0,
                            cfg.y_span,
                        );
                        if !windows.is_empty() {
                            let pos = node.tau / dt;
                            let lo = (pos.floor() as usize).min(levels);
                            let hi = (lo + 1).min(levels);
                            let fr = (pos - lo as f64).clamp(0.0, 1.0);
                            let (iv, e1, e2) = inner_convolution(
                                &old[lo], &old[hi], fr, y, sigma, ey, &windows,
                            );
                            u3v += w * g * INV_SQRT_4PI * iv;
                            u3d1 += w * g * INV_SQRT_4PI * e1;
                            u3d2 += w * g * INV_SQRT_4PI * e2;
                        }
                    }
                }
                // One-sided limits at the interface: the raw kernel integral
                // yields the mean across the axis, and the jump is the
                // driving signal itself.
                if j == 0 {
                    nu_y -= gam(t);
                    nu_ty -= gam_t(t);
                }
                let v = u1[k].values()[j] + u2v + sign * u3v;
                let dv = u1[k].d1().unwrap()[j] + (-u2j1 + nu) + sign * u3d1;
                let ddv = u1[k].d2().unwrap()[j]
                    + (u2j1 - 0.5 * nu + nu_y)
                    + sign * (u3d2 + nu_ty + 0.5 * nu_t);
                if !v.is_finite() || !dv.is_finite() || !ddv.is_finite() {
                    return Err(PicardError::NonFiniteField { t, y });
                }
                values.push(v);
                d1.push(dv);
                d2.push(ddv);
            }
            out.push(PerturbationField::new(h, values)?.with_d1(d1)?.with_d2(d2)?);
        }
        result.push(out);
    }
    let u_minus = result.pop().unwrap();
    let u_plus = result.pop().unwrap();
    Ok((u_plus, u_minus))
}

/// One application of the γ map on every level: the initial-data term, the
/// boundary-trace terms, and the interior convolution.
fn gamma_sweep(
    state: &PicardState,
    rs_p: &PerturbationField,
    rs_m: &PerturbationField,
    cfg: &PicardConfig,
) -> Result<Vec<f64>, PicardError> {
    let dt = cfg.time_step();
    let levels = cfg.n_time_levels;
    let gamma_vals = state.gamma.values();
    let gam = |tau: f64| lerp_trace(gamma_vals, dt, tau);

    // Boundary traces [u⁺_y − u⁻_y](τ, 0⁺) on the levels.
    let delta: Vec<f64> = (0..=levels)
        .map(|k| state.boundary_d1(Side::Plus, k) - state.boundary_d1(Side::Minus, k))
        .collect();

    let hi = cfg.y_span.min(cfg.quad.y_max);
    let p0 = |eta: f64| {
        rs_p.eval_d1(eta).unwrap()
            + rs_m.eval_d1(eta).unwrap()
            + 0.5 * (rs_p.eval(eta) + rs_m.eval(eta))
    };

    let mut out = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let t = k as f64 * dt;
        let g = if k == 0 {
            // t → 0 limit: the kernel concentrates at η = 0 and picks out
            // −½ p′(0); the continuity condition has removed the divergent
            // p(0) contribution.
            let dp = rs_p.d2().unwrap()[0]
                + rs_m.d2().unwrap()[0]
                + 0.5 * (rs_p.d1().unwrap()[0] + rs_m.d1().unwrap()[0]);
            -0.5 * dp - 0.5 * gam(0.0) * delta[0]
        } else {
            // γ₁: data term with the (η+t)/2t kernel.
            let windows = merge_clip(vec![kernel_window(t, t)], 0.0, hi);
            let pref = INV_SQRT_4PI / t.sqrt();
            let g1 = -quad::integrate_windows(&windows, cfg.quad.n_space, |eta| {
                let a = eta - t;
                p0(eta) * (eta + t) / (2.0 * t) * (-a * a / (4.0 * t)).exp()
            }) * pref;

            // γ₂: boundary traces against the e^{−σ/4} kernel.
            let mut g2 = -0.5 * gam(t) * lerp_trace(&delta, dt, t);
            for node in time_nodes(t, &cfg.quad, TimeKernel::InvSqrt) {
                g2 -= 0.5
                    * node.weight
                    * gam(node.tau)
                    * (-node.sigma / 4.0).exp()
                    * INV_SQRT_4PI
                    * lerp_trace(&delta, dt, node.tau);
            }

            // γ₃: interior convolution of p = u⁺_yy − u⁻_yy + ½(u⁺_y − u⁻_y).
            let mut g3 = 0.0;
            for node in time_nodes(t, &cfg.quad, TimeKernel::InvSqrt) {
                let sigma = node.sigma;
                let gv = gam(node.tau);
                if gv == 0.0 {
                    continue;
                }
                let pos = node.tau / dt;
                let lo = (pos.floor() as usize).min(levels);
                let hi_l = (lo + 1).min(levels);
                let fr = (pos - lo as f64).clamp(0.0, 1.0);
                let p = |eta: f64| {
                    let trace = |f: &PerturbationField| {
                        f.eval_d2(eta).unwrap() + 0.5 * f.eval_d1(eta).unwrap()
                    };
                    let plus = (1.0 - fr) * trace(&state.u_plus[lo]) + fr * trace(&state.u_plus[hi_l]);
                    let minus =
                        (1.0 - fr) * trace(&state.u_minus[lo]) + fr * trace(&state.u_minus[hi_l]);
                    plus - minus
                };
                let windows = merge_clip(vec![kernel_window(sigma, sigma)], 0.0, cfg.y_span);
                let inner = quad::integrate_windows(&windows, 4, |eta| {
                    let a = eta - sigma;
                    p(eta) * (eta + sigma) / (2.0 * sigma) * (-a * a / (4.0 * sigma)).exp()
                });
                g3 -= node.weight * gv * INV_SQRT_4PI * inner;
            }
            g1 + g2 + g3
        };
        if !g.is_finite() {
            return Err(PicardError::NonFiniteGamma { t });
        }
        out.push(g);
    }
    Ok(out)
}

fn check_continuity(
    rs_p: &PerturbationField,
    rs_m: &PerturbationField,
) -> Result<(), PicardError> {
    let s = rs_p.d1().unwrap()[0] + rs_m.d1().unwrap()[0];
    if s.abs() > 1e-10 {
        return Err(PicardError::ContinuityViolated(s));
    }
    Ok(())
}

fn sup_diff_levels(a: &[PerturbationField], b: &[PerturbationField]) -> f64 {
    let mut m = 0.0f64;
    for (fa, fb) in a.iter().zip(b) {
        for (x, y) in fa.values().iter().zip(fb.values()) {
            m = m.max((x - y).abs());
        }
    }
    m
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Evaluate A± at the current iterate: the combination u₁± + u₂ ± u₃± and
/// its derivatives on the whole grid, with γ and the convolution argument
/// frozen at `state`.
pub fn apply_field_map(
    state: &PicardState,
    u0_plus: &PerturbationField,
    u0_minus: &PerturbationField,
    cfg: &PicardConfig,
) -> Result<(Vec<PerturbationField>, Vec<PerturbationField>), PicardError> {
    cfg.validate()?;
    let rs_p = resample(u0_plus, cfg)?;
    let rs_m = resample(u0_minus, cfg)?;
    let (u1p, u1m) = build_free_evolution(&rs_p, &rs_m, cfg)?;
    field_sweep(state, &u1p, &u1m, cfg)
}

/// Evaluate the γ map at the current iterate.
pub fn apply_gamma_map(
    state: &PicardState,
    u0_plus: &PerturbationField,
    u0_minus: &PerturbationField,
    cfg: &PicardConfig,
) -> Result<GammaSignal, PicardError> {
    cfg.validate()?;
    let rs_p = resample(u0_plus, cfg)?;
    let rs_m = resample(u0_minus, cfg)?;
    check_continuity(&rs_p, &rs_m)?;
    let vals = gamma_sweep(state, &rs_p, &rs_m, cfg)?;
    Ok(GammaSignal::new(cfg.time_step(), vals)?)
}

/// Iterate the two maps from (u₁±, 0) until the sup change of the full
/// iterate drops below tolerance. Non-convergence is not an error: the best
/// iterate is returned with `converged = false` in the report.
pub fn picard_solve(
    u0_plus: &PerturbationField,
    u0_minus: &PerturbationField,
    cfg: &PicardConfig,
) -> Result<(PicardState, PicardReport), PicardError> {
    cfg.validate()?;
    let rs_p = resample(u0_plus, cfg)?;
    let rs_m = resample(u0_minus, cfg)?;
    check_continuity(&rs_p, &rs_m)?;
    let combined = |f: &PerturbationField| {
        let v = f.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let d = f.d1().unwrap().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v + d
    };
    let norm = combined(&rs_p).max(combined(&rs_m));
    if norm >= 0.5 {
        return Err(PicardError::DataTooLarge(norm));
    }

    let (u1p, u1m) = build_free_evolution(&rs_p, &rs_m, cfg)?;
    let mut state = PicardState {
        time_step: cfg.time_step(),
        u_plus: u1p.clone(),
        u_minus: u1m.clone(),
        gamma: GammaSignal::new(cfg.time_step(), vec![0.0; cfg.n_time_levels + 1])?,
    };

    let mut sweep_changes = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    if !cfg.nested {
        for _ in 1..=cfg.max_iter {
            let (np, nm) = field_sweep(&state, &u1p, &u1m, cfg)?;
            let du = sup_diff_levels(&np, &state.u_plus).max(sup_diff_levels(&nm, &state.u_minus));
            state.u_plus = np;
            state.u_minus = nm;
            let g = gamma_sweep(&state, &rs_p, &rs_m, cfg)?;
            let dg = sup_diff(&g, state.gamma.values());
            state.gamma = GammaSignal::new(cfg.time_step(), g)?;
            iterations += 1;
            let change = du.max(dg);
            sweep_changes.push(change);
            if change < cfg.tol {
                converged = true;
                break;
            }
        }
    } else {
        for _ in 1..=cfg.max_iter {
            for _ in 1..=cfg.max_iter {
                let (np, nm) = field_sweep(&state, &u1p, &u1m, cfg)?;
                let du =
                    sup_diff_levels(&np, &state.u_plus).max(sup_diff_levels(&nm, &state.u_minus));
                state.u_plus = np;
                state.u_minus = nm;
                if du < cfg.tol {
                    break;
                }
            }
            let g = gamma_sweep(&state, &rs_p, &rs_m, cfg)?;
            let dg = sup_diff(&g, state.gamma.values());
            state.gamma = GammaSignal::new(cfg.time_step(), g)?;
            iterations += 1;
            sweep_changes.push(dg);
            if dg < cfg.tol {
                converged = true;
                break;
            }
        }
    }

    let levels = cfg.n_time_levels;
    let report = PicardReport {
        iterations,
        converged,
        sweep_changes,
        continuity_residuals: (0..=levels).map(|k| state.continuity_residual(k)).collect(),
        interface_residuals: (0..=levels).map(|k| state.interface_residual(k)).collect(),
    };
    Ok((state, report))
}
