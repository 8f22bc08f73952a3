//! Crank–Nicolson production solver for the coupled half-line system
//!
//!   v⁺_t = v⁺_y + v⁺_yy + γ v⁻_y,
//!   v⁻_t = v⁻_y + v⁻_yy + γ v⁺_y + 2γ e^{−y},
//!
//! obtained from a perturbation u of the unit shock in the frame of its
//! interface x = ξ(t) via v±(t,y) = u(t,y) ∓ u(t,−y). Boundary conditions are
//! v±(t,0) = v±(t,L) = 0; the Neumann condition v⁻_y(t,0) = 0 together with
//! the interface condition v⁺_y(t,0) + v⁺_yy(t,0) = 0 close the system by
//! giving the interface velocity γ(t) in terms of the first interior node.
//!
//! Eliminating the virtual nodes v⁻_{−1} = v⁻_1 and
//! v⁺_{−1} = −(2+h)/(2−h) v⁺_1 from the second-order one-sided differences at
//! y = 0 yields the discrete velocity
//!
//!   γ_k = −(2−h) v⁻_{1,k} / (h v⁺_{1,k} + h²(2−h)),
//!
//! after which each step solves L(−τ) v_{k+1} = L(τ) v_k + c_k with the
//! block operator L = [A B; B A] held at γ_k on both sides, and ξ is
//! accumulated by the trapezoidal rule on the γ series.
//!
//! The interface source on the v⁻ rows, c_k = τ(γ_k + γ_{k+1}) e^{−y_n}, is
//! treated implicitly in γ_{k+1}: a lagged source 2τγ_k e^{−y_n} feeds the
//! second-difference trace v⁻_1/h² back into γ with loop gain ∝ √τ/h and
//! blows up whenever τ ≫ h², while the trapezoidal closure is stable for any
//! step ratio. Since the step is affine in γ_{k+1}, two solves against one
//! factorization and one scalar quadratic give the consistent value exactly.

use thiserror::Error;

/// Default truncation length; the preset data are below 1e−12 there.
pub const DEFAULT_LENGTH: f64 = 30.0;
/// Default grid step.
pub const DEFAULT_GRID_STEP: f64 = 0.01;
/// Default time step; keeps the first-order γ lag subdominant to the
/// second-order stencil error at the default grid step.
pub const DEFAULT_TIME_STEP: f64 = 0.002;

#[derive(Debug, Error, PartialEq)]
pub enum FdError {
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("need at least 8 interior nodes, got {0}")]
    TooFewNodes(usize),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("final time {t_final} must cover at least one step of {tau}")]
    BadFinalTime { t_final: f64, tau: f64 },
    #[error("grid step h = {0} must lie below 2 for the interface elimination")]
    GridStepTooCoarse(f64),
    #[error("snapshot stride must be positive")]
    BadStride,
    #[error("initial samples must hold {expected} interior values, got {got}")]
    BadSampleCount { expected: usize, got: usize },
    #[error("non-finite initial sample at index {0}")]
    NonFiniteSample(usize),
    #[error("initial data must vanish at the interface, got u0(0) = {0}")]
    NonzeroOrigin(f64),
    #[error("symmetric samples need odd length of at least 5, got {0}")]
    BadSymmetricLength(usize),
    #[error("interface denominator {0:e} vanished: 1 + u_y(t,0) lost positivity")]
    GammaDenominator(f64),
    #[error("interface closure has no real root, discriminant {0:e}")]
    InterfaceClosureFailed(f64),
    #[error("block elimination met a singular pivot at block row {0}")]
    SingularPivot(usize),
    #[error("non-finite state at step {step}, node {node}")]
    NonFiniteState { step: usize, node: usize },
    #[error("state holds {got} interior nodes but the config expects {expected}")]
    StateLengthMismatch { expected: usize, got: usize },
    #[error("refinement study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("refinement run aborted at step {step}: {reason}")]
    AbortedDuringStudy { step: usize, reason: String },
}

/// Named initial-data presets. The polynomial coefficients of `Ic1`/`Ic2`
/// make v⁻(0) = v⁻_y(0) = 0 and v⁺_y(0) + v⁺_yy(0) = 0 hold exactly, so the
/// data are compatible with the interface closure at t = 0. `Odd` keeps the
/// `Ic1` shape in v⁺ with v⁻ ≡ 0, pinning the interface at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcPreset {
    Ic1,
    Ic2,
    Odd,
}

impl IcPreset {
    pub fn name(self) -> &'static str {
        match self {
            IcPreset::Ic1 => "IC1",
            IcPreset::Ic2 => "IC2",
            IcPreset::Odd => "odd",
        }
    }

    pub fn from_name(name: &str) -> Option<IcPreset> {
        match name {
            "IC1" | "ic1" => Some(IcPreset::Ic1),
            "IC2" | "ic2" => Some(IcPreset::Ic2),
            "odd" | "ODD" => Some(IcPreset::Odd),
            _ => None,
        }
    }

    pub fn v_plus(self, y: f64) -> f64 {
        match self {
            IcPreset::Ic1 | IcPreset::Odd => 0.1 * (y - 0.5 * y * y) * (-y * y).exp(),
            IcPreset::Ic2 => 0.1 * (y + 0.5 * y * y) * (-y).exp(),
        }
    }

    pub fn v_minus(self, y: f64) -> f64 {
        match self {
            IcPreset::Ic1 => 0.5 * y * y * (-y * y).exp(),
            IcPreset::Ic2 => 0.5 * y * y * (-y).exp(),
            IcPreset::Odd => 0.0,
        }
    }

    /// Horizon at which the preset's interface has visibly relaxed.
    pub fn default_t_final(self) -> f64 {
        match self {
            IcPreset::Ic1 => 4.0,
            IcPreset::Ic2 => 12.0,
            IcPreset::Odd => 2.0,
        }
    }
}

/// Initial data: a named preset or explicit interior samples of v±(0, y_n).
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Preset(IcPreset),
    Samples { v_plus: Vec<f64>, v_minus: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct FdConfig {
    /// Truncation length L; the far boundary is Dirichlet.
    pub length: f64,
    /// Interior node count N; the grid step is h = L/(N+1).
    pub n_interior: usize,
    /// Time step τ.
    pub tau: f64,
    /// Final time T; the run takes round(T/τ) steps.
    pub t_final: f64,
    pub ic: InitialCondition,
    /// Re-solve each step once with γ re-evaluated at the new level.
    pub predictor_corrector: bool,
    /// Keep every `snapshot_stride`-th level (plus the first and last).
    pub snapshot_stride: usize,
}

impl FdConfig {
    /// Default resolution (L = 30, h = 0.01, τ = 0.002) for a preset.
    pub fn preset(preset: IcPreset) -> FdConfig {
        FdConfig {
            length: DEFAULT_LENGTH,
            n_interior: (DEFAULT_LENGTH / DEFAULT_GRID_STEP).round() as usize - 1,
            tau: DEFAULT_TIME_STEP,
            t_final: preset.default_t_final(),
            ic: InitialCondition::Preset(preset),
            predictor_corrector: false,
            snapshot_stride: 100,
        }
    }

    pub fn grid_step(&self) -> f64 {
        self.length / (self.n_interior + 1) as f64
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.tau).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), FdError> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(FdError::BadLength(self.length));
        }
        if self.n_interior < 8 {
            return Err(FdError::TooFewNodes(self.n_interior));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(FdError::BadTimeStep(self.tau));
        }
        if self.t_final < self.tau * (1.0 - 1e-9) {
            return Err(FdError::BadFinalTime {
                t_final: self.t_final,
                tau: self.tau,
            });
        }
        if self.grid_step() >= 2.0 {
            return Err(FdError::GridStepTooCoarse(self.grid_step()));
        }
        if self.snapshot_stride == 0 {
            return Err(FdError::BadStride);
        }
        if let InitialCondition::Samples { v_plus, v_minus } = &self.ic {
            for v in [v_plus, v_minus] {
                if v.len() != self.n_interior {
                    return Err(FdError::BadSampleCount {
                        expected: self.n_interior,
                        got: v.len(),
                    });
                }
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(FdError::NonFiniteSample(i));
                }
            }
        }
        Ok(())
    }

    fn initial_arrays(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.grid_step();
        match &self.ic {
            InitialCondition::Preset(p) => {
                let v_plus = (1..=self.n_interior).map(|j| p.v_plus(j as f64 * h)).collect();
                let v_minus = (1..=self.n_interior).map(|j| p.v_minus(j as f64 * h)).collect();
                (v_plus, v_minus)
            }
            InitialCondition::Samples { v_plus, v_minus } => (v_plus.clone(), v_minus.clone()),
        }
    }
}

/// Split samples of u₀ on the symmetric grid ±jh (odd length, origin in the
/// middle) into the positive-side pair v±(y) = u₀(y) ∓ u₀(−y).
pub fn split_initial(u0: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FdError> {
    if u0.len() < 5 || u0.len() % 2 == 0 {
        return Err(FdError::BadSymmetricLength(u0.len()));
    }
    let m = u0.len() / 2;
    if u0[m].abs() > 1e-10 {
        return Err(FdError::NonzeroOrigin(u0[m]));
    }
    let v_plus = (1..=m).map(|j| u0[m + j] - u0[m - j]).collect();
    let v_minus = (1..=m).map(|j| u0[m + j] + u0[m - j]).collect();
    Ok((v_plus, v_minus))
}

/// Inverse of [`split_initial`]: u₀(±y) = (v⁻ ± v⁺)/2 on the symmetric grid.
pub fn merge_initial(v_plus: &[f64], v_minus: &[f64]) -> Vec<f64> {
    let m = v_plus.len().min(v_minus.len());
    let mut u0 = vec![0.0; 2 * m + 1];
    for j in 1..=m {
        u0[m + j] = 0.5 * (v_minus[j - 1] + v_plus[j - 1]);
        u0[m - j] = 0.5 * (v_minus[j - 1] - v_plus[j - 1]);
    }
    u0
}

/// Discrete interface velocity from the first interior node pair.
///
/// The denominator is h v⁺₁ + h²(2−h) = h²(2−h)(1 + u_y(t,0) + O(h²));
/// its loss of positivity mirrors the breakdown of the sign condition on
/// the perturbed shock, so a vanishing denominator aborts the run.
pub fn gamma_discrete(v_plus_1: f64, v_minus_1: f64, h: f64) -> Result<f64, FdError> {
    let denom = h * v_plus_1 + h * h * (2.0 - h);
    if denom.abs() <= 1e-14 {
        return Err(FdError::GammaDenominator(denom));
    }
    Ok(-(2.0 - h) * v_minus_1 / denom)
}

/// One side of the Crank–Nicolson step, L(θ) = [A(θ) B(θ); B(θ) A(θ)] with
/// tridiagonal blocks
///
///   a_{j,j} = 1 − θ/h²,  a_{j,j±1} = (θ/2)(±1/(2h) + 1/h²),
///   b_{j,j} = 0,         b_{j,j±1} = ±(θ/(4h)) γ,
///
/// where θ = +τ on the explicit side and θ = −τ on the implicit side. Rows 1
/// and N lose their out-of-range neighbours to the homogeneous Dirichlet
/// values v±(t,0) = v±(t,L) = 0.
#[derive(Debug, Clone, Copy)]
pub struct CnOperator {
    pub n: usize,
    pub a_diag: f64,
    pub a_up: f64,
    pub a_dn: f64,
    pub b_up: f64,
    pub b_dn: f64,
}

impl CnOperator {
    pub fn new(theta: f64, gamma: f64, h: f64, n: usize) -> CnOperator {
        CnOperator {
            n,
            a_diag: 1.0 - theta / (h * h),
            a_up: 0.5 * theta * (0.5 / h + 1.0 / (h * h)),
            a_dn: 0.5 * theta * (-0.5 / h + 1.0 / (h * h)),
            b_up: 0.25 * theta * gamma / h,
            b_dn: -0.25 * theta * gamma / h,
        }
    }

    /// Matrix-vector product on the stacked state (v⁺, v⁻).
    pub fn apply(&self, v_plus: &[f64], v_minus: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut out_plus = vec![0.0; self.n];
        let mut out_minus = vec![0.0; self.n];
        self.apply_into(v_plus, v_minus, &mut out_plus, &mut out_minus);
        (out_plus, out_minus)
    }

    fn apply_into(
        &self,
        v_plus: &[f64],
        v_minus: &[f64],
        out_plus: &mut [f64],
        out_minus: &mut [f64],
    ) {
        let n = self.n;
        for j in 0..n {
            let mut p = self.a_diag * v_plus[j];
            let mut m = self.a_diag * v_minus[j];
            if j > 0 {
                p += self.a_dn * v_plus[j - 1] + self.b_dn * v_minus[j - 1];
                m += self.a_dn * v_minus[j - 1] + self.b_dn * v_plus[j - 1];
            }
            if j + 1 < n {
                p += self.a_up * v_plus[j + 1] + self.b_up * v_minus[j + 1];
                m += self.a_up * v_minus[j + 1] + self.b_up * v_plus[j + 1];
            }
            out_plus[j] = p;
            out_minus[j] = m;
        }
    }

    /// Dense 2N×2N form, row-major, for reference solves in tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut m = vec![vec![0.0; 2 * n]; 2 * n];
        for j in 0..n {
            m[j][j] = self.a_diag;
            m[n + j][n + j] = self.a_diag;
            if j > 0 {
                m[j][j - 1] = self.a_dn;
                m[n + j][n + j - 1] = self.a_dn;
                m[j][n + j - 1] = self.b_dn;
                m[n + j][j - 1] = self.b_dn;
            }
            if j + 1 < n {
                m[j][j + 1] = self.a_up;
                m[n + j][n + j + 1] = self.a_up;
                m[j][n + j + 1] = self.b_up;
                m[n + j][j + 1] = self.b_up;
            }
        }
        m
    }
}

/// Implicit and explicit operators for one step at frozen γ: (L(−τ), L(τ)).
pub fn assemble_system(gamma: f64, h: f64, tau: f64, n: usize) -> (CnOperator, CnOperator) {
    (
        CnOperator::new(-tau, gamma, h, n),
        CnOperator::new(tau, gamma, h, n),
    )
}

// 2×2 blocks, row-major [m00, m01, m10, m11].
type Block = [f64; 4];

fn block_mul(a: &Block, b: &Block) -> Block {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn block_inv(a: &Block, row: usize) -> Result<Block, FdError> {
    let det = a[0] * a[3] - a[1] * a[2];
    if det.abs() <= 1e-300 {
        return Err(FdError::SingularPivot(row));
    }
    Ok([a[3] / det, -a[1] / det, -a[2] / det, a[0] / det])
}

fn block_vec(a: &Block, v: [f64; 2]) -> [f64; 2] {
    [a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]]
}

/// Block-tridiagonal LU of one implicit operator on interleaved (v⁺_j, v⁻_j)
/// unknowns; the sub/super blocks are constant so only the pivots march, and
/// one factorization serves any number of right-hand sides.
struct BlockLu {
    upper: Block,
    factors: Vec<Block>,
    inv_pivots: Vec<Block>,
}

impl BlockLu {
    fn factor(left: &CnOperator) -> Result<BlockLu, FdError> {
        let n = left.n;
        let diag: Block = [left.a_diag, 0.0, 0.0, left.a_diag];
        let upper: Block = [left.a_up, left.b_up, left.b_up, left.a_up];
        let lower: Block = [left.a_dn, left.b_dn, left.b_dn, left.a_dn];

        let mut factors = Vec::with_capacity(n);
        let mut inv_pivots = Vec::with_capacity(n);
        factors.push([0.0; 4]);
        inv_pivots.push(block_inv(&diag, 0)?);
        for j in 1..n {
            let factor = block_mul(&lower, &inv_pivots[j - 1]);
            let lu = block_mul(&factor, &upper);
            let pivot = [
                diag[0] - lu[0],
                diag[1] - lu[1],
                diag[2] - lu[2],
                diag[3] - lu[3],
            ];
            factors.push(factor);
            inv_pivots.push(block_inv(&pivot, j)?);
        }
        Ok(BlockLu {
            upper,
            factors,
            inv_pivots,
        })
    }

    fn solve(
        &self,
        rhs_plus: &[f64],
        rhs_minus: &[f64],
        out_plus: &mut [f64],
        out_minus: &mut [f64],
        carry: &mut Vec<[f64; 2]>,
    ) {
        let n = self.factors.len();
        carry.clear();
        carry.reserve(n);
        carry.push([rhs_plus[0], rhs_minus[0]]);
        for j in 1..n {
            let fw = block_vec(&self.factors[j], carry[j - 1]);
            carry.push([rhs_plus[j] - fw[0], rhs_minus[j] - fw[1]]);
        }
        let x = block_vec(&self.inv_pivots[n - 1], carry[n - 1]);
        out_plus[n - 1] = x[0];
        out_minus[n - 1] = x[1];
        for j in (0..n - 1).rev() {
            let up = block_vec(&self.upper, [out_plus[j + 1], out_minus[j + 1]]);
            let x = block_vec(
                &self.inv_pivots[j],
                [carry[j][0] - up[0], carry[j][1] - up[1]],
            );
            out_plus[j] = x[0];
            out_minus[j] = x[1];
        }
    }
}

/// Interior node values at one time level, plus the tracked interface data.
/// The boundary values v±(y₀) = v±(y_{N+1}) = 0 are implicit and never
/// stored; ξ starts at 0.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub gamma_k: f64,
    pub xi: f64,
    pub k: usize,
}

impl SolverState {
    pub fn new(v_plus: Vec<f64>, v_minus: Vec<f64>, h: f64) -> Result<SolverState, FdError> {
        let gamma_k = gamma_discrete(v_plus[0], v_minus[0], h)?;
        Ok(SolverState {
            v_plus,
            v_minus,
            gamma_k,
            xi: 0.0,
            k: 0,
        })
    }
}

/// Consistent interface velocity from the affine step decomposition
/// v_{k+1} = v⁰ + γ₊ v¹: the discrete γ formula applied to v_{k+1} becomes
/// a γ₊ + b γ₊ + ... = 0, i.e. the quadratic a γ₊² + b γ₊ + c = 0. The root
/// continuous from the previous level is the physical branch.
fn interface_gamma(a: f64, b: f64, c: f64, gamma_prev: f64) -> Result<f64, FdError> {
    if a == 0.0 {
        if b.abs() <= 1e-14 {
            return Err(FdError::GammaDenominator(b));
        }
        return Ok(-c / b);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(FdError::InterfaceClosureFailed(disc));
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // a ≠ 0, b = 0, c = 0: the closure degenerates to γ₊ = 0.
        return Ok(0.0);
    }
    let (r1, r2) = (c / q, q / a);
    Ok(if (r1 - gamma_prev).abs() <= (r2 - gamma_prev).abs() {
        r1
    } else {
        r2
    })
}

/// Scratch buffers reused across steps.
struct Stepper {
    h: f64,
    tau: f64,
    n: usize,
    predictor_corrector: bool,
    /// Unit-γ interface source on the v⁻ rows: τ e^{−y_n} per trapezoid leg.
    src_tau: Vec<f64>,
    zeros: Vec<f64>,
    rhs_plus: Vec<f64>,
    rhs_minus: Vec<f64>,
    part0_plus: Vec<f64>,
    part0_minus: Vec<f64>,
    part1_plus: Vec<f64>,
    part1_minus: Vec<f64>,
    new_plus: Vec<f64>,
    new_minus: Vec<f64>,
    carry: Vec<[f64; 2]>,
}

impl Stepper {
    fn new(cfg: &FdConfig) -> Stepper {
        let n = cfg.n_interior;
        let h = cfg.grid_step();
        Stepper {
            h,
            tau: cfg.tau,
            n,
            predictor_corrector: cfg.predictor_corrector,
            src_tau: (1..=n).map(|j| cfg.tau * (-(j as f64) * h).exp()).collect(),
            zeros: vec![0.0; n],
            rhs_plus: vec![0.0; n],
            rhs_minus: vec![0.0; n],
            part0_plus: vec![0.0; n],
            part0_minus: vec![0.0; n],
            part1_plus: vec![0.0; n],
            part1_minus: vec![0.0; n],
            new_plus: vec![0.0; n],
            new_minus: vec![0.0; n],
            carry: Vec::new(),
        }
    }

    fn advance(&mut self, state: &mut SolverState) -> Result<(), FdError> {
        let (h, n, gk) = (self.h, self.n, state.gamma_k);
        let right = CnOperator::new(self.tau, gk, h, n);
        let left = CnOperator::new(-self.tau, gk, h, n);
        right.apply_into(
            &state.v_plus,
            &state.v_minus,
            &mut self.rhs_plus,
            &mut self.rhs_minus,
        );
        // Known trapezoid leg of the source, τ γ_k e^{−y}.
        for j in 0..n {
            self.rhs_minus[j] += gk * self.src_tau[j];
        }
        let lu = BlockLu::factor(&left)?;
        lu.solve(
            &self.rhs_plus,
            &self.rhs_minus,
            &mut self.part0_plus,
            &mut self.part0_minus,
            &mut self.carry,
        );
        lu.solve(
            &self.zeros,
            &self.src_tau,
            &mut self.part1_plus,
            &mut self.part1_minus,
            &mut self.carry,
        );
        let a = h * self.part1_plus[0];
        let b = h * self.part0_plus[0] + h * h * (2.0 - h) + (2.0 - h) * self.part1_minus[0];
        let c = (2.0 - h) * self.part0_minus[0];
        let gamma_star = interface_gamma(a, b, c, gk)?;

        let gamma_next;
        if self.predictor_corrector {
            // One corrector pass with the implicit coupling blocks at γ*.
            let left_star = CnOperator::new(-self.tau, gamma_star, h, n);
            for j in 0..n {
                self.rhs_minus[j] += gamma_star * self.src_tau[j];
            }
            let lu_star = BlockLu::factor(&left_star)?;
            lu_star.solve(
                &self.rhs_plus,
                &self.rhs_minus,
                &mut self.new_plus,
                &mut self.new_minus,
                &mut self.carry,
            );
            gamma_next = gamma_discrete(self.new_plus[0], self.new_minus[0], h)?;
        } else {
            for j in 0..n {
                self.new_plus[j] = self.part0_plus[j] + gamma_star * self.part1_plus[j];
                self.new_minus[j] = self.part0_minus[j] + gamma_star * self.part1_minus[j];
            }
            gamma_next = gamma_star;
        }

        if let Some(node) = self
            .new_plus
            .iter()
            .chain(self.new_minus.iter())
            .position(|v| !v.is_finite())
        {
            return Err(FdError::NonFiniteState {
                step: state.k + 1,
                node: node % n,
            });
        }
        state.xi += 0.5 * self.tau * (state.gamma_k + gamma_next);
        std::mem::swap(&mut state.v_plus, &mut self.new_plus);
        std::mem::swap(&mut state.v_minus, &mut self.new_minus);
        state.gamma_k = gamma_next;
        state.k += 1;
        Ok(())
    }
}

/// Advance one Crank–Nicolson step: assemble both operators at γ_k, solve
/// the block system with the trapezoidal interface source closed implicitly
/// in γ_{k+1}, and update ξ trapezoidally with the new γ.
pub fn cn_step(state: &SolverState, cfg: &FdConfig) -> Result<SolverState, FdError> {
    cfg.validate()?;
    if state.v_plus.len() != cfg.n_interior || state.v_minus.len() != cfg.n_interior {
        return Err(FdError::StateLengthMismatch {
            expected: cfg.n_interior,
            got: state.v_plus.len().min(state.v_minus.len()),
        });
    }
    let mut stepper = Stepper::new(cfg);
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Discrete norms monitored along a trajectory: the combined energy
/// ‖u⁺‖²_{H¹} + ‖u⁻‖²_{H¹} of the half-line traces u± = (v⁻ ± v⁺)/2
/// (trapezoidal L², forward-difference seminorm) and the node sup of |u|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelNorms {
    pub t: f64,
    pub h1_energy: f64,
    pub sup_norm: f64,
}

pub fn level_norms(t: f64, v_plus: &[f64], v_minus: &[f64], h: f64) -> LevelNorms {
    let n = v_plus.len();
    let mut l2 = 0.0;
    let mut grad = 0.0;
    let mut sup: f64 = 0.0;
    let (mut prev_up, mut prev_um) = (0.0, 0.0);
    for j in 0..n {
        let up = 0.5 * (v_minus[j] + v_plus[j]);
        let um = 0.5 * (v_minus[j] - v_plus[j]);
        l2 += h * (up * up + um * um);
        let (dp, dm) = (up - prev_up, um - prev_um);
        grad += (dp * dp + dm * dm) / h;
        sup = sup.max(up.abs()).max(um.abs());
        prev_up = up;
        prev_um = um;
    }
    // Far-boundary gap back to the Dirichlet zero.
    grad += (prev_up * prev_up + prev_um * prev_um) / h;
    LevelNorms {
        t,
        h1_energy: l2 + grad,
        sup_norm: sup,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Aborted { step: usize, reason: String },
}

/// A stored time level (decimated by the snapshot stride).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub k: usize,
    pub t: f64,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub gamma: f64,
    pub xi: f64,
}

/// One reconstructed grid point of the perturbation and of the full front
/// w = W₀(x−ξ) + u in the laboratory coordinate x = y + ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSample {
    pub x: f64,
    pub u: f64,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: FdConfig,
    pub snapshots: Vec<Snapshot>,
    /// γ_k for k = 0..=n_steps (truncated on abort).
    pub gamma_series: Vec<f64>,
    pub xi_series: Vec<f64>,
    pub norm_series: Vec<LevelNorms>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn grid_step(&self) -> f64 {
        self.config.grid_step()
    }

    pub fn final_xi(&self) -> f64 {
        *self.xi_series.last().unwrap()
    }

    pub fn final_gamma(&self) -> f64 {
        *self.gamma_series.last().unwrap()
    }

    /// Reconstruct u and w = W₀ + u over the symmetric grid x = ξ ± y_j,
    /// ascending in x, from one snapshot.
    pub fn line(&self, snap: &Snapshot) -> Vec<LineSample> {
        let h = self.grid_step();
        let n = snap.v_plus.len();
        let w0 = |y: f64| y.signum() * (1.0 - (-y.abs()).exp());
        let mut out = Vec::with_capacity(2 * n + 1);
        for j in (1..=n).rev() {
            let y = -(j as f64) * h;
            let u = 0.5 * (snap.v_minus[j - 1] - snap.v_plus[j - 1]);
            out.push(LineSample {
                x: snap.xi + y,
                u,
                w: w0(y) + u,
            });
        }
        out.push(LineSample {
            x: snap.xi,
            u: 0.0,
            w: 0.0,
        });
        for j in 1..=n {
            let y = j as f64 * h;
            let u = 0.5 * (snap.v_minus[j - 1] + snap.v_plus[j - 1]);
            out.push(LineSample {
                x: snap.xi + y,
                u,
                w: w0(y) + u,
            });
        }
        out
    }
}

/// Run the scheme to T, recording the γ/ξ/norm series at every level and
/// decimated snapshots. Step failures abort with the partial trajectory and
/// the reason recorded in `status`; only configuration errors return `Err`.
pub fn simulate(cfg: &FdConfig) -> Result<Trajectory, FdError> {
    cfg.validate()?;
    let h = cfg.grid_step();
    let (v_plus, v_minus) = cfg.initial_arrays();
    let mut state = SolverState::new(v_plus, v_minus, h)?;
    let mut stepper = Stepper::new(cfg);
    let n_steps = cfg.n_steps();

    let mut traj = Trajectory {
        config: cfg.clone(),
        snapshots: Vec::new(),
        gamma_series: Vec::with_capacity(n_steps + 1),
        xi_series: Vec::with_capacity(n_steps + 1),
        norm_series: Vec::with_capacity(n_steps + 1),
        status: RunStatus::Completed,
    };

    let record = |state: &SolverState, traj: &mut Trajectory, force: bool| {
        let t = state.k as f64 * cfg.tau;
        traj.gamma_series.push(state.gamma_k);
        traj.xi_series.push(state.xi);
        traj.norm_series
            .push(level_norms(t, &state.v_plus, &state.v_minus, h));
        if force || state.k % cfg.snapshot_stride == 0 {
            traj.snapshots.push(Snapshot {
                k: state.k,
                t,
                v_plus: state.v_plus.clone(),
                v_minus: state.v_minus.clone(),
                gamma: state.gamma_k,
                xi: state.xi,
            });
        }
    };

    record(&state, &mut traj, false);
    for step in 0..n_steps {
        if let Err(err) = stepper.advance(&mut state) {
            traj.status = RunStatus::Aborted {
                step: step + 1,
                reason: err.to_string(),
            };
            return Ok(traj);
        }
        let last = state.k == n_steps;
        let keep = last && state.k % cfg.snapshot_stride != 0;
        record(&state, &mut traj, keep);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub error: f64,
    pub order: Option<f64>,
}

/// Halve h per level (τ halves too, or quarters when `tau_quadratic`) and
/// report grid errors with observed orders.
///
/// Odd-sector data (v⁻ ≡ 0) are compared against the exact half-line
/// solution of the decoupled v⁺ equation at T; general data self-compare
/// ξ(T) across consecutive levels, so the table has `levels − 1` rows.
pub fn convergence_study(
    cfg_base: &FdConfig,
    levels: usize,
    tau_quadratic: bool,
) -> Result<Vec<ConvergenceRow>, FdError> {
    use crate::field::PerturbationField;
    use crate::heat_kernel::odd_exact_solution;
    use crate::quad::QuadratureSpec;

    cfg_base.validate()?;
    if levels < 3 {
        return Err(FdError::TooFewLevels(levels));
    }
    let (coarse, vm0) = cfg_base.initial_arrays();
    let odd = vm0.iter().all(|v| v.abs() <= 1e-13);

    let mut errors: Vec<(f64, f64)> = Vec::new();
    let mut xis: Vec<f64> = Vec::new();
    let mut steps: Vec<(f64, f64)> = Vec::new();

    // One fine sampling of u₀ = v⁺(0,·)/2 serves every level in the odd case.
    let exact_u0 = if odd {
        let step = 0.002;
        let n = (cfg_base.length / step).round() as usize;
        let h = cfg_base.grid_step();
        let sample = |y: f64| -> f64 {
            match &cfg_base.ic {
                InitialCondition::Preset(p) => 0.5 * p.v_plus(y),
                InitialCondition::Samples { .. } => {
                    // Piecewise-linear lift of the coarse samples.
                    let pos = y / h;
                    let idx = pos.floor() as usize;
                    let get = |i: usize| -> f64 {
                        if i == 0 {
                            0.0
                        } else if i <= coarse.len() {
                            0.5 * coarse[i - 1]
                        } else {
                            0.0
                        }
                    };
                    let frac = pos - idx as f64;
                    get(idx) * (1.0 - frac) + get(idx + 1) * frac
                }
            }
        };
        Some(PerturbationField::from_fn(step, n, sample).expect("valid sampling grid"))
    } else {
        None
    };
    let quad_spec = QuadratureSpec::default();

    for level in 0..levels {
        let factor = 1usize << level;
        let cfg = FdConfig {
            n_interior: (cfg_base.n_interior + 1) * factor - 1,
            tau: if tau_quadratic {
                cfg_base.tau / (factor * factor) as f64
            } else {
                cfg_base.tau / factor as f64
            },
            ..cfg_base.clone()
        };
        let h = cfg.grid_step();
        steps.push((h, cfg.tau));
        let traj = simulate(&cfg)?;
        if let RunStatus::Aborted { step, reason } = &traj.status {
            return Err(FdError::AbortedDuringStudy {
                step: *step,
                reason: reason.clone(),
            });
        }
        let last = traj.snapshots.last().expect("simulate records the last level");
        if let Some(u0) = &exact_u0 {
            let t = last.t;
            let mut sup: f64 = 0.0;
            for (j, vp) in last.v_plus.iter().enumerate() {
                let y = (j + 1) as f64 * h;
                let exact = odd_exact_solution(u0, t, y, 0, &quad_spec)
                    .expect("exact oracle evaluates on the run grid");
                sup = sup.max((0.5 * vp - exact).abs());
            }
            errors.push((sup, h));
        } else {
            xis.push(last.xi);
        }
    }

    if !odd {
        // Self-reference: consecutive ξ(T) gaps, one fewer row than levels.
        for pair in xis.windows(2) {
            errors.push(((pair[0] - pair[1]).abs(), 0.0));
        }
    }

    let mut rows = Vec::new();
    for (level, (err, _)) in errors.iter().enumerate() {
        let order = if level == 0 {
            None
        } else {
            let prev = errors[level - 1].0;
            if *err > 0.0 && prev > 0.0 {
                Some((prev / err).log2())
            } else {
                None
            }
        };
        rows.push(ConvergenceRow {
            level,
            h: steps[level].0,
            tau: steps[level].1,
            error: *err,
            order,
        });
    }
    Ok(rows)
}
