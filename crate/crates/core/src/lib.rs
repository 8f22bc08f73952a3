//! Numerical toolbox for viscous shock profiles of the modular Burgers
//! equation w_t = |w|_x + w_xx and for the interface dynamics of small
//! perturbations riding on such a shock.
//!
//! The crate is organised around the objects that appear in the stability
//! analysis of the standing profile W₀:
//!
//! * [`shock_profiles`]: the two-sided exponential profiles W_c, their speed
//!   relation and the coordinate maps between a travelling shock and the
//!   normalized standing frame.
//! * [`heat_kernel`]: Gaussian kernel norms, half-line Dirichlet solutions,
//!   the exact odd-perturbation solution and the boundary-layer solution ν
//!   driven by an interface signal γ.
//! * [`abel`]: the singular interface operator ℳ and the closed-form
//!   inversions of the associated Abel-type equations.
//! * [`picard`]: the coupled fixed-point maps (u⁺, u⁻, γ) built from the
//!   Duhamel representation on the half-line.
//! * [`fd_solver`]: a Crank–Nicolson finite-difference scheme for the same
//!   perturbation system on a truncated half-line, including the discrete
//!   interface signal γ_k and the shock-position integral ξ.
//! * [`diagnostics`]: discrete norms, decay and energy monotonicity checks,
//!   interface residuals and positivity checks.

/// Library version, exposed so downstream tools can record it in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod quad;
pub mod field;
pub mod shock_profiles;
pub mod heat_kernel;
pub mod abel;
pub mod picard;
pub mod fd_solver;
pub mod diagnostics;

/// Side of the interface at the origin, used wherever a quantity has
/// distinct one-sided limits (second derivatives of profiles, traces of ν_y).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    /// +1 for `Plus`, −1 for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}
