//! Two-sided exponential shock profiles of w_t = |w|_x + w_xx.
//!
//! A profile travelling with speed c connects a negative far-field state W₋
//! (left) to a positive one W₊ (right):
//!
//! W_c(x) = W₊(1 − e^{−(1+c)x}) for x > 0,
//! W_c(x) = W₋(1 − e^{ (1−c)x}) for x < 0,
//!
//! with c = (W₊ + W₋)/(W₋ − W₊). The profile is C¹ across x = 0; its second
//! derivative jumps there by exactly −2 W_c′(0), which is the interface
//! condition every admissible shock satisfies.

use thiserror::Error;

use crate::Side;

#[derive(Debug, Error, PartialEq)]
pub enum ShockError {
    #[error("far-field states must satisfy w_plus > 0 > w_minus, got ({w_plus}, {w_minus})")]
    BadAmplitudes { w_plus: f64, w_minus: f64 },
    #[error("speed must satisfy |c| < 1, got {0}")]
    BadSpeed(f64),
    #[error("derivative order must be 0, 1 or 2, got {0}")]
    BadDeriv(u8),
    #[error("second derivative at the interface is two-valued; pass a side")]
    SideRequired,
}

/// A viscous shock profile, determined by its far-field states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockProfile {
    w_plus: f64,
    w_minus: f64,
    c: f64,
}

/// Speed selected by the far-field states: c = (W₊ + W₋)/(W₋ − W₊).
///
/// For W₊ > 0 > W₋ this automatically satisfies |c| < 1.
pub fn shock_speed(w_plus: f64, w_minus: f64) -> Result<f64, ShockError> {
    if !(w_plus > 0.0 && w_minus < 0.0) || !w_plus.is_finite() || !w_minus.is_finite() {
        return Err(ShockError::BadAmplitudes { w_plus, w_minus });
    }
    Ok((w_plus + w_minus) / (w_minus - w_plus))
}

impl ShockProfile {
    pub fn new(w_plus: f64, w_minus: f64) -> Result<Self, ShockError> {
        let c = shock_speed(w_plus, w_minus)?;
        Ok(ShockProfile { w_plus, w_minus, c })
    }

    /// Profile with an explicitly overridden speed. Diagnostic constructor:
    /// with c detached from the far-field states the interface jump
    /// condition no longer holds, which the residual functions detect.
    pub fn with_speed(w_plus: f64, w_minus: f64, c: f64) -> Result<Self, ShockError> {
        if !(w_plus > 0.0 && w_minus < 0.0) {
            return Err(ShockError::BadAmplitudes { w_plus, w_minus });
        }
        if !(c.abs() < 1.0) {
            return Err(ShockError::BadSpeed(c));
        }
        Ok(ShockProfile { w_plus, w_minus, c })
    }

    /// The standing profile W₀ with unit far-field states.
    pub fn normalized() -> ShockProfile {
        ShockProfile {
            w_plus: 1.0,
            w_minus: -1.0,
            c: 0.0,
        }
    }

    pub fn w_plus(&self) -> f64 {
        self.w_plus
    }

    pub fn w_minus(&self) -> f64 {
        self.w_minus
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    /// Decay rate 1+c of the right tail.
    pub fn rate_right(&self) -> f64 {
        1.0 + self.c
    }

    /// Decay rate 1−c of the left tail.
    pub fn rate_left(&self) -> f64 {
        1.0 - self.c
    }
}

fn eval_branch(p: &ShockProfile, x: f64, deriv: u8, side: Side) -> f64 {
    match side {
        Side::Plus => {
            let r = p.rate_right();
            let e = (-r * x).exp();
            match deriv {
                0 => p.w_plus * (1.0 - e),
                1 => p.w_plus * r * e,
                _ => -p.w_plus * r * r * e,
            }
        }
        Side::Minus => {
            let r = p.rate_left();
            let e = (r * x).exp();
            match deriv {
                0 => p.w_minus * (1.0 - e),
                1 => -p.w_minus * r * e,
                _ => -p.w_minus * r * r * e,
            }
        }
    }
}

/// W_c and its first two derivatives. The second derivative at x = 0 is
/// two-valued; use [`eval_shock_sided`] there.
pub fn eval_shock(p: &ShockProfile, x: f64, deriv: u8) -> Result<f64, ShockError> {
    if deriv > 2 {
        return Err(ShockError::BadDeriv(deriv));
    }
    if x == 0.0 && deriv == 2 {
        return Err(ShockError::SideRequired);
    }
    let side = if x >= 0.0 { Side::Plus } else { Side::Minus };
    Ok(eval_branch(p, x, deriv, side))
}

/// One-sided evaluation: at x = 0 the requested side's limit; elsewhere the
/// side argument must agree with sign(x).
pub fn eval_shock_sided(p: &ShockProfile, x: f64, deriv: u8, side: Side) -> Result<f64, ShockError> {
    if deriv > 2 {
        return Err(ShockError::BadDeriv(deriv));
    }
    if x > 0.0 && side == Side::Minus || x < 0.0 && side == Side::Plus {
        return Err(ShockError::SideRequired);
    }
    Ok(eval_branch(p, x, deriv, side))
}

/// Residual of the interface condition [W_c″](x₀) + 2 W_c′(x₀) for the
/// profile translated so that its interface sits at x₀. By translation
/// invariance the value does not depend on x₀; it vanishes exactly when the
/// speed matches the far-field states.
pub fn interface_jump_residual(p: &ShockProfile, _x0: f64) -> f64 {
    let d2_plus = eval_branch(p, 0.0, 2, Side::Plus);
    let d2_minus = eval_branch(p, 0.0, 2, Side::Minus);
    let d1 = eval_branch(p, 0.0, 1, Side::Plus);
    (d2_plus - d2_minus) + 2.0 * d1
}

/// A point of the travelling-shock frame mapped into the normalized standing
/// frame: w(t, x) = W_± · v((1±c)² t, (1±c)(x − ct)), branch chosen by the
/// sign of x − ct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub t: f64,
    pub y: f64,
    /// +1 right of the interface, −1 left, 0 on it.
    pub branch: i8,
}

/// Map (t, x) into the normalized frame of the standing unit profile.
/// On the interface x = ct the branch is 0 and the right-side scaling is
/// used (both give y = 0).
pub fn map_to_normalized(t: f64, x: f64, p: &ShockProfile) -> NormalizedPoint {
    let z = x - p.speed() * t;
    let branch = if z > 0.0 {
        1
    } else if z < 0.0 {
        -1
    } else {
        0
    };
    let rate = if branch < 0 { p.rate_left() } else { p.rate_right() };
    NormalizedPoint {
        t: rate * rate * t,
        y: rate * z,
        branch,
    }
}

/// Inverse of [`map_to_normalized`].
pub fn map_from_normalized(np: &NormalizedPoint, p: &ShockProfile) -> (f64, f64) {
    let rate = if np.branch < 0 { p.rate_left() } else { p.rate_right() };
    let t = np.t / (rate * rate);
    let x = np.y / rate + p.speed() * t;
    (t, x)
}
