//! Sampled data carriers: half-line perturbation profiles and interface
//! signals, both with piecewise-linear evaluation between samples.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("need at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("derivative samples must match the value count {values}, got {got}")]
    LengthMismatch { values: usize, got: usize },
    #[error("field carries no derivative samples of order {0}")]
    MissingDerivative(u8),
}

fn check_finite(values: &[f64]) -> Result<(), FieldError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(FieldError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Linear interpolation of uniform samples starting at the origin;
/// zero beyond the last sample.
fn lerp(values: &[f64], step: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return values[0];
    }
    let pos = x / step;
    let idx = pos.floor() as usize;
    if idx + 1 >= values.len() {
        return if idx + 1 == values.len() && pos - idx as f64 <= 1e-12 {
            values[idx]
        } else {
            0.0
        };
    }
    let frac = pos - idx as f64;
    values[idx] * (1.0 - frac) + values[idx + 1] * frac
}

/// A perturbation profile on the half-line y ≥ 0, sampled on the uniform
/// grid y_j = j·h with y = 0 first. Derivative samples, when present, are
/// analytic values carried alongside (never finite differences of `values`).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    grid_step: f64,
    values: Vec<f64>,
    d1: Option<Vec<f64>>,
    d2: Option<Vec<f64>>,
}

impl PerturbationField {
    pub fn new(grid_step: f64, values: Vec<f64>) -> Result<Self, FieldError> {
        if !(grid_step > 0.0) || !grid_step.is_finite() {
            return Err(FieldError::BadStep(grid_step));
        }
        if values.len() < 2 {
            return Err(FieldError::TooShort {
                min: 2,
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(PerturbationField {
            grid_step,
            values,
            d1: None,
            d2: None,
        })
    }

    pub fn with_d1(mut self, d1: Vec<f64>) -> Result<Self, FieldError> {
        if d1.len() != self.values.len() {
            return Err(FieldError::LengthMismatch {
                values: self.values.len(),
                got: d1.len(),
            });
        }
        check_finite(&d1)?;
        self.d1 = Some(d1);
        Ok(self)
    }

    pub fn with_d2(mut self, d2: Vec<f64>) -> Result<Self, FieldError> {
        if d2.len() != self.values.len() {
            return Err(FieldError::LengthMismatch {
                values: self.values.len(),
                got: d2.len(),
            });
        }
        check_finite(&d2)?;
        self.d2 = Some(d2);
        Ok(self)
    }

    /// Sample a closure (and optional derivative closures) on j·h, j = 0..=n.
    pub fn from_fn(
        grid_step: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, FieldError> {
        let values = (0..=n).map(|j| f(j as f64 * grid_step)).collect();
        PerturbationField::new(grid_step, values)
    }

    pub fn from_fn_with_derivs(
        grid_step: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
    ) -> Result<Self, FieldError> {
        let field = Self::from_fn(grid_step, n, f)?;
        let d1 = (0..=n).map(|j| f1(j as f64 * grid_step)).collect();
        let d2 = (0..=n).map(|j| f2(j as f64 * grid_step)).collect();
        field.with_d1(d1)?.with_d2(d2)
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest sampled ordinate (len-1)·h.
    pub fn span(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.grid_step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d1(&self) -> Option<&[f64]> {
        self.d1.as_deref()
    }

    pub fn d2(&self) -> Option<&[f64]> {
        self.d2.as_deref()
    }

    pub fn has_d1(&self) -> bool {
        self.d1.is_some()
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    /// Piecewise-linear value; zero beyond the sampled span.
    pub fn eval(&self, y: f64) -> f64 {
        debug_assert!(y >= -1e-9, "field evaluated at negative ordinate {y}");
        lerp(&self.values, self.grid_step, y.max(0.0))
    }

    pub fn eval_d1(&self, y: f64) -> Result<f64, FieldError> {
        let d1 = self.d1.as_ref().ok_or(FieldError::MissingDerivative(1))?;
        Ok(lerp(d1, self.grid_step, y.max(0.0)))
    }

    pub fn eval_d2(&self, y: f64) -> Result<f64, FieldError> {
        let d2 = self.d2.as_ref().ok_or(FieldError::MissingDerivative(2))?;
        Ok(lerp(d2, self.grid_step, y.max(0.0)))
    }
}

/// An interface signal γ on the uniform time grid t_k = k·τ, linearly
/// interpolated and clamped to its endpoint values outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSignal {
    time_step: f64,
    values: Vec<f64>,
}

impl GammaSignal {
    pub fn new(time_step: f64, values: Vec<f64>) -> Result<Self, FieldError> {
        if !(time_step > 0.0) || !time_step.is_finite() {
            return Err(FieldError::BadStep(time_step));
        }
        if values.is_empty() {
            return Err(FieldError::TooShort { min: 1, got: 0 });
        }
        check_finite(&values)?;
        Ok(GammaSignal { time_step, values })
    }

    pub fn from_fn(time_step: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        GammaSignal::new(
            time_step,
            (0..=n).map(|k| f(k as f64 * time_step)).collect(),
        )
    }

    /// Constant signal able to cover [0, t_final].
    pub fn constant(value: f64, t_final: f64) -> GammaSignal {
        GammaSignal {
            time_step: t_final.max(1.0),
            values: vec![value, value],
        }
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_final(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.time_step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-linear value, clamped to the end samples outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let pos = t / self.time_step;
        let idx = pos.floor() as usize;
        if idx + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = pos - idx as f64;
        self.values[idx] * (1.0 - frac) + self.values[idx + 1] * frac
    }

    /// Largest |γ| over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
