//! The deformation `ξ_α` shifting horizontal pin gradients between the pin
//! and level `ℓ`, and the entropy constant bounding its cost.

use serde::{Deserialize, Serialize};

use super::GradientConfig;
use crate::graph::{BaseGraph, StripGraph, Weights};
use crate::{Error, Result};

/// `sup |χ̃′|` for the smoothstep cutoff.
pub const CHI_TILDE_PRIME_SUP: f64 = 3.0;

const INVERSE_MAX_ITER: usize = 500;

/// Cutoff `χ̃`: 1 on `x ≤ 1/2`, 0 on `x ≥ 1`, cubic smoothstep in between.
pub fn chi_tilde(x: f64) -> f64 {
    if x <= 0.5 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        let s = 2.0 * x - 1.0;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

pub fn chi_tilde_prime(x: f64) -> f64 {
    if x <= 0.5 || x >= 1.0 {
        0.0
    } else {
        let s = 2.0 * x - 1.0;
        -12.0 * s * (1.0 - s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub alpha: f64,
    pub eta: f64,
    pub c9: f64,
}

impl Default for DeformationParams {
    fn default() -> Self {
        DeformationParams { alpha: 0.0, eta: 1.0, c9: 0.1 }
    }
}

impl DeformationParams {
    /// Check `η > 0` and `0 < c9 < 1/(2 sup|χ̃′|)`; `alpha` is not checked.
    pub fn validate_scales(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(crate::error::invalid_param("eta", format!("must be positive, got {}", self.eta)));
        }
        let bound = 0.5 / CHI_TILDE_PRIME_SUP;
        if !(self.c9 > 0.0 && self.c9 < bound) {
            return Err(crate::error::invalid_param("c9", format!("must lie in (0, {bound}), got {}", self.c9)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_scales()?;
        let bound = self.c9 * self.eta;
        if !self.alpha.is_finite() || self.alpha.abs() > bound {
            return Err(Error::DeformationTooLarge { alpha: self.alpha.abs(), bound });
        }
        Ok(())
    }
}

/// The factor of `χ_{n+1/2}` coming from the vertical blocks `ω_n, ω_{n+1}`.
fn vertical_cutoff(strip: &StripGraph, g: &GradientConfig, n: i32, eta: f64) -> f64 {
    let inv = 1.0 / (eta * eta);
    [n, n + 1]
        .iter()
        .map(|&m| {
            let (t, y) = g.vertical_block(strip, m);
            t.iter().zip(y).map(|(a, b)| chi_tilde(inv * (a * a + b * b))).product::<f64>()
        })
        .product()
}

fn check_window(strip: &StripGraph, g: &GradientConfig, l: i32) -> Result<()> {
    g.check(strip)?;
    if l < 0 || l > strip.hi() {
        return Err(Error::LevelOutOfRange { level: l as i64, lo: 0, hi: strip.hi() });
    }
    Ok(())
}

/// `χ_{n+1/2}` and `∂χ_{n+1/2}/∂∇t^bb_{p_{n+1/2}}` with the horizontal
/// gradient replaced by `u`.
fn chi_and_derivative(strip: &StripGraph, g: &GradientConfig, n: i32, u: f64, eta: f64) -> (f64, f64) {
    let vert = vertical_cutoff(strip, g, n, eta);
    let y = g.horizontal(strip, n).1;
    let inv = 1.0 / (eta * eta);
    let x = inv * (u * u + y * y);
    (vert * chi_tilde(x), vert * chi_tilde_prime(x) * 2.0 * u * inv)
}

/// `ξ_α(ω)`: `∇t^bb_{p_{n+1/2}} += α χ_{n+1/2}` for `0 ≤ n < ℓ`.
pub fn deform(strip: &StripGraph, g: &GradientConfig, params: &DeformationParams, l: i32) -> Result<GradientConfig> {
    params.validate()?;
    check_window(strip, g, l)?;
    let mut out = g.clone();
    for n in 0..l {
        let i = GradientConfig::horizontal_index(strip, n);
        let (chi, _) = chi_and_derivative(strip, g, n, g.grad_t[i], params.eta);
        out.grad_t[i] += params.alpha * chi;
    }
    Ok(out)
}

/// `ξ_α⁻¹` by fixed-point iteration on each deformed coordinate.
pub fn deform_inverse(strip: &StripGraph, g: &GradientConfig, params: &DeformationParams, l: i32) -> Result<GradientConfig> {
    params.validate()?;
    check_window(strip, g, l)?;
    let mut out = g.clone();
    for n in 0..l {
        let i = GradientConfig::horizontal_index(strip, n);
        let target = g.grad_t[i];
        let mut u = target;
        let mut converged = false;
        for _ in 0..INVERSE_MAX_ITER {
            let next = target - params.alpha * chi_and_derivative(strip, g, n, u, params.eta).0;
            let done = (next - u).abs() <= 1e-15 * (1.0 + u.abs());
            u = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(INVERSE_MAX_ITER));
        }
        out.grad_t[i] = u;
    }
    Ok(out)
}

/// `ln det Dξ_α = Σ_{n<ℓ} ln(1 + α ∂χ_{n+1/2}/∂∇t^bb_{p_{n+1/2}})`.
pub fn deform_log_jacobian(strip: &StripGraph, g: &GradientConfig, params: &DeformationParams, l: i32) -> Result<f64> {
    params.validate()?;
    check_window(strip, g, l)?;
    let mut acc = 0.0;
    for n in 0..l {
        let u = g.horizontal(strip, n).0;
        let factor = 1.0 + params.alpha * chi_and_derivative(strip, g, n, u, params.eta).1;
        if factor <= 0.0 {
            return Err(Error::NonPositiveJacobian(factor));
        }
        acc += factor.ln();
    }
    Ok(acc)
}

/// `(c12, c13)`: per-level bounds on the second `α`-derivatives of the
/// deformed energy and of the log-Jacobian.
pub fn entropy_constant_parts(params: &DeformationParams, weights: &Weights, base: &BaseGraph) -> Result<(f64, f64)> {
    params.validate_scales()?;
    weights.validate(base)?;
    let (eta, c9) = (params.eta, params.c9);
    let s = base.tree_len() as f64;
    let beta_max = weights.horizontal.iter().cloned().fold(f64::MIN, f64::max);
    let c12 = base.n_vertices() as f64
        * beta_max
        * ((eta * (2.0 * s + 1.0 + c9)).cosh() + 3.0 * s * s * eta * eta * (eta * (2.0 * s + c9)).exp());
    let k = CHI_TILDE_PRIME_SUP;
    let c13 = 4.0 * k * k / (eta * eta * (1.0 - 2.0 * c9 * k).powi(2));
    Ok((c12, c13))
}

/// `c5 = (c12 + c13)/2`.
pub fn entropy_constant(params: &DeformationParams, weights: &Weights, base: &BaseGraph) -> Result<f64> {
    let (c12, c13) = entropy_constant_parts(params, weights, base)?;
    Ok(0.5 * (c12 + c13))
}
