//! Fourier-like closed form used in place of lattice summation when
//! fine-tuning:
//!
//! ```text
//! f(z) = 1/(|z|² + β) + Σ_{k=1..K} (γ/k²)·[cos(kπu′)·e^{-kπ|v′|} + sin(kπv′)·e^{-kπ|u′|}]
//! ```
//!
//! with `u′ = Re(z)/omega1_norm`, `v′ = Im(z)/omega3_norm` and
//! `β = softplus(beta_raw)`. The function is finite everywhere, including z = 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::util::{softplus, softplus_inv};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FastParams {
    pub beta_raw: f64,
    pub gamma: f64,
    pub omega1_norm: f64,
    pub omega3_norm: f64,
    pub k_terms: usize,
}

impl Default for FastParams {
    fn default() -> Self {
        Self {
            beta_raw: softplus_inv(0.610),
            gamma: 1.0,
            omega1_norm: 1.085,
            omega3_norm: 1.085,
            k_terms: 8,
        }
    }
}

impl FastParams {
    pub fn beta(&self) -> f64 {
        softplus(self.beta_raw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_terms < 1 {
            return Err(Error::Config("fast k_terms must be at least 1".into()));
        }
        if !(self.omega1_norm > 0.0 && self.omega3_norm > 0.0) {
            return Err(Error::Config(
                "fast period normalizers must be positive".into(),
            ));
        }
        if !(self.beta() > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(
                "fast beta must be positive and gamma finite".into(),
            ));
        }
        Ok(())
    }

    fn normalized(&self, z: Complex64) -> (f64, f64) {
        (z.re / self.omega1_norm, z.im / self.omega3_norm)
    }
}

/// Partial derivatives of [`fast_wp`] with respect to β, γ, u′ and v′.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastGradients {
    pub d_beta: f64,
    pub d_gamma: f64,
    pub d_u: f64,
    pub d_v: f64,
    /// `u′ = 0` or `v′ = 0`: the derivative of `|·|` there was taken as 0.
    pub on_kink: bool,
}

/// The bracketed series `Σ (1/k²)[cos(kπu′)e^{-kπ|v′|} + sin(kπv′)e^{-kπ|u′|}]`
/// without the γ factor.
fn series(u: f64, v: f64, k_terms: usize) -> f64 {
    (1..=k_terms)
        .map(|k| {
            let kp = k as f64 * PI;
            ((kp * u).cos() * (-kp * v.abs()).exp() + (kp * v).sin() * (-kp * u.abs()).exp())
                / (k * k) as f64
        })
        .sum()
}

pub fn fast_wp(z: Complex64, p: &FastParams) -> f64 {
    let (u, v) = p.normalized(z);
    1.0 / (z.norm_sqr() + p.beta()) + p.gamma * series(u, v, p.k_terms)
}

/// [`fast_wp`] as a function of the normalized coordinates and β, γ directly.
/// Used by finite-difference checks.
pub fn fast_wp_at(u: f64, v: f64, beta: f64, gamma: f64, p: &FastParams) -> f64 {
    let r2 = (u * p.omega1_norm).powi(2) + (v * p.omega3_norm).powi(2);
    1.0 / (r2 + beta) + gamma * series(u, v, p.k_terms)
}

pub fn fast_wp_gradients(z: Complex64, p: &FastParams) -> FastGradients {
    let (u, v) = p.normalized(z);
    let beta = p.beta();
    let r2 = (u * p.omega1_norm).powi(2) + (v * p.omega3_norm).powi(2);
    let radial = 1.0 / (r2 + beta);
    let radial_sq = radial * radial;
    let (su, sv) = (sign(u), sign(v));

    let mut d_gamma = 0.0;
    let mut du_series = 0.0;
    let mut dv_series = 0.0;
    for k in 1..=p.k_terms {
        let kp = k as f64 * PI;
        let w = 1.0 / (k * k) as f64;
        let (cu, su_k) = ((kp * u).cos(), (kp * u).sin());
        let (cv, sv_k) = ((kp * v).cos(), (kp * v).sin());
        let ev = (-kp * v.abs()).exp();
        let eu = (-kp * u.abs()).exp();
        d_gamma += w * (cu * ev + sv_k * eu);
        du_series += w * (-kp * su_k * ev - kp * su * sv_k * eu);
        dv_series += w * (-kp * sv * cu * ev + kp * cv * eu);
    }
    FastGradients {
        d_beta: -radial_sq,
        d_gamma,
        d_u: -2.0 * u * p.omega1_norm.powi(2) * radial_sq + p.gamma * du_series,
        d_v: -2.0 * v * p.omega3_norm.powi(2) * radial_sq + p.gamma * dv_series,
        on_kink: u == 0.0 || v == 0.0,
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `2|γ|/K`: bounds every tail `Σ_{k>K}` of the series, since each bracket is
/// at most 2 in magnitude and `Σ_{k>K} 1/k² < 1/K`.
pub fn fast_tail_bound(p: &FastParams) -> f64 {
    2.0 * p.gamma.abs() / p.k_terms as f64
}

/// Four-wide feature vector for the fast mode:
/// `[f(z), ∂f/∂u′, ∂f/∂v′, 1/(|z|² + β)]`.
pub fn fast_features(z: Complex64, p: &FastParams) -> [f64; 4] {
    let g = fast_wp_gradients(z, p);
    [fast_wp(z, p), g.d_u, g.d_v, 1.0 / (z.norm_sqr() + p.beta())]
}
