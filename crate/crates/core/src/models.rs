//! Generalized trigonometric functions of the constant-curvature model spaces.
//!
//! With the curvature convention `R(X,Y) = [∇_X, ∇_Y] - ∇_[X,Y]`, a unit-speed
//! timelike geodesic in the Lorentzian model of curvature `c` carries Jacobi
//! fields `J(t) = s_c(t) V` with
//!
//! ```text
//!          sin(√(-c) t)/√(-c)   c < 0
//! s_c(t) = t                    c = 0
//!          sinh(√c t)/√c        c > 0
//! ```
//!
//! Spacelike (Riemannian-type) radial directions see the opposite sign, which
//! is what [`ModelConstants::radial`] encodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `|c| t²` the closed forms are replaced by their series.
const SERIES_SEAM: f64 = 1e-8;

/// Causal character of the radial directions used for a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureMode {
    /// Unit timelike radial directions, `g(ξ, ξ) = -1`.
    #[serde(rename = "lorentzian-timelike")]
    LorentzianTimelike,
    /// Unit spacelike radial directions, `g(ξ, ξ) = +1`.
    #[serde(rename = "riemannian")]
    Riemannian,
}

impl SignatureMode {
    /// `g(ξ, ξ)` of a unit radial direction.
    pub fn epsilon(self) -> f64 {
        match self {
            SignatureMode::LorentzianTimelike => -1.0,
            SignatureMode::Riemannian => 1.0,
        }
    }

    pub fn from_epsilon(eps: f64) -> Self {
        if eps < 0.0 {
            SignatureMode::LorentzianTimelike
        } else {
            SignatureMode::Riemannian
        }
    }
}

/// Curvature constant and dimension of a model space.
///
/// `c` is the *table* constant: the one that enters `s_c` directly. For
/// timelike comparisons it equals the curvature bound; for Riemannian-type
/// comparisons use [`ModelConstants::radial`], which flips its sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub c: f64,
    pub n: usize,
}

impl ModelConstants {
    pub fn new(c: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("dimension n = {n} must be at least 2")));
        }
        if !c.is_finite() {
            return Err(Error::InvalidSpec(format!("curvature constant {c} is not finite")));
        }
        Ok(Self { c, n })
    }

    /// Table constants for a comparison against the model of curvature
    /// `curvature` along radial directions of the given causal character.
    pub fn radial(curvature: f64, n: usize, mode: SignatureMode) -> Result<Self> {
        match mode {
            SignatureMode::LorentzianTimelike => Self::new(curvature, n),
            SignatureMode::Riemannian => Self::new(-curvature, n),
        }
    }

    /// Fiber / orthogonal-complement dimension `n - 1`.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    /// `k = -c`, the constant of the scalar Riccati equation.
    pub fn k(&self) -> f64 {
        -self.c
    }

    /// First positive zero of `s_c`, if any (`π/√(-c)` for `c < 0`).
    pub fn conjugate_radius(&self) -> Option<f64> {
        (self.c < 0.0).then(|| std::f64::consts::PI / (-self.c).sqrt())
    }

    pub fn s_c(&self, t: f64) -> f64 {
        s_c(self, t)
    }

    pub fn c_c(&self, t: f64) -> f64 {
        c_c(self, t)
    }
}

pub fn s_c(consts: &ModelConstants, t: f64) -> f64 {
    let c = consts.c;
    let x = c * t * t;
    if x.abs() < SERIES_SEAM {
        return t * (1.0 + x / 6.0 + x * x / 120.0);
    }
    if c < 0.0 {
        let r = (-c).sqrt();
        (r * t).sin() / r
    } else {
        let r = c.sqrt();
        (r * t).sinh() / r
    }
}

pub fn c_c(consts: &ModelConstants, t: f64) -> f64 {
    let c = consts.c;
    let x = c * t * t;
    if x.abs() < SERIES_SEAM {
        return 1.0 + x / 2.0 + x * x / 24.0;
    }
    if c < 0.0 {
        ((-c).sqrt() * t).cos()
    } else {
        (c.sqrt() * t).cosh()
    }
}

/// `Ctg_c = c_c / s_c`; an error at the zeros of `s_c`.
pub fn ctg_c(consts: &ModelConstants, t: f64) -> Result<f64> {
    let s = s_c(consts, t);
    if s == 0.0 || t == 0.0 {
        return Err(Error::ModelPole { t });
    }
    if let Some(pole) = consts.conjugate_radius() {
        let period = pole;
        let phase = (t / period).round();
        if phase >= 1.0 && (t - phase * period).abs() <= 1e-14 * (1.0 + t) {
            return Err(Error::ModelPole { t });
        }
    }
    Ok(c_c(consts, t) / s)
}

/// Model volume density `s_c(t)^(n-1)`.
pub fn model_density(consts: &ModelConstants, t: f64) -> f64 {
    s_c(consts, t).powi(consts.m() as i32)
}

/// Model Riccati solution `Φ_c = (n-1) Ctg_c`, defined where `s_c > 0`.
pub fn phi_c(consts: &ModelConstants, t: f64) -> Result<f64> {
    if t <= 0.0 || s_c(consts, t) <= 0.0 {
        return Err(Error::OutOfDomain { what: "phi_c", t });
    }
    Ok(consts.m() as f64 * ctg_c(consts, t)?)
}

/// `∫_0^t s_c(τ)^(n-1) dτ`, by composite Gauss-Legendre quadrature.
pub fn model_radial_integral(consts: &ModelConstants, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if consts.c == 0.0 {
        return t.powi(consts.n as i32) / consts.n as f64;
    }
    crate::quadrature::integrate_gl(|s| model_density(consts, s), 0.0, t, 16)
}
