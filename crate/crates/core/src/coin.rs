//! The U(2) coin, its parameter derivatives and the momentum-space step operator.
//!
//! `CoinAngles` holds raw angles exactly as they come out of a physical mapping
//! (the magnetic-field and Dirac encodings produce `sin θ < 0`). `CoinParams` is
//! the validated, canonical form used by the evolution and estimation code:
//! `θ ∈ (0, π)`, `α, β ∈ [−π, π)`. Reducing θ modulo π flips the sign of the
//! whole coin, which is an unobservable global phase.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{QwfError, Result};
use crate::C64;

/// Below this value of `|sin θ|` the coin is treated as degenerate.
pub const DEGENERATE_SIN: f64 = 1e-12;

/// One of the three coin parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Theta,
    Alpha,
    Beta,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Theta, Param::Alpha, Param::Beta];

    pub fn index(self) -> usize {
        match self {
            Param::Theta => 0,
            Param::Alpha => 1,
            Param::Beta => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Param::Theta => "theta",
            Param::Alpha => "alpha",
            Param::Beta => "beta",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Unvalidated coin angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinAngles {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CoinAngles {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Self {
        CoinAngles { theta, alpha, beta }
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::Theta => self.theta,
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
        }
    }

    /// Copy with one angle shifted by `delta`.
    pub fn shifted(&self, param: Param, delta: f64) -> Self {
        let mut out = *self;
        match param {
            Param::Theta => out.theta += delta,
            Param::Alpha => out.alpha += delta,
            Param::Beta => out.beta += delta,
        }
        out
    }

    pub fn matrix(&self) -> Matrix2<C64> {
        coin_matrix(self.theta, self.alpha, self.beta)
    }

    pub fn derivative(&self, param: Param) -> Matrix2<C64> {
        coin_derivative(self.theta, self.alpha, self.beta, param)
    }

    /// Validate and canonicalize.
    pub fn to_params(&self) -> Result<CoinParams> {
        CoinParams::new(self.theta, self.alpha, self.beta)
    }
}

/// Validated coin parameters in canonical ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoinAngles", into = "CoinAngles")]
pub struct CoinParams {
    theta: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<CoinAngles> for CoinParams {
    type Error = QwfError;

    fn try_from(a: CoinAngles) -> Result<Self> {
        CoinParams::new(a.theta, a.alpha, a.beta)
    }
}

impl From<CoinParams> for CoinAngles {
    fn from(p: CoinParams) -> Self {
        p.angles()
    }
}

/// Wrap an angle into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl CoinParams {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(theta.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(QwfError::InvalidParams(format!(
                "angles must be finite, got ({theta}, {alpha}, {beta})"
            )));
        }
        let theta_c = theta.rem_euclid(PI);
        let s = theta_c.sin();
        if theta_c == 0.0 || s < DEGENERATE_SIN {
            return Err(QwfError::DegenerateCoin { sin_theta: s });
        }
        Ok(CoinParams {
            theta: theta_c,
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn get(&self, param: Param) -> f64 {
        self.angles().get(param)
    }

    pub fn angles(&self) -> CoinAngles {
        CoinAngles::new(self.theta, self.alpha, self.beta)
    }

    /// θ folded into `(−π/2, π/2]`; the coin built from it differs from
    /// [`build_coin`] at most by an overall sign.
    pub fn signed_theta(&self) -> f64 {
        if self.theta > PI / 2.0 {
            self.theta - PI
        } else {
            self.theta
        }
    }

    /// `φ = α − β`, the only phase combination entering localized-state Fisher information.
    pub fn phi(&self) -> f64 {
        self.alpha - self.beta
    }

    pub fn coin(&self) -> Matrix2<C64> {
        build_coin(self)
    }

    pub fn u_k(&self, k: f64) -> Matrix2<C64> {
        u_k(self, k)
    }
}

/// `C(θ, α, β) = [[e^{iα} cos θ, e^{iβ} sin θ], [−e^{−iβ} sin θ, e^{−iα} cos θ]]`.
pub fn coin_matrix(theta: f64, alpha: f64, beta: f64) -> Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    let ea = C64::cis(alpha);
    let eb = C64::cis(beta);
    Matrix2::new(ea * c, eb * s, -eb.conj() * s, ea.conj() * c)
}

/// Exact partial derivative of [`coin_matrix`] with respect to one angle.
pub fn coin_derivative(theta: f64, alpha: f64, beta: f64, param: Param) -> Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    let ea = C64::cis(alpha);
    let eb = C64::cis(beta);
    let i = C64::i();
    match param {
        Param::Theta => Matrix2::new(-ea * s, eb * c, -eb.conj() * c, -ea.conj() * s),
        Param::Alpha => Matrix2::new(
            i * ea * c,
            C64::from(0.0),
            C64::from(0.0),
            -i * ea.conj() * c,
        ),
        Param::Beta => Matrix2::new(
            C64::from(0.0),
            i * eb * s,
            i * eb.conj() * s,
            C64::from(0.0),
        ),
    }
}

pub fn build_coin(p: &CoinParams) -> Matrix2<C64> {
    coin_matrix(p.theta, p.alpha, p.beta)
}

/// `diag(e^{−ik}, e^{ik})`, the shift operator at momentum k.
pub fn momentum_phase(k: f64) -> Matrix2<C64> {
    let e = C64::cis(-k);
    Matrix2::new(e, C64::from(0.0), C64::from(0.0), e.conj())
}

/// Single-step propagator at momentum k: `diag(e^{−ik}, e^{ik}) · C`.
pub fn u_k(p: &CoinParams, k: f64) -> Matrix2<C64> {
    u_k_raw(&p.angles(), k)
}

pub fn u_k_raw(a: &CoinAngles, k: f64) -> Matrix2<C64> {
    momentum_phase(k) * a.matrix()
}
