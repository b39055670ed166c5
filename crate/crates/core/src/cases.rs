//! Physical parametrizations of the coin: a magnetic field `(0, b₂, b₃)` and the
//! split-step Dirac walk with mass `m` and charge `q`.
//!
//! Both reduce to the same map. With `B = √(b₂² + b₃²)`,
//!
//! ```text
//! sin θ = −(sin B / B) b₂,   tan α = −(tan B / B) b₃
//! ```
//!
//! which reproduces `exp(−i (b₂σ_y + b₃σ_z))` exactly for `β = 0`. The Dirac walk
//! uses `(b₂, b₃) = (εm, εqA_x)` and `β = π/2`. Inverses are restricted to the
//! principal branch `B < π/2`, where the map is one-to-one.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::coin::{CoinAngles, CoinParams};
use crate::error::{QwfError, Result};
use crate::qfim::{QfiMatrix, Regime, Symmetry};
use crate::C64;

/// Newton iterations allowed when polishing an inverse.
pub const MAX_NEWTON: usize = 100;
/// Residual target for inverse maps.
pub const INVERSE_TOL: f64 = 1e-14;

// Below this the closed forms of the derivative helpers lose digits to cancellation.
const SERIES_CUTOFF: f64 = 0.05;

/// `sin x / x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x.sin() / x
    }
}

/// `(d/dx sinc x) / x`.
fn sinc_d_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2.powi(3) / 45360.0 - x2.powi(4) / 3991680.0
    } else {
        (x * x.cos() - x.sin()) / x.powi(3)
    }
}

/// `tan x / x`.
fn tanc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 + x2 / 3.0
            + 2.0 * x2 * x2 / 15.0
            + 17.0 * x2.powi(3) / 315.0
            + 62.0 * x2.powi(4) / 2835.0
    } else {
        x.tan() / x
    }
}

/// `(d/dx tanc x) / x`.
fn tanc_d_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        2.0 / 3.0
            + 8.0 * x2 / 15.0
            + 34.0 * x2 * x2 / 105.0
            + 496.0 * x2.powi(3) / 2835.0
            + 2764.0 * x2.powi(4) / 31185.0
    } else {
        (x / x.cos().powi(2) - x.tan()) / x.powi(3)
    }
}

/// `(θ, α)` as raw angles (θ may be negative) for the field `(b₂, b₃)`.
fn field_angles(b2: f64, b3: f64) -> (f64, f64) {
    let b = b2.hypot(b3);
    ((-b2 * sinc(b)).asin(), (-b3 * tanc(b)).atan())
}

/// `∂(θ, α)/∂(b₂, b₃)`.
fn field_jacobian(b2: f64, b3: f64) -> Matrix2<f64> {
    let b = b2.hypot(b3);
    let x = b2 * sinc(b);
    let y = b3 * tanc(b);
    let sd = sinc_d_over_x(b);
    let td = tanc_d_over_x(b);
    let dx = [sinc(b) + b2 * b2 * sd, b2 * b3 * sd];
    let dy = [b2 * b3 * td, tanc(b) + b3 * b3 * td];
    let ft = -1.0 / (1.0 - x * x).sqrt();
    let fa = -1.0 / (1.0 + y * y);
    Matrix2::new(ft * dx[0], ft * dx[1], fa * dy[0], fa * dy[1])
}

fn check_window(b: f64, what: &str) -> Result<()> {
    if !b.is_finite() {
        return Err(QwfError::InvalidParams(format!("{what} is not finite")));
    }
    if b >= FRAC_PI_2 {
        return Err(QwfError::OutOfWindow(format!(
            "{what} = {b} must be below pi/2"
        )));
    }
    Ok(())
}

/// Result of a Newton-polished inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseReport {
    pub b2: f64,
    pub b3: f64,
    pub iterations: usize,
    /// Max-norm of `(θ, α)(b) − (θ, α)_target` at exit.
    pub residual: f64,
    /// 2-norm condition number of the forward Jacobian at the solution.
    pub condition: f64,
}

/// Invert the field map for signed `θ ∈ (−π/2, π/2)` and `α ∈ (−π/2, π/2)`.
fn invert_field(theta: f64, alpha: f64) -> Result<InverseReport> {
    if !(alpha.abs() < FRAC_PI_2) || !(theta.abs() < FRAC_PI_2) {
        return Err(QwfError::OutOfWindow(format!(
            "coin angles (theta = {theta}, alpha = {alpha}) are outside the principal branch"
        )));
    }
    // closed form: cos B = cos θ cos α
    let b = (theta.cos() * alpha.cos()).clamp(-1.0, 1.0).acos();
    let mut v = [-theta.sin() / sinc(b), -alpha.tan() / tanc(b)];
    let target = [theta, alpha];
    let residual = |v: &[f64; 2]| {
        let (t, a) = field_angles(v[0], v[1]);
        [t - target[0], a - target[1]]
    };
    let mut r = residual(&v);
    let mut iterations = 0;
    while r[0].abs().max(r[1].abs()) > INVERSE_TOL {
        if iterations == MAX_NEWTON {
            return Err(QwfError::NoConvergence {
                iterations,
                residual: r[0].abs().max(r[1].abs()),
            });
        }
        let j = field_jacobian(v[0], v[1]);
        let Some(inv) = j.try_inverse() else {
            return Err(QwfError::SingularJacobian {
                det: j.determinant(),
            });
        };
        let step = inv * nalgebra::Vector2::new(r[0], r[1]);
        let next = [v[0] - step[0], v[1] - step[1]];
        let rn = residual(&next);
        iterations += 1;
        // stop once rounding dominates
        if rn[0].abs().max(rn[1].abs()) >= r[0].abs().max(r[1].abs()) {
            break;
        }
        v = next;
        r = rn;
    }
    let res = r[0].abs().max(r[1].abs());
    if res > 1e-12 {
        return Err(QwfError::NoConvergence {
            iterations,
            residual: res,
        });
    }
    let sv = field_jacobian(v[0], v[1]).singular_values();
    Ok(InverseReport {
        b2: v[0],
        b3: v[1],
        iterations,
        residual: res,
        condition: sv.max() / sv.min(),
    })
}

/// Field components `(0, b₂, b₃)` in energy units (ħ = 1, unit step time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    b2: f64,
    b3: f64,
}

impl MagneticField {
    pub fn new(b2: f64, b3: f64) -> Result<Self> {
        if !b2.is_finite() || !b3.is_finite() {
            return Err(QwfError::InvalidParams(
                "field components must be finite".into(),
            ));
        }
        check_window(b2.hypot(b3), "field magnitude B")?;
        Ok(MagneticField { b2, b3 })
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn b3(&self) -> f64 {
        self.b3
    }

    pub fn magnitude(&self) -> f64 {
        self.b2.hypot(self.b3)
    }

    /// `exp(−i B B̂·σ) = cos B 1 − i (sin B/B)(b₂σ_y + b₃σ_z)`.
    pub fn unitary(&self) -> Matrix2<C64> {
        let b = self.magnitude();
        let s = sinc(b);
        let (c, i) = (C64::from(b.cos()), C64::i());
        let y = C64::from(s * self.b2);
        let z = C64::from(s * self.b3);
        Matrix2::new(c - i * z, -y, y, c + i * z)
    }
}

/// Raw coin angles for a field; `θ` carries the sign of `−b₂`.
pub fn coin_angles_from_magnetic(f: &MagneticField) -> CoinAngles {
    let (theta, alpha) = field_angles(f.b2, f.b3);
    CoinAngles::new(theta, alpha, 0.0)
}

/// Coin for a field. Fails with `DegenerateCoin` when `b₂ = 0`.
pub fn coin_from_magnetic(f: &MagneticField) -> Result<CoinParams> {
    coin_angles_from_magnetic(f).to_params()
}

/// Recover the field from a coin with `β = 0` on the principal branch.
pub fn magnetic_from_coin(p: &CoinParams) -> Result<(MagneticField, InverseReport)> {
    if p.beta().abs() > 1e-12 {
        return Err(QwfError::OutOfWindow(format!(
            "magnetic coins have beta = 0, got {}",
            p.beta()
        )));
    }
    let rep = invert_field(p.signed_theta(), p.alpha())?;
    Ok((MagneticField::new(rep.b2, rep.b3)?, rep))
}

/// `∂(θ, α)/∂(b₂, b₃)`.
pub fn magnetic_jacobian(f: &MagneticField) -> Matrix2<f64> {
    field_jacobian(f.b2, f.b3)
}

/// Mass, charge, vector potential and Trotter step of the split-step Dirac walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    m: f64,
    q: f64,
    a_x: f64,
    eps: f64,
}

impl DiracParams {
    pub fn new(m: f64, q: f64, a_x: f64, eps: f64) -> Result<Self> {
        if ![m, q, a_x, eps].iter().all(|x| x.is_finite()) {
            return Err(QwfError::InvalidParams(
                "Dirac parameters must be finite".into(),
            ));
        }
        if eps <= 0.0 {
            return Err(QwfError::InvalidParams(format!(
                "Trotter step eps = {eps} must be positive"
            )));
        }
        let d = DiracParams { m, q, a_x, eps };
        check_window(eps * d.omega(), "eps * Omega")?;
        Ok(d)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a_x(&self) -> f64 {
        self.a_x
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `Ω = √(q²A_x² + m²)`.
    pub fn omega(&self) -> f64 {
        (self.q * self.a_x).hypot(self.m)
    }

    fn field(&self) -> (f64, f64) {
        (self.eps * self.m, self.eps * self.q * self.a_x)
    }
}

/// Raw coin angles of the Dirac walk, with `β = π/2`.
pub fn coin_angles_from_dirac(d: &DiracParams) -> CoinAngles {
    let (b2, b3) = d.field();
    let (theta, alpha) = field_angles(b2, b3);
    CoinAngles::new(theta, alpha, FRAC_PI_2)
}

/// Coin of the Dirac walk. `m = 0` gives the degenerate `θ = 0` coin and fails.
pub fn coin_from_dirac(d: &DiracParams) -> Result<CoinParams> {
    coin_angles_from_dirac(d).to_params()
}

/// Recover `(m, q)` from a Dirac coin.
pub fn dirac_from_coin(p: &CoinParams, a_x: f64, eps: f64) -> Result<(f64, f64, InverseReport)> {
    if a_x == 0.0 {
        return Err(QwfError::ChargeUnidentifiable);
    }
    if !(eps > 0.0) || !eps.is_finite() || !a_x.is_finite() {
        return Err(QwfError::InvalidParams(
            "eps must be positive and A_x finite".into(),
        ));
    }
    if (p.beta() - FRAC_PI_2).abs() > 1e-12 {
        return Err(QwfError::OutOfWindow(format!(
            "Dirac coins have beta = pi/2, got {}",
            p.beta()
        )));
    }
    let rep = invert_field(p.signed_theta(), p.alpha())?;
    Ok((rep.b2 / eps, rep.b3 / (eps * a_x), rep))
}

/// First-order inversion `m ≈ −sin θ/ε`, `q ≈ −tan α/(A_x ε)`.
pub fn dirac_first_order(p: &CoinParams, a_x: f64, eps: f64) -> Result<(f64, f64)> {
    if a_x == 0.0 {
        return Err(QwfError::ChargeUnidentifiable);
    }
    Ok((
        -p.signed_theta().sin() / eps,
        -p.alpha().tan() / (a_x * eps),
    ))
}

/// `∂(θ, α)/∂(m, q)`.
pub fn dirac_jacobian(d: &DiracParams) -> Matrix2<f64> {
    let (b2, b3) = d.field();
    field_jacobian(b2, b3) * Matrix2::new(d.eps, 0.0, 0.0, d.eps * d.a_x)
}

/// `F_phys = Jᵀ F_coin J` with `J = ∂(θ, α)/∂(physical)`.
pub fn pullback_qfim(f_coin: &QfiMatrix, j: &Matrix2<f64>, labels: [&str; 2]) -> Result<QfiMatrix> {
    let det = j.determinant();
    let scale = j.abs().max();
    if !(det.abs() > 1e-12 * scale * scale) {
        return Err(QwfError::SingularJacobian { det });
    }
    let b = if f_coin.dim() == 2 {
        f_coin.clone()
    } else {
        f_coin.identifiable()
    };
    let f = Matrix2::new(
        b.entries[(0, 0)],
        b.entries[(0, 1)],
        b.entries[(1, 0)],
        b.entries[(1, 1)],
    );
    let fp = j.transpose() * f * j;
    let fp = (fp + fp.transpose()) * 0.5;
    Ok(QfiMatrix::new(
        DMatrix::from_column_slice(2, 2, fp.as_slice()),
        labels.iter().map(|s| s.to_string()).collect(),
        f_coin.t,
        Regime::Pullback,
        Symmetry::Symmetric,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::coin_matrix;

    fn central_jacobian(f: impl Fn(f64, f64) -> (f64, f64), x: f64, y: f64) -> Matrix2<f64> {
        let h = 1e-6;
        let (a1, b1) = f(x + h, y);
        let (a0, b0) = f(x - h, y);
        let (a3, b3) = f(x, y + h);
        let (a2, b2) = f(x, y - h);
        Matrix2::new(
            (a1 - a0) / (2.0 * h),
            (a3 - a2) / (2.0 * h),
            (b1 - b0) / (2.0 * h),
            (b3 - b2) / (2.0 * h),
        )
    }

    #[test]
    fn special_functions_are_continuous_at_cutoff() {
        for f in [sinc, sinc_d_over_x, tanc, tanc_d_over_x] {
            let below = f(SERIES_CUTOFF * (1.0 - 1e-12));
            let above = f(SERIES_CUTOFF * (1.0 + 1e-12));
            assert!(
                (below - above).abs() < 1e-13 * above.abs(),
                "{below} {above}"
            );
        }
    }

    #[test]
    fn magnetic_examples() {
        let a = coin_angles_from_magnetic(&MagneticField::new(0.5, 0.0).unwrap());
        assert!((a.theta.sin() + 0.5f64.sin()).abs() < 1e-15);
        assert_eq!(a.alpha, 0.0);
        assert_eq!(a.beta, 0.0);
        let a = coin_angles_from_magnetic(&MagneticField::new(0.1, 0.1).unwrap());
        assert!((a.theta + 0.1).abs() < 2e-3 && (a.alpha + 0.1).abs() < 2e-3);
        // third order: θ = −b₂ + b₂B²/6 − b₂³/6, α = −b₃ − b₃B²/3 + b₃³/3
        assert!((a.theta - (-0.1 + 0.1 * 0.02 / 6.0 - 0.001 / 6.0)).abs() < 1e-6);
        assert!((a.alpha - (-0.1 - 0.1 * 0.02 / 3.0 + 0.001 / 3.0)).abs() < 1e-6);
        assert!(MagneticField::new(1.2, 1.1).is_err());
        assert!(matches!(
            coin_from_magnetic(&MagneticField::new(0.0, 0.3).unwrap()),
            Err(QwfError::DegenerateCoin { .. })
        ));
    }

    #[test]
    fn coin_reproduces_field_exponential() {
        for (b2, b3) in [(0.3, 0.4), (-0.7, 0.2), (0.1, -1.3), (1.0, 0.0)] {
            let f = MagneticField::new(b2, b3).unwrap();
            let a = coin_angles_from_magnetic(&f);
            let c = coin_matrix(a.theta, a.alpha, a.beta);
            assert!((c - f.unitary()).iter().all(|z| z.norm() < 1e-10));
            // direct exponential via eigen-decomposition of the Hermitian generator
            let h = Matrix2::new(
                C64::from(b3),
                C64::new(0.0, -b2),
                C64::new(0.0, b2),
                C64::from(-b3),
            );
            let b = f.magnitude();
            let direct = Matrix2::identity() * C64::from(b.cos()) - h * C64::new(0.0, b.sin() / b);
            assert!((direct - c).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn magnetic_round_trip() {
        for (b2, b3) in [
            (0.3, 0.4),
            (-0.2, 0.9),
            (0.8, -0.05),
            (1.1, 0.9),
            (1e-4, 2e-4),
        ] {
            let f = MagneticField::new(b2, b3).unwrap();
            let p = coin_from_magnetic(&f).unwrap();
            let (g, rep) = magnetic_from_coin(&p).unwrap();
            assert!(
                (g.b2() - b2).abs() < 1e-10 && (g.b3() - b3).abs() < 1e-10,
                "{b2} {b3} {rep:?}"
            );
            let back = coin_from_magnetic(&g).unwrap();
            assert!(
                (back.theta() - p.theta()).abs() < 1e-10
                    && (back.alpha() - p.alpha()).abs() < 1e-10
            );
        }
        // b₃ = 0: b₂ = −arcsin(sin θ)
        let p = coin_from_magnetic(&MagneticField::new(0.5, 0.0).unwrap()).unwrap();
        let (g, _) = magnetic_from_coin(&p).unwrap();
        assert!((g.b2() + p.signed_theta().sin().asin()).abs() < 1e-12);
    }

    #[test]
    fn boundary_conditioning_is_reported() {
        for b3 in [FRAC_PI_2 - 1e-3, FRAC_PI_2 - 1e-6] {
            let near = MagneticField::new(0.2 * (FRAC_PI_2 - b3), b3).unwrap();
            let (g, rep) = magnetic_from_coin(&coin_from_magnetic(&near).unwrap()).unwrap();
            assert!(rep.condition.is_finite() && rep.condition >= 1.0);
            assert!(rep.iterations <= MAX_NEWTON);
            assert!((g.b3() - near.b3()).abs() < 1e-8, "{rep:?}");
        }
    }

    #[test]
    fn magnetic_inverse_rejects_foreign_coins() {
        let p = CoinParams::new(0.5, 0.2, 0.3).unwrap();
        assert!(matches!(
            magnetic_from_coin(&p),
            Err(QwfError::OutOfWindow(_))
        ));
        let p = CoinParams::new(0.5, 2.0, 0.0).unwrap();
        assert!(matches!(
            magnetic_from_coin(&p),
            Err(QwfError::OutOfWindow(_))
        ));
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        for (b2, b3) in [(0.3, 0.4), (-0.7, 0.2), (1e-4, -3e-4), (0.0, 0.5)] {
            let j = field_jacobian(b2, b3);
            let fd = central_jacobian(field_angles, b2, b3);
            assert!((j - fd).abs().max() < 1e-8, "{j} {fd}");
        }
        let d = DiracParams::new(0.7, 1.3, 0.8, 0.05).unwrap();
        let j = dirac_jacobian(&d);
        let fd = central_jacobian(
            |m, q| {
                let a = coin_angles_from_dirac(&DiracParams::new(m, q, 0.8, 0.05).unwrap());
                (a.theta, a.alpha)
            },
            0.7,
            1.3,
        );
        assert!((j - fd).abs().max() < 1e-9);
    }

    #[test]
    fn dirac_examples() {
        let d = DiracParams::new(0.0, 1.0, 1.0, 0.01).unwrap();
        let a = coin_angles_from_dirac(&d);
        assert_eq!(a.theta, 0.0);
        assert!((a.alpha + 0.01).abs() < 1e-6);
        assert!(matches!(
            coin_from_dirac(&d),
            Err(QwfError::DegenerateCoin { .. })
        ));

        let d = DiracParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
        let (m1, q1) = dirac_first_order(&coin_from_dirac(&d).unwrap(), 1.0, 0.01).unwrap();
        assert!((m1 - 1.0).abs() <= 1e-3 && (q1 - 1.0).abs() <= 1e-3);

        let d = DiracParams::new(0.7, 1.3, 1.0, 0.05).unwrap();
        let p = coin_from_dirac(&d).unwrap();
        let (m, q, _) = dirac_from_coin(&p, 1.0, 0.05).unwrap();
        assert!((m - 0.7).abs() < 1e-10 && (q - 1.3).abs() < 1e-10);
        assert_eq!(
            dirac_from_coin(&p, 0.0, 0.05).unwrap_err(),
            QwfError::ChargeUnidentifiable
        );
        assert!(DiracParams::new(40.0, 0.0, 1.0, 0.05).is_err());
        assert!(DiracParams::new(1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pullback_identities() {
        let f = QfiMatrix::new(
            DMatrix::from_row_slice(2, 2, &[1.6, 0.2, 0.2, 1.1]),
            vec!["theta".into(), "alpha".into()],
            10,
            Regime::Asymptotic,
            Symmetry::Symmetric,
        );
        let id = pullback_qfim(&f, &Matrix2::identity(), ["theta", "alpha"]).unwrap();
        assert_eq!(id.entries, f.entries);
        let j = magnetic_jacobian(&MagneticField::new(0.3, 0.4).unwrap());
        let fp = pullback_qfim(&f, &j, ["b2", "b3"]).unwrap();
        let fm = Matrix2::new(1.6, 0.2, 0.2, 1.1);
        let fpm = Matrix2::new(
            fp.entries[(0, 0)],
            fp.entries[(0, 1)],
            fp.entries[(1, 0)],
            fp.entries[(1, 1)],
        );
        let ji = j.try_inverse().unwrap();
        // Tr(F_phys⁻¹) = Tr(J⁻¹ F_coin⁻¹ J⁻ᵀ)
        let lhs = fpm.try_inverse().unwrap().trace();
        let rhs = (ji * fm.try_inverse().unwrap() * ji.transpose()).trace();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
        // weights pulled back the same way leave the bound invariant
        let w = Matrix2::new(2.0, 0.3, 0.3, 0.5);
        let w_phys = j.transpose() * w * j;
        let a = (fpm.try_inverse().unwrap() * w_phys).trace();
        let b = (fm.try_inverse().unwrap() * w).trace();
        assert!((a - b).abs() < 1e-10 * a.abs());
        // composing with the inverse Jacobian recovers the coin matrix
        let back = ji.transpose() * fpm * ji;
        assert!((back - fm).abs().max() < 1e-10);
        assert!(matches!(
            pullback_qfim(&f, &Matrix2::new(1.0, 2.0, 2.0, 4.0), ["a", "b"]),
            Err(QwfError::SingularJacobian { .. })
        ));
    }
}
