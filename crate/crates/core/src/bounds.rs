//! Scalar precision bounds on the identifiable `(θ, α)` block.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use serde::Serialize;

use crate::error::{QwfError, Result};
use crate::qfim::QfiMatrix;
use crate::C64;

/// `‖D‖ ≤ COMPAT_EPS · ‖F‖` is required before the symmetric and Holevo bounds are declared equal.
pub const COMPAT_EPS: f64 = 1e-6;
/// Numerical overshoot of `R` above 1 that is silently clamped.
pub const R_CLAMP: f64 = 1e-9;
/// `det F ≤ SINGULAR_REL · (tr F)²` is treated as singular.
pub const SINGULAR_REL: f64 = 1e-12;

/// Positive-definite cost weights over the same labels as the Fisher matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix {
    entries: [[f64; 2]; 2],
}

impl WeightMatrix {
    pub fn identity() -> Self {
        WeightMatrix {
            entries: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn new(entries: [[f64; 2]; 2]) -> Result<Self> {
        if entries.iter().flatten().any(|x| !x.is_finite()) {
            return Err(QwfError::InvalidWeight("non-finite entry".into()));
        }
        if (entries[0][1] - entries[1][0]).abs() > 1e-12 * (1.0 + entries[0][1].abs()) {
            return Err(QwfError::InvalidWeight("matrix is not symmetric".into()));
        }
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[entries[0][0], entries[0][1], entries[1][0], entries[1][1]],
        );
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min <= 0.0 {
            return Err(QwfError::InvalidWeight(format!(
                "smallest eigenvalue {min} is not positive"
            )));
        }
        Ok(WeightMatrix { entries })
    }

    pub fn diagonal(a: f64, b: f64) -> Result<Self> {
        Self::new([[a, 0.0], [0.0, b]])
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    fn matrix(&self) -> Matrix2<f64> {
        let e = self.entries;
        Matrix2::new(e[0][0], e[0][1], e[1][0], e[1][1])
    }
}

fn block2(m: &QfiMatrix) -> (Matrix2<f64>, Vec<String>) {
    let b = if m.dim() == 2 {
        m.clone()
    } else {
        m.identifiable()
    };
    let e = &b.entries;
    (
        Matrix2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]),
        b.labels,
    )
}

/// Explicit 2×2 inverse; names the non-identifiable direction on failure.
pub fn invert_fisher(f: &Matrix2<f64>, labels: &[String]) -> Result<Matrix2<f64>> {
    let det = f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)];
    let tr = f[(0, 0)] + f[(1, 1)];
    if !(det > SINGULAR_REL * tr * tr) || !det.is_finite() {
        // null direction of the block: the larger-normed column of adj(F)
        let c0 = f[(1, 1)].abs() + f[(1, 0)].abs();
        let c1 = f[(0, 0)].abs() + f[(0, 1)].abs();
        let parameter = if tr.abs() == 0.0 || !tr.is_finite() {
            labels.join(", ")
        } else if c0 >= c1 {
            labels[0].clone()
        } else {
            labels[1].clone()
        };
        return Err(QwfError::SingularFisher { parameter });
    }
    Ok(Matrix2::new(f[(1, 1)], -f[(0, 1)], -f[(1, 0)], f[(0, 0)]) / det)
}

/// `C^S = Tr(F⁻¹ W)` on the identifiable block.
pub fn symmetric_bound(f: &QfiMatrix, w: &WeightMatrix) -> Result<f64> {
    let (m, labels) = block2(f);
    let inv = invert_fisher(&m, &labels)?;
    Ok((inv * w.matrix()).trace())
}

/// `R = ‖i F⁻¹ D‖_∞`, with overshoot above 1 by less than [`R_CLAMP`] clamped.
pub fn incompatibility_r(f: &QfiMatrix, d: &QfiMatrix) -> Result<f64> {
    let (fm, labels) = block2(f);
    let (dm, _) = block2(d);
    let m = invert_fisher(&fm, &labels)? * dm;
    let half_tr = C64::from(m.trace() / 2.0);
    let disc = (half_tr * half_tr - C64::from(m.determinant())).sqrt();
    let r = (half_tr + disc).norm().max((half_tr - disc).norm());
    Ok(if r > 1.0 && r - 1.0 < R_CLAMP { 1.0 } else { r })
}

/// Evidence that the Holevo bound equals the symmetric bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolevoCertificate {
    pub holevo: f64,
    pub symmetric: f64,
    pub incompatibility: f64,
    pub d_norm: f64,
    pub threshold: f64,
}

/// `C^H = C^S` for a compatible model; refuses when `‖D‖` is above threshold.
pub fn holevo_compatible(
    f: &QfiMatrix,
    w: &WeightMatrix,
    d: &QfiMatrix,
) -> Result<HolevoCertificate> {
    let (fm, _) = block2(f);
    let (dm, _) = block2(d);
    let d_norm = dm.abs().max();
    let threshold = COMPAT_EPS * fm.abs().max();
    if d_norm > threshold {
        return Err(QwfError::IncompatibleModel { d_norm, threshold });
    }
    let symmetric = symmetric_bound(f, w)?;
    let incompatibility = incompatibility_r(f, d)?;
    let holevo = symmetric;
    debug_assert!(symmetric <= holevo && holevo <= (1.0 + incompatibility) * symmetric);
    Ok(HolevoCertificate {
        holevo,
        symmetric,
        incompatibility,
        d_norm,
        threshold,
    })
}

/// `C^S ≤ C^H ≤ (1 + R) C^S` without any equality claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolevoSandwich {
    pub lower: f64,
    pub upper: f64,
    pub incompatibility: f64,
}

pub fn holevo_sandwich(f: &QfiMatrix, w: &WeightMatrix, d: &QfiMatrix) -> Result<HolevoSandwich> {
    let lower = symmetric_bound(f, w)?;
    let r = incompatibility_r(f, d)?;
    Ok(HolevoSandwich {
        lower,
        upper: (1.0 + r) * lower,
        incompatibility: r,
    })
}

/// `t² C^H` for the optimal entangled start: `(sin θ + cos²θ) / (4 sin θ (1 − sin θ))`.
pub fn g_closed_form(theta: f64) -> f64 {
    let s = theta.sin();
    (s + theta.cos().powi(2)) / (4.0 * s * (1.0 - s))
}
