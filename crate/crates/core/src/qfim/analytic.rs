//! Leading-order (`t ≫ 1`) Fisher matrix from the eigenvalue-1 projector of the
//! conjugation superoperator, plus the closed forms that follow from it.
//!
//! With `O_μ = u_k† ∂_μ u_k` (independent of `k`) and `ϱ_k` the 4-vector of
//! `|φ_k(0)⟩⟨φ_k(0)|`,
//!
//! ```text
//! F_μν / t² = ∫ dk/2π ‖φ_k‖² (O_μ|A¹ₖ|O_ν) − [∫ dk/2π (O_μ|A¹ₖ|ϱ_k)] [∫ dk/2π (ϱ_k|A¹ₖ|O_ν)]
//! ```
//!
//! and the Uhlmann curvature vanishes identically. The weight `‖φ_k‖²` is 1 for
//! states supported on a single site or on one site per coin component.

use nalgebra::DMatrix;

use crate::bloch::{projector_a1, to_bloch, Bloch4};
use crate::coin::{CoinParams, Param};
use crate::error::Result;
use crate::kspace::spinor_at;
use crate::quadrature::{integrate_adaptive, KGrid, QuadratureOptions};
use crate::walk::{CoinBlochState, WalkerState};
use crate::C64;

use super::{param_labels, QfiMatrix, Regime, Symmetry};

/// `O_μ` as a 4-vector (purely imaginary).
pub fn o_vector(p: &CoinParams, mu: Param) -> Bloch4 {
    let (s, c) = p.theta().sin_cos();
    let (sp, cp) = p.phi().sin_cos();
    let s2t = 2.0 * s * c;
    match mu {
        Param::Theta => Bloch4::imaginary([0.0, -2.0 * sp, 2.0 * cp, 0.0]),
        Param::Alpha => Bloch4::imaginary([0.0, cp * s2t, sp * s2t, 2.0 * c * c]),
        Param::Beta => Bloch4::imaginary([0.0, cp * s2t, sp * s2t, -2.0 * s * s]),
    }
}

/// `max_k ‖A¹ₖ |O_β)‖` over the grid.
pub fn beta_null_check(p: &CoinParams, grid: &KGrid) -> f64 {
    let ob = o_vector(p, Param::Beta);
    grid.nodes
        .iter()
        .map(|&k| projector_a1(p, k).apply(&ob).norm())
        .fold(0.0, f64::max)
}

/// 4-vector of `|φ⟩⟨φ|` (real).
pub fn density_vector(phi: &[C64; 2]) -> Bloch4 {
    let rho = nalgebra::Matrix2::new(
        phi[0] * phi[0].conj(),
        phi[0] * phi[1].conj(),
        phi[1] * phi[0].conj(),
        phi[1] * phi[1].conj(),
    );
    Bloch4::real(to_bloch(&rho).c.map(|z| z.re))
}

/// Output of the closed-form route.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticQfim {
    /// 3×3 over `(θ, α, β)`; the β row and column vanish.
    pub f: QfiMatrix,
    /// Uhlmann curvature, identically zero on this route.
    pub d: QfiMatrix,
    /// `∫ dk/2π (O_μ|A¹ₖ|ϱ_k)` with the factor `−i` removed, for μ = θ, α, β.
    pub state_terms: [f64; 3],
    /// `∫ dk/2π ‖φ_k‖²`, which must be 1.
    pub norm: f64,
    /// `∫ dk/2π |Im (O_μ|A¹ₖ|O_ν)|`, summed over pairs.
    pub imaginary_residue: f64,
    /// `∫ dk/2π |r⃗_k · (p̄_μ × p_ν)|` with `p_μ` the projected spatial vectors; this
    /// is the only source of a nonzero curvature and vanishes because `A¹ₖ` has rank one
    /// on the spatial block.
    pub triple_residue: f64,
    /// Nodes used by the accepted quadrature rule.
    pub nodes: usize,
}

impl AnalyticQfim {
    pub fn identifiable(&self) -> QfiMatrix {
        self.f.identifiable()
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn qfim_with_density<F>(
    p: &CoinParams,
    t: u64,
    rho: F,
    opts: &QuadratureOptions,
) -> Result<AnalyticQfim>
where
    F: Fn(f64) -> Bloch4 + Sync,
{
    let o = Param::ALL.map(|mu| o_vector(p, mu));
    let integrand = |k: f64| -> [f64; 12] {
        let a1 = projector_a1(p, k);
        let r = rho(k);
        let c0 = r.c[0].re;
        let proj = o.map(|v| a1.apply(&v));
        let mut out = [0.0; 12];
        let mut imag = 0.0;
        let mut triple = 0.0;
        for (n, &(i, j)) in PAIRS.iter().enumerate() {
            let q = o[i].dot(&proj[j]);
            out[n] = c0 * q.re;
            imag += q.im.abs();
            let (pi, pj) = (proj[i].spatial(), proj[j].spatial());
            let cr = [
                pi[1].conj() * pj[2] - pi[2].conj() * pj[1],
                pi[2].conj() * pj[0] - pi[0].conj() * pj[2],
                pi[0].conj() * pj[1] - pi[1].conj() * pj[0],
            ];
            triple += (cr[0] * r.c[1] + cr[1] * r.c[2] + cr[2] * r.c[3]).norm();
        }
        for mu in 0..3 {
            // (O_μ|A¹|ϱ) = −i a_μ with a_μ real
            let z = o[mu].dot(&a1.apply(&r));
            out[6 + mu] = -z.im;
            imag += z.re.abs();
        }
        out[9] = c0;
        out[10] = imag;
        out[11] = triple;
        out
    };
    let q = integrate_adaptive(integrand, opts)?;
    let v = q.values;
    let t2 = (t as f64) * (t as f64);
    let a = [v[6], v[7], v[8]];
    let mut f = DMatrix::zeros(3, 3);
    for (n, &(i, j)) in PAIRS.iter().enumerate() {
        let x = t2 * (v[n] - a[i] * a[j]);
        f[(i, j)] = x;
        f[(j, i)] = x;
    }
    let labels = param_labels(&Param::ALL);
    Ok(AnalyticQfim {
        f: QfiMatrix::new(
            f,
            labels.clone(),
            t,
            Regime::Asymptotic,
            Symmetry::Symmetric,
        ),
        d: QfiMatrix::new(
            DMatrix::zeros(3, 3),
            labels,
            t,
            Regime::Asymptotic,
            Symmetry::Antisymmetric,
        ),
        state_terms: a,
        norm: v[9],
        imaginary_residue: v[10],
        triple_residue: v[11],
        nodes: q.nodes,
    })
}

/// Asymptotic QFIm for a pure initial walker state.
pub fn qfim_asymptotic(
    p: &CoinParams,
    init: &WalkerState,
    t: u64,
    opts: &QuadratureOptions,
) -> Result<AnalyticQfim> {
    qfim_with_density(p, t, |k| density_vector(&spinor_at(init, k)), opts)
}

/// Asymptotic QFIm for a walker on one site with coin Bloch vector `r⃗`.
///
/// For `‖r⃗‖ < 1` this evaluates the same expression, which is then not the mixed-state QFIm.
pub fn qfim_asymptotic_localized(
    p: &CoinParams,
    r: &CoinBlochState,
    t: u64,
    opts: &QuadratureOptions,
) -> Result<AnalyticQfim> {
    let rv = r.r();
    let rho = Bloch4::real([1.0, rv[0], rv[1], rv[2]]);
    qfim_with_density(p, t, |_| rho, opts)
}

/// State-independent term `∫ dk/2π (O_μ|A¹ₖ|O_ν)` over `(θ, α)`, per `t²`.
pub fn first_term(p: &CoinParams, opts: &QuadratureOptions) -> Result<[[f64; 2]; 2]> {
    let o = [o_vector(p, Param::Theta), o_vector(p, Param::Alpha)];
    let q = integrate_adaptive(
        |k| {
            let a1 = projector_a1(p, k);
            let po = o.map(|v| a1.apply(&v));
            [
                o[0].dot(&po[0]).re,
                o[0].dot(&po[1]).re,
                o[1].dot(&po[1]).re,
            ]
        },
        opts,
    )?;
    let [tt, ta, aa] = q.values;
    Ok([[tt, ta], [ta, aa]])
}

/// Largest attainable diagonal entries `(F_θθ, F_αα)`.
pub fn qfim_max_diag(theta: f64, t: u64) -> (f64, f64) {
    let s = theta.sin();
    let t2 = (t as f64).powi(2);
    (4.0 * t2 * s / (1.0 + s), 4.0 * t2 * (1.0 - s))
}

/// The coin angle with `sin θ = (√5 − 1)/2`, where both maxima coincide.
pub fn golden_theta() -> f64 {
    ((5f64.sqrt() - 1.0) / 2.0).asin()
}

/// Closed-form QFIm over `(θ, φ)` for a walker localized on one site, `φ = α − β`.
///
/// At fixed β, `∂φ/∂α = 1`, so the same matrix is the `(θ, α)` block.
pub fn qfim_localized(theta: f64, phi: f64, r: &CoinBlochState, t: u64) -> QfiMatrix {
    let (s, c) = theta.sin_cos();
    let n = [s * phi.cos(), s * phi.sin(), c];
    let rv = r.r();
    let dot = n[0] * rv[0] + n[1] * rv[1] + n[2] * rv[2];
    let cz = n[0] * rv[1] - n[1] * rv[0];
    let t2 = (t as f64).powi(2);
    let ftt = 4.0 * t2 / (1.0 + s) * (s - cz * cz / (1.0 + s));
    let fpp = 4.0 * t2 * (1.0 - s) * (1.0 - dot * dot / (1.0 + s));
    // (1 − s)/c = c/(1 + s), finite at θ = π/2
    let ftp = -4.0 * t2 * c / (1.0 + s).powi(2) * dot * cz;
    QfiMatrix::new(
        DMatrix::from_row_slice(2, 2, &[ftt, ftp, ftp, fpp]),
        vec!["theta".into(), "phi".into()],
        t,
        Regime::Asymptotic,
        Symmetry::Symmetric,
    )
}

/// Single-parameter QFI at `α = β = 0` for a coin Bloch vector with y-component `r_y`.
pub fn single_param_qfi(theta: f64, r_y: f64, t: u64) -> f64 {
    let s = theta.sin();
    (t as f64).powi(2) * 4.0 * s * (1.0 + s * (1.0 - r_y * r_y)) / (1.0 + s).powi(2)
}

/// The state-independent integrand is real and the θ-α cross term integrates to zero;
/// exposed for diagnostics over a uniform grid.
pub fn first_term_on_grid(p: &CoinParams, n: usize) -> [[f64; 2]; 2] {
    let grid = KGrid::uniform(n);
    let o = [o_vector(p, Param::Theta), o_vector(p, Param::Alpha)];
    let v = grid.integrate(|k| {
        let a1 = projector_a1(p, k);
        [
            o[0].dot(&a1.apply(&o[0])).re,
            o[0].dot(&a1.apply(&o[1])).re,
            o[1].dot(&a1.apply(&o[1])).re,
        ]
    });
    [[v[0], v[1]], [v[1], v[2]]]
}
