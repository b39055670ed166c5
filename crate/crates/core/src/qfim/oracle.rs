//! Exact finite-`t` Fisher and Uhlmann matrices from state derivatives.
//!
//! Everything here goes through raw 2×2 coin products; none of the Bloch or
//! closed-form machinery is used, so agreement with the asymptotic route is an
//! independent check.

use nalgebra::{DMatrix, Matrix2};

use crate::coin::{coin_derivative, coin_matrix, CoinAngles, CoinParams, Param};
use crate::error::{QwfError, Result};
use crate::kspace::{apply, spinor_at};
use crate::quadrature::KGrid;
use crate::walk::{evolve_with_coin, WalkerState};
use crate::C64;

use super::{param_labels, QfiMatrix, Regime, Symmetry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMethod {
    /// Per-momentum sum `Σ_m u^{m+1} O_μ u^{−(m+1)} |φ_t⟩`, exact.
    Sum,
    /// Central difference in position space with step `h`.
    FiniteDiff(f64),
    /// Tangent propagation `v ← S(C v + ∂C ψ)` in position space.
    ProductRule,
}

/// Uniform node count that resolves the final window exactly: the next power of
/// two at or above twice its width.
pub fn oracle_nodes(init_width: usize, t: u64) -> usize {
    (2 * (init_width + 2 * t as usize)).next_power_of_two()
}

fn o_matrix(a: &CoinAngles, mu: Param) -> Matrix2<C64> {
    coin_matrix(a.theta, a.alpha, a.beta).adjoint() * coin_derivative(a.theta, a.alpha, a.beta, mu)
}

/// `φ_t(k)` and its three parameter derivatives.
pub fn node_tangents(
    a: &CoinAngles,
    o: &[Matrix2<C64>; 3],
    phi0: [C64; 2],
    k: f64,
    t: u64,
) -> ([C64; 2], [[C64; 2]; 3]) {
    let u = crate::coin::u_k_raw(a, k);
    let zero = [C64::from(0.0); 2];
    let mut y = phi0;
    let mut acc = [zero; 3];
    // acc ← u (acc + O y_j), y_{j+1} = u y_j; after t steps acc = Σ_m u^{m+1} O u^{t−m−1} φ₀
    for _ in 0..t {
        for (mu, v) in acc.iter_mut().enumerate() {
            let oy = apply(&o[mu], &y);
            *v = apply(&u, &[v[0] + oy[0], v[1] + oy[1]]);
        }
        y = apply(&u, &y);
    }
    (y, acc)
}

/// `|∂_μ Ψ(t)⟩` on the final light-cone window.
pub fn derivative_state(
    init: &WalkerState,
    p: &CoinParams,
    t: u64,
    mu: Param,
    method: DerivativeMethod,
) -> Result<WalkerState> {
    let a = p.angles();
    match method {
        DerivativeMethod::Sum => {
            let n = oracle_nodes(init.width(), t);
            let grid = KGrid::uniform(n);
            let o = Param::ALL.map(|m| o_matrix(&a, m));
            let tangents: Vec<[C64; 2]> = grid
                .nodes
                .iter()
                .map(|&k| node_tangents(&a, &o, spinor_at(init, k), k, t).1[mu.index()])
                .collect();
            let origin = init.origin() - t as i64;
            let width = init.width() + 2 * t as usize;
            let mut amps = vec![C64::from(0.0); 2 * width];
            for i in 0..width {
                let x = (origin + i as i64) as f64;
                for (j, &k) in grid.nodes.iter().enumerate() {
                    let ph = C64::from_polar(1.0 / n as f64, k * x);
                    amps[2 * i] += ph * tangents[j][0];
                    amps[2 * i + 1] += ph * tangents[j][1];
                }
            }
            WalkerState::new_unnormalized(origin, amps, init.steps_elapsed() + t)
        }
        DerivativeMethod::FiniteDiff(h) => {
            if !(1e-7..=1e-4).contains(&h) {
                return Err(QwfError::InvalidParams(format!(
                    "finite-difference step {h} outside [1e-7, 1e-4]"
                )));
            }
            let plus = evolve_with_coin(init, &a.shifted(mu, h).matrix(), t);
            let minus = evolve_with_coin(init, &a.shifted(mu, -h).matrix(), t);
            let amps = plus
                .amps()
                .iter()
                .zip(minus.amps())
                .map(|(x, y)| (x - y) / (2.0 * h))
                .collect();
            WalkerState::new_unnormalized(plus.origin(), amps, plus.steps_elapsed())
        }
        DerivativeMethod::ProductRule => {
            let c = a.matrix();
            let dc = a.derivative(mu);
            let mut psi = init.clone();
            let mut v = WalkerState::new_unnormalized(
                init.origin(),
                vec![C64::from(0.0); init.amps().len()],
                init.steps_elapsed(),
            )?;
            for _ in 0..t {
                let from_v = evolve_with_coin(&v, &c, 1);
                let from_psi = evolve_with_coin(&psi, &dc, 1);
                let amps = from_v
                    .amps()
                    .iter()
                    .zip(from_psi.amps())
                    .map(|(x, y)| x + y)
                    .collect();
                v = WalkerState::new_unnormalized(from_v.origin(), amps, from_v.steps_elapsed())?;
                psi = evolve_with_coin(&psi, &c, 1);
            }
            Ok(v)
        }
    }
}

/// Exact matrices at finite `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactQfim {
    /// `4 Re(⟨∂_μΨ|∂_νΨ⟩ − ⟨∂_μΨ|Ψ⟩⟨Ψ|∂_νΨ⟩)` over `(θ, α, β)`.
    pub f: QfiMatrix,
    /// `4 Im(⟨∂_μΨ|∂_νΨ⟩ − ⟨∂_μΨ|Ψ⟩⟨Ψ|∂_νΨ⟩)`.
    pub d: QfiMatrix,
    /// `max_μ |Re ⟨Ψ|∂_μΨ⟩|`, zero by norm conservation.
    pub overlap_real_residue: f64,
    pub nodes: usize,
}

fn assemble(g: [[C64; 3]; 3], b: [C64; 3], t: u64, nodes: usize) -> ExactQfim {
    let mut f = DMatrix::zeros(3, 3);
    let mut d = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let q = g[i][j] - b[i].conj() * b[j];
            f[(i, j)] = 4.0 * q.re;
            d[(i, j)] = 4.0 * q.im;
        }
    }
    // symmetrize away rounding; the diagonal of D is zero by construction
    let fs = (&f + f.transpose()) * 0.5;
    let ds = (&d - d.transpose()) * 0.5;
    let labels = param_labels(&Param::ALL);
    ExactQfim {
        f: QfiMatrix::new(fs, labels.clone(), t, Regime::Exact, Symmetry::Symmetric),
        d: QfiMatrix::new(ds, labels, t, Regime::Exact, Symmetry::Antisymmetric),
        overlap_real_residue: b.iter().fold(0.0f64, |m, z| m.max(z.re.abs())),
        nodes,
    }
}

/// QFIm and Uhlmann curvature by per-momentum exact derivatives.
pub fn qfim_exact(init: &WalkerState, p: &CoinParams, t: u64) -> ExactQfim {
    let a = p.angles();
    let o = Param::ALL.map(|m| o_matrix(&a, m));
    let n = oracle_nodes(init.width(), t);
    let grid = KGrid::uniform(n);
    let v = grid.integrate(|k| {
        let (psi, d) = node_tangents(&a, &o, spinor_at(init, k), k, t);
        let mut out = [0.0; 24];
        let dot = |x: &[C64; 2], y: &[C64; 2]| x[0].conj() * y[0] + x[1].conj() * y[1];
        for i in 0..3 {
            for j in 0..3 {
                let z = dot(&d[i], &d[j]);
                out[2 * (3 * i + j)] = z.re;
                out[2 * (3 * i + j) + 1] = z.im;
            }
            let z = dot(&psi, &d[i]);
            out[18 + 2 * i] = z.re;
            out[18 + 2 * i + 1] = z.im;
        }
        out
    });
    let mut g = [[C64::from(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = C64::new(v[2 * (3 * i + j)], v[2 * (3 * i + j) + 1]);
        }
    }
    let b = [0, 1, 2].map(|i| C64::new(v[18 + 2 * i], v[19 + 2 * i]));
    assemble(g, b, t, n)
}

/// Same quantities from position-space state and derivative vectors.
pub fn qfim_from_derivatives(psi: &WalkerState, d: &[WalkerState; 3]) -> ExactQfim {
    let mut g = [[C64::from(0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = d[i].inner(&d[j]);
        }
    }
    let b = [0, 1, 2].map(|i| psi.inner(&d[i]));
    assemble(g, b, psi.steps_elapsed(), 0)
}

/// Uhlmann curvature alone.
pub fn uhlmann_exact(init: &WalkerState, p: &CoinParams, t: u64) -> QfiMatrix {
    qfim_exact(init, p, t).d
}
