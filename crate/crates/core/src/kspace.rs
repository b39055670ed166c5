//! Momentum-space representation of walker states.
//!
//! Convention: `φ(k) = Σ_x e^{−ikx} c_x` and `c_x = ∫ dk/2π e^{ikx} φ(k)`.
//! On a uniform grid of `N` nodes the inverse is exact for any window of at
//! most `N` sites; we require `N ≥ 2·width` as a margin against aliasing.

use nalgebra::Matrix2;

use crate::coin::CoinParams;
use crate::error::{QwfError, Result};
use crate::quadrature::KGrid;
use crate::walk::WalkerState;
use crate::C64;

/// Spinors `φ(k_j)` on a grid, together with the position window they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpinorGrid {
    pub grid: KGrid,
    pub spinors: Vec<[C64; 2]>,
    /// First lattice site of the position-space window.
    pub origin: i64,
    /// Number of sites in the window.
    pub width: usize,
    pub steps_elapsed: u64,
}

impl KSpinorGrid {
    /// `∫ dk/2π ‖φ(k)‖²`.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = 0.0;
        for (s, w) in self.spinors.iter().zip(&self.grid.weights) {
            acc += w * (s[0].norm_sqr() + s[1].norm_sqr());
        }
        acc / (2.0 * std::f64::consts::PI)
    }
}

/// `φ(k)` for a single momentum.
pub fn spinor_at(s: &WalkerState, k: f64) -> [C64; 2] {
    let mut out = [C64::from(0.0); 2];
    let amps = s.amps();
    for (i, x) in s.sites().enumerate() {
        let ph = C64::from_polar(1.0, -k * x as f64);
        out[0] += ph * amps[2 * i];
        out[1] += ph * amps[2 * i + 1];
    }
    out
}

fn check_aliasing(nodes: usize, width: usize) -> Result<()> {
    let required = 2 * width;
    if nodes < required {
        return Err(QwfError::Aliasing {
            nodes,
            width,
            required,
        });
    }
    Ok(())
}

/// Transform onto `n_nodes` uniform momenta.
pub fn to_k_space(s: &WalkerState, n_nodes: usize) -> Result<KSpinorGrid> {
    check_aliasing(n_nodes, s.width())?;
    let grid = KGrid::uniform(n_nodes);
    let spinors = grid.nodes.iter().map(|&k| spinor_at(s, k)).collect();
    Ok(KSpinorGrid {
        grid,
        spinors,
        origin: s.origin(),
        width: s.width(),
        steps_elapsed: s.steps_elapsed(),
    })
}

/// Inverse transform back onto the recorded window.
pub fn from_k_space(g: &KSpinorGrid) -> Result<WalkerState> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut amps = vec![C64::from(0.0); 2 * g.width];
    for i in 0..g.width {
        let x = (g.origin + i as i64) as f64;
        let mut a = [C64::from(0.0); 2];
        for ((k, w), s) in g.grid.nodes.iter().zip(&g.grid.weights).zip(&g.spinors) {
            let ph = C64::from_polar(w / two_pi, k * x);
            a[0] += ph * s[0];
            a[1] += ph * s[1];
        }
        amps[2 * i] = a[0];
        amps[2 * i + 1] = a[1];
    }
    WalkerState::new(g.origin, amps, g.steps_elapsed)
}

/// Apply `u_k^t` at every node; the window grows by `t` sites on each side.
pub fn evolve_k(g: &KSpinorGrid, p: &CoinParams, t: u64) -> Result<KSpinorGrid> {
    let width = g.width + 2 * t as usize;
    check_aliasing(g.grid.len(), width)?;
    let spinors = g
        .grid
        .nodes
        .iter()
        .zip(&g.spinors)
        .map(|(&k, s)| {
            let u = p.u_k(k);
            let mut v = *s;
            for _ in 0..t {
                v = apply(&u, &v);
            }
            v
        })
        .collect();
    Ok(KSpinorGrid {
        grid: g.grid.clone(),
        spinors,
        origin: g.origin - t as i64,
        width,
        steps_elapsed: g.steps_elapsed + t,
    })
}

#[inline]
pub(crate) fn apply(m: &Matrix2<C64>, v: &[C64; 2]) -> [C64; 2] {
    [
        m[(0, 0)] * v[0] + m[(0, 1)] * v[1],
        m[(1, 0)] * v[0] + m[(1, 1)] * v[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{evolve, make_initial, InitialKind};

    #[test]
    fn localized_spinor_is_a_pure_phase() {
        let s = make_initial(&InitialKind::localized_up(3)).unwrap();
        for k in [-2.0, 0.1, 1.7] {
            let phi = spinor_at(&s, k);
            assert!((phi[0] - C64::from_polar(1.0, -3.0 * k)).norm() < 1e-15);
            assert_eq!(phi[1], C64::from(0.0));
        }
    }

    #[test]
    fn entangled_pair_spinor() {
        let s = make_initial(&InitialKind::Entangled { x1: 0, x2: 1 }).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for k in [-3.0, -0.4, 0.0, 2.2] {
            let phi = spinor_at(&s, k);
            assert!((phi[0] - C64::from(h)).norm() < 1e-15);
            assert!((phi[1] - C64::from_polar(h, -k)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_and_k_evolution() {
        let p = CoinParams::new(0.7, 0.3, -1.2).unwrap();
        let s0 = make_initial(&InitialKind::Entangled { x1: -2, x2: 1 }).unwrap();
        let st = evolve(&s0, &p, 32);
        let g = to_k_space(&st, 256).unwrap();
        assert!((g.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(from_k_space(&g).unwrap().max_abs_diff(&st) < 1e-10);

        let g0 = to_k_space(&s0, 256).unwrap();
        let back = from_k_space(&evolve_k(&g0, &p, 32).unwrap()).unwrap();
        assert!(back.max_abs_diff(&st) < 1e-10);
    }

    #[test]
    fn aliasing_is_rejected() {
        let s = make_initial(&InitialKind::Entangled { x1: 0, x2: 5 }).unwrap();
        let e = to_k_space(&s, 8).unwrap_err();
        assert_eq!(
            e,
            QwfError::Aliasing {
                nodes: 8,
                width: 6,
                required: 12
            }
        );
        let g = to_k_space(&s, 16).unwrap();
        assert!(matches!(
            evolve_k(&g, &CoinParams::new(1.0, 0.0, 0.0).unwrap(), 3),
            Err(QwfError::Aliasing { .. })
        ));
    }
}
