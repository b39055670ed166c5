//! Momentum-space quadrature over `[−π, π)`.
//!
//! Integrals are normalized by the measure `dk / 2π`. The adaptive driver
//! uses composite Gauss–Legendre panels and doubles the panel count until two
//! successive estimates agree. Node evaluations run in parallel; the weighted
//! sum is always taken in node order so results are bit-stable.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{QwfError, Result};

/// Abscissae and weights of the n-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A set of momentum nodes with weights summing to 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KGrid {
    /// `n` equispaced nodes `k_j = −π + 2πj/n` (trapezoid / DFT rule).
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1);
        let h = 2.0 * PI / n as f64;
        KGrid {
            nodes: (0..n).map(|j| -PI + h * j as f64).collect(),
            weights: vec![h; n],
        }
    }

    /// `panels` equal Gauss–Legendre panels of the given order.
    pub fn gauss_legendre(panels: usize, order: usize) -> Self {
        assert!(panels >= 1);
        let (x, w) = gauss_legendre(order);
        let half = PI / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = -PI + half * (2 * p + 1) as f64;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        KGrid { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f(k) dk/2π` for a vector-valued integrand.
    pub fn integrate<const M: usize, F>(&self, f: F) -> [f64; M]
    where
        F: Fn(f64) -> [f64; M] + Sync,
    {
        let values: Vec<[f64; M]> = self.nodes.par_iter().map(|&k| f(k)).collect();
        let mut acc = [0.0; M];
        for (v, w) in values.iter().zip(&self.weights) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += w * x;
            }
        }
        acc.iter_mut().for_each(|a| *a /= 2.0 * PI);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Successive estimates must agree to this fraction of the largest component.
    pub rel_tol: f64,
    /// Absolute floor, for integrands whose components all vanish.
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: 16,
            rel_tol: 1e-9,
            abs_tol: 1e-14,
            initial_panels: 4,
            max_panels: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<const M: usize> {
    pub values: [f64; M],
    /// Nodes in the accepted (finest) rule.
    pub nodes: usize,
    /// Largest component change between the last two refinements.
    pub last_change: f64,
}

/// Adaptive `∫_{−π}^{π} f(k) dk/2π` by panel doubling.
pub fn integrate_adaptive<const M: usize, F>(
    f: F,
    opts: &QuadratureOptions,
) -> Result<Quadrature<M>>
where
    F: Fn(f64) -> [f64; M] + Sync,
{
    let mut panels = opts.initial_panels.max(1);
    let mut prev = KGrid::gauss_legendre(panels, opts.order).integrate(&f);
    loop {
        let next_panels = panels * 2;
        if next_panels > opts.max_panels {
            return Err(QwfError::QuadratureNonConvergence {
                change: f64::NAN,
                nodes: panels * opts.order,
            });
        }
        let next = KGrid::gauss_legendre(next_panels, opts.order).integrate(&f);
        let change = max_change(&prev, &next);
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !change.is_finite() || !scale.is_finite() {
            return Err(QwfError::QuadratureNonConvergence {
                change,
                nodes: next_panels * opts.order,
            });
        }
        if change <= opts.rel_tol * scale + opts.abs_tol {
            return Ok(Quadrature {
                values: next,
                nodes: next_panels * opts.order,
                last_change: change,
            });
        }
        if next_panels * 2 > opts.max_panels {
            return Err(QwfError::QuadratureNonConvergence {
                change: if scale > 0.0 { change / scale } else { change },
                nodes: next_panels * opts.order,
            });
        }
        prev = next;
        panels = next_panels;
    }
}

fn max_change<const M: usize>(a: &[f64; M], b: &[f64; M]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
