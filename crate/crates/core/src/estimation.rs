//! Position measurements on the evolved walker: sampling, classical Fisher
//! information and maximum-likelihood estimation of `(θ, α)`.
//!
//! The coin is traced out, so the outcome space is the lattice site. `β` is
//! treated as known and fixed by the search grid.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coin::{CoinAngles, CoinParams, Param};
use crate::error::{QwfError, Result};
use crate::qfim::{QfiMatrix, Regime, Symmetry};
use crate::walk::WalkerState;
use crate::C64;

/// Bins with less probability than this are left out of Fisher sums.
pub const MASS_THRESHOLD: f64 = 1e-12;
/// `α` is declared unidentifiable when `I_αα ≤ ALPHA_BLIND_REL · I_θθ`.
pub const ALPHA_BLIND_REL: f64 = 1e-9;
/// A secondary grid maximum within this many log-likelihood units of the best raises the multimodal flag.
pub const MULTIMODAL_GAP: f64 = 10.0;
pub const DEFAULT_GRID: usize = 200;
const NEWTON_MAX: usize = 60;
const HESSIAN_STEP: f64 = 1e-6;

/// `p(x) = Σ_j |c_{x,j}|²` on the state's window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionDistribution {
    pub origin: i64,
    pub probs: Vec<f64>,
}

impl PositionDistribution {
    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.origin;
        if i < 0 || i as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.origin + i as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `½ Σ |p̂(x) − p(x)|` against observed counts.
    pub fn total_variation(&self, counts: &BTreeMap<i64, u64>) -> f64 {
        let n: u64 = counts.values().sum();
        let mut tv: f64 = self
            .iter()
            .map(|(x, p)| (counts.get(&x).copied().unwrap_or(0) as f64 / n as f64 - p).abs())
            .sum();
        tv += counts
            .iter()
            .filter(|(&x, _)| {
                self.prob(x) == 0.0
                    && (x < self.origin || x >= self.origin + self.probs.len() as i64)
            })
            .map(|(_, &c)| c as f64 / n as f64)
            .sum::<f64>();
        tv / 2.0
    }
}

pub fn position_distribution(s: &WalkerState) -> PositionDistribution {
    PositionDistribution {
        origin: s.origin(),
        probs: s
            .amps()
            .chunks(2)
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .collect(),
    }
}

/// Observed position counts together with the ground truth used to score a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub t: u64,
    pub shots: u64,
    pub counts: BTreeMap<i64, u64>,
    pub seed: u64,
    pub stream: u64,
    pub params_true: CoinParams,
}

/// Multinomial draw of `shots` outcomes, on stream 0 of `seed`.
pub fn sample(dist: &PositionDistribution, shots: u64, seed: u64) -> Result<BTreeMap<i64, u64>> {
    sample_stream(dist, shots, seed, 0)
}

/// Multinomial draw as a chain of conditional binomials, in site order.
/// Distinct streams of one seed are independent.
pub fn sample_stream(
    dist: &PositionDistribution,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<BTreeMap<i64, u64>> {
    if shots == 0 {
        return Err(QwfError::InvalidEstimation(
            "shots must be at least 1".into(),
        ));
    }
    if dist.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(QwfError::InvalidEstimation(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total = dist.total();
    if !(total > 0.0) {
        return Err(QwfError::InvalidEstimation(
            "distribution has no mass".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let support: Vec<(i64, f64)> = dist.iter().filter(|(_, p)| *p > 0.0).collect();
    let mut counts = BTreeMap::new();
    let mut remaining = shots;
    let mut mass_left = total;
    for (i, &(x, p)) in support.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if i + 1 == support.len() || p >= mass_left {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability in [0, 1]")
                .sample(&mut rng)
        };
        if k > 0 {
            counts.insert(x, k);
        }
        remaining -= k;
        mass_left -= p;
    }
    Ok(counts)
}

/// Draw a full record from the true model.
pub fn simulate_record(
    init: &WalkerState,
    p: &CoinParams,
    t: u64,
    shots: u64,
    seed: u64,
    stream: u64,
) -> Result<MeasurementRecord> {
    let dist = position_distribution(&crate::walk::evolve(init, p, t));
    Ok(MeasurementRecord {
        t,
        shots,
        counts: sample_stream(&dist, shots, seed, stream)?,
        seed,
        stream,
        params_true: *p,
    })
}

fn apply_shift(
    src: &[C64],
    dst: &mut Vec<C64>,
    m: &Matrix2<C64>,
    extra: Option<(&[C64], &Matrix2<C64>)>,
) {
    dst.clear();
    dst.resize(src.len() + 4, C64::from(0.0));
    for i in 0..src.len() / 2 {
        let (a, b) = (src[2 * i], src[2 * i + 1]);
        let mut up = m[(0, 0)] * a + m[(0, 1)] * b;
        let mut down = m[(1, 0)] * a + m[(1, 1)] * b;
        if let Some((psi, dm)) = extra {
            let (c, d) = (psi[2 * i], psi[2 * i + 1]);
            up += dm[(0, 0)] * c + dm[(0, 1)] * d;
            down += dm[(1, 0)] * c + dm[(1, 1)] * d;
        }
        dst[2 * (i + 2)] = up;
        dst[2 * i + 1] = down;
    }
}

/// Final amplitudes and their `θ`, `α` tangents, by the product rule.
fn propagate(init: &WalkerState, a: &CoinAngles, t: u64) -> (Vec<C64>, [Vec<C64>; 2]) {
    let c = a.matrix();
    let dc = [a.derivative(Param::Theta), a.derivative(Param::Alpha)];
    let mut psi = init.amps().to_vec();
    let mut v = [
        vec![C64::from(0.0); psi.len()],
        vec![C64::from(0.0); psi.len()],
    ];
    let mut next = Vec::new();
    for _ in 0..t {
        for (mu, vm) in v.iter_mut().enumerate() {
            apply_shift(vm, &mut next, &c, Some((&psi, &dc[mu])));
            std::mem::swap(vm, &mut next);
        }
        apply_shift(&psi, &mut next, &c, None);
        std::mem::swap(&mut psi, &mut next);
    }
    (psi, v)
}

fn probabilities(init: &WalkerState, a: &CoinAngles, t: u64) -> Vec<f64> {
    let c = a.matrix();
    let mut psi = init.amps().to_vec();
    let mut next = Vec::new();
    for _ in 0..t {
        apply_shift(&psi, &mut next, &c, None);
        std::mem::swap(&mut psi, &mut next);
    }
    psi.chunks(2)
        .map(|z| z[0].norm_sqr() + z[1].norm_sqr())
        .collect()
}

/// `p(x)` and `∂_θ p`, `∂_α p` on the final window.
fn probabilities_with_gradient(
    init: &WalkerState,
    a: &CoinAngles,
    t: u64,
) -> (Vec<f64>, [Vec<f64>; 2]) {
    let (psi, v) = propagate(init, a, t);
    let p = psi
        .chunks(2)
        .map(|z| z[0].norm_sqr() + z[1].norm_sqr())
        .collect();
    let grad = |d: &[C64]| -> Vec<f64> {
        psi.chunks(2)
            .zip(d.chunks(2))
            .map(|(z, w)| 2.0 * (z[0].conj() * w[0] + z[1].conj() * w[1]).re)
            .collect()
    };
    (p, [grad(&v[0]), grad(&v[1])])
}

/// Classical Fisher information of the position outcome, over `(θ, α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalFi {
    pub matrix: QfiMatrix,
    /// Probability carried by the bins dropped under [`MASS_THRESHOLD`].
    pub excluded_mass: f64,
}

pub fn classical_fi(p: &CoinParams, init: &WalkerState, t: u64) -> ClassicalFi {
    let (probs, grad) = probabilities_with_gradient(init, &p.angles(), t);
    let mut m = [[0.0; 2]; 2];
    let mut excluded_mass = 0.0;
    for (x, &px) in probs.iter().enumerate() {
        if px < MASS_THRESHOLD {
            excluded_mass += px;
            continue;
        }
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += grad[i][x] * grad[j][x] / px;
            }
        }
    }
    ClassicalFi {
        matrix: QfiMatrix::new(
            DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]),
            vec!["theta".into(), "alpha".into()],
            t,
            Regime::Exact,
            Symmetry::Symmetric,
        ),
        excluded_mass,
    }
}

/// Prior box searched by the estimator, with the known `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub theta: (f64, f64),
    pub alpha: (f64, f64),
    pub n_theta: usize,
    pub n_alpha: usize,
    pub beta: f64,
}

impl SearchGrid {
    pub fn new(theta: (f64, f64), alpha: (f64, f64), beta: f64) -> Self {
        SearchGrid {
            theta,
            alpha,
            n_theta: DEFAULT_GRID,
            n_alpha: DEFAULT_GRID,
            beta,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.theta) || !ok(self.alpha) || !self.beta.is_finite() {
            return Err(QwfError::InvalidEstimation(
                "search box bounds must be finite with lo < hi".into(),
            ));
        }
        if self.n_theta < 3 || self.n_alpha < 1 {
            return Err(QwfError::InvalidEstimation(
                "need at least 3 theta cells and 1 alpha cell".into(),
            ));
        }
        // the coin degenerates where sin θ vanishes
        CoinParams::new(self.theta.0, 0.0, 0.0)?;
        CoinParams::new(self.theta.1, 0.0, 0.0)?;
        Ok(())
    }

    pub fn theta_at(&self, i: usize) -> f64 {
        self.theta.0 + (i as f64 + 0.5) * (self.theta.1 - self.theta.0) / self.n_theta as f64
    }

    pub fn alpha_at(&self, j: usize) -> f64 {
        self.alpha.0 + (j as f64 + 0.5) * (self.alpha.1 - self.alpha.0) / self.n_alpha as f64
    }

    pub fn theta_spacing(&self) -> f64 {
        (self.theta.1 - self.theta.0) / self.n_theta as f64
    }

    pub fn alpha_spacing(&self) -> f64 {
        (self.alpha.1 - self.alpha.0) / self.n_alpha as f64
    }
}

/// Outcome of [`LikelihoodModel::fit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleFit {
    pub theta: f64,
    /// `None` when the position marginal is blind to `α`.
    pub alpha: Option<f64>,
    pub labels: Vec<String>,
    /// Negative Hessian of the total log-likelihood at the optimum.
    pub observed_information: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub grid_theta: f64,
    pub grid_alpha: f64,
    pub iterations: usize,
    pub multimodal: bool,
    pub warnings: Vec<String>,
}

/// Precomputed `log p(x | θ_i, α_j)` over a search grid.
#[derive(Debug, Clone)]
pub struct LikelihoodModel {
    init: WalkerState,
    t: u64,
    grid: SearchGrid,
    origin: i64,
    width: usize,
    /// row-major over (θ index, α index), each row a full window of log-probabilities
    log_p: Vec<f64>,
}

fn angles(theta: f64, alpha: f64, beta: f64) -> CoinAngles {
    CoinAngles::new(theta, alpha, beta)
}

impl LikelihoodModel {
    pub fn new(init: &WalkerState, t: u64, grid: SearchGrid) -> Result<Self> {
        grid.validate()?;
        let width = init.width() + 2 * t as usize;
        let cells: Vec<(usize, usize)> = (0..grid.n_theta)
            .flat_map(|i| (0..grid.n_alpha).map(move |j| (i, j)))
            .collect();
        let rows: Vec<Vec<f64>> = cells
            .par_iter()
            .map(|&(i, j)| {
                probabilities(
                    init,
                    &angles(grid.theta_at(i), grid.alpha_at(j), grid.beta),
                    t,
                )
                .into_iter()
                .map(|p| p.ln())
                .collect()
            })
            .collect();
        Ok(LikelihoodModel {
            init: init.clone(),
            t,
            grid,
            origin: init.origin() - t as i64,
            width,
            log_p: rows.concat(),
        })
    }

    pub fn grid(&self) -> &SearchGrid {
        &self.grid
    }

    fn cell_log_likelihood(&self, i: usize, j: usize, obs: &[(usize, f64)]) -> f64 {
        let row = &self.log_p[(i * self.grid.n_alpha + j) * self.width..][..self.width];
        obs.iter().map(|&(x, n)| n * row[x]).sum()
    }

    fn observations(&self, weights: &BTreeMap<i64, f64>) -> Result<Vec<(usize, f64)>> {
        let mut obs = Vec::new();
        for (&x, &n) in weights {
            if !(n.is_finite() && n >= 0.0) {
                return Err(QwfError::InvalidEstimation(format!(
                    "count at site {x} is not a nonnegative number"
                )));
            }
            if n == 0.0 {
                continue;
            }
            let i = x - self.origin;
            if i < 0 || i as usize >= self.width {
                return Err(QwfError::InvalidEstimation(format!(
                    "count at site {x} lies outside the light cone [{}, {}]",
                    self.origin,
                    self.origin + self.width as i64 - 1
                )));
            }
            obs.push((i as usize, n));
        }
        if obs.is_empty() {
            return Err(QwfError::InvalidEstimation("no counts".into()));
        }
        Ok(obs)
    }

    /// Log-likelihood, score and per-unit-weight Fisher information at `(θ, α)`.
    fn evaluate(
        &self,
        theta: f64,
        alpha: f64,
        obs: &[(usize, f64)],
    ) -> (f64, Vector2<f64>, Matrix2<f64>) {
        let (p, grad) =
            probabilities_with_gradient(&self.init, &angles(theta, alpha, self.grid.beta), self.t);
        let mut ll = 0.0;
        let mut score = Vector2::zeros();
        for &(x, n) in obs {
            ll += n * p[x].ln();
            score += Vector2::new(grad[0][x], grad[1][x]) * (n / p[x]);
        }
        let mut info = Matrix2::zeros();
        for x in 0..p.len() {
            if p[x] >= MASS_THRESHOLD {
                let g = Vector2::new(grad[0][x], grad[1][x]);
                info += g * g.transpose() / p[x];
            }
        }
        (ll, score, info)
    }

    /// Negative Hessian of the log-likelihood by central differences of the exact score.
    fn observed_information(&self, theta: f64, alpha: f64, obs: &[(usize, f64)]) -> Matrix2<f64> {
        let h = HESSIAN_STEP;
        let d_theta = (self.evaluate(theta + h, alpha, obs).1
            - self.evaluate(theta - h, alpha, obs).1)
            / (2.0 * h);
        let d_alpha = (self.evaluate(theta, alpha + h, obs).1
            - self.evaluate(theta, alpha - h, obs).1)
            / (2.0 * h);
        let m = -Matrix2::from_columns(&[d_theta, d_alpha]);
        (m + m.transpose()) / 2.0
    }

    pub fn fit(&self, rec: &MeasurementRecord) -> Result<MleFit> {
        if rec.t != self.t {
            return Err(QwfError::InvalidEstimation(format!(
                "record has t = {}, model has t = {}",
                rec.t, self.t
            )));
        }
        let total: u64 = rec.counts.values().sum();
        if total != rec.shots {
            return Err(QwfError::InvalidEstimation(format!(
                "counts sum to {total}, record claims {} shots",
                rec.shots
            )));
        }
        self.fit_weights(&rec.counts.iter().map(|(&x, &n)| (x, n as f64)).collect())
    }

    /// Maximize `Σ_x n_x log p(x)` for arbitrary nonnegative weights `n_x`.
    pub fn fit_weights(&self, weights: &BTreeMap<i64, f64>) -> Result<MleFit> {
        let obs = self.observations(weights)?;
        let g = &self.grid;
        let ll: Vec<f64> = (0..g.n_theta * g.n_alpha)
            .into_par_iter()
            .map(|c| self.cell_log_likelihood(c / g.n_alpha, c % g.n_alpha, &obs))
            .collect();
        let best = (0..ll.len())
            .filter(|&c| !ll[c].is_nan())
            .max_by(|&a, &b| ll[a].total_cmp(&ll[b]).then(b.cmp(&a)))
            .ok_or_else(|| {
                QwfError::InvalidEstimation("likelihood is undefined on the whole grid".into())
            })?;
        if ll[best] == f64::NEG_INFINITY {
            return Err(QwfError::InvalidEstimation(
                "every grid cell assigns zero probability to an observed site".into(),
            ));
        }
        let (bi, bj) = (best / g.n_alpha, best % g.n_alpha);
        let (theta0, alpha0) = (g.theta_at(bi), g.alpha_at(bj));
        let (_, _, info0) = self.evaluate(theta0, alpha0, &obs);
        let alpha_identifiable = info0[(1, 1)] > ALPHA_BLIND_REL * info0[(0, 0)];

        let mut warnings = Vec::new();
        let profile_theta: Vec<f64> = (0..g.n_theta)
            .map(|i| {
                (0..g.n_alpha)
                    .map(|j| ll[i * g.n_alpha + j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut secondary =
            secondary_maximum(&profile_theta, bi).map(|(i, gap)| (g.theta_at(i), gap));
        if alpha_identifiable && g.n_alpha >= 3 {
            let profile_alpha: Vec<f64> = (0..g.n_alpha)
                .map(|j| {
                    (0..g.n_theta)
                        .map(|i| ll[i * g.n_alpha + j])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            if let Some((j, gap)) = secondary_maximum(&profile_alpha, bj) {
                if secondary.is_none_or(|(_, g0)| gap < g0) {
                    secondary = Some((theta0, gap));
                }
                warnings.push(format!(
                    "secondary alpha maximum at {} ({gap:.3} below the best)",
                    g.alpha_at(j)
                ));
            }
        }
        if let Some((theta, gap)) = secondary {
            warnings.push(format!(
                "secondary theta maximum at {theta} ({gap:.3} below the best)"
            ));
        }
        if !alpha_identifiable {
            warnings
                .push("position distribution is insensitive to alpha; fitting theta only".into());
        }

        let (theta, alpha, iterations) = self.newton(theta0, alpha0, alpha_identifiable, &obs)?;
        let (log_likelihood, _, _) = self.evaluate(theta, alpha, &obs);
        let obs_info = self.observed_information(theta, alpha, &obs);
        let (labels, observed_information, covariance) = if alpha_identifiable {
            let cov = obs_info
                .try_inverse()
                .unwrap_or_else(|| Matrix2::from_element(f64::NAN));
            (
                vec!["theta".to_string(), "alpha".to_string()],
                vec![
                    vec![obs_info[(0, 0)], obs_info[(0, 1)]],
                    vec![obs_info[(1, 0)], obs_info[(1, 1)]],
                ],
                vec![
                    vec![cov[(0, 0)], cov[(0, 1)]],
                    vec![cov[(1, 0)], cov[(1, 1)]],
                ],
            )
        } else {
            (
                vec!["theta".to_string()],
                vec![vec![obs_info[(0, 0)]]],
                vec![vec![1.0 / obs_info[(0, 0)]]],
            )
        };
        Ok(MleFit {
            theta,
            alpha: alpha_identifiable.then_some(alpha),
            labels,
            observed_information,
            covariance,
            log_likelihood,
            grid_theta: theta0,
            grid_alpha: alpha0,
            iterations,
            multimodal: secondary.is_some(),
            warnings,
        })
    }

    /// Damped Newton from the grid optimum; falls back to Fisher scoring where
    /// the observed information is not positive definite.
    fn newton(
        &self,
        theta0: f64,
        alpha0: f64,
        both: bool,
        obs: &[(usize, f64)],
    ) -> Result<(f64, f64, usize)> {
        let weight: f64 = obs.iter().map(|o| o.1).sum();
        let (mut theta, mut alpha) = (theta0, alpha0);
        let (mut ll, mut score, mut info) = self.evaluate(theta, alpha, obs);
        for it in 1..=NEWTON_MAX {
            let mut h = self.observed_information(theta, alpha, obs);
            let expected = info * weight;
            let step = if both {
                if h[(0, 0)] <= 0.0 || h.determinant() <= 0.0 {
                    h = expected;
                }
                h.try_inverse()
                    .map(|inv| inv * score)
                    .unwrap_or_else(Vector2::zeros)
            } else {
                let d = if h[(0, 0)] > 0.0 {
                    h[(0, 0)]
                } else {
                    expected[(0, 0)]
                };
                Vector2::new(if d > 0.0 { score[0] / d } else { 0.0 }, 0.0)
            };
            let mut lambda = 1.0;
            loop {
                let (nt, na) = (theta + lambda * step[0], alpha + lambda * step[1]);
                let (nll, nscore, ninfo) = self.evaluate(nt, na, obs);
                if nll >= ll - 1e-12 * ll.abs() || lambda < 1e-6 {
                    let moved = (nt - theta).abs().max((na - alpha).abs());
                    theta = nt;
                    alpha = na;
                    ll = nll;
                    score = nscore;
                    info = ninfo;
                    if moved <= 1e-13 * (1.0 + theta.abs()) {
                        return Ok((theta, alpha, it));
                    }
                    break;
                }
                lambda /= 2.0;
            }
        }
        let residual = if both { score.norm() } else { score[0].abs() };
        // the score is tiny relative to the curvature: converged to machine precision
        if residual <= 1e-8 * (1.0 + weight.sqrt()) {
            return Ok((theta, alpha, NEWTON_MAX));
        }
        Err(QwfError::NoConvergence {
            iterations: NEWTON_MAX,
            residual,
        })
    }
}

/// Highest local maximum of a 1-D profile other than `best`, with its gap.
fn secondary_maximum(profile: &[f64], best: usize) -> Option<(usize, f64)> {
    let n = profile.len();
    let top = profile[best];
    (0..n)
        .filter(|&i| i.abs_diff(best) > 1)
        .filter(|&i| {
            let left = if i > 0 {
                profile[i - 1]
            } else {
                f64::NEG_INFINITY
            };
            let right = if i + 1 < n {
                profile[i + 1]
            } else {
                f64::NEG_INFINITY
            };
            profile[i] > left && profile[i] > right
        })
        // a boundary cell of a monotone profile is not a mode
        .filter(|&i| i != 0 && i != n - 1)
        .map(|i| (i, top - profile[i]))
        .filter(|&(_, gap)| gap <= MULTIMODAL_GAP)
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Convenience wrapper: build the grid model and fit one record.
pub fn mle_fit(rec: &MeasurementRecord, init: &WalkerState, grid: SearchGrid) -> Result<MleFit> {
    LikelihoodModel::new(init, rec.t, grid)?.fit(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfim::oracle::{derivative_state, qfim_exact, DerivativeMethod};
    use crate::walk::{evolve, make_initial, InitialKind};
    use std::f64::consts::PI;

    fn entangled() -> WalkerState {
        make_initial(&InitialKind::Entangled { x1: 0, x2: 1 }).unwrap()
    }

    #[test]
    fn one_step_distribution() {
        let th: f64 = 0.7;
        let p = CoinParams::new(th, 0.3, -0.2).unwrap();
        let d = position_distribution(&evolve(
            &make_initial(&InitialKind::localized_up(0)).unwrap(),
            &p,
            1,
        ));
        assert!((d.prob(1) - th.cos().powi(2)).abs() < 1e-15);
        assert!((d.prob(-1) - th.sin().powi(2)).abs() < 1e-15);
        assert_eq!(d.prob(0), 0.0);
        let fi = classical_fi(&p, &make_initial(&InitialKind::localized_up(0)).unwrap(), 1);
        assert!((fi.matrix.get("theta", "theta") - 4.0).abs() < 1e-12);
        assert!(fi.matrix.get("alpha", "alpha").abs() < 1e-12);
    }

    #[test]
    fn long_walk_normalized() {
        let p = CoinParams::new(PI / 4.0, 0.0, 0.0).unwrap();
        let d = position_distribution(&evolve(
            &make_initial(&InitialKind::localized_up(0)).unwrap(),
            &p,
            500,
        ));
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!(d.probs.iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn gradients_match_oracle_derivative_states() {
        let p = CoinParams::new(0.9, 0.4, 1.1).unwrap();
        let init = make_initial(&InitialKind::Gamma { gamma: 0.3 }).unwrap();
        let t = 17;
        let psi = evolve(&init, &p, t);
        let (probs, grad) = probabilities_with_gradient(&init, &p.angles(), t);
        for (mu, param) in [Param::Theta, Param::Alpha].into_iter().enumerate() {
            let d = derivative_state(&init, &p, t, param, DerivativeMethod::Sum).unwrap();
            for (i, x) in psi.sites().enumerate() {
                let dp: f64 = (0..2)
                    .map(|j| 2.0 * (psi.amplitude(x, j).conj() * d.amplitude(x, j)).re)
                    .sum();
                assert!((dp - grad[mu][i]).abs() < 1e-11);
            }
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        let d = PositionDistribution {
            origin: 0,
            probs: vec![0.5, 0.5],
        };
        assert_eq!(sample(&d, 1000, 3).unwrap(), sample(&d, 1000, 3).unwrap());
        assert_ne!(
            sample_stream(&d, 1000, 3, 0).unwrap(),
            sample_stream(&d, 1000, 3, 1).unwrap()
        );
        let c = sample(&d, 1_000_000, 11).unwrap();
        let sigma = (1e6f64 * 0.25).sqrt();
        for x in 0..2 {
            assert!((c[&x] as f64 - 5e5).abs() <= 5.0 * sigma);
        }
        assert_eq!(c.values().sum::<u64>(), 1_000_000);
        assert!(sample(&d, 0, 1).is_err());
    }

    #[test]
    fn empirical_distribution_converges() {
        let p = CoinParams::new(PI / 4.0, 0.0, 0.0).unwrap();
        let d = position_distribution(&evolve(&entangled(), &p, 20));
        let tv: Vec<f64> = [1_000u64, 100_000, 10_000_000]
            .iter()
            .map(|&n| d.total_variation(&sample(&d, n, 5).unwrap()))
            .collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2] && tv[2] < 5e-3);
    }

    #[test]
    fn classical_below_quantum() {
        let p = CoinParams::new(PI / 4.0, 0.2, 0.0).unwrap();
        let init = entangled();
        let t = 30;
        let i = classical_fi(&p, &init, t).matrix;
        let f = qfim_exact(&init, &p, t).f.identifiable();
        let diff = QfiMatrix {
            entries: &f.entries - &i.entries,
            ..f.clone()
        };
        assert!(diff.min_eigenvalue() >= -1e-8);
        assert!(i.symmetry_residual() < 1e-12 && i.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn noiseless_fit_recovers_truth() {
        let p = CoinParams::new(0.8, 0.5, 0.0).unwrap();
        let init = make_initial(&InitialKind::Gamma { gamma: 0.4 }).unwrap();
        let t = 12;
        let grid = SearchGrid {
            n_theta: 40,
            n_alpha: 40,
            ..SearchGrid::new((0.5, 1.2), (0.0, 1.0), 0.0)
        };
        let model = LikelihoodModel::new(&init, t, grid).unwrap();
        let d = position_distribution(&evolve(&init, &p, t));
        let w: BTreeMap<i64, f64> = d.iter().map(|(x, q)| (x, q * 1e6)).collect();
        let fit = model.fit_weights(&w).unwrap();
        assert!((fit.theta - 0.8).abs() < 1e-8, "{fit:?}");
        if let Some(a) = fit.alpha {
            assert!((a - 0.5).abs() < 1e-8, "{fit:?}");
        }
        assert!((fit.grid_theta - 0.8).abs() <= grid.theta_spacing());
    }

    #[test]
    fn record_validation() {
        let p = CoinParams::new(PI / 4.0, 0.0, 0.0).unwrap();
        let init = entangled();
        let mut rec = simulate_record(&init, &p, 5, 1000, 1, 0).unwrap();
        let grid = SearchGrid {
            n_theta: 10,
            n_alpha: 4,
            ..SearchGrid::new((0.3, 1.2), (-0.5, 0.5), 0.0)
        };
        let model = LikelihoodModel::new(&init, 5, grid).unwrap();
        assert!(model.fit(&rec).is_ok());
        rec.counts.insert(100, 1);
        rec.shots += 1;
        assert!(matches!(
            model.fit(&rec),
            Err(QwfError::InvalidEstimation(_))
        ));
        rec.shots += 1;
        assert!(matches!(
            model.fit(&rec),
            Err(QwfError::InvalidEstimation(_))
        ));
        assert!(
            LikelihoodModel::new(&init, 5, SearchGrid::new((0.0, 1.0), (0.0, 1.0), 0.0)).is_err()
        );
    }

    #[test]
    fn secondary_maximum_detection() {
        let prof = [0.0, 1.0, 5.0, 1.0, 0.0, 3.0, 0.0];
        assert_eq!(secondary_maximum(&prof, 2), Some((5, 2.0)));
        let prof = [0.0, 1.0, 5.0, 1.0, 0.0, -30.0, -40.0];
        assert_eq!(secondary_maximum(&prof, 2), None);
    }
}
