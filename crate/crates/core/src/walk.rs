//! Position-space walker states, the shift-coin step, and the standard initial states.
//!
//! Amplitudes are stored densely over the light cone, two per site
//! (`amps[2 i + j]` is coin component `j` at site `origin + i`). Every step
//! grows the window by one site on each side.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coin::CoinParams;
use crate::error::{QwfError, Result};
use crate::C64;

/// Tolerance on `‖ψ‖² = 1` for states handed to the library.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    origin: i64,
    amps: Vec<C64>,
    steps_elapsed: u64,
}

impl WalkerState {
    /// Build a state from interleaved amplitudes; the norm must be 1 within [`NORM_TOL`].
    pub fn new(origin: i64, amps: Vec<C64>, steps_elapsed: u64) -> Result<Self> {
        let s = Self::new_unnormalized(origin, amps, steps_elapsed)?;
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QwfError::InvalidState(format!(
                "squared norm is {n}, expected 1"
            )));
        }
        Ok(s)
    }

    /// Shape checks only; used for derivative (tangent) states which are not normalized.
    pub(crate) fn new_unnormalized(
        origin: i64,
        amps: Vec<C64>,
        steps_elapsed: u64,
    ) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_multiple_of(2) {
            return Err(QwfError::InvalidState(format!(
                "amplitude array must hold two entries per site, got {}",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QwfError::InvalidState("non-finite amplitude".into()));
        }
        Ok(WalkerState {
            origin,
            amps,
            steps_elapsed,
        })
    }

    /// Scale an arbitrary nonzero amplitude array to unit norm.
    pub fn normalized(origin: i64, mut amps: Vec<C64>) -> Result<Self> {
        let n: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QwfError::InvalidState("state is not normalizable".into()));
        }
        let inv = 1.0 / n.sqrt();
        amps.iter_mut().for_each(|z| *z *= inv);
        Self::new(origin, amps, 0)
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn steps_elapsed(&self) -> u64 {
        self.steps_elapsed
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Number of stored sites.
    pub fn width(&self) -> usize {
        self.amps.len() / 2
    }

    /// Last stored site (inclusive).
    pub fn end(&self) -> i64 {
        self.origin + self.width() as i64 - 1
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        self.origin..=self.end()
    }

    /// Amplitude `c_{x,j}`; zero outside the stored window.
    pub fn amplitude(&self, x: i64, coin: usize) -> C64 {
        assert!(coin < 2, "coin index must be 0 or 1");
        if x < self.origin || x > self.end() {
            return C64::from(0.0);
        }
        self.amps[2 * (x - self.origin) as usize + coin]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Smallest interval `[lo, hi]` carrying nonzero amplitude.
    pub fn support(&self) -> Option<(i64, i64)> {
        let occupied =
            |i: usize| self.amps[2 * i] != C64::from(0.0) || self.amps[2 * i + 1] != C64::from(0.0);
        let first = (0..self.width()).find(|&i| occupied(i))?;
        let last = (0..self.width()).rev().find(|&i| occupied(i))?;
        Some((self.origin + first as i64, self.origin + last as i64))
    }

    pub fn support_width(&self) -> usize {
        self.support().map_or(0, |(lo, hi)| (hi - lo + 1) as usize)
    }

    /// `⟨self|other⟩` over the union of both windows.
    pub fn inner(&self, other: &WalkerState) -> C64 {
        let lo = self.origin.max(other.origin);
        let hi = self.end().min(other.end());
        let mut acc = C64::from(0.0);
        for x in lo..=hi {
            for j in 0..2 {
                acc += self.amplitude(x, j).conj() * other.amplitude(x, j);
            }
        }
        acc
    }

    /// Largest amplitude difference over the union of both windows.
    pub fn max_abs_diff(&self, other: &WalkerState) -> f64 {
        let lo = self.origin.min(other.origin);
        let hi = self.end().max(other.end());
        let mut m: f64 = 0.0;
        for x in lo..=hi {
            for j in 0..2 {
                m = m.max((self.amplitude(x, j) - other.amplitude(x, j)).norm());
            }
        }
        m
    }
}

/// One application of `S (1 ⊗ C)` from `src` (n sites) into `dst` (n + 2 sites).
/// Coin component 0 moves to `x + 1`, component 1 to `x − 1`.
#[inline]
fn shift_coin_into(src: &[C64], dst: &mut [C64], coin: &Matrix2<C64>) {
    let n = src.len() / 2;
    debug_assert_eq!(dst.len(), 2 * (n + 2));
    dst.iter_mut().for_each(|z| *z = C64::from(0.0));
    let (c00, c01, c10, c11) = (coin[(0, 0)], coin[(0, 1)], coin[(1, 0)], coin[(1, 1)]);
    for i in 0..n {
        let a = src[2 * i];
        let b = src[2 * i + 1];
        dst[2 * (i + 2)] = c00 * a + c01 * b;
        dst[2 * i + 1] = c10 * a + c11 * b;
    }
}

/// Evolve by `t` steps with an arbitrary 2×2 coin (no validation of the coin).
pub fn evolve_with_coin(init: &WalkerState, coin: &Matrix2<C64>, t: u64) -> WalkerState {
    let n0 = init.width();
    let final_width = n0 + 2 * t as usize;
    let mut cur = Vec::with_capacity(2 * final_width);
    cur.extend_from_slice(&init.amps);
    let mut next = Vec::with_capacity(2 * final_width);
    for _ in 0..t {
        next.resize(cur.len() + 4, C64::from(0.0));
        shift_coin_into(&cur, &mut next, coin);
        std::mem::swap(&mut cur, &mut next);
    }
    WalkerState {
        origin: init.origin - t as i64,
        amps: cur,
        steps_elapsed: init.steps_elapsed + t,
    }
}

pub fn step(s: &WalkerState, p: &CoinParams) -> WalkerState {
    evolve(s, p, 1)
}

/// `U^t |ψ⟩` with `U = S (1 ⊗ C)`.
pub fn evolve(init: &WalkerState, p: &CoinParams, t: u64) -> WalkerState {
    evolve_with_coin(init, &p.coin(), t)
}

/// Coin-only initial condition expressed as a Bloch vector `r⃗` (`‖r⃗‖ ≤ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinBlochState {
    r: [f64; 3],
}

impl CoinBlochState {
    pub fn new(r: [f64; 3]) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(QwfError::InvalidState("Bloch vector must be finite".into()));
        }
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if n > 1.0 + 1e-12 {
            return Err(QwfError::InvalidState(format!(
                "Bloch vector norm {n} exceeds 1"
            )));
        }
        Ok(CoinBlochState { r })
    }

    /// `r⃗ = (cos γ, sin γ, 0)`.
    pub fn from_gamma(gamma: f64) -> Self {
        CoinBlochState {
            r: [gamma.cos(), gamma.sin(), 0.0],
        }
    }

    pub fn from_spinor(chi: [C64; 2]) -> Result<Self> {
        let n = chi[0].norm_sqr() + chi[1].norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QwfError::InvalidState(
                "coin spinor is not normalizable".into(),
            ));
        }
        let ab = chi[0] * chi[1].conj();
        Ok(CoinBlochState {
            r: [
                2.0 * ab.re / n,
                -2.0 * ab.im / n,
                (chi[0].norm_sqr() - chi[1].norm_sqr()) / n,
            ],
        })
    }

    pub fn r(&self) -> [f64; 3] {
        self.r
    }

    pub fn norm(&self) -> f64 {
        self.r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    /// Pure-state spinor with this Bloch vector (up to phase).
    pub fn to_spinor(&self) -> Result<[C64; 2]> {
        if !self.is_pure() {
            return Err(QwfError::InvalidState(format!(
                "Bloch vector of norm {} is a mixed coin state and has no spinor",
                self.norm()
            )));
        }
        let [x, y, z] = self.r;
        let polar = z.clamp(-1.0, 1.0).acos();
        let azimuth = y.atan2(x);
        let (s, c) = (polar / 2.0).sin_cos();
        Ok([C64::from(c), C64::from_polar(s, azimuth)])
    }
}

/// Coin part of a localized initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinInit {
    Spinor([C64; 2]),
    Bloch(CoinBlochState),
}

impl CoinInit {
    pub fn spinor(&self) -> Result<[C64; 2]> {
        let chi = match self {
            CoinInit::Spinor(chi) => *chi,
            CoinInit::Bloch(b) => b.to_spinor()?,
        };
        let n = (chi[0].norm_sqr() + chi[1].norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QwfError::InvalidState(
                "coin spinor is not normalizable".into(),
            ));
        }
        Ok([chi[0] / n, chi[1] / n])
    }
}

/// The initial-state families used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialKind {
    /// `|x₀⟩ ⊗ |χ⟩`.
    Localized { x0: i64, coin: CoinInit },
    /// `(|x₁, 0⟩ + |x₂, 1⟩)/√2`.
    Entangled { x1: i64, x2: i64 },
    /// `|0⟩ ⊗ |γ⟩` with coin Bloch vector `(cos γ, sin γ, 0)`.
    Gamma { gamma: f64 },
}

impl InitialKind {
    pub fn localized_up(x0: i64) -> Self {
        InitialKind::Localized {
            x0,
            coin: CoinInit::Spinor([C64::from(1.0), C64::from(0.0)]),
        }
    }

    /// Non-fatal remarks about the requested state.
    pub fn warnings(&self) -> Vec<String> {
        match *self {
            InitialKind::Entangled { x1, x2 } if (x1 - x2).rem_euclid(2) == 0 => vec![format!(
                "entangled initial state with even separation |{x1} - {x2}|; \
                 the state-dependent Fisher terms are not guaranteed to vanish"
            )],
            _ => Vec::new(),
        }
    }
}

pub fn make_initial(kind: &InitialKind) -> Result<WalkerState> {
    match *kind {
        InitialKind::Localized { x0, coin } => {
            let chi = coin.spinor()?;
            WalkerState::new(x0, vec![chi[0], chi[1]], 0)
        }
        InitialKind::Gamma { gamma } => {
            if !gamma.is_finite() {
                return Err(QwfError::InvalidState("gamma must be finite".into()));
            }
            let chi = [
                C64::from(FRAC_1_SQRT_2),
                C64::from_polar(FRAC_1_SQRT_2, gamma),
            ];
            WalkerState::new(0, vec![chi[0], chi[1]], 0)
        }
        InitialKind::Entangled { x1, x2 } => {
            let lo = x1.min(x2);
            let width = (x1 - x2).unsigned_abs() as usize + 1;
            let mut amps = vec![C64::from(0.0); 2 * width];
            amps[2 * (x1 - lo) as usize] += C64::from(FRAC_1_SQRT_2);
            amps[2 * (x2 - lo) as usize + 1] += C64::from(FRAC_1_SQRT_2);
            WalkerState::new(lo, amps, 0)
        }
    }
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| format!("cannot parse '{s}' as numbers: {e}"))?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got '{s}'"));
    }
    Ok(v)
}

impl FromStr for InitialKind {
    type Err = String;

    /// Accepted forms:
    /// `localized:X0`, `localized:X0:spinor:RE0,IM0,RE1,IM1`,
    /// `localized:X0:bloch:RX,RY,RZ`, `entangled:X1,X2`, `gamma:G`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["localized", x0] => Ok(InitialKind::localized_up(parse_site(x0)?)),
            ["localized", x0, "spinor", v] => {
                let v = parse_floats(v, 4)?;
                Ok(InitialKind::Localized {
                    x0: parse_site(x0)?,
                    coin: CoinInit::Spinor([C64::new(v[0], v[1]), C64::new(v[2], v[3])]),
                })
            }
            ["localized", x0, "bloch", v] => {
                let v = parse_floats(v, 3)?;
                let b = CoinBlochState::new([v[0], v[1], v[2]]).map_err(|e| e.to_string())?;
                Ok(InitialKind::Localized { x0: parse_site(x0)?, coin: CoinInit::Bloch(b) })
            }
            ["entangled", v] => {
                let xs: std::result::Result<Vec<i64>, _> = v.split(',').map(|x| x.trim().parse()).collect();
                match xs.map_err(|e| format!("bad site in '{v}': {e}"))?.as_slice() {
                    [x1, x2] => Ok(InitialKind::Entangled { x1: *x1, x2: *x2 }),
                    _ => Err(format!("entangled needs two sites, got '{v}'")),
                }
            }
            ["gamma", g] => Ok(InitialKind::Gamma {
                gamma: g.trim().parse().map_err(|e| format!("bad gamma '{g}': {e}"))?,
            }),
            _ => Err(format!(
                "unrecognized initial state '{s}' (expected localized:X0[:spinor:..|:bloch:..], entangled:X1,X2 or gamma:G)"
            )),
        }
    }
}

fn parse_site(s: &str) -> std::result::Result<i64, String> {
    s.trim().parse().map_err(|e| format!("bad site '{s}': {e}"))
}

/// JSON layout: `{"origin": .., "steps_elapsed": .., "amps": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct StateRecord {
    origin: i64,
    steps_elapsed: u64,
    amps: Vec<[f64; 2]>,
}

impl Serialize for WalkerState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord {
            origin: self.origin,
            steps_elapsed: self.steps_elapsed,
            amps: self.amps.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WalkerState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = StateRecord::deserialize(deserializer)?;
        let amps = rec
            .amps
            .into_iter()
            .map(|[re, im]| C64::new(re, im))
            .collect();
        WalkerState::new(rec.origin, amps, rec.steps_elapsed).map_err(serde::de::Error::custom)
    }
}
