//! Curve data for the single-parameter QFI, Holevo-bound and prefactor plots.

use serde::Serialize;

use crate::bounds::{g_closed_form, symmetric_bound, WeightMatrix};
use crate::coin::CoinParams;
use crate::error::{QwfError, Result};
use crate::qfim::analytic::{qfim_asymptotic, single_param_qfi};
use crate::qfim::oracle::qfim_exact;
use crate::quadrature::QuadratureOptions;
use crate::walk::{make_initial, CoinBlochState, CoinInit, InitialKind};

/// Named numeric columns, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row length does not match columns"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(QwfError::InvalidParams(format!(
            "theta = {theta} must lie in (0, pi/2)"
        )));
    }
    Ok(())
}

fn check_times(ts: &[u64]) -> Result<()> {
    if ts.is_empty() || ts.contains(&0) {
        return Err(QwfError::InvalidParams(
            "time steps must be a nonempty list of positive integers".into(),
        ));
    }
    Ok(())
}

/// Single-parameter θ-QFI at `α = β = 0` for a localized walker: the
/// maximum (`r_y = 0`) and minimum (`r_y = ±1`) asymptotic curves, and
/// optionally the exact finite-`t` values for the same three coin states.
pub fn single_param_curves(theta: f64, ts: &[u64], oracle: bool) -> Result<Table> {
    check_theta(theta)?;
    check_times(ts)?;
    let mut cols = vec!["t", "qfi_max", "qfi_min", "ratio"];
    if oracle {
        cols.extend(["oracle_r_y_0", "oracle_r_y_plus", "oracle_r_y_minus"]);
    }
    let mut table = Table::new("single_qfi", &cols);
    let p = CoinParams::new(theta, 0.0, 0.0)?;
    let inits = if oracle {
        [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]
            .into_iter()
            .map(|r| {
                make_initial(&InitialKind::Localized {
                    x0: 0,
                    coin: CoinInit::Bloch(CoinBlochState::new(r)?),
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    for &t in ts {
        let (max, min) = (
            single_param_qfi(theta, 0.0, t),
            single_param_qfi(theta, 1.0, t),
        );
        let mut row = vec![t as f64, max, min, max / min];
        for init in &inits {
            row.push(qfim_exact(init, &p, t).f.get("theta", "theta"));
        }
        table.push(row);
    }
    Ok(table)
}

/// Holevo bound `C^H(t)` for the optimal entangled start, in long format.
///
/// `c_h` is the closed form `g(θ)/t²`; `c_s` is `Tr F⁻¹` of the asymptotic
/// QFIm obtained by quadrature for the entangled walker `(|0,0⟩ + |1,1⟩)/√2`.
pub fn holevo_curves(thetas: &[f64], ts: &[u64], opts: &QuadratureOptions) -> Result<Table> {
    check_times(ts)?;
    let mut table = Table::new("holevo", &["theta", "t", "c_h", "c_h_t2", "c_s"]);
    let init = make_initial(&InitialKind::Entangled { x1: 0, x2: 1 })?;
    for &theta in thetas {
        check_theta(theta)?;
        let p = CoinParams::new(theta, 0.0, 0.0)?;
        // F scales as t², so one quadrature at t = 1 serves every row
        let f1 = qfim_asymptotic(&p, &init, 1, opts)?.identifiable();
        let cs1 = symmetric_bound(&f1, &WeightMatrix::identity())?;
        let g = g_closed_form(theta);
        for &t in ts {
            let t2 = (t as f64).powi(2);
            table.push(vec![theta, t as f64, g / t2, g, cs1 / t2]);
        }
    }
    Ok(table)
}

/// Prefactors over `θ ∈ (0, π/2)` on `n` interior points: maximal `F_θθ/t²`,
/// minimal single-parameter `F_θθ/t²`, maximal `F_αα/t²` and `g(θ)`.
pub fn prefactor_insets(n: usize) -> Result<Table> {
    if n == 0 {
        return Err(QwfError::InvalidParams(
            "need at least one theta point".into(),
        ));
    }
    let mut table = Table::new(
        "prefactor_insets",
        &["theta", "f_max", "f_min", "f_alpha_max", "g"],
    );
    for i in 0..n {
        let theta = std::f64::consts::FRAC_PI_2 * (i as f64 + 1.0) / (n as f64 + 1.0);
        let s = theta.sin();
        table.push(vec![
            theta,
            4.0 * s / (1.0 + s),
            4.0 * s / (1.0 + s).powi(2),
            4.0 * (1.0 - s),
            g_closed_form(theta),
        ]);
    }
    Ok(table)
}
