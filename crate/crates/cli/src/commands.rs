use std::collections::BTreeMap;

use serde::Serialize;

use qwf_core::bounds::{
    holevo_compatible, holevo_sandwich, incompatibility_r, symmetric_bound, HolevoCertificate,
    HolevoSandwich, WeightMatrix,
};
use qwf_core::cases::{
    coin_from_dirac, coin_from_magnetic, dirac_first_order, dirac_from_coin, dirac_jacobian,
    magnetic_from_coin, magnetic_jacobian, pullback_qfim, DiracParams, InverseReport,
    MagneticField,
};
use qwf_core::estimation::{
    classical_fi, position_distribution, simulate_record, ClassicalFi, LikelihoodModel,
    MeasurementRecord, MleFit, SearchGrid,
};
use qwf_core::qfim::analytic::{beta_null_check, qfim_asymptotic, qfim_localized};
use qwf_core::qfim::oracle::qfim_exact;
use qwf_core::qfim::{QfiMatrix, Symmetry};
use qwf_core::quadrature::{KGrid, QuadratureOptions};
use qwf_core::sweep::{holevo_curves, prefactor_insets, single_param_curves, Table};
use qwf_core::{
    evolve, make_initial, CoinBlochState, CoinParams, InitialKind, QwfError, WalkerState,
};

use crate::args::*;
use crate::output::{Cell, Csv};
use crate::CliError;

/// Everything a command hands back to the writer.
pub struct Report {
    pub result: serde_json::Value,
    pub csv: Csv,
    pub summary: String,
}

/// Collects warnings; in strict mode the first one aborts with the given error.
pub struct Warnings {
    strict: bool,
    pub list: Vec<String>,
}

impl Warnings {
    pub fn new(strict: bool) -> Self {
        Warnings {
            strict,
            list: Vec::new(),
        }
    }

    fn add(&mut self, msg: String, promoted: impl FnOnce() -> CliError) -> Result<(), CliError> {
        if self.strict {
            return Err(promoted());
        }
        self.list.push(msg);
        Ok(())
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn coin(c: &CoinArgs) -> Result<CoinParams, CliError> {
    Ok(CoinParams::new(c.theta, c.alpha, c.beta)?)
}

fn initial(text: &str, warn: &mut Warnings) -> Result<(InitialKind, WalkerState), CliError> {
    let kind: InitialKind = text.parse().map_err(CliError::Usage)?;
    for w in kind.warnings() {
        let msg = w.clone();
        warn.add(w, || CliError::Usage(format!("strict: {msg}")))?;
    }
    let state = make_initial(&kind)?;
    Ok((kind, state))
}

fn quad(q: &QuadArgs) -> Result<QuadratureOptions, CliError> {
    if q.order == 0 || q.max_panels == 0 || !(q.rel_tol > 0.0) || !(q.abs_tol >= 0.0) {
        return Err(CliError::Usage(
            "quadrature order, panels and tolerances must be positive".into(),
        ));
    }
    Ok(QuadratureOptions {
        order: q.order,
        rel_tol: q.rel_tol,
        abs_tol: q.abs_tol,
        max_panels: q.max_panels,
        ..QuadratureOptions::default()
    })
}

fn table_csv(t: &Table) -> Csv {
    let ints = ["t", "x"];
    let mut csv = Csv::new(&t.columns.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &t.rows {
        csv.push(
            row.iter()
                .zip(&t.columns)
                .map(|(&v, c)| {
                    if ints.contains(&c.as_str()) {
                        Cell::Int(v as i64)
                    } else {
                        Cell::Real(v)
                    }
                })
                .collect(),
        );
    }
    csv
}

pub fn evolve_cmd(a: &EvolveArgs, warn: &mut Warnings) -> Result<Report, CliError> {
    let p = coin(&a.coin)?;
    let (_, init) = initial(&a.init, warn)?;
    let state = evolve(&init, &p, a.t);
    let dist = position_distribution(&state);
    let mut csv = Csv::new(&["x", "p"]);
    for (x, q) in dist.iter() {
        csv.push(vec![Cell::Int(x), Cell::Real(q)]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        state: &'a WalkerState,
        norm: f64,
        support: Option<(i64, i64)>,
    }
    let norm = state.norm_sqr();
    let summary = format!(
        "t = {}, {} sites, norm - 1 = {:.3e}",
        a.t,
        dist.probs.len(),
        norm - 1.0
    );
    Ok(Report {
        result: to_value(&Out {
            state: &state,
            norm,
            support: state.support(),
        }),
        csv,
        summary,
    })
}

#[derive(Serialize)]
struct RouteResult {
    fisher: QfiMatrix,
    uhlmann: QfiMatrix,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    diagnostics: BTreeMap<&'static str, f64>,
}

fn localized_coin(init: &WalkerState) -> Result<CoinBlochState, CliError> {
    if init.width() != 1 {
        return Err(CliError::Core(QwfError::InvalidState(
            "the localized route needs a walker on a single site".into(),
        )));
    }
    Ok(CoinBlochState::from_spinor([
        init.amps()[0],
        init.amps()[1],
    ])?)
}

fn zeros_like(m: &QfiMatrix) -> QfiMatrix {
    QfiMatrix {
        entries: m.entries.map(|_| 0.0),
        symmetry: Symmetry::Antisymmetric,
        ..m.clone()
    }
}

pub fn qfim_cmd(a: &QfimArgs, warn: &mut Warnings) -> Result<Report, CliError> {
    if a.routes.is_empty() {
        return Err(CliError::Usage("at least one route is required".into()));
    }
    let p = coin(&a.coin)?;
    let (_, init) = initial(&a.init, warn)?;
    let opts = quad(&a.quad)?;
    let mut routes: Vec<(Route, RouteResult)> = Vec::new();
    for &route in &a.routes {
        if routes.iter().any(|(r, _)| *r == route) {
            continue;
        }
        let res = match route {
            Route::Analytic => {
                let an = qfim_asymptotic(&p, &init, a.t, &opts)?;
                let mut diagnostics = BTreeMap::new();
                diagnostics.insert(
                    "beta_null_residual",
                    beta_null_check(&p, &KGrid::uniform(512)),
                );
                diagnostics.insert("norm", an.norm);
                diagnostics.insert("imaginary_residue", an.imaginary_residue);
                diagnostics.insert("triple_residue", an.triple_residue);
                diagnostics.insert("quadrature_nodes", an.nodes as f64);
                RouteResult {
                    fisher: an.f,
                    uhlmann: an.d,
                    diagnostics,
                }
            }
            Route::Localized => {
                let r = localized_coin(&init)?;
                let mut f = qfim_localized(p.theta(), p.phi(), &r, a.t);
                // ∂φ/∂α = 1 at fixed β
                f.labels = vec!["theta".into(), "alpha".into()];
                RouteResult {
                    uhlmann: zeros_like(&f),
                    fisher: f,
                    diagnostics: BTreeMap::new(),
                }
            }
            Route::Oracle => {
                let ex = qfim_exact(&init, &p, a.t);
                let mut diagnostics = BTreeMap::new();
                diagnostics.insert("overlap_real_residue", ex.overlap_real_residue);
                diagnostics.insert("nodes", ex.nodes as f64);
                RouteResult {
                    fisher: ex.f,
                    uhlmann: ex.d,
                    diagnostics,
                }
            }
        };
        routes.push((route, res));
    }
    let reference = &routes[0].1;
    let labels = ["theta", "alpha", "beta"];
    let scale = reference.fisher.entries.abs().max().max(f64::MIN_POSITIVE);
    let mut csv = Csv::new(&["route", "a", "b", "f", "d", "deviation"]);
    let mut deviation: BTreeMap<String, f64> = BTreeMap::new();
    for (route, res) in &routes {
        let name = to_value(route).as_str().unwrap_or_default().to_string();
        let mut worst: f64 = 0.0;
        for a_l in labels {
            for b_l in labels {
                let (Some(i), Some(j)) = (res.fisher.index_of(a_l), res.fisher.index_of(b_l))
                else {
                    continue;
                };
                let f = res.fisher.entries[(i, j)];
                let d = res.uhlmann.entries[(i, j)];
                let dev = match (
                    reference.fisher.index_of(a_l),
                    reference.fisher.index_of(b_l),
                ) {
                    (Some(ri), Some(rj)) => (f - reference.fisher.entries[(ri, rj)]).abs() / scale,
                    _ => f64::NAN,
                };
                if dev.is_finite() {
                    worst = worst.max(dev);
                }
                csv.push(vec![
                    Cell::Text(name.clone()),
                    Cell::Text(a_l.into()),
                    Cell::Text(b_l.into()),
                    Cell::Real(f),
                    Cell::Real(d),
                    Cell::Real(dev),
                ]);
            }
        }
        deviation.insert(name, worst);
    }
    let summary = deviation
        .iter()
        .map(|(k, v)| format!("{k}: max deviation {v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let routes_json: BTreeMap<String, &RouteResult> = routes
        .iter()
        .map(|(r, res)| (to_value(r).as_str().unwrap_or_default().to_string(), res))
        .collect();
    #[derive(Serialize)]
    struct Out<'a> {
        reference: String,
        routes: BTreeMap<String, &'a RouteResult>,
        deviation: BTreeMap<String, f64>,
    }
    let out = Out {
        reference: to_value(&routes[0].0)
            .as_str()
            .unwrap_or_default()
            .to_string(),
        routes: routes_json,
        deviation,
    };
    Ok(Report {
        result: to_value(&out),
        csv,
        summary,
    })
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
enum Holevo {
    Equal(HolevoCertificate),
    Bracketed(HolevoSandwich),
}

fn bounds_for(
    f: &QfiMatrix,
    d: &QfiMatrix,
    w: &WeightMatrix,
    warn: &mut Warnings,
) -> Result<Holevo, CliError> {
    match holevo_compatible(f, w, d) {
        Ok(c) => Ok(Holevo::Equal(c)),
        Err(e @ QwfError::IncompatibleModel { .. }) => {
            let msg = format!("{e}; reporting the bracket C^S <= C^H <= (1 + R) C^S");
            warn.add(msg, || CliError::Core(e.clone()))?;
            Ok(Holevo::Bracketed(holevo_sandwich(f, w, d)?))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn bounds_cmd(a: &BoundsArgs, warn: &mut Warnings) -> Result<Report, CliError> {
    let p = coin(&a.coin)?;
    let (_, init) = initial(&a.init, warn)?;
    let w = WeightMatrix::new([[a.weights[0], a.weights[1]], [a.weights[1], a.weights[2]]])?;
    let (f, d) = match a.route {
        BoundsRoute::Analytic => {
            let an = qfim_asymptotic(&p, &init, a.t, &quad(&a.quad)?)?;
            (an.f.identifiable(), an.d.identifiable())
        }
        BoundsRoute::Oracle => {
            let ex = qfim_exact(&init, &p, a.t);
            (ex.f.identifiable(), ex.d.identifiable())
        }
    };
    let symmetric = symmetric_bound(&f, &w)?;
    let r = incompatibility_r(&f, &d)?;
    let holevo = bounds_for(&f, &d, &w, warn)?;
    let (lower, upper) = match &holevo {
        Holevo::Equal(c) => (c.holevo, c.holevo),
        Holevo::Bracketed(s) => (s.lower, s.upper),
    };
    let t2 = (a.t as f64).powi(2);
    let csv = Csv::key_value(&[
        ("symmetric", symmetric),
        ("incompatibility", r),
        ("holevo_lower", lower),
        ("holevo_upper", upper),
        ("symmetric_t2", symmetric * t2),
    ]);
    #[derive(Serialize)]
    struct Out {
        fisher: QfiMatrix,
        uhlmann: QfiMatrix,
        weights: [[f64; 2]; 2],
        symmetric: f64,
        incompatibility: f64,
        holevo: Holevo,
    }
    let summary =
        format!("C^S = {symmetric:.10e}, R = {r:.3e}, C^H in [{lower:.10e}, {upper:.10e}]");
    let out = Out {
        fisher: f,
        uhlmann: d,
        weights: w.entries(),
        symmetric,
        incompatibility: r,
        holevo,
    };
    Ok(Report {
        result: to_value(&out),
        csv,
        summary,
    })
}

pub fn sweep_cmd(a: &SweepArgs) -> Result<Report, CliError> {
    if a.t_max == 0 {
        return Err(CliError::Usage("t-max must be positive".into()));
    }
    let ts: Vec<u64> = (1..=a.t_max).collect();
    let table = match a.kind {
        SweepKind::SingleQfi => single_param_curves(a.theta, &ts, a.oracle)?,
        SweepKind::Holevo => holevo_curves(&a.thetas, &ts, &quad(&a.quad)?)?,
        SweepKind::Insets => prefactor_insets(a.points)?,
    };
    let summary = format!(
        "{}: {} rows x {} columns",
        table.name,
        table.rows.len(),
        table.columns.len()
    );
    Ok(Report {
        result: to_value(&table),
        csv: table_csv(&table),
        summary,
    })
}

pub fn case_cmd(a: &CaseArgs, warn: &mut Warnings) -> Result<Report, CliError> {
    let (_, init) = initial(&a.init, warn)?;
    let opts = quad(&a.quad)?;
    let w = WeightMatrix::identity();
    #[derive(Serialize)]
    struct Out {
        coin: CoinParams,
        coin_fisher: QfiMatrix,
        jacobian: [[f64; 2]; 2],
        physical_fisher: QfiMatrix,
        coin_bound: f64,
        physical_bound: f64,
        inverse: InverseReport,
        round_trip_error: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        first_order: Option<[f64; 2]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        first_order_error: Option<f64>,
    }
    let (p, j, labels) = match a.kind {
        CaseKind::Magnetic => {
            let field = MagneticField::new(a.b2, a.b3)?;
            (
                coin_from_magnetic(&field)?,
                magnetic_jacobian(&field),
                ["b2", "b3"],
            )
        }
        CaseKind::Dirac => {
            if a.a_x == 0.0 {
                return Err(QwfError::ChargeUnidentifiable.into());
            }
            let d = DiracParams::new(a.m, a.q, a.a_x, a.eps)?;
            (coin_from_dirac(&d)?, dirac_jacobian(&d), ["m", "q"])
        }
    };
    let coin_fisher = qfim_asymptotic(&p, &init, a.t, &opts)?.identifiable();
    let physical_fisher = pullback_qfim(&coin_fisher, &j, labels)?;
    let coin_bound = symmetric_bound(&coin_fisher, &w)?;
    let physical_bound = symmetric_bound(&physical_fisher, &w)?;
    let (inverse, round_trip_error, first_order, first_order_error) = match a.kind {
        CaseKind::Magnetic => {
            let (back, rep) = magnetic_from_coin(&p)?;
            let err = (back.b2() - a.b2).abs().max((back.b3() - a.b3).abs());
            (rep, err, None, None)
        }
        CaseKind::Dirac => {
            let (m, q, rep) = dirac_from_coin(&p, a.a_x, a.eps)?;
            let err = (m - a.m).abs().max((q - a.q).abs());
            let (m1, q1) = dirac_first_order(&p, a.a_x, a.eps)?;
            let err1 = (m1 - a.m).abs().max((q1 - a.q).abs());
            (rep, err, Some([m1, q1]), Some(err1))
        }
    };
    let mut pairs = vec![
        ("theta", p.theta()),
        ("alpha", p.alpha()),
        ("beta", p.beta()),
        ("coin_bound", coin_bound),
        ("physical_bound", physical_bound),
        ("round_trip_error", round_trip_error),
        ("inverse_condition", inverse.condition),
    ];
    if let (Some(fo), Some(e)) = (first_order, first_order_error) {
        pairs.extend([
            ("m_first_order", fo[0]),
            ("q_first_order", fo[1]),
            ("first_order_error", e),
        ]);
    }
    let csv = Csv::key_value(&pairs);
    let summary = match first_order_error {
        Some(e) => format!("C^S(m, q) = {physical_bound:.6e}, round trip {round_trip_error:.2e}, first-order error {e:.3e}"),
        None => format!("C^S(b2, b3) = {physical_bound:.6e}, round trip {round_trip_error:.2e}"),
    };
    let jac = [[j[(0, 0)], j[(0, 1)]], [j[(1, 0)], j[(1, 1)]]];
    let out = Out {
        coin: p,
        coin_fisher,
        jacobian: jac,
        physical_fisher,
        coin_bound,
        physical_bound,
        inverse,
        round_trip_error,
        first_order,
        first_order_error,
    };
    Ok(Report {
        result: to_value(&out),
        csv,
        summary,
    })
}

pub fn estimate_cmd(a: &EstimateArgs, warn: &mut Warnings) -> Result<Report, CliError> {
    let p = coin(&a.coin)?;
    let (_, init) = initial(&a.init, warn)?;
    let grid = SearchGrid {
        theta: (a.theta_min, a.theta_max),
        alpha: (a.alpha_min, a.alpha_max),
        n_theta: a.grid_theta,
        n_alpha: a.grid_alpha,
        beta: p.beta(),
    };
    let record = simulate_record(&init, &p, a.t, a.shots, a.seed, a.stream)?;
    let model = LikelihoodModel::new(&init, a.t, grid)?;
    let fit = model.fit(&record)?;
    if fit.multimodal {
        let theta = fit
            .warnings
            .iter()
            .find(|w| w.starts_with("secondary"))
            .cloned()
            .unwrap_or_default();
        warn.add(format!("likelihood is multimodal: {theta}"), || {
            CliError::Core(QwfError::Multimodal {
                theta: fit.grid_theta,
                gap: f64::NAN,
            })
        })?;
    }
    warn.list.extend(
        fit.warnings
            .iter()
            .filter(|w| !w.starts_with("secondary"))
            .cloned(),
    );
    let cfi = classical_fi(&p, &init, a.t);
    let qfi = qfim_exact(&init, &p, a.t).f.identifiable();
    let n = a.shots as f64;
    let crb_classical = 1.0 / (n * cfi.matrix.get("theta", "theta"));
    let crb_quantum = 1.0 / (n * qfi.get("theta", "theta"));
    let mut csv = Csv::new(&["x", "count"]);
    for (&x, &c) in &record.counts {
        csv.push(vec![Cell::Int(x), Cell::Int(c as i64)]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        record: &'a MeasurementRecord,
        fit: &'a MleFit,
        theta_error: f64,
        classical_fisher: &'a ClassicalFi,
        quantum_fisher: &'a QfiMatrix,
        theta_variance_classical_bound: f64,
        theta_variance_quantum_bound: f64,
    }
    let theta_error = fit.theta - p.theta();
    let summary = match fit.alpha {
        Some(al) => format!("theta_hat = {:.12}, alpha_hat = {al:.12}", fit.theta),
        None => format!(
            "theta_hat = {:.12} (alpha not identifiable from positions)",
            fit.theta
        ),
    };
    let out = Out {
        record: &record,
        fit: &fit,
        theta_error,
        classical_fisher: &cfi,
        quantum_fisher: &qfi,
        theta_variance_classical_bound: crb_classical,
        theta_variance_quantum_bound: crb_quantum,
    };
    Ok(Report {
        result: to_value(&out),
        csv,
        summary,
    })
}
