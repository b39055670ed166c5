use std::f64::consts::PI;

use proptest::prelude::*;

use qwf_core::bloch::{projector_a1, superop_matrix};
use qwf_core::bounds::{holevo_sandwich, incompatibility_r, WeightMatrix};
use qwf_core::cases::{coin_from_magnetic, magnetic_from_coin, MagneticField};
use qwf_core::estimation::{classical_fi, position_distribution, sample_stream};
use qwf_core::kspace::evolve_k;
use qwf_core::qfim::analytic::{qfim_asymptotic, qfim_localized};
use qwf_core::qfim::oracle::qfim_exact;
use qwf_core::qfim::QfiMatrix;
use qwf_core::quadrature::QuadratureOptions;
use qwf_core::*;

fn params() -> impl Strategy<Value = CoinParams> {
    (0.05..PI - 0.05, -PI..PI, -PI..PI).prop_map(|(t, a, b)| CoinParams::new(t, a, b).unwrap())
}

fn initial() -> impl Strategy<Value = WalkerState> {
    prop_oneof![
        (
            -3i64..3,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.1..1.0f64
        )
            .prop_map(|(x0, a, b, c, d)| {
                make_initial(&InitialKind::Localized {
                    x0,
                    coin: CoinInit::Spinor([C64::new(d, a), C64::new(b, c)]),
                })
                .unwrap()
            }),
        (0i64..5).prop_map(|x2| make_initial(&InitialKind::Entangled { x1: -1, x2 }).unwrap()),
        (-PI..PI).prop_map(|gamma| make_initial(&InitialKind::Gamma { gamma }).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn evolution_is_unitary_and_causal(p in params(), init in initial(), t in 0u64..120) {
        let s = evolve(&init, &p, t);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let (lo, hi) = s.support().unwrap();
        let (ilo, ihi) = init.support().unwrap();
        prop_assert!(lo >= ilo - t as i64 && hi <= ihi + t as i64);
    }

    #[test]
    fn momentum_route_matches_position_route(p in params(), init in initial(), t in 0u64..40) {
        let n = (2 * (init.width() + 2 * t as usize)).next_power_of_two();
        let k = from_k_space(&evolve_k(&to_k_space(&init, n).unwrap(), &p, t).unwrap()).unwrap();
        prop_assert!(evolve(&init, &p, t).max_abs_diff(&k) < 1e-10);
    }

    #[test]
    fn projector_is_idempotent_and_fixed(p in params(), k in -PI..PI) {
        let a1 = projector_a1(&p, k).m;
        let a = superop_matrix(&p, k).m;
        prop_assert!((a1 * a1 - a1).abs().max() < 1e-12);
        prop_assert!((a * a1 - a1).abs().max() < 1e-12);
        prop_assert!((a1 - a1.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn exact_qfim_is_symmetric_psd(p in params(), init in initial(), t in 1u64..60) {
        let ex = qfim_exact(&init, &p, t);
        prop_assert!(ex.f.symmetry_residual() < 1e-9 * (1.0 + ex.f.entries.abs().max()));
        prop_assert!(ex.d.symmetry_residual() < 1e-9 * (1.0 + ex.f.entries.abs().max()));
        prop_assert!(ex.f.min_eigenvalue() > -1e-9 * (1.0 + ex.f.entries.abs().max()));
    }

    #[test]
    fn quantum_dominance(p in params(), init in initial(), t in 1u64..60) {
        let f = qfim_exact(&init, &p, t).f.identifiable();
        let i = classical_fi(&p, &init, t).matrix;
        let diff = QfiMatrix { entries: &f.entries - &i.entries, ..f.clone() };
        prop_assert!(diff.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn incompatibility_in_unit_interval(p in params(), init in initial(), t in 1u64..40) {
        let ex = qfim_exact(&init, &p, t);
        let (f, d) = (ex.f.identifiable(), ex.d.identifiable());
        if let Ok(r) = incompatibility_r(&f, &d) {
            prop_assert!((0.0..=1.0).contains(&r));
            let s = holevo_sandwich(&f, &WeightMatrix::identity(), &d).unwrap();
            prop_assert!(s.lower <= s.upper && s.upper <= 2.0 * s.lower);
        }
    }

    #[test]
    fn localized_closed_form_bounded_by_maxima(theta in 0.05..PI / 2.0, phi in -PI..PI, x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
        let n = (x * x + y * y + z * z).sqrt().max(1e-3);
        let r = CoinBlochState::new([x / n, y / n, z / n]).unwrap();
        let f = qfim_localized(theta, phi, &r, 1);
        let s = theta.sin();
        prop_assert!(f.get("theta", "theta") <= 4.0 * s / (1.0 + s) + 1e-12);
        prop_assert!(f.get("phi", "phi") <= 4.0 * (1.0 - s) + 1e-12);
        prop_assert!(f.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn magnetic_round_trip(b in 0.01..1.55f64, ang in -PI..PI) {
        let f = MagneticField::new(b * ang.cos(), b * ang.sin()).unwrap();
        prop_assume!(f.b2().abs() > 1e-3);
        let (back, _) = magnetic_from_coin(&coin_from_magnetic(&f).unwrap()).unwrap();
        prop_assert!((back.b2() - f.b2()).abs() < 1e-10 && (back.b3() - f.b3()).abs() < 1e-10);
    }

    #[test]
    fn sampling_conserves_shots_and_is_deterministic(p in params(), t in 1u64..30, shots in 1u64..100_000, seed in any::<u64>(), stream in 0u64..1000) {
        let d = position_distribution(&evolve(&make_initial(&InitialKind::localized_up(0)).unwrap(), &p, t));
        let a = sample_stream(&d, shots, seed, stream).unwrap();
        prop_assert_eq!(a.values().sum::<u64>(), shots);
        prop_assert!(a.keys().all(|&x| d.prob(x) > 0.0));
        prop_assert_eq!(a, sample_stream(&d, shots, seed, stream).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn analytic_qfim_is_psd_and_beta_blind(p in params(), init in initial()) {
        let a = qfim_asymptotic(&p, &init, 1, &QuadratureOptions::default()).unwrap();
        prop_assert!(a.f.min_eigenvalue() >= -1e-9);
        for l in ["theta", "alpha", "beta"] {
            prop_assert!(a.f.get("beta", l).abs() < 1e-12);
        }
        prop_assert!((a.norm - 1.0).abs() < 1e-9);
    }
}
