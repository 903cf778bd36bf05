use nematoflow::ldg::{legendre_min, uniaxial_critical_s};
use nematoflow::rng::{random_mat3, seeded};
use nematoflow::stepper::{compatibility_residual, snapshot_energies, SimState};
use nematoflow::tensor::{a_hat, cancellation_check, frobenius, s_q, s_q_unprojected, sigma_viscous, t_tensor};
use nematoflow::verify::*;
use nematoflow::{Field, GridSpec, Mat3, MaterialParams, QTensor};
use proptest::prelude::*;

#[test]
fn identity_suite_passes_for_seed_42() {
    let r = verify_identities(42, 10_000);
    assert_eq!(r.samples, 10_000);
    assert_eq!(r.checks.len(), 6);
    for c in &r.checks {
        assert!(c.passed(), "{c:?}");
    }
}

#[test]
fn empty_identity_run_passes() {
    let r = verify_identities(1, 0);
    assert!(r.passed());
    assert!(r.checks.iter().all(|c| c.worst == 0.0));
}

#[test]
fn sign_flip_canary_fails() {
    let r = verify_identities_canary(42, 50);
    assert!(!r.passed());
    let bad: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    assert_eq!(bad, ["s_q_self_adjoint"]);
}

#[test]
fn identity_runs_are_reproducible() {
    assert_eq!(verify_identities(9, 500), verify_identities(9, 500));
    assert_ne!(verify_identities(9, 500).checks[4].worst, verify_identities(10, 500).checks[4].worst);
}

#[test]
fn legendre_examples() {
    let r = LegendreRow::for_constants(1.0, 0.0, 0.0).unwrap();
    assert!((r.min_eig - 1.0).abs() <= 1e-12 && r.bound == 1.0);
    let r = LegendreRow::for_constants(1.0, -0.3, -0.4).unwrap();
    assert!((r.bound - 0.3).abs() <= 1e-15);
    assert!(r.margin >= -1e-9);
    assert!(LegendreRow::for_constants(-1.0, 0.0, 0.0).is_err());
    assert!(LegendreRow::for_constants(1.0, -0.6, -0.5).is_err());
}

#[test]
fn legendre_sweep_covers_both_branches() {
    let rows = legendre_sweep(3, 200).unwrap();
    assert_eq!(rows.len(), 200);
    let neg = rows.iter().filter(|r| r.l2 + r.l3 < 0.0).count();
    assert_eq!(neg, 100);
    for r in &rows {
        assert!(r.l1 > 0.0 && r.l1 + r.l2 + r.l3 > 0.0);
        assert!(r.margin >= -1e-9, "{r:?}");
    }
    assert_eq!(rows, legendre_sweep(3, 200).unwrap());
    let line = rows[0].csv();
    let parsed: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(parsed, [rows[0].l1, rows[0].l2, rows[0].l3, rows[0].min_eig, rows[0].bound, rows[0].margin]);
}

#[test]
fn study_names_round_trip() {
    for s in Study::ALL {
        assert_eq!(Study::from_name(s.name()), Some(s));
    }
    assert_eq!(Study::from_name("multigrid"), None);
    assert_eq!(Study::EnergyDt.window(), (0.8, 1.2));
}

#[test]
fn convergence_rows_format() {
    let r = ConvergenceRow { resolution: 8.0, error: 0.5, order: None };
    assert_eq!(r.csv(), "8.0,0.5,");
    let r = ConvergenceRow { resolution: 16.0, error: 0.125, order: Some(2.0) };
    assert_eq!(r.csv(), "16.0,0.125,2.0");
}

#[test]
fn energy_ladder_error_shrinks_with_dt() {
    let res = energy_dt_ladder(&reference_params(), 6, 1e-3, &[2e-4, 1e-4], 0).unwrap();
    assert!(res[1].1 < res[0].1, "{res:?}");
}

fn xi_q_m() -> impl Strategy<Value = (f64, [f64; 5], [f64; 9], [f64; 9])> {
    (-2.0f64..2.0, prop::array::uniform5(-1.0f64..1.0), prop::array::uniform9(-1.0f64..1.0), prop::array::uniform9(-1.0f64..1.0))
}

fn q_of(v: [f64; 5]) -> QTensor {
    let [a, b, c, d, e] = v;
    QTensor::project(&Mat3([[a, b, c], [b, d, e], [c, e, -a - d]]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn s_q_formula_is_traceless_symmetric_and_self_adjoint((xi, qv, m, p) in xi_q_m()) {
        let (q, m, p) = (q_of(qv), Mat3::from_flat(&m), Mat3::from_flat(&p));
        let s = s_q_unprojected(xi, &q, &m);
        prop_assert!(s.trace().abs() <= 1e-14);
        prop_assert!(s.asymmetry() <= 1e-14);
        let sp = s_q_unprojected(xi, &q, &p);
        prop_assert!((frobenius(&s, &p) - frobenius(&sp, &m)).abs() <= 1e-12);
        prop_assert!((*s_q(xi, &q, &m).as_mat() - s).max_abs() <= 1e-14);
    }

    #[test]
    fn cancellation_and_viscous_form((xi, qv, m, p) in xi_q_m(), mq in prop::array::uniform5(-1.0f64..1.0)) {
        let (q, m, p) = (q_of(qv), Mat3::from_flat(&m), Mat3::from_flat(&p));
        prop_assert!(cancellation_check(xi, &q, &q_of(mq), &p) <= 1e-12);
        let lhs = frobenius(&sigma_viscous(xi, &q, &m), &p);
        let rhs = frobenius(t_tensor(xi, &q, &m).as_mat(), t_tensor(xi, &q, &p).as_mat());
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        let a = a_hat(xi, &q);
        prop_assert!(a.min_eigenvalue() >= -1e-12);
        prop_assert!(a.max_asymmetry() == 0.0);
        prop_assert!((a.contract(&m, &m) - frobenius(t_tensor(xi, &q, &m).as_mat(), t_tensor(xi, &q, &m).as_mat())).abs() <= 1e-12);
    }

    #[test]
    fn legendre_bound_holds(l1 in 0.01f64..5.0, l2 in -5.0f64..5.0, l3 in -5.0f64..5.0) {
        prop_assume!(l1 + l2 + l3 > 1e-3);
        let p = MaterialParams { l1, l2, l3, ..MaterialParams::default() };
        prop_assert!(legendre_min(&p).unwrap() >= p.coercivity_bound() - 1e-9);
    }

    #[test]
    fn critical_states_are_stationary(a in -2.0f64..0.5, b in 0.2f64..3.0, c in 0.2f64..3.0, seed in 0u64..1000) {
        let p = MaterialParams { a, b, c, ..MaterialParams::default() };
        let n = random_mat3(&mut seeded(seed)).0[0];
        prop_assume!(n.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        for s in uniaxial_critical_s(&p) {
            let q0 = Field::constant(GridSpec::unit_cube(4), QTensor::uniaxial(s, n));
            let bc = nematoflow::BoundaryData::from_field(&q0).unwrap();
            let r = compatibility_residual(&p, &Field::zeros(q0.grid), &q0, &bc).unwrap();
            prop_assert!(r <= 1e-10 * (1.0 + s.abs().powi(3)), "s = {} residual {:e}", s, r);
            let e = snapshot_energies(&p, &SimState::new(&p, Field::zeros(q0.grid), q0));
            prop_assert!(e.f_elastic.abs() <= 1e-14 && e.dissipation_rotational <= 1e-18 + 1e-18 * s.abs());
        }
    }
}
