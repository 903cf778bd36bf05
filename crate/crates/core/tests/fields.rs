mod common;

use common::{anisotropic_params, smooth_q};
use nematoflow::fields::*;
use nematoflow::ldg::{bulk_density, bulk_derivative, elastic_density};
use nematoflow::{Field, GridSpec, MaterialParams, Mat3, QTensor, Vec3};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn elastic_operator_matches_rank6_form() {
    let p = anisotropic_params();
    for grid in [GridSpec::unit_cube(7), GridSpec::periodic_cube(6)] {
        let q = smooth_q(grid, 3, false);
        let l = l_op_apply(&p, &q);
        let lt = l_tilde_op_apply(&p, &q);
        let scale = l.max_norm();
        for (a, b) in l.data.iter().zip(&lt.data) {
            assert!((*a.as_mat() - *b).max_abs() <= 1e-12 * scale, "{a:?} vs {b:?}");
            assert!(b.asymmetry() <= 1e-12 * scale);
            assert!(b.trace().abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn elastic_energy_gradient_is_the_discrete_operator() {
    let p = anisotropic_params();
    let grid = GridSpec { n: [6, 7, 5], h: 0.15, ..GridSpec::unit_cube(6) };
    let q = smooth_q(grid, 11, false);
    let phi = smooth_q(grid, 12, true);
    // the elastic energy is quadratic, so the polarisation identity is exact
    let bilinear = elastic_energy(&p, &q.add(&phi)) - elastic_energy(&p, &q) - elastic_energy(&p, &phi);
    let l = l_op_apply(&p, &q);
    let pairing = inner_interior(&l, &phi);
    assert!((bilinear - pairing).abs() <= 1e-12 * pairing.abs().max(1.0), "{bilinear} vs {pairing}");
}

#[test]
fn molecular_field_is_variational_derivative() {
    let p = anisotropic_params();
    let grid = GridSpec::unit_cube(6);
    let q = smooth_q(grid, 5, false).scaled(0.4);
    let phi = smooth_q(grid, 6, true);
    let eps = 1e-5;
    let plus = q.add(&phi.scaled(eps));
    let minus = q.add(&phi.scaled(-eps));
    let fd = (free_energy(&p, &plus) - free_energy(&p, &minus)) / (2.0 * eps);
    let h = molecular_field(&p, &q);
    let exact = -inner_interior(&h, &phi);
    assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1.0), "{fd} vs {exact}");
    for (i, hv) in h.data.iter().enumerate() {
        let expect = -(l_op_apply(&p, &q).data[i] + bulk_derivative(&p, &q.data[i]));
        assert!((*hv - expect).as_mat().max_abs() < 1e-12 * (1.0 + hv.as_mat().max_abs()));
    }
}

#[test]
fn coercivity_pairing_equals_operator_inner_product() {
    let p = anisotropic_params();
    let q = smooth_q(GridSpec::unit_cube(6), 9, true);
    let r = coercivity_check(&p, &q).unwrap();
    let pairing = inner_interior(&l_op_apply(&p, &q), &q);
    assert!((r.lhs - pairing).abs() <= 1e-12 * pairing.abs());
    assert!(r.lhs >= r.rhs);
}

#[test]
fn coercivity_is_isotropic_when_anisotropy_cancels() {
    let p = MaterialParams { l2: 0.8, l3: -0.8, ..MaterialParams::default() };
    let q = smooth_q(GridSpec::unit_cube(7), 21, true);
    let r = coercivity_check(&p, &q).unwrap();
    assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.rhs);
}

#[test]
fn coercivity_rejects_nonzero_walls() {
    let p = MaterialParams::default();
    let q = smooth_q(GridSpec::unit_cube(5), 1, false);
    assert!(coercivity_check(&p, &q).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn coercivity_bound_holds(l1 in 0.05f64..3.0, l2 in -2.0f64..3.0, l3 in -2.0f64..3.0, seed in 0u64..1000) {
        prop_assume!(l1 + l2 + l3 > 0.05);
        let p = MaterialParams { l1, l2, l3, ..MaterialParams::default() };
        let q = smooth_q(GridSpec::unit_cube(5), seed, true);
        let r = coercivity_check(&p, &q).unwrap();
        prop_assert!(r.lhs >= r.rhs * (1.0 - 1e-12), "lhs {} rhs {}", r.lhs, r.rhs);
    }
}

#[test]
fn free_energy_of_zero_field_vanishes() {
    let p = anisotropic_params();
    let q = Field::<QTensor>::zeros(GridSpec::unit_cube(5));
    assert_eq!(free_energy(&p, &q), 0.0);
}

fn plane_wave_energy_error(n: usize) -> f64 {
    let p = anisotropic_params();
    let qhat = QTensor::project(&Mat3([[0.3, 0.2, -0.1], [0.2, -0.5, 0.4], [-0.1, 0.4, 0.2]]));
    let grid = GridSpec::periodic_cube(n);
    let q = Field::from_fn(grid, |x| qhat * (2.0 * PI * x[0]).sin() + qhat * (0.5 * (2.0 * PI * x[1]).cos()));
    let qm = qhat.as_mat();
    let tr2 = qm.matmul(qm).trace();
    let tr3 = nematoflow::tensor::frobenius(&qm.matmul(qm), qm);
    let col0: f64 = (0..3).map(|i| qm[(i, 0)] * qm[(i, 0)]).sum();
    let col1: f64 = (0..3).map(|i| qm[(i, 1)] * qm[(i, 1)]).sum();
    let k2 = 4.0 * PI * PI;
    let elastic = 0.5 * k2 * 0.5 * (p.l1 * tr2 * 1.25 + p.l23() * (col0 + 0.25 * col1));
    // f(x, y) = sin X + ½ cos Y, with mean-square 5/8, mean cube 0,
    // mean fourth power 3/8 + 6·¼·¼ + (1/16)(3/8)
    let m2 = 0.5 + 0.125;
    let m3 = 0.0;
    let m4 = 0.375 + 6.0 * 0.5 * 0.125 + 0.375 / 16.0;
    let bulk = 0.5 * p.a * tr2 * m2 - p.b / 3.0 * tr3 * m3 + 0.25 * p.c * tr2 * tr2 * m4;
    (free_energy(&p, &q) - (elastic + bulk)).abs()
}

#[test]
fn free_energy_converges_at_second_order() {
    let (e1, e2) = (plane_wave_energy_error(8), plane_wave_energy_error(16));
    let rate = (e1 / e2).log2();
    assert!(rate > 1.8, "errors {e1} {e2}");
}

#[test]
fn gradient_converges_at_second_order_including_walls() {
    let err = |n: usize| {
        let g = GridSpec::unit_cube(n);
        let qhat = QTensor::uniaxial(0.5, [1.0, 2.0, 0.5]);
        let q = Field::from_fn(g, |x| qhat * ((1.3 * x[0]).sin() * (0.7 * x[1] + x[2]).cos()));
        let gq = grad_q(&q);
        let mut e: f64 = 0.0;
        for ijk in g.iter_nodes() {
            let x = g.coord(ijk);
            let dx = 1.3 * (1.3 * x[0]).cos() * (0.7 * x[1] + x[2]).cos();
            let dy = -0.7 * (1.3 * x[0]).sin() * (0.7 * x[1] + x[2]).sin();
            let dz = -(1.3 * x[0]).sin() * (0.7 * x[1] + x[2]).sin();
            let g = gq.at(ijk);
            for (k, d) in [dx, dy, dz].into_iter().enumerate() {
                e = e.max((g.slot(k) - *qhat.as_mat() * d).max_abs());
            }
        }
        e
    };
    assert!((err(8) / err(16)).log2() > 1.8);
}

#[test]
fn distortion_stress_is_negative_semidefinite_for_one_constant() {
    let p = MaterialParams::default();
    let q = smooth_q(GridSpec::unit_cube(5), 4, false);
    for s in distortion_stress(&p, &q).data {
        assert!(s.asymmetry() < 1e-12);
        let m = nalgebra::Matrix3::from_fn(|i, j| s[(i, j)]);
        let ev = m.symmetric_eigenvalues();
        assert!(ev.max() <= 1e-12 * (1.0 + s.max_abs()));
    }
}

fn distortion_identity_error(n: usize) -> f64 {
    let p = anisotropic_params();
    let g = GridSpec::periodic_cube(n);
    let tau = 2.0 * PI;
    let qa = QTensor::uniaxial(0.6, [1.0, 0.3, -0.5]);
    let qb = QTensor::uniaxial(-0.2, [0.1, 1.0, 0.4]);
    let q = Field::from_fn(g, |x| {
        qa * ((tau * x[0] + 0.4).sin() * (tau * x[2] - 0.2).cos()) + qb * (tau * (x[1] + x[0]) + 1.1).cos() + qa * (0.3 * (tau * x[1]).sin())
    });
    let u = Field::from_fn(g, |x| {
        Vec3([(tau * (x[0] + x[1]) + 0.7).sin(), (tau * x[2]).cos() * (tau * x[0] - 0.5).sin(), (tau * (x[1] - x[2]) + 0.3).sin()])
    });
    // ∫ σ^d : ∇u = ∫ (H : ∂_i Q) u_i - ∫ (f_B + f_E) div u on a periodic box
    let lhs = distortion_stress(&p, &q).inner(&grad_vec(&u));
    let h = molecular_field(&p, &q);
    let gq = grad_q(&q);
    let div = div_vec(&u);
    let w = g.h.powi(3);
    let mut rhs = 0.0;
    for i in 0..g.len() {
        let force: f64 = (0..3).map(|k| h.data[i].as_mat().flatten().iter().zip(gq.data[i].slot(k).flatten()).map(|(a, b)| a * b).sum::<f64>() * u.data[i][k]).sum();
        let dens = bulk_density(&p, &q.data[i]) + elastic_density(&p, &gq.data[i]);
        rhs += w * (force - dens * div.data[i]);
    }
    assert!(lhs.abs() > 1e-2, "degenerate test field: {lhs}");
    (lhs - rhs).abs()
}

#[test]
fn distortion_stress_balances_molecular_force() {
    let (e1, e2) = (distortion_identity_error(16), distortion_identity_error(32));
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}
