//! Finite-difference operators, discrete energies and stresses.
//!
//! Interior derivatives are central; wall nodes use one-sided second-order
//! stencils. The discrete elastic energy is an edge/cell quadrature whose
//! exact gradient with respect to interior node values is `h³ L_h Q`, so
//! the discrete molecular field is the true discrete variational derivative.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldValue, GridSpec, Vec3};
use crate::kernels::GridKernels;
use crate::ldg::{bulk_derivative, bulk_density, elastic_tensor, ElasticVariant, MaterialParams};
use crate::tensor::{Mat3, QTensor, Rank3Gradient};

type Stencil = [(isize, f64); 4];

/// First-derivative weights along `axis` at node index `i`.
fn stencil1(g: &GridSpec, axis: usize, i: usize) -> Stencil {
    let s = 1.0 / (2.0 * g.h);
    if g.periodic[axis] || (i > 0 && i < g.n[axis]) {
        [(-1, -s), (1, s), (0, 0.0), (0, 0.0)]
    } else if i == 0 {
        [(0, -3.0 * s), (1, 4.0 * s), (2, -s), (0, 0.0)]
    } else {
        [(0, 3.0 * s), (-1, -4.0 * s), (-2, s), (0, 0.0)]
    }
}

/// Second-derivative weights along `axis` at node index `i`.
fn stencil2(g: &GridSpec, axis: usize, i: usize) -> Stencil {
    let s = 1.0 / (g.h * g.h);
    if g.periodic[axis] || (i > 0 && i < g.n[axis]) {
        [(-1, s), (0, -2.0 * s), (1, s), (0, 0.0)]
    } else if i == 0 {
        [(0, 2.0 * s), (1, -5.0 * s), (2, 4.0 * s), (3, -s)]
    } else {
        [(0, 2.0 * s), (-1, -5.0 * s), (-2, 4.0 * s), (-3, -s)]
    }
}

fn apply_stencil<T: FieldValue>(f: &Field<T>, ijk: [usize; 3], axis: usize, st: &Stencil) -> T {
    let mut acc = T::default();
    for &(o, w) in st {
        if w != 0.0 {
            let nb = f.grid.shift(ijk, axis, o).expect("stencil stays on the grid");
            acc = acc + f.at(nb) * w;
        }
    }
    acc
}

/// `∂_axis f` at a node.
pub fn d1_at<T: FieldValue>(f: &Field<T>, ijk: [usize; 3], axis: usize) -> T {
    apply_stencil(f, ijk, axis, &stencil1(&f.grid, axis, ijk[axis]))
}

/// `∂_axis² f` at a node (compact three-point stencil in the interior).
pub fn d2_at<T: FieldValue>(f: &Field<T>, ijk: [usize; 3], axis: usize) -> T {
    apply_stencil(f, ijk, axis, &stencil2(&f.grid, axis, ijk[axis]))
}

/// `∂_j ∂_k f` at a node; for `j ≠ k` the first-derivative stencils are
/// composed, which in the interior is the four-point cross stencil.
pub fn d2_mixed_at<T: FieldValue>(f: &Field<T>, ijk: [usize; 3], j: usize, k: usize) -> T {
    if j == k {
        return d2_at(f, ijk, j);
    }
    let g = &f.grid;
    let mut acc = T::default();
    for &(o, w) in &stencil1(g, j, ijk[j]) {
        if w != 0.0 {
            let nb = g.shift(ijk, j, o).expect("stencil stays on the grid");
            acc = acc + d1_at(f, nb, k) * w;
        }
    }
    acc
}

fn hessian_at<T: FieldValue>(f: &Field<T>, ijk: [usize; 3]) -> [[T; 3]; 3] {
    let mut h = [[T::default(); 3]; 3];
    for j in 0..3 {
        for k in j..3 {
            let v = d2_mixed_at(f, ijk, j, k);
            h[j][k] = v;
            h[k][j] = v;
        }
    }
    h
}

/// `∇Q` with `g[i][j][k] = ∂_k Q_ij`.
pub fn grad_q(qf: &Field<QTensor>) -> Field<Rank3Gradient> {
    Field::from_nodes(qf.grid, |ijk| {
        let mut g = Rank3Gradient::ZERO;
        for k in 0..3 {
            g.set_slot(k, d1_at(qf, ijk, k).as_mat());
        }
        g
    })
}

/// `∇u` with `g[i][j] = ∂_j u_i`.
pub fn grad_vec(uf: &Field<Vec3>) -> Field<Mat3> {
    Field::from_nodes(uf.grid, |ijk| {
        let mut g = Mat3::ZERO;
        for j in 0..3 {
            let d = d1_at(uf, ijk, j);
            for i in 0..3 {
                g.0[i][j] = d[i];
            }
        }
        g
    })
}

pub fn div_vec(uf: &Field<Vec3>) -> Field<f64> {
    Field::from_nodes(uf.grid, |ijk| (0..3).map(|j| d1_at(uf, ijk, j)[j]).sum())
}

pub fn laplacian<T: FieldValue>(f: &Field<T>) -> Field<T> {
    Field::from_nodes(f.grid, |ijk| (0..3).fold(T::default(), |acc, a| acc + d2_at(f, ijk, a)))
}

/// `∂_k ∂_j Q`.
pub fn mixed_second(qf: &Field<QTensor>, k: usize, j: usize) -> Field<QTensor> {
    Field::from_nodes(qf.grid, |ijk| d2_mixed_at(qf, ijk, j, k))
}

/// Elastic operator `L(Q) = -L1 ΔQ - (L2+L3)/2 (Q_ik,kj + Q_jk,ki - ⅔ δ_ij Q_lk,kl)`
/// at every node. Wall values of `qf` act as the boundary data.
pub fn l_op_apply(p: &MaterialParams, qf: &Field<QTensor>) -> Field<QTensor> {
    let (l1, l23) = (p.l1, p.l23());
    Field::from_nodes(qf.grid, |ijk| {
        let hs = hessian_at(qf, ijk);
        let mut lap = Mat3::ZERO;
        for (a, row) in hs.iter().enumerate() {
            lap += *row[a].as_mat();
        }
        let mut out = lap * -l1;
        if l23 != 0.0 {
            // m[a][b] = Σ_k ∂_k ∂_b Q_ak
            let m = Mat3::from_fn(|a, b| (0..3).map(|k| hs[k][b].as_mat()[(a, k)]).sum());
            let t = m.trace();
            let aniso = m + m.transpose() - Mat3::IDENTITY * (2.0 / 3.0 * t);
            out -= aniso * (0.5 * l23);
        }
        QTensor::project(&out)
    })
}

/// `L̃(Q)_ij = -A^{ℓk}_{(ij)(i'j')} ∂_ℓ ∂_k Q_{i'j'}`, evaluated directly from
/// the rank-6 coefficient. Agrees with [`l_op_apply`] on symmetric traceless
/// fields.
pub fn l_tilde_op_apply(p: &MaterialParams, qf: &Field<QTensor>) -> Field<Mat3> {
    let a = elastic_tensor(p, ElasticVariant::A);
    Field::from_nodes(qf.grid, |ijk| {
        let hs = hessian_at(qf, ijk);
        Mat3::from_fn(|i, j| {
            let mut s = 0.0;
            for (l, row) in hs.iter().enumerate() {
                for (k, hq) in row.iter().enumerate() {
                    let hq = hq.as_mat();
                    for ip in 0..3 {
                        for jp in 0..3 {
                            s += a.get(l, k, i, j, ip, jp) * hq[(ip, jp)];
                        }
                    }
                }
            }
            -s
        })
    })
}

/// Molecular field `H = -L(Q) - J(Q)`.
pub fn molecular_field(p: &MaterialParams, qf: &Field<QTensor>) -> Field<QTensor> {
    let l = l_op_apply(p, qf);
    Field::from_nodes(qf.grid, |ijk| {
        let i = qf.grid.index(ijk);
        -(l.data[i] + bulk_derivative(p, &qf.data[i]))
    })
}

/// Trapezoidal `∫ f_B(Q)`.
pub fn bulk_energy(p: &MaterialParams, qf: &Field<QTensor>) -> f64 {
    let g = &qf.grid;
    qf.data
        .iter()
        .enumerate()
        .map(|(i, q)| g.weight(g.unindex(i)) * bulk_density(p, q))
        .sum()
}

/// Quadrature weight of an element spanning the axes in `along`, anchored at
/// `ijk`: `h³` halved for every other axis on which it lies in a wall plane.
fn element_weight(g: &GridSpec, ijk: [usize; 3], along: &[usize]) -> f64 {
    let mut w = g.h * g.h * g.h;
    for a in 0..3 {
        if !along.contains(&a) && g.at_wall(a, ijk[a]) {
            w *= 0.5;
        }
    }
    w
}

/// Visits every grid edge along `axis` as `(weight, forward difference)`.
fn for_each_edge<T: FieldValue>(f: &Field<T>, axis: usize, mut visit: impl FnMut(f64, T)) {
    let g = &f.grid;
    for ijk in g.iter_nodes() {
        if let Some(nb) = g.shift(ijk, axis, 1) {
            if !g.periodic[axis] && nb[axis] < ijk[axis] {
                continue;
            }
            visit(element_weight(g, ijk, &[axis]), (f.at(nb) - f.at(ijk)) * (1.0 / g.h));
        }
    }
}

/// Visits every cell of the `(j, k)` plane as `(weight, D_j, D_k)` using the
/// cell-averaged differences.
fn for_each_cell<T: FieldValue>(f: &Field<T>, j: usize, k: usize, mut visit: impl FnMut(f64, T, T)) {
    let g = &f.grid;
    for ijk in g.iter_nodes() {
        let (Some(c10), Some(c01)) = (g.shift(ijk, j, 1), g.shift(ijk, k, 1)) else {
            continue;
        };
        if (!g.periodic[j] && c10[j] < ijk[j]) || (!g.periodic[k] && c01[k] < ijk[k]) {
            continue;
        }
        let c11 = g.shift(c10, k, 1).expect("cell corner");
        let (u00, u10, u01, u11) = (f.at(ijk), f.at(c10), f.at(c01), f.at(c11));
        let s = 0.5 / g.h;
        let dj = (u10 - u00 + (u11 - u01)) * s;
        let dk = (u01 - u00 + (u11 - u10)) * s;
        visit(element_weight(g, ijk, &[j, k]), dj, dk);
    }
}

/// Discrete `∫ |∇Q|²` as a sum over grid edges.
pub fn grad_norm_sq<T: FieldValue>(f: &Field<T>) -> f64 {
    let mut s = 0.0;
    for axis in 0..3 {
        for_each_edge(f, axis, |w, d| s += w * d.dot(&d));
    }
    s
}

/// Discrete elastic energy `∫ f_E(∇Q)`.
pub fn elastic_energy(p: &MaterialParams, qf: &Field<QTensor>) -> f64 {
    let l23 = p.l23();
    let mut s = 0.0;
    for axis in 0..3 {
        for_each_edge(qf, axis, |w, d| {
            let d = d.as_mat();
            let diag: f64 = (0..3).map(|i| d[(i, axis)] * d[(i, axis)]).sum();
            s += 0.5 * w * (p.l1 * frob_sq(d) + l23 * diag);
        });
    }
    if p.l2 != 0.0 || p.l3 != 0.0 {
        for j in 0..3 {
            for k in (j + 1)..3 {
                for_each_cell(qf, j, k, |w, dj, dk| {
                    let (dj, dk) = (dj.as_mat(), dk.as_mat());
                    let mut div = 0.0;
                    let mut cross = 0.0;
                    for i in 0..3 {
                        div += dj[(i, j)] * dk[(i, k)];
                        cross += dk[(i, j)] * dj[(i, k)];
                    }
                    s += w * (p.l2 * div + p.l3 * cross);
                });
            }
        }
    }
    s
}

fn frob_sq(m: &Mat3) -> f64 {
    crate::tensor::frobenius(m, m)
}

/// Discrete free energy `F_h = ∫ f_B + f_E`.
pub fn free_energy(p: &MaterialParams, qf: &Field<QTensor>) -> f64 {
    bulk_energy(p, qf) + elastic_energy(p, qf)
}

/// `½ ∫ |u|²`.
pub fn kinetic_energy(uf: &Field<Vec3>) -> f64 {
    0.5 * uf.inner(uf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// Discrete `a(Q, Q)`.
    pub lhs: f64,
    /// `min(L1, L0) ‖∇Q‖²`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares `a_h(Q, Q)` with `min(L1, L0) ‖∇_h Q‖²` for a field vanishing on
/// the walls.
pub fn coercivity_check(p: &MaterialParams, qf: &Field<QTensor>) -> Result<CoercivityReport> {
    p.validate()?;
    let scale = qf.max_norm().max(f64::MIN_POSITIVE);
    if qf.grid.has_walls() && qf.boundary_max_norm() > 1e-14 * scale {
        return Err(Error::invalid("coercivity_check", "field must vanish on the walls"));
    }
    let lhs = 2.0 * elastic_energy(p, qf);
    let rhs = p.coercivity_bound() * grad_norm_sq(qf);
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    Ok(CoercivityReport { lhs, rhs, ratio })
}

/// `σ^d_ij = -(∂f_E/∂Q_kl,j) Q_kl,i`.
pub fn distortion_stress(p: &MaterialParams, qf: &Field<QTensor>) -> Field<Mat3> {
    grad_q(qf).map(|g| distortion_stress_point(p, g))
}

pub fn distortion_stress_point(p: &MaterialParams, g: &Rank3Gradient) -> Mat3 {
    let g = &g.0;
    let mut div = [0.0; 3];
    for (k, d) in div.iter_mut().enumerate() {
        *d = (0..3).map(|m| g[k][m][m]).sum();
    }
    Mat3::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                let mut dfdg = p.l1 * g[k][l][j] + p.l3 * g[k][j][l];
                if l == j {
                    dfdg += p.l2 * div[k];
                }
                s += dfdg * g[k][l][i];
            }
        }
        -s
    })
}

fn flat<T: FieldValue>(f: &Field<T>) -> Vec<f64> {
    let all: Vec<usize> = (0..f.grid.len()).collect();
    f.pack(&all)
}

fn unflat<T: FieldValue>(grid: GridSpec, v: &[f64]) -> Field<T> {
    let mut f = Field::zeros(grid);
    let all: Vec<usize> = (0..grid.len()).collect();
    f.unpack(&all, v);
    f
}

/// Velocity gradient for fields vanishing on the walls: central at interior
/// nodes, one-sided first order along the normal on wall faces, zero on wall
/// edges and corners.
pub fn grad_sbp(uf: &Field<Vec3>) -> Field<Mat3> {
    let k = GridKernels::new(uf.grid);
    let g = k.grad_sbp(&flat(uf));
    Field {
        grid: uf.grid,
        data: g.iter().map(Mat3::from_flat).collect(),
    }
}

/// Divergence at interior nodes of a tensor flux given on interior and wall
/// face nodes; `-div_sbp` is the adjoint of [`grad_sbp`] under trapezoidal
/// weights.
pub fn div_sbp(flux: &Field<Mat3>) -> Field<Vec3> {
    let k = GridKernels::new(flux.grid);
    let f: Vec<[f64; 9]> = flux.data.iter().map(|m| m.flatten()).collect();
    let mut out = vec![0.0; 3 * flux.grid.len()];
    k.add_div_sbp(&f, 1.0, &mut out);
    unflat(flux.grid, &out)
}

/// Pressure gradient: central differences at interior nodes, zero on walls.
pub fn grad_pressure(pf: &Field<f64>) -> Field<Vec3> {
    let k = GridKernels::new(pf.grid);
    let mut out = vec![0.0; 3 * pf.grid.len()];
    k.add_grad_p(&pf.data, 1.0, &mut out);
    unflat(pf.grid, &out)
}

/// Discrete divergence at every node of a velocity extended by zero outside
/// the interior; `div_discrete = -grad_pressureᵀ`.
pub fn div_discrete(uf: &Field<Vec3>) -> Field<f64> {
    let k = GridKernels::new(uf.grid);
    let mut u = flat(uf);
    for (i, c) in u.chunks_mut(3).enumerate() {
        if !k.is_interior(i) {
            c.fill(0.0);
        }
    }
    let mut out = vec![0.0; uf.grid.len()];
    k.div(&u, 1.0, &mut out);
    Field { grid: uf.grid, data: out }
}

fn interior_value<T: FieldValue>(f: &Field<T>, ijk: Option<[usize; 3]>) -> T {
    match ijk {
        Some(n) if !f.grid.is_boundary(n) => f.at(n),
        _ => T::default(),
    }
}

/// `(u·∇)Q` with central differences at interior nodes, zero on walls.
pub fn advect_q(uf: &Field<Vec3>, qf: &Field<QTensor>) -> Field<QTensor> {
    let g = uf.grid;
    Field::from_nodes(g, |ijk| {
        if g.is_boundary(ijk) {
            return QTensor::ZERO;
        }
        let u = uf.at(ijk);
        (0..3).fold(QTensor::ZERO, |acc, k| acc + d1_at(qf, ijk, k) * u[k])
    })
}

/// Skew-symmetric convection `½[(u·∇)u + ∇·(u⊗u)]`; orthogonal to `u`.
pub fn convect_skew(uf: &Field<Vec3>) -> Field<Vec3> {
    let g = uf.grid;
    let s = 0.5 / g.h;
    Field::from_nodes(g, |ijk| {
        if g.is_boundary(ijk) {
            return Vec3::ZERO;
        }
        let u = uf.at(ijk);
        let mut out = Vec3::ZERO;
        for k in 0..3 {
            let up = interior_value(uf, g.shift(ijk, k, 1));
            let um = interior_value(uf, g.shift(ijk, k, -1));
            for i in 0..3 {
                let adv = u[k] * (up[i] - um[i]) * s;
                let cons = (up[k] * up[i] - um[k] * um[i]) * s;
                out[i] += 0.5 * (adv + cons);
            }
        }
        out
    })
}

/// Force density `-H : ∇Q` at interior nodes.
pub fn elastic_force(h: &Field<QTensor>, qf: &Field<QTensor>) -> Field<Vec3> {
    let g = qf.grid;
    Field::from_nodes(g, |ijk| {
        if g.is_boundary(ijk) {
            return Vec3::ZERO;
        }
        let hx = h.at(ijk);
        let mut f = Vec3::ZERO;
        for i in 0..3 {
            f[i] = -hx.dot(&d1_at(qf, ijk, i));
        }
        f
    })
}

/// `Σ_interior h³ a·b`, the inner product for quantities that vanish on walls.
pub fn inner_interior<T: FieldValue>(a: &Field<T>, b: &Field<T>) -> f64 {
    let g = &a.grid;
    let h3 = g.h * g.h * g.h;
    let mut s = 0.0;
    for (i, (x, y)) in a.data.iter().zip(&b.data).enumerate() {
        if !g.is_boundary(g.unindex(i)) {
            s += x.dot(y);
        }
    }
    s * h3
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_sided_stencils_are_exact_for_quadratics() {
        let g = GridSpec::unit_cube(5);
        let f = Field::from_fn(g, |x| 3.0 * x[0] * x[0] - x[1] * x[2] + 2.0 * x[2]);
        for ijk in [[0, 0, 0], [5, 2, 5], [2, 3, 1]] {
            let x = g.coord(ijk);
            assert!((d1_at(&f, ijk, 0) - 6.0 * x[0]).abs() < 1e-12);
            assert!((d1_at(&f, ijk, 1) + x[2]).abs() < 1e-12);
            assert!((d2_at(&f, ijk, 0) - 6.0).abs() < 1e-10);
            assert!((d2_mixed_at(&f, ijk, 1, 2) + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_sine_converges() {
        let err = |n: usize| {
            let g = GridSpec::unit_cube(n);
            let f = Field::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).cos());
            let l = laplacian(&f);
            let exact = Field::from_fn(g, |x| -2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).cos());
            l.sub(&exact).max_norm()
        };
        let rate = (err(8) / err(16)).log2();
        assert!(rate > 1.8, "rate {rate}");
    }

    #[test]
    fn div_discrete_is_minus_adjoint_of_pressure_gradient() {
        let g = GridSpec::unit_cube(5);
        let mut u = Field::from_fn(g, |x| Vec3([x[1].sin(), x[0] * x[2], (x[0] + x[1]).cos()]));
        u.zero_boundary();
        let pf = Field::from_fn(g, |x| (2.0 * x[0]).cos() + x[1] * x[2] * x[2]);
        let lhs: f64 = grad_pressure(&pf).data.iter().zip(&u.data).map(|(a, b)| a.dot(b)).sum();
        let rhs: f64 = div_discrete(&u).data.iter().zip(&pf.data).map(|(a, b)| a * b).sum();
        assert!((lhs + rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn convection_is_energy_neutral() {
        let g = GridSpec::unit_cube(6);
        let mut u = Field::from_fn(g, |x| Vec3([(3.0 * x[1]).sin(), x[0] * x[2], (x[0] - x[1]).cos()]));
        u.zero_boundary();
        let n = convect_skew(&u);
        assert!(inner_interior(&n, &u).abs() < 1e-14);
    }

    #[test]
    fn flux_divergence_is_adjoint_of_velocity_gradient() {
        let g = GridSpec { periodic: [false, true, false], ..GridSpec::unit_cube(5) };
        let mut u = Field::from_fn(g, |x| Vec3([x[1].sin(), x[0] * x[2], (x[0] + x[1]).cos()]));
        u.zero_boundary();
        let flux = Field::from_fn(g, |x| Mat3::from_fn(|i, j| ((i + 2 * j) as f64 * x[0] + x[2]).sin()));
        let a = grad_sbp(&u).inner(&flux);
        let b = inner_interior(&u, &div_sbp(&flux));
        assert!((a + b).abs() < 1e-13);
    }
}
