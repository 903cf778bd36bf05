//! Smooth exact solutions on the unit cube used by the convergence ladders.

use std::f64::consts::PI;

use crate::grid::{Field, GridSpec, Vec3};
use crate::ldg::MaterialParams;
use crate::tensor::{Mat3, QTensor, Rank4Viscosity};

/// `φ(x) = sin(πx) sin(2πy) sin(πz)`, vanishing on the walls of `[0,1]³`.
#[derive(Debug, Clone, Copy)]
pub struct SinePotential;

const FREQ: [f64; 3] = [PI, 2.0 * PI, PI];

/// `d^m/dt^m sin(w t)`.
fn sin_deriv(w: f64, t: f64, m: usize) -> f64 {
    let phase = (w * t).sin();
    let quad = (w * t).cos();
    let v = match m % 4 {
        0 => phase,
        1 => quad,
        2 => -phase,
        _ => -quad,
    };
    v * w.powi(m as i32)
}

impl SinePotential {
    /// Mixed partial derivative with orders `alpha`.
    pub fn deriv(&self, x: [f64; 3], alpha: [usize; 3]) -> f64 {
        (0..3).map(|a| sin_deriv(FREQ[a], x[a], alpha[a])).product()
    }

    pub fn hessian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (k, row) in h.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                let mut a = [0; 3];
                a[k] += 1;
                a[l] += 1;
                *v = self.deriv(x, a);
            }
        }
        h
    }
}

/// Fixed amplitude of the manufactured order-parameter field.
pub fn q_amplitude() -> QTensor {
    QTensor::project(&Mat3([[0.4, 0.25, -0.1], [0.25, -0.3, 0.15], [-0.1, 0.15, -0.1]]))
}

/// Exact `Q*(x) = Q̂ φ(x)`.
pub fn elliptic_exact(grid: GridSpec) -> Field<QTensor> {
    let qh = q_amplitude();
    Field::from_fn(grid, |x| qh * SinePotential.deriv(x, [0, 0, 0]))
}

/// Continuum `L(Q*)` evaluated at the nodes.
pub fn elliptic_rhs(p: &MaterialParams, grid: GridSpec) -> Field<QTensor> {
    let qh = *q_amplitude().as_mat();
    let l23 = p.l23();
    Field::from_fn(grid, |x| {
        let h = SinePotential.hessian(x);
        let lap = h[0][0] + h[1][1] + h[2][2];
        let m = Mat3::from_fn(|a, b| (0..3).map(|k| qh[(a, k)] * h[k][b]).sum());
        let aniso = m + m.transpose() - Mat3::IDENTITY * (2.0 / 3.0 * m.trace());
        QTensor::project(&(qh * (-p.l1 * lap) - aniso * (0.5 * l23)))
    })
}

/// Coefficient matrix of the divergence-free velocity `u = curl(φ, φ, φ)`:
/// `u_i = Σ_a CURL[i][a] ∂_a φ`.
const CURL: [[f64; 3]; 3] = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];

/// Velocity potential `ψ = sin²(πx) sin²(πy) sin²(πz)`, whose gradient also
/// vanishes on the walls.
fn psi_deriv(x: [f64; 3], alpha: [usize; 3]) -> f64 {
    // sin²(πt) = (1 - cos 2πt)/2
    (0..3)
        .map(|a| {
            let w = 2.0 * PI;
            let t = x[a];
            match alpha[a] {
                0 => 0.5 * (1.0 - (w * t).cos()),
                m => -0.5 * {
                    let c = (w * t).cos();
                    let s = (w * t).sin();
                    let v = match m % 4 {
                        0 => c,
                        1 => -s,
                        2 => -c,
                        _ => s,
                    };
                    v * w.powi(m as i32)
                },
            }
        })
        .product()
}

pub fn stokes_velocity(x: [f64; 3]) -> Vec3 {
    let mut u = Vec3::ZERO;
    for i in 0..3 {
        for a in 0..3 {
            let mut al = [0; 3];
            al[a] = 1;
            u[i] += CURL[i][a] * psi_deriv(x, al);
        }
    }
    u
}

/// `∂_k ∂_l u_i`.
fn stokes_velocity_hessian(x: [f64; 3], i: usize, k: usize, l: usize) -> f64 {
    (0..3)
        .map(|a| {
            let mut al = [0; 3];
            al[a] += 1;
            al[k] += 1;
            al[l] += 1;
            CURL[i][a] * psi_deriv(x, al)
        })
        .sum()
}

pub fn stokes_pressure(x: [f64; 3]) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos() * (PI * x[2]).cos()
}

fn stokes_pressure_grad(x: [f64; 3]) -> Vec3 {
    let (c, s): (Vec<f64>, Vec<f64>) = (0..3).map(|a| ((PI * x[a]).cos(), (PI * x[a]).sin())).unzip();
    Vec3([
        -PI * s[0] * c[1] * c[2],
        -PI * c[0] * s[1] * c[2],
        -PI * c[0] * c[1] * s[2],
    ])
}

/// Body force `-∂_k(C^{kl}_{ij} ∂_l u*_j) + ∇p*` for a constant coefficient.
pub fn stokes_rhs(grid: GridSpec, coeff: &Rank4Viscosity) -> Field<Vec3> {
    let mut f = Field::from_fn(grid, |x| {
        let mut v = stokes_pressure_grad(x);
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        v[i] -= coeff.at(k, l, i, j) * stokes_velocity_hessian(x, j, k, l);
                    }
                }
            }
        }
        v
    });
    f.zero_boundary();
    f
}

pub fn stokes_exact(grid: GridSpec) -> Field<Vec3> {
    let mut u = Field::from_fn(grid, stokes_velocity);
    u.zero_boundary();
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_is_divergence_free_and_vanishes_on_walls() {
        for x in [[0.3, 0.7, 0.1], [0.55, 0.2, 0.9]] {
            let div: f64 = (0..3)
                .map(|i| {
                    let eps = 1e-6;
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += eps;
                    xm[i] -= eps;
                    (stokes_velocity(xp)[i] - stokes_velocity(xm)[i]) / (2.0 * eps)
                })
                .sum();
            assert!(div.abs() < 1e-7);
        }
        assert!(stokes_velocity([0.0, 0.4, 0.6]).norm() < 1e-15);
        assert!(stokes_velocity([0.3, 1.0, 0.6]).norm() < 1e-15);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let x = [0.31, 0.47, 0.73];
        let eps = 1e-4;
        for (k, l) in [(0, 0), (0, 2), (1, 2)] {
            let mut xpp = x;
            xpp[k] += eps;
            xpp[l] += eps;
            let mut xpm = x;
            xpm[k] += eps;
            xpm[l] -= eps;
            let mut xmp = x;
            xmp[k] -= eps;
            xmp[l] += eps;
            let mut xmm = x;
            xmm[k] -= eps;
            xmm[l] -= eps;
            for i in 0..3 {
                let fd = (stokes_velocity(xpp)[i] - stokes_velocity(xpm)[i] - stokes_velocity(xmp)[i] + stokes_velocity(xmm)[i]) / (4.0 * eps * eps);
                assert!((fd - stokes_velocity_hessian(x, i, k, l)).abs() < 1e-4 * (1.0 + fd.abs()));
            }
            let h = SinePotential.hessian(x);
            let phi = |y: [f64; 3]| SinePotential.deriv(y, [0, 0, 0]);
            let fd = (phi(xpp) - phi(xpm) - phi(xmp) + phi(xmm)) / (4.0 * eps * eps);
            assert!((fd - h[k][l]).abs() < 1e-4 * (1.0 + fd.abs()));
        }
    }
}
