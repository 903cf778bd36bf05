//! Matrix-free Krylov solvers on flat vectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual, recomputed from scratch.
    pub residual: f64,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

fn true_residual(apply: &impl Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator. Stops when `‖b - Ax‖ ≤ tol · reference`.
#[allow(clippy::too_many_arguments)]
pub fn pcg(
    solver: &'static str,
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    reference: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let mut r = true_residual(&apply, b, x);
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let mut history = Vec::new();
    let mut rel = norm(&r) / reference;
    if rel <= tol {
        return Ok(SolveStats { iterations: 0, residual: rel, history });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NoConvergence {
                solver,
                iterations: it,
                residual: rel,
                history,
            });
        }
        let alpha = rz / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        rel = norm(&r) / reference;
        history.push(rel);
        if rel <= tol {
            let residual = norm(&true_residual(&apply, b, x)) / reference;
            return Ok(SolveStats { iterations: it, residual, history });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NoConvergence {
        solver,
        iterations: max_iter,
        residual: rel,
        history,
    })
}

/// Preconditioned MINRES for a symmetric (possibly indefinite or singular
/// but consistent) operator with a symmetric positive definite
/// preconditioner. Restarts while the true residual exceeds the target.
#[allow(clippy::too_many_arguments)]
pub fn minres(
    solver: &'static str,
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    reference: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let mut history = Vec::new();
    let mut total = 0;
    let mut inner_tol = tol;
    loop {
        let r0 = true_residual(&apply, b, x);
        let rel = norm(&r0) / reference;
        if rel <= tol {
            return Ok(SolveStats { iterations: total, residual: rel, history });
        }
        if total >= max_iter {
            return Err(Error::NoConvergence {
                solver,
                iterations: total,
                residual: rel,
                history,
            });
        }
        let mut dx = vec![0.0; b.len()];
        let its = minres_cycle(&apply, &precond, &r0, &mut dx, inner_tol * reference / norm(&r0).max(f64::MIN_POSITIVE), max_iter - total, reference, &mut history);
        total += its;
        axpy(x, 1.0, &dx);
        inner_tol *= 0.1;
    }
}

/// One MINRES run on `A dx = r0` from `dx = 0`; returns the iteration count.
#[allow(clippy::too_many_arguments)]
fn minres_cycle(
    apply: &impl Fn(&[f64], &mut [f64]),
    precond: &impl Fn(&[f64], &mut [f64]),
    r0: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
    reference: f64,
    history: &mut Vec<f64>,
) -> usize {
    let n = r0.len();
    let mut r1 = r0.to_vec();
    let mut y = vec![0.0; n];
    precond(&r1, &mut y);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return 0;
    }
    let r0_norm = norm(r0);
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    for it in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply(&v, &mut y);
        if it >= 2 {
            axpy(&mut y, -beta / oldb, &r1);
        }
        let alfa = dot(&v, &y);
        axpy(&mut y, -alfa / beta, &r2);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        // preconditioned residual estimate rescaled to the unpreconditioned norm
        let est = phibar / beta1;
        history.push(est * r0_norm / reference);
        if est <= rtol || beta == 0.0 {
            return it;
        }
    }
    max_iter
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - l - r;
        }
    }

    #[test]
    fn cg_solves_tridiagonal_system() {
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        let st = pcg("test", laplace_1d, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, norm(&b), 500).unwrap();
        assert!(st.residual <= 1e-12);
        let mut ax = vec![0.0; 50];
        laplace_1d(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(a, c)| (a - c).abs() < 1e-10));
    }

    #[test]
    fn minres_solves_indefinite_system() {
        // diag(1..20) - 10.5 I is symmetric indefinite
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = (i as f64 + 1.0 - 10.5) * x[i] + if i > 0 { 0.3 * x[i - 1] } else { 0.0 } + if i + 1 < x.len() { 0.3 * x[i + 1] } else { 0.0 };
            }
        };
        let b: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mut x = vec![0.0; 20];
        let st = minres("test", apply, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-12, norm(&b), 200).unwrap();
        assert!(st.residual <= 1e-12);
    }

    #[test]
    fn cg_reports_non_convergence() {
        let b = vec![1.0; 100];
        let mut x = vec![0.0; 100];
        let err = pcg("test", laplace_1d, |r, z| z.copy_from_slice(r), &b, &mut x, 1e-14, 10.0, 3).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }
}
