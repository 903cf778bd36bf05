//! Generalized Stokes system `-∂_k((ν δ + Â) ∂_l u) + ∇p = f`, `div u = 0`,
//! `u = 0` on the walls.
//!
//! The isotropic part uses the compact Laplacian; the anisotropic remainder
//! uses a gradient that is one-sided on wall faces and its negative adjoint.

use crate::elliptic::{pressure_gauge, EllipticOptions};
use crate::error::{Error, Result};
use crate::grid::{Field, FieldValue, GridSpec, Vec3};
use crate::kernels::GridKernels;
use crate::krylov::{minres, norm, pcg, SolveStats};
use crate::ldg::MaterialParams;
use crate::par::{fill_chunks, map_indices};
use crate::tensor::{a_hat, QTensor, Rank4Viscosity};

/// Nodewise `ν δ + Â(Q)/Γ`. Fails if any node violates the Legendre bound
/// `λ_min ≥ ν - 1e-10`.
pub fn assemble_coefficient(p: &MaterialParams, qf: &Field<QTensor>) -> Result<Field<Rank4Viscosity>> {
    let coeff = assemble_coefficient_unchecked(p, qf)?;
    check_legendre(&coeff, p.nu - 1e-10)?;
    Ok(coeff)
}

pub fn assemble_coefficient_unchecked(p: &MaterialParams, qf: &Field<QTensor>) -> Result<Field<Rank4Viscosity>> {
    p.validate()?;
    Ok(qf.map(|q| a_hat(p.xi, q).scale(1.0 / p.gamma).add_scaled_identity(p.nu)))
}

/// Checks `λ_min(coeff) ≥ bound` at every node.
pub fn check_legendre(coeff: &Field<Rank4Viscosity>, bound: f64) -> Result<()> {
    let mins = map_indices(coeff.data.len(), |i| coeff.data[i].min_eigenvalue());
    for (i, m) in mins.iter().enumerate() {
        if !(*m >= bound) {
            return Err(Error::Contract(format!(
                "viscosity coefficient at node {:?} has minimal eigenvalue {m:e} below {bound:e}",
                coeff.grid.unindex(i)
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StokesProblem {
    /// Isotropic viscosity carried by the compact Laplacian.
    pub nu: f64,
    /// Total coefficient `ν δ + Â`.
    pub coeff: Field<Rank4Viscosity>,
    pub rhs: Field<Vec3>,
    /// Mass shift `σ` (adds `σ u`, e.g. `1/dt` in time stepping).
    pub shift: f64,
    pub opts: EllipticOptions,
    pub check_legendre: bool,
}

impl StokesProblem {
    pub fn new(nu: f64, coeff: Field<Rank4Viscosity>, rhs: Field<Vec3>) -> Self {
        StokesProblem {
            nu,
            coeff,
            rhs,
            shift: 0.0,
            opts: EllipticOptions::default(),
            check_legendre: true,
        }
    }

    /// Constant-coefficient problem `ν δ`.
    pub fn isotropic(nu: f64, rhs: Field<Vec3>) -> Self {
        let coeff = Field::constant(rhs.grid, Rank4Viscosity::scaled_identity(nu));
        StokesProblem::new(nu, coeff, rhs)
    }

    fn validate(&self) -> Result<()> {
        self.opts.validate()?;
        self.rhs.grid.validate()?;
        if !self.rhs.grid.has_walls() {
            return Err(Error::invalid("StokesProblem", "at least one wall axis is required"));
        }
        if !(self.nu > 0.0) || !(self.shift >= 0.0) {
            return Err(Error::invalid("StokesProblem", "need ν > 0 and a non-negative shift"));
        }
        if self.check_legendre {
            check_legendre(&self.coeff, self.nu - 1e-10)?;
        }
        Ok(())
    }
}

/// Velocity operator `σ u - ν Δ_h u - div_h((C - ν δ) : ∇_h u)` with `u`
/// vanishing on the walls. The anisotropic remainder uses the summation by
/// parts pair [`GridKernels::grad_sbp`] / [`GridKernels::add_div_sbp`].
#[derive(Debug, Clone)]
pub struct VelocityOperator {
    pub nu: f64,
    pub shift: f64,
    /// Anisotropic remainder `C - ν δ`, or `None` when it vanishes.
    pub extra: Option<Field<Rank4Viscosity>>,
    kernels: GridKernels,
}

impl VelocityOperator {
    pub fn new(nu: f64, shift: f64, coeff: &Field<Rank4Viscosity>) -> Self {
        let extra = coeff.map(|c| c.add_scaled_identity(-nu));
        let nonzero = extra.data.iter().any(|c| c.0.iter().flatten().any(|v| *v != 0.0));
        VelocityOperator {
            nu,
            shift,
            extra: nonzero.then_some(extra),
            kernels: GridKernels::new(coeff.grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.kernels.grid
    }

    /// `out = A u` on flat full-grid vectors (three entries per node).
    pub fn apply_flat(&self, u: &[f64], out: &mut [f64]) {
        let k = &self.kernels;
        k.shifted_laplacian(u, self.shift, self.nu, out);
        if let Some(extra) = &self.extra {
            let g = k.grad_sbp(u);
            let flux = map_indices(g.len(), |i| {
                let mut f = [0.0; 9];
                if k.walls[i] < 2 {
                    let c = &extra.data[i].0;
                    for (r, fr) in f.iter_mut().enumerate() {
                        *fr = c[r].iter().zip(&g[i]).map(|(a, b)| a * b).sum();
                    }
                }
                f
            });
            k.add_div_sbp(&flux, -1.0, out);
        }
    }

    pub fn apply(&self, u: &Field<Vec3>) -> Field<Vec3> {
        let mut uf = flatten(u);
        zero_walls(&self.kernels, &mut uf);
        let mut out = vec![0.0; uf.len()];
        self.apply_flat(&uf, &mut out);
        unflatten(u.grid, &out)
    }

    /// Diagonal of `A` per node and component, zero on walls.
    pub fn diagonal_flat(&self) -> Vec<f64> {
        let k = &self.kernels;
        let h2 = k.grid.h * k.grid.h;
        let base = self.shift + 6.0 * self.nu / h2;
        let mut d = vec![0.0; 3 * k.grid.len()];
        fill_chunks(&mut d, 3, |i, o| {
            if !k.is_interior(i) {
                return;
            }
            o.fill(base);
            if let Some(extra) = &self.extra {
                for a in 0..3 {
                    for &j in &k.nb[i][2 * a..2 * a + 2] {
                        let w = if k.is_interior(j) { 0.25 / h2 } else { 0.5 / h2 };
                        for (c, oc) in o.iter_mut().enumerate() {
                            *oc += extra.data[j].0[3 * c + a][3 * c + a] * w;
                        }
                    }
                }
            }
        });
        d
    }

    pub fn diagonal(&self) -> Field<Vec3> {
        unflatten(*self.grid(), &self.diagonal_flat())
    }

    /// Discrete `⟨A u, u⟩` over interior nodes.
    pub fn energy(&self, u: &Field<Vec3>) -> f64 {
        crate::fields::inner_interior(&self.apply(u), u)
    }
}

fn flatten<T: FieldValue>(f: &Field<T>) -> Vec<f64> {
    let mut out = vec![0.0; T::DIM * f.data.len()];
    for (v, c) in f.data.iter().zip(out.chunks_mut(T::DIM)) {
        v.write_to(c);
    }
    out
}

fn unflatten<T: FieldValue>(grid: GridSpec, v: &[f64]) -> Field<T> {
    Field {
        grid,
        data: v.chunks(T::DIM).map(T::read_from).collect(),
    }
}

fn zero_walls(k: &GridKernels, u: &mut [f64]) {
    for (i, c) in u.chunks_mut(3).enumerate() {
        if !k.is_interior(i) {
            c.fill(0.0);
        }
    }
}

fn pressure_mask(k: &GridKernels) -> Vec<bool> {
    k.walls.iter().map(|&w| w < 2).collect()
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: Field<Vec3>,
    pub p: Field<f64>,
    pub stats: SolveStats,
    /// `max |div_h u|` over all nodes.
    pub div_max: f64,
}

impl StokesSolution {
    fn zero(g: GridSpec) -> Self {
        StokesSolution {
            u: Field::zeros(g),
            p: Field::zeros(g),
            stats: SolveStats { iterations: 0, residual: 0.0, history: vec![] },
            div_max: 0.0,
        }
    }
}

/// `‖f - A u - G p‖ / reference` and `max |div_h u|`.
fn finish(op: &VelocityOperator, rhs: &[f64], u: &[f64], p: &[f64]) -> (f64, f64) {
    let k = &op.kernels;
    let mut r = vec![0.0; u.len()];
    op.apply_flat(u, &mut r);
    k.add_grad_p(p, 1.0, &mut r);
    let res = rhs.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>();
    let mut d = vec![0.0; p.len()];
    k.div(u, 1.0, &mut d);
    (norm(&res), d.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Solves the saddle-point system with preconditioned MINRES.
pub fn solve_stokes(prob: &StokesProblem) -> Result<StokesSolution> {
    prob.validate()?;
    let g = prob.rhs.grid;
    let op = VelocityOperator::new(prob.nu, prob.shift, &prob.coeff);
    let k = &op.kernels;
    let n = g.len();
    let nv = 3 * n;
    let mut f = flatten(&prob.rhs);
    zero_walls(k, &mut f);
    let reference = norm(&f);
    if reference == 0.0 {
        return Ok(StokesSolution::zero(g));
    }
    let mask = pressure_mask(k);
    let mut b = f.clone();
    b.resize(nv + n, 0.0);

    let apply = |x: &[f64], y: &mut [f64]| {
        let (u, p) = x.split_at(nv);
        let (yu, yp) = y.split_at_mut(nv);
        op.apply_flat(u, yu);
        k.add_grad_p(p, 1.0, yu);
        k.div(u, -1.0, yp);
        for (v, &m) in yp.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
    };
    let diag = op.diagonal_flat();
    let extra_scale = op.extra.as_ref().map_or(0.0, |e| {
        e.data.iter().map(|c| (0..9).map(|p| c.0[p][p]).sum::<f64>() / 9.0).sum::<f64>() / e.data.len() as f64
    });
    let p_scale = prob.nu + extra_scale + prob.shift * g.h * g.h;
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..nv {
            z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
        for i in 0..n {
            z[nv + i] = if mask[i] { r[nv + i] * p_scale } else { 0.0 };
        }
    };
    let mut x = vec![0.0; b.len()];
    let cap = prob.opts.max_iter.unwrap_or(10 * (nv + n));
    let mut stats = minres("solve_stokes", apply, precond, &b, &mut x, prob.opts.tol_rel, reference, cap)?;
    let u = unflatten::<Vec3>(g, &x[..nv]);
    let mut pf = Field { grid: g, data: x[nv..].to_vec() };
    pressure_gauge(&mut pf);
    let (res, div_max) = finish(&op, &f, &x[..nv], &pf.data);
    stats.residual = res / reference;
    Ok(StokesSolution { u, p: pf, stats, div_max })
}

fn solve_velocity_flat(op: &VelocityOperator, b: &[f64], x: &mut [f64], tol: f64, max_iter: Option<usize>) -> Result<SolveStats> {
    let reference = norm(b);
    if reference == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0, history: vec![] });
    }
    let diag = op.diagonal_flat();
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let apply = |v: &[f64], y: &mut [f64]| op.apply_flat(v, y);
    pcg("solve_velocity", apply, precond, b, x, tol, reference, max_iter.unwrap_or(10 * b.len()))
}

/// Solves the velocity block `A u = f` alone (no constraint) by Jacobi-PCG.
pub fn solve_velocity(op: &VelocityOperator, rhs: &Field<Vec3>, opts: &EllipticOptions, guess: Option<&Field<Vec3>>) -> Result<(Field<Vec3>, SolveStats)> {
    opts.validate()?;
    let mut b = flatten(rhs);
    zero_walls(&op.kernels, &mut b);
    let mut x = guess.map_or_else(|| vec![0.0; b.len()], flatten);
    zero_walls(&op.kernels, &mut x);
    let stats = solve_velocity_flat(op, &b, &mut x, opts.tol_rel, opts.max_iter)?;
    Ok((unflatten(rhs.grid, &x), stats))
}

/// Uzawa iteration: conjugate gradients on the pressure Schur complement
/// `Gᵀ A⁻¹ G p = Gᵀ A⁻¹ f` with inner velocity solves.
pub fn solve_stokes_uzawa(prob: &StokesProblem) -> Result<StokesSolution> {
    prob.validate()?;
    let g = prob.rhs.grid;
    let op = VelocityOperator::new(prob.nu, prob.shift, &prob.coeff);
    let k = &op.kernels;
    let n = g.len();
    let mask = pressure_mask(k);
    let inner_tol = (prob.opts.tol_rel * 1e-3).max(1e-15);
    let mut f = flatten(&prob.rhs);
    zero_walls(k, &mut f);
    let reference = norm(&f);
    if reference == 0.0 {
        return Ok(StokesSolution::zero(g));
    }
    // -Gᵀ A⁻¹ v restricted to pressure nodes
    let schur_of = |v: &[f64]| -> Result<Vec<f64>> {
        let mut w = vec![0.0; v.len()];
        solve_velocity_flat(&op, v, &mut w, inner_tol, prob.opts.max_iter)?;
        let mut d = vec![0.0; n];
        k.div(&w, -1.0, &mut d);
        for (v, &m) in d.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(d)
    };
    let b = schur_of(&f)?;
    let failure = std::cell::RefCell::new(None);
    let apply = |v: &[f64], y: &mut [f64]| {
        let mut gp = vec![0.0; 3 * n];
        k.add_grad_p(v, 1.0, &mut gp);
        match schur_of(&gp) {
            Ok(s) => y.copy_from_slice(&s),
            Err(e) => {
                y.fill(0.0);
                failure.borrow_mut().get_or_insert(e);
            }
        }
    };
    let mut x = vec![0.0; n];
    let bnorm = norm(&b);
    let cap = prob.opts.max_iter.unwrap_or(10 * n);
    let outer = if bnorm > 0.0 {
        pcg("solve_stokes_uzawa", apply, |r: &[f64], z: &mut [f64]| z.copy_from_slice(r), &b, &mut x, prob.opts.tol_rel, bnorm, cap)
    } else {
        Ok(SolveStats { iterations: 0, residual: 0.0, history: vec![] })
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut stats = outer?;
    let mut pf = Field { grid: g, data: x };
    pressure_gauge(&mut pf);
    let mut rhs_u = f.clone();
    k.add_grad_p(&pf.data, -1.0, &mut rhs_u);
    let mut u = vec![0.0; 3 * n];
    solve_velocity_flat(&op, &rhs_u, &mut u, inner_tol, prob.opts.max_iter)?;
    let (res, div_max) = finish(&op, &f, &u, &pf.data);
    stats.residual = res / reference;
    Ok(StokesSolution { u: unflatten(g, &u), p: pf, stats, div_max })
}
