//! Solvers for the anisotropic elliptic system `(σ + L) Q = F` with strong
//! anchoring, and the discrete Leray projection.

use crate::error::{Error, Result};
use crate::fields::l_op_apply;
use crate::grid::{BoundaryData, Field, FieldValue, GridSpec, Vec3};
use crate::kernels::GridKernels;
use crate::krylov::{norm, pcg, SolveStats};
use crate::ldg::MaterialParams;
use crate::tensor::QTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    /// Inverse diagonal of the `L1` Laplacian part.
    JacobiL1Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticOptions {
    pub tol_rel: f64,
    /// Defaults to ten times the unknown count.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        EllipticOptions {
            tol_rel: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::JacobiL1Laplacian,
        }
    }
}

impl EllipticOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0 && self.tol_rel.is_finite()) {
            return Err(Error::invalid("EllipticOptions", "tol_rel must be positive"));
        }
        Ok(())
    }

    fn iteration_cap(&self, unknowns: usize) -> usize {
        self.max_iter.unwrap_or(10 * unknowns.max(1))
    }
}

/// Solves `L_h Q = f` at interior nodes with `Q = g` on the walls.
pub fn solve_l(
    p: &MaterialParams,
    f: &Field<QTensor>,
    bc: &BoundaryData,
    opts: &EllipticOptions,
) -> Result<(Field<QTensor>, SolveStats)> {
    solve_shifted(p, 0.0, f, bc, opts, None)
}

/// Solves `(shift·I + L_h) Q = f` at interior nodes with `Q = g` on the
/// walls, starting from `guess` when given.
pub fn solve_shifted(
    p: &MaterialParams,
    shift: f64,
    f: &Field<QTensor>,
    bc: &BoundaryData,
    opts: &EllipticOptions,
    guess: Option<&Field<QTensor>>,
) -> Result<(Field<QTensor>, SolveStats)> {
    p.validate()?;
    opts.validate()?;
    let grid = f.grid;
    grid.validate()?;
    if shift < 0.0 || !shift.is_finite() {
        return Err(Error::invalid("solve_l", "shift must be non-negative"));
    }
    if shift == 0.0 && !grid.has_walls() {
        return Err(Error::invalid("solve_l", "fully periodic problem without shift is singular"));
    }
    let interior = grid.interior_indices();

    let mut lift = Field::<QTensor>::zeros(grid);
    bc.apply(&mut lift);
    let apply_full = |q: &Field<QTensor>| -> Field<QTensor> {
        let l = l_op_apply(p, q);
        if shift == 0.0 {
            l
        } else {
            l.zip_map(q, |a, b| *a + *b * shift)
        }
    };
    let b = f.sub(&apply_full(&lift)).pack(&interior);
    let reference = {
        let fr = norm(&f.pack(&interior));
        if fr > 0.0 {
            fr
        } else {
            norm(&b)
        }
    };

    if reference == 0.0 {
        return Ok((lift, SolveStats { iterations: 0, residual: 0.0, history: vec![] }));
    }

    let mut x = match guess {
        Some(g) => g.pack(&interior),
        None => vec![0.0; b.len()],
    };
    let apply = |v: &[f64], out: &mut [f64]| {
        let mut q = Field::<QTensor>::zeros(grid);
        q.unpack(&interior, v);
        out.copy_from_slice(&apply_full(&q).pack(&interior));
    };
    let diag = shift + 2.0 * p.l1 * 3.0 / (grid.h * grid.h);
    let precond = |r: &[f64], z: &mut [f64]| match opts.preconditioner {
        Preconditioner::None => z.copy_from_slice(r),
        Preconditioner::JacobiL1Laplacian => {
            for (zi, ri) in z.iter_mut().zip(r) {
                *zi = ri / diag;
            }
        }
    };
    let mut stats = pcg("solve_l", apply, precond, &b, &mut x, opts.tol_rel, reference, opts.iteration_cap(b.len()))?;

    let mut q = lift;
    q.unpack(&interior, &x);
    let res = f.sub(&apply_full(&q));
    stats.residual = norm(&res.pack(&interior)) / reference;
    Ok((q, stats))
}

/// Pressure nodes that couple to the interior velocity: everything except
/// wall edges and corners.
pub fn pressure_nodes(grid: &GridSpec) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.wall_count(grid.unindex(i)) < 2).collect()
}

/// Removes the kernel of the discrete pressure gradient: zero on wall edges
/// and corners, zero mean over each parity class of the remaining nodes.
pub fn pressure_gauge(q: &mut Field<f64>) {
    gauge_flat(&q.grid, &mut q.data);
}

fn gauge_flat(g: &GridSpec, q: &mut [f64]) {
    let counts_parity = |a: usize| !g.periodic[a] || g.n[a].is_multiple_of(2);
    let class = |ijk: [usize; 3]| -> usize {
        (0..3).filter(|&a| counts_parity(a)).map(|a| (ijk[a] % 2) << a).sum()
    };
    let mut sum = [0.0; 8];
    let mut cnt = [0usize; 8];
    for (i, v) in q.iter_mut().enumerate() {
        let ijk = g.unindex(i);
        if g.wall_count(ijk) >= 2 {
            *v = 0.0;
            continue;
        }
        sum[class(ijk)] += *v;
        cnt[class(ijk)] += 1;
    }
    for (i, v) in q.iter_mut().enumerate() {
        let ijk = g.unindex(i);
        if g.wall_count(ijk) < 2 {
            let c = class(ijk);
            *v -= sum[c] / cnt[c] as f64;
        }
    }
}

/// Leray projection `(u - ∇q, q)` with the default tolerance `1e-12`.
pub fn leray_project(uf: &Field<Vec3>) -> Result<(Field<Vec3>, Field<f64>)> {
    leray_project_with(uf, &EllipticOptions { tol_rel: 1e-12, ..EllipticOptions::default() })
}

/// Orthogonal projection onto discretely divergence-free fields: solves
/// `Gᵀ G q = Gᵀ u` and returns `(u - G q, q)`.
pub fn leray_project_with(uf: &Field<Vec3>, opts: &EllipticOptions) -> Result<(Field<Vec3>, Field<f64>)> {
    opts.validate()?;
    let grid = uf.grid;
    let scale = uf.max_norm();
    if uf.boundary_max_norm() > 1e-12 * scale.max(1.0) {
        return Err(Error::invalid("leray_project", "velocity must vanish on the walls"));
    }
    let k = GridKernels::new(grid);
    let mask: Vec<bool> = k.walls.iter().map(|&w| w < 2).collect();
    let mut u = vec![0.0; 3 * grid.len()];
    for (i, c) in u.chunks_mut(3).enumerate() {
        if k.is_interior(i) {
            uf.data[i].write_to(c);
        }
    }
    let mut b = vec![0.0; grid.len()];
    k.div(&u, -1.0, &mut b);
    // divergence entries scale like |u|/h
    let reference = norm(&u) / grid.h;
    let mut q = Field::<f64>::zeros(grid);
    if norm(&b) > opts.tol_rel * reference {
        let mut gp = vec![0.0; 3 * grid.len()];
        let apply = |v: &[f64], out: &mut [f64]| {
            let mut gp = vec![0.0; 3 * grid.len()];
            k.add_grad_p(v, 1.0, &mut gp);
            k.div(&gp, -1.0, out);
            for (o, &m) in out.iter_mut().zip(&mask) {
                if !m {
                    *o = 0.0;
                }
            }
        };
        pcg(
            "leray_project",
            apply,
            |r: &[f64], z: &mut [f64]| {
                z.copy_from_slice(r);
                gauge_flat(&grid, z);
            },
            &b,
            &mut q.data,
            opts.tol_rel,
            reference,
            opts.iteration_cap(b.len()),
        )?;
        pressure_gauge(&mut q);
        gp.fill(0.0);
        k.add_grad_p(&q.data, -1.0, &mut gp);
        for (i, c) in u.chunks_mut(3).enumerate() {
            for (x, d) in c.iter_mut().zip(&gp[3 * i..3 * i + 3]) {
                *x += d;
            }
        }
    }
    let out = Field {
        grid,
        data: (0..grid.len()).map(|i| if k.is_interior(i) { Vec3::read_from(&u[3 * i..3 * i + 3]) } else { uf.data[i] }).collect(),
    };
    Ok((out, q))
}
