//! Flat-array stencil kernels for the velocity/pressure operators.
//!
//! Velocity vectors hold three components per node and pressure vectors one;
//! both cover every grid node, with wall entries of the velocity held at
//! zero.

use crate::grid::GridSpec;
use crate::par::fill_chunks;

pub const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct GridKernels {
    pub grid: GridSpec,
    /// `nb[i][2a]` / `nb[i][2a+1]`: neighbour along `-e_a` / `+e_a`.
    pub nb: Vec<[usize; 6]>,
    /// Number of wall axes per node.
    pub walls: Vec<u8>,
    /// Per axis: -1 on the low wall, +1 on the high wall, 0 otherwise.
    pub side: Vec<[i8; 3]>,
}

impl GridKernels {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.len();
        let mut nb = vec![[NONE; 6]; n];
        let mut walls = vec![0u8; n];
        let mut side = vec![[0i8; 3]; n];
        for i in 0..n {
            let ijk = grid.unindex(i);
            for a in 0..3 {
                nb[i][2 * a] = grid.shift(ijk, a, -1).map_or(NONE, |x| grid.index(x));
                nb[i][2 * a + 1] = grid.shift(ijk, a, 1).map_or(NONE, |x| grid.index(x));
                if grid.at_wall(a, ijk[a]) {
                    walls[i] += 1;
                    side[i][a] = if ijk[a] == 0 { -1 } else { 1 };
                }
            }
        }
        GridKernels { grid, nb, walls, side }
    }

    #[inline]
    pub fn is_interior(&self, i: usize) -> bool {
        self.walls[i] == 0
    }

    /// `out = shift·u - ν Δ_h u` at interior nodes (compact stencil), zero on
    /// walls.
    pub fn shifted_laplacian(&self, u: &[f64], shift: f64, nu: f64, out: &mut [f64]) {
        let ih2 = 1.0 / (self.grid.h * self.grid.h);
        fill_chunks(out, 3, |i, o| {
            if !self.is_interior(i) {
                o.fill(0.0);
                return;
            }
            let nbi = &self.nb[i];
            for c in 0..3 {
                let centre = u[3 * i + c];
                let mut s = -6.0 * centre;
                for &j in nbi {
                    s += u[3 * j + c];
                }
                o[c] = shift * centre - nu * s * ih2;
            }
        });
    }

    /// Gradient of a velocity vanishing on the walls: central in the
    /// interior, first-order one-sided along the normal on wall faces, zero
    /// on wall edges and corners. Layout `g[3i+j] = ∂_j u_i`.
    pub fn grad_sbp(&self, u: &[f64]) -> Vec<[f64; 9]> {
        let h = self.grid.h;
        crate::par::map_indices(self.nb.len(), |i| {
            let mut g = [0.0; 9];
            if self.walls[i] >= 2 {
                return g;
            }
            for a in 0..3 {
                let (m, p) = (self.nb[i][2 * a], self.nb[i][2 * a + 1]);
                for c in 0..3 {
                    g[3 * c + a] = match self.side[i][a] {
                        0 => (u[3 * p + c] - u[3 * m + c]) / (2.0 * h),
                        -1 => (u[3 * p + c] - u[3 * i + c]) / h,
                        _ => (u[3 * i + c] - u[3 * m + c]) / h,
                    };
                }
            }
            g
        })
    }

    /// `out += scale · div F` at interior nodes with central differences of
    /// the flux, reading wall-face fluxes; the negative adjoint of
    /// [`GridKernels::grad_sbp`] under trapezoidal weights.
    pub fn add_div_sbp(&self, flux: &[[f64; 9]], scale: f64, out: &mut [f64]) {
        let s = scale / (2.0 * self.grid.h);
        fill_chunks(out, 3, |i, o| {
            if !self.is_interior(i) {
                return;
            }
            for a in 0..3 {
                let (m, p) = (self.nb[i][2 * a], self.nb[i][2 * a + 1]);
                for c in 0..3 {
                    o[c] += s * (flux[p][3 * c + a] - flux[m][3 * c + a]);
                }
            }
        });
    }

    /// `out += scale · G p` at interior nodes.
    pub fn add_grad_p(&self, p: &[f64], scale: f64, out: &mut [f64]) {
        let s = scale / (2.0 * self.grid.h);
        fill_chunks(out, 3, |i, o| {
            if !self.is_interior(i) {
                return;
            }
            for a in 0..3 {
                o[a] += s * (p[self.nb[i][2 * a + 1]] - p[self.nb[i][2 * a]]);
            }
        });
    }

    /// `out = scale · div u` at every node, `u` extended by zero.
    pub fn div(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let s = scale / (2.0 * self.grid.h);
        fill_chunks(out, 1, |i, o| {
            let mut d = 0.0;
            for a in 0..3 {
                let (m, p) = (self.nb[i][2 * a], self.nb[i][2 * a + 1]);
                if p != NONE {
                    d += u[3 * p + a];
                }
                if m != NONE {
                    d -= u[3 * m + a];
                }
            }
            o[0] = s * d;
        });
    }

    /// Trapezoidal weight of each node.
    pub fn weights(&self) -> Vec<f64> {
        let h3 = self.grid.h.powi(3);
        self.walls.iter().map(|&w| h3 * 0.5f64.powi(w as i32)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::dot;

    fn sample(g: &GridSpec, dim: usize, seed: f64, zero_walls: bool) -> Vec<f64> {
        let k = GridKernels::new(*g);
        (0..g.len() * dim)
            .map(|i| {
                if zero_walls && !k.is_interior(i / dim) {
                    0.0
                } else {
                    ((i as f64) * 0.37 + seed).sin()
                }
            })
            .collect()
    }

    #[test]
    fn sbp_divergence_is_adjoint_of_gradient() {
        for g in [GridSpec::unit_cube(5), GridSpec { periodic: [true, false, true], ..GridSpec::unit_cube(6) }] {
            let k = GridKernels::new(g);
            let u = sample(&g, 3, 0.3, true);
            let mut flux: Vec<[f64; 9]> = (0..g.len())
                .map(|i| std::array::from_fn(|c| ((i * 9 + c) as f64 * 0.13).cos()))
                .collect();
            for (i, f) in flux.iter_mut().enumerate() {
                if k.walls[i] >= 2 {
                    *f = [0.0; 9];
                }
            }
            let w = k.weights();
            let gu = k.grad_sbp(&u);
            let lhs: f64 = (0..g.len()).map(|i| w[i] * gu[i].iter().zip(&flux[i]).map(|(a, b)| a * b).sum::<f64>()).sum();
            let mut d = vec![0.0; 3 * g.len()];
            k.add_div_sbp(&flux, 1.0, &mut d);
            let rhs = g.h.powi(3) * dot(&u, &d);
            assert!((lhs + rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn pressure_gradient_is_adjoint_of_divergence() {
        let g = GridSpec::unit_cube(5);
        let k = GridKernels::new(g);
        let u = sample(&g, 3, 1.1, true);
        let p = sample(&g, 1, 0.7, false);
        let mut gp = vec![0.0; 3 * g.len()];
        k.add_grad_p(&p, 1.0, &mut gp);
        let mut du = vec![0.0; g.len()];
        k.div(&u, 1.0, &mut du);
        assert!((dot(&gp, &u) + dot(&du, &p)).abs() < 1e-12);
    }
}
