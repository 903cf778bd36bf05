//! First-order semi-implicit time stepping of the coupled system
//!
//! ```text
//! ∂_t Q + u·∇Q = Γ H(Q) + T(Q, ∇u)
//! ∂_t u + u·∇u = ν Δu + ∇·(-S_Q(H) + QH - HQ) - H:∇Q - ∇p,   ∇·u = 0
//! ```
//!
//! with `Q` anchored on the walls and no-slip velocity. One step performs an
//! implicit elliptic solve for `Q`, an implicit viscous solve for `u` with
//! coefficient `ν δ + Â(Q)/Γ`, and an exact discrete projection.

use crate::elliptic::{leray_project, solve_shifted, EllipticOptions};
use crate::error::{Error, Result};
use crate::fields::{
    advect_q, bulk_energy, convect_skew, div_discrete, div_sbp, elastic_energy, elastic_force, grad_norm_sq,
    grad_sbp, grad_vec, inner_interior, kinetic_energy, molecular_field,
};
use crate::grid::{BoundaryData, Field, Vec3};
use crate::ldg::{bulk_derivative, MaterialParams};
use crate::stokes::{assemble_coefficient_unchecked, solve_velocity, VelocityOperator};
use crate::tensor::{commutator, s_q, t_tensor, Mat3, QTensor};

/// Energies and dissipation rates of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub f_bulk: f64,
    pub f_elastic: f64,
    pub kinetic: f64,
    /// `∫ |∇u|²`.
    pub dissipation_viscous: f64,
    /// `∫ |H|²` over the interior plus `∫ |T(Q, ∇u)|²/Γ²` over the wall
    /// faces.
    pub dissipation_rotational: f64,
    /// `[E(next) - E(prev)]/dt + ν D_visc + Γ D_rot` with dissipations
    /// averaged over the two states; zero for an initial snapshot.
    pub energy_law_residual: f64,
}

impl EnergyReport {
    /// `E = F + ½∫|u|²`.
    pub fn total(&self) -> f64 {
        self.f_bulk + self.f_elastic + self.kinetic
    }

    pub fn is_finite(&self) -> bool {
        [
            self.f_bulk,
            self.f_elastic,
            self.kinetic,
            self.dissipation_viscous,
            self.dissipation_rotational,
            self.energy_law_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Field<Vec3>,
    pub q: Field<QTensor>,
    pub p: Field<f64>,
    pub diagnostics: EnergyReport,
}

impl SimState {
    pub fn new(p: &MaterialParams, u: Field<Vec3>, q: Field<QTensor>) -> Self {
        let grid = q.grid;
        let mut s = SimState {
            t: 0.0,
            u,
            q,
            p: Field::zeros(grid),
            diagnostics: EnergyReport::default(),
        };
        s.diagnostics = snapshot_energies(p, &s);
        s
    }

    /// `max_x |tr Q(x)|`.
    pub fn trace_max(&self) -> f64 {
        self.q.data.iter().fold(0.0_f64, |m, q| m.max(q.as_mat().trace().abs()))
    }

    pub fn div_max(&self) -> f64 {
        div_discrete(&self.u).max_norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub dt: f64,
    pub scheme: Scheme,
    /// Reject steps with `|u|_max dt / h > 0.5`.
    pub cfl_check: bool,
    /// Abort when the total energy grows by more than this relative amount
    /// in one step.
    pub energy_guard: Option<f64>,
    /// Keep `u ≡ 0` (pure gradient flow of `Q`).
    pub freeze_flow: bool,
    pub solver: EllipticOptions,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            cfl_check: true,
            energy_guard: None,
            freeze_flow: false,
            solver: EllipticOptions {
                tol_rel: 1e-12,
                ..EllipticOptions::default()
            },
        }
    }
}

impl StepperOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("StepperOptions", "dt must be positive"));
        }
        if let Some(g) = self.energy_guard {
            if !(g >= 0.0) {
                return Err(Error::invalid("StepperOptions", "energy_guard must be non-negative"));
            }
        }
        self.solver.validate()
    }
}

/// Energies and dissipation rates of a single state.
pub fn snapshot_energies(p: &MaterialParams, s: &SimState) -> EnergyReport {
    let h = molecular_field(p, &s.q);
    EnergyReport {
        f_bulk: bulk_energy(p, &s.q),
        f_elastic: elastic_energy(p, &s.q),
        kinetic: kinetic_energy(&s.u),
        dissipation_viscous: grad_norm_sq(&s.u),
        dissipation_rotational: inner_interior(&h, &h) + wall_rotational(p, &s.u, &s.q),
        energy_law_residual: 0.0,
    }
}

/// `Σ w |T(Q, ∇u)|²/Γ²` over wall-face nodes, with the one-sided wall
/// gradient of the velocity.
fn wall_rotational(p: &MaterialParams, u: &Field<Vec3>, q: &Field<QTensor>) -> f64 {
    let g = q.grid;
    if !g.has_walls() || u.max_norm() == 0.0 {
        return 0.0;
    }
    let gu = grad_sbp(u);
    let mut s = 0.0;
    for i in g.boundary_indices() {
        let ijk = g.unindex(i);
        if g.wall_count(ijk) == 1 {
            let t = t_tensor(p.xi, &q.data[i], &gu.data[i]);
            s += g.weight(ijk) * t.as_mat().norm().powi(2);
        }
    }
    s / (p.gamma * p.gamma)
}

/// Energy report of `s_next` including the energy-law residual against
/// `s_prev`.
pub fn energy_report(p: &MaterialParams, s_prev: &SimState, s_next: &SimState, dt: f64) -> EnergyReport {
    let a = snapshot_energies(p, s_prev);
    let mut b = snapshot_energies(p, s_next);
    let dv = 0.5 * (a.dissipation_viscous + b.dissipation_viscous);
    let dr = 0.5 * (a.dissipation_rotational + b.dissipation_rotational);
    b.energy_law_residual = (b.total() - a.total()) / dt + p.nu * dv + p.gamma * dr;
    b
}

/// Largest boundary value of `Γ H(Q0) + T(Q0, ∇u0) - u0·∇Q0`, the right side
/// of the `Q` equation, whose trace must vanish for compatible initial data.
pub fn compatibility_residual(p: &MaterialParams, u0: &Field<Vec3>, q0: &Field<QTensor>, bc: &BoundaryData) -> Result<f64> {
    p.validate()?;
    let g = q0.grid;
    let scale = u0.max_norm();
    if u0.boundary_max_norm() > 0.0 {
        return Err(Error::invalid("compatibility_residual", "u0 must vanish on the walls"));
    }
    let div = div_discrete(u0).norm_l2();
    if div > (1e-8_f64).max(10.0 * g.h * g.h * u0.norm_l2()) {
        return Err(Error::invalid("compatibility_residual", format!("u0 is not divergence free (‖div u0‖ = {div:e}, max |u0| = {scale:e})")));
    }
    if bc.mismatch(q0) > 1e-12 {
        return Err(Error::invalid("compatibility_residual", "q0 does not match the anchoring data"));
    }
    let h = molecular_field(p, q0);
    let gu = grad_vec(u0);
    let mut worst = 0.0_f64;
    for i in g.boundary_indices() {
        let ijk = g.unindex(i);
        let adv = (0..3).fold(QTensor::ZERO, |acc, k| acc + crate::fields::d1_at(q0, ijk, k) * u0.data[i][k]);
        let r = h.data[i] * p.gamma + t_tensor(p.xi, &q0.data[i], &gu.data[i]) - adv;
        worst = worst.max(r.as_mat().norm());
    }
    Ok(worst)
}

/// One semi-implicit step.
pub fn step(p: &MaterialParams, s: &SimState, bc: &BoundaryData, opts: &StepperOptions) -> Result<SimState> {
    p.validate()?;
    opts.validate()?;
    let grid = s.q.grid;
    let dt = opts.dt;
    if opts.cfl_check {
        let cfl = s.u.max_norm() * dt / grid.h;
        if cfl > 0.5 {
            return Err(Error::Contract(format!("CFL number {cfl:.3} exceeds 0.5")));
        }
    }

    // (1) Q-update: (I/(Γdt) + L) Q' = Q/(Γdt) - J(Q) + (T(Q,∇u) - u·∇Q)/Γ
    let gu = grad_sbp(&s.u);
    let adv = advect_q(&s.u, &s.q);
    let shift = 1.0 / (p.gamma * dt);
    let rhs_q = Field::from_nodes(grid, |ijk| {
        let i = grid.index(ijk);
        let q = &s.q.data[i];
        let coupling = t_tensor(p.xi, q, &gu.data[i]) - adv.data[i];
        *q * shift - bulk_derivative(p, q) + coupling * (1.0 / p.gamma)
    });
    let (q_next, _) = solve_shifted(p, shift, &rhs_q, bc, &opts.solver, Some(&s.q))?;

    // (2) velocity predictor and (3) projection
    let (u_next, p_next) = if opts.freeze_flow {
        (Field::zeros(grid), Field::zeros(grid))
    } else {
        let adv_next = advect_q(&s.u, &q_next);
        let inv_g = 1.0 / p.gamma;
        let flux = Field::from_nodes(grid, |ijk| {
            if grid.wall_count(ijk) >= 2 {
                return Mat3::ZERO;
            }
            let i = grid.index(ijk);
            let qn = &q_next.data[i];
            let m = (*qn - s.q.data[i]) * (1.0 / dt) + adv_next.data[i];
            (-*s_q(p.xi, qn, m.as_mat()).as_mat() + commutator(qn.as_mat(), m.as_mat())) * inv_g
        });
        let h_next = molecular_field(p, &q_next);
        let force = elastic_force(&h_next, &q_next);
        let conv = convect_skew(&s.u);
        let gp = crate::fields::grad_pressure(&s.p);
        let div_f = div_sbp(&flux);
        let rhs_u = Field::from_nodes(grid, |ijk| {
            if grid.is_boundary(ijk) {
                return Vec3::ZERO;
            }
            let i = grid.index(ijk);
            s.u.data[i] * (1.0 / dt) - conv.data[i] + div_f.data[i] + force.data[i] - gp.data[i]
        });
        let coeff = assemble_coefficient_unchecked(p, &q_next)?;
        let op = VelocityOperator::new(p.nu, 1.0 / dt, &coeff);
        let (u_star, _) = solve_velocity(&op, &rhs_u, &opts.solver, Some(&s.u))?;
        let (u_proj, phi) = leray_project(&u_star)?;
        let mut p_next = s.p.clone();
        p_next.axpy(1.0 / dt, &phi);
        crate::elliptic::pressure_gauge(&mut p_next);
        (u_proj, p_next)
    };

    let mut next = SimState {
        t: s.t + dt,
        u: u_next,
        q: q_next,
        p: p_next,
        diagnostics: EnergyReport::default(),
    };
    next.diagnostics = energy_report(p, s, &next, dt);
    if !next.diagnostics.is_finite() || next.q.data.iter().any(|q| !q.as_mat().is_finite()) {
        return Err(Error::Contract(format!("non-finite state at t = {}", next.t)));
    }
    if let Some(guard) = opts.energy_guard {
        let (e0, e1) = (s.diagnostics.total(), next.diagnostics.total());
        if e1 - e0 > guard * e0.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Contract(format!(
                "energy grew from {e0:e} to {e1:e} at t = {} (guard {guard:e})",
                next.t
            )));
        }
    }
    Ok(next)
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub report: EnergyReport,
    pub div_u_max: f64,
    pub tr_q_max: f64,
}

impl DiagnosticsRow {
    pub fn of(step: usize, s: &SimState) -> Self {
        DiagnosticsRow {
            step,
            t: s.t,
            report: s.diagnostics,
            div_u_max: s.div_max(),
            tr_q_max: s.trace_max(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    pub final_state: SimState,
    pub compatibility_residual: f64,
    /// Largest nodewise change of `(u, Q)` from the initial state seen at any
    /// step.
    pub max_drift: f64,
}

/// Runs `n_steps` steps, recording diagnostics every `snapshot_every` steps
/// (and at both ends). `on_snapshot` sees each recorded state.
pub fn run(
    p: &MaterialParams,
    init: (Field<Vec3>, Field<QTensor>),
    bc: &BoundaryData,
    opts: &StepperOptions,
    n_steps: usize,
    snapshot_every: usize,
    mut on_snapshot: impl FnMut(&DiagnosticsRow, &SimState) -> Result<()>,
) -> Result<Trajectory> {
    p.validate()?;
    opts.validate()?;
    let (u0, mut q0) = init;
    bc.apply(&mut q0);
    let compat = compatibility_residual(p, &u0, &q0, bc)?;
    let initial = SimState::new(p, u0, q0);
    let every = snapshot_every.max(1);
    let mut rows = vec![DiagnosticsRow::of(0, &initial)];
    on_snapshot(&rows[0], &initial)?;
    let mut state = initial.clone();
    let mut max_drift = 0.0_f64;
    for n in 1..=n_steps {
        state = step(p, &state, bc, opts)?;
        let du = state.u.sub(&initial.u).max_norm();
        let dq = state.q.sub(&initial.q).data.iter().fold(0.0_f64, |m, d| m.max(d.as_mat().max_abs()));
        max_drift = max_drift.max(du.max(dq));
        if n % every == 0 || n == n_steps {
            let row = DiagnosticsRow::of(n, &state);
            on_snapshot(&row, &state)?;
            rows.push(row);
        }
    }
    Ok(Trajectory {
        rows,
        final_state: state,
        compatibility_residual: compat,
        max_drift,
    })
}
