//! Randomized identity checks, the Legendre sweep and the built-in
//! convergence ladders behind the verification subcommands.

use rand::Rng;

use crate::elliptic::{solve_l, EllipticOptions};
use crate::error::{Error, Result};
use crate::fields::div_discrete;
use crate::grid::{BoundaryData, Field, GridSpec, Vec3};
use crate::ldg::{legendre_min, MaterialParams};
use crate::manufactured::{elliptic_exact, elliptic_rhs, stokes_exact, stokes_rhs};
use crate::rng::{random_mat3, random_qtensor, seeded};
use crate::scenario::{critical_state, manufactured_flow, smooth_perturbation};
use crate::stepper::{run, StepperOptions};
use crate::stokes::{assemble_coefficient, solve_stokes, StokesProblem};
use crate::tensor::{a_hat, cancellation_check, frobenius, s_q_unprojected, sigma_viscous, t_tensor, QTensor, Rank4Viscosity};

/// Anisotropic material used by the convergence ladders.
pub fn reference_params() -> MaterialParams {
    MaterialParams {
        a: -0.3,
        b: 1.2,
        c: 0.8,
        l1: 1.0,
        l2: 0.7,
        l3: -0.4,
        xi: 0.6,
        nu: 1.3,
        gamma: 0.9,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Worst deviation seen; for `a_hat_psd` the most negative eigenvalue
    /// with its sign flipped.
    pub worst: f64,
    pub tol: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }
}

/// Runs `samples` random draws of `(ξ, Q, M, P)` through the pointwise
/// identities of the flow-coupling tensors.
pub fn verify_identities(seed: u64, samples: usize) -> IdentityReport {
    verify_identities_impl(seed, samples, false)
}

/// Same suite with the sign of the second term of the self-adjointness
/// check flipped; must fail. Negative control for the report plumbing.
#[doc(hidden)]
pub fn verify_identities_canary(seed: u64, samples: usize) -> IdentityReport {
    verify_identities_impl(seed, samples, true)
}

fn verify_identities_impl(seed: u64, samples: usize, corrupt: bool) -> IdentityReport {
    let sign = if corrupt { -1.0 } else { 1.0 };
    let mut rng = seeded(seed);
    let mut worst = [0.0_f64; 6];
    for _ in 0..samples {
        let xi: f64 = rng.gen_range(-2.0..2.0);
        let q = random_qtensor(&mut rng);
        let (m, p) = (random_mat3(&mut rng), random_mat3(&mut rng));
        let mq = random_qtensor(&mut rng);

        let s = s_q_unprojected(xi, &q, &m);
        worst[0] = worst[0].max(s.trace().abs());
        worst[1] = worst[1].max(s.asymmetry());

        let sp = s_q_unprojected(xi, &q, &p);
        worst[2] = worst[2].max((frobenius(&s, &p) - sign * frobenius(&sp, &m)).abs());

        worst[3] = worst[3].max(cancellation_check(xi, &q, &mq, &p));

        let lhs = frobenius(&sigma_viscous(xi, &q, &m), &p);
        let rhs = frobenius(t_tensor(xi, &q, &m).as_mat(), t_tensor(xi, &q, &p).as_mat());
        worst[4] = worst[4].max((lhs - rhs).abs());

        worst[5] = worst[5].max(-a_hat(xi, &q).min_eigenvalue());
    }
    let names = [
        ("s_q_traceless", 1e-14),
        ("s_q_symmetric", 1e-14),
        ("s_q_self_adjoint", 1e-12),
        ("cancellation", 1e-12),
        ("viscous_form", 1e-12),
        ("a_hat_psd", 1e-12),
    ];
    IdentityReport {
        seed,
        samples,
        checks: names
            .iter()
            .zip(worst)
            .map(|(&(name, tol), worst)| IdentityCheck { name, worst, tol })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreRow {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub min_eig: f64,
    pub bound: f64,
    pub margin: f64,
}

pub const LEGENDRE_CSV_HEADER: &str = "L1,L2,L3,min_eig,bound,margin";

impl LegendreRow {
    pub fn for_constants(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        let p = MaterialParams { l1, l2, l3, ..MaterialParams::default() };
        let min_eig = legendre_min(&p)?;
        let bound = p.coercivity_bound();
        Ok(LegendreRow { l1, l2, l3, min_eig, bound, margin: min_eig - bound })
    }

    pub fn csv(&self) -> String {
        format!("{:?},{:?},{:?},{:?},{:?},{:?}", self.l1, self.l2, self.l3, self.min_eig, self.bound, self.margin)
    }
}

/// `samples` admissible triples `(L1, L2, L3)`, alternating the sign of
/// `L2 + L3`.
pub fn legendre_sweep(seed: u64, samples: usize) -> Result<Vec<LegendreRow>> {
    let mut rng = seeded(seed);
    (0..samples)
        .map(|i| loop {
            let l1: f64 = rng.gen_range(0.05..3.0);
            let l2: f64 = rng.gen_range(-3.0..3.0);
            let l3: f64 = rng.gen_range(-3.0..3.0);
            let want_nonneg = i % 2 == 1;
            if l1 + l2 + l3 > 0.01 && ((l2 + l3 >= 0.0) == want_nonneg) {
                break LegendreRow::for_constants(l1, l2, l3);
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Elliptic,
    Stokes,
    /// Stokes with the coefficient of a constant nonzero `Q`.
    StokesConstantQ,
    EnergyDt,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::Elliptic, Study::Stokes, Study::StokesConstantQ, Study::EnergyDt];

    pub fn name(&self) -> &'static str {
        match self {
            Study::Elliptic => "elliptic",
            Study::Stokes => "stokes",
            Study::StokesConstantQ => "stokes_constant_q",
            Study::EnergyDt => "energy_dt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Study::ALL.into_iter().find(|st| st.name() == s)
    }

    /// Accepted window for every observed order.
    pub fn window(&self) -> (f64, f64) {
        match self {
            Study::EnergyDt => (0.8, 1.2),
            _ => (1.8, 2.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Cells per axis, or the time step for the `energy_dt` ladder.
    pub resolution: f64,
    pub error: f64,
    /// `log2` of the previous error over this one; `None` on the first rung.
    pub order: Option<f64>,
}

pub const CONVERGENCE_CSV_HEADER: &str = "resolution,error,observed_order";

impl ConvergenceRow {
    pub fn csv(&self) -> String {
        match self.order {
            Some(o) => format!("{:?},{:?},{:?}", self.resolution, self.error, o),
            None => format!("{:?},{:?},", self.resolution, self.error),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub study: Study,
    pub rows: Vec<ConvergenceRow>,
    /// Largest nodal `|div_h u|` over the ladder (Stokes ladders only).
    pub div_max: Option<f64>,
    /// Largest `‖div_h u‖` excess over `max(1e-8, 10 h² ‖u‖)`; non-positive
    /// when the bound holds.
    pub div_excess: Option<f64>,
}

impl ConvergenceReport {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn passed(&self) -> bool {
        let (lo, hi) = self.study.window();
        let orders = self.orders();
        !orders.is_empty() && orders.iter().all(|o| (lo..=hi).contains(o)) && self.div_excess.is_none_or(|e| e <= 0.0)
    }
}

fn with_orders(pairs: Vec<(f64, f64)>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(pairs.len());
    for (i, &(resolution, error)) in pairs.iter().enumerate() {
        let order = (i > 0).then(|| (pairs[i - 1].1 / error).log2());
        rows.push(ConvergenceRow { resolution, error, order });
    }
    rows
}

pub fn convergence(study: Study) -> Result<ConvergenceReport> {
    let p = reference_params();
    match study {
        Study::Elliptic => {
            let mut pairs = Vec::new();
            for n in [8, 16, 32] {
                let g = GridSpec::unit_cube(n);
                let (q, _) = solve_l(&p, &elliptic_rhs(&p, g), &BoundaryData::homogeneous(g), &EllipticOptions::default())?;
                pairs.push((n as f64, q.sub(&elliptic_exact(g)).norm_l2()));
            }
            Ok(ConvergenceReport { study, rows: with_orders(pairs), div_max: None, div_excess: None })
        }
        Study::Stokes | Study::StokesConstantQ => {
            let q_const = QTensor::uniaxial(0.4, [1.0, 2.0, 2.0]);
            let mut pairs = Vec::new();
            let (mut div_max, mut div_excess) = (0.0_f64, f64::NEG_INFINITY);
            for n in [8, 16, 32] {
                let g = GridSpec::unit_cube(n);
                let prob = if study == Study::Stokes {
                    StokesProblem::isotropic(p.nu, stokes_rhs(g, &Rank4Viscosity::scaled_identity(p.nu)))
                } else {
                    let coeff = assemble_coefficient(&p, &Field::constant(g, q_const))?;
                    let rhs = stokes_rhs(g, &coeff.data[0]);
                    StokesProblem::new(p.nu, coeff, rhs)
                };
                let sol = solve_stokes(&prob)?;
                let div = div_discrete(&sol.u);
                div_max = div_max.max(div.max_norm());
                let bound = 1e-8_f64.max(10.0 * g.h * g.h * sol.u.norm_l2());
                div_excess = div_excess.max(div.norm_l2() - bound);
                pairs.push((n as f64, sol.u.sub(&stokes_exact(g)).norm_l2()));
            }
            Ok(ConvergenceReport { study, rows: with_orders(pairs), div_max: Some(div_max), div_excess: Some(div_excess) })
        }
        Study::EnergyDt => {
            let pairs = energy_dt_ladder(&p, 12, 2e-3, &[4e-4, 2e-4, 1e-4], 0)?;
            Ok(ConvergenceReport { study, rows: with_orders(pairs), div_max: None, div_excess: None })
        }
    }
}

/// Largest `|energy_law_residual|` over a fixed horizon for each `dt`, on a
/// perturbed critical state with a solenoidal initial flow.
pub fn energy_dt_ladder(p: &MaterialParams, n: usize, horizon: f64, dts: &[f64], seed: u64) -> Result<Vec<(f64, f64)>> {
    let g = GridSpec::unit_cube(n);
    let qc = critical_state(p, [0.0, 0.0, 1.0]);
    let pert = smooth_perturbation(g, seed);
    let q0 = pert.map(|d| qc + *d * 0.3);
    let u0: Field<Vec3> = manufactured_flow(g, 0.5)?;
    let bc = BoundaryData::from_field(&q0)?;
    dts.iter()
        .map(|&dt| {
            let opts = StepperOptions { dt, ..StepperOptions::default() };
            let steps = (horizon / dt).round() as usize;
            let traj = run(p, (u0.clone(), q0.clone()), &bc, &opts, steps, 1, |_, _| Ok(()))?;
            let worst = traj.rows[1..].iter().map(|r| r.report.energy_law_residual.abs()).fold(0.0, f64::max);
            Ok((dt, worst))
        })
        .collect()
}

/// Maps a failed order window onto a contract error.
pub fn require_window(report: &ConvergenceReport) -> Result<()> {
    if report.passed() {
        return Ok(());
    }
    let (lo, hi) = report.study.window();
    Err(Error::Contract(format!(
        "{} ladder: observed orders {:?} outside [{lo}, {hi}] or divergence bound exceeded",
        report.study.name(),
        report.orders()
    )))
}
