//! Initial data for the configuration presets.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::config::{Scenario, SimConfig};
use crate::elliptic::leray_project;
use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Field, GridSpec, Vec3};
use crate::ldg::{uniaxial_critical_s, MaterialParams};
use crate::manufactured::stokes_velocity;
use crate::rng::{random_qtensor, seeded, split};
use crate::tensor::{Mat3, QTensor};

/// Uniaxial critical point of the bulk energy with the largest `|s|`
/// (zero when only the isotropic state is critical).
pub fn critical_state(p: &MaterialParams, director: [f64; 3]) -> QTensor {
    let s = uniaxial_critical_s(p).into_iter().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    QTensor::uniaxial(s, director)
}

fn unit_coords(g: &GridSpec, x: [f64; 3]) -> [f64; 3] {
    let ext = g.extent();
    std::array::from_fn(|a| (x[a] - g.origin[a]) / ext[a])
}

/// Product of `sin(π x_a)` over the dirichlet axes, in box coordinates.
fn wall_bubble(g: &GridSpec, x: [f64; 3]) -> f64 {
    let y = unit_coords(g, x);
    (0..3).filter(|&a| !g.periodic[a]).map(|a| (PI * y[a]).sin()).product()
}

/// Smooth random `Q` field from a few low modes with seeded tensor
/// amplitudes, vanishing on the walls.
pub fn smooth_perturbation(g: GridSpec, seed: u64) -> Field<QTensor> {
    let mut rng = split(&seeded(seed), 1);
    let modes: Vec<(QTensor, [f64; 3], [f64; 3])> = (0..4)
        .map(|_| {
            let amp = random_qtensor(&mut rng);
            let k = std::array::from_fn(|_| rng.gen_range(1..3) as f64);
            let ph = std::array::from_fn(|_| rng.gen_range(0.0..TAU));
            (amp, k, ph)
        })
        .collect();
    let mut f = Field::from_fn(g, |x| {
        let y = unit_coords(&g, x);
        let mut q = QTensor::ZERO;
        for (amp, k, ph) in &modes {
            let s: f64 = (0..3).map(|a| (TAU * k[a] * y[a] + ph[a]).sin()).product();
            q += *amp * s;
        }
        q * wall_bubble(&g, x)
    });
    f.zero_boundary();
    f
}

/// Discretely divergence-free velocity vanishing on the walls, obtained by
/// projecting the manufactured curl field.
pub fn manufactured_flow(g: GridSpec, amplitude: f64) -> Result<Field<Vec3>> {
    if amplitude == 0.0 {
        return Ok(Field::zeros(g));
    }
    let mut u = Field::from_fn(g, |x| stokes_velocity(unit_coords(&g, x)) * amplitude);
    u.zero_boundary();
    Ok(leray_project(&u)?.0)
}

/// `(u0, Q0, anchoring)` for a configuration.
pub fn initial_data(cfg: &SimConfig) -> Result<(Field<Vec3>, Field<QTensor>, BoundaryData)> {
    let g = cfg.grid;
    let sc = &cfg.scenario;
    let qc = critical_state(&cfg.material, sc.director);
    let flow = || manufactured_flow(g, sc.flow_amplitude);
    let (u, q) = match sc.kind {
        Scenario::StationaryCheck => (Field::zeros(g), Field::constant(g, qc)),
        Scenario::Quench => {
            let mut q = Field::<QTensor>::zeros(g);
            for i in g.boundary_indices() {
                q.data[i] = qc;
            }
            (Field::zeros(g), q)
        }
        Scenario::PerturbedCritical => {
            let dq = smooth_perturbation(g, sc.seed);
            (flow()?, dq.map(|d| qc + *d * sc.amplitude))
        }
        Scenario::ManufacturedStokes => {
            let amp = if sc.flow_amplitude == 0.0 { 1.0 } else { sc.flow_amplitude };
            (manufactured_flow(g, amp)?, Field::constant(g, qc))
        }
        Scenario::Custom => {
            let [xx, xy, xz, yy, yz] = sc.q_uniform;
            let q0 = QTensor::try_new(Mat3([[xx, xy, xz], [xy, yy, yz], [xz, yz, -xx - yy]]))
                .map_err(|_| Error::invalid("scenario.q_uniform", "not symmetric traceless"))?;
            let dq = smooth_perturbation(g, sc.seed);
            (flow()?, dq.map(|d| q0 + *d * sc.amplitude))
        }
    };
    let bc = BoundaryData::from_field(&q)?;
    Ok((u, q, bc))
}
