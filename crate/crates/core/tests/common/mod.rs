#![allow(dead_code)]

use nematoflow::rng::{random_qtensor, seeded};
use nematoflow::{Field, GridSpec, MaterialParams, QTensor, Vec3};
use rand::Rng;

/// Smooth random symmetric traceless field: a few low Fourier modes with
/// random tensor amplitudes, optionally multiplied by a wall bubble so it
/// vanishes on the boundary.
pub fn smooth_q(grid: GridSpec, seed: u64, vanish_on_walls: bool) -> Field<QTensor> {
    let mut rng = seeded(seed);
    let modes: Vec<(QTensor, [f64; 3], [f64; 3])> = (0..4)
        .map(|_| {
            let amp = random_qtensor(&mut rng);
            let k = [
                rng.gen_range(1..3) as f64,
                rng.gen_range(1..3) as f64,
                rng.gen_range(1..3) as f64,
            ];
            let phase = [rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3)];
            (amp, k, phase)
        })
        .collect();
    let ext = grid.extent();
    let tau = std::f64::consts::TAU;
    let mut f = Field::from_fn(grid, |x| {
        let mut q = QTensor::ZERO;
        for (amp, k, ph) in &modes {
            let s = (tau * k[0] * x[0] / ext[0] + ph[0]).sin()
                * (tau * k[1] * x[1] / ext[1] + ph[1]).cos()
                * (tau * k[2] * x[2] / ext[2] + ph[2]).sin();
            q += *amp * s;
        }
        if vanish_on_walls {
            let mut b = 1.0;
            for a in 0..3 {
                if !grid.periodic[a] {
                    b *= (std::f64::consts::PI * x[a] / ext[a]).sin();
                }
            }
            q = q * b;
        }
        q
    });
    if vanish_on_walls {
        f.zero_boundary();
    }
    f
}

pub fn smooth_u(grid: GridSpec, seed: u64) -> Field<Vec3> {
    let mut rng = seeded(seed);
    let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut f = Field::from_fn(grid, |x| {
        Vec3([
            c[0] * (3.0 * x[1] + c[1]).sin() + c[2] * x[2],
            c[3] * (2.0 * x[0] - x[2]).cos() + c[4],
            c[5] * (x[0] * x[1] * 4.0).sin() + c[6] * (c[7] + x[2]).cos() + c[8],
        ])
    });
    f.zero_boundary();
    f
}

pub fn anisotropic_params() -> MaterialParams {
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
