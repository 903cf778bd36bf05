//! Seeded random generators for randomized checks and initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Mat3, QTensor};

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child stream; the parent is left untouched.
pub fn split(parent: &SimRng, stream: u64) -> SimRng {
    let mut child = parent.clone();
    child.set_stream(stream.wrapping_add(1));
    child
}

pub fn random_mat3<R: Rng>(rng: &mut R) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_qtensor<R: Rng>(rng: &mut R) -> QTensor {
    QTensor::project(&random_mat3(rng))
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    // Rodrigues rotation about a random axis
    let mut axis = [0.0_f64; 3];
    for a in axis.iter_mut() {
        *a = rng.gen_range(-1.0..1.0);
    }
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt().max(1e-12);
    let k = [axis[0] / n, axis[1] / n, axis[2] / n];
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let kx = Mat3([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]);
    Mat3::IDENTITY + kx * theta.sin() + kx.matmul(&kx) * (1.0 - theta.cos())
}
