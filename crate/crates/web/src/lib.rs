//! Browser bindings: Legendre bound, identity checks and a small quench
//! relaxation rendered on a canvas.

use nematoflow::grid::Vec3;
use nematoflow::scenario::critical_state;
use nematoflow::stepper::{step, SimState, StepperOptions};
use nematoflow::verify::{verify_identities, LegendreRow};
use nematoflow::{BoundaryData, Field, GridSpec, MaterialParams, QTensor};
use wasm_bindgen::prelude::*;

fn js_err(e: nematoflow::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Text report of the strong Legendre bound for `(L1, L2, L3)`.
pub fn legendre_text(l1: f64, l2: f64, l3: f64) -> Result<String, nematoflow::Error> {
    let r = LegendreRow::for_constants(l1, l2, l3)?;
    let branch = if l2 + l3 <= 0.0 { "L2 + L3 <= 0, bound L1 + L2 + L3" } else { "L2 + L3 > 0, bound L1" };
    Ok(format!(
        "{branch}\nsmallest eigenvalue  {:.12}\nbound                {:.12}\nmargin               {:.3e}\n{}",
        r.min_eig,
        r.bound,
        r.margin,
        if r.margin >= -1e-9 { "holds" } else { "VIOLATED" }
    ))
}

pub fn identities_text(seed: u64, samples: usize) -> String {
    let r = verify_identities(seed, samples);
    let mut s = format!("{samples} samples, seed {seed}\n");
    for c in &r.checks {
        s.push_str(&format!("{:<18} {:>10.2e}  (tol {:.0e}) {}\n", c.name, c.worst, c.tol, if c.passed() { "ok" } else { "FAIL" }));
    }
    s.push_str(if r.passed() { "all identities hold\n" } else { "some identities FAILED\n" });
    s
}

#[wasm_bindgen]
pub fn legendre(l1: f64, l2: f64, l3: f64) -> Result<String, JsValue> {
    legendre_text(l1, l2, l3).map_err(js_err)
}

#[wasm_bindgen]
pub fn identities(seed: u32, samples: u32) -> String {
    identities_text(seed as u64, samples as usize)
}

/// Quench from the isotropic state with critical anchoring on the walls,
/// flow frozen.
#[wasm_bindgen]
pub struct Relaxation {
    params: MaterialParams,
    state: SimState,
    bc: BoundaryData,
    opts: StepperOptions,
    steps: usize,
}

#[wasm_bindgen]
impl Relaxation {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, a: f64, l2: f64, dt: f64) -> Result<Relaxation, JsValue> {
        Relaxation::build(n, a, l2, dt).map_err(js_err)
    }

    /// Advances `k` steps and returns the total energy.
    pub fn advance(&mut self, k: usize) -> Result<f64, JsValue> {
        for _ in 0..k {
            self.state = step(&self.params, &self.state, &self.bc, &self.opts).map_err(js_err)?;
            self.steps += 1;
        }
        Ok(self.energy())
    }

    pub fn energy(&self) -> f64 {
        self.state.diagnostics.total()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Nodes per side of the mid-plane slice.
    pub fn side(&self) -> usize {
        self.state.q.grid.dims()[0]
    }

    /// Scalar order `sqrt(3/2 tr Q²)` on the mid-plane `z = 1/2`, x fastest.
    pub fn order_slice(&self) -> Vec<f64> {
        let g = self.state.q.grid;
        let d = g.dims();
        let k = d[2] / 2;
        let mut out = Vec::with_capacity(d[0] * d[1]);
        for j in 0..d[1] {
            for i in 0..d[0] {
                let q = self.state.q.at([i, j, k]).into_mat();
                out.push((1.5 * q.matmul(&q).trace()).sqrt());
            }
        }
        out
    }
}

impl Relaxation {
    pub fn build(n: usize, a: f64, l2: f64, dt: f64) -> Result<Relaxation, nematoflow::Error> {
        let params = MaterialParams { a, l2, ..MaterialParams::default() };
        params.validate()?;
        let g = GridSpec::unit_cube(n);
        g.validate()?;
        let qc = critical_state(&params, [1.0, 1.0, 0.0]);
        let mut q = Field::<QTensor>::zeros(g);
        for i in g.boundary_indices() {
            q.data[i] = qc;
        }
        let bc = BoundaryData::from_field(&q)?;
        let opts = StepperOptions { dt, freeze_flow: true, ..StepperOptions::default() };
        opts.validate()?;
        let state = SimState::new(&params, Field::<Vec3>::zeros(g), q);
        Ok(Relaxation { params, state, bc, opts, steps: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_report_branches() {
        let t = legendre_text(1.0, -0.3, -0.4).unwrap();
        assert!(t.starts_with("L2 + L3 <= 0") && t.ends_with("holds"), "{t}");
        assert!(legendre_text(1.0, 2.0, 0.5).unwrap().contains("bound L1\n"));
        assert!(legendre_text(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn identities_report_passes() {
        let t = identities_text(42, 200);
        assert!(t.ends_with("all identities hold\n"));
        assert_eq!(t.lines().count(), 8);
    }

    #[test]
    fn relaxation_lowers_energy() {
        let mut r = Relaxation::build(6, -0.5, 0.0, 2e-3).unwrap();
        let e0 = r.energy();
        let mut prev = e0;
        for _ in 0..5 {
            let e = r.advance(2).unwrap();
            assert!(e <= prev + 1e-12 * prev.abs());
            prev = e;
        }
        assert!(prev < e0);
        assert_eq!(r.steps(), 10);
        let s = r.order_slice();
        assert_eq!(s.len(), 49);
        assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(Relaxation::build(3, -0.5, 0.0, 1e-3).is_err());
    }
}
