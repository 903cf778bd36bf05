//! Landau-de Gennes free energy: bulk polynomial, its derivative `J`,
//! the anisotropic elastic density, the rank-6 elastic coefficient tensors
//! and the strong Legendre bound.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{frobenius, Mat3, QTensor, Rank3Gradient};

/// Material coefficients. `l4` is not represented: the cubic elastic term
/// is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Flow-alignment parameter.
    pub xi: f64,
    /// Newtonian viscosity (coefficient of the velocity Laplacian).
    pub nu: f64,
    /// Rotational diffusion constant multiplying the molecular field.
    pub gamma: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            a: -0.5,
            b: 1.0,
            c: 1.0,
            l1: 1.0,
            l2: 0.0,
            l3: 0.0,
            xi: 0.0,
            nu: 1.0,
            gamma: 1.0,
        }
    }
}

impl MaterialParams {
    /// `L0 = L1 + L2 + L3`.
    pub fn l0(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }

    pub fn l23(&self) -> f64 {
        self.l2 + self.l3
    }

    /// Checks `L1 > 0`, `L0 > 0`, `b, c > 0`, `ν, Γ > 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.l1, self.l2, self.l3, self.xi, self.nu, self.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("MaterialParams", "non-finite coefficient"));
        }
        if self.l1 <= 0.0 {
            return Err(Error::invalid(
                "MaterialParams",
                format!("elastic constants require L1 > 0 (got L1 = {})", self.l1),
            ));
        }
        if self.l0() <= 0.0 {
            return Err(Error::invalid(
                "MaterialParams",
                format!("elastic constants require L1 + L2 + L3 > 0 (got {})", self.l0()),
            ));
        }
        if self.b <= 0.0 || self.c <= 0.0 {
            return Err(Error::invalid("MaterialParams", "bulk coefficients require b > 0 and c > 0"));
        }
        if self.nu <= 0.0 {
            return Err(Error::invalid("MaterialParams", "viscosity must be positive"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid("MaterialParams", "rotational constant must be positive"));
        }
        Ok(())
    }

    /// Coercivity constant `min(L1, L0)`.
    pub fn coercivity_bound(&self) -> f64 {
        self.l1.min(self.l0())
    }
}

/// `(a/2) tr Q² - (b/3) tr Q³ + (c/4) (tr Q²)²`.
pub fn bulk_density(p: &MaterialParams, q: &QTensor) -> f64 {
    let m = q.as_mat();
    let q2 = m.matmul(m);
    let tr2 = q2.trace();
    let tr3 = frobenius(&q2, m);
    0.5 * p.a * tr2 - p.b / 3.0 * tr3 + 0.25 * p.c * tr2 * tr2
}

/// `J(Q) = aQ - b(Q² - tr(Q²)/3 I) + c tr(Q²) Q`, the gradient of the bulk
/// density on the configuration space.
pub fn bulk_derivative(p: &MaterialParams, q: &QTensor) -> QTensor {
    let m = q.as_mat();
    let q2 = m.matmul(m);
    let tr2 = q2.trace();
    let dev_q2 = q2 - Mat3::IDENTITY * (tr2 / 3.0);
    QTensor::project(&(*m * (p.a + p.c * tr2) - dev_q2 * p.b))
}

/// `½(L1|∇Q|² + L2 Q_ij,j Q_ik,k + L3 Q_ij,k Q_ik,j)`.
pub fn elastic_density(p: &MaterialParams, g: &Rank3Gradient) -> f64 {
    let g = &g.0;
    let mut div_sq = 0.0;
    let mut cross = 0.0;
    for i in 0..3 {
        let div_i: f64 = (0..3).map(|j| g[i][j][j]).sum();
        div_sq += div_i * div_i;
        for j in 0..3 {
            for k in 0..3 {
                cross += g[i][j][k] * g[i][k][j];
            }
        }
    }
    let full: f64 = g.iter().flatten().flatten().map(|v| v * v).sum();
    0.5 * (p.l1 * full + p.l2 * div_sq + p.l3 * cross)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElasticVariant {
    /// The divergence-form tensor `A`.
    A,
    /// `Ã`: `A` with the derivative indices `k, ℓ` interchanged in the
    /// anisotropic part.
    ATilde,
}

/// Rank-6 elastic coefficient `A^{ℓk}_{(ij)(i'j')}`, 729 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank6ElasticTensor {
    data: Vec<f64>,
    pub variant: ElasticVariant,
}

#[inline]
fn idx6(l: usize, k: usize, i: usize, j: usize, ip: usize, jp: usize) -> usize {
    ((((l * 3 + k) * 3 + i) * 3 + j) * 3 + ip) * 3 + jp
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

impl Rank6ElasticTensor {
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize, ip: usize, jp: usize) -> f64 {
        self.data[idx6(l, k, i, j, ip, jp)]
    }

    /// `A^{ℓk}_{(ij)(i'j')} ξ^{(ij)}_ℓ η^{(i'j')}_k` with `ξ^{(ij)}_ℓ = xi[i][j][ℓ]`.
    pub fn contract(&self, xi: &Rank3Gradient, eta: &Rank3Gradient) -> f64 {
        let mut s = 0.0;
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let x = xi.0[i][j][l];
                        if x == 0.0 {
                            continue;
                        }
                        for ip in 0..3 {
                            for jp in 0..3 {
                                s += self.get(l, k, i, j, ip, jp) * x * eta.0[ip][jp][k];
                            }
                        }
                    }
                }
            }
        }
        s
    }

    /// Symmetrised 27×27 matrix of the quadratic form `ξ ↦ ξ:A:ξ` over
    /// `ξ ∈ R^{3×3×3}`, rows indexed by `(ℓ, i, j)`.
    pub fn quadratic_form_matrix(&self) -> DMatrix<f64> {
        let row = |l: usize, i: usize, j: usize| (l * 3 + i) * 3 + j;
        let mut m = DMatrix::zeros(27, 27);
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        for ip in 0..3 {
                            for jp in 0..3 {
                                let v = self.get(l, k, i, j, ip, jp);
                                m[(row(l, i, j), row(k, ip, jp))] += 0.5 * v;
                                m[(row(k, ip, jp), row(l, i, j))] += 0.5 * v;
                            }
                        }
                    }
                }
            }
        }
        m
    }
}

/// Builds `A` (or `Ã`) from the Kronecker-delta formula.
pub fn elastic_tensor(p: &MaterialParams, variant: ElasticVariant) -> Rank6ElasticTensor {
    let quarter = 0.25 * p.l23();
    let mut data = vec![0.0; 729];
    for l in 0..3 {
        for k in 0..3 {
            // Ã swaps the roles of k and ℓ in the anisotropic deltas
            let (dk, dl) = match variant {
                ElasticVariant::A => (k, l),
                ElasticVariant::ATilde => (l, k),
            };
            for i in 0..3 {
                for j in 0..3 {
                    for ip in 0..3 {
                        for jp in 0..3 {
                            let iso = p.l1 * delta(l, k) * delta(i, ip) * delta(j, jp);
                            let aniso = delta(j, ip) * delta(dk, i) * delta(dl, jp)
                                + delta(i, ip) * delta(dl, jp) * delta(dk, j)
                                + delta(dk, i) * delta(dl, ip) * delta(j, jp)
                                + delta(dk, j) * delta(dl, ip) * delta(i, jp)
                                - 4.0 / 3.0 * delta(ip, jp) * delta(i, dl) * delta(j, dk)
                                - 4.0 / 3.0 * delta(i, j) * delta(ip, dl) * delta(jp, dk)
                                + 4.0 / 9.0 * delta(i, j) * delta(ip, jp) * delta(k, l);
                            data[idx6(l, k, i, j, ip, jp)] = iso + quarter * aniso;
                        }
                    }
                }
            }
        }
    }
    Rank6ElasticTensor { data, variant }
}

/// Tensor used for the Legendre bound: `A` when `L2 + L3 ≤ 0`, else `Ã`.
pub fn legendre_variant(p: &MaterialParams) -> ElasticVariant {
    if p.l23() <= 0.0 {
        ElasticVariant::A
    } else {
        ElasticVariant::ATilde
    }
}

/// Smallest eigenvalue of the selected tensor's quadratic form; bounded
/// below by `min(L1, L0)`.
pub fn legendre_min(p: &MaterialParams) -> Result<f64> {
    p.validate()?;
    let t = elastic_tensor(p, legendre_variant(p));
    let eig = t.quadratic_form_matrix().symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

fn uniaxial_reduced(p: &MaterialParams, s: f64) -> f64 {
    // d/ds of the bulk density along s(n⊗n - I/3) equals (2s/9)(3a - b s + 2c s²)
    3.0 * p.a - p.b * s + 2.0 * p.c * s * s
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scalar order parameters `s` of uniaxial critical points of the bulk
/// energy, sorted ascending. Always contains 0.
pub fn uniaxial_critical_s(p: &MaterialParams) -> Vec<f64> {
    let mut roots = vec![0.0];
    let half = 10.0 * p.b / p.c;
    let (lo, hi) = (-half, half);
    let n = 4000;
    let f = |s: f64| uniaxial_reduced(p, s);
    let step = (hi - lo) / n as f64;
    for m in 0..n {
        let a = lo + m as f64 * step;
        let b = a + step;
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(f, a, b, 1e-12));
        }
    }
    // double root at the vertex when the discriminant vanishes
    let vertex = p.b / (4.0 * p.c);
    if f(vertex).abs() <= 1e-12 * (p.a.abs() + p.b * p.b / p.c) && !roots.iter().any(|r| (r - vertex).abs() < 1e-9) {
        roots.push(vertex);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_qtensor, random_rotation, seeded};
    use rand::Rng;

    fn unit() -> MaterialParams {
        MaterialParams {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            ..Default::default()
        }
    }

    fn random_grad<R: Rng>(rng: &mut R) -> Rank3Gradient {
        let mut g = Rank3Gradient::ZERO;
        for k in 0..3 {
            g.set_slot(k, random_qtensor(rng).as_mat());
        }
        g
    }

    #[test]
    fn bulk_examples() {
        let p = unit();
        assert_eq!(bulk_density(&p, &QTensor::ZERO), 0.0);
        let q = QTensor::try_new(Mat3::diag(2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0)).unwrap();
        assert!((bulk_density(&p, &q) - 10.0 / 27.0).abs() < 1e-15);
        let j = bulk_derivative(&p, &q);
        assert!((*j.as_mat() - Mat3::diag(8.0 / 9.0, -4.0 / 9.0, -4.0 / 9.0)).max_abs() < 1e-15);
        assert_eq!(bulk_derivative(&p, &QTensor::ZERO), QTensor::ZERO);
    }

    #[test]
    fn bulk_frame_indifference() {
        let mut rng = seeded(11);
        let p = MaterialParams { a: -0.3, b: 1.3, c: 0.7, ..Default::default() };
        for _ in 0..50 {
            let q = random_qtensor(&mut rng);
            let r = random_rotation(&mut rng);
            let rq = QTensor::project(&r.matmul(q.as_mat()).matmul(&r.transpose()));
            assert!((bulk_density(&p, &rq) - bulk_density(&p, &q)).abs() < 1e-12);
        }
    }

    #[test]
    fn bulk_derivative_is_gradient() {
        let mut rng = seeded(12);
        let p = MaterialParams { a: -0.3, b: 1.3, c: 0.7, ..Default::default() };
        let h = 1e-5;
        for _ in 0..50 {
            let q = random_qtensor(&mut rng);
            let d = random_qtensor(&mut rng);
            let fp = bulk_density(&p, &(q + d * h));
            let fm = bulk_density(&p, &(q - d * h));
            let fd = (fp - fm) / (2.0 * h);
            let an = frobenius(bulk_derivative(&p, &q).as_mat(), d.as_mat());
            assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
        }
    }

    #[test]
    fn elastic_density_reductions() {
        let mut rng = seeded(13);
        let p = MaterialParams { l1: 1.3, l2: 0.0, l3: 0.0, ..Default::default() };
        assert_eq!(elastic_density(&p, &Rank3Gradient::ZERO), 0.0);
        let g = random_grad(&mut rng);
        assert!((elastic_density(&p, &g) - 0.65 * g.norm_sq()).abs() < 1e-13);
    }

    #[test]
    fn elastic_density_frame_indifference() {
        let mut rng = seeded(14);
        let p = MaterialParams { l1: 1.0, l2: 0.6, l3: -0.3, ..Default::default() };
        for _ in 0..20 {
            let g = random_grad(&mut rng);
            let r = random_rotation(&mut rng);
            // g'_{ijk} = R_ia R_jb R_kc g_abc
            let mut gr = Rank3Gradient::ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let mut s = 0.0;
                        for a in 0..3 {
                            for b in 0..3 {
                                for c in 0..3 {
                                    s += r.0[i][a] * r.0[j][b] * r.0[k][c] * g.0[a][b][c];
                                }
                            }
                        }
                        gr.0[i][j][k] = s;
                    }
                }
            }
            assert!((elastic_density(&p, &gr) - elastic_density(&p, &g)).abs() < 1e-12);
        }
    }

    #[test]
    fn elastic_tensor_isotropic_case() {
        let p = MaterialParams { l1: 2.0, l2: 0.5, l3: -0.5, ..Default::default() };
        for v in [ElasticVariant::A, ElasticVariant::ATilde] {
            let t = elastic_tensor(&p, v);
            for l in 0..3 {
                for k in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            for ip in 0..3 {
                                for jp in 0..3 {
                                    let want = 2.0 * delta(l, k) * delta(i, ip) * delta(j, jp);
                                    assert!((t.get(l, k, i, j, ip, jp) - want).abs() < 1e-15);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn elastic_tensor_spot_entry() {
        // all deltas equal 1 at index 0: L1 + ¼(L2+L3)(4 - 8/3 + 4/9) = 1 + (16/9)/4
        let p = MaterialParams { l1: 1.0, l2: 0.5, l3: 0.5, ..Default::default() };
        let t = elastic_tensor(&p, ElasticVariant::A);
        assert!((t.get(0, 0, 0, 0, 0, 0) - (1.0 + 4.0 / 9.0)).abs() < 1e-15);
        // A^{01}_{(01)(00)}: second and fourth deltas fire, minus the first trace term
        assert!((t.get(0, 1, 0, 1, 0, 0) - (2.0 - 4.0 / 3.0) / 4.0).abs() < 1e-15);
    }

    /// Hand expansion of the anisotropic contraction, written without the tensor.
    fn contraction_oracle(p: &MaterialParams, xi: &Rank3Gradient) -> f64 {
        let x = |i: usize, j: usize, l: usize| xi.0[i][j][l];
        let mut iso = 0.0;
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    iso += x(i, j, l) * x(i, j, l);
                    s += x(i, j, l) * x(j, l, i) + x(i, j, l) * x(i, l, j) + x(i, j, l) * x(l, j, i)
                        + x(i, j, l) * x(l, i, j);
                }
            }
        }
        let tr = |l: usize| x(0, 0, l) + x(1, 1, l) + x(2, 2, l);
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        let mut t3 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                t1 += x(i, j, i) * tr(j);
            }
        }
        for j in 0..3 {
            for l in 0..3 {
                t2 += tr(j) * x(j, l, l);
            }
        }
        for l in 0..3 {
            t3 += tr(l) * tr(l);
        }
        p.l1 * iso + 0.25 * p.l23() * (s - 4.0 / 3.0 * t1 - 4.0 / 3.0 * t2 + 4.0 / 9.0 * t3)
    }

    #[test]
    fn elastic_tensor_contraction_matches_hand_expansion() {
        let mut rng = seeded(15);
        let p = MaterialParams { l1: 0.7, l2: 0.9, l3: -0.2, ..Default::default() };
        let t = elastic_tensor(&p, ElasticVariant::A);
        for _ in 0..20 {
            let mut xi = Rank3Gradient::ZERO;
            xi.0.iter_mut().flatten().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let a = t.contract(&xi, &xi);
            let b = contraction_oracle(&p, &xi);
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn quadratic_forms_of_both_variants_on_q_gradients() {
        // On symmetric traceless gradients the A form is L1|g|² + (L2+L3) g_ij,k g_ik,j
        // and the Ã form is L1|g|² + (L2+L3)|div g|².
        let mut rng = seeded(16);
        let p = MaterialParams { l1: 1.0, l2: 0.7, l3: -0.4, ..Default::default() };
        let ta = elastic_tensor(&p, ElasticVariant::A);
        let tt = elastic_tensor(&p, ElasticVariant::ATilde);
        for _ in 0..20 {
            let g = random_grad(&mut rng);
            let mut cross = 0.0;
            let mut div = 0.0;
            for i in 0..3 {
                let d: f64 = (0..3).map(|j| g.0[i][j][j]).sum();
                div += d * d;
                for j in 0..3 {
                    for k in 0..3 {
                        cross += g.0[i][j][k] * g.0[i][k][j];
                    }
                }
            }
            let full = g.norm_sq();
            assert!((ta.contract(&g, &g) - (full + 0.3 * cross)).abs() < 1e-12);
            assert!((tt.contract(&g, &g) - (full + 0.3 * div)).abs() < 1e-12);
            // direct density agrees with the A form when L2 = 0, with Ã when L3 = 0
            let p_a = MaterialParams { l2: 0.0, l3: 0.3, ..p };
            let e = elastic_density(&p_a, &g);
            assert!((e - 0.5 * elastic_tensor(&p_a, ElasticVariant::A).contract(&g, &g)).abs() < 1e-12);
            let p_t = MaterialParams { l2: 0.3, l3: 0.0, ..p };
            let e = elastic_density(&p_t, &g);
            assert!((e - 0.5 * elastic_tensor(&p_t, ElasticVariant::ATilde).contract(&g, &g)).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_examples() {
        let iso = MaterialParams { l1: 1.5, l2: 0.4, l3: -0.4, ..Default::default() };
        assert!((legendre_min(&iso).unwrap() - 1.5).abs() < 1e-12);
        let neg = MaterialParams { l1: 1.0, l2: -0.3, l3: -0.4, ..Default::default() };
        assert!(legendre_min(&neg).unwrap() >= 0.3 - 1e-9);
        let pos = MaterialParams { l1: 1.0, l2: 0.5, l3: 0.5, ..Default::default() };
        assert!(legendre_min(&pos).unwrap() >= 1.0 - 1e-9);
        let bad = MaterialParams { l1: 1.0, l2: -0.6, l3: -0.6, ..Default::default() };
        assert!(legendre_min(&bad).is_err());
    }

    #[test]
    fn uniaxial_roots() {
        // b² < 24ac: only the isotropic state
        assert_eq!(uniaxial_critical_s(&unit()), vec![0.0]);
        for p in [
            MaterialParams { a: -1.0, b: 1.0, c: 1.0, ..Default::default() },
            MaterialParams { a: 0.01, b: 1.0, c: 1.0, ..Default::default() },
            MaterialParams { a: -0.2, b: 0.5, c: 2.0, ..Default::default() },
        ] {
            let roots = uniaxial_critical_s(&p);
            // closed-form quadratic roots as the oracle
            let disc = p.b * p.b - 24.0 * p.a * p.c;
            let mut want = vec![0.0, (p.b - disc.sqrt()) / (4.0 * p.c), (p.b + disc.sqrt()) / (4.0 * p.c)];
            want.sort_by(|a, b| a.total_cmp(b));
            assert_eq!(roots.len(), 3);
            for (r, w) in roots.iter().zip(&want) {
                assert!((r - w).abs() < 1e-10);
            }
            for s in roots {
                let q = QTensor::uniaxial(s, [0.3, -0.2, 0.9]);
                assert!(bulk_derivative(&p, &q).as_mat().norm() < 1e-10);
            }
        }
    }
}
