//! Pointwise 3×3 tensor algebra: the flow-alignment operator `S_Q`, the
//! co-rotation commutator, the viscous coupling tensors `T(Q,∇v)` and
//! `σ(Q,∇v)`, and the contracted rank-4 coefficient `Â(Q)`.
//!
//! Velocity gradients follow the convention `g[i][j] = ∂_j v_i`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Tolerance above which a trace is re-projected out of a [`QTensor`].
pub const TRACE_DRIFT_TOL: f64 = 1e-14;

/// Dense row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        Mat3(m)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// The single-entry matrix `e_i ⊗ e_j`.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Mat3::ZERO;
        m.0[i][j] = 1.0;
        m
    }

    pub fn transpose(&self) -> Self {
        Mat3::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn matmul(&self, rhs: &Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }

    /// Frobenius norm `|A| = sqrt(A:A)`.
    pub fn norm(&self) -> f64 {
        frobenius(self, self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Row-major flattening, index `3*i + j`.
    pub fn flatten(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.0[i][j];
            }
        }
        out
    }

    pub fn from_flat(v: &[f64; 9]) -> Self {
        Mat3::from_fn(|i, j| v[3 * i + j])
    }

    /// Largest deviation from symmetry, `max |m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, rhs: Mat3) {
        *self = *self - rhs;
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        Mat3::from_fn(|i, j| -self.0[i][j])
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        Mat3::from_fn(|i, j| s * self.0[i][j])
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    fn mul(self, m: Mat3) -> Mat3 {
        m * self
    }
}

/// Frobenius product `A:B = tr(A Bᵀ) = Σ a_ij b_ij`.
pub fn frobenius(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a.0[i][j] * b.0[i][j];
        }
    }
    s
}

pub fn sym(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] + m.0[j][i]))
}

pub fn antisym(m: &Mat3) -> Mat3 {
    // m - sym(m) keeps sym + antisym == m bit-exact.
    *m - sym(m)
}

pub fn deviatoric(m: &Mat3) -> Mat3 {
    let t = m.trace() / 3.0;
    *m - Mat3::IDENTITY * t
}

/// A symmetric traceless 3×3 matrix, the nematic order parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor(Mat3);

impl QTensor {
    pub const ZERO: QTensor = QTensor(Mat3::ZERO);

    /// Projects an arbitrary matrix onto the symmetric traceless space.
    ///
    /// Symmetry is imposed exactly; the trace is removed when it exceeds
    /// [`TRACE_DRIFT_TOL`].
    pub fn project(m: &Mat3) -> Self {
        let mut s = sym(m);
        let t = s.trace();
        if t.abs() > TRACE_DRIFT_TOL {
            let third = t / 3.0;
            for i in 0..3 {
                s.0[i][i] -= third;
            }
        }
        QTensor(s)
    }

    /// Accepts `m` only if it already lies in the configuration space.
    pub fn try_new(m: Mat3) -> Result<Self> {
        let scale = 1.0 + m.max_abs();
        if !m.is_finite() {
            return Err(Error::invalid("QTensor", "non-finite entry"));
        }
        if m.asymmetry() > 1e-12 * scale {
            return Err(Error::invalid("QTensor", "matrix is not symmetric"));
        }
        if m.trace().abs() > 1e-12 * scale {
            return Err(Error::invalid("QTensor", "matrix is not traceless"));
        }
        Ok(QTensor::project(&m))
    }

    /// Uniaxial tensor `s (n⊗n - I/3)`; `n` is normalised internally.
    pub fn uniaxial(s: f64, n: [f64; 3]) -> Self {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let n = [n[0] / len, n[1] / len, n[2] / len];
        QTensor::project(&Mat3::from_fn(|i, j| {
            s * (n[i] * n[j] - if i == j { 1.0 / 3.0 } else { 0.0 })
        }))
    }

    pub fn as_mat(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_mat(self) -> Mat3 {
        self.0
    }

    /// Compact 5-component form `(q00, q01, q02, q11, q12)`.
    pub fn pack5(&self) -> [f64; 5] {
        let m = &self.0 .0;
        [m[0][0], m[0][1], m[0][2], m[1][1], m[1][2]]
    }

    pub fn unpack5(v: [f64; 5]) -> Self {
        let q22 = -v[0] - v[3];
        QTensor(Mat3([[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], q22]]))
    }

    pub fn scale(&self, s: f64) -> Self {
        QTensor(self.0 * s)
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, rhs: QTensor) -> QTensor {
        QTensor(self.0 + rhs.0)
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, rhs: QTensor) -> QTensor {
        QTensor(self.0 - rhs.0)
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        QTensor(-self.0)
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, s: f64) -> QTensor {
        QTensor(self.0 * s)
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        self.0 += rhs.0;
    }
}

/// `g[i][j][k] = ∂_k Q_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rank3Gradient(pub [[[f64; 3]; 3]; 3]);

impl Rank3Gradient {
    pub const ZERO: Rank3Gradient = Rank3Gradient([[[0.0; 3]; 3]; 3]);

    /// The `k`-th partial derivative as a matrix.
    pub fn slot(&self, k: usize) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j][k])
    }

    pub fn set_slot(&mut self, k: usize, m: &Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j][k] = m.0[i][j];
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().flatten().flatten().map(|v| v * v).sum()
    }
}

/// Rank-4 viscosity coefficient stored as a symmetric 9×9 matrix over
/// flattened velocity gradients: entry `[3i+k][3j+l]` pairs `∂_k u_i` with
/// `∂_l v_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank4Viscosity(pub [[f64; 9]; 9]);

impl Default for Rank4Viscosity {
    fn default() -> Self {
        Rank4Viscosity([[0.0; 9]; 9])
    }
}

impl Rank4Viscosity {
    pub fn scaled_identity(nu: f64) -> Self {
        let mut m = [[0.0; 9]; 9];
        for (p, row) in m.iter_mut().enumerate() {
            row[p] = nu;
        }
        Rank4Viscosity(m)
    }

    /// `Â^{kl}_{ij}`: coefficient pairing `∂_k u_i` with `∂_l v_j`.
    pub fn at(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        self.0[3 * i + k][3 * j + l]
    }

    /// `∂_k u_i Â^{kl}_{ij} ∂_l v_j` with `gu[i][k] = ∂_k u_i`.
    pub fn contract(&self, gu: &Mat3, gv: &Mat3) -> f64 {
        let a = gu.flatten();
        let b = gv.flatten();
        let mut s = 0.0;
        for p in 0..9 {
            let mut row = 0.0;
            for q in 0..9 {
                row += self.0[p][q] * b[q];
            }
            s += a[p] * row;
        }
        s
    }

    /// Flux `F_{ik} = Â^{kl}_{ij} ∂_l u_j`, so that `F:∇v` is the bilinear form.
    pub fn apply(&self, gu: &Mat3) -> Mat3 {
        let a = gu.flatten();
        let mut out = [0.0; 9];
        for (p, o) in out.iter_mut().enumerate() {
            *o = (0..9).map(|q| self.0[p][q] * a[q]).sum();
        }
        Mat3::from_flat(&out)
    }

    pub fn add_scaled_identity(&self, nu: f64) -> Self {
        let mut m = self.0;
        for (p, row) in m.iter_mut().enumerate() {
            row[p] += nu;
        }
        Rank4Viscosity(m)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|v| *v *= s);
        Rank4Viscosity(m)
    }

    /// Smallest eigenvalue of the symmetrised 9×9 matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::SMatrix::<f64, 9, 9>::from_fn(|p, q| 0.5 * (self.0[p][q] + self.0[q][p]));
        m.symmetric_eigenvalues().min()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for p in 0..9 {
            for q in 0..9 {
                worst = worst.max((self.0[p][q] - self.0[q][p]).abs());
            }
        }
        worst
    }
}

/// `S_Q(M) = ξ(D(Q+I/3) + (Q+I/3)D - 2(Q+I/3)((Q+I/3):M))`, `D = sym(M)`.
pub fn s_q(xi: f64, q: &QTensor, m: &Mat3) -> QTensor {
    if xi == 0.0 {
        return QTensor::ZERO;
    }
    QTensor::project(&s_q_unprojected(xi, q, m))
}

/// [`s_q`] straight from the formula, without the final projection onto
/// symmetric traceless matrices.
pub fn s_q_unprojected(xi: f64, q: &QTensor, m: &Mat3) -> Mat3 {
    let qp = *q.as_mat() + Mat3::IDENTITY * (1.0 / 3.0);
    let d = sym(m);
    let proj = frobenius(&qp, m);
    let r = d.matmul(&qp) + qp.matmul(&d) - qp * (2.0 * proj);
    r * xi
}

/// Commutator `Q·W - W·Q` without the antisymmetry check.
pub(crate) fn commutator(q: &Mat3, w: &Mat3) -> Mat3 {
    q.matmul(w) - w.matmul(q)
}

/// Co-rotation term `Q·W - W·Q` for an antisymmetric `W`.
pub fn corotation(q: &QTensor, w: &Mat3) -> Result<QTensor> {
    let s = sym(w).norm();
    if s > 1e-10 {
        return Err(Error::invalid(
            "corotation",
            format!("vorticity argument has symmetric part of norm {s:e}"),
        ));
    }
    Ok(QTensor::project(&commutator(q.as_mat(), w)))
}

/// `T(Q,∇v) = S_Q(D(v)) - Q·W(v) + W(v)·Q`.
pub fn t_tensor(xi: f64, q: &QTensor, gradv: &Mat3) -> QTensor {
    let d = sym(gradv);
    let w = antisym(gradv);
    let rot = commutator(q.as_mat(), &w);
    QTensor::project(&(*s_q(xi, q, &d).as_mat() - rot))
}

/// `σ(Q,∇v) = S_Q(T) - Q·T + T·Q` with `T = T(Q,∇v)`.
pub fn sigma_viscous(xi: f64, q: &QTensor, gradv: &Mat3) -> Mat3 {
    let t = t_tensor(xi, q, gradv);
    *s_q(xi, q, t.as_mat()).as_mat() - commutator(q.as_mat(), t.as_mat())
}

/// Rank-4 coefficient `Â(Q)` with `∇u:Â:∇v = T(Q,∇u):T(Q,∇v)`, assembled
/// as the Gram matrix of `T` over the nine unit gradients.
pub fn a_hat(xi: f64, q: &QTensor) -> Rank4Viscosity {
    let mut basis = [Mat3::ZERO; 9];
    for (p, t) in basis.iter_mut().enumerate() {
        *t = t_tensor(xi, q, &Mat3::unit(p / 3, p % 3)).into_mat();
    }
    let mut m = [[0.0; 9]; 9];
    for p in 0..9 {
        for r in p..9 {
            let v = frobenius(&basis[p], &basis[r]);
            m[p][r] = v;
            m[r][p] = v;
        }
    }
    Rank4Viscosity(m)
}

/// Deviation in the cancellation law
/// `(-S_Q(M) + QM - MQ):P = (-S_Q(S) + QA - AQ):M`, `S,A` the parts of `P`.
pub fn cancellation_check(xi: f64, q: &QTensor, m: &QTensor, p: &Mat3) -> f64 {
    let qm = q.as_mat();
    let mm = m.as_mat();
    let lhs_t = -*s_q(xi, q, mm).as_mat() + commutator(qm, mm);
    let s = sym(p);
    let a = antisym(p);
    let rhs_t = -*s_q(xi, q, &s).as_mat() + commutator(qm, &a);
    (frobenius(&lhs_t, p) - frobenius(&rhs_t, mm)).abs()
}
