//! Vertex-centred structured grids over a box and fields living on them.
//!
//! A Dirichlet axis with `n` cells carries `n + 1` nodes (both walls are
//! nodes); a periodic axis carries `n` nodes. Boundary values are stored in
//! the wall nodes themselves and derivatives there use one-sided second
//! order stencils, which is the same closure a quadratically extrapolated
//! ghost layer produces.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::tensor::{Mat3, QTensor, Rank3Gradient, Rank4Viscosity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Cell counts per axis.
    pub n: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
    pub periodic: [bool; 3],
}

impl GridSpec {
    /// Dirichlet cube `[0, 1]³` with `n` cells per axis.
    pub fn unit_cube(n: usize) -> Self {
        GridSpec {
            n: [n; 3],
            h: 1.0 / n as f64,
            origin: [0.0; 3],
            periodic: [false; 3],
        }
    }

    /// Fully periodic unit cube.
    pub fn periodic_cube(n: usize) -> Self {
        GridSpec {
            periodic: [true; 3],
            ..GridSpec::unit_cube(n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.iter().any(|&n| n < 4) {
            return Err(Error::invalid("GridSpec", format!("need at least 4 cells per axis, got {:?}", self.n)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("GridSpec", "spacing must be positive"));
        }
        Ok(())
    }

    pub fn nodes_along(&self, axis: usize) -> usize {
        if self.periodic[axis] {
            self.n[axis]
        } else {
            self.n[axis] + 1
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nodes_along(0), self.nodes_along(1), self.nodes_along(2)]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.n[0] as f64 * self.h,
            self.n[1] as f64 * self.h,
            self.n[2] as f64 * self.h,
        ]
    }

    pub fn volume(&self) -> f64 {
        self.extent().iter().product()
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let d = self.dims();
        ijk[0] + d[0] * (ijk[1] + d[1] * ijk[2])
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let d = self.dims();
        [idx % d[0], (idx / d[0]) % d[1], idx / (d[0] * d[1])]
    }

    pub fn coord(&self, ijk: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + ijk[0] as f64 * self.h,
            self.origin[1] + ijk[1] as f64 * self.h,
            self.origin[2] + ijk[2] as f64 * self.h,
        ]
    }

    /// Index is a wall node along `axis` (never for periodic axes).
    #[inline]
    pub fn at_wall(&self, axis: usize, i: usize) -> bool {
        !self.periodic[axis] && (i == 0 || i == self.n[axis])
    }

    pub fn is_boundary(&self, ijk: [usize; 3]) -> bool {
        (0..3).any(|a| self.at_wall(a, ijk[a]))
    }

    /// Number of axes along which the node sits on a wall (0 interior,
    /// 1 face, 2 edge, 3 corner).
    pub fn wall_count(&self, ijk: [usize; 3]) -> usize {
        (0..3).filter(|&a| self.at_wall(a, ijk[a])).count()
    }

    /// Neighbour index `ijk ± e_axis`, wrapping on periodic axes.
    #[inline]
    pub fn shift(&self, ijk: [usize; 3], axis: usize, delta: isize) -> Option<[usize; 3]> {
        let m = self.nodes_along(axis) as isize;
        let v = ijk[axis] as isize + delta;
        let v = if self.periodic[axis] {
            v.rem_euclid(m)
        } else if v < 0 || v >= m {
            return None;
        } else {
            v
        };
        let mut out = ijk;
        out[axis] = v as usize;
        Some(out)
    }

    /// Trapezoidal quadrature weight of a node.
    pub fn weight(&self, ijk: [usize; 3]) -> f64 {
        let mut w = self.h * self.h * self.h;
        for a in 0..3 {
            if self.at_wall(a, ijk[a]) {
                w *= 0.5;
            }
        }
        w
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.len()).map(move |i| self.unindex(i))
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_boundary(self.unindex(i))).collect()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(self.unindex(i))).collect()
    }

    pub fn has_walls(&self) -> bool {
        self.periodic.iter().any(|p| !p)
    }
}

/// Values that can live on grid nodes and be combined linearly.
pub trait FieldValue:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + std::fmt::Debug
{
    /// Number of flat components.
    const DIM: usize;
    /// Euclidean (Frobenius) inner product.
    fn dot(&self, other: &Self) -> f64;
    fn write_to(&self, out: &mut [f64]);
    fn read_from(src: &[f64]) -> Self;
}

impl FieldValue for f64 {
    const DIM: usize = 1;
    fn dot(&self, other: &Self) -> f64 {
        self * other
    }
    fn write_to(&self, out: &mut [f64]) {
        out[0] = *self;
    }
    fn read_from(src: &[f64]) -> Self {
        src[0]
    }
}

impl FieldValue for Mat3 {
    const DIM: usize = 9;
    fn dot(&self, other: &Self) -> f64 {
        crate::tensor::frobenius(self, other)
    }
    fn write_to(&self, out: &mut [f64]) {
        out[..9].copy_from_slice(&self.flatten());
    }
    fn read_from(src: &[f64]) -> Self {
        let mut a = [0.0; 9];
        a.copy_from_slice(&src[..9]);
        Mat3::from_flat(&a)
    }
}

impl FieldValue for QTensor {
    const DIM: usize = 9;
    fn dot(&self, other: &Self) -> f64 {
        crate::tensor::frobenius(self.as_mat(), other.as_mat())
    }
    fn write_to(&self, out: &mut [f64]) {
        out[..9].copy_from_slice(&self.as_mat().flatten());
    }
    fn read_from(src: &[f64]) -> Self {
        QTensor::project(&Mat3::read_from(src))
    }
}

/// Velocity-like 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl FieldValue for Vec3 {
    const DIM: usize = 3;
    fn dot(&self, o: &Self) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    fn write_to(&self, out: &mut [f64]) {
        out[..3].copy_from_slice(&self.0);
    }
    fn read_from(src: &[f64]) -> Self {
        Vec3([src[0], src[1], src[2]])
    }
}

impl FieldValue for Rank3Gradient {
    const DIM: usize = 27;
    fn dot(&self, o: &Self) -> f64 {
        self.0.iter().flatten().flatten().zip(o.0.iter().flatten().flatten()).map(|(a, b)| a * b).sum()
    }
    fn write_to(&self, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.0.iter().flatten().flatten()) {
            *o = *v;
        }
    }
    fn read_from(src: &[f64]) -> Self {
        let mut g = Rank3Gradient::ZERO;
        for (v, s) in g.0.iter_mut().flatten().flatten().zip(src) {
            *v = *s;
        }
        g
    }
}

impl Add for Rank3Gradient {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.0.iter_mut().flatten().flatten().zip(o.0.iter().flatten().flatten()).for_each(|(a, b)| *a += b);
        r
    }
}

impl Sub for Rank3Gradient {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for Rank3Gradient {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        let mut r = self;
        r.0.iter_mut().flatten().flatten().for_each(|a| *a *= s);
        r
    }
}

impl Add for Rank4Viscosity {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.0.iter_mut().flatten().zip(o.0.iter().flatten()).for_each(|(a, b)| *a += b);
        r
    }
}

impl Sub for Rank4Viscosity {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for Rank4Viscosity {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl FieldValue for Rank4Viscosity {
    const DIM: usize = 81;
    fn dot(&self, o: &Self) -> f64 {
        self.0.iter().flatten().zip(o.0.iter().flatten()).map(|(a, b)| a * b).sum()
    }
    fn write_to(&self, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.0.iter().flatten()) {
            *o = *v;
        }
    }
    fn read_from(src: &[f64]) -> Self {
        let mut m = Rank4Viscosity::default();
        for (v, s) in m.0.iter_mut().flatten().zip(src) {
            *v = *s;
        }
        m
    }
}

/// Node values of type `T` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: GridSpec,
    pub data: Vec<T>,
}

impl<T: FieldValue> Field<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            data: vec![T::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> T) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.coord(grid.unindex(i)))).collect();
        Field { grid, data }
    }

    /// Builds a field from a function of the node index triple.
    pub fn from_nodes(grid: GridSpec, f: impl Fn([usize; 3]) -> T + Sync + Send) -> Self {
        let data = crate::par::map_indices(grid.len(), |i| f(grid.unindex(i)));
        Field { grid, data }
    }

    pub fn constant(grid: GridSpec, v: T) -> Self {
        Field {
            grid,
            data: vec![v; grid.len()],
        }
    }

    #[inline]
    pub fn at(&self, ijk: [usize; 3]) -> T {
        self.data[self.grid.index(ijk)]
    }

    #[inline]
    pub fn set(&mut self, ijk: [usize; 3], v: T) {
        let i = self.grid.index(ijk);
        self.data[i] = v;
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(&T) -> U + Sync + Send) -> Field<U> {
        Field {
            grid: self.grid,
            data: crate::par::map_indices(self.data.len(), |i| f(&self.data[i])),
        }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(&self, other: &Field<U>, f: impl Fn(&T, &U) -> V + Sync + Send) -> Field<V> {
        Field {
            grid: self.grid,
            data: crate::par::map_indices(self.data.len(), |i| f(&self.data[i], &other.data[i])),
        }
    }

    pub fn axpy(&mut self, s: f64, x: &Field<T>) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a = *a + *b * s;
        }
    }

    pub fn scaled(&self, s: f64) -> Field<T> {
        self.map(|v| *v * s)
    }

    pub fn sub(&self, o: &Field<T>) -> Field<T> {
        self.zip_map(o, |a, b| *a - *b)
    }

    pub fn add(&self, o: &Field<T>) -> Field<T> {
        self.zip_map(o, |a, b| *a + *b)
    }

    /// Trapezoidal `∫ a·b`.
    pub fn inner(&self, o: &Field<T>) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for (i, (a, b)) in self.data.iter().zip(&o.data).enumerate() {
            s += g.weight(g.unindex(i)) * a.dot(b);
        }
        s
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `max |v|` over all nodes.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.dot(v).sqrt()))
    }

    /// Flattens the values at the given node indices.
    pub fn pack(&self, nodes: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; nodes.len() * T::DIM];
        for (chunk, &i) in out.chunks_mut(T::DIM).zip(nodes) {
            self.data[i].write_to(chunk);
        }
        out
    }

    /// Inverse of [`Field::pack`]; other nodes are left untouched.
    pub fn unpack(&mut self, nodes: &[usize], flat: &[f64]) {
        for (chunk, &i) in flat.chunks(T::DIM).zip(nodes) {
            self.data[i] = T::read_from(chunk);
        }
    }

    /// Zeroes every wall node.
    pub fn zero_boundary(&mut self) {
        for i in self.grid.boundary_indices() {
            self.data[i] = T::default();
        }
    }

    /// `max |v|` over wall nodes.
    pub fn boundary_max_norm(&self) -> f64 {
        self.grid
            .boundary_indices()
            .into_iter()
            .fold(0.0_f64, |m, i| m.max(self.data[i].dot(&self.data[i]).sqrt()))
    }
}

/// Strong anchoring data for `Q` (and implicit no-slip for `u`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// Anchor values; only wall nodes are meaningful.
    pub q_anchor: Field<QTensor>,
}

impl BoundaryData {
    /// Anchoring taken from the wall values of an initial field.
    pub fn from_field(q0: &Field<QTensor>) -> Result<Self> {
        for i in q0.grid.boundary_indices() {
            QTensor::try_new(*q0.data[i].as_mat())?;
        }
        let mut q_anchor = Field::zeros(q0.grid);
        for i in q0.grid.boundary_indices() {
            q_anchor.data[i] = q0.data[i];
        }
        Ok(BoundaryData { q_anchor })
    }

    pub fn homogeneous(grid: GridSpec) -> Self {
        BoundaryData {
            q_anchor: Field::zeros(grid),
        }
    }

    /// Overwrites the wall nodes of `qf` with the anchor values.
    pub fn apply(&self, qf: &mut Field<QTensor>) {
        for i in qf.grid.boundary_indices() {
            qf.data[i] = self.q_anchor.data[i];
        }
    }

    /// Largest mismatch between `qf` and the anchor on the walls.
    pub fn mismatch(&self, qf: &Field<QTensor>) -> f64 {
        qf.grid
            .boundary_indices()
            .into_iter()
            .map(|i| (*qf.data[i].as_mat() - *self.q_anchor.data[i].as_mat()).max_abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_roundtrip() {
        let g = GridSpec { n: [4, 5, 6], ..GridSpec::unit_cube(4) };
        for i in 0..g.len() {
            assert_eq!(g.index(g.unindex(i)), i);
        }
        assert_eq!(g.len(), 5 * 6 * 7);
    }

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let g = GridSpec::unit_cube(6);
        let s: f64 = g.iter_nodes().map(|n| g.weight(n)).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let p = GridSpec::periodic_cube(6);
        let s: f64 = p.iter_nodes().map(|n| p.weight(n)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shift_wraps_periodic_axes() {
        let p = GridSpec::periodic_cube(5);
        assert_eq!(p.shift([0, 0, 0], 0, -1), Some([4, 0, 0]));
        let d = GridSpec::unit_cube(5);
        assert_eq!(d.shift([0, 0, 0], 0, -1), None);
        assert_eq!(d.shift([5, 0, 0], 0, 1), None);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::unit_cube(3).validate().is_err());
        assert!(GridSpec::unit_cube(4).validate().is_ok());
    }
}
