//! Lattice samples of scalar functions and the function-space operations on
//! them: sliding suprema, the int norm, dilations, sup-convolution, Gaussian
//! smoothing, weighted L1 pairings and the quasicontraction norm.

mod envelope;
mod io;
mod smooth;
mod triple;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

pub use envelope::{infconvolve, supconvolve};
pub use io::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use smooth::{bump, bump_mass, gaussian_convolve, MollifierKind, MollifierSpec};
pub use triple::{norm_triple, triple_norm_horizon, TripleNormConfig};
pub use window::{check_window_inequality, dilate_by_hull, norm_int, sliding_sup};

/// How values outside the lattice are defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Extend by the value of the nearest edge node.
    #[default]
    ConstantExtension,
    /// Period `n h` along each axis.
    Periodic,
}

impl Boundary {
    /// Map a possibly out-of-range index onto `0..n`.
    #[inline]
    pub fn index(self, i: isize, n: usize) -> usize {
        match self {
            Boundary::ConstantExtension => i.clamp(0, n as isize - 1) as usize,
            Boundary::Periodic => i.rem_euclid(n as isize) as usize,
        }
    }
}

/// Uniform node-centred lattice sample of a function on a box in R^d, d ∈ {1, 2}.
///
/// Node `(i, j)` sits at `origin + h (i, j)`; values are stored row-major with
/// the last axis fastest (`idx = i * ny + j`). In one dimension `ny = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    dim: usize,
    h: f64,
    origin: [f64; 2],
    shape: [usize; 2],
    values: Vec<f64>,
    boundary: Boundary,
}

impl GridField {
    pub fn new(
        dim: usize,
        h: f64,
        origin: [f64; 2],
        shape: [usize; 2],
        values: Vec<f64>,
        boundary: Boundary,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Shape(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Shape(format!("spacing must be positive, got {h}")));
        }
        let shape = if dim == 1 { [shape[0], 1] } else { shape };
        if shape[0] == 0 || shape[1] == 0 {
            return Err(Error::Shape("empty lattice".into()));
        }
        if values.len() != shape[0] * shape[1] {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                shape[0] * shape[1],
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite value {v}")));
        }
        Ok(GridField { dim, h, origin, shape, values, boundary })
    }

    /// Nodes `lo, lo + h, ..., hi` (the count is rounded to the nearest integer).
    pub fn from_fn_1d(lo: f64, hi: f64, h: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = ((hi - lo) / h).round() as usize + 1;
        let values = (0..n).map(|i| f(lo + i as f64 * h)).collect();
        GridField {
            dim: 1,
            h,
            origin: [lo, 0.0],
            shape: [n, 1],
            values,
            boundary: Boundary::ConstantExtension,
        }
    }

    /// Square box `[lo, hi]^2`.
    pub fn from_fn_2d(lo: f64, hi: f64, h: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = ((hi - lo) / h).round() as usize + 1;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(lo + i as f64 * h, lo + j as f64 * h));
            }
        }
        GridField {
            dim: 2,
            h,
            origin: [lo, lo],
            shape: [n, n],
            values,
            boundary: Boundary::ConstantExtension,
        }
    }

    pub fn zeros_like(&self) -> Self {
        self.with_values(vec![0.0; self.values.len()])
    }

    /// Same lattice, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len(), "value count mismatch");
        GridField { values, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> Self {
        GridField {
            dim: self.dim,
            h: self.h,
            origin: self.origin,
            shape: self.shape,
            values: Vec::new(),
            boundary: self.boundary,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.shape[1] + j
    }

    /// Coordinates of node `k` (flat index).
    pub fn coord(&self, k: usize) -> [f64; 2] {
        let i = k / self.shape[1];
        let j = k % self.shape[1];
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn coords(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |k| self.coord(k))
    }

    /// Value at a (possibly out-of-range) lattice index, per the boundary policy.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let ii = self.boundary.index(i, self.shape[0]);
        let jj = if self.dim == 1 { 0 } else { self.boundary.index(j, self.shape[1]) };
        self.values[ii * self.shape[1] + jj]
    }

    /// Multilinear interpolation at an arbitrary point.
    pub fn sample(&self, x: [f64; 2]) -> f64 {
        let fx = (x[0] - self.origin[0]) / self.h;
        let i0 = fx.floor();
        let wx = fx - i0;
        let i0 = i0 as isize;
        if self.dim == 1 {
            return (1.0 - wx) * self.at(i0, 0) + wx * self.at(i0 + 1, 0);
        }
        let fy = (x[1] - self.origin[1]) / self.h;
        let j0 = fy.floor();
        let wy = fy - j0;
        let j0 = j0 as isize;
        (1.0 - wx) * ((1.0 - wy) * self.at(i0, j0) + wy * self.at(i0, j0 + 1))
            + wx * ((1.0 - wy) * self.at(i0 + 1, j0) + wy * self.at(i0 + 1, j0 + 1))
    }

    /// Nearest node to `x` (clamped into the lattice).
    pub fn nearest_index(&self, x: [f64; 2]) -> usize {
        let i = ((x[0] - self.origin[0]) / self.h).round().clamp(0.0, (self.shape[0] - 1) as f64)
            as usize;
        let j = if self.dim == 1 {
            0
        } else {
            ((x[1] - self.origin[1]) / self.h).round().clamp(0.0, (self.shape[1] - 1) as f64)
                as usize
        };
        self.idx(i, j)
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.dim == other.dim
            && self.shape == other.shape
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.origin[0] - other.origin[0]).abs() <= 1e-9 * self.h.max(1.0)
            && (self.origin[1] - other.origin[1]).abs() <= 1e-9 * self.h.max(1.0)
    }

    pub fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: {:?}/{} vs {:?}/{}",
                self.shape, self.h, other.shape, other.h
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        self.check_same_grid(other)?;
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn abs(&self) -> GridField {
        self.map(f64::abs)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `h^d Σ values` with pairwise summation.
    pub fn integral(&self) -> f64 {
        self.cell_volume() * pairwise_sum(&self.values)
    }

    pub fn l1_norm(&self) -> f64 {
        self.abs().integral()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Largest absolute value on the outermost ring of nodes.
    pub fn edge_max_abs(&self) -> f64 {
        let [nx, ny] = self.shape;
        let mut m: f64 = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let edge = i == 0 || i == nx - 1 || (self.dim == 2 && (j == 0 || j == ny - 1));
                if edge {
                    m = m.max(self.values[self.idx(i, j)].abs());
                }
            }
        }
        m
    }

    /// Extend the lattice by `pad` nodes on every side, filling with `fill`.
    pub fn padded(&self, pad: usize, fill: f64) -> GridField {
        let [nx, ny] = self.shape;
        let (px, py) = (pad, if self.dim == 2 { pad } else { 0 });
        let (mx, my) = (nx + 2 * px, ny + 2 * py);
        let mut values = vec![fill; mx * my];
        for i in 0..nx {
            for j in 0..ny {
                values[(i + px) * my + (j + py)] = self.values[self.idx(i, j)];
            }
        }
        GridField {
            dim: self.dim,
            h: self.h,
            origin: [
                self.origin[0] - px as f64 * self.h,
                self.origin[1] - py as f64 * self.h,
            ],
            shape: [mx, my],
            values,
            boundary: self.boundary,
        }
    }
}

/// Which norm a [`NormValue`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NormKind {
    L1,
    Linf,
    Int,
    Triple,
    WeightedL1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub name: NormKind,
    pub value: f64,
    /// Window half-width for the int norm.
    pub window_radius: Option<f64>,
    /// Time horizon used for the quasicontraction norm.
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    /// Time at which the supremum defining the quasicontraction norm was attained.
    pub argmax_time: Option<f64>,
}

impl NormValue {
    pub fn simple(name: NormKind, value: f64) -> Self {
        NormValue { name, value, window_radius: None, horizon: None, samples: None, argmax_time: None }
    }
}

/// `h^d Σ |f| w`.
pub fn weighted_l1(f: &GridField, w: &GridField) -> Result<f64> {
    f.check_same_grid(w)?;
    let terms: Vec<f64> = f.values.iter().zip(&w.values).map(|(a, b)| a.abs() * b).collect();
    Ok(f.cell_volume() * pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_l1_special_cases() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.1, |x| x);
        let ones = f.map(|_| 1.0);
        assert!((weighted_l1(&f, &ones).unwrap() - f.l1_norm()).abs() < 1e-15);
        assert_eq!(weighted_l1(&f, &f.zeros_like()).unwrap(), 0.0);
        let mut ind = f.zeros_like();
        ind.values_mut()[3] = 1.0;
        assert!((weighted_l1(&ind, &ind).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn weighted_l1_rejects_grid_mismatch() {
        let f = GridField::from_fn_1d(-1.0, 1.0, 0.1, |x| x);
        let g = GridField::from_fn_1d(-1.0, 1.0, 0.05, |x| x);
        assert!(matches!(weighted_l1(&f, &g), Err(Error::Shape(_))));
    }

    #[test]
    fn boundary_index_policies() {
        assert_eq!(Boundary::ConstantExtension.index(-3, 5), 0);
        assert_eq!(Boundary::ConstantExtension.index(7, 5), 4);
        assert_eq!(Boundary::Periodic.index(-1, 5), 4);
        assert_eq!(Boundary::Periodic.index(6, 5), 1);
    }

    #[test]
    fn sample_is_exact_for_affine_functions() {
        let f = GridField::from_fn_2d(-1.0, 1.0, 0.25, |x, y| 2.0 * x - y + 0.5);
        let v = f.sample([0.3, -0.41]);
        assert!((v - (0.6 + 0.41 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(GridField::new(1, 0.0, [0.0; 2], [3, 1], vec![0.0; 3], Boundary::Periodic).is_err());
        assert!(GridField::new(3, 0.1, [0.0; 2], [3, 1], vec![0.0; 3], Boundary::Periodic).is_err());
        assert!(GridField::new(1, 0.1, [0.0; 2], [3, 1], vec![0.0; 2], Boundary::Periodic).is_err());
        assert!(GridField::new(1, 0.1, [0.0; 2], [1, 1], vec![f64::NAN], Boundary::Periodic).is_err());
    }
}
