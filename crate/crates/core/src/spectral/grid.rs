use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of grid points accepted by [`GridSpec::new`].
pub const DEFAULT_MAX_POINTS: usize = 1 << 24;

/// A periodic box `[-L/2, L/2)^d` sampled by `n` points per axis.
///
/// Points are stored row-major with the last axis contiguous. The frequency
/// lattice follows FFT ordering: storage index `j` on an axis of `n` points
/// carries the integer wave number `k = j` for `j < n/2` and `k = j - n`
/// otherwise, so `k` runs over `[-n/2, n/2 - 1]` and `xi = 2 pi k / L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    shape: Vec<usize>,
    lengths: Vec<f64>,
}

impl GridSpec {
    pub fn new(shape: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        Self::with_cap(shape, lengths, DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(shape: Vec<usize>, lengths: Vec<f64>, max_points: usize) -> Result<Self> {
        let d = shape.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if lengths.len() != d {
            return Err(Error::InvalidGrid(format!(
                "{} box lengths given for a {d}-dimensional grid",
                lengths.len()
            )));
        }
        for (axis, &n) in shape.iter().enumerate() {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: point count {n} is not a power of two >= 2"
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {axis}: box length {l} must be positive")));
            }
        }
        let total = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(t) if t <= max_points => Ok(Self { shape, lengths }),
            _ => Err(Error::InvalidGrid(format!(
                "{shape:?} exceeds the memory cap of {max_points} points"
            ))),
        }
    }

    /// Same point count and box length on every axis.
    pub fn cubic(dim: usize, n: usize, length: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.shape[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Quadrature weight of one frequency-lattice cell, `prod 2 pi / L`.
    pub fn frequency_cell_volume(&self) -> f64 {
        self.lengths.iter().map(|l| 2.0 * PI / l).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Coordinate of point `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.lengths[axis] + i as f64 * self.spacing(axis)
    }

    /// Signed integer wave number stored at index `j` along `axis`.
    pub fn wave_number(&self, axis: usize, j: usize) -> i64 {
        let n = self.shape[axis];
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    pub fn frequency(&self, axis: usize, j: usize) -> f64 {
        2.0 * PI * self.wave_number(axis, j) as f64 / self.lengths[axis]
    }

    /// Storage index of the integer wave number `k` along `axis`.
    pub fn frequency_index(&self, axis: usize, k: i64) -> Option<usize> {
        let n = self.shape[axis] as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.shape[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    pub fn frequencies(&self, axis: usize) -> Vec<f64> {
        (0..self.shape[axis]).map(|j| self.frequency(axis, j)).collect()
    }

    /// Evaluates `f` at every grid point in storage order.
    pub fn sample<T, F>(&self, f: F) -> Vec<T>
    where
        F: Fn(&[f64]) -> T,
    {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.coordinates(a)).collect();
        self.tabulate(&axes, f)
    }

    /// Evaluates `f` at every lattice frequency in storage order.
    pub fn sample_frequencies<T, F>(&self, f: F) -> Vec<T>
    where
        F: Fn(&[f64]) -> T,
    {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.frequencies(a)).collect();
        self.tabulate(&axes, f)
    }

    fn tabulate<T, F>(&self, axes: &[Vec<f64>], f: F) -> Vec<T>
    where
        F: Fn(&[f64]) -> T,
    {
        let mut out = Vec::with_capacity(self.len());
        let mut point = [0.0; 3];
        let d = self.dim();
        match d {
            1 => {
                for &a in &axes[0] {
                    point[0] = a;
                    out.push(f(&point[..1]));
                }
            }
            2 => {
                for &a in &axes[0] {
                    for &b in &axes[1] {
                        point[0] = a;
                        point[1] = b;
                        out.push(f(&point[..2]));
                    }
                }
            }
            _ => {
                for &a in &axes[0] {
                    for &b in &axes[1] {
                        for &c in &axes[2] {
                            point[0] = a;
                            point[1] = b;
                            point[2] = c;
                            out.push(f(&point[..3]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Splits a flat storage index into per-axis indices.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Parity of the summed storage indices, i.e. `(-1)^(k_1 + ... + k_d)`.
    pub(crate) fn checkerboard_sign(&self, flat: usize) -> f64 {
        let idx = self.unravel(flat);
        if idx[..self.dim()].iter().sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Euclidean norm of a point or frequency vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_sqr(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// The relativistic symbol `<xi> = sqrt(1 + |xi|^2)`.
pub fn japanese(xi: &[f64]) -> f64 {
    (1.0 + norm_sqr(xi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(GridSpec::cubic(1, 100, 10.0).is_err());
        assert!(GridSpec::cubic(4, 8, 10.0).is_err());
        assert!(GridSpec::new(vec![8, 8], vec![1.0]).is_err());
        assert!(GridSpec::cubic(1, 8, -1.0).is_err());
    }

    #[test]
    fn memory_cap_is_enforced() {
        assert!(GridSpec::with_cap(vec![64, 64], vec![1.0, 1.0], 1000).is_err());
        assert!(GridSpec::with_cap(vec![16, 16], vec![1.0, 1.0], 1000).is_ok());
    }

    #[test]
    fn frequency_lattice_is_symmetric_range() {
        let g = GridSpec::cubic(1, 8, 2.0 * PI).unwrap();
        let ks: Vec<i64> = (0..8).map(|j| g.wave_number(0, j)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.frequency(0, 5), -3.0);
        for k in -4..4 {
            let j = g.frequency_index(0, k).unwrap();
            assert_eq!(g.wave_number(0, j), k);
        }
        assert!(g.frequency_index(0, 4).is_none());
    }

    #[test]
    fn coordinates_are_origin_centered() {
        let g = GridSpec::cubic(1, 4, 8.0).unwrap();
        assert_eq!(g.coordinates(0), vec![-4.0, -2.0, 0.0, 2.0]);
    }

    #[test]
    fn ravel_unravel_roundtrip() {
        let g = GridSpec::new(vec![4, 8, 2], vec![1.0, 1.0, 1.0]).unwrap();
        for flat in 0..g.len() {
            let idx = g.unravel(flat);
            assert_eq!(g.ravel(&idx[..3]), flat);
        }
        let pts = g.sample(|x| x.to_vec());
        assert_eq!(pts[g.ravel(&[1, 2, 1])], vec![g.coordinate(0, 1), g.coordinate(1, 2), g.coordinate(2, 1)]);
    }
}
