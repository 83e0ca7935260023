use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::fft::fft_nd;
use super::grid::GridSpec;
use super::ordered_sum;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Physical,
    Frequency,
}

/// Complex samples of a function on a periodic grid.
///
/// In the frequency representation the values approximate the unitary
/// Fourier transform `(2 pi)^(-d/2) int f(x) e^(-i x.xi) dx` at the lattice
/// frequencies, so Parseval holds with the grid weights:
/// `sum |f|^2 dx^d == sum |f_hat|^2 dxi^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<Complex64>,
    repr: Representation,
}

impl SpectralField {
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, repr })
    }

    pub fn zeros(grid: &GridSpec, repr: Representation) -> Self {
        Self {
            values: vec![Complex64::default(); grid.len()],
            grid: grid.clone(),
            repr,
        }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        Self {
            values: grid.sample(f),
            grid: grid.clone(),
            repr: Representation::Physical,
        }
    }

    /// Samples a function of frequency on the lattice.
    pub fn from_frequency_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        Self {
            values: grid.sample_frequencies(f),
            grid: grid.clone(),
            repr: Representation::Frequency,
        }
    }

    pub fn from_real(grid: &GridSpec, values: &[f64]) -> Result<Self> {
        Self::from_values(
            grid.clone(),
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            Representation::Physical,
        )
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn is_physical(&self) -> bool {
        self.repr == Representation::Physical
    }

    pub fn to_frequency(&self) -> SpectralField {
        self.clone().into_frequency()
    }

    pub fn to_physical(&self) -> SpectralField {
        self.clone().into_physical()
    }

    pub fn into_frequency(mut self) -> SpectralField {
        if self.repr == Representation::Physical {
            forward(&self.grid, &mut self.values);
            self.repr = Representation::Frequency;
        }
        self
    }

    pub fn into_physical(mut self) -> SpectralField {
        if self.repr == Representation::Frequency {
            inverse(&self.grid, &mut self.values);
            self.repr = Representation::Physical;
        }
        self
    }

    pub fn into_representation(self, repr: Representation) -> SpectralField {
        match repr {
            Representation::Physical => self.into_physical(),
            Representation::Frequency => self.into_frequency(),
        }
    }

    /// Quadrature weight matching the current representation.
    pub fn weight(&self) -> f64 {
        match self.repr {
            Representation::Physical => self.grid.cell_volume(),
            Representation::Frequency => self.grid.frequency_cell_volume(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight() * ordered_sum(self.values.par_iter().map(|v| v.norm_sqr()))
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>` in L^2, antilinear in the first slot.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.check_grid(other)?;
        let rhs = other.clone().into_representation(self.repr);
        let s: Complex64 = ordered_sum(self.values.par_iter().zip(rhs.values.par_iter()).map(|(a, b)| a.conj() * b));
        Ok(s * self.weight())
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&self, c: Complex64) -> SpectralField {
        let values = self.values.par_iter().map(|v| v * c).collect();
        Self { values, ..self.clone_shell() }
    }

    /// `self + c * other`, returned in the representation of `self`.
    pub fn axpy(&self, c: Complex64, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        let rhs = other.clone().into_representation(self.repr);
        let values = self
            .values
            .par_iter()
            .zip(rhs.values.par_iter())
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self { values, ..self.clone_shell() })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// Pointwise product with a real function of position.
    pub fn mul_by_position_fn<F>(&self, f: F) -> SpectralField
    where
        F: Fn(&[f64]) -> f64,
    {
        let weights = self.grid.sample(f);
        let phys = self.to_physical();
        let values = phys
            .values
            .par_iter()
            .zip(weights.par_iter())
            .map(|(v, w)| v * w)
            .collect();
        Self { values, ..phys.clone_shell() }
    }

    /// Pointwise product with real weights given in storage order.
    pub fn mul_by_weights(&self, weights: &[f64]) -> Result<SpectralField> {
        if weights.len() != self.grid.len() {
            return Err(Error::InvalidParameter("weight array has the wrong length".into()));
        }
        let phys = self.to_physical();
        let values = phys
            .values
            .par_iter()
            .zip(weights.par_iter())
            .map(|(v, w)| v * w)
            .collect();
        Ok(Self { values, ..phys.clone_shell() })
    }

    /// Pointwise `|f|^2` in physical space.
    pub fn density(&self) -> Vec<f64> {
        let phys = self.to_physical();
        phys.values.par_iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.par_iter().map(|v| v.norm()).reduce(|| 0.0, f64::max)
    }

    fn clone_shell(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: Vec::new(),
            repr: self.repr,
        }
    }
}

fn unitary_factor(grid: &GridSpec) -> f64 {
    (grid.cell_volume() / (2.0 * PI).sqrt().powi(grid.dim() as i32)).abs()
}

/// Physical samples -> unitary transform samples.
///
/// The origin-centered grid contributes the phase `e^(i pi k) = (-1)^k`
/// on top of the plain DFT.
pub(crate) fn forward(grid: &GridSpec, values: &mut [Complex64]) {
    fft_nd(values, grid.shape(), FftDirection::Forward);
    let c = unitary_factor(grid);
    values.par_iter_mut().enumerate().for_each(|(i, v)| {
        *v *= c * grid.checkerboard_sign(i);
    });
}

pub(crate) fn inverse(grid: &GridSpec, values: &mut [Complex64]) {
    let c = 1.0 / (unitary_factor(grid) * grid.len() as f64);
    values.par_iter_mut().enumerate().for_each(|(i, v)| {
        *v *= c * grid.checkerboard_sign(i);
    });
    fft_nd(values, grid.shape(), FftDirection::Inverse);
}
