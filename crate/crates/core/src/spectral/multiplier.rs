//! Diagonal Fourier multipliers: functions of `-i grad` applied on the lattice.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{Representation, SpectralField};
use super::grid::{japanese, norm_sqr, GridSpec};
use crate::error::{Error, Result};

/// A function of the frequency vector.
pub trait Symbol: Sync {
    fn eval(&self, xi: &[f64]) -> Complex64;
}

impl<F> Symbol for F
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn eval(&self, xi: &[f64]) -> Complex64 {
        self(xi)
    }
}

/// Tabulates a symbol on the frequency lattice in storage order.
pub fn tabulate<S: Symbol + ?Sized>(grid: &GridSpec, m: &S) -> Result<Vec<Complex64>> {
    let values = grid.sample_frequencies(|xi| m.eval(xi));
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        let idx = grid.unravel(i);
        let xi = (0..grid.dim()).map(|a| grid.frequency(a, idx[a])).collect();
        return Err(Error::NonFiniteSymbol { xi });
    }
    Ok(values)
}

/// Multiplies frequency coefficients by pre-tabulated symbol values.
///
/// The result stays in the frequency representation.
pub fn apply_table(field: &SpectralField, table: &[Complex64]) -> Result<SpectralField> {
    if table.len() != field.grid().len() {
        return Err(Error::GridMismatch);
    }
    let hat = field.to_frequency();
    let values = hat
        .values()
        .par_iter()
        .zip(table.par_iter())
        .map(|(v, m)| v * m)
        .collect();
    SpectralField::from_values(hat.grid().clone(), values, Representation::Frequency)
}

/// Applies `m(-i grad)`; the output keeps the representation of the input.
pub fn apply_multiplier<S: Symbol + ?Sized>(field: &SpectralField, m: &S) -> Result<SpectralField> {
    let table = tabulate(field.grid(), m)?;
    Ok(apply_table(field, &table)?.into_representation(field.representation()))
}

/// Applies a real symbol; cheaper than the complex form for the common case.
pub fn apply_real_multiplier<F>(field: &SpectralField, m: F) -> Result<SpectralField>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    apply_multiplier(field, &|xi: &[f64]| Complex64::new(m(xi), 0.0))
}

/// `<xi>^s`.
pub fn bessel_power(s: f64) -> impl Fn(&[f64]) -> Complex64 + Sync {
    move |xi: &[f64]| Complex64::new((1.0 + norm_sqr(xi)).powf(0.5 * s), 0.0)
}

/// Symbol table of the free flow `e^(-it<xi>)`.
pub fn free_propagator_table(grid: &GridSpec, t: f64) -> Vec<Complex64> {
    grid.sample_frequencies(|xi| Complex64::from_polar(1.0, -t * japanese(xi)))
}

/// `e^(-it<grad>) f`, returned in the representation of `f`.
pub fn free_propagate(field: &SpectralField, t: f64) -> SpectralField {
    let table = free_propagator_table(field.grid(), t);
    apply_table(field, &table)
        .expect("table built on the field's own grid")
        .into_representation(field.representation())
}

/// `|xi|^2 / (1 + |xi|^2)`, the symbol of the squared velocity.
pub fn theta_squared(xi: &[f64]) -> f64 {
    let q = norm_sqr(xi);
    q / (1.0 + q)
}

/// `f(Theta^2)` for a function `f` on `[0, 1]`.
pub fn velocity_calculus<F>(field: &SpectralField, f: F) -> SpectralField
where
    F: Fn(f64) -> f64 + Sync,
{
    apply_real_multiplier(field, |xi| f(theta_squared(xi))).expect("velocity symbols are finite")
}

/// Component `Theta_j = -i d_j <grad>^-1`, symbol `xi_j / <xi>`.
pub fn theta_component(field: &SpectralField, j: usize) -> Result<SpectralField> {
    if j >= field.grid().dim() {
        return Err(Error::InvalidParameter(format!(
            "axis {j} out of range for a {}-dimensional grid",
            field.grid().dim()
        )));
    }
    apply_real_multiplier(field, move |xi| xi[j] / japanese(xi))
}

/// `Im sqrt(|xi|^2 + 2i n.xi)` on the principal branch.
pub fn g0_symbol(xi: &[f64], n: &[f64]) -> f64 {
    let dot: f64 = xi.iter().zip(n).map(|(a, b)| a * b).sum();
    Complex64::new(norm_sqr(xi), 2.0 * dot).sqrt().im
}

/// Supremum of `|g0_symbol|` over the frequency lattice.
pub fn g0_symbol_max(grid: &GridSpec, n: &[f64]) -> Result<f64> {
    if n.len() != grid.dim() {
        return Err(Error::InvalidParameter("direction has the wrong dimension".into()));
    }
    let len = norm_sqr(n).sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction must be a unit vector, |n| = {len}")));
    }
    Ok(grid
        .sample_frequencies(|xi| g0_symbol(xi, n).abs())
        .into_iter()
        .fold(0.0, f64::max))
}
