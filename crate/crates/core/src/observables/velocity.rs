//! Weighted norms and velocity observables mixing position and frequency.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::grid::norm_sqr;
use crate::spectral::multiplier::{apply_real_multiplier, theta_component, velocity_calculus};
use crate::spectral::{ordered_sum, SpectralField};

use super::cutoff::SmoothCutoff;

/// Sign of the exponent in `e^(+-l(x))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSign {
    Plus,
    Minus,
}

impl WeightSign {
    fn factor(self) -> f64 {
        match self {
            WeightSign::Plus => 1.0,
            WeightSign::Minus => -1.0,
        }
    }
}

/// `ln ||e^(+-n.(x - x0)) psi||_2`, computed with the largest exponent factored out.
pub fn log_exp_weight_norm(psi: &SpectralField, normal: &[f64], origin: &[f64], sign: WeightSign) -> Result<f64> {
    let grid = psi.grid();
    if normal.len() != grid.dim() || origin.len() != grid.dim() {
        return Err(Error::InvalidParameter("weight direction has the wrong dimension".into()));
    }
    let s = sign.factor();
    let exponents = grid.sample(|x| s * x.iter().zip(normal.iter().zip(origin)).map(|(xi, (n, o))| n * (xi - o)).sum::<f64>());
    let top = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let phys = psi.to_physical();
    let sum: f64 = ordered_sum(phys.values().par_iter().zip(exponents.par_iter()).map(|(v, e)| (2.0 * (e - top)).exp() * v.norm_sqr()));
    Ok(top + 0.5 * (sum * grid.cell_volume()).ln())
}

/// `||e^(+-n.(x - x0)) psi||_2`.
///
/// Fails with `OverflowRisk` only when the value itself is not representable.
pub fn exp_weight_norm(psi: &SpectralField, normal: &[f64], origin: &[f64], sign: WeightSign) -> Result<f64> {
    let log_norm = log_exp_weight_norm(psi, normal, origin, sign)?;
    if log_norm > 700.0 {
        return Err(Error::OverflowRisk { log_norm });
    }
    Ok(log_norm.exp())
}

/// `||1_[lo, hi)(|x|^2 / t^2) psi||_2`.
pub fn velocity_band_mass(psi: &SpectralField, t: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("band mass needs t > 0, got {t}")));
    }
    let phys = psi.to_physical();
    let t2 = t * t;
    let mask = phys.grid().sample(|x| {
        let u = norm_sqr(x) / t2;
        lo <= u && u < hi
    });
    let s: f64 = ordered_sum(phys.values().par_iter().zip(mask.par_iter()).map(|(v, m)| if *m { v.norm_sqr() } else { 0.0 }));
    Ok((s * phys.grid().cell_volume()).sqrt())
}

/// `||g(|x|^2 / t^2) f(Theta^2) psi||_2`.
pub fn phase_space_norm(psi: &SpectralField, t: f64, g: &SmoothCutoff, f: &SmoothCutoff) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("phase-space norm needs t > 0, got {t}")));
    }
    let filtered = velocity_calculus(psi, |u| f.eval(u));
    let t2 = t * t;
    Ok(filtered.mul_by_position_fn(|x| g.eval(norm_sqr(x) / t2)).norm_l2())
}

/// `sum_j ||(x_j / t - Theta_j) psi||_2^2`.
pub fn velocity_defect(psi: &SpectralField, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("velocity defect needs t > 0, got {t}")));
    }
    let mut total = 0.0;
    for j in 0..psi.grid().dim() {
        let position = psi.mul_by_position_fn(|x| x[j] / t);
        let velocity = theta_component(psi, j)?;
        total += position.sub(&velocity)?.norm_sqr();
    }
    Ok(total)
}

/// `sum_j ||(x_j + t Theta_j) psi||_2^2`.
pub fn boosted_position_moment(psi: &SpectralField, t: f64) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..psi.grid().dim() {
        let position = psi.mul_by_position_fn(|x| x[j]);
        let velocity = theta_component(psi, j)?;
        total += position.axpy(Complex64::new(t, 0.0), &velocity)?.norm_sqr();
    }
    Ok(total)
}

/// `sum_j ||x_j psi||_2^2`.
pub fn position_moment(psi: &SpectralField) -> f64 {
    psi.mul_by_position_fn(|x| norm_sqr(x).sqrt()).norm_sqr()
}

/// `||<x>^gamma <grad>^s psi||_2`.
pub fn weighted_norm(psi: &SpectralField, gamma: f64, s: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&gamma) || s < 0.0 {
        return Err(Error::InvalidParameter(format!("weighted norm needs 0 <= gamma <= 2, s >= 0; got {gamma}, {s}")));
    }
    let smooth = if s == 0.0 {
        psi.clone()
    } else {
        apply_real_multiplier(psi, |xi| (1.0 + norm_sqr(xi)).powf(0.5 * s))?
    };
    Ok(smooth.mul_by_position_fn(|x| (1.0 + norm_sqr(x)).powf(0.5 * gamma)).norm_l2())
}
