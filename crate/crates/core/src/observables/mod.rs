//! Conserved quantities, norms and per-snapshot records.

pub mod cutoff;
pub mod regions;
pub mod velocity;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::ConvolutionKernel;
use crate::spectral::grid::norm_sqr;
use crate::spectral::{ordered_sum, SpectralField};

pub use cutoff::SmoothCutoff;
pub use regions::{region_distance, region_mass, ConvexRegion, SeparatingFunctional};
pub use velocity::{
    boosted_position_moment, exp_weight_norm, log_exp_weight_norm, phase_space_norm, position_moment, velocity_band_mass,
    velocity_defect, weighted_norm, WeightSign,
};

/// `int |psi|^2`.
pub fn mass(psi: &SpectralField) -> f64 {
    psi.norm_sqr()
}

/// `P = -(i/2) int conj(psi) grad psi = (1/2) int xi |psi_hat|^2`.
pub fn momentum(psi: &SpectralField) -> Vec<f64> {
    let hat = psi.to_frequency();
    let grid = hat.grid();
    let w = 0.5 * grid.frequency_cell_volume();
    let weighted = grid.sample_frequencies(|xi| xi.to_vec());
    (0..grid.dim())
        .map(|a| {
            w * ordered_sum(hat.values().par_iter().zip(weighted.par_iter()).map(|(v, xi)| xi[a] * v.norm_sqr()))
        })
        .collect()
}

/// `E = (1/2) <psi, <grad> psi> + (1/4) int (w * |psi|^2) |psi|^2`.
pub fn energy(psi: &SpectralField, kernel: &ConvolutionKernel) -> Result<f64> {
    if psi.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let kinetic = 0.5 * symbol_weighted_sum(psi, |q| (1.0 + q).sqrt());
    let rho = psi.density();
    let potential = if kernel.is_zero() {
        0.0
    } else {
        let v = kernel.convolve(&rho);
        0.25 * psi.grid().cell_volume() * ordered_sum(v.par_iter().zip(rho.par_iter()).map(|(a, b)| a * b))
    };
    Ok(kinetic + potential)
}

/// `sum m(|xi|^2) |psi_hat|^2 dxi`.
fn symbol_weighted_sum<F>(psi: &SpectralField, m: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let hat = psi.to_frequency();
    let grid = hat.grid();
    let sym = grid.sample_frequencies(|xi| m(norm_sqr(xi)));
    grid.frequency_cell_volume()
        * ordered_sum(hat.values().par_iter().zip(sym.par_iter()).map(|(v, s)| s * v.norm_sqr()))
}

/// `||<grad>^s psi||_2`.
pub fn hs_norm(psi: &SpectralField, s: f64) -> f64 {
    symbol_weighted_sum(psi, |q| (1.0 + q).powf(s)).sqrt()
}

pub fn lp_norm(psi: &SpectralField, p: f64) -> f64 {
    let phys = psi.to_physical();
    let s: f64 = ordered_sum(phys.values().par_iter().map(|v| v.norm().powf(p)));
    (s * phys.grid().cell_volume()).powf(1.0 / p)
}

pub fn linf_norm(psi: &SpectralField) -> f64 {
    psi.to_physical().max_abs()
}

/// Sobolev index `d/2 + 1` used for tracked norms by default.
pub fn default_sobolev_index(dim: usize) -> f64 {
    0.5 * dim as f64 + 1.0
}

/// Named scalar diagnostics at one time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub values: Vec<(String, f64)>,
}

impl ObservableRecord {
    pub fn new(t: f64) -> Self {
        Self { t, values: Vec::new() }
    }

    /// Inserts or overwrites a column, keeping first-insertion order.
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        match self.values.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value,
            None => self.values.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn all_finite(&self) -> bool {
        self.t.is_finite() && self.values.iter().all(|(_, v)| v.is_finite())
    }
}

/// Which norms the standard record tracks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSettings {
    pub sobolev_index: f64,
    pub lebesgue_exponent: f64,
}

impl NormSettings {
    pub fn for_dim(dim: usize) -> Self {
        Self { sobolev_index: default_sobolev_index(dim), lebesgue_exponent: 4.0 }
    }
}

/// Mass, energy, momentum and the tracked norms.
pub fn standard_record(
    psi: &SpectralField,
    kernel: &ConvolutionKernel,
    t: f64,
    norms: NormSettings,
) -> Result<ObservableRecord> {
    let mut rec = ObservableRecord::new(t);
    rec.set("mass", mass(psi));
    rec.set("energy", energy(psi, kernel)?);
    for (j, p) in momentum(psi).into_iter().enumerate() {
        rec.set(format!("momentum_{}", j + 1), p);
    }
    rec.set("Hs_norm", hs_norm(psi, norms.sobolev_index));
    rec.set("Linf_norm", linf_norm(psi));
    rec.set("Lp_norm", lp_norm(psi, norms.lebesgue_exponent));
    Ok(rec)
}

/// Writes records as CSV; the header is the union of columns in first-seen order.
pub fn write_csv<W: Write>(w: W, records: &[ObservableRecord]) -> Result<()> {
    let mut columns: Vec<String> = Vec::new();
    for r in records {
        for (k, _) in &r.values {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(columns.iter().cloned());
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![format_float(r.t)];
        row.extend(columns.iter().map(|c| r.get(c).map(format_float).unwrap_or_default()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn format_float(v: f64) -> String {
    format!("{v:.17e}")
}
