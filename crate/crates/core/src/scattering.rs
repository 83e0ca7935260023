//! Scattering states, the wave operator and their roundtrip at a finite horizon.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{interaction_integrand, nonlinearity_hat, sup_difference, PicardReport, Stepper};
use crate::error::{Error, Result};
use crate::fit::{power_law_fit, truncated_power_fit, window};
use crate::observables::{default_sobolev_index, SmoothCutoff};
use crate::potentials::ConvolutionKernel;
use crate::spectral::field::inverse;
use crate::spectral::grid::{japanese, norm_sqr};
use crate::spectral::multiplier::{theta_squared, velocity_calculus};
use crate::spectral::{ordered_sum, GridSpec, Representation, SpectralField};

fn default_dt() -> f64 {
    0.02
}
fn default_true() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    60
}
fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    /// Horizon at which the improper time integrals are cut.
    pub t_inf: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_true")]
    pub tail_estimate: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Residual history is sampled every this many steps.
    #[serde(default = "default_stride")]
    pub history_stride: usize,
    /// Sobolev index of all reported norms; `d/2 + 1` when absent.
    #[serde(default)]
    pub sobolev_index: Option<f64>,
}

impl ScatteringConfig {
    pub fn new(t_inf: f64, dt: f64) -> Self {
        Self {
            t_inf,
            dt,
            tail_estimate: true,
            tol: default_tol(),
            max_iter: default_max_iter(),
            history_stride: default_stride(),
            sobolev_index: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors("scattering", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    pub(crate) fn collect_errors(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.t_inf.is_finite() && self.t_inf > 0.0) {
            errors.push(format!("{path}.t_inf: must be positive, got {}", self.t_inf));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_inf) {
            errors.push(format!("{path}.dt: must lie in (0, t_inf], got {}", self.dt));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            errors.push(format!("{path}.tol: must lie in (0, 1e-2], got {}", self.tol));
        }
        if self.max_iter == 0 {
            errors.push(format!("{path}.max_iter: must be at least 1"));
        }
        if self.history_stride == 0 {
            errors.push(format!("{path}.history_stride: must be at least 1"));
        }
    }

    fn lattice(&self) -> (usize, f64) {
        let steps = ((self.t_inf / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_inf / steps as f64)
    }

    fn sobolev(&self, dim: usize) -> f64 {
        self.sobolev_index.unwrap_or_else(|| default_sobolev_index(dim))
    }
}

/// Outcome of a scattering computation; the state itself is not serialized.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringResult {
    #[serde(skip)]
    pub psi: SpectralField,
    pub t_inf: f64,
    pub dt: f64,
    pub sobolev_index: f64,
    /// `(t, ||psi_t - e^(-it<grad>) psi_+||_Hs)` at the sampled times.
    pub residual_history: Vec<[f64; 2]>,
    /// `(t, ||e^(it<grad>) F(psi_t)||_Hs)` at every step.
    pub integrand_history: Vec<[f64; 2]>,
    /// Extrapolated `int_T^inf` of the integrand norm; infinite when the fitted decay is too slow.
    pub tail_bound: f64,
    pub integrand_exponent: Option<f64>,
    /// Exponent of the truncation-aware fit of the residual history.
    pub fitted_decay_exponent: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    /// Relative gap between the trapezoid Duhamel sum and the integrator's own interaction-picture state.
    pub quadrature_defect: Option<f64>,
    pub contraction: Option<PicardReport>,
    pub config: ScatteringConfig,
}

struct Tables {
    omega: Vec<f64>,
    weight: Vec<f64>,
    cell: f64,
}

impl Tables {
    fn new(grid: &GridSpec, s: f64) -> Self {
        Self {
            omega: grid.sample_frequencies(japanese),
            weight: grid.sample_frequencies(|xi| (1.0 + norm_sqr(xi)).powf(s)),
            cell: grid.frequency_cell_volume(),
        }
    }

    fn hs(&self, v: &[Complex64]) -> f64 {
        let s: f64 = ordered_sum(v.par_iter().zip(self.weight.par_iter()).map(|(a, w)| w * a.norm_sqr()));
        (s * self.cell).sqrt()
    }

    fn rotate(&self, v: &[Complex64], t: f64) -> Vec<Complex64> {
        v.par_iter().zip(self.omega.par_iter()).map(|(a, w)| a * Complex64::from_polar(1.0, t * w)).collect()
    }
}

/// Power-law tail `c T^(1-beta) / (beta - 1)` fitted on the second half of the integrand history.
fn tail_estimate(history: &[[f64; 2]], t_inf: f64) -> Result<(f64, Option<f64>)> {
    let t: Vec<f64> = history.iter().map(|p| p[0]).collect();
    let v: Vec<f64> = history.iter().map(|p| p[1]).collect();
    if v.iter().all(|x| *x == 0.0) {
        return Ok((0.0, None));
    }
    let (qt, qv) = window(&t, &v, 0.75 * t_inf, t_inf);
    if let Ok(q) = power_law_fit(&qt, &qv) {
        if q.exponent >= 0.0 {
            return Err(Error::TailNotDecaying { t_inf });
        }
    }
    let (ht, hv) = window(&t, &v, 0.5 * t_inf, t_inf);
    let fit = power_law_fit(&ht, &hv)?;
    let beta = -fit.exponent;
    let tail = if beta > 1.0 { fit.constant * t_inf.powf(1.0 - beta) / (beta - 1.0) } else { f64::INFINITY };
    Ok((tail, Some(fit.exponent)))
}

/// Fit window for remainder curves: skip `t < 5` and the final 10%.
pub fn residual_fit_window(t_inf: f64) -> [f64; 2] {
    [5.0, 0.9 * t_inf]
}

fn fit_residuals(history: &[[f64; 2]], t_inf: f64) -> (Option<f64>, Option<[f64; 2]>) {
    let w = residual_fit_window(t_inf);
    let t: Vec<f64> = history.iter().map(|p| p[0]).collect();
    let v: Vec<f64> = history.iter().map(|p| p[1]).collect();
    let (wt, wv) = window(&t, &v, w[0], w[1]);
    match truncated_power_fit(&wt, &wv, t_inf) {
        Ok(f) => (Some(f.exponent), Some(w)),
        Err(_) => (None, None),
    }
}

/// Scattering state `psi_+ = psi_0 - i int_0^T e^(is<grad>) F(psi_s) ds`.
///
/// The solution is advanced by Strang splitting and the integral accumulated
/// with the trapezoid rule on the step lattice.
pub fn inverse_wave(psi0: &SpectralField, kernel: &ConvolutionKernel, cfg: &ScatteringConfig) -> Result<ScatteringResult> {
    cfg.validate()?;
    if psi0.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = psi0.grid().clone();
    let s = cfg.sobolev(grid.dim());
    let tables = Tables::new(&grid, s);
    let (steps, dt) = cfg.lattice();
    let hat0 = psi0.to_frequency().into_values();

    let mut stepper = Stepper::new(psi0, kernel, dt, s)?;
    let integrand = |t: f64, phys: &[Complex64]| tables.rotate(&nonlinearity_hat(&grid, kernel, phys), t);
    let mut prev = if kernel.is_zero() { vec![Complex64::default(); grid.len()] } else { integrand(0.0, psi0.to_physical().values()) };
    let mut acc = vec![Complex64::default(); grid.len()];
    let mut integrand_history = vec![[0.0, tables.hs(&prev)]];
    let mut states: Vec<(f64, Vec<Complex64>)> = vec![(0.0, hat0.clone())];

    for k in 1..=steps {
        stepper.step();
        let t = k as f64 * dt;
        if !stepper.sobolev_norm().is_finite() {
            return Err(Error::BlowupDetected { t });
        }
        let field = stepper.field();
        if !kernel.is_zero() {
            let g = integrand(t, field.values());
            acc.par_iter_mut()
                .zip(prev.par_iter().zip(g.par_iter()))
                .for_each(|(a, (x, y))| *a += 0.5 * dt * (x + y));
            integrand_history.push([t, tables.hs(&g)]);
            prev = g;
        } else {
            integrand_history.push([t, 0.0]);
        }
        if k % cfg.history_stride == 0 || k == steps {
            states.push((t, tables.rotate(field.to_frequency().values(), t)));
        }
    }

    let plus: Vec<Complex64> = hat0.par_iter().zip(acc.par_iter()).map(|(h, a)| h - Complex64::i() * a).collect();
    let last = &states.last().expect("at least one state").1;
    let residual_history = states
        .iter()
        .map(|(t, u)| {
            let d: Vec<Complex64> = u.iter().zip(last).map(|(a, b)| a - b).collect();
            [*t, tables.hs(&d)]
        })
        .collect::<Vec<_>>();
    let scale = tables.hs(&hat0).max(f64::MIN_POSITIVE);
    let defect: Vec<Complex64> = last.iter().zip(&plus).map(|(a, b)| a - b).collect();
    let quadrature_defect = Some(tables.hs(&defect) / scale);

    let (tail_bound, integrand_exponent) = if cfg.tail_estimate {
        tail_estimate(&integrand_history, cfg.t_inf)?
    } else {
        (f64::NAN, None)
    };
    let (fitted_decay_exponent, fit_window) = if kernel.is_zero() { (None, None) } else { fit_residuals(&residual_history, cfg.t_inf) };

    Ok(ScatteringResult {
        psi: SpectralField::from_values(grid, plus, Representation::Frequency)?.into_representation(psi0.representation()),
        t_inf: cfg.t_inf,
        dt,
        sobolev_index: s,
        residual_history,
        integrand_history,
        tail_bound,
        integrand_exponent,
        fitted_decay_exponent,
        fit_window,
        quadrature_defect,
        contraction: None,
        config: cfg.clone(),
    })
}

/// Wave operator `Omega_+ psi_+`: solves
/// `psi_t = e^(-it<grad>) psi_+ + i int_t^T e^(-i(t-s)<grad>) F(psi_s) ds`
/// by fixed-point iteration from the free solution and returns `psi_0`.
pub fn wave_operator(psi_plus: &SpectralField, kernel: &ConvolutionKernel, cfg: &ScatteringConfig) -> Result<ScatteringResult> {
    cfg.validate()?;
    if psi_plus.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = psi_plus.grid().clone();
    let s = cfg.sobolev(grid.dim());
    let tables = Tables::new(&grid, s);
    let (steps, dt) = cfg.lattice();
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let plus = psi_plus.to_frequency().into_values();
    let scale = tables.hs(&plus).max(f64::MIN_POSITIVE);

    // interaction-picture states u_k = e^{i t_k <xi>} psi_hat(t_k)
    let mut current: Vec<Vec<Complex64>> = vec![plus.clone(); times.len()];
    let mut report = PicardReport::default();
    let mut last_g: Vec<Vec<Complex64>> = Vec::new();
    loop {
        let next = if kernel.is_zero() {
            current.clone()
        } else {
            let hats: Vec<Vec<Complex64>> = current.iter().zip(&times).map(|(u, &t)| tables.rotate(u, -t)).collect();
            let g = interaction_integrand(&grid, kernel, &tables.omega, &times, &hats);
            let mut tail = vec![Complex64::default(); grid.len()];
            let mut out = vec![Vec::new(); times.len()];
            for k in (0..times.len()).rev() {
                if k + 1 < times.len() {
                    tail.par_iter_mut()
                        .zip(g[k].par_iter().zip(g[k + 1].par_iter()))
                        .for_each(|(a, (x, y))| *a += 0.5 * dt * (x + y));
                }
                out[k] = plus.par_iter().zip(tail.par_iter()).map(|(p, a)| p + Complex64::i() * a).collect();
            }
            last_g = g;
            out
        };
        let diff = sup_difference(&next, &current, |v| tables.hs(v)) / scale;
        current = next;
        if report.push(diff, cfg.tol, cfg.max_iter)? {
            break;
        }
    }

    let integrand_history: Vec<[f64; 2]> = if last_g.is_empty() {
        times.iter().map(|&t| [t, 0.0]).collect()
    } else {
        times.iter().zip(&last_g).map(|(&t, g)| [t, tables.hs(g)]).collect()
    };
    let residual_history: Vec<[f64; 2]> = times
        .iter()
        .enumerate()
        .filter(|(k, _)| k % cfg.history_stride == 0 || *k == steps)
        .map(|(k, &t)| {
            let d: Vec<Complex64> = current[k].iter().zip(&plus).map(|(a, b)| a - b).collect();
            [t, tables.hs(&d)]
        })
        .collect();
    let (tail_bound, integrand_exponent) = if cfg.tail_estimate {
        tail_estimate(&integrand_history, cfg.t_inf)?
    } else {
        (f64::NAN, None)
    };

    let mut psi0 = current.swap_remove(0);
    inverse(&grid, &mut psi0);
    Ok(ScatteringResult {
        psi: SpectralField::from_values(grid, psi0, Representation::Physical)?.into_representation(psi_plus.representation()),
        t_inf: cfg.t_inf,
        dt,
        sobolev_index: s,
        residual_history,
        integrand_history,
        tail_bound,
        integrand_exponent,
        fitted_decay_exponent: None,
        fit_window: None,
        quadrature_defect: None,
        contraction: Some(report),
        config: cfg.clone(),
    })
}

/// Both halves of a roundtrip and the relative error `||Omega_+ W_+ psi - psi||_Hs / ||psi||_Hs`.
#[derive(Clone, Debug, Serialize)]
pub struct Roundtrip {
    pub relative_error: f64,
    pub forward: ScatteringResult,
    pub backward: ScatteringResult,
}

pub fn roundtrip_detailed(psi: &SpectralField, kernel: &ConvolutionKernel, cfg: &ScatteringConfig) -> Result<Roundtrip> {
    let forward = inverse_wave(psi, kernel, cfg)?;
    let backward = wave_operator(&forward.psi, kernel, cfg)?;
    let tables = Tables::new(psi.grid(), cfg.sobolev(psi.grid().dim()));
    let a = psi.to_frequency();
    let b = backward.psi.to_frequency();
    let d: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let relative_error = tables.hs(&d) / tables.hs(a.values()).max(f64::MIN_POSITIVE);
    Ok(Roundtrip { relative_error, forward, backward })
}

/// `||Omega_+ W_+ psi - psi||_Hs / ||psi||_Hs`.
pub fn roundtrip(psi: &SpectralField, kernel: &ConvolutionKernel, cfg: &ScatteringConfig) -> Result<f64> {
    roundtrip_detailed(psi, kernel, cfg).map(|r| r.relative_error)
}

/// A scattering state with velocity content in a band and the initial data it scatters from.
#[derive(Clone, Debug)]
pub struct MinVelocityState {
    pub psi_plus: SpectralField,
    pub psi0: ScatteringResult,
}

/// Filters `seed` by `f(Theta^2)`, rescales to L^2 norm `amplitude` when given,
/// and maps the result through the wave operator.
pub fn build_min_velocity_state(
    seed: &SpectralField,
    f: &SmoothCutoff,
    amplitude: Option<f64>,
    kernel: &ConvolutionKernel,
    cfg: &ScatteringConfig,
) -> Result<MinVelocityState> {
    let (lo, hi) = f.support().unwrap_or((0.0, 1.0));
    let grid = seed.grid();
    let populated = grid.sample_frequencies(|xi| f.eval(theta_squared(xi)) > 0.0);
    if !populated.into_iter().any(|p| p) {
        return Err(Error::EmptyBand { lo, hi });
    }
    let mut plus = velocity_calculus(seed, |u| f.eval(u));
    if let Some(a) = amplitude {
        let n = plus.norm_l2();
        if n == 0.0 {
            return Err(Error::EmptyBand { lo, hi });
        }
        plus = plus.scale(Complex64::new(a / n, 0.0));
    }
    let psi0 = wave_operator(&plus, kernel, cfg)?;
    Ok(MinVelocityState { psi_plus: plus, psi0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{build_kernel, PotentialSpec};

    fn packet(g: &GridSpec, amp: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| Complex64::from_polar(amp * (-0.25 * x[0] * x[0]).exp(), 0.5 * x[0]))
    }

    #[test]
    fn free_case_is_identity() {
        let g = GridSpec::cubic(1, 256, 80.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let psi = packet(&g, 1.0);
        let cfg = ScatteringConfig::new(5.0, 0.05);
        let w = inverse_wave(&psi, &k, &cfg).unwrap();
        assert!(w.psi.sub(&psi).unwrap().norm_l2() < 1e-13);
        assert_eq!(w.tail_bound, 0.0);
        assert!(!w.residual_history.is_empty());
        let o = wave_operator(&psi, &k, &cfg).unwrap();
        assert!(o.psi.sub(&psi).unwrap().norm_l2() < 1e-13);
        assert!(roundtrip(&psi, &k, &cfg).unwrap() < 1e-13);
    }

    #[test]
    fn wave_operator_inverts_inverse_wave_for_small_data() {
        let g = GridSpec::cubic(1, 256, 80.0).unwrap();
        let k = build_kernel(&PotentialSpec::Yukawa { kappa: 0.05, mu: 1.0 }, &g, true).unwrap();
        let psi = packet(&g, 0.5);
        let mut cfg = ScatteringConfig::new(10.0, 0.02);
        cfg.tail_estimate = false;
        let r = roundtrip_detailed(&psi, &k, &cfg).unwrap();
        assert!(r.relative_error < 1e-4, "{}", r.relative_error);
        let c = r.backward.contraction.unwrap();
        assert!(c.converged);
        assert!(c.ratios.iter().all(|q| *q < 0.5), "{:?}", c.ratios);
    }

    #[test]
    fn band_filtered_state_has_no_slow_modes() {
        let g = GridSpec::cubic(1, 256, 80.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let seed = packet(&g, 1.0);
        let f = SmoothCutoff::plateau(0.4, 0.9, 0.05).unwrap();
        let st = build_min_velocity_state(&seed, &f, Some(0.3), &k, &ScatteringConfig::new(1.0, 0.1)).unwrap();
        assert!((st.psi_plus.norm_l2() - 0.3).abs() < 1e-12);
        let outside = velocity_calculus(&st.psi_plus, |u| if (0.4..=1.0).contains(&u) { 0.0 } else { 1.0 });
        assert!(outside.norm_l2() <= 1e-12);
        let none = SmoothCutoff::bump(0.999_999_9, 1.5).unwrap();
        let coarse = GridSpec::cubic(1, 16, 10.0).unwrap();
        let kc = build_kernel(&PotentialSpec::zero(), &coarse, true).unwrap();
        let sc = SpectralField::from_fn(&coarse, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(
            build_min_velocity_state(&sc, &none, None, &kc, &ScatteringConfig::new(1.0, 0.1)),
            Err(Error::EmptyBand { .. })
        ));
        let all = build_min_velocity_state(&seed, &SmoothCutoff::One, None, &k, &ScatteringConfig::new(1.0, 0.1)).unwrap();
        assert!(all.psi_plus.sub(&seed).unwrap().norm_l2() < 1e-13);
    }

    #[test]
    fn result_serializes_without_state() {
        let g = GridSpec::cubic(1, 64, 40.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let r = inverse_wave(&packet(&g, 1.0), &k, &ScatteringConfig::new(1.0, 0.1)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(v.get("psi").is_none());
        assert!(v.get("residual_history").is_some());
    }
}
