//! Time evolution: Strang splitting and Picard iteration on the Duhamel form.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{standard_record, NormSettings, ObservableRecord};
use crate::potentials::ConvolutionKernel;
use crate::spectral::field::{forward, inverse};
use crate::spectral::grid::{japanese, norm_sqr};
use crate::spectral::{ordered_sum, GridSpec, Representation, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Strang,
    Picard,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    60
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_blowup() -> f64 {
    50.0
}
fn default_p() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_iter")]
    pub picard_max_iter: usize,
    /// Record observables every this many steps.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Blow-up proxy: stop once the tracked Sobolev norm exceeds this multiple of its initial value.
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
    /// Tracked Sobolev index; `d/2 + 1` when absent.
    #[serde(default)]
    pub sobolev_index: Option<f64>,
    #[serde(default = "default_p")]
    pub lebesgue_exponent: f64,
    /// Keep the field at every recorded snapshot.
    #[serde(default = "default_true")]
    pub keep_fields: bool,
}

fn default_integrator() -> Integrator {
    Integrator::Strang
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            integrator: Integrator::Strang,
            picard_tol: default_tol(),
            picard_max_iter: default_max_iter(),
            snapshot_stride: 1,
            dealias: true,
            blowup_factor: default_blowup(),
            sobolev_index: None,
            lebesgue_exponent: default_p(),
            keep_fields: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors("solver", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    pub(crate) fn collect_errors(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            errors.push(format!("{path}.dt: must be positive, got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            errors.push(format!("{path}.t_final: must be non-negative, got {}", self.t_final));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-2) {
            errors.push(format!("{path}.picard_tol: must lie in (0, 1e-2], got {}", self.picard_tol));
        }
        if self.picard_max_iter == 0 {
            errors.push(format!("{path}.picard_max_iter: must be at least 1"));
        }
        if self.snapshot_stride == 0 {
            errors.push(format!("{path}.snapshot_stride: must be at least 1"));
        }
        if !(self.blowup_factor > 1.0) {
            errors.push(format!("{path}.blowup_factor: must exceed 1, got {}", self.blowup_factor));
        }
        if let Some(s) = self.sobolev_index {
            if !(s >= 0.0 && s.is_finite()) {
                errors.push(format!("{path}.sobolev_index: must be non-negative, got {s}"));
            }
        }
        if !(self.lebesgue_exponent >= 1.0) {
            errors.push(format!("{path}.lebesgue_exponent: must be >= 1, got {}", self.lebesgue_exponent));
        }
    }

    /// Step count and the step actually used so that `steps * dt == t_final`.
    pub fn lattice(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_final / steps as f64)
    }

    pub fn norm_settings(&self, dim: usize) -> NormSettings {
        let mut n = NormSettings::for_dim(dim);
        if let Some(s) = self.sobolev_index {
            n.sobolev_index = s;
        }
        n.lebesgue_exponent = self.lebesgue_exponent;
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Blowup { t: f64 },
}

/// Recorded snapshots of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Empty when the run was configured not to keep fields.
    pub fields: Vec<SpectralField>,
    pub records: Vec<ObservableRecord>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn last_field(&self) -> Option<&SpectralField> {
        self.fields.last()
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        self.records.iter().map(|r| r.get(name).unwrap_or(f64::NAN)).collect()
    }
}

/// Reusable Strang integrator working on raw physical samples.
pub struct Stepper<'a> {
    grid: GridSpec,
    kernel: &'a ConvolutionKernel,
    dt: f64,
    half: Vec<Complex64>,
    sobolev_weight: Vec<f64>,
    state: Vec<Complex64>,
    t: f64,
    last_hs: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(psi0: &SpectralField, kernel: &'a ConvolutionKernel, dt: f64, sobolev_index: f64) -> Result<Self> {
        if psi0.grid() != kernel.grid() {
            return Err(Error::GridMismatch);
        }
        let grid = psi0.grid().clone();
        let half = grid.sample_frequencies(|xi| Complex64::from_polar(1.0, -0.5 * dt * japanese(xi)));
        let sobolev_weight = grid.sample_frequencies(|xi| (1.0 + norm_sqr(xi)).powf(sobolev_index));
        let state = psi0.to_physical().into_values();
        let mut s = Self { grid, kernel, dt, half, sobolev_weight, state, t: 0.0, last_hs: 0.0 };
        let mut hat = s.state.clone();
        forward(&s.grid, &mut hat);
        s.last_hs = weighted_l2(&s.grid, &s.sobolev_weight, &hat);
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Tracked Sobolev norm after the most recent step.
    pub fn sobolev_norm(&self) -> f64 {
        self.last_hs
    }

    pub fn field(&self) -> SpectralField {
        SpectralField::from_values(self.grid.clone(), self.state.clone(), Representation::Physical)
            .expect("state matches grid")
    }

    pub fn step(&mut self) {
        let buf = &mut self.state;
        forward(&self.grid, buf);
        buf.par_iter_mut().zip(self.half.par_iter()).for_each(|(v, h)| *v *= h);
        inverse(&self.grid, buf);
        if !self.kernel.is_zero() {
            let rho: Vec<f64> = buf.par_iter().map(|v| v.norm_sqr()).collect();
            let pot = self.kernel.convolve(&rho);
            let dt = self.dt;
            buf.par_iter_mut()
                .zip(pot.par_iter())
                .for_each(|(v, p)| *v *= Complex64::from_polar(1.0, -dt * p));
        }
        forward(&self.grid, buf);
        // the remaining half step is an isometry of every Sobolev norm
        let hs = weighted_l2(&self.grid, &self.sobolev_weight, buf);
        buf.par_iter_mut().zip(self.half.par_iter()).for_each(|(v, h)| *v *= h);
        inverse(&self.grid, buf);
        self.last_hs = hs;
        self.t += self.dt;
    }
}

/// `(sum w |v|^2 dxi)^(1/2)` over frequency samples.
pub(crate) fn weighted_l2(grid: &GridSpec, weight: &[f64], hat: &[Complex64]) -> f64 {
    let s: f64 = ordered_sum(hat.par_iter().zip(weight.par_iter()).map(|(v, w)| w * v.norm_sqr()));
    (s * grid.frequency_cell_volume()).sqrt()
}

/// One Strang step `L(dt/2) e^(-i dt V[L(dt/2) psi]) L(dt/2)`, with `L(t) = e^(-it<grad>)`.
///
/// Negative `dt` steps backwards; the scheme is exactly time-reversible.
pub fn strang_step(psi: &SpectralField, kernel: &ConvolutionKernel, dt: f64) -> Result<SpectralField> {
    let mut s = Stepper::new(psi, kernel, dt, 0.0)?;
    s.step();
    Ok(s.field().into_representation(psi.representation()))
}

/// Runs Strang splitting, calling `observe` at each recorded snapshot.
///
/// Blow-up (tracked Sobolev norm above `blowup_factor` times its initial
/// value, or a non-finite state) ends the run early with a flagged outcome.
pub fn evolve_observed<F>(
    psi0: &SpectralField,
    kernel: &ConvolutionKernel,
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &SpectralField, &mut ObservableRecord) -> Result<()>,
{
    cfg.validate()?;
    let (steps, dt) = cfg.lattice();
    let norms = cfg.norm_settings(psi0.grid().dim());
    let mut stepper = Stepper::new(psi0, kernel, dt, norms.sobolev_index)?;
    let hs0 = stepper.sobolev_norm();
    let mut traj = Trajectory { times: Vec::new(), fields: Vec::new(), records: Vec::new(), outcome: Outcome::Completed };

    let mut record = |t: f64, field: SpectralField, traj: &mut Trajectory| -> Result<()> {
        let mut rec = standard_record(&field, kernel, t, norms)?;
        observe(t, &field, &mut rec)?;
        traj.times.push(t);
        traj.records.push(rec);
        if cfg.keep_fields {
            traj.fields.push(field);
        }
        Ok(())
    };

    record(0.0, psi0.to_physical(), &mut traj)?;
    for k in 1..=steps {
        stepper.step();
        let t = k as f64 * dt;
        let hs = stepper.sobolev_norm();
        if !hs.is_finite() || hs > cfg.blowup_factor * hs0 {
            if hs.is_finite() {
                record(t, stepper.field(), &mut traj)?;
            }
            traj.outcome = Outcome::Blowup { t };
            return Ok(traj);
        }
        if k % cfg.snapshot_stride == 0 || k == steps {
            record(t, stepper.field(), &mut traj)?;
        }
    }
    Ok(traj)
}

/// Strang evolution that reports blow-up as an error.
pub fn evolve(psi0: &SpectralField, kernel: &ConvolutionKernel, cfg: &SolverConfig) -> Result<Trajectory> {
    let traj = evolve_observed(psi0, kernel, cfg, |_, _, _| Ok(()))?;
    match traj.outcome {
        Outcome::Completed => Ok(traj),
        Outcome::Blowup { t } => Err(Error::BlowupDetected { t }),
    }
}

/// Convergence history of the Duhamel fixed-point iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// `sup_t ||psi^(m+1)_t - psi^(m)_t||_Hs / ||psi_0||_Hs`.
    pub differences: Vec<f64>,
    /// Successive ratios of `differences`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

impl PicardReport {
    /// Records one sup-difference. Returns `true` once converged; fails after
    /// two consecutive ratios above one or when the iteration budget runs out.
    pub(crate) fn push(&mut self, diff: f64, tol: f64, max_iter: usize) -> Result<bool> {
        self.iterations += 1;
        if let Some(&prev) = self.differences.last() {
            let ratio = if prev > 0.0 { diff / prev } else { 0.0 };
            self.ratios.push(ratio);
            let n = self.ratios.len();
            if n >= 2 && self.ratios[n - 1] > 1.0 && self.ratios[n - 2] > 1.0 {
                return Err(Error::NoContraction { iteration: self.iterations, ratio });
            }
        }
        self.differences.push(diff);
        if !diff.is_finite() {
            return Err(Error::NoContraction { iteration: self.iterations, ratio: f64::INFINITY });
        }
        if diff <= tol {
            self.converged = true;
            return Ok(true);
        }
        if self.iterations >= max_iter {
            let ratio = self.ratios.last().copied().unwrap_or(f64::NAN);
            return Err(Error::NoContraction { iteration: self.iterations, ratio });
        }
        Ok(false)
    }
}

/// Nonlinearity `(w * |psi|^2) psi` of a physical field, returned in frequency space.
pub(crate) fn nonlinearity_hat(grid: &GridSpec, kernel: &ConvolutionKernel, phys: &[Complex64]) -> Vec<Complex64> {
    let rho: Vec<f64> = phys.par_iter().map(|v| v.norm_sqr()).collect();
    let pot = kernel.convolve(&rho);
    let mut out: Vec<Complex64> = phys.par_iter().zip(pot.par_iter()).map(|(v, p)| v * p).collect();
    forward(grid, &mut out);
    out
}

/// Interaction-picture integrand `e^(i t_k <xi>) F(psi_k)_hat` for frequency-space states.
pub(crate) fn interaction_integrand(
    grid: &GridSpec,
    kernel: &ConvolutionKernel,
    omega: &[f64],
    times: &[f64],
    hats: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    hats.iter()
        .zip(times)
        .map(|(hat, &t)| {
            let mut phys = hat.clone();
            inverse(grid, &mut phys);
            let f = nonlinearity_hat(grid, kernel, &phys);
            f.par_iter().zip(omega.par_iter()).map(|(v, w)| v * Complex64::from_polar(1.0, t * w)).collect()
        })
        .collect()
}

/// `max_k norm(a_k - b_k)`.
pub(crate) fn sup_difference<N>(a: &[Vec<Complex64>], b: &[Vec<Complex64>], norm: N) -> f64
where
    N: Fn(&[Complex64]) -> f64,
{
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d: Vec<Complex64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            norm(&d)
        })
        .fold(0.0, f64::max)
}

/// Fixed-point iteration `psi = e^(-it<grad>) psi_0 - i int_0^t e^(-i(t-s)<grad>) F(psi_s) ds`
/// on the lattice `t_k = k dt`, trapezoid rule in time, starting from the free solution.
pub fn picard_solve(
    psi0: &SpectralField,
    kernel: &ConvolutionKernel,
    cfg: &SolverConfig,
) -> Result<(Trajectory, PicardReport)> {
    cfg.validate()?;
    if psi0.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = psi0.grid().clone();
    let (steps, dt) = cfg.lattice();
    let norms = cfg.norm_settings(grid.dim());
    let omega = grid.sample_frequencies(japanese);
    let weight = grid.sample_frequencies(|xi| (1.0 + norm_sqr(xi)).powf(norms.sobolev_index));
    let hat0 = psi0.to_frequency().into_values();
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let hs = |v: &[Complex64]| weighted_l2(&grid, &weight, v);
    let hs0 = hs(&hat0);

    let free = |t: f64, base: &[Complex64]| -> Vec<Complex64> {
        base.par_iter().zip(omega.par_iter()).map(|(v, w)| v * Complex64::from_polar(1.0, -t * w)).collect()
    };
    let mut current: Vec<Vec<Complex64>> = times.iter().map(|&t| free(t, &hat0)).collect();
    let mut report = PicardReport::default();

    loop {
        let next: Vec<Vec<Complex64>> = if kernel.is_zero() {
            current.clone()
        } else {
            let g = interaction_integrand(&grid, kernel, &omega, &times, &current);
            let mut acc = vec![Complex64::default(); grid.len()];
            let mut out = Vec::with_capacity(times.len());
            for k in 0..times.len() {
                if k > 0 {
                    acc.par_iter_mut()
                        .zip(g[k - 1].par_iter().zip(g[k].par_iter()))
                        .for_each(|(a, (x, y))| *a += 0.5 * dt * (x + y));
                }
                let base: Vec<Complex64> = hat0
                    .par_iter()
                    .zip(acc.par_iter())
                    .map(|(h, s)| h - Complex64::i() * s)
                    .collect();
                out.push(free(times[k], &base));
            }
            out
        };
        let diff = sup_difference(&next, &current, hs) / hs0.max(f64::MIN_POSITIVE);
        current = next;
        if report.push(diff, cfg.picard_tol, cfg.picard_max_iter)? {
            break;
        }
    }

    let mut traj = Trajectory { times: Vec::new(), fields: Vec::new(), records: Vec::new(), outcome: Outcome::Completed };
    for (k, hat) in current.into_iter().enumerate() {
        if k % cfg.snapshot_stride != 0 && k != steps {
            continue;
        }
        let field = SpectralField::from_values(grid.clone(), hat, Representation::Frequency)?.into_physical();
        traj.records.push(standard_record(&field, kernel, times[k], norms)?);
        traj.times.push(times[k]);
        if cfg.keep_fields {
            traj.fields.push(field);
        }
    }
    Ok((traj, report))
}

/// Dispatches on `cfg.integrator`.
pub fn solve(psi0: &SpectralField, kernel: &ConvolutionKernel, cfg: &SolverConfig) -> Result<Trajectory> {
    match cfg.integrator {
        Integrator::Strang => evolve(psi0, kernel, cfg),
        Integrator::Picard => picard_solve(psi0, kernel, cfg).map(|(t, _)| t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::mass;
    use crate::potentials::{build_kernel, PotentialSpec};
    use crate::spectral::free_propagate;
    use std::f64::consts::PI;

    fn packet(g: &GridSpec) -> SpectralField {
        SpectralField::from_fn(g, |x| Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), 0.7 * x[0]))
    }

    #[test]
    fn zero_potential_step_is_free_flow() {
        let g = GridSpec::cubic(1, 256, 40.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let psi = packet(&g);
        let a = strang_step(&psi, &k, 0.3).unwrap();
        let b = free_propagate(&psi, 0.3);
        assert!(a.sub(&b).unwrap().norm_l2() < 1e-13);
    }

    #[test]
    fn step_preserves_mass_and_reverses() {
        let g = GridSpec::cubic(1, 256, 40.0).unwrap();
        let k = build_kernel(&PotentialSpec::Yukawa { kappa: -0.8, mu: 1.0 }, &g, true).unwrap();
        let psi = packet(&g);
        let a = strang_step(&psi, &k, 0.1).unwrap();
        assert!((mass(&a) - mass(&psi)).abs() < 1e-13 * mass(&psi));
        let back = strang_step(&a, &k, -0.1).unwrap();
        assert!(back.sub(&psi).unwrap().norm_l2() < 1e-11);
    }

    #[test]
    fn delta_plane_wave_rotates_by_closed_form_phase() {
        let l = 10.0;
        let g = GridSpec::cubic(1, 64, l).unwrap();
        let kappa = 0.9;
        let k = build_kernel(&PotentialSpec::Delta { kappa }, &g, true).unwrap();
        let xi = 2.0 * PI * 3.0 / l;
        let c = 0.6;
        let psi = SpectralField::from_fn(&g, |x| Complex64::from_polar(c, xi * x[0]));
        let dt = 0.05;
        let mut cur = psi.clone();
        for _ in 0..20 {
            cur = strang_step(&cur, &k, dt).unwrap();
        }
        let phase = -20.0 * dt * ((1.0 + xi * xi).sqrt() + kappa * c * c);
        let expected = psi.scale(Complex64::from_polar(1.0, phase));
        assert!(cur.sub(&expected).unwrap().norm_l2() < 1e-12 * psi.norm_l2());
    }

    #[test]
    fn free_evolution_matches_propagator_at_snapshots() {
        let g = GridSpec::cubic(1, 256, 60.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let psi = packet(&g);
        let traj = evolve(&psi, &k, &SolverConfig::new(0.1, 3.0).with_stride(5)).unwrap();
        assert_eq!(traj.times.len(), 7);
        for (t, f) in traj.times.iter().zip(&traj.fields) {
            assert!(f.sub(&free_propagate(&psi, *t)).unwrap().norm_l2() < 1e-10);
        }
    }

    #[test]
    fn lattice_hits_final_time() {
        let (n, dt) = SolverConfig::new(0.3, 1.0).lattice();
        assert_eq!(n, 4);
        assert!((dt * n as f64 - 1.0).abs() < 1e-15);
        let (n, dt) = SolverConfig::new(0.01, 10.0).lattice();
        assert_eq!((n, dt), (1000, 0.01));
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::new(-1.0, 1.0);
        c.picard_tol = 0.5;
        match c.validate() {
            Err(Error::ConfigInvalid(msgs)) => assert_eq!(msgs.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn picard_without_interaction_converges_immediately() {
        let g = GridSpec::cubic(1, 128, 40.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let (traj, rep) = picard_solve(&packet(&g), &k, &SolverConfig::new(0.1, 1.0)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        let last = traj.last_field().unwrap();
        assert!(last.sub(&free_propagate(&packet(&g), 1.0)).unwrap().norm_l2() < 1e-12);
    }

    #[test]
    fn picard_agrees_with_strang() {
        let g = GridSpec::cubic(1, 128, 40.0).unwrap();
        let spec = PotentialSpec::Yukawa { kappa: -0.01, mu: 1.0 };
        let k = build_kernel(&spec, &g, true).unwrap();
        let psi = packet(&g);
        assert!(spec.interaction_norm(&g) * mass(&psi) < 0.1);
        let mut cfg = SolverConfig::new(0.02, 1.0);
        cfg.picard_tol = 1e-12;
        let (traj, rep) = picard_solve(&psi, &k, &cfg).unwrap();
        assert!(rep.ratios.iter().all(|r| *r < 0.5), "{:?}", rep.ratios);
        let strang = evolve(&psi, &k, &cfg).unwrap();
        let diff = traj.last_field().unwrap().sub(strang.last_field().unwrap()).unwrap().norm_l2();
        assert!(diff < 5.0 * (cfg.dt * cfg.dt + cfg.picard_tol) * psi.norm_l2(), "{diff}");
    }

    #[test]
    fn blowup_proxy_flags_run() {
        let g = GridSpec::cubic(1, 256, 20.0).unwrap();
        let k = build_kernel(&PotentialSpec::Delta { kappa: -400.0 }, &g, false).unwrap();
        let psi = SpectralField::from_fn(&g, |x| Complex64::new(3.0 * (-2.0 * x[0] * x[0]).exp(), 0.0));
        let mut cfg = SolverConfig::new(0.01, 5.0);
        cfg.blowup_factor = 2.0;
        match evolve(&psi, &k, &cfg) {
            Err(Error::BlowupDetected { t }) => assert!(t > 0.0 && t < 5.0),
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.outcome)),
        }
    }
}
