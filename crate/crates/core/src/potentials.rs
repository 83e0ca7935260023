//! Interaction kernels `w` and the Hartree term `w * |psi|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::field::{forward, inverse};
use crate::spectral::grid::{norm, norm_sqr};
use crate::spectral::{GridSpec, Representation, SpectralField};

/// Symbolic interaction potential. Negative `kappa` is attractive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `kappa * delta(x)`.
    Delta { kappa: f64 },
    /// `kappa * e^(-mu |x|) / |x|`.
    Yukawa { kappa: f64, mu: f64 },
    /// `kappa * e^(-|x|^2 / (2 sigma^2))`.
    Gaussian { kappa: f64, sigma: f64 },
    /// `kappa * max(|x|, rho)^(-alpha)`; `rho` defaults to one grid spacing.
    PowerLaw {
        kappa: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        core_radius: Option<f64>,
    },
    Sum { terms: Vec<PotentialSpec> },
}

/// Integrability class of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PotentialClass {
    Zero,
    /// A finite measure.
    Measure,
    /// A finite measure that is also in every `L^q`.
    AllLebesgue,
    /// Weak `L^q` with the given exponent.
    WeakLebesgue { q: f64 },
    Mixed { parts: Vec<PotentialClass> },
}

impl PotentialClass {
    /// Integrability exponents `q` that enter the short-range decay rates.
    pub fn q_candidates(&self) -> Vec<f64> {
        let mut out = match self {
            PotentialClass::Zero => Vec::new(),
            PotentialClass::Measure | PotentialClass::AllLebesgue => vec![1.0],
            PotentialClass::WeakLebesgue { q } => vec![*q],
            PotentialClass::Mixed { parts } => parts.iter().flat_map(|p| p.q_candidates()).collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::Sum { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Delta { kappa }
            | PotentialSpec::Yukawa { kappa, .. }
            | PotentialSpec::Gaussian { kappa, .. }
            | PotentialSpec::PowerLaw { kappa, .. } => *kappa == 0.0,
            PotentialSpec::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }

    /// Same shape with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            PotentialSpec::Delta { kappa }
            | PotentialSpec::Yukawa { kappa, .. }
            | PotentialSpec::Gaussian { kappa, .. }
            | PotentialSpec::PowerLaw { kappa, .. } => *kappa *= factor,
            PotentialSpec::Sum { terms } => *terms = terms.iter().map(|t| t.scaled(factor)).collect(),
        }
        out
    }

    /// Couplings of all terms in order.
    pub fn couplings(&self) -> Vec<f64> {
        match self {
            PotentialSpec::Delta { kappa }
            | PotentialSpec::Yukawa { kappa, .. }
            | PotentialSpec::Gaussian { kappa, .. }
            | PotentialSpec::PowerLaw { kappa, .. } => vec![*kappa],
            PotentialSpec::Sum { terms } => terms.iter().flat_map(|t| t.couplings()).collect(),
        }
    }

    /// Checks parameter ranges; `alpha` must lie in `(0, dim)`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(dim, "potential", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    pub(crate) fn collect_errors(&self, dim: usize, path: &str, errors: &mut Vec<String>) {
        let finite = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !v.is_finite() {
                errors.push(format!("{path}.{name}: must be finite, got {v}"));
            }
        };
        let positive = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("{path}.{name}: must be positive, got {v}"));
            }
        };
        match self {
            PotentialSpec::Delta { kappa } => finite("kappa", *kappa, errors),
            PotentialSpec::Yukawa { kappa, mu } => {
                finite("kappa", *kappa, errors);
                positive("mu", *mu, errors);
            }
            PotentialSpec::Gaussian { kappa, sigma } => {
                finite("kappa", *kappa, errors);
                positive("sigma", *sigma, errors);
            }
            PotentialSpec::PowerLaw { kappa, alpha, core_radius } => {
                finite("kappa", *kappa, errors);
                if !(*alpha > 0.0 && *alpha < dim as f64) {
                    errors.push(format!("{path}.alpha: must lie in (0, {dim}), got {alpha}"));
                }
                if let Some(rho) = core_radius {
                    positive("core_radius", *rho, errors);
                }
            }
            PotentialSpec::Sum { terms } => {
                for (i, t) in terms.iter().enumerate() {
                    t.collect_errors(dim, &format!("{path}.terms[{i}]"), errors);
                }
            }
        }
    }

    pub fn classify(&self, dim: usize) -> PotentialClass {
        if self.is_zero() {
            return PotentialClass::Zero;
        }
        match self {
            PotentialSpec::Delta { .. } => PotentialClass::Measure,
            PotentialSpec::Yukawa { .. } | PotentialSpec::Gaussian { .. } => PotentialClass::AllLebesgue,
            PotentialSpec::PowerLaw { alpha, .. } => PotentialClass::WeakLebesgue { q: dim as f64 / alpha },
            PotentialSpec::Sum { terms } => {
                let mut parts: Vec<PotentialClass> = terms
                    .iter()
                    .map(|t| t.classify(dim))
                    .filter(|c| *c != PotentialClass::Zero)
                    .collect();
                parts.dedup();
                if parts.len() == 1 {
                    parts.pop().unwrap()
                } else {
                    PotentialClass::Mixed { parts }
                }
            }
        }
    }

    /// Closed-form unitary Fourier transform `w_hat(xi)` where one exists.
    pub fn closed_form_symbol(&self, xi: &[f64]) -> Result<f64> {
        let d = xi.len();
        let unit = (2.0 * PI).powf(-0.5 * d as f64);
        match self {
            PotentialSpec::Delta { kappa } => Ok(kappa * unit),
            PotentialSpec::Gaussian { kappa, sigma } => {
                Ok(kappa * sigma.powi(d as i32) * (-0.5 * sigma * sigma * norm_sqr(xi)).exp())
            }
            PotentialSpec::Yukawa { kappa, mu } => {
                if d == 3 {
                    Ok(kappa * unit * 4.0 * PI / (norm_sqr(xi) + mu * mu))
                } else {
                    Err(Error::UnsupportedDimension { what: "Yukawa symbol", dim: d })
                }
            }
            PotentialSpec::PowerLaw { .. } => Err(Error::UnsupportedDimension {
                what: "regularized power-law symbol",
                dim: d,
            }),
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.closed_form_symbol(xi)).sum(),
        }
    }

    /// Pointwise value of a function-type term; `None` for the delta.
    fn pointwise(&self, x: &[f64], core: f64) -> Option<f64> {
        let r = norm(x);
        match self {
            PotentialSpec::Delta { .. } => None,
            PotentialSpec::Yukawa { kappa, mu } => Some(kappa * (-mu * r).exp() / r.max(core)),
            PotentialSpec::Gaussian { kappa, sigma } => Some(kappa * (-0.5 * r * r / (sigma * sigma)).exp()),
            PotentialSpec::PowerLaw { kappa, alpha, core_radius } => {
                Some(kappa * r.max(core_radius.unwrap_or(core)).powf(-alpha))
            }
            PotentialSpec::Sum { terms } => {
                Some(terms.iter().filter_map(|t| t.pointwise(x, core)).sum())
            }
        }
    }

    /// Lattice symbol: closed form when available, otherwise the transform
    /// of the grid-sampled kernel.
    fn lattice_symbol(&self, grid: &GridSpec) -> Vec<f64> {
        if let PotentialSpec::Sum { terms } = self {
            let mut acc = vec![0.0; grid.len()];
            for t in terms {
                for (a, b) in acc.iter_mut().zip(t.lattice_symbol(grid)) {
                    *a += b;
                }
            }
            return acc;
        }
        if self.closed_form_symbol(&vec![0.0; grid.dim()]).is_ok() {
            return grid.sample_frequencies(|xi| self.closed_form_symbol(xi).unwrap());
        }
        let core = grid.min_spacing();
        let mut samples: Vec<Complex64> = grid
            .sample(|x| Complex64::new(self.pointwise(x, core).unwrap_or(0.0), 0.0));
        forward(grid, &mut samples);
        samples.into_iter().map(|v| v.re).collect()
    }

    /// Size of the interaction used in smallness conditions.
    ///
    /// Total variation `|kappa|` for the delta, the `L^q` norm by grid
    /// quadrature for function terms (`q = 1` for Yukawa and Gaussian,
    /// `q = d / alpha` for power laws), summed over `Sum` terms.
    pub fn interaction_norm(&self, grid: &GridSpec) -> f64 {
        let core = grid.min_spacing();
        let lq = |spec: &PotentialSpec, q: f64| -> f64 {
            let s: f64 = grid
                .sample(|x| spec.pointwise(x, core).unwrap_or(0.0).abs().powf(q))
                .into_iter()
                .sum();
            (s * grid.cell_volume()).powf(1.0 / q)
        };
        match self {
            PotentialSpec::Delta { kappa } => kappa.abs(),
            PotentialSpec::Yukawa { .. } | PotentialSpec::Gaussian { .. } => lq(self, 1.0),
            PotentialSpec::PowerLaw { alpha, .. } => lq(self, grid.dim() as f64 / alpha),
            PotentialSpec::Sum { terms } => terms.iter().map(|t| t.interaction_norm(grid)).sum(),
        }
    }
}

/// Lattice form of a potential, ready for repeated convolutions.
#[derive(Clone, Debug)]
pub struct ConvolutionKernel {
    grid: GridSpec,
    symbol: Vec<f64>,
    dealias: bool,
    /// `(2 pi)^(d/2) w_hat`, masked when dealiasing.
    table: Vec<f64>,
    zero: bool,
}

impl ConvolutionKernel {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Lattice values of `w_hat` in storage order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// `w * rho` for a real density in storage order, before taking the real part.
    pub(crate) fn convolve_complex(&self, density: &[f64]) -> Vec<Complex64> {
        let mut work: Vec<Complex64> = density.par_iter().map(|&r| Complex64::new(r, 0.0)).collect();
        forward(&self.grid, &mut work);
        work.par_iter_mut().zip(self.table.par_iter()).for_each(|(v, m)| *v *= m);
        inverse(&self.grid, &mut work);
        work
    }

    /// Real potential `w * rho`.
    pub fn convolve(&self, density: &[f64]) -> Vec<f64> {
        if self.zero {
            return vec![0.0; density.len()];
        }
        self.convolve_complex(density).into_iter().map(|v| v.re).collect()
    }
}

/// Mask keeping wave numbers with `|k| <= n/3` on every axis.
pub fn two_thirds_mask(grid: &GridSpec) -> Vec<bool> {
    let keep: Vec<Vec<bool>> = (0..grid.dim())
        .map(|a| {
            let n = grid.shape()[a] as i64;
            (0..grid.shape()[a]).map(|j| 3 * grid.wave_number(a, j).abs() <= n).collect()
        })
        .collect();
    (0..grid.len())
        .map(|i| {
            let idx = grid.unravel(i);
            (0..grid.dim()).all(|a| keep[a][idx[a]])
        })
        .collect()
}

pub fn build_kernel(spec: &PotentialSpec, grid: &GridSpec, dealias: bool) -> Result<ConvolutionKernel> {
    spec.validate(grid.dim())?;
    let zero = spec.is_zero();
    let symbol = if zero { vec![0.0; grid.len()] } else { spec.lattice_symbol(grid) };
    let scale = (2.0 * PI).powf(0.5 * grid.dim() as f64);
    let mut table: Vec<f64> = symbol.iter().map(|s| s * scale).collect();
    if dealias {
        for (t, keep) in table.iter_mut().zip(two_thirds_mask(grid)) {
            if !keep {
                *t = 0.0;
            }
        }
    }
    Ok(ConvolutionKernel { grid: grid.clone(), symbol, dealias, table, zero })
}

/// Hartree potential `w * |psi|^2` as a real-valued physical field.
pub fn hartree_potential(psi: &SpectralField, kernel: &ConvolutionKernel) -> Result<SpectralField> {
    if psi.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    let v = kernel.convolve(&psi.density());
    SpectralField::from_values(
        psi.grid().clone(),
        v.into_iter().map(|r| Complex64::new(r, 0.0)).collect(),
        Representation::Physical,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circular_convolution(grid: &GridSpec, w: impl Fn(f64) -> f64, rho: &[f64]) -> Vec<f64> {
        let n = grid.shape()[0];
        let dx = grid.spacing(0);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut m = i as i64 - j as i64;
                        if m < -(n as i64) / 2 {
                            m += n as i64;
                        } else if m >= n as i64 / 2 {
                            m -= n as i64;
                        }
                        w(m as f64 * dx) * rho[j] * dx
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn serde_uses_tagged_records() {
        let spec: PotentialSpec = serde_json::from_str(r#"{"type":"yukawa","kappa":-0.5,"mu":1.0}"#).unwrap();
        assert_eq!(spec, PotentialSpec::Yukawa { kappa: -0.5, mu: 1.0 });
        let sum = PotentialSpec::Sum {
            terms: vec![PotentialSpec::Delta { kappa: 1.0 }, PotentialSpec::PowerLaw { kappa: 1.0, alpha: 0.5, core_radius: None }],
        };
        let text = serde_json::to_string(&sum).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&text).unwrap(), sum);
    }

    #[test]
    fn validation_names_bad_fields() {
        let bad = PotentialSpec::Sum {
            terms: vec![PotentialSpec::Yukawa { kappa: 1.0, mu: -1.0 }, PotentialSpec::PowerLaw { kappa: 1.0, alpha: 1.5, core_radius: None }],
        };
        match bad.validate(1) {
            Err(Error::ConfigInvalid(msgs)) => {
                assert_eq!(msgs.len(), 2);
                assert!(msgs[0].contains("terms[0].mu"));
                assert!(msgs[1].contains("terms[1].alpha"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classification() {
        assert_eq!(PotentialSpec::Delta { kappa: 1.0 }.classify(3), PotentialClass::Measure);
        assert_eq!(PotentialSpec::zero().classify(3), PotentialClass::Zero);
        let p = PotentialSpec::PowerLaw { kappa: 1.0, alpha: 1.0, core_radius: None };
        assert_eq!(p.classify(3).q_candidates(), vec![3.0]);
        let mixed = PotentialSpec::Sum { terms: vec![PotentialSpec::Yukawa { kappa: 1.0, mu: 1.0 }, p] };
        assert_eq!(mixed.classify(3).q_candidates(), vec![1.0, 3.0]);
    }

    #[test]
    fn zero_potential_gives_zero_field() {
        let g = GridSpec::cubic(1, 32, 10.0).unwrap();
        let k = build_kernel(&PotentialSpec::zero(), &g, true).unwrap();
        let psi = SpectralField::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        assert_eq!(hartree_potential(&psi, &k).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn delta_is_pointwise_product() {
        let g = GridSpec::cubic(2, 16, 8.0).unwrap();
        let k = build_kernel(&PotentialSpec::Delta { kappa: -0.7 }, &g, false).unwrap();
        let psi = SpectralField::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.3 * x[1].cos()));
        let v = hartree_potential(&psi, &k).unwrap();
        for (a, r) in v.values().iter().zip(psi.density()) {
            assert!((a.re + 0.7 * r).abs() < 1e-13);
        }
        let c = SpectralField::from_fn(&g, |_| Complex64::new(0.6, 0.8));
        let vc = hartree_potential(&c, &k).unwrap();
        assert!(vc.values().iter().all(|v| (v.re + 0.7).abs() < 1e-13));
    }

    #[test]
    fn gaussian_against_gaussian_density_is_closed_form() {
        // w = kappa e^{-x^2/2 sigma^2}, rho = e^{-x^2/2 s^2}:
        // (w * rho)(x) = kappa (2 pi sigma^2 s^2 / (sigma^2 + s^2))^{d/2} e^{-x^2 / 2(sigma^2 + s^2)}
        let (kappa, sigma, s) = (0.8, 0.7, 1.1);
        for d in 1..=2 {
            let g = GridSpec::cubic(d, 64, 24.0).unwrap();
            let k = build_kernel(&PotentialSpec::Gaussian { kappa, sigma }, &g, false).unwrap();
            let psi = SpectralField::from_fn(&g, |x| Complex64::new((-norm_sqr(x) / (4.0 * s * s)).exp(), 0.0));
            let v = hartree_potential(&psi, &k).unwrap();
            let amp = kappa * (2.0 * PI * sigma * sigma * s * s / (sigma * sigma + s * s)).powf(0.5 * d as f64);
            let exact = g.sample(|x| amp * (-norm_sqr(x) / (2.0 * (sigma * sigma + s * s))).exp());
            for (a, b) in v.values().iter().zip(exact) {
                assert!((a.re - b).abs() < 1e-10, "d={d}: {} vs {b}", a.re);
            }
        }
    }

    #[test]
    fn yukawa_symbol_at_origin_is_kernel_integral() {
        let mu = 1.3;
        // 4 pi int_0^inf e^{-mu r} r dr by composite Simpson on [0, 60/mu]
        let n = 200_000;
        let h = 60.0 / mu / n as f64;
        let f = |r: f64| 4.0 * PI * r * (-mu * r).exp();
        let mut s = f(0.0) + f(n as f64 * h);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let integral = s * h / 3.0;
        let spec = PotentialSpec::Yukawa { kappa: 1.0, mu };
        let at_zero = spec.closed_form_symbol(&[0.0, 0.0, 0.0]).unwrap() * (2.0 * PI).powf(1.5);
        assert!((at_zero - integral).abs() < 1e-6 * integral);
        assert!(matches!(spec.closed_form_symbol(&[0.0]), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn sampled_yukawa_matches_dense_circular_convolution() {
        let g = GridSpec::cubic(1, 64, 16.0).unwrap();
        let (kappa, mu) = (-0.4, 0.9);
        let k = build_kernel(&PotentialSpec::Yukawa { kappa, mu }, &g, false).unwrap();
        let psi = SpectralField::from_fn(&g, |x| {
            Complex64::new((-0.3 * x[0] * x[0]).exp() * (1.0 + 0.2 * (3.0 * x[0]).sin()), 0.5 * (-x[0] * x[0]).exp())
        });
        let rho = psi.density();
        let core = g.spacing(0);
        let dense = circular_convolution(&g, |x| kappa * (-mu * x.abs()).exp() / x.abs().max(core), &rho);
        let v = hartree_potential(&psi, &k).unwrap();
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in v.values().iter().zip(&dense) {
            assert!((a.re - b).abs() < 1e-10 * scale);
        }
        let raw = k.convolve_complex(&rho);
        let imag = raw.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        assert!(imag <= 1e-12 * scale);
    }

    #[test]
    fn two_thirds_mask_is_symmetric() {
        let g = GridSpec::cubic(1, 12 / 3 * 4, 1.0).unwrap();
        let mask = two_thirds_mask(&g);
        let kept: Vec<i64> = (0..16).filter(|&j| mask[j]).map(|j| g.wave_number(0, j)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 5, -5, -4, -3, -2, -1]);
    }
}
