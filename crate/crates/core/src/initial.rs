//! Initial data builders.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::grid::norm_sqr;
use crate::spectral::{GridSpec, Representation, SpectralField};

/// Shapes of initial data. Every variant may be rescaled to a target L^2 norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialSpec {
    /// `amplitude e^(-|x - c|^2 / (2 width^2))`.
    Gaussian {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        norm: Option<f64>,
    },
    /// `amplitude e^(1 - 1/(1 - |x - c|^2 / R^2))` inside the ball of radius `R`, zero outside.
    Bump {
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        norm: Option<f64>,
    },
    /// Gaussian envelope carrying the plane wave `e^(i k . x)`.
    Modulated {
        #[serde(default)]
        center: Option<Vec<f64>>,
        width: f64,
        wave_vector: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        norm: Option<f64>,
    },
    /// Random coefficients under a Gaussian frequency envelope of the given bandwidth.
    RandomSmooth {
        bandwidth: f64,
        #[serde(default)]
        norm: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn offset(x: &[f64], c: &Option<Vec<f64>>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, v) in x.iter().enumerate() {
        out[i] = v - c.as_ref().map_or(0.0, |c| c[i]);
    }
    out
}

impl InitialSpec {
    pub(crate) fn collect_errors(&self, dim: usize, path: &str, errors: &mut Vec<String>) {
        let check_center = |c: &Option<Vec<f64>>, errors: &mut Vec<String>| {
            if let Some(c) = c {
                if c.len() != dim {
                    errors.push(format!("{path}.center: expected {dim} coordinates, got {}", c.len()));
                }
            }
        };
        let positive = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("{path}.{name}: must be positive, got {v}"));
            }
        };
        let norm = match self {
            InitialSpec::Gaussian { center, width, norm, .. } => {
                check_center(center, errors);
                positive("width", *width, errors);
                norm
            }
            InitialSpec::Bump { center, radius, norm, .. } => {
                check_center(center, errors);
                positive("radius", *radius, errors);
                norm
            }
            InitialSpec::Modulated { center, width, wave_vector, norm, .. } => {
                check_center(center, errors);
                positive("width", *width, errors);
                if wave_vector.len() != dim {
                    errors.push(format!("{path}.wave_vector: expected {dim} components, got {}", wave_vector.len()));
                }
                norm
            }
            InitialSpec::RandomSmooth { bandwidth, norm } => {
                positive("bandwidth", *bandwidth, errors);
                norm
            }
        };
        if let Some(n) = norm {
            positive("norm", *n, errors);
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(dim, "initial", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    /// Center and radius of a ball holding the (numerical) support, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            InitialSpec::Bump { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    pub fn center(&self, dim: usize) -> Vec<f64> {
        match self {
            InitialSpec::Gaussian { center, .. } | InitialSpec::Bump { center, .. } | InitialSpec::Modulated { center, .. } => {
                center.clone().unwrap_or_else(|| vec![0.0; dim])
            }
            InitialSpec::RandomSmooth { .. } => vec![0.0; dim],
        }
    }

    fn target_norm(&self) -> Option<f64> {
        match self {
            InitialSpec::Gaussian { norm, .. }
            | InitialSpec::Bump { norm, .. }
            | InitialSpec::Modulated { norm, .. }
            | InitialSpec::RandomSmooth { norm, .. } => *norm,
        }
    }

    /// Samples the data on `grid`; `seed` drives the random variant.
    pub fn build(&self, grid: &GridSpec, seed: u64) -> Result<SpectralField> {
        self.validate(grid.dim())?;
        let d = grid.dim();
        let field = match self {
            InitialSpec::Gaussian { center, width, amplitude, .. } => SpectralField::from_fn(grid, |x| {
                let y = offset(x, center);
                Complex64::new(amplitude * (-0.5 * norm_sqr(&y[..d]) / (width * width)).exp(), 0.0)
            }),
            InitialSpec::Bump { center, radius, amplitude, .. } => SpectralField::from_fn(grid, |x| {
                let y = offset(x, center);
                Complex64::new(amplitude * bump(norm_sqr(&y[..d]) / (radius * radius)), 0.0)
            }),
            InitialSpec::Modulated { center, width, wave_vector, amplitude, .. } => SpectralField::from_fn(grid, |x| {
                let y = offset(x, center);
                let phase: f64 = x.iter().zip(wave_vector).map(|(a, k)| a * k).sum();
                Complex64::from_polar(amplitude * (-0.5 * norm_sqr(&y[..d]) / (width * width)).exp(), phase)
            }),
            InitialSpec::RandomSmooth { bandwidth, .. } => random_smooth(grid, *bandwidth, seed),
        };
        Ok(match self.target_norm() {
            Some(n) => {
                let cur = field.norm_l2();
                if cur == 0.0 {
                    return Err(Error::InvalidParameter("initial data vanishes on the grid".into()));
                }
                field.scale(Complex64::new(n / cur, 0.0))
            }
            None => field,
        })
    }
}

/// `e^(1 - 1/(1 - u))` for `u = |x|^2 / R^2 < 1`, peak 1 at the center.
pub fn bump(u: f64) -> f64 {
    if u < 1.0 {
        (1.0 - 1.0 / (1.0 - u)).exp()
    } else {
        0.0
    }
}

/// Field with uniform random coefficients in `[-1, 1]^2` damped by `e^(-|xi|^2 / (2 b^2))`.
pub fn random_smooth(grid: &GridSpec, bandwidth: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let envelope = grid.sample_frequencies(|xi| (-0.5 * norm_sqr(xi) / (bandwidth * bandwidth)).exp());
    let values = envelope
        .into_iter()
        .map(|e| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)) * e)
        .collect();
    SpectralField::from_values(grid.clone(), values, Representation::Frequency)
        .expect("length matches grid")
        .into_physical()
}
