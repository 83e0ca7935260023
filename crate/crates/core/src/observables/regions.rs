//! Convex regions, their distances and separating affine functionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::grid::norm;
use crate::spectral::{ordered_sum, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexRegion {
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : normal . x >= offset}` with a unit normal.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

impl ConvexRegion {
    pub fn dim(&self) -> usize {
        match self {
            ConvexRegion::Ball { center, .. } => center.len(),
            ConvexRegion::HalfSpace { normal, .. } => normal.len(),
            ConvexRegion::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(dim, "region", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    pub(crate) fn collect_errors(&self, dim: usize, path: &str, errors: &mut Vec<String>) {
        if self.dim() != dim {
            errors.push(format!("{path}: expected {dim} coordinates, got {}", self.dim()));
            return;
        }
        match self {
            ConvexRegion::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    errors.push(format!("{path}.radius: must be positive, got {radius}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    errors.push(format!("{path}.center: must be finite"));
                }
            }
            ConvexRegion::HalfSpace { normal, offset } => {
                if (norm(normal) - 1.0).abs() > 1e-12 {
                    errors.push(format!("{path}.normal: must be a unit vector, |n| = {}", norm(normal)));
                }
                if !offset.is_finite() {
                    errors.push(format!("{path}.offset: must be finite"));
                }
            }
            ConvexRegion::Box { lo, hi } => {
                if hi.len() != lo.len() {
                    errors.push(format!("{path}: lo and hi differ in length"));
                } else if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                    errors.push(format!("{path}: need lo < hi on every axis"));
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ConvexRegion::Ball { center, radius } => norm(&sub(x, center)) <= *radius,
            ConvexRegion::HalfSpace { normal, offset } => dot(normal, x) >= *offset,
            ConvexRegion::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
        }
    }

    /// Nearest point of the region to `x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConvexRegion::Ball { center, radius } => {
                let v = sub(x, center);
                let r = norm(&v);
                if r <= *radius {
                    x.to_vec()
                } else {
                    axpy(center, radius / r, &v)
                }
            }
            ConvexRegion::HalfSpace { normal, offset } => {
                let gap = offset - dot(normal, x);
                if gap <= 0.0 {
                    x.to_vec()
                } else {
                    axpy(x, gap, normal)
                }
            }
            ConvexRegion::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect(),
        }
    }

    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        norm(&sub(x, &self.project(x)))
    }
}

/// A pair of closest points `(p in X, q in Y)` for disjoint regions.
///
/// Returns `None` when the closed-form distance is zero.
pub fn closest_points(x: &ConvexRegion, y: &ConvexRegion) -> Option<(Vec<f64>, Vec<f64>)> {
    use ConvexRegion::*;
    let pair = match (x, y) {
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => {
            let v = sub(c2, c1);
            let d = norm(&v);
            if d <= r1 + r2 {
                return None;
            }
            (axpy(c1, r1 / d, &v), axpy(c2, -r2 / d, &v))
        }
        (Ball { center, radius }, other) => {
            let q = other.project(center);
            let v = sub(&q, center);
            let d = norm(&v);
            if d <= *radius {
                return None;
            }
            (axpy(center, radius / d, &v), q)
        }
        (_, Ball { .. }) => {
            let (q, p) = closest_points(y, x)?;
            (p, q)
        }
        (HalfSpace { normal: n1, offset: b1 }, HalfSpace { normal: n2, offset: b2 }) => {
            let antiparallel = n1.iter().zip(n2).all(|(a, b)| (a + b).abs() < 1e-12);
            if !antiparallel || b1 + b2 <= 0.0 {
                return None;
            }
            (n1.iter().map(|v| v * b1).collect(), n1.iter().map(|v| -v * b2).collect())
        }
        (HalfSpace { normal, offset }, Box { lo, hi }) => {
            // the box corner furthest along the normal is nearest the half-space
            let corner: Vec<f64> = normal
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(n, (a, b))| if *n >= 0.0 { *b } else { *a })
                .collect();
            let gap = offset - dot(normal, &corner);
            if gap <= 0.0 {
                return None;
            }
            (axpy(&corner, gap, normal), corner)
        }
        (Box { .. }, HalfSpace { .. }) => {
            let (q, p) = closest_points(y, x)?;
            (p, q)
        }
        (Box { lo: l1, hi: h1 }, Box { lo: l2, hi: h2 }) => {
            let mut p = Vec::with_capacity(l1.len());
            let mut q = Vec::with_capacity(l1.len());
            for a in 0..l1.len() {
                if h1[a] < l2[a] {
                    p.push(h1[a]);
                    q.push(l2[a]);
                } else if h2[a] < l1[a] {
                    p.push(l1[a]);
                    q.push(h2[a]);
                } else {
                    let m = l1[a].max(l2[a]);
                    p.push(m);
                    q.push(m);
                }
            }
            if norm(&sub(&p, &q)) == 0.0 {
                return None;
            }
            (p, q)
        }
    };
    Some(pair)
}

/// Euclidean distance between two convex regions.
pub fn region_distance(x: &ConvexRegion, y: &ConvexRegion) -> f64 {
    match closest_points(x, y) {
        Some((p, q)) => norm(&sub(&p, &q)),
        None => 0.0,
    }
}

/// Affine functional `l(x) = n . (x - x0)` with `l >= D/2` on `X` and `l <= -D/2` on `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatingFunctional {
    pub normal: Vec<f64>,
    pub origin: Vec<f64>,
    pub distance: f64,
}

impl SeparatingFunctional {
    pub fn between(x: &ConvexRegion, y: &ConvexRegion) -> Result<Self> {
        let (p, q) = closest_points(x, y)
            .ok_or_else(|| Error::InvalidParameter("regions are not separated by a positive distance".into()))?;
        let v = sub(&p, &q);
        let d = norm(&v);
        Ok(Self {
            normal: v.iter().map(|c| c / d).collect(),
            origin: p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect(),
            distance: d,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, &sub(x, &self.origin))
    }
}

/// `||1_R psi||_2` with a sharp grid mask.
pub fn region_mass(psi: &SpectralField, region: &ConvexRegion) -> f64 {
    let phys = psi.to_physical();
    let mask = phys.grid().sample(|x| region.contains(x));
    let s: f64 = ordered_sum(phys.values().par_iter().zip(mask.par_iter()).map(|(v, m)| if *m { v.norm_sqr() } else { 0.0 }));
    (s * phys.grid().cell_volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball(c: &[f64], r: f64) -> ConvexRegion {
        ConvexRegion::Ball { center: c.to_vec(), radius: r }
    }

    #[test]
    fn closed_form_distances() {
        assert_eq!(region_distance(&ball(&[0.0, 0.0], 1.0), &ball(&[0.0, 0.0], 1.0)), 0.0);
        assert!((region_distance(&ball(&[0.0, 0.0], 1.0), &ball(&[3.0, 4.0], 1.0)) - 3.0).abs() < 1e-14);
        let h = ConvexRegion::HalfSpace { normal: vec![1.0, 0.0], offset: 5.0 };
        assert!((region_distance(&ball(&[0.0, 1.0], 2.0), &h) - 3.0).abs() < 1e-14);
        assert!((region_distance(&h, &ball(&[0.0, 1.0], 2.0)) - 3.0).abs() < 1e-14);
        let h2 = ConvexRegion::HalfSpace { normal: vec![-1.0, 0.0], offset: 1.0 };
        assert!((region_distance(&h, &h2) - 6.0).abs() < 1e-14);
        let b1 = ConvexRegion::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let b2 = ConvexRegion::Box { lo: vec![4.0, 5.0], hi: vec![6.0, 6.0] };
        assert!((region_distance(&b1, &b2) - 5.0).abs() < 1e-14);
        assert!((region_distance(&b1, &h) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn box_ball_distance_matches_sampled_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = ConvexRegion::Box { lo: vec![-1.0, 2.0, 0.0], hi: vec![1.0, 3.0, 0.5] };
        let c = [3.0, -1.0, 2.0];
        let r = 0.7;
        let exact = region_distance(&ball(&c, r), &b);
        // sample box points, take the distance to the sphere center minus radius
        let mut best = f64::INFINITY;
        for _ in 0..200_000 {
            let p: Vec<f64> = (0..3).map(|a| {
                let (lo, hi) = ([-1.0, 2.0, 0.0][a], [1.0, 3.0, 0.5][a]);
                rng.random_range(lo..=hi)
            }).collect();
            best = best.min(norm(&sub(&p, &c)) - r);
        }
        assert!(best >= exact - 1e-12);
        assert!(best - exact < 2e-2);
    }

    #[test]
    fn separating_functional_has_margin() {
        let x = ball(&[0.0, 0.0], 1.0);
        let y = ConvexRegion::Box { lo: vec![3.0, 2.0], hi: vec![5.0, 4.0] };
        let l = SeparatingFunctional::between(&x, &y).unwrap();
        let d = l.distance;
        let g = GridSpec::cubic(2, 64, 12.0).unwrap();
        for pt in g.sample(|p| p.to_vec()) {
            if x.contains(&pt) {
                assert!(l.eval(&pt) >= d / 2.0 - 1e-12);
            }
            if y.contains(&pt) {
                assert!(l.eval(&pt) <= -d / 2.0 + 1e-12);
            }
        }
        assert!(SeparatingFunctional::between(&x, &ball(&[1.5, 0.0], 1.0)).is_err());
    }

    #[test]
    fn region_mass_limits() {
        let g = GridSpec::cubic(1, 256, 20.0).unwrap();
        let psi = SpectralField::from_fn(&g, |x| {
            let u = x[0] / 2.0;
            Complex64::new(if u.abs() < 1.0 { (-1.0 / (1.0 - u * u)).exp() } else { 0.0 }, 0.0)
        });
        let all = ConvexRegion::Box { lo: vec![-100.0], hi: vec![100.0] };
        assert!((region_mass(&psi, &all) - psi.norm_l2()).abs() < 1e-14);
        let far = ConvexRegion::HalfSpace { normal: vec![1.0], offset: 3.0 };
        assert_eq!(region_mass(&psi, &far), 0.0);
    }

    #[test]
    fn interval_mass_of_gaussian_matches_quadrature() {
        let g = GridSpec::cubic(1, 4096, 16.0).unwrap();
        let dx = g.spacing(0);
        let r = 384.5 * dx;
        let psi = SpectralField::from_fn(&g, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        // Simpson on [0, r] of e^{-x^2}, doubled
        let n = 20_000;
        let h = r / n as f64;
        let f = |x: f64| (-x * x).exp();
        let mut s = f(0.0) + f(r);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let exact = (2.0 * s * h / 3.0).sqrt();
        let got = region_mass(&psi, &ball(&[0.0], r));
        assert!((got - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn ball_mass_of_radial_gaussian_matches_radial_quadrature() {
        // ||1_{|x|<r} e^{-|x|^2/2}||^2 in 2D = pi (1 - e^{-r^2})
        let g = GridSpec::cubic(2, 512, 16.0).unwrap();
        let psi = SpectralField::from_fn(&g, |x| Complex64::new((-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
        let r: f64 = 1.5;
        let exact = (std::f64::consts::PI * (1.0 - (-r * r).exp())).sqrt();
        let got = region_mass(&psi, &ball(&[0.0, 0.0], r));
        // sharp-mask staircase error scales with the grid spacing
        assert!((got - exact).abs() < 5e-3 * exact);
    }
}
