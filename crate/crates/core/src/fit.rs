//! Least-squares fits of decay curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("fit needs two finite points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / nf).sqrt();
    Ok(LinearFit { slope, intercept, residual, points: n })
}

/// `v ~ c t^exponent` by a straight line in log-log coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub constant: f64,
    /// RMS residual in natural-log units.
    pub residual: f64,
    pub points: usize,
}

pub fn power_law_fit(t: &[f64], v: &[f64]) -> Result<PowerFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    let f = linear_fit(&lx, &ly)?;
    Ok(PowerFit { exponent: f.slope, constant: f.intercept.exp(), residual: f.residual, points: f.points })
}

/// Restricts samples to `lo <= t <= hi`.
pub fn window(t: &[f64], v: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    t.iter().zip(v).filter(|(a, _)| **a >= lo && **a <= hi).map(|(a, b)| (*a, *b)).unzip()
}

/// `R(t) ~ c (t^gamma - T^gamma)`, the remainder of a power-law integral cut at `T`.
///
/// Fitted in log space: for fixed `gamma < 0` the optimal `ln c` is a mean,
/// and `gamma` is found by a scan followed by golden-section refinement.
pub fn truncated_power_fit(t: &[f64], v: &[f64], horizon: f64) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .filter(|(a, b)| **a > 0.0 && **a < horizon && **b > 0.0)
        .map(|(a, b)| (*a, b.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!("truncated fit needs three points, got {}", pts.len())));
    }
    let cost = |g: f64| -> (f64, f64) {
        let logs: Vec<f64> = pts.iter().map(|(a, _)| (a.powf(g) - horizon.powf(g)).ln()).collect();
        let lc = pts.iter().zip(&logs).map(|((_, y), l)| y - l).sum::<f64>() / pts.len() as f64;
        let r = pts.iter().zip(&logs).map(|((_, y), l)| (y - lc - l).powi(2)).sum::<f64>();
        (r, lc)
    };
    let (lo, hi) = (-6.0, -0.005);
    let n = 400;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=n {
        let g = lo + (hi - lo) * i as f64 / n as f64;
        let (c, _) = cost(g);
        if c < best.0 {
            best = (c, g);
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c1 = b - phi * (b - a);
        let c2 = a + phi * (b - a);
        if cost(c1).0 < cost(c2).0 {
            b = c2;
        } else {
            a = c1;
        }
    }
    let g = 0.5 * (a + b);
    let (r, lc) = cost(g);
    Ok(PowerFit {
        exponent: g,
        constant: lc.exp(),
        residual: (r / pts.len() as f64).sqrt(),
        points: pts.len(),
    })
}

pub fn is_strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
