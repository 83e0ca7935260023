//! Smooth compactly supported cutoff functions on the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A smooth function supported in `[lo, hi]`.
///
/// `Bump` is the rescaled `e^(1 - 1/(1 - s^2))` with peak 1 at the midpoint.
/// `Plateau` equals 1 on `[lo + ramp, hi - ramp]` and rises through smooth
/// steps built from `e^(-1/u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothCutoff {
    Bump { lo: f64, hi: f64 },
    Plateau { lo: f64, hi: f64, ramp: f64 },
    /// Identically one; not compactly supported.
    One,
}

impl SmoothCutoff {
    pub fn bump(lo: f64, hi: f64) -> Result<Self> {
        let c = SmoothCutoff::Bump { lo, hi };
        c.validate()?;
        Ok(c)
    }

    pub fn plateau(lo: f64, hi: f64, ramp: f64) -> Result<Self> {
        let c = SmoothCutoff::Plateau { lo, hi, ramp };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothCutoff::Bump { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            SmoothCutoff::Plateau { lo, hi, ramp }
                if lo.is_finite() && hi.is_finite() && ramp > 0.0 && 2.0 * ramp <= hi - lo =>
            {
                Ok(())
            }
            SmoothCutoff::One => Ok(()),
            other => Err(Error::InvalidParameter(format!("degenerate cutoff {other:?}"))),
        }
    }

    /// Closed support interval, `None` when unbounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            SmoothCutoff::Bump { lo, hi } | SmoothCutoff::Plateau { lo, hi, .. } => Some((lo, hi)),
            SmoothCutoff::One => None,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            SmoothCutoff::Bump { lo, hi } => {
                let s = (2.0 * u - lo - hi) / (hi - lo);
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            SmoothCutoff::Plateau { lo, hi, ramp } => smooth_step((u - lo) / ramp) * smooth_step((hi - u) / ramp),
            SmoothCutoff::One => 1.0,
        }
    }

    /// Whether the supports of two cutoffs intersect.
    pub fn overlaps(&self, other: &SmoothCutoff) -> bool {
        match (self.support(), other.support()) {
            (Some((a0, a1)), Some((b0, b1))) => a0 < b1 && b0 < a1,
            _ => true,
        }
    }
}

/// Smooth monotone step, 0 for `u <= 0` and 1 for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    let h = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
    let a = h(u);
    let b = h(1.0 - u);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}
