//! Numerical line integrals along piecewise-linear paths.
//!
//! Used to show the gated field is not conservative: its integral between two
//! fixed points depends on the path taken, unlike any gradient field.

use crate::error::{Error, Result};

use super::UpdateRule;

/// A chain of straight segments, connected end-to-start.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    segments: Vec<([f64; 2], [f64; 2])>,
}

impl Path {
    /// Builds the path visiting `points` in order.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config(
                "a path needs at least two points".to_string(),
            ));
        }
        Ok(Self {
            segments: points.windows(2).map(|w| (w[0], w[1])).collect(),
        })
    }

    pub fn segments(&self) -> &[([f64; 2], [f64; 2])] {
        &self.segments
    }
}

/// Midpoint-rule approximation of the work integral of `field` along `path`.
///
/// `n_per_segment` must be at least 1000; the integrands here are piecewise
/// constant in direction, so midpoints dodge the support-boundary ambiguity.
pub fn line_integral(
    field: &dyn UpdateRule,
    path: &Path,
    n_per_segment: usize,
) -> Result<f64> {
    if n_per_segment < 1000 {
        return Err(Error::OutOfRange {
            context: "line_integral n_per_segment",
            value: n_per_segment as f64,
        });
    }
    if field.arity() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: field.arity(),
        });
    }
    let n = n_per_segment as f64;
    let mut total = 0.0;
    for (a, b) in path.segments() {
        let delta = [b[0] - a[0], b[1] - a[1]];
        let mut acc = 0.0;
        for i in 0..n_per_segment {
            let t = (i as f64 + 0.5) / n;
            let x = [a[0] + t * delta[0], a[1] + t * delta[1]];
            let (u, _) = field.update_at(&x);
            if u.iter().any(|c| !c.is_finite()) {
                return Err(Error::SingularityOnPath);
            }
            acc += u[0] * delta[0] + u[1] * delta[1];
        }
        total += acc / n;
    }
    Ok(total)
}
