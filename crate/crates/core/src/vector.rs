//! Flat parameter/gradient container.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat vector of finite reals, optionally split into disjoint layer ranges.
///
/// Holds parameters and gradients alike; the optional partition marks layer
/// boundaries for per-layer cosine averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    partition: Option<Vec<Range<usize>>>,
}

impl ParamVector {
    /// Builds a vector, rejecting NaN/Inf entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "ParamVector::new",
            });
        }
        Ok(Self {
            values,
            partition: None,
        })
    }

    /// Attaches a layer partition; ranges must be disjoint and cover `[0, len)`.
    pub fn with_partition(mut self, partition: Vec<Range<usize>>) -> Result<Self> {
        validate_partition(&partition, self.values.len())?;
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            partition: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn partition(&self) -> Option<&[Range<usize>]> {
        self.partition.as_deref()
    }

    /// Consumes the vector, returning the raw values.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_same_len(self, other)?;
        Ok(dot_slices(&self.values, &other.values))
    }
}

pub(crate) fn check_same_len(a: &ParamVector, b: &ParamVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_slice(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn validate_partition(partition: &[Range<usize>], len: usize) -> Result<()> {
    let mut covered = vec![false; len];
    for range in partition {
        if range.start > range.end || range.end > len {
            return Err(Error::InvalidPartition(format!(
                "range {range:?} out of bounds for length {len}"
            )));
        }
        for i in range.clone() {
            if covered[i] {
                return Err(Error::InvalidPartition(format!(
                    "index {i} covered by more than one range"
                )));
            }
            covered[i] = true;
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(Error::InvalidPartition(format!("index {i} not covered")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(ParamVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(ParamVector::new(vec![f64::INFINITY]).is_err());
        assert!(ParamVector::new(vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn partition_must_cover_disjointly() {
        let v = ParamVector::new(vec![0.0; 4]).unwrap();
        assert!(v.clone().with_partition(vec![0..2, 2..4]).is_ok());
        assert!(v.clone().with_partition(vec![0..2, 1..4]).is_err());
        assert!(v.clone().with_partition(vec![0..2]).is_err());
        assert!(v.with_partition(vec![0..2, 2..5]).is_err());
    }

    #[test]
    fn dot_checks_length() {
        let a = ParamVector::new(vec![1.0, 2.0]).unwrap();
        let b = ParamVector::new(vec![1.0]).unwrap();
        assert!(a.dot(&b).is_err());
    }
}
