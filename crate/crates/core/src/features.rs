//! Pre-extracted image feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar robot pose in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64) -> Self {
        Pose { x, y }
    }
}

/// One image, described by a fixed-length real feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
    pub pose: Option<Pose>,
}

impl FeatureVector {
    /// Builds a vector after checking that every entry is finite.
    pub fn new(id: impl Into<String>, values: Vec<f64>, pose: Option<Pose>) -> Result<Self> {
        let id = id.into();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "feature vector {id:?} has non-finite value at index {k}"
            )));
        }
        Ok(FeatureVector { id, values, pose })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Checks that all vectors share one dimension and returns it.
pub(crate) fn common_dim<'a, I>(vectors: I) -> Result<Option<usize>>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut dim = None;
    for v in vectors {
        match dim {
            None => dim = Some(v.dim()),
            Some(d) if d != v.dim() => {
                return Err(Error::input(format!(
                    "dimension mismatch: {:?} has length {}, expected {d}",
                    v.id,
                    v.dim()
                )))
            }
            Some(_) => {}
        }
    }
    Ok(dim)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
