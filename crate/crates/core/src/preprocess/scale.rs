use serde::{Deserialize, Serialize};

use super::PreprocessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub min: f64,
    pub max: f64,
}

impl ScaleRange {
    pub fn of(values: &[f64]) -> Result<Self, PreprocessError> {
        if values.is_empty() {
            return Err(PreprocessError::Domain("min-max scaling needs at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(PreprocessError::Domain(format!("non-finite value {bad} in scaling input")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { min, max })
    }

    /// Maps `v` into `[0, 1]`. A degenerate range maps everything to 0.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span == 0.0 {
            0.0
        } else {
            ((v - self.min) / span).clamp(0.0, 1.0)
        }
    }
}

pub fn min_max_scale(values: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    let range = ScaleRange::of(values)?;
    Ok(values.iter().map(|&v| range.apply(v)).collect())
}
