use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::PreprocessError;

/// Source timestamp layout, e.g. `03/18/2015 07:44:00 PM`.
pub const DATE_FORMAT: &str = "%m/%d/%Y %I:%M:%S %p";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalFeatures {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    /// 0 = Monday.
    pub weekday: u32,
}

pub fn decompose_datetime(date_text: &str) -> Result<TemporalFeatures, PreprocessError> {
    let dt = NaiveDateTime::parse_from_str(date_text.trim(), DATE_FORMAT)
        .map_err(|_| PreprocessError::Temporal(date_text.to_string()))?;
    Ok(TemporalFeatures {
        year: dt.year(),
        month: dt.month(),
        day: dt.day(),
        hour: dt.hour(),
        weekday: dt.weekday().num_days_from_monday(),
    })
}
