/// Text key for a normalized coordinate pair: both values rendered with
/// `precision` decimals, joined by `_`.
///
/// Rounding is round-half-to-even on the exact binary value, which is what
/// the standard float formatter does.
pub fn synthesize_node(lat_norm: f64, lon_norm: f64, precision: usize) -> String {
    // -0.0 would otherwise render with a sign
    let lat = if lat_norm == 0.0 { 0.0 } else { lat_norm };
    let lon = if lon_norm == 0.0 { 0.0 } else { lon_norm };
    format!("{lat:.precision$}_{lon:.precision$}")
}
