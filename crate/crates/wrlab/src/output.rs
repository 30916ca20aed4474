//! Text serialisation shared by the CSV writers.

/// Formats a float with 17 significant digits so that parsing it back gives
/// the same bits. Infinities are written as `inf` / `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}
