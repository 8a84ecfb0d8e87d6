//! Locale-independent number formatting and CSV assembly.

/// Shortest decimal string that parses back to exactly `x`. Plain notation
/// for `1e-5 <= |x| < 1e16`, exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x.abs() < 1e-5 || x.abs() >= 1e16 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Comma-joined formatted row, no trailing newline.
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| fmt_num(v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Header plus rows, each line terminated by `\n`.
pub fn csv_table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::with_capacity(64);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
