//! Number formatting shared by every output: the shortest decimal that
//! parses back to the same `f64`, independent of locale.

pub fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(", ");
    line.push('\n');
    line
}
