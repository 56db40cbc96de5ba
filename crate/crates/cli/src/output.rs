use serde::Serialize;

use crate::config::OutputFormat;
use crate::CliError;

/// Formats `x` rounded to 12 significant digits, in plain decimal notation
/// with trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float");
    rounded.to_string()
}

pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// CSV with a header row and LF line endings, or a pretty JSON array.
pub fn render<R: Row>(rows: &[R], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(R::HEADER)?;
            for row in rows {
                w.write_record(row.cells())?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            Ok(s)
        }
    }
}
