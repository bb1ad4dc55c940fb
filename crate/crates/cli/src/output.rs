//! Deterministic text output: 12-significant-digit floats and plain CSV.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// Formats a float with 12 significant digits, '.' decimal separator.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 30) as usize;
    format!("{x:.decimals$}")
}

/// A CSV table with a fixed header, written to a file or stdout.
pub struct Csv {
    buffer: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buffer = String::with_capacity(4096);
        buffer.push_str(header);
        buffer.push('\n');
        Csv { buffer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    pub fn write(self, out: Option<&Path>) -> io::Result<()> {
        match out {
            Some(path) => File::create(path)?.write_all(self.buffer.as_bytes()),
            None => io::stdout().write_all(self.buffer.as_bytes()),
        }
    }
}
