//! CSV and JSON emission. Reals use the shortest representation that parses
//! back to the same `f64`; non-finite values are written as `inf`, `-inf`
//! and `nan`.

use std::path::Path;

use aqlab::Vector;
use serde::Serialize;

use crate::CliError;

pub fn real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Coordinates joined by `;`.
pub fn vector(v: &Vector) -> String {
    v.coords().iter().map(|c| real(*c)).collect::<Vec<_>>().join(";")
}

/// An in-memory CSV table.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("flushing memory buffer");
        String::from_utf8(bytes).expect("CSV fields are UTF-8")
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// Writes `(file name, contents)` pairs into `dir`, creating it if needed.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 2.5e17, -0.0, 3.0] {
            assert_eq!(real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(real(f64::INFINITY), "inf");
        assert_eq!(real(f64::NAN), "nan");
        assert_eq!(opt_real(None), "");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row([real(0.5), vector(&Vector::new(vec![1.0, -2.0]).unwrap())]);
        assert_eq!(t.finish(), "a,b\n0.5,1.0;-2.0\n");
    }
}
