//! File formats and atomic writes.
//!
//! CSV: comma separated, '.' decimal point, header row, UTF-8, LF line
//! endings. Vector-valued fields are joined with ';'. Floats use Rust's
//! shortest round-trip representation, so equal numbers give equal bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Incrementally built CSV table with a fixed header.
pub struct Csv {
    width: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { width: header.len(), text }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.width, "CSV row width must match the header");
        for f in fields {
            debug_assert!(!f.contains([',', '\n', '"']), "field needs no quoting: {f}");
        }
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count() - 1
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn vector(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{x:?}");
    }
    s
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Pretty JSON with a trailing newline. Non-finite floats become `null`.
pub fn json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialise");
    bytes.push(b'\n');
    bytes
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the same directory, then renames, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), source: e };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dialect() {
        let mut t = Csv::new(&["a", "b"]);
        t.row(&[num(0.1), vector(&[1.0, -2.5e-7])]);
        assert_eq!(t.rows(), 1);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "a,b\n0.1,1.0;-2.5e-7\n");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
