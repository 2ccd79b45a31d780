//! CSV emission. Every file starts with a comment line carrying the tool
//! version and the hash of the exact configuration document, then the column
//! header. Floats use the shortest round-trip representation, so identical
//! runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct CsvFile {
    path: PathBuf,
    out: Vec<u8>,
    columns: usize,
}

impl CsvFile {
    pub fn create(
        dir: &Path,
        name: &str,
        config_hash: &str,
        columns: &[&str],
        extra_comments: &[String],
    ) -> std::io::Result<CsvFile> {
        let mut out = Vec::new();
        writeln!(
            out,
            "# critcurve {} config_sha256={config_hash}",
            env!("CARGO_PKG_VERSION")
        )?;
        for comment in extra_comments {
            writeln!(out, "# {comment}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvFile {
            path: dir.join(name),
            out,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width mismatch");
        self.out.extend_from_slice(fields.join(",").as_bytes());
        self.out.push(b'\n');
    }

    pub fn finish(self) -> std::io::Result<PathBuf> {
        fs::write(&self.path, &self.out)?;
        Ok(self.path)
    }
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "nan".into()
    }
}
