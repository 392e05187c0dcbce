//! Output files. Every file opens with the same provenance header: JSON files
//! wrap their payload as `{"header": {...}, "data": ...}`, CSV files start
//! with `# key: value` comment lines before the column row.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

pub const TOOL: &str = "locomotion";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub command: String,
}

impl Header {
    pub fn new(config_hash: &str, command: &str) -> Self {
        Header {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            command: command.into(),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool: {}\n# version: {}\n# config_hash: {}\n# command: {}\n",
            self.tool, self.version, self.config_hash, self.command
        )
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a Header,
    data: &'a T,
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn json_string<T: Serialize>(header: &Header, data: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Wrapped { header, data }).expect("output serializes");
    s.push('\n');
    s
}

pub fn csv_string(header: &Header, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
    header.comment_lines() + &body
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

/// `dir/stem.csv` or `dir/stem.json`.
pub fn path_for(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(match format {
        Format::Csv => format!("{stem}.csv"),
        Format::Json => format!("{stem}.json"),
    })
}

/// Shortest round-trip representation, so CSV values parse back exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_carries_header_then_columns() {
        let h = Header::new("abc", "walk");
        let s = csv_string(&h, &["a", "b"], &[vec![num(0.1), "x;y".into()]]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# tool: locomotion");
        assert_eq!(lines[2], "# config_hash: abc");
        assert_eq!(lines[3], "# command: walk");
        assert_eq!(lines[4], "a,b");
        assert_eq!(lines[5], "0.1,x;y");
    }

    #[test]
    fn json_wraps_payload() {
        let h = Header::new("abc", "plan");
        let v: serde_json::Value = serde_json::from_str(&json_string(&h, &[1, 2])).unwrap();
        assert_eq!(v["header"]["config_hash"], "abc");
        assert_eq!(v["header"]["tool"], TOOL);
        assert_eq!(v["data"][1], 2);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
