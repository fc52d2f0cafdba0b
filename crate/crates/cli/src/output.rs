//! Artefact assembly. Every artefact is built in memory and written by a
//! single writer once the command has finished.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "pilotwave";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough for a lossless round trip.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV table with '#'-prefixed metadata lines ahead of the column header.
#[derive(Debug, Clone)]
pub struct Csv {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new(digest: &str, command: &str, columns: &[&str]) -> Self {
        Self {
            meta: vec![
                ("tool".into(), format!("{TOOL} {VERSION}")),
                ("command".into(), command.into()),
                ("scenario_digest".into(), digest.into()),
            ],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            self.body.push_str(c.as_ref());
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

/// Parsed CSV artefact: metadata lines, column names and raw cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut meta = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            match lines.next() {
                Some(l) if l.starts_with('#') => {
                    if let Some((k, v)) = l.trim_start_matches('#').trim().split_once(':') {
                        meta.push((k.trim().to_string(), v.trim().to_string()));
                    }
                }
                Some(l) => break l,
                None => return Err(CliError::Input("table has no column header".into())),
            }
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        Ok(Self {
            meta,
            columns,
            rows,
        })
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric cell, `None` when empty or unparsable.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.rows.get(row)?.get(col)?.parse().ok()
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serialises");
    s.push('\n');
    s
}

/// Named artefacts waiting to be written.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn content(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        if self.files.is_empty() {
            return Ok(Vec::new());
        }
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, content)| {
                let path = dir.join(name);
                std::fs::write(&path, content).map_err(|e| {
                    CliError::Input(format!("cannot write {}: {e}", path.display()))
                })?;
                Ok(path)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 1e-300, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "");
    }

    #[test]
    fn csv_parses_back() {
        let mut c = Csv::new("abc", "field", &["x", "y"]).meta("t1", 2.5);
        c.row(&[num(1.0), String::new()]);
        let t = Table::parse(&c.render()).unwrap();
        assert_eq!(t.meta_value("scenario_digest"), Some("abc"));
        assert_eq!(t.meta_value("t1"), Some("2.5"));
        assert_eq!(t.columns, vec!["x", "y"]);
        assert_eq!(t.value(0, 0), Some(1.0));
        assert_eq!(t.value(0, 1), None);
    }
}
