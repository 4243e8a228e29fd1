//! Delimited output tables with a metadata header block.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_error, BenchError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Comma-delimited table. Metadata lines precede the header as
/// `# key: value`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: vec![("version".into(), format!("coolplant {VERSION}"))],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Self {
        let mut t = Table::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(m) = line.strip_prefix("# ") {
                let (k, v) = m.split_once(": ").unwrap_or((m, ""));
                t.meta.push((k.to_string(), v.to_string()));
            } else {
                t.columns = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        t.rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        t
    }

    pub fn write(&self, path: &Path) -> Result<(), BenchError> {
        std::fs::write(path, self.render()).map_err(io_error(path))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// SHA-256 over the given documents, hex encoded.
pub fn hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_roundtrip() {
        let mut t = Table::new(&["a", "b"]).meta("seed", 3);
        t.push(vec![num(0.1), "x".into()]);
        let back = Table::parse(&t.render());
        assert_eq!(back, t);
        assert_eq!(back.get_meta("seed"), Some("3"));
        assert_eq!(back.column("a").unwrap()[0].parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn hash_separates_parts() {
        assert_ne!(hash(&["ab", "c"]), hash(&["a", "bc"]));
        assert_eq!(hash(&["x"]).len(), 64);
    }
}
