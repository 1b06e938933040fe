use std::path::Path;

use serde_json::Value;

use crate::Failure;

/// A command result that can be written as CSV, JSON or both.
pub struct Report {
    pub csv: Option<String>,
    pub json: Value,
    /// Format used on stdout when no `--out` is given.
    pub prefer_csv: bool,
}

impl Report {
    pub fn table(header: &str, rows: Vec<String>, json: Value) -> Self {
        let mut csv = String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + header.len() + 1);
        csv.push_str(header);
        csv.push('\n');
        for r in rows {
            csv.push_str(&r);
            csv.push('\n');
        }
        Report {
            csv: Some(csv),
            json,
            prefer_csv: true,
        }
    }

    pub fn document(json: Value, csv: Option<String>) -> Self {
        Report {
            csv,
            json,
            prefer_csv: false,
        }
    }

    fn json_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.json).expect("values serialize");
        s.push('\n');
        s
    }

    /// Text for `path` (format from its extension) or for stdout.
    pub fn render(&self, path: Option<&Path>) -> Result<String, Failure> {
        let ext = path.and_then(|p| p.extension()).map(|e| e.to_string_lossy().to_ascii_lowercase());
        match ext.as_deref() {
            None if self.prefer_csv => Ok(self.csv.clone().expect("tables carry CSV")),
            None | Some("json") => Ok(self.json_text()),
            Some("csv") => self
                .csv
                .clone()
                .ok_or_else(|| Failure::usage("this command has no CSV form; use a .json output path")),
            Some(other) => Err(Failure::usage(format!("unknown output extension .{other}; use .csv or .json"))),
        }
    }
}

/// Quotes a CSV field when it contains a separator or a quote.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
