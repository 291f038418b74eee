//! Output writers. Every file starts with `#` comment lines recording the tool
//! version and the configuration that produced it, and contains nothing that
//! depends on the wall clock or the thread count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub struct Metadata {
    lines: Vec<String>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Self {
            lines: vec![format!("chiral {} {command}", chiral_core::VERSION)],
        }
    }

    pub fn with(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.lines.push(format!("{key}: {value}"));
        self
    }

    pub fn with_json(self, key: &str, value: &impl Serialize) -> Self {
        let json = serde_json::to_string(value).expect("configuration serializes");
        self.with(key, json)
    }

    fn write_comments(&self, out: &mut Vec<u8>, prefix: &str) {
        for line in &self.lines {
            out.extend_from_slice(prefix.as_bytes());
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
    }
}

/// A CSV table rendered into memory.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_floats(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(fmt_f64).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Metadata) -> Vec<u8> {
        let mut out = Vec::new();
        meta.write_comments(&mut out, "# ");
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
        drop(w);
        out
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Pretty JSON with the metadata under a `"meta"` key.
pub fn render_json(meta: &Metadata, body: &impl Serialize) -> Vec<u8> {
    let mut value = serde_json::to_value(body).expect("serializable");
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("meta".into(), serde_json::Value::from(meta.lines.clone()));
    }
    let mut out = serde_json::to_vec_pretty(&value).expect("serializable");
    out.push(b'\n');
    out
}

/// Matplotlib script that plots `columns` of `csv_name` against its first column.
pub fn plot_script(csv_name: &str, columns: &[&str], ylabel: &str, png_name: &str) -> Vec<u8> {
    let cols = columns
        .iter()
        .map(|c| format!("{c:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r##"# Regenerate with the chiral CLI; plots {csv_name}.
import pathlib

import matplotlib.pyplot as plt
import pandas as pd

here = pathlib.Path(__file__).parent
data = pd.read_csv(here / {csv_name:?}, comment="#")
x = data.columns[0]
fig, ax = plt.subplots(figsize=(7, 4))
for col in [{cols}]:
    ax.plot(data[x], data[col], label=col, lw=1)
ax.set_xlabel(x)
ax.set_ylabel({ylabel:?})
ax.legend()
fig.tight_layout()
fig.savefig(here / {png_name:?}, dpi=150)
"##
    )
    .into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_comment_header() {
        let mut t = Table::new(["t", "Z"]);
        t.push_floats([0.0, 1.0]);
        t.push_floats([0.1, 0.5]);
        let text = String::from_utf8(t.render(&Metadata::new("test").with("seed", 3))).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# chiral "));
        assert_eq!(lines[1], "# seed: 3");
        assert_eq!(&lines[2..], ["t,Z", "0.0,1.0", "0.1,0.5"]);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
