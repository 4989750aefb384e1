//! CSV documents with a commented metadata block, and run summaries.

use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::io::write_atomic;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seventeen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A file produced by a run, before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub name: String,
    pub contents: String,
}

/// CSV text: `#` lines echoing the library version, the full configuration
/// and any fitted quantities, then the header and the rows.
pub fn csv_document(
    name: &str,
    cfg: &ExperimentConfig,
    fitted: &[(String, String)],
    header: &str,
    rows: &[String],
) -> Document {
    let mut out = String::new();
    out.push_str(&format!("# ostrovsky-core {VERSION}\n"));
    out.push_str(&format!("# experiment = {}\n", cfg.kind.name()));
    out.push_str("# [config]\n");
    for line in cfg.to_toml().lines() {
        out.push_str(&format!("#   {line}\n"));
    }
    for (k, v) in fitted {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    Document {
        name: name.to_string(),
        contents: out,
    }
}

/// Result of a run: its files, summary entries and exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub documents: Vec<Document>,
    pub summary: Vec<(String, String)>,
    /// 0 on success, 3 when some quadrature did not converge.
    pub exit_code: i32,
}

impl RunOutcome {
    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn document(&self, name: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.name == name)
    }

    pub fn summary_text(&self, cfg: &ExperimentConfig) -> String {
        let mut out = format!("ostrovsky-core {VERSION}\nexperiment: {}\n", cfg.kind.name());
        for (k, v) in &self.summary {
            out.push_str(&format!("{k}: {v}\n"));
        }
        out.push_str(&format!("exit_code: {}\n", self.exit_code));
        out
    }

    /// Writes every document and `summary.txt` into `dir`, each atomically.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::with_capacity(self.documents.len() + 1);
        for doc in &self.documents {
            let path = dir.join(&doc.name);
            write_atomic(&path, doc.contents.as_bytes())?;
            paths.push(path);
        }
        let path = dir.join("summary.txt");
        write_atomic(&path, self.summary_text(cfg).as_bytes())?;
        paths.push(path);
        Ok(paths)
    }
}
