//! CSV tables with a `#`-prefixed run manifest on top.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Everything needed to reproduce an output file.
pub struct RunManifest {
    pub command: String,
    /// Resolved model config, rendered back to text.
    pub config: Option<String>,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub started: Instant,
}

impl RunManifest {
    pub fn new(command: &str, output: Option<PathBuf>) -> Self {
        Self {
            command: command.into(),
            config: None,
            version: lsv_core::VERSION,
            seed: None,
            output,
            started: Instant::now(),
        }
    }

    fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# command: {}", self.command);
        let _ = writeln!(h, "# version: {}", self.version);
        match self.seed {
            Some(s) => {
                let _ = writeln!(h, "# seed: {s}");
            }
            None => h.push_str("# seed: none\n"),
        }
        let out = self
            .output
            .as_ref()
            .map_or("stdout".to_string(), |p| p.display().to_string());
        let _ = writeln!(h, "# output: {out}");
        let _ = writeln!(
            h,
            "# wall_time_s: {:?}",
            self.started.elapsed().as_secs_f64()
        );
        if let Some(cfg) = &self.config {
            h.push_str("# config:\n");
            for line in cfg.lines().filter(|l| !l.trim().is_empty()) {
                let _ = writeln!(h, "#   {line}");
            }
        }
        h
    }
}

/// A CSV cell. Floats print with Rust's shortest round-trip formatting.
pub enum Cell {
    F(f64),
    Text(String),
    /// Value not defined at this point.
    Invalid,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Invalid, Cell::F)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(v) => format!("{v:?}"),
                    Cell::Text(t) => t.clone(),
                    Cell::Invalid => "invalid".into(),
                })
                .collect();
            s += &cells.join(",");
            s.push('\n');
        }
        s
    }

    /// Write the manifest header followed by the table.
    pub fn emit(&self, manifest: &RunManifest, comments: &[String]) -> std::io::Result<()> {
        let mut text = manifest.header();
        for c in comments {
            text += &format!("# {c}\n");
        }
        text += &self.body();
        match &manifest.output {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}
