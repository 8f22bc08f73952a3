//! CSV and manifest emission.
//!
//! Every real number prints as `{:.12e}`, so identical run configurations
//! yield byte-identical CSV files. Wall time appears only in the manifest,
//! which keeps the data artifacts deterministic.

use std::fmt::Display;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::Failure;

/// Canonical real formatting for all CSV artifacts.
pub fn real(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Run(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), Failure> {
    let mut text = String::with_capacity(header.len() + 1 + rows.len() * 72);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_text(path, &text)
}

/// Ordered `key = value` echo of the effective run configuration, written as
/// `manifest.txt` once the run finishes.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest { lines: Vec::new() };
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn write(mut self, dir: &Path, wall: Duration) -> Result<(), Failure> {
        self.set("cli_version", env!("CARGO_PKG_VERSION"));
        self.set("core_version", modular_burgers::VERSION);
        self.set("wall_time_s", format!("{:.3}", wall.as_secs_f64()));
        let mut text = String::new();
        for (key, value) in &self.lines {
            let _ = writeln!(text, "{key} = {value}");
        }
        write_text(&dir.join("manifest.txt"), &text)
    }
}
