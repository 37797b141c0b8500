//! Deterministic CSV emission and the run manifest.
//!
//! Every CSV starts with a schema comment line and a header row; floating
//! point values carry 12 significant digits so reruns are byte-identical.
//! The manifest lists every emitted artifact with a content hash and is
//! written last.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// 12-significant-digit decimal rendering, stable across runs.
pub fn fmt_value(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

/// CSV cell content.
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_value(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Collects artifacts for one command run and writes the manifest last.
pub struct RunWriter {
    dir: PathBuf,
    command: String,
    parameters: BTreeMap<String, String>,
    input_config_path: Option<String>,
    hashes: BTreeMap<String, String>,
}

impl RunWriter {
    pub fn new(
        dir: &Path,
        command: &str,
        parameters: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            parameters,
            input_config_path: None,
            hashes: BTreeMap::new(),
        })
    }

    pub fn set_input_config(&mut self, path: &str) {
        self.input_config_path = Some(path.to_string());
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        schema: &str,
        header: &[&str],
        rows: impl Iterator<Item = Vec<Cell>>,
    ) -> Result<(), CliError> {
        let mut out = String::new();
        out.push_str(&format!("# schema: sicasy/{schema}/v1\n"));
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        self.write_bytes(name, out.as_bytes())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.hashes
            .insert(name.to_string(), format!("fnv1a64:{:016x}", fnv1a64(bytes)));
        Ok(())
    }

    /// Write `run_manifest.json`; call after all artifacts are emitted.
    pub fn finish(self) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "command": self.command,
            "parameters": self.parameters,
            "input_config_path": self.input_config_path,
            "output_dir": self.dir.to_string_lossy(),
            "artifacts": self.hashes,
        });
        fs::write(
            self.dir.join("run_manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("manifest serialization") + "\n",
        )?;
        Ok(())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
