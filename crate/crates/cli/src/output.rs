//! Manifest assembly and the single place where files are written.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tdcis::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Everything needed to reproduce a run. No timestamps or absolute paths,
/// so identical inputs give an identical manifest.
#[derive(Debug, Default)]
pub struct Manifest {
    pub command: String,
    pub scenario: Option<String>,
    pub inputs: Vec<(PathBuf, Vec<u8>)>,
    pub config_echo: Option<String>,
    pub conversions: Vec<String>,
    pub diagnostics: Vec<String>,
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn render(&self, files: &[(String, String)]) -> String {
        let mut s = String::from("# tdcis run manifest\n");
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command = {}", self.command);
        if let Some(sc) = &self.scenario {
            let _ = writeln!(s, "scenario = {sc}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        s.push_str("\n[inputs]\n");
        for (p, bytes) in &self.inputs {
            let _ = writeln!(s, "{} sha256 {}", file_name(p), sha256_hex(bytes));
        }
        if let Some(echo) = &self.config_echo {
            s.push_str("\n[config]\n");
            s.push_str(echo);
        }
        if !self.conversions.is_empty() {
            s.push_str("\n[conversions]\n");
            for c in &self.conversions {
                let _ = writeln!(s, "{c}");
            }
        }
        s.push_str("\n[diagnostics]\n");
        for d in &self.diagnostics {
            let _ = writeln!(s, "{d}");
        }
        s.push_str("\n[outputs]\n");
        for (name, body) in files {
            let _ = writeln!(s, "{name} sha256 {}", sha256_hex(body.as_bytes()));
        }
        s
    }
}

/// Creates `dir` and writes every file followed by `manifest.txt`.
pub fn write_all(dir: &Path, files: &[(String, String)], manifest: &Manifest) -> Result<()> {
    let io = |e: std::io::Error, p: &Path| Error::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(e, &p))?;
    }
    let p = dir.join("manifest.txt");
    std::fs::write(&p, manifest.render(files)).map_err(|e| io(e, &p))
}
