//! Result manifests: what a command wrote, with content hashes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// A reported number checked against its claimed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub claim: String,
    pub value: f64,
    pub target: Option<f64>,
    /// Human-readable acceptance condition, e.g. `|value - target| < 0.005`.
    pub condition: String,
    pub pass: bool,
    /// Where the value comes from: closed form, series, simulation, solver...
    pub source: String,
}

impl Check {
    pub fn within(claim: &str, value: f64, target: f64, tol: f64, source: &str) -> Self {
        Check {
            claim: claim.into(),
            value,
            target: Some(target),
            condition: format!("|value - target| < {tol}"),
            pass: (value - target).abs() < tol,
            source: source.into(),
        }
    }

    pub fn below(claim: &str, value: f64, bound: f64, source: &str) -> Self {
        Check { claim: claim.into(), value, target: None, condition: format!("value < {bound}"), pass: value < bound, source: source.into() }
    }

    pub fn holds(claim: &str, value: f64, pass: bool, condition: &str, source: &str) -> Self {
        Check { claim: claim.into(), value, target: None, condition: condition.into(), pass, source: source.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub schema_version: u32,
    pub command: String,
    /// The resolved configuration, as JSON.
    pub config: serde_json::Value,
    pub artifacts: Vec<ArtifactEntry>,
    /// Hash over artifact names and hashes; timestamps are not part of it.
    pub content_hash: String,
    pub checks: Vec<Check>,
    pub censored: u64,
    /// True if the command stopped early and only some artifacts exist.
    pub partial: bool,
    pub error: Option<String>,
    pub wall_clock_secs: f64,
    pub created_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn content_hash(artifacts: &[ArtifactEntry]) -> String {
    let mut sorted: Vec<&ArtifactEntry> = artifacts.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut h = Sha256::new();
    for a in sorted {
        h.update(a.name.as_bytes());
        h.update([0]);
        h.update(a.sha256.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts in one directory and writes the manifest last.
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<ArtifactEntry>,
    pub checks: Vec<Check>,
    pub censored: u64,
    started: Instant,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new(), checks: Vec::new(), censored: 0, started: Instant::now() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name == MANIFEST_NAME || name.contains(['/', '\\']) {
            return Err(Error::Contract(format!("bad artifact name {name}")));
        }
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.retain(|a| a.name != name);
        self.artifacts.push(ArtifactEntry { name: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Writes whatever `fill` emits, typically CSV.
    pub fn text<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(&mut self, name: &str, fill: F) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C, error: Option<&Error>) -> Result<ResultManifest> {
        let manifest = ResultManifest {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config: serde_json::to_value(config)?,
            content_hash: content_hash(&self.artifacts),
            artifacts: self.artifacts,
            checks: self.checks,
            censored: self.censored,
            partial: error.is_some(),
            error: error.map(|e| e.to_string()),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let mut f = fs::File::create(self.dir.join(MANIFEST_NAME))?;
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        Ok(manifest)
    }
}

/// Reads the manifest in `dir` and re-hashes every artifact it lists.
pub fn verify_dir(dir: &Path) -> Result<ResultManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    let m: ResultManifest =
        serde_json::from_str(&text).map_err(|e| Error::Integrity(format!("{}: unreadable manifest: {e}", path.display())))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(Error::Integrity(format!("{}: schema version {} is not {SCHEMA_VERSION}", path.display(), m.schema_version)));
    }
    for a in &m.artifacts {
        let p = dir.join(&a.name);
        let bytes = fs::read(&p).map_err(|e| Error::Integrity(format!("{}: {e}", p.display())))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(Error::Integrity(format!("{}: content does not match its recorded hash", p.display())));
        }
    }
    if content_hash(&m.artifacts) != m.content_hash {
        return Err(Error::Integrity(format!("{}: content hash mismatch", path.display())));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(dir.path()).unwrap();
        w.write("a.csv", b"x\n1\n").unwrap();
        w.json("b.json", &[1, 2]).unwrap();
        let m = w.finish("test", &"cfg", None).unwrap();
        assert_eq!(verify_dir(dir.path()).unwrap().content_hash, m.content_hash);
        fs::write(dir.path().join("a.csv"), b"x\n2\n").unwrap();
        assert!(matches!(verify_dir(dir.path()), Err(Error::Integrity(_))));
        fs::remove_file(dir.path().join("a.csv")).unwrap();
        assert!(matches!(verify_dir(dir.path()), Err(Error::Integrity(_))));
    }
}
