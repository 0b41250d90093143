//! Summary over a results directory, after re-checking every hash.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{verify_dir, ResultManifest, MANIFEST_NAME};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub command: String,
    pub claim: String,
    pub value: f64,
    pub condition: String,
    pub pass: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub manifests: Vec<ResultManifest>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.manifests.iter().all(|m| !m.partial)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.manifests {
            let flag = if m.partial { " (partial)" } else { "" };
            writeln!(f, "## {}{flag}  [{}]", m.command, &m.content_hash[..12])?;
            for r in self.rows.iter().filter(|r| r.command == m.command) {
                writeln!(f, "{}  {}  value={:.6e}  {}", if r.pass { "PASS" } else { "FAIL" }, r.claim, r.value, r.condition)?;
            }
        }
        Ok(())
    }
}

/// Verifies the manifest in `dir` and in each immediate subdirectory.
///
/// Any listed artifact that is missing or altered, any unreadable
/// manifest, a subdirectory with files but no manifest, or a directory
/// with no manifest at all is an integrity error.
pub fn report(dir: &Path) -> Result<Report> {
    if !dir.is_dir() {
        return Err(Error::Integrity(format!("{} is not a directory", dir.display())));
    }
    let mut dirs = Vec::new();
    if dir.join(MANIFEST_NAME).exists() {
        dirs.push(dir.to_path_buf());
    }
    let mut subdirs: Vec<_> = std::fs::read_dir(dir)?.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for sub in subdirs {
        if sub.join(MANIFEST_NAME).exists() {
            dirs.push(sub);
        } else if std::fs::read_dir(&sub)?.next().is_some() {
            return Err(Error::Integrity(format!("{} holds results without a manifest", sub.display())));
        }
    }
    if dirs.is_empty() {
        return Err(Error::Integrity(format!("no manifest under {}", dir.display())));
    }
    let mut manifests = Vec::new();
    let mut rows = Vec::new();
    for d in dirs {
        let m = verify_dir(&d)?;
        rows.extend(m.checks.iter().map(|c| ReportRow {
            command: m.command.clone(),
            claim: c.claim.clone(),
            value: c.value,
            condition: c.condition.clone(),
            pass: c.pass,
            source: c.source.clone(),
        }));
        manifests.push(m);
    }
    Ok(Report { manifests, rows })
}
