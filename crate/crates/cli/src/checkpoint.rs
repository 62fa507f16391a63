//! Append-only JSON-lines checkpoint and the sorted report derived from it.
//!
//! Each completed prime is one line. A run killed mid-write can leave a
//! truncated final line; [`load`] drops it and rewrites the file so that
//! later appends start on a clean line.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use flt_core::{ConjectureReport, Status};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStatus {
    Verified,
    Counterexample,
}

/// One checkpoint line. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointLine {
    pub schema: u32,
    pub p: u64,
    pub conjecture: u8,
    pub status: LineStatus,
    pub suspicious: Vec<u64>,
    pub lift: Option<u64>,
    pub ms: u64,
}

/// A report line: a checkpoint line without the timing, so that reports
/// are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportLine {
    pub schema: u32,
    pub p: u64,
    pub conjecture: u8,
    pub status: LineStatus,
    pub suspicious: Vec<u64>,
    pub lift: Option<u64>,
}

impl From<&ConjectureReport> for CheckpointLine {
    fn from(r: &ConjectureReport) -> Self {
        let (status, lift) = match r.status {
            Status::Verified => (LineStatus::Verified, None),
            Status::Counterexample { lift } => (LineStatus::Counterexample, Some(lift)),
        };
        CheckpointLine {
            schema: SCHEMA,
            p: r.p,
            conjecture: r.conjecture.number(),
            status,
            suspicious: r.suspicious.iter().map(|s| s.x.get()).collect(),
            lift,
            ms: r.duration.as_millis() as u64,
        }
    }
}

impl From<&CheckpointLine> for ReportLine {
    fn from(c: &CheckpointLine) -> Self {
        ReportLine {
            schema: c.schema,
            p: c.p,
            conjecture: c.conjecture,
            status: c.status,
            suspicious: c.suspicious.clone(),
            lift: c.lift,
        }
    }
}

impl CheckpointLine {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint line serializes")
    }
}

/// Completed primes keyed by `p`.
pub type Completed = BTreeMap<u64, CheckpointLine>;

/// Reads a checkpoint for `conjecture`. A missing file is empty. An
/// unparseable final line without a trailing newline is treated as an
/// interrupted write and removed from the file.
pub fn load(path: &Path, conjecture: u8) -> Result<Completed> {
    let mut done = Completed::new();
    if !path.exists() {
        return Ok(done);
    }
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut truncated = false;
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let parsed: CheckpointLine = match serde_json::from_str(line) {
            Ok(c) => c,
            Err(_) if i + 1 == lines.len() && !raw.ends_with('\n') => {
                truncated = true;
                break;
            }
            Err(e) => bail!(
                "{}:{}: malformed checkpoint line: {e}",
                path.display(),
                i + 1
            ),
        };
        if parsed.schema != SCHEMA {
            bail!(
                "{}:{}: unsupported schema {}",
                path.display(),
                i + 1,
                parsed.schema
            );
        }
        if parsed.conjecture != conjecture {
            bail!(
                "{}: checkpoint holds conjecture {}, run requested {}",
                path.display(),
                parsed.conjecture,
                conjecture
            );
        }
        if let Some(prev) = done.get(&parsed.p) {
            if ReportLine::from(prev) != ReportLine::from(&parsed) {
                bail!(
                    "{}: conflicting entries for p = {}",
                    path.display(),
                    parsed.p
                );
            }
            continue;
        }
        done.insert(parsed.p, parsed);
    }
    if truncated {
        write_sorted(path, done.values().map(CheckpointLine::to_json))?;
    }
    Ok(done)
}

/// Appends lines, flushing after each one.
pub struct Appender {
    file: File,
}

impl Appender {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening checkpoint {}", path.display()))?;
        Ok(Appender { file })
    }

    pub fn append(&mut self, line: &CheckpointLine) -> Result<()> {
        let mut buf = line.to_json();
        buf.push('\n');
        self.file.write_all(buf.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes `lines` to a sibling temp file, syncs it and renames it over
/// `path`.
pub fn write_sorted(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = temp_path(path);
    {
        let mut f = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        for line in lines {
            f.write_all(line.as_bytes())?;
            f.write_all(b"\n")?;
        }
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// Rewrites the checkpoint in increasing `p` and writes the timing-free
/// report next to it.
pub fn finalize(checkpoint: &Path, report: &Path, done: &Completed) -> Result<()> {
    write_sorted(checkpoint, done.values().map(CheckpointLine::to_json))?;
    write_sorted(
        report,
        done.values()
            .map(|c| serde_json::to_string(&ReportLine::from(c)).expect("serializes")),
    )
}

/// Reads a report back, one line per prime.
pub fn read_report(path: &Path) -> Result<Vec<ReportLine>> {
    let f = File::open(path).with_context(|| format!("opening report {}", path.display()))?;
    BufReader::new(f)
        .lines()
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}
