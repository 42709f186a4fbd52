//! Run journals.
//!
//! A journal is line-delimited JSON: a header line, one line per actual
//! evaluator run, and a final end line when the run completed. Lines are
//! flushed as they are written, so after a crash the file holds every
//! finished evaluation plus at most one torn line.
//!
//! Resume works by replay: the reader rebuilds the evaluation cache, the
//! sampler reruns from the same seed, and every already-journaled
//! configuration comes back as a cache hit until the run reaches new
//! territory. The header pins the space, rules, settings, and seed; resume
//! refuses a journal whose fingerprints do not match the current invocation,
//! since the replayed trajectory would silently diverge.

use crate::executor::EvaluationRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("journal {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("journal {path} was written by a different run: {field} mismatch")]
    HeaderMismatch { path: PathBuf, field: &'static str },
    #[error("journal {path} already exists; resume it or choose another path")]
    AlreadyExists { path: PathBuf },
}

/// First line of every journal. The hashes pin everything that shapes the
/// trajectory; `seed` is also in `settings_hash` but kept readable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalHeader {
    pub version: u32,
    pub space_name: String,
    pub sampler: String,
    pub seed: u64,
    pub space_hash: String,
    pub rules_hash: String,
    pub settings_hash: String,
    /// Digest of the evaluator's fingerprint: measurements from a different
    /// source must not be replayed as cache hits.
    pub source_hash: String,
}

pub const JOURNAL_VERSION: u32 = 1;

/// Final line of a completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub best_performance: Option<f64>,
    pub evaluations: u64,
    pub termination: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum JournalLine {
    Header(JournalHeader),
    Eval(EvaluationRecord),
    End(RunSummary),
}

/// SHA-256 over the canonical JSON form; the fingerprint used in headers.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("fingerprinted types always serialize");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[derive(Debug)]
pub struct JournalWriter {
    path: PathBuf,
    file: BufWriter<File>,
}

impl JournalWriter {
    /// Starts a fresh journal. Refuses to clobber an existing file: an
    /// existing journal is either resumable or somebody else's data.
    pub fn create(path: &Path, header: &JournalHeader) -> Result<JournalWriter, PersistenceError> {
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    PersistenceError::AlreadyExists { path: path.to_path_buf() }
                } else {
                    PersistenceError::Io(e)
                }
            })?;
        let mut writer = JournalWriter { path: path.to_path_buf(), file: BufWriter::new(file) };
        writer.append(&JournalLine::Header(header.clone()))?;
        Ok(writer)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn append(&mut self, line: &JournalLine) -> Result<(), PersistenceError> {
        let mut buf = serde_json::to_vec(line).expect("journal lines always serialize");
        buf.push(b'\n');
        self.file.write_all(&buf)?;
        self.file.flush()?;
        Ok(())
    }

    /// Durably appends one evaluation; returns only after the flush, so the
    /// sampler never proceeds past an unrecorded measurement.
    pub fn append_eval(&mut self, record: &EvaluationRecord) -> Result<(), PersistenceError> {
        self.append(&JournalLine::Eval(record.clone()))
    }

    pub fn append_end(&mut self, summary: &RunSummary) -> Result<(), PersistenceError> {
        self.append(&JournalLine::End(summary.clone()))
    }
}

/// Parsed journal contents.
#[derive(Debug)]
pub struct JournalContents {
    pub header: JournalHeader,
    pub evals: Vec<EvaluationRecord>,
    pub end: Option<RunSummary>,
    /// Bytes of torn trailing line discarded while reading.
    pub truncated_bytes: u64,
}

impl JournalContents {
    pub fn completed(&self) -> bool {
        self.end.is_some()
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> PersistenceError {
    PersistenceError::Corrupt { path: path.to_path_buf(), reason: reason.into() }
}

/// Reads a journal, tolerating a torn final line (reported, not an error).
/// A malformed line anywhere else is corruption and refuses to parse.
pub fn read_journal(path: &Path) -> Result<JournalContents, PersistenceError> {
    let bytes = std::fs::read(path)?;
    let (lines, torn) = split_complete_lines(&bytes);

    let mut parsed: Vec<JournalLine> = Vec::with_capacity(lines.len());
    for (i, raw) in lines.iter().enumerate() {
        match serde_json::from_slice::<JournalLine>(raw) {
            Ok(line) => parsed.push(line),
            Err(_) if i + 1 == lines.len() => {
                // A complete but unparseable final line is treated like a
                // torn one: the crash can land between write and flush.
                return assemble(path, parsed, torn + raw.len() as u64 + 1);
            }
            Err(e) => return Err(corrupt(path, format!("line {}: {e}", i + 1))),
        }
    }
    assemble(path, parsed, torn)
}

fn assemble(
    path: &Path,
    lines: Vec<JournalLine>,
    truncated_bytes: u64,
) -> Result<JournalContents, PersistenceError> {
    let mut iter = lines.into_iter();
    let header = match iter.next() {
        Some(JournalLine::Header(h)) => h,
        Some(_) => return Err(corrupt(path, "first line is not a header")),
        None => return Err(corrupt(path, "empty journal")),
    };
    if header.version != JOURNAL_VERSION {
        return Err(corrupt(path, format!("unsupported version {}", header.version)));
    }
    let mut evals = Vec::new();
    let mut end = None;
    for line in iter {
        match line {
            JournalLine::Header(_) => return Err(corrupt(path, "second header line")),
            JournalLine::Eval(rec) => {
                if end.is_some() {
                    return Err(corrupt(path, "evaluation after end line"));
                }
                evals.push(rec);
            }
            JournalLine::End(s) => {
                if end.replace(s).is_some() {
                    return Err(corrupt(path, "two end lines"));
                }
            }
        }
    }
    Ok(JournalContents { header, evals, end, truncated_bytes })
}

/// Splits into newline-terminated lines; trailing bytes without a newline
/// are torn. Returns (lines, torn byte count).
fn split_complete_lines(bytes: &[u8]) -> (Vec<&[u8]>, u64) {
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            lines.push(&bytes[start..i]);
            start = i + 1;
        }
    }
    (lines, (bytes.len() - start) as u64)
}

/// Opens a journal for resumption: verifies the header against
/// `expected`, physically truncates any torn tail, and returns the contents
/// together with an append-mode writer positioned after the last good line.
pub fn open_resume(
    path: &Path,
    expected: &JournalHeader,
) -> Result<(JournalContents, JournalWriter), PersistenceError> {
    let contents = read_journal(path)?;
    let h = &contents.header;
    for (field, ours, theirs) in [
        ("space_hash", &expected.space_hash, &h.space_hash),
        ("rules_hash", &expected.rules_hash, &h.rules_hash),
        ("settings_hash", &expected.settings_hash, &h.settings_hash),
        ("source_hash", &expected.source_hash, &h.source_hash),
        ("space_name", &expected.space_name, &h.space_name),
        ("sampler", &expected.sampler, &h.sampler),
    ] {
        if ours != theirs {
            return Err(PersistenceError::HeaderMismatch { path: path.to_path_buf(), field });
        }
    }
    if expected.seed != h.seed {
        return Err(PersistenceError::HeaderMismatch { path: path.to_path_buf(), field: "seed" });
    }

    if contents.truncated_bytes > 0 {
        let len = std::fs::metadata(path)?.len();
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(len - contents.truncated_bytes)?;
        eprintln!(
            "warning: {} carried {} bytes of torn trailing data; truncated",
            path.display(),
            contents.truncated_bytes
        );
    }

    let file = OpenOptions::new().append(true).open(path)?;
    let writer = JournalWriter { path: path.to_path_buf(), file: BufWriter::new(file) };
    Ok((contents, writer))
}
