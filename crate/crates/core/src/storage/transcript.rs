//! `<root>/transcripts/YYYY-MM-DD.jsonl`, one event per line.
//!
//! Each append is a single `write` of a complete line on an `O_APPEND`
//! handle, flushed (and by default synced) before returning. A torn final
//! line left by a crash is terminated on reopen so later appends stay
//! parseable; readers skip it and count it as corrupt.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use thiserror::Error;

use super::event::EventRecord;

const ENOSPC: i32 = 28;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage full")]
    StorageFull,
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: PathBuf, source: io::Error },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("timestamp {ts_ms} precedes {last_ms} already written to {file}")]
    OutOfOrder { file: String, ts_ms: i64, last_ms: i64 },
    #[error("unknown session {0}")]
    UnknownSession(String),
}

fn io_err(path: &Path, source: io::Error) -> StorageError {
    if source.raw_os_error() == Some(ENOSPC) || source.kind() == io::ErrorKind::StorageFull {
        StorageError::StorageFull
    } else {
        StorageError::IoFailure { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// Hand the line to the OS before returning. Survives a process crash.
    Flush,
    /// Also `fdatasync`. Survives power loss.
    #[default]
    Sync,
}

/// Day file name for a timestamp, UTC.
pub fn day_file_name(ts_ms: i64) -> String {
    format!("{}.jsonl", day_of(ts_ms))
}

fn day_of(ts_ms: i64) -> NaiveDate {
    DateTime::from_timestamp_millis(ts_ms).map(|d| d.date_naive()).unwrap_or_default()
}

struct ActiveFile {
    name: String,
    file: File,
    last_ts: Option<i64>,
}

/// Single-writer handle over a transcript directory.
pub struct TranscriptStore {
    root: PathBuf,
    dir: PathBuf,
    durability: Durability,
    active: Option<ActiveFile>,
}

impl std::fmt::Debug for TranscriptStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TranscriptStore")
            .field("dir", &self.dir)
            .field("durability", &self.durability)
            .finish()
    }
}

impl TranscriptStore {
    /// Opens (creating if needed) `<root>/transcripts`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        let dir = root.join("transcripts");
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { root, dir, durability: Durability::default(), active: None })
    }

    pub fn with_durability(mut self, durability: Durability) -> Self {
        self.durability = durability;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn transcript_dir(&self) -> &Path {
        &self.dir
    }

    pub fn day_path(&self, date: NaiveDate) -> PathBuf {
        self.dir.join(format!("{date}.jsonl"))
    }

    /// Appends one record to its day file.
    pub fn append_event(&mut self, record: &EventRecord) -> Result<(), StorageError> {
        record.validate().map_err(StorageError::InvalidRecord)?;
        let name = day_file_name(record.ts_ms);
        if self.active.as_ref().map(|a| a.name.as_str()) != Some(name.as_str()) {
            self.active = Some(self.open_day(&name)?);
        }
        let durability = self.durability;
        let path = self.dir.join(&name);
        let active = self.active.as_mut().expect("active file set above");
        if let Some(last) = active.last_ts {
            if record.ts_ms < last {
                return Err(StorageError::OutOfOrder { file: name, ts_ms: record.ts_ms, last_ms: last });
            }
        }
        let mut line =
            serde_json::to_string(record).map_err(|e| StorageError::InvalidRecord(e.to_string()))?;
        line.push('\n');
        active
            .file
            .write_all(line.as_bytes())
            .and_then(|_| active.file.flush())
            .map_err(|e| io_err(&path, e))?;
        if durability == Durability::Sync {
            active.file.sync_data().map_err(|e| io_err(&path, e))?;
        }
        active.last_ts = Some(record.ts_ms);
        Ok(())
    }

    fn open_day(&self, name: &str) -> Result<ActiveFile, StorageError> {
        let path = self.dir.join(name);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let len = file.metadata().map_err(|e| io_err(&path, e))?.len();
        let mut last_ts = None;
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::Start(len - 1))
                .and_then(|_| file.read_exact(&mut last))
                .map_err(|e| io_err(&path, e))?;
            if last[0] != b'\n' {
                log::warn!("{}: terminating torn final line", path.display());
                file.write_all(b"\n").map_err(|e| io_err(&path, e))?;
            }
            last_ts = read_file(&path).map_err(|e| io_err(&path, e))?.0.iter().map(|r| r.ts_ms).max();
        }
        Ok(ActiveFile { name: name.to_owned(), file, last_ts })
    }

    /// Every record of `session_id`, across day files, in timestamp order.
    pub fn read_session(&self, session_id: &str) -> Result<Vec<EventRecord>, StorageError> {
        let report = read_transcript_dir(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let records: Vec<EventRecord> =
            report.records.into_iter().filter(|r| r.session_id == session_id).collect();
        if records.is_empty() {
            return Err(StorageError::UnknownSession(session_id.to_owned()));
        }
        Ok(records)
    }

    /// Every record in the store, in timestamp order.
    pub fn read_all(&self) -> Result<ReadReport, StorageError> {
        read_transcript_dir(&self.dir).map_err(|e| io_err(&self.dir, e))
    }

    /// Records of one day file. A missing file reads as empty.
    pub fn read_day(&self, date: NaiveDate) -> Result<ReadReport, StorageError> {
        let path = self.day_path(date);
        if !path.exists() {
            return Ok(ReadReport::default());
        }
        let (records, corrupt_lines) = read_file(&path).map_err(|e| io_err(&path, e))?;
        Ok(ReadReport { records, corrupt_lines, files: 1 })
    }
}

/// Parsed content of one or more day files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadReport {
    pub records: Vec<EventRecord>,
    /// Lines that failed to parse and were skipped.
    pub corrupt_lines: usize,
    pub files: usize,
}

fn read_file(path: &Path) -> io::Result<(Vec<EventRecord>, usize)> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut corrupt = 0;
    for (i, line) in reader.split(b'\n').enumerate() {
        let line = line?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match serde_json::from_slice::<EventRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("{}:{}: skipping corrupt line: {e}", path.display(), i + 1);
                corrupt += 1;
            }
        }
    }
    Ok((records, corrupt))
}

/// Reads every `*.jsonl` file in `dir` (date order), skipping corrupt lines.
/// Records come back stably sorted by `ts_ms`.
pub fn read_transcript_dir(dir: &Path) -> io::Result<ReadReport> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("jsonl"))
        .collect();
    paths.sort();
    let mut report = ReadReport::default();
    for p in &paths {
        let (records, corrupt) = read_file(p)?;
        report.records.extend(records);
        report.corrupt_lines += corrupt;
        report.files += 1;
    }
    report.records.sort_by_key(|r| r.ts_ms);
    Ok(report)
}
