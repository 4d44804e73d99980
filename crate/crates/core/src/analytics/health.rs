//! The daily watchdog: liveness checks plus an audit of the day's file.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::speakers::ReachabilityProbe;
use crate::storage::{EventType, NotifierTarget, TrainingConfig, TranscriptStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthReport {
    pub date: NaiveDate,
    pub storage_writable: bool,
    pub speaker_reachable: bool,
    pub config_valid: bool,
    pub greetings_delivered: u64,
    pub user_responses: u64,
    pub files_ok: bool,
}

impl HealthReport {
    pub fn all_ok(&self) -> bool {
        self.storage_writable && self.speaker_reachable && self.config_valid && self.files_ok
    }
}

const PROBE_FILE: &str = ".health-probe";

fn storage_writable(dir: &Path) -> bool {
    let path = dir.join(PROBE_FILE);
    let result = OpenOptions::new().create(true).write(true).truncate(true).open(&path).and_then(|mut f| {
        f.write_all(b"ok\n")?;
        f.sync_data()
    });
    let _ = fs::remove_file(&path);
    if let Err(e) = &result {
        log::warn!("storage probe at {} failed: {e}", dir.display());
    }
    result.is_ok()
}

/// Runs every check for `date`. Failures become report fields; nothing is
/// returned as an error.
pub fn daily_health_report(
    store: &TranscriptStore,
    speaker: &dyn ReachabilityProbe,
    config: &TrainingConfig,
    date: NaiveDate,
) -> HealthReport {
    let config_valid = match config.validate() {
        Ok(()) => true,
        Err(e) => {
            log::warn!("configuration check failed: {e}");
            false
        }
    };
    let path = store.day_path(date);
    let non_empty = fs::metadata(&path).is_ok_and(|m| m.is_file() && m.len() > 0);
    let (records, parsed_clean) = match store.read_day(date) {
        Ok(r) => (r.records, r.corrupt_lines == 0),
        Err(e) => {
            log::warn!("cannot audit {}: {e}", path.display());
            (Vec::new(), false)
        }
    };
    let count = |t: EventType| records.iter().filter(|r| r.event_type == t).count() as u64;
    HealthReport {
        date,
        storage_writable: storage_writable(store.transcript_dir()),
        speaker_reachable: speaker.is_reachable(),
        config_valid,
        greetings_delivered: count(EventType::Wake),
        user_responses: count(EventType::UserUtterance),
        files_ok: non_empty && parsed_clean,
    }
}

pub fn report_path(root: &Path, date: NaiveDate) -> PathBuf {
    root.join("reports").join(format!("{date}.json"))
}

/// Writes `reports/YYYY-MM-DD.json` under `root` and, for the stdout
/// notifier, also prints the document.
pub fn publish_report(report: &HealthReport, root: &Path, target: &NotifierTarget) -> io::Result<PathBuf> {
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    let path = report_path(root, report.date);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, format!("{json}\n"))?;
    if *target == NotifierTarget::Stdout {
        println!("{json}");
    }
    Ok(path)
}
