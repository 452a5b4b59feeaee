use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("grading log {path} is not writable: {source}")]
pub struct LogError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Received,
    Quarantined,
    Extracted,
    Compiled,
    CompileError,
    TestStderr,
    Graded,
    Errored,
    Superseded,
    ScanError,
    WatchStarted,
    WatchStopped,
}

/// One line of the grading log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    #[serde(with = "seconds")]
    pub timestamp: DateTime<Utc>,
    /// Identity stem, or the raw file name when it did not parse.
    pub subject: String,
    pub kind: EventKind,
    pub detail: Value,
}

impl LogEvent {
    pub fn new(subject: impl Into<String>, kind: EventKind, detail: Value) -> Self {
        LogEvent {
            timestamp: crate::ingest::now_utc(),
            subject: subject.into(),
            kind,
            detail,
        }
    }
}

mod seconds {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// Append-only newline-delimited JSON log.
///
/// All writers go through one handle; each event is written with a single
/// `write_all` under the lock, so concurrent pipelines interleave whole lines.
#[derive(Debug)]
pub struct GradingLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl GradingLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, LogError> {
        let path = path.into();
        let file = (|| {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            OpenOptions::new().create(true).append(true).open(&path)
        })()
        .map_err(|source| LogError {
            path: path.clone(),
            source,
        })?;
        Ok(GradingLog {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append_log(&self, event: &LogEvent) -> Result<(), LogError> {
        let mut line = serde_json::to_string(event).expect("log event serializes");
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(line.as_bytes())
            .and_then(|()| file.flush())
            .map_err(|source| LogError {
                path: self.path.clone(),
                source,
            })
    }

    /// Shorthand for [`append_log`](Self::append_log) with a fresh timestamp.
    pub fn record(&self, subject: &str, kind: EventKind, detail: Value) -> Result<(), LogError> {
        self.append_log(&LogEvent::new(subject, kind, detail))
    }
}

/// Reads every event back; used by tests and tooling.
pub fn read_events(path: &Path) -> io::Result<Vec<LogEvent>> {
    std::fs::read_to_string(path)?
        .lines()
        .map(|line| serde_json::from_str(line).map_err(io::Error::other))
        .collect()
}
