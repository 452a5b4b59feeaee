//! Submission collection: inbox polling, archive naming, guarded extraction
//! and quarantine.

mod extract;
mod identity;
mod scan;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::assess::initialize_report;
pub use extract::extract_archive;
pub use identity::{parse_submission_filename, MalformedName, SubmissionIdentity};
pub use scan::{list_inbox, FileKey, InboxScanner, StableArchive};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("inbox {path} is unreadable: {source}")]
    InboxUnreadable { path: PathBuf, source: io::Error },
    #[error("workspace {path}: {source}")]
    Workspace { path: PathBuf, source: io::Error },
    #[error("quarantine directory {path}: {source}")]
    Quarantine { path: PathBuf, source: io::Error },
}

/// Which extraction guard tripped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Limit {
    TotalBytes,
    EntryCount,
    PathDepth,
}

impl Limit {
    pub fn code(self) -> &'static str {
        match self {
            Limit::TotalBytes => "max-total-bytes",
            Limit::EntryCount => "max-entry-count",
            Limit::PathDepth => "max-path-depth",
        }
    }
}

/// Machine-readable cause for quarantining an archive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QuarantineReason {
    MalformedName(MalformedName),
    WrongAssignment { expected: u32, found: u32 },
    CorruptArchive,
    LimitExceeded(Limit),
    PathTraversal,
    NoSourceFiles,
}

impl QuarantineReason {
    /// Stable, non-empty reason code, e.g. `malformed-name:wrong-field-count`.
    pub fn code(&self) -> String {
        match self {
            QuarantineReason::MalformedName(m) => format!("malformed-name:{}", m.code()),
            QuarantineReason::WrongAssignment { .. } => "wrong-assignment".into(),
            QuarantineReason::CorruptArchive => "corrupt-archive".into(),
            QuarantineReason::LimitExceeded(limit) => format!("limit-exceeded:{}", limit.code()),
            QuarantineReason::PathTraversal => "path-traversal".into(),
            QuarantineReason::NoSourceFiles => "no-source-files".into(),
        }
    }
}

impl fmt::Display for QuarantineReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuarantineReason::MalformedName(m) => write!(f, "malformed file name: {m}"),
            QuarantineReason::WrongAssignment { expected, found } => {
                write!(f, "submitted for assignment {found}, grading assignment {expected}")
            }
            QuarantineReason::CorruptArchive => f.write_str("archive is not a readable ZIP file"),
            QuarantineReason::LimitExceeded(limit) => {
                write!(f, "archive exceeds extraction limit {}", limit.code())
            }
            QuarantineReason::PathTraversal => {
                f.write_str("archive entry escapes the extraction directory")
            }
            QuarantineReason::NoSourceFiles => {
                f.write_str("archive contains no files with an allowed extension")
            }
        }
    }
}

/// Zip-bomb and layout guards applied during extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionLimits {
    pub max_total_bytes: u64,
    pub max_entry_count: usize,
    pub max_path_depth: usize,
    pub allowed_extensions: BTreeSet<String>,
}

impl Default for ExtractionLimits {
    fn default() -> Self {
        ExtractionLimits {
            max_total_bytes: 64 * 1024 * 1024,
            max_entry_count: 256,
            max_path_depth: 4,
            allowed_extensions: [".cpp", ".h", ".hpp", ".c", ".txt"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl ExtractionLimits {
    /// Extension match is case-insensitive; entries in `allowed_extensions`
    /// may be written with or without the leading dot.
    pub fn allows(&self, path: &Path) -> bool {
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            return false;
        };
        self.allowed_extensions
            .iter()
            .any(|allowed| allowed.trim_start_matches('.').eq_ignore_ascii_case(ext))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_total_bytes == 0 {
            out.push("extraction.max_total_bytes must be positive".to_owned());
        }
        if self.max_entry_count == 0 {
            out.push("extraction.max_entry_count must be positive".to_owned());
        }
        if self.max_path_depth == 0 {
            out.push("extraction.max_path_depth must be positive".to_owned());
        }
        if self.allowed_extensions.is_empty() {
            out.push("extraction.allowed_extensions must not be empty".to_owned());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubmissionStatus {
    Pending,
    Extracted,
    Quarantined(QuarantineReason),
}

/// One archive on its way through collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionRecord {
    pub identity: SubmissionIdentity,
    pub received_at: DateTime<Utc>,
    pub archive_path: PathBuf,
    /// Set iff `status` is `Extracted`.
    pub workspace_path: Option<PathBuf>,
    pub status: SubmissionStatus,
}

impl SubmissionRecord {
    pub fn pending(
        identity: SubmissionIdentity,
        received_at: DateTime<Utc>,
        archive_path: impl Into<PathBuf>,
    ) -> Self {
        SubmissionRecord {
            identity,
            received_at: received_at.trunc_subsecs(0),
            archive_path: archive_path.into(),
            workspace_path: None,
            status: SubmissionStatus::Pending,
        }
    }
}

/// Discovery timestamp from the grader's clock, second precision.
pub fn now_utc() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

/// Numeric owner of an inbox file, recorded in reports in place of any
/// submitter authentication.
pub fn file_owner(path: &Path) -> Option<u32> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::MetadataExt;
        fs::metadata(path).ok().map(|m| m.uid())
    }
    #[cfg(not(unix))]
    {
        let _ = path;
        None
    }
}

/// Copies `archive` into `quarantine_dir` next to a one-line
/// `<archive>.reason.txt`. The inbox copy is left untouched.
pub fn quarantine_archive(
    archive: &Path,
    quarantine_dir: &Path,
    reason: &QuarantineReason,
) -> Result<PathBuf, IngestError> {
    let err = |source: io::Error| IngestError::Quarantine {
        path: quarantine_dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(quarantine_dir).map_err(err)?;
    let name = archive
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unnamed".to_owned());
    let target = quarantine_dir.join(&name);
    match fs::copy(archive, &target) {
        Ok(_) => {}
        // The archive vanished; the reason file still documents it.
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(err(e)),
    }
    let reason_line = format!("{}: {}\n", reason.code(), reason);
    fs::write(quarantine_dir.join(format!("{name}.reason.txt")), reason_line).map_err(err)?;
    Ok(target)
}
