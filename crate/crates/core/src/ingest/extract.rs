//! Guarded ZIP extraction into a per-submission workspace.

use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::{Component, Path, PathBuf};

use zip::ZipArchive;

use super::{ExtractionLimits, IngestError, Limit, QuarantineReason, SubmissionRecord, SubmissionStatus};

fn is_metadata_junk(path: &Path) -> bool {
    path.components().any(|c| match c {
        Component::Normal(part) => {
            let part = part.to_string_lossy();
            part == "__MACOSX" || part.starts_with("._")
        }
        _ => false,
    })
}

fn quarantined(record: SubmissionRecord, workspace: &Path, reason: QuarantineReason) -> SubmissionRecord {
    // Best effort: a partial workspace is never handed downstream.
    let _ = fs::remove_dir_all(workspace);
    SubmissionRecord {
        status: SubmissionStatus::Quarantined(reason),
        workspace_path: None,
        ..record
    }
}

/// Unpacks `record.archive_path` into `workspace`, which is wiped first.
///
/// Limit breaches and unreadable archives never fail the call; they come back
/// as a `Quarantined` record. `Err` is reserved for local filesystem faults
/// (the workspace cannot be created or written).
pub fn extract_archive(
    record: SubmissionRecord,
    workspace: &Path,
    limits: &ExtractionLimits,
) -> Result<SubmissionRecord, IngestError> {
    debug_assert!(matches!(record.status, SubmissionStatus::Pending));
    let io_err = |source: io::Error| IngestError::Workspace {
        path: workspace.to_path_buf(),
        source,
    };

    let file = match File::open(&record.archive_path) {
        Ok(file) => file,
        Err(_) => return Ok(quarantined(record, workspace, QuarantineReason::CorruptArchive)),
    };
    let mut archive = match ZipArchive::new(BufReader::new(file)) {
        Ok(archive) => archive,
        Err(_) => return Ok(quarantined(record, workspace, QuarantineReason::CorruptArchive)),
    };
    if archive.len() > limits.max_entry_count {
        return Ok(quarantined(
            record,
            workspace,
            QuarantineReason::LimitExceeded(Limit::EntryCount),
        ));
    }

    match fs::remove_dir_all(workspace) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(e)),
    }
    fs::create_dir_all(workspace).map_err(io_err)?;

    let mut written: u64 = 0;
    let mut extracted = 0usize;
    for index in 0..archive.len() {
        let mut entry = match archive.by_index(index) {
            Ok(entry) => entry,
            Err(_) => return Ok(quarantined(record, workspace, QuarantineReason::CorruptArchive)),
        };
        let Some(relative) = entry.enclosed_name() else {
            return Ok(quarantined(record, workspace, QuarantineReason::PathTraversal));
        };
        if entry.is_dir() || is_metadata_junk(&relative) {
            continue;
        }
        if relative.components().count() > limits.max_path_depth {
            return Ok(quarantined(
                record,
                workspace,
                QuarantineReason::LimitExceeded(Limit::PathDepth),
            ));
        }
        if !limits.allows(&relative) {
            continue;
        }

        let remaining = limits.max_total_bytes.saturating_sub(written);
        let mut contents = Vec::new();
        // Read errors (bad CRC, broken deflate stream, encryption) are the
        // archive's fault; write errors below are ours.
        if (&mut entry).take(remaining + 1).read_to_end(&mut contents).is_err() {
            return Ok(quarantined(record, workspace, QuarantineReason::CorruptArchive));
        }
        let copied = contents.len() as u64;
        if copied > remaining {
            return Ok(quarantined(
                record,
                workspace,
                QuarantineReason::LimitExceeded(Limit::TotalBytes),
            ));
        }
        let target: PathBuf = workspace.join(&relative);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        fs::write(&target, &contents).map_err(io_err)?;
        written += copied;
        extracted += 1;
    }

    if extracted == 0 {
        return Ok(quarantined(record, workspace, QuarantineReason::NoSourceFiles));
    }
    Ok(SubmissionRecord {
        status: SubmissionStatus::Extracted,
        workspace_path: Some(workspace.to_path_buf()),
        ..record
    })
}
