//! Inbox polling with a size/mtime stability debounce.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use super::IngestError;

/// Identity of an inbox file as observed by one scan.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FileKey {
    pub file_name: String,
    pub size: u64,
    pub modified: SystemTime,
}

/// An archive whose size and mtime did not change between two scans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableArchive {
    pub path: PathBuf,
    pub key: FileKey,
}

fn has_zip_extension(name: &str) -> bool {
    Path::new(name)
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("zip"))
}

/// Lists regular, non-hidden files in `inbox` in name order.
pub fn list_inbox(inbox: &Path) -> Result<Vec<(PathBuf, FileKey)>, IngestError> {
    let unreadable = |source: io::Error| IngestError::InboxUnreadable {
        path: inbox.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(inbox).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        let Ok(file_name) = entry.file_name().into_string() else {
            continue;
        };
        if file_name.starts_with('.') {
            continue;
        }
        // Files can vanish between readdir and stat.
        let Ok(meta) = entry.metadata() else {
            continue;
        };
        if !meta.is_file() {
            continue;
        }
        let key = FileKey {
            file_name,
            size: meta.len(),
            modified: meta.modified().map_err(unreadable)?,
        };
        files.push((entry.path(), key));
    }
    files.sort_by(|a, b| a.1.file_name.cmp(&b.1.file_name));
    Ok(files)
}

/// Scheduler-owned scanner state.
///
/// A `.zip` file is reported once its `(size, mtime)` matches the
/// observation from the previous scan, and never again for the same
/// `(name, size, mtime)` triple.
#[derive(Debug, Default)]
pub struct InboxScanner {
    inbox: PathBuf,
    seen: HashSet<FileKey>,
    previous: HashMap<String, FileKey>,
}

impl InboxScanner {
    pub fn new(inbox: impl Into<PathBuf>) -> Self {
        InboxScanner {
            inbox: inbox.into(),
            ..Default::default()
        }
    }

    pub fn inbox(&self) -> &Path {
        &self.inbox
    }

    pub fn seen(&self) -> &HashSet<FileKey> {
        &self.seen
    }

    /// One polling tick. Returned archives are added to the seen set.
    pub fn scan(&mut self) -> Result<Vec<StableArchive>, IngestError> {
        let current: Vec<(PathBuf, FileKey)> = list_inbox(&self.inbox)?
            .into_iter()
            .filter(|(_, key)| has_zip_extension(&key.file_name))
            .collect();

        let mut stable = Vec::new();
        for (path, key) in &current {
            if self.seen.contains(key) {
                continue;
            }
            if self.previous.get(&key.file_name) == Some(key) {
                self.seen.insert(key.clone());
                stable.push(StableArchive {
                    path: path.clone(),
                    key: key.clone(),
                });
            }
        }
        self.previous = current
            .into_iter()
            .map(|(_, key)| (key.file_name.clone(), key))
            .collect();
        Ok(stable)
    }

    /// Forgets that `key` was handed out, so it may be reported again.
    /// Used when a submission was not processed (e.g. shutdown mid-tick).
    pub fn release(&mut self, key: &FileKey) {
        self.seen.remove(key);
    }
}
