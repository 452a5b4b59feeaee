use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::json;

use super::pipeline::{BatchSummary, Grader, Layout, PipelineError};
use crate::assess::EventKind;
use crate::ingest::{now_utc, InboxScanner};

pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_secs(30);
pub const MIN_POLL_INTERVAL: Duration = Duration::from_secs(1);
const SHUTDOWN_CHECK: Duration = Duration::from_millis(50);

#[derive(Debug, Clone)]
pub struct WatchConfig {
    pub inbox: PathBuf,
    pub poll_interval: Duration,
    pub workspace_root: PathBuf,
    pub reports_dir: PathBuf,
}

impl WatchConfig {
    pub fn new(
        inbox: impl Into<PathBuf>,
        workspace_root: impl Into<PathBuf>,
        reports_dir: impl Into<PathBuf>,
    ) -> Self {
        WatchConfig {
            inbox: inbox.into(),
            poll_interval: DEFAULT_POLL_INTERVAL,
            workspace_root: workspace_root.into(),
            reports_dir: reports_dir.into(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.poll_interval < MIN_POLL_INTERVAL {
            out.push(format!(
                "poll interval must be at least {}s",
                MIN_POLL_INTERVAL.as_secs()
            ));
        }
        let paths = [&self.inbox, &self.workspace_root, &self.reports_dir];
        for (i, a) in paths.iter().enumerate() {
            for b in &paths[i + 1..] {
                if a == b {
                    out.push(format!("{} is used for more than one role", a.display()));
                }
            }
        }
        out
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.workspace_root, &self.reports_dir)
    }
}

/// Totals over a watch session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WatchSummary {
    pub ticks: usize,
    pub graded: BatchSummary,
}

fn sleep_unless(shutdown: &AtomicBool, total: Duration) {
    let deadline = Instant::now() + total;
    while !shutdown.load(Ordering::SeqCst) {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        thread::sleep(SHUTDOWN_CHECK.min(deadline - now));
    }
}

impl Grader {
    /// Polls `config.inbox` every `config.poll_interval` and grades each
    /// archive once it is stable, until `shutdown` is raised.
    ///
    /// Submissions already started when `shutdown` rises are finished; no
    /// new scan starts afterwards. Scan failures are logged and retried on
    /// the next tick.
    pub fn watch(&self, config: &WatchConfig, shutdown: &AtomicBool) -> Result<WatchSummary, PipelineError> {
        let inbox: &Path = &config.inbox;
        let subject = inbox.display().to_string();
        self.log().record(
            &subject,
            EventKind::WatchStarted,
            json!({ "poll_interval_secs": config.poll_interval.as_secs_f64() }),
        )?;

        let mut scanner = InboxScanner::new(inbox);
        let mut summary = WatchSummary::default();
        while !shutdown.load(Ordering::SeqCst) {
            summary.ticks += 1;
            match scanner.scan() {
                Ok(stable) if !stable.is_empty() => {
                    let paths: Vec<PathBuf> = stable.iter().map(|s| s.path.clone()).collect();
                    let (batch, processed) = self.grade_many(&paths, now_utc(), Some(shutdown))?;
                    for (archive, done) in stable.iter().zip(processed) {
                        if !done {
                            scanner.release(&archive.key);
                        }
                    }
                    summary.graded.merge(batch);
                }
                Ok(_) => {}
                Err(e) => {
                    self.log()
                        .record(&subject, EventKind::ScanError, json!({ "error": e.to_string() }))?;
                }
            }
            sleep_unless(shutdown, config.poll_interval);
        }

        self.log().record(
            &subject,
            EventKind::WatchStopped,
            json!({
                "ticks": summary.ticks,
                "graded": summary.graded.graded,
                "quarantined": summary.graded.quarantined,
                "errored": summary.graded.errored,
            }),
        )?;
        Ok(summary)
    }
}
