//! parse → extract → compile → lexcheck → black-box → score → report → log.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use chrono::{DateTime, Utc};
use serde_json::json;
use thiserror::Error;

use super::spec::AssignmentSpec;
use crate::assess::{
    render_report, score_submission, AssessmentReport, EventKind, GradingLog, LogError,
    ReportStatus, Section,
};
use crate::blackbox::run_test_suite;
use crate::build::{compile_workspace, find_sources, BuildError, Severity};
use crate::ingest::{
    extract_archive, file_owner, list_inbox, now_utc, parse_submission_filename,
    quarantine_archive, IngestError, QuarantineReason, SubmissionRecord, SubmissionStatus,
};
use crate::lexcheck::evaluate_ruleset;

/// Failures that stop a batch: the audit trail or report store is broken.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("cannot write report {path}: {source}")]
    Report { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Where the pipeline puts things.
#[derive(Debug, Clone)]
pub struct Layout {
    pub workspace_root: PathBuf,
    pub reports_dir: PathBuf,
    /// Defaults to `quarantine/` beside the directory holding the archive.
    pub quarantine_dir: Option<PathBuf>,
}

impl Layout {
    pub fn new(workspace_root: impl Into<PathBuf>, reports_dir: impl Into<PathBuf>) -> Self {
        Layout {
            workspace_root: workspace_root.into(),
            reports_dir: reports_dir.into(),
            quarantine_dir: None,
        }
    }

    pub fn quarantine_dir_for(&self, archive: &Path) -> PathBuf {
        if let Some(dir) = &self.quarantine_dir {
            return dir.clone();
        }
        let inbox = archive.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        match inbox.parent() {
            Some(parent) if !parent.as_os_str().is_empty() => parent.join("quarantine"),
            _ => {
                let absolute = fs::canonicalize(inbox).unwrap_or_else(|_| inbox.to_path_buf());
                absolute
                    .parent()
                    .map_or_else(|| PathBuf::from("quarantine"), |p| p.join("quarantine"))
            }
        }
    }
}

/// Counts of final report statuses for a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub graded: usize,
    pub quarantined: usize,
    pub errored: usize,
}

impl BatchSummary {
    pub fn total(&self) -> usize {
        self.graded + self.quarantined + self.errored
    }

    pub fn add(&mut self, report: &AssessmentReport) {
        match report.status {
            ReportStatus::Graded => self.graded += 1,
            ReportStatus::Quarantined { .. } => self.quarantined += 1,
            _ => self.errored += 1,
        }
    }

    pub fn merge(&mut self, other: BatchSummary) {
        self.graded += other.graded;
        self.quarantined += other.quarantined;
        self.errored += other.errored;
    }
}

/// Default worker count: available processors, at most 8.
pub fn default_jobs() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

/// Grades submissions for one assignment.
#[derive(Debug)]
pub struct Grader {
    spec: AssignmentSpec,
    layout: Layout,
    log: GradingLog,
    jobs: usize,
    clean: bool,
    /// Serialises report-file replacement so supersession is race-free.
    reports_lock: Mutex<()>,
}

impl Grader {
    pub fn new(spec: AssignmentSpec, layout: Layout, log: GradingLog) -> Self {
        Grader {
            spec,
            layout,
            log,
            jobs: default_jobs(),
            clean: false,
            reports_lock: Mutex::new(()),
        }
    }

    /// Bound on concurrent submission pipelines (at least 1).
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    /// Remove a submission's workspace after it grades successfully.
    pub fn with_clean(mut self, clean: bool) -> Self {
        self.clean = clean;
        self
    }

    pub fn spec(&self) -> &AssignmentSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn log(&self) -> &GradingLog {
        &self.log
    }

    pub fn report_paths(&self, stem: &str) -> (PathBuf, PathBuf) {
        (
            self.layout.reports_dir.join(format!("{stem}.report.txt")),
            self.layout.reports_dir.join(format!("{stem}.report.json")),
        )
    }

    /// Grades one archive, timestamped now.
    pub fn grade_submission(&self, archive: &Path) -> Result<AssessmentReport, PipelineError> {
        self.grade_at(archive, now_utc())
    }

    /// Grades one archive received at `received_at`.
    ///
    /// Student and archive faults end up as report statuses; only failures to
    /// write the log or the report are returned as errors.
    pub fn grade_at(&self, archive: &Path, received_at: DateTime<Utc>) -> Result<AssessmentReport, PipelineError> {
        let file_name = archive
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut report = AssessmentReport::skeleton_for(file_name.clone(), received_at);
        report.scale = self.spec.rubric.scale;
        report.inbox_owner = file_owner(archive);

        self.assess(archive, &file_name, &mut report)?;
        report.generated_at = Some(now_utc());
        self.publish(&report)?;
        Ok(report)
    }

    fn quarantine(
        &self,
        archive: &Path,
        subject: &str,
        report: &mut AssessmentReport,
        reason: QuarantineReason,
    ) -> Result<(), PipelineError> {
        let code = reason.code();
        let dir = self.layout.quarantine_dir_for(archive);
        let moved = quarantine_archive(archive, &dir, &reason);
        self.log.record(
            subject,
            EventKind::Quarantined,
            json!({ "reason": code, "message": reason.to_string(), "quarantine_dir": dir }),
        )?;
        moved?;
        report.status = ReportStatus::Quarantined { reason: code };
        Ok(())
    }

    fn errored(&self, subject: &str, report: &mut AssessmentReport, reason: String) -> Result<(), PipelineError> {
        self.log
            .record(subject, EventKind::Errored, json!({ "reason": reason }))?;
        report.status = ReportStatus::Errored { reason };
        Ok(())
    }

    fn assess(&self, archive: &Path, file_name: &str, report: &mut AssessmentReport) -> Result<(), PipelineError> {
        let spec = &self.spec;
        self.log.record(
            file_name,
            EventKind::Received,
            json!({ "archive": archive, "received_at": report.received_at.to_rfc3339() }),
        )?;

        let identity = match parse_submission_filename(file_name) {
            Ok(identity) => identity,
            Err(malformed) => {
                return self.quarantine(archive, file_name, report, QuarantineReason::MalformedName(malformed));
            }
        };
        let subject = identity.stem();
        report.identity = Some(identity.clone());
        if identity.assignment_number != spec.assignment_number {
            let reason = QuarantineReason::WrongAssignment {
                expected: spec.assignment_number,
                found: identity.assignment_number,
            };
            return self.quarantine(archive, &subject, report, reason);
        }

        let workspace = self.layout.workspace_root.join(&subject);
        let record = SubmissionRecord::pending(identity, report.received_at, archive);
        let record = match extract_archive(record, &workspace, &spec.extraction) {
            Ok(record) => record,
            Err(e) => return self.errored(&subject, report, e.to_string()),
        };
        let workspace = match record.status {
            SubmissionStatus::Extracted => record.workspace_path.expect("extracted record has a workspace"),
            SubmissionStatus::Quarantined(reason) => return self.quarantine(archive, &subject, report, reason),
            SubmissionStatus::Pending => unreachable!("extraction always settles the status"),
        };
        self.log
            .record(&subject, EventKind::Extracted, json!({ "workspace": workspace }))?;

        let compile = match compile_workspace(&workspace, &spec.compiler) {
            Ok(compile) => compile,
            Err(e @ BuildError::CompilerNotFound(_)) | Err(e @ BuildError::Spawn { .. }) | Err(e @ BuildError::Workspace { .. }) => {
                return self.errored(&subject, report, e.to_string());
            }
        };
        if compile.succeeded {
            self.log.record(
                &subject,
                EventKind::Compiled,
                json!({
                    "warnings": compile.count(Severity::Warning),
                    "diagnostics": compile.raw_output(),
                }),
            )?;
        } else {
            self.log.record(
                &subject,
                EventKind::CompileError,
                json!({
                    "exit_code": compile.exit_code,
                    "timed_out": compile.timed_out,
                    "diagnostics": compile.raw_output(),
                }),
            )?;
        }

        let mut extensions = spec.compiler.source_extensions.clone();
        extensions.extend([".h", ".hpp", ".hh", ".hxx"].map(String::from));
        let sources = match read_sources(&workspace, &extensions) {
            Ok(sources) => sources,
            Err(e) => return self.errored(&subject, report, format!("cannot read sources: {e}")),
        };
        let lexical = evaluate_ruleset(&sources, &spec.rules);

        let blackbox = match compile.executable_path.as_deref() {
            Some(executable) if compile.succeeded => {
                match run_test_suite(executable, &spec.tests, &spec.normalization, spec.output_cap) {
                    Ok(section) => Some(section),
                    Err(e) => {
                        report.compile = Section::Done(compile);
                        report.lexical = Section::Done(lexical);
                        return self.errored(&subject, report, e.to_string());
                    }
                }
            }
            _ => None,
        };
        if let Some(section) = &blackbox {
            for result in section.results.iter().filter(|r| !r.stderr.is_empty()) {
                self.log.record(
                    &subject,
                    EventKind::TestStderr,
                    json!({ "test_id": result.test_id, "stderr": result.stderr }),
                )?;
            }
        }

        let score = score_submission(&compile, &lexical, blackbox.as_ref(), &spec.rubric);
        let score = (score * 1e6).round() / 1e6;
        report.compile = Section::Done(compile);
        report.lexical = Section::Done(lexical);
        report.blackbox = blackbox.into();
        report.score = Some(score);
        report.status = ReportStatus::Graded;
        self.log.record(
            &subject,
            EventKind::Graded,
            json!({
                "score": score,
                "scale": spec.rubric.scale,
                "tests_passed": report.blackbox.as_ref().map(|b| b.passed()),
                "rules_satisfied": report.lexical.as_ref().map(|l| l.rules.iter().filter(|r| r.result.satisfied).count()),
            }),
        )?;

        if self.clean {
            let _ = fs::remove_dir_all(&workspace);
        }
        Ok(())
    }

    /// Writes the report files, first retiring any earlier report for the
    /// same submission as `Superseded`.
    fn publish(&self, report: &AssessmentReport) -> Result<(), PipelineError> {
        let _guard = self.reports_lock.lock().unwrap_or_else(|e| e.into_inner());
        let dir = &self.layout.reports_dir;
        let write_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Report { path, source }
        };
        fs::create_dir_all(dir).map_err(write_err(dir))?;

        let stem = report.file_stem();
        let (text_path, json_path) = self.report_paths(&stem);
        if report.identity.is_some() {
            if let Some(mut previous) = fs::read_to_string(&json_path)
                .ok()
                .and_then(|json| serde_json::from_str::<AssessmentReport>(&json).ok())
            {
                let previous_status = previous.status.label();
                previous.supersede();
                let tag = previous.received_at.format("%Y%m%dT%H%M%SZ");
                let base = format!("{stem}.superseded-{tag}");
                let (old_text, old_json) = self.report_paths(&base);
                let rendered = render_report(&previous);
                fs::write(&old_text, rendered.text).map_err(write_err(&old_text))?;
                fs::write(&old_json, rendered.json).map_err(write_err(&old_json))?;
                self.log.record(
                    &stem,
                    EventKind::Superseded,
                    json!({
                        "previous_received_at": previous.received_at.to_rfc3339(),
                        "previous_status": previous_status,
                        "retained_as": old_json,
                    }),
                )?;
            }
        }

        let rendered = render_report(report);
        fs::write(&text_path, rendered.text).map_err(write_err(&text_path))?;
        fs::write(&json_path, rendered.json).map_err(write_err(&json_path))?;
        Ok(())
    }

    /// Grades every regular file in `inbox` once.
    ///
    /// Archives for the same submission are graded in name order on one
    /// worker so that latest-wins supersession is deterministic; distinct
    /// submissions run on up to `jobs` workers.
    pub fn run_batch(&self, inbox: &Path) -> Result<BatchSummary, PipelineError> {
        let files = list_inbox(inbox)?;
        let received_at = now_utc();
        let paths: Vec<PathBuf> = files.into_iter().map(|(path, _)| path).collect();
        let (summary, _) = self.grade_many(&paths, received_at, None)?;
        Ok(summary)
    }

    /// Grades `archives` in parallel. Returns the summary and, per archive,
    /// whether it was processed (it is skipped once `stop` is raised).
    pub(crate) fn grade_many(
        &self,
        archives: &[PathBuf],
        received_at: DateTime<Utc>,
        stop: Option<&AtomicBool>,
    ) -> Result<(BatchSummary, Vec<bool>), PipelineError> {
        // Group by report stem so resubmissions stay ordered.
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (index, path) in archives.iter().enumerate() {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let key = parse_submission_filename(&name).map_or(name, |id| id.stem());
            groups.entry(key).or_default().push(index);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();

        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let outcomes: Mutex<Vec<Option<Result<AssessmentReport, PipelineError>>>> =
            Mutex::new((0..archives.len()).map(|_| None).collect());
        let workers = self.jobs.min(groups.len()).max(1);

        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if failed.load(Ordering::SeqCst) || stop.is_some_and(|s| s.load(Ordering::SeqCst)) {
                        break;
                    }
                    let g = next.fetch_add(1, Ordering::SeqCst);
                    let Some(group) = groups.get(g) else { break };
                    for &index in group {
                        let result = self.grade_at(&archives[index], received_at);
                        if result.is_err() {
                            failed.store(true, Ordering::SeqCst);
                        }
                        outcomes.lock().unwrap_or_else(|e| e.into_inner())[index] = Some(result);
                    }
                });
            }
        });

        let mut summary = BatchSummary::default();
        let mut processed = Vec::with_capacity(archives.len());
        for outcome in outcomes.into_inner().unwrap_or_else(|e| e.into_inner()) {
            match outcome {
                Some(result) => {
                    summary.add(&result?);
                    processed.push(true);
                }
                None => processed.push(false),
            }
        }
        Ok((summary, processed))
    }
}

fn read_sources(workspace: &Path, extensions: &[String]) -> io::Result<Vec<(PathBuf, String)>> {
    find_sources(workspace, extensions)?
        .into_iter()
        .map(|rel| {
            let bytes = fs::read(workspace.join(&rel))?;
            Ok((rel, String::from_utf8_lossy(&bytes).into_owned()))
        })
        .collect()
}
