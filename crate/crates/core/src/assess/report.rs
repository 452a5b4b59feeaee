use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::Section;
use crate::blackbox::{BlackboxSection, TestResult, Verdict};
use crate::build::{CompileResult, Severity};
use crate::ingest::{parse_submission_filename, SubmissionIdentity};
use crate::lexcheck::{FileWarning, LexicalSection, Polarity, RuleVerdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportStatus {
    /// Skeleton, not yet assessed.
    Pending,
    Graded,
    Quarantined { reason: String },
    Errored { reason: String },
    Superseded,
}

impl ReportStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ReportStatus::Pending => "pending",
            ReportStatus::Graded => "graded",
            ReportStatus::Quarantined { .. } => "quarantined",
            ReportStatus::Errored { .. } => "errored",
            ReportStatus::Superseded => "superseded",
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            ReportStatus::Quarantined { reason } | ReportStatus::Errored { reason } => Some(reason),
            _ => None,
        }
    }
}

/// Per-submission assessment record.
///
/// `score` is present iff `status` is `Graded`; `blackbox` is `NotRun`
/// whenever compilation did not succeed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MachineRecord", try_from = "MachineRecord")]
pub struct AssessmentReport {
    /// Archive file name as found in the inbox.
    pub archive: String,
    /// Absent when the archive name could not be parsed.
    pub identity: Option<SubmissionIdentity>,
    pub received_at: DateTime<Utc>,
    pub generated_at: Option<DateTime<Utc>>,
    /// Owner of the inbox file, when the platform reports one.
    pub inbox_owner: Option<u32>,
    pub status: ReportStatus,
    pub score: Option<f64>,
    pub scale: f64,
    pub compile: Section<CompileResult>,
    pub lexical: Section<LexicalSection>,
    pub blackbox: Section<BlackboxSection>,
}

/// Skeleton report: identity and arrival time, every section `NotRun`, no score.
pub fn initialize_report(identity: &SubmissionIdentity, received_at: DateTime<Utc>) -> AssessmentReport {
    AssessmentReport {
        archive: format!("{}.zip", identity.stem()),
        identity: Some(identity.clone()),
        ..AssessmentReport::skeleton_for(String::new(), received_at)
    }
}

impl AssessmentReport {
    /// Skeleton for an archive whose name may not parse.
    pub fn skeleton_for(archive: impl Into<String>, received_at: DateTime<Utc>) -> Self {
        AssessmentReport {
            archive: archive.into(),
            identity: None,
            received_at,
            generated_at: None,
            inbox_owner: None,
            status: ReportStatus::Pending,
            score: None,
            scale: 100.0,
            compile: Section::NotRun,
            lexical: Section::NotRun,
            blackbox: Section::NotRun,
        }
    }

    /// File stem used for report files: the identity stem, or
    /// `malformed-<archive name>` for names that did not parse.
    pub fn file_stem(&self) -> String {
        match &self.identity {
            Some(identity) => identity.stem(),
            None => {
                let cleaned: String = self
                    .archive
                    .chars()
                    .map(|c| if c.is_alphanumeric() || "-_'.".contains(c) { c } else { '-' })
                    .collect();
                format!("malformed-{cleaned}")
            }
        }
    }

    /// Marks an earlier report as replaced by a newer submission.
    pub fn supersede(&mut self) {
        self.status = ReportStatus::Superseded;
        self.score = None;
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MachineRecord {
    advisory: bool,
    archive: String,
    student: Option<String>,
    assignment: Option<u32>,
    received_at: String,
    generated_at: Option<String>,
    inbox_owner: Option<u32>,
    status: String,
    reason: Option<String>,
    score: Option<f64>,
    scale: f64,
    compile: Option<CompileResult>,
    lexical_warnings: Vec<FileWarning>,
    rules: Option<Vec<RuleVerdict>>,
    tests: Option<Vec<TestResult>>,
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl From<AssessmentReport> for MachineRecord {
    fn from(report: AssessmentReport) -> Self {
        let (lexical_warnings, rules) = match report.lexical {
            Section::Done(section) => (section.warnings, Some(section.rules)),
            Section::NotRun => (Vec::new(), None),
        };
        MachineRecord {
            advisory: true,
            student: report.identity.as_ref().map(SubmissionIdentity::student),
            assignment: report.identity.as_ref().map(|i| i.assignment_number),
            archive: report.archive,
            received_at: timestamp(&report.received_at),
            generated_at: report.generated_at.as_ref().map(timestamp),
            inbox_owner: report.inbox_owner,
            status: report.status.label().to_owned(),
            reason: report.status.reason().map(str::to_owned),
            score: report.score,
            scale: report.scale,
            compile: report.compile.as_ref().cloned(),
            lexical_warnings,
            rules,
            tests: match report.blackbox {
                Section::Done(section) => Some(section.results),
                Section::NotRun => None,
            },
        }
    }
}

impl TryFrom<MachineRecord> for AssessmentReport {
    type Error = String;

    fn try_from(record: MachineRecord) -> Result<Self, Self::Error> {
        let parse_time = |s: &str| {
            DateTime::parse_from_rfc3339(s)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| format!("bad timestamp {s:?}: {e}"))
        };
        let reason = || record.reason.clone().unwrap_or_default();
        let status = match record.status.as_str() {
            "pending" => ReportStatus::Pending,
            "graded" => ReportStatus::Graded,
            "quarantined" => ReportStatus::Quarantined { reason: reason() },
            "errored" => ReportStatus::Errored { reason: reason() },
            "superseded" => ReportStatus::Superseded,
            other => return Err(format!("unknown status {other:?}")),
        };
        Ok(AssessmentReport {
            identity: parse_submission_filename(&record.archive).ok(),
            received_at: parse_time(&record.received_at)?,
            generated_at: record.generated_at.as_deref().map(parse_time).transpose()?,
            archive: record.archive,
            inbox_owner: record.inbox_owner,
            status,
            score: record.score,
            scale: record.scale,
            compile: record.compile.into(),
            lexical: record
                .rules
                .map(|rules| LexicalSection {
                    rules,
                    warnings: record.lexical_warnings,
                })
                .into(),
            blackbox: record.tests.map(|results| BlackboxSection { results }).into(),
        })
    }
}

/// Both renderings of one report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub text: String,
    /// One pretty-printed JSON object with a fixed key set.
    pub json: String,
}

fn format_number(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{value:.0}")
    } else {
        format!("{value}")
    }
}

/// Renders the human-readable and machine-readable forms. Deterministic:
/// the same report always renders to the same bytes.
pub fn render_report(report: &AssessmentReport) -> RenderedReport {
    let mut text = String::new();
    let t = &mut text;
    let _ = writeln!(t, "ASSESSMENT REPORT (advisory: a reference for the instructor, not a final grade)");
    let _ = writeln!(t, "Archive:    {}", report.archive);
    match &report.identity {
        Some(id) => {
            let _ = writeln!(t, "Student:    {}", id.student());
            let _ = writeln!(t, "Assignment: {}", id.assignment_number);
        }
        None => {
            let _ = writeln!(t, "Student:    (unknown)");
        }
    }
    let _ = writeln!(t, "Received:   {}", timestamp(&report.received_at));
    if let Some(generated) = &report.generated_at {
        let _ = writeln!(t, "Generated:  {}", timestamp(generated));
    }
    let _ = writeln!(t, "Status:     {}", report.status.label());
    if let Some(reason) = report.status.reason() {
        let _ = writeln!(t, "Reason:     {reason}");
    }
    if let (ReportStatus::Graded, Some(score)) = (&report.status, report.score) {
        let _ = writeln!(t, "Score: {score:.2}/{}", format_number(report.scale));
    }

    let _ = writeln!(t, "\n== Compilation");
    match &report.compile {
        Section::NotRun => {
            let _ = writeln!(t, "not run");
        }
        Section::Done(compile) => {
            let outcome = if compile.succeeded {
                "succeeded"
            } else if compile.timed_out {
                "FAILED (timed out)"
            } else {
                "FAILED"
            };
            let _ = writeln!(
                t,
                "{outcome} (exit {}; {} error(s), {} warning(s))",
                compile.exit_code,
                compile.count(Severity::Error),
                compile.count(Severity::Warning)
            );
            for d in compile.diagnostics.iter().filter(|d| d.severity != Severity::Note || !d.text.is_empty()) {
                let _ = writeln!(t, "  | {}", d.text);
            }
        }
    }

    let _ = writeln!(t, "\n== Structural rules");
    match &report.lexical {
        Section::NotRun => {
            let _ = writeln!(t, "not run");
        }
        Section::Done(section) => {
            if section.rules.is_empty() {
                let _ = writeln!(t, "(no rules)");
            }
            for rule in &section.rules {
                let mark = if rule.result.satisfied { "PASS" } else { "FAIL" };
                let polarity = match rule.polarity {
                    Polarity::MustMatch => "must match",
                    Polarity::MustNotMatch => "must not match",
                };
                let _ = write!(t, "[{mark}] {} ({polarity}, weight {})", rule.result.rule_id, format_number(rule.weight));
                if !rule.description.is_empty() {
                    let _ = write!(t, ": {}", rule.description);
                }
                let _ = writeln!(t);
                if let Some(span) = &rule.result.first_match {
                    let file = span.file.as_ref().map(|f| f.display().to_string()).unwrap_or_default();
                    let _ = writeln!(t, "       matched {file} bytes {}..{}", span.start, span.end);
                }
            }
            for file in &section.warnings {
                for w in &file.warnings {
                    let _ = writeln!(t, "  warning: {}: {w:?}", file.file.display());
                }
            }
        }
    }

    let _ = writeln!(t, "\n== Black-box tests");
    match &report.blackbox {
        Section::NotRun => {
            let _ = writeln!(t, "not run");
        }
        Section::Done(section) => {
            for result in &section.results {
                let _ = write!(t, "[{}] {}", result.verdict.label(), result.test_id);
                if let Some(code) = result.exit_code.filter(|&c| c != 0) {
                    let _ = write!(t, " (exit {code})");
                }
                let _ = writeln!(t);
                if result.verdict == Verdict::WrongOutput {
                    for line in result.actual_normalized.lines().take(5) {
                        let _ = writeln!(t, "       got: {line}");
                    }
                }
            }
            let _ = writeln!(t, "Tests passed: {}/{}", section.passed(), section.results.len());
        }
    }

    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    RenderedReport { text, json }
}
