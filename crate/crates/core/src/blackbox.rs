//! Black-box tester: run the compiled submission on each test input and
//! compare its normalized stdout with the expected output.

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::process;

pub const DEFAULT_TEST_TIMEOUT: Duration = Duration::from_secs(5);
pub const DEFAULT_OUTPUT_CAP: usize = 1024 * 1024;

#[derive(Debug, Error)]
#[error("could not start {executable}: {source}")]
pub struct SpawnFailure {
    pub executable: String,
    #[source]
    pub source: std::io::Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub test_id: String,
    pub stdin_text: String,
    pub args: Vec<String>,
    pub expected_stdout: String,
    pub timeout: Duration,
    pub weight: f64,
}

impl TestCase {
    pub fn new(test_id: impl Into<String>, stdin_text: impl Into<String>, expected_stdout: impl Into<String>) -> Self {
        TestCase {
            test_id: test_id.into(),
            stdin_text: stdin_text.into(),
            args: Vec::new(),
            expected_stdout: expected_stdout.into(),
            timeout: DEFAULT_TEST_TIMEOUT,
            weight: 1.0,
        }
    }
}

/// What "literally equal" tolerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationPolicy {
    pub unify_line_endings: bool,
    pub trim_trailing_ws_per_line: bool,
    pub drop_trailing_blank_lines: bool,
    pub case_sensitive: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy {
            unify_line_endings: true,
            trim_trailing_ws_per_line: true,
            drop_trailing_blank_lines: true,
            case_sensitive: true,
        }
    }
}

/// Applies the enabled transformations in a fixed order: CRLF/CR to LF,
/// per-line trailing whitespace trim, trailing blank line removal, then
/// lowercasing when comparison is case-insensitive.
pub fn normalize_output(raw: &str, policy: &NormalizationPolicy) -> String {
    let mut text = if policy.unify_line_endings {
        raw.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        raw.to_owned()
    };
    if policy.trim_trailing_ws_per_line {
        text = text
            .split('\n')
            .map(|line| line.trim_end_matches(|c: char| c.is_whitespace() && c != '\n'))
            .collect::<Vec<_>>()
            .join("\n");
    }
    if policy.drop_trailing_blank_lines {
        let mut lines: Vec<&str> = text.split('\n').collect();
        while lines.len() > 1 && lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        if lines.len() == 1 && lines[0].trim().is_empty() {
            lines[0] = "";
        }
        text = lines.join("\n");
    }
    if !policy.case_sensitive {
        text = fold_case(&text);
    }
    text
}

// Lowercasing is not idempotent for every code point; iterate to a fixpoint.
fn fold_case(text: &str) -> String {
    let mut current = text.to_lowercase();
    loop {
        let next = current.to_lowercase();
        if next == current {
            return current;
        }
        current = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    WrongOutput,
    Timeout,
    RuntimeError,
    OutputOverflow,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::WrongOutput => "WRONG OUTPUT",
            Verdict::Timeout => "TIMEOUT",
            Verdict::RuntimeError => "RUNTIME ERROR",
            Verdict::OutputOverflow => "OUTPUT OVERFLOW",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: String,
    pub verdict: Verdict,
    pub exit_code: Option<i32>,
    pub weight: f64,
    /// Normalized stdout, truncated to the output cap.
    pub actual_normalized: String,
    /// Captured stderr; written to the grading log, never compared.
    #[serde(skip)]
    pub stderr: String,
    #[serde(skip)]
    pub duration: Duration,
}

/// Runs one test in a fresh process rooted at the executable's directory.
pub fn run_test_case(
    executable: &Path,
    test: &TestCase,
    policy: &NormalizationPolicy,
    output_cap: usize,
) -> Result<TestResult, SpawnFailure> {
    // Relative paths would resolve against the new working directory.
    let program = std::path::absolute(executable).unwrap_or_else(|_| executable.to_path_buf());
    let mut command = Command::new(&program);
    command.args(&test.args);
    if let Some(dir) = program.parent() {
        command.current_dir(dir);
    }
    let limits = process::Limits {
        timeout: test.timeout,
        stdout_cap: output_cap,
        stderr_cap: output_cap,
    };
    let outcome = process::run(&mut command, Some(test.stdin_text.as_bytes()), &limits, false)
        .map_err(|source| SpawnFailure {
            executable: executable.display().to_string(),
            source,
        })?;

    let actual_normalized = normalize_output(&String::from_utf8_lossy(&outcome.stdout), policy);
    let verdict = if outcome.timed_out {
        Verdict::Timeout
    } else if outcome.overflowed {
        Verdict::OutputOverflow
    } else if outcome.crashed() {
        Verdict::RuntimeError
    } else if actual_normalized == normalize_output(&test.expected_stdout, policy) {
        Verdict::Pass
    } else {
        Verdict::WrongOutput
    };

    Ok(TestResult {
        test_id: test.test_id.clone(),
        verdict,
        exit_code: outcome.exit_code(),
        weight: test.weight,
        actual_normalized,
        stderr: String::from_utf8_lossy(&outcome.stderr).into_owned(),
        duration: outcome.duration,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlackboxSection {
    pub results: Vec<TestResult>,
}

impl BlackboxSection {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.verdict == Verdict::Pass).count()
    }

    pub fn total_weight(&self) -> f64 {
        self.results.iter().fold(0.0, |sum, r| sum + r.weight)
    }

    pub fn passed_weight(&self) -> f64 {
        self.results
            .iter()
            .filter(|r| r.verdict == Verdict::Pass)
            .fold(0.0, |sum, r| sum + r.weight)
    }

    /// Passed share of test weight; an empty or weightless suite passes.
    pub fn fraction(&self) -> f64 {
        let total = self.total_weight();
        if total > 0.0 {
            self.passed_weight() / total
        } else {
            1.0
        }
    }
}

/// Runs every test in order; a failing test never stops the suite.
pub fn run_test_suite(
    executable: &Path,
    tests: &[TestCase],
    policy: &NormalizationPolicy,
    output_cap: usize,
) -> Result<BlackboxSection, SpawnFailure> {
    let results = tests
        .iter()
        .map(|test| run_test_case(executable, test, policy, output_cap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlackboxSection { results })
}
