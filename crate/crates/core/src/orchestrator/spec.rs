//! Assignment specification files (TOML).
//!
//! ```toml
//! assignment_number = 3
//!
//! [compiler]
//! command = ["g++", "-std=c++17", "{sources}", "-o", "{output}"]
//! timeout_secs = 30
//!
//! [[rules]]
//! rule_id = "nested-branch"
//! description = "Use nested if/else"
//! polarity = "must-match"
//! pattern = '''
//! if\s*\([\s\S]*\)\s*\{[\s\S]*
//!     if\s*\([\s\S]*\)\s*\{[\s\S]*\}\s*
//!     else\s*\{[\s\S]*\}\s*\}\s*
//! else\s*\{[\s\S]*\}
//! '''
//!
//! [[tests]]
//! test_id = "y2000"
//! stdin = "2000\n"
//! expected_stdout = "Leap year\n"
//! ```
//!
//! Omitted sections take their defaults. Loading validates everything at
//! once and reports every violation in one error.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::assess::Rubric;
use crate::blackbox::{NormalizationPolicy, TestCase, DEFAULT_OUTPUT_CAP};
use crate::build::{default_source_extensions, CompilerProfile, WorkingDirPolicy, DEFAULT_COMPILE_TIMEOUT};
use crate::ingest::ExtractionLimits;
use crate::lexcheck::{Polarity, RuleSpec};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: invalid assignment spec:\n  - {}", violations.join("\n  - "))]
    Validation {
        path: PathBuf,
        violations: Vec<String>,
    },
}

/// Everything needed to grade one assignment.
#[derive(Debug, Clone)]
pub struct AssignmentSpec {
    pub assignment_number: u32,
    pub compiler: CompilerProfile,
    pub rules: Vec<RuleSpec>,
    pub tests: Vec<TestCase>,
    pub rubric: Rubric,
    pub normalization: NormalizationPolicy,
    pub extraction: ExtractionLimits,
    pub output_cap: usize,
}

impl AssignmentSpec {
    /// Defaults for everything but the rules and tests.
    pub fn new(assignment_number: u32, rules: Vec<RuleSpec>, tests: Vec<TestCase>) -> Self {
        AssignmentSpec {
            assignment_number,
            compiler: CompilerProfile::default(),
            rules,
            tests,
            rubric: Rubric::default(),
            normalization: NormalizationPolicy::default(),
            extraction: ExtractionLimits::default(),
            output_cap: DEFAULT_OUTPUT_CAP,
        }
    }

    /// Checks the invariants patterns cannot: ids, weights, limits.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rules.is_empty() && self.tests.is_empty() {
            out.push("at least one rule or test is required".to_owned());
        }
        out.extend(self.compiler.violations());
        out.extend(self.rubric.violations());
        out.extend(self.extraction.violations());
        if self.output_cap == 0 {
            out.push("output_cap must be positive".to_owned());
        }

        let mut ids = HashSet::new();
        for rule in &self.rules {
            if rule.rule_id.is_empty() {
                out.push("a rule has an empty rule_id".to_owned());
            } else if !ids.insert(rule.rule_id.as_str()) {
                out.push(format!("duplicate rule_id `{}`", rule.rule_id));
            }
            if !(rule.weight.is_finite() && rule.weight >= 0.0) {
                out.push(format!("rule `{}`: weight must be non-negative", rule.rule_id));
            }
        }
        let mut ids = HashSet::new();
        for test in &self.tests {
            if test.test_id.is_empty() {
                out.push("a test has an empty test_id".to_owned());
            } else if !ids.insert(test.test_id.as_str()) {
                out.push(format!("duplicate test_id `{}`", test.test_id));
            }
            if !(test.weight.is_finite() && test.weight >= 0.0) {
                out.push(format!("test `{}`: weight must be non-negative", test.test_id));
            }
            if test.timeout.is_zero() {
                out.push(format!("test `{}`: timeout must be positive", test.test_id));
            }
        }
        out
    }

    /// Parses and validates spec text. Relative `expected_stdout_file`
    /// paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, origin: &Path, base_dir: &Path) -> Result<Self, SpecError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_col(text, span.start))
                .unwrap_or((0, 0));
            SpecError::Parse {
                path: origin.to_path_buf(),
                line,
                column,
                message: e.message().to_owned(),
            }
        })?;
        raw.into_spec(origin, base_dir)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Reads, parses and fully validates an assignment spec file.
pub fn load_assignment_spec(path: impl AsRef<Path>) -> Result<AssignmentSpec, SpecError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    AssignmentSpec::from_toml_str(&text, path, base)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    assignment_number: u32,
    #[serde(default)]
    compiler: RawCompiler,
    #[serde(default)]
    rules: Vec<RawRule>,
    #[serde(default)]
    tests: Vec<RawTest>,
    #[serde(default)]
    rubric: Rubric,
    #[serde(default)]
    normalization: NormalizationPolicy,
    #[serde(default)]
    extraction: ExtractionLimits,
    #[serde(default = "default_output_cap")]
    output_cap: usize,
}

fn default_output_cap() -> usize {
    DEFAULT_OUTPUT_CAP
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawCompiler {
    command: Vec<String>,
    timeout_secs: f64,
    working_dir: WorkingDirPolicy,
    source_extensions: Vec<String>,
}

impl Default for RawCompiler {
    fn default() -> Self {
        let profile = CompilerProfile::default();
        RawCompiler {
            command: profile.command_template,
            timeout_secs: DEFAULT_COMPILE_TIMEOUT.as_secs_f64(),
            working_dir: profile.working_dir,
            source_extensions: default_source_extensions(),
        }
    }
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn five() -> f64 {
    5.0
}

fn must_match() -> Polarity {
    Polarity::MustMatch
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    rule_id: String,
    #[serde(default)]
    description: String,
    pattern: String,
    #[serde(default = "must_match")]
    polarity: Polarity,
    #[serde(default = "yes")]
    strip_comments: bool,
    #[serde(default = "yes")]
    strip_strings: bool,
    #[serde(default = "one")]
    weight: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTest {
    test_id: String,
    #[serde(default)]
    stdin: String,
    #[serde(default)]
    args: Vec<String>,
    expected_stdout: Option<String>,
    expected_stdout_file: Option<PathBuf>,
    #[serde(default = "five")]
    timeout_secs: f64,
    #[serde(default = "one")]
    weight: f64,
}

fn seconds(value: f64, what: &str, violations: &mut Vec<String>) -> Duration {
    if value.is_finite() && value > 0.0 && value < 1e9 {
        Duration::from_secs_f64(value)
    } else {
        violations.push(format!("{what} must be a positive number of seconds, got {value}"));
        Duration::ZERO
    }
}

impl RawSpec {
    fn into_spec(self, origin: &Path, base_dir: &Path) -> Result<AssignmentSpec, SpecError> {
        let mut violations = Vec::new();

        let compiler = CompilerProfile {
            command_template: self.compiler.command,
            timeout: seconds(self.compiler.timeout_secs, "compiler.timeout_secs", &mut violations),
            working_dir: self.compiler.working_dir,
            source_extensions: self.compiler.source_extensions,
        };
        // Zero timeouts were already reported above.
        let compiler = if compiler.timeout.is_zero() {
            CompilerProfile {
                timeout: DEFAULT_COMPILE_TIMEOUT,
                ..compiler
            }
        } else {
            compiler
        };

        let mut rules = Vec::with_capacity(self.rules.len());
        for raw in self.rules {
            match RuleSpec::new(raw.rule_id.clone(), &raw.pattern, raw.polarity) {
                Ok(rule) => rules.push(
                    rule.with_description(raw.description)
                        .with_weight(raw.weight)
                        .with_stripping(raw.strip_comments, raw.strip_strings),
                ),
                Err(e) => violations.push(e.to_string()),
            }
        }

        let mut tests = Vec::with_capacity(self.tests.len());
        for raw in self.tests {
            let expected = match (raw.expected_stdout, raw.expected_stdout_file) {
                (Some(text), None) => text,
                (None, Some(file)) => {
                    let path = base_dir.join(&file);
                    match fs::read_to_string(&path) {
                        Ok(text) => text,
                        Err(e) => {
                            violations.push(format!(
                                "test `{}`: cannot read expected_stdout_file {}: {e}",
                                raw.test_id,
                                path.display()
                            ));
                            String::new()
                        }
                    }
                }
                (Some(_), Some(_)) => {
                    violations.push(format!(
                        "test `{}`: set only one of expected_stdout and expected_stdout_file",
                        raw.test_id
                    ));
                    String::new()
                }
                (None, None) => {
                    violations.push(format!(
                        "test `{}`: expected_stdout or expected_stdout_file is required",
                        raw.test_id
                    ));
                    String::new()
                }
            };
            let timeout = seconds(raw.timeout_secs, &format!("test `{}`: timeout_secs", raw.test_id), &mut violations);
            tests.push(TestCase {
                test_id: raw.test_id,
                stdin_text: raw.stdin,
                args: raw.args,
                expected_stdout: expected,
                timeout: if timeout.is_zero() { Duration::from_secs(1) } else { timeout },
                weight: raw.weight,
            });
        }

        let spec = AssignmentSpec {
            assignment_number: self.assignment_number,
            compiler,
            rules,
            tests,
            rubric: self.rubric,
            normalization: self.normalization,
            extraction: self.extraction,
            output_cap: self.output_cap,
        };
        violations.extend(spec.violations());
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(SpecError::Validation {
                path: origin.to_path_buf(),
                violations,
            })
        }
    }
}
