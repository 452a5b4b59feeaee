//! Compilation of an extracted workspace through an external compiler.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walk::source_files;

use crate::process;

pub const SOURCES_PLACEHOLDER: &str = "{sources}";
pub const OUTPUT_PLACEHOLDER: &str = "{output}";
/// Executable name inside the workspace.
pub const EXECUTABLE_NAME: &str = "submission.out";
pub const DEFAULT_COMPILE_TIMEOUT: Duration = Duration::from_secs(30);
const DIAGNOSTIC_CAP: usize = 1024 * 1024;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("compiler `{0}` not found")]
    CompilerNotFound(String),
    #[error("could not start compiler `{program}`: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("cannot list workspace {path}: {source}")]
    Workspace {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkingDirPolicy {
    /// Run the compiler inside the submission workspace.
    #[default]
    Workspace,
}

/// How to turn a workspace into an executable.
#[derive(Debug, Clone, PartialEq)]
pub struct CompilerProfile {
    /// Argument tokens; `{sources}` expands to every source path (as its own
    /// token), `{output}` to the executable path.
    pub command_template: Vec<String>,
    pub timeout: Duration,
    pub working_dir: WorkingDirPolicy,
    /// Files handed to the compiler, matched case-insensitively.
    pub source_extensions: Vec<String>,
}

impl Default for CompilerProfile {
    fn default() -> Self {
        CompilerProfile {
            command_template: ["g++", "-std=c++17", "-Wall", "{sources}", "-o", "{output}"]
                .into_iter()
                .map(String::from)
                .collect(),
            timeout: DEFAULT_COMPILE_TIMEOUT,
            working_dir: WorkingDirPolicy::Workspace,
            source_extensions: default_source_extensions(),
        }
    }
}

pub fn default_source_extensions() -> Vec<String> {
    [".cpp", ".cc", ".cxx", ".c"].into_iter().map(String::from).collect()
}

impl CompilerProfile {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.command_template.is_empty() {
            out.push("compiler.command must not be empty".to_owned());
        } else if self.command_template[0].contains('{') {
            out.push("compiler.command must start with a program, not a placeholder".to_owned());
        }
        let count = |needle: &str| {
            self.command_template
                .iter()
                .map(|t| t.matches(needle).count())
                .sum::<usize>()
        };
        if count(SOURCES_PLACEHOLDER) != 1 {
            out.push("compiler.command must contain {sources} exactly once".to_owned());
        } else if !self.command_template.iter().any(|t| t == SOURCES_PLACEHOLDER) {
            out.push("compiler.command: {sources} must be a token on its own".to_owned());
        }
        if count(OUTPUT_PLACEHOLDER) != 1 {
            out.push("compiler.command must contain {output} exactly once".to_owned());
        }
        if self.timeout.is_zero() {
            out.push("compiler.timeout_secs must be positive".to_owned());
        }
        if self.source_extensions.is_empty() {
            out.push("compiler.source_extensions must not be empty".to_owned());
        }
        out
    }

    /// Expands the template for `sources` (relative to the workspace).
    pub fn render_command(&self, sources: &[PathBuf], output: &Path) -> Vec<String> {
        let output = output.to_string_lossy();
        let mut args = Vec::with_capacity(self.command_template.len() + sources.len());
        for token in &self.command_template {
            if token == SOURCES_PLACEHOLDER {
                args.extend(sources.iter().map(|s| s.to_string_lossy().into_owned()));
            } else {
                args.push(token.replace(OUTPUT_PLACEHOLDER, &output));
            }
        }
        args
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileResult {
    pub succeeded: bool,
    #[serde(skip)]
    pub executable_path: Option<PathBuf>,
    pub exit_code: i32,
    pub timed_out: bool,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip)]
    pub duration: Duration,
}

impl CompileResult {
    pub fn count(&self, severity: Severity) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == severity).count()
    }

    /// Diagnostic lines joined back into the compiler's output.
    pub fn raw_output(&self) -> String {
        self.diagnostics
            .iter()
            .map(|d| d.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

static ERROR_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\berror\b").unwrap());
static WARNING_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bwarning\b").unwrap());

/// Splits compiler output into one diagnostic per line.
///
/// A line containing the word `error` is an error, else one containing
/// `warning` is a warning, else a note. Blank lines are kept as notes so the
/// joined texts reproduce the input (minus one trailing newline).
pub fn classify_diagnostics(raw_output: &str) -> Vec<Diagnostic> {
    raw_output
        .split_terminator('\n')
        .map(|line| {
            let severity = if ERROR_TOKEN.is_match(line) {
                Severity::Error
            } else if WARNING_TOKEN.is_match(line) {
                Severity::Warning
            } else {
                Severity::Note
            };
            Diagnostic {
                severity,
                text: line.to_owned(),
            }
        })
        .collect()
}

mod walk {
    use std::fs;
    use std::io;
    use std::path::{Path, PathBuf};

    /// Files under `root` whose extension is in `extensions`, as sorted
    /// paths relative to `root`.
    pub fn source_files(root: &Path, extensions: &[String]) -> io::Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let mut stack = vec![PathBuf::new()];
        while let Some(rel) = stack.pop() {
            for entry in fs::read_dir(root.join(&rel))? {
                let entry = entry?;
                let kind = entry.file_type()?;
                let child = rel.join(entry.file_name());
                if kind.is_dir() {
                    stack.push(child);
                } else if kind.is_file() && matches_extension(&child, extensions) {
                    out.push(child);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn matches_extension(path: &Path, extensions: &[String]) -> bool {
        path.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|ext| {
                extensions
                    .iter()
                    .any(|want| want.trim_start_matches('.').eq_ignore_ascii_case(ext))
            })
    }
}

pub use walk::source_files as find_sources;

fn failed(diagnostics: Vec<Diagnostic>, exit_code: i32, timed_out: bool, duration: Duration) -> CompileResult {
    CompileResult {
        succeeded: false,
        executable_path: None,
        exit_code,
        timed_out,
        diagnostics,
        duration,
    }
}

/// Compiles every source file in `workspace` into `workspace/submission.out`.
///
/// A broken program yields `Ok` with `succeeded == false` and at least one
/// error diagnostic. `Err` is an environment fault, e.g. a missing compiler.
pub fn compile_workspace(workspace: &Path, profile: &CompilerProfile) -> Result<CompileResult, BuildError> {
    let sources = source_files(workspace, &profile.source_extensions).map_err(|source| {
        BuildError::Workspace {
            path: workspace.to_path_buf(),
            source,
        }
    })?;
    if sources.is_empty() {
        let exts = profile.source_extensions.join(", ");
        return Ok(failed(
            vec![Diagnostic {
                severity: Severity::Error,
                text: format!("error: no source files ({exts}) found in submission"),
            }],
            -1,
            false,
            Duration::ZERO,
        ));
    }

    let executable = workspace.join(EXECUTABLE_NAME);
    let _ = std::fs::remove_file(&executable);
    let args = profile.render_command(&sources, Path::new(EXECUTABLE_NAME));
    let program = args[0].clone();
    let mut command = Command::new(&program);
    command.args(&args[1..]);
    match profile.working_dir {
        WorkingDirPolicy::Workspace => {
            command.current_dir(workspace);
        }
    }

    let limits = process::Limits {
        timeout: profile.timeout,
        stdout_cap: DIAGNOSTIC_CAP,
        stderr_cap: DIAGNOSTIC_CAP,
    };
    let outcome = match process::run(&mut command, None, &limits, true) {
        Ok(outcome) => outcome,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(BuildError::CompilerNotFound(program));
        }
        Err(source) => return Err(BuildError::Spawn { program, source }),
    };

    let raw = String::from_utf8_lossy(&outcome.stdout);
    let mut diagnostics = classify_diagnostics(&raw);
    let exit_code = outcome.exit_code().unwrap_or(-1);

    if outcome.timed_out {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            text: format!(
                "error: compilation timed out after {:.1}s",
                profile.timeout.as_secs_f64()
            ),
        });
        return Ok(failed(diagnostics, exit_code, true, outcome.duration));
    }
    if outcome.overflowed {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            text: format!("error: compiler output exceeded {DIAGNOSTIC_CAP} bytes"),
        });
        return Ok(failed(diagnostics, exit_code, false, outcome.duration));
    }

    let succeeded = exit_code == 0 && executable.is_file();
    if !succeeded {
        if !diagnostics.iter().any(|d| d.severity == Severity::Error) {
            let text = if exit_code == 0 {
                "error: compiler reported success but produced no executable".to_owned()
            } else {
                format!("error: compiler exited with status {exit_code}")
            };
            diagnostics.push(Diagnostic {
                severity: Severity::Error,
                text,
            });
        }
        return Ok(failed(diagnostics, exit_code, false, outcome.duration));
    }

    Ok(CompileResult {
        succeeded: true,
        executable_path: Some(executable),
        exit_code,
        timed_out: false,
        diagnostics,
        duration: outcome.duration,
    })
}
