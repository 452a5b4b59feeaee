//! Regex-based structural checks on student source.
//!
//! Source text is first preprocessed so comments and string literals cannot
//! produce (or hide) a match, then each rule's pattern is searched anywhere
//! in the whole file. A rule either has to match (`MustMatch`) or must not
//! (`MustNotMatch`).

use std::path::PathBuf;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Outer `if`/`else` whose `if` branch contains a complete inner `if`/`else`.
///
/// Written across lines the way instructors usually lay it out; the layout
/// whitespace is removed by [`normalize_pattern`].
pub const NESTED_BRANCH_PATTERN: &str = r"if\s*\([\s\S]*\)\s*\{[\s\S]*
    if\s*\([\s\S]*\)\s*\{[\s\S]*\}\s*
    else\s*\{[\s\S]*\}\s*\}\s*
else\s*\{[\s\S]*\}";

#[derive(Debug, Error)]
#[error("rule `{rule_id}`: invalid pattern: {source}")]
pub struct PatternCompileError {
    pub rule_id: String,
    #[source]
    pub source: regex::Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    MustMatch,
    MustNotMatch,
}

/// A structural constraint with its pattern already compiled.
#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub rule_id: String,
    pub description: String,
    /// Pattern as written in the assignment file.
    pub pattern_source: String,
    pub polarity: Polarity,
    pub strip_comments: bool,
    pub strip_strings: bool,
    pub weight: f64,
    regex: Regex,
}

impl RuleSpec {
    /// Compiles `pattern` after [`normalize_pattern`].
    pub fn new(
        rule_id: impl Into<String>,
        pattern: &str,
        polarity: Polarity,
    ) -> Result<Self, PatternCompileError> {
        let rule_id = rule_id.into();
        let regex = Regex::new(&normalize_pattern(pattern)).map_err(|source| PatternCompileError {
            rule_id: rule_id.clone(),
            source,
        })?;
        Ok(RuleSpec {
            rule_id,
            description: String::new(),
            pattern_source: pattern.to_owned(),
            polarity,
            strip_comments: true,
            strip_strings: true,
            weight: 1.0,
            regex,
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_stripping(mut self, comments: bool, strings: bool) -> Self {
        self.strip_comments = comments;
        self.strip_strings = strings;
        self
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

/// Removes layout whitespace from a pattern written across several lines.
///
/// Line breaks, the indentation that follows them and the whitespace that
/// precedes them are dropped; whitespace escaped with a backslash stays.
/// Single-line patterns are returned unchanged.
pub fn normalize_pattern(pattern: &str) -> String {
    if !pattern.contains('\n') && !pattern.contains('\r') {
        return pattern.to_owned();
    }
    let lines: Vec<&str> = pattern.split('\n').collect();
    let last = lines.len() - 1;
    let mut out = String::with_capacity(pattern.len());
    for (i, line) in lines.iter().enumerate() {
        let mut line = line.strip_suffix('\r').unwrap_or(line);
        if i > 0 {
            line = line.trim_start();
        }
        if i < last {
            line = trim_unescaped_end(line);
        }
        out.push_str(line);
    }
    out
}

fn trim_unescaped_end(line: &str) -> &str {
    let trimmed = line.trim_end();
    if trimmed.len() == line.len() {
        return line;
    }
    let backslashes = trimmed.bytes().rev().take_while(|&b| b == b'\\').count();
    if backslashes % 2 == 1 {
        // Keep the one escaped whitespace character.
        let ws = line[trimmed.len()..].chars().next().unwrap();
        &line[..trimmed.len() + ws.len_utf8()]
    } else {
        trimmed
    }
}

/// Problems found while preprocessing; the text is still usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreprocessWarning {
    UnterminatedBlockComment,
    UnterminatedString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub text: String,
    pub warnings: Vec<PreprocessWarning>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scan {
    Code,
    LineComment,
    BlockComment,
    Literal(char),
}

/// Blanks comments and string/char literal contents.
///
/// A comment becomes one space (a block comment also keeps its newlines); a
/// literal keeps its quotes and its contents become one space. Regions left
/// open at end of input are stripped to the end and reported as warnings.
pub fn preprocess_source(text: &str, strip_comments: bool, strip_strings: bool) -> Preprocessed {
    let mut out = String::with_capacity(text.len());
    let mut warnings = Vec::new();
    let mut state = Scan::Code;
    // Literal contents are buffered so they can be kept or dropped wholesale.
    let mut literal = String::new();
    let mut prev_code: Option<char> = None;
    let mut chars = text.chars().peekable();

    while let Some(c) = chars.next() {
        match state {
            Scan::Code => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    state = Scan::LineComment;
                    if strip_comments {
                        out.push(' ');
                    } else {
                        out.push_str("//");
                    }
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    state = Scan::BlockComment;
                    if strip_comments {
                        out.push(' ');
                    } else {
                        out.push_str("/*");
                    }
                }
                // A quote after an identifier or digit is a C++14 digit
                // separator (1'000'000), not a character literal.
                '\'' if prev_code.is_some_and(|p| p.is_ascii_alphanumeric()) => {
                    out.push(c);
                    prev_code = Some(c);
                }
                '"' | '\'' => {
                    state = Scan::Literal(c);
                    literal.clear();
                    out.push(c);
                }
                _ => {
                    out.push(c);
                    prev_code = Some(c);
                }
            },
            Scan::LineComment => {
                if c == '\n' {
                    out.push('\n');
                    state = Scan::Code;
                    prev_code = None;
                } else if !strip_comments {
                    out.push(c);
                }
            }
            Scan::BlockComment => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    if !strip_comments {
                        out.push_str("*/");
                    }
                    state = Scan::Code;
                    prev_code = None;
                } else if c == '\n' || !strip_comments {
                    out.push(c);
                }
            }
            Scan::Literal(quote) => {
                if c == '\\' {
                    literal.push(c);
                    if let Some(next) = chars.next() {
                        literal.push(next);
                    }
                } else if c == quote {
                    flush_literal(&mut out, &literal, strip_strings);
                    out.push(c);
                    state = Scan::Code;
                    prev_code = None;
                } else {
                    literal.push(c);
                }
            }
        }
    }

    match state {
        Scan::BlockComment => warnings.push(PreprocessWarning::UnterminatedBlockComment),
        Scan::Literal(_) => {
            flush_literal(&mut out, &literal, strip_strings);
            warnings.push(PreprocessWarning::UnterminatedString);
        }
        Scan::Code | Scan::LineComment => {}
    }
    Preprocessed { text: out, warnings }
}

fn flush_literal(out: &mut String, contents: &str, strip: bool) {
    if !strip {
        out.push_str(contents);
    } else if !contents.is_empty() {
        out.push(' ');
    }
}

/// Byte span of a match in preprocessed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpan {
    /// Source file, relative to the workspace, when evaluating a file set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub file: Option<PathBuf>,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule_id: String,
    pub satisfied: bool,
    /// Present iff the pattern matched, whatever the polarity.
    pub first_match: Option<MatchSpan>,
    /// SHA-256 of the preprocessed text the rule was evaluated against.
    pub evaluated_against: String,
}

fn digest(parts: &[(&str, &str)]) -> String {
    let mut hasher = Sha256::new();
    for (name, text) in parts {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hasher.update([0u8]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn satisfied(polarity: Polarity, matched: bool) -> bool {
    match polarity {
        Polarity::MustMatch => matched,
        Polarity::MustNotMatch => !matched,
    }
}

/// Evaluates one rule against one source text.
pub fn evaluate_rule(source: &str, rule: &RuleSpec) -> RuleResult {
    let pre = preprocess_source(source, rule.strip_comments, rule.strip_strings);
    let first_match = rule.regex.find(&pre.text).map(|m| MatchSpan {
        file: None,
        start: m.start(),
        end: m.end(),
    });
    RuleResult {
        rule_id: rule.rule_id.clone(),
        satisfied: satisfied(rule.polarity, first_match.is_some()),
        first_match,
        evaluated_against: digest(&[("", &pre.text)]),
    }
}

/// One evaluated rule together with the parts of its spec a report needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleVerdict {
    #[serde(flatten)]
    pub result: RuleResult,
    pub description: String,
    pub polarity: Polarity,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FileWarning {
    pub file: PathBuf,
    pub warnings: Vec<PreprocessWarning>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LexicalSection {
    pub rules: Vec<RuleVerdict>,
    pub warnings: Vec<FileWarning>,
}

impl LexicalSection {
    pub fn total_weight(&self) -> f64 {
        self.rules.iter().fold(0.0, |sum, r| sum + r.weight)
    }

    pub fn satisfied_weight(&self) -> f64 {
        self.rules
            .iter()
            .filter(|r| r.result.satisfied)
            .fold(0.0, |sum, r| sum + r.weight)
    }

    /// Satisfied share of rule weight; an empty or weightless rule set passes.
    pub fn fraction(&self) -> f64 {
        let total = self.total_weight();
        if total > 0.0 {
            self.satisfied_weight() / total
        } else {
            1.0
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.rules.iter().all(|r| r.result.satisfied)
    }
}

/// Evaluates every rule over a set of files.
///
/// `MustMatch` is satisfied by a match in any file, `MustNotMatch` only by
/// the absence of a match in every file. The reported span is the first
/// match in file order.
pub fn evaluate_ruleset(sources: &[(PathBuf, String)], rules: &[RuleSpec]) -> LexicalSection {
    let mut section = LexicalSection::default();
    // Preprocessed text depends only on the two strip flags.
    let mut cache: Vec<((bool, bool), Vec<Preprocessed>)> = Vec::new();

    for rule in rules {
        let flags = (rule.strip_comments, rule.strip_strings);
        let index = match cache.iter().position(|(f, _)| *f == flags) {
            Some(i) => i,
            None => {
                let texts = sources
                    .iter()
                    .map(|(_, text)| preprocess_source(text, flags.0, flags.1))
                    .collect();
                cache.push((flags, texts));
                cache.len() - 1
            }
        };
        let texts = &cache[index].1;

        let first_match = sources.iter().zip(texts).find_map(|((path, _), pre)| {
            rule.regex.find(&pre.text).map(|m| MatchSpan {
                file: Some(path.clone()),
                start: m.start(),
                end: m.end(),
            })
        });
        let parts: Vec<(String, &str)> = sources
            .iter()
            .zip(texts)
            .map(|((path, _), pre)| (path.to_string_lossy().into_owned(), pre.text.as_str()))
            .collect();
        let parts: Vec<(&str, &str)> = parts.iter().map(|(p, t)| (p.as_str(), *t)).collect();

        section.rules.push(RuleVerdict {
            result: RuleResult {
                rule_id: rule.rule_id.clone(),
                satisfied: satisfied(rule.polarity, first_match.is_some()),
                first_match,
                evaluated_against: digest(&parts),
            },
            description: rule.description.clone(),
            polarity: rule.polarity,
            weight: rule.weight,
        });
    }

    // Warnings are reported for the strictest preprocessing used.
    for (path, text) in sources {
        let pre = preprocess_source(text, true, true);
        if !pre.warnings.is_empty() {
            section.warnings.push(FileWarning {
                file: path.clone(),
                warnings: pre.warnings,
            });
        }
    }
    section
}
