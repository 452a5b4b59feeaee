//! The hybrid verdict: compile, lexical and black-box sections fused into a
//! weighted score, plus report rendering and the grading log.

mod log;
mod report;

use serde::{Deserialize, Serialize};

use crate::blackbox::BlackboxSection;
use crate::build::{CompileResult, Severity};
use crate::lexcheck::LexicalSection;

pub use log::{read_events, EventKind, GradingLog, LogError, LogEvent};
pub use report::{initialize_report, render_report, AssessmentReport, RenderedReport, ReportStatus};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A report section that may not have been reached.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Section<T> {
    #[default]
    NotRun,
    Done(T),
}

impl<T> Section<T> {
    pub fn as_ref(&self) -> Option<&T> {
        match self {
            Section::NotRun => None,
            Section::Done(value) => Some(value),
        }
    }

    pub fn is_run(&self) -> bool {
        matches!(self, Section::Done(_))
    }
}

impl<T> From<Option<T>> for Section<T> {
    fn from(value: Option<T>) -> Self {
        value.map_or(Section::NotRun, Section::Done)
    }
}

/// How section results become a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rubric {
    /// A failed compile scores zero.
    pub compile_gate: bool,
    pub lexical_weight: f64,
    pub blackbox_weight: f64,
    pub scale: f64,
    /// Deduct `warning_penalty` points per compiler warning.
    pub warnings_penalize: bool,
    pub warning_penalty: f64,
}

impl Default for Rubric {
    fn default() -> Self {
        Rubric {
            compile_gate: true,
            lexical_weight: 0.3,
            blackbox_weight: 0.7,
            scale: 100.0,
            warnings_penalize: false,
            warning_penalty: 1.0,
        }
    }
}

impl Rubric {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, w) in [
            ("lexical_weight", self.lexical_weight),
            ("blackbox_weight", self.blackbox_weight),
        ] {
            if !(0.0..=1.0).contains(&w) {
                out.push(format!("rubric.{name} must be within [0, 1], got {w}"));
            }
        }
        let sum = self.lexical_weight + self.blackbox_weight;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            out.push(format!("rubric weights must sum to 1, got {sum}"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            out.push(format!("rubric.scale must be positive, got {}", self.scale));
        }
        if !(self.warning_penalty.is_finite() && self.warning_penalty >= 0.0) {
            out.push(format!(
                "rubric.warning_penalty must be non-negative, got {}",
                self.warning_penalty
            ));
        }
        out
    }
}

/// Weighted score in `[0, rubric.scale]`.
///
/// Each section contributes its weight times the satisfied (or passed) share
/// of its own item weights; an empty section contributes its full weight.
/// Tests that never ran earn nothing.
pub fn score_submission(
    compile: &CompileResult,
    lexical: &LexicalSection,
    blackbox: Option<&BlackboxSection>,
    rubric: &Rubric,
) -> f64 {
    if rubric.compile_gate && !compile.succeeded {
        return 0.0;
    }
    let blackbox_fraction = blackbox.map_or(0.0, BlackboxSection::fraction);
    let mut score = rubric.scale
        * (rubric.lexical_weight * lexical.fraction() + rubric.blackbox_weight * blackbox_fraction);
    if rubric.warnings_penalize {
        score -= rubric.warning_penalty * compile.count(Severity::Warning) as f64;
    }
    score.clamp(0.0, rubric.scale)
}
