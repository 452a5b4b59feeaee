//! Submission archive naming: `FirstName_LastName_AssignmentNumber.zip`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Why a filename could not be read as a submission identity.
///
/// Each variant has a stable machine-readable code used in quarantine
/// reasons and report records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum MalformedName {
    #[error("file name does not end in .zip")]
    MissingExtension,
    #[error("expected exactly three underscore-separated fields")]
    WrongFieldCount,
    #[error("a name field is empty")]
    EmptyField,
    #[error("assignment number is not a non-negative integer")]
    NonNumericAssignment,
    #[error("name fields may only contain letters, hyphens and apostrophes")]
    InvalidCharacters,
}

impl MalformedName {
    pub fn code(self) -> &'static str {
        match self {
            MalformedName::MissingExtension => "missing-extension",
            MalformedName::WrongFieldCount => "wrong-field-count",
            MalformedName::EmptyField => "empty-field",
            MalformedName::NonNumericAssignment => "non-numeric-assignment",
            MalformedName::InvalidCharacters => "invalid-characters",
        }
    }
}

/// Student and assignment parsed from an archive name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubmissionIdentity {
    pub first_name: String,
    pub last_name: String,
    pub assignment_number: u32,
}

impl SubmissionIdentity {
    /// Builds an identity, applying the same field rules as filename parsing.
    pub fn new(
        first_name: impl Into<String>,
        last_name: impl Into<String>,
        assignment_number: u32,
    ) -> Result<Self, MalformedName> {
        let first_name = first_name.into();
        let last_name = last_name.into();
        check_name_field(&first_name)?;
        check_name_field(&last_name)?;
        Ok(SubmissionIdentity {
            first_name,
            last_name,
            assignment_number,
        })
    }

    /// `First_Last_N`, the filename stem this identity was (or would be) parsed from.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}",
            self.first_name, self.last_name, self.assignment_number
        )
    }

    /// Display name, e.g. "John Doe".
    pub fn student(&self) -> String {
        format!("{} {}", self.first_name, self.last_name)
    }
}

impl fmt::Display for SubmissionIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem())
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphabetic() || c == '-' || c == '\''
}

fn check_name_field(field: &str) -> Result<(), MalformedName> {
    if field.is_empty() {
        return Err(MalformedName::EmptyField);
    }
    if field.contains('_') {
        return Err(MalformedName::WrongFieldCount);
    }
    if !field.chars().all(is_name_char) {
        return Err(MalformedName::InvalidCharacters);
    }
    Ok(())
}

/// Parses `<First>_<Last>_<N>.zip`. The extension is matched
/// case-insensitively; name fields keep their original casing.
pub fn parse_submission_filename(name: &str) -> Result<SubmissionIdentity, MalformedName> {
    if name.contains('/') || name.contains('\\') {
        return Err(MalformedName::InvalidCharacters);
    }
    let stem = match name.len().checked_sub(4) {
        Some(split)
            if name.is_char_boundary(split) && name[split..].eq_ignore_ascii_case(".zip") =>
        {
            &name[..split]
        }
        _ => return Err(MalformedName::MissingExtension),
    };

    let fields: Vec<&str> = stem.split('_').collect();
    let [first, last, number] = fields[..] else {
        return Err(MalformedName::WrongFieldCount);
    };
    if first.is_empty() || last.is_empty() || number.is_empty() {
        return Err(MalformedName::EmptyField);
    }
    check_name_field(first)?;
    check_name_field(last)?;
    if !number.bytes().all(|b| b.is_ascii_digit()) {
        return Err(MalformedName::NonNumericAssignment);
    }
    let assignment_number = number
        .parse::<u32>()
        .map_err(|_| MalformedName::NonNumericAssignment)?;

    Ok(SubmissionIdentity {
        first_name: first.to_owned(),
        last_name: last.to_owned(),
        assignment_number,
    })
}
