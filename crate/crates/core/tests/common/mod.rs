#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use zip::write::SimpleFileOptions;
use zip::ZipWriter;

pub const LEAP_KINDS: [&str; 4] = ["nested", "flat", "broken", "infinite"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn leap_spec_path() -> PathBuf {
    fixtures().join("leap_year/spec.toml")
}

pub fn leap_source(kind: &str) -> String {
    fs::read_to_string(fixtures().join("leap_year").join(kind).join("main.cpp")).unwrap()
}

/// Gregorian calendar rule, written independently of any fixture.
pub fn is_leap(year: i64) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn leap_answer(year: i64) -> &'static str {
    if is_leap(year) {
        "Leap year"
    } else {
        "Common year"
    }
}

pub fn write_zip(path: &Path, entries: &[(&str, &[u8])]) {
    let mut zip = ZipWriter::new(fs::File::create(path).unwrap());
    for (name, bytes) in entries {
        zip.start_file(*name, SimpleFileOptions::default()).unwrap();
        zip.write_all(bytes).unwrap();
    }
    zip.finish().unwrap();
}

pub fn zip_bytes(entries: &[(&str, &[u8])]) -> Vec<u8> {
    let mut zip = ZipWriter::new(std::io::Cursor::new(Vec::new()));
    for (name, bytes) in entries {
        zip.start_file(*name, SimpleFileOptions::default()).unwrap();
        zip.write_all(bytes).unwrap();
    }
    zip.finish().unwrap().into_inner()
}

/// Archive name for a leap-year fixture kind, e.g. `Nested_Student_3.zip`.
pub fn leap_archive_name(kind: &str) -> String {
    let mut first = kind.to_owned();
    first[..1].make_ascii_uppercase();
    format!("{first}_Student_3.zip")
}

pub fn write_leap_archive(dir: &Path, kind: &str) -> PathBuf {
    let path = dir.join(leap_archive_name(kind));
    write_zip(&path, &[("main.cpp", leap_source(kind).as_bytes())]);
    path
}

/// Every `.cpp` file under `fixtures/`, sorted.
pub fn fixture_sources() -> Vec<(PathBuf, String)> {
    fn walk(dir: &Path, out: &mut Vec<(PathBuf, String)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, out);
            } else if path.extension().is_some_and(|e| e == "cpp") {
                let text = fs::read_to_string(&path).unwrap();
                out.push((path, text));
            }
        }
    }
    let mut out = Vec::new();
    walk(&fixtures(), &mut out);
    out.sort();
    out
}

pub fn grader_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-grader"))
}

/// Replaces the values of the two timestamp keys that legitimately differ
/// between runs.
pub fn mask_timestamps(json: &str) -> String {
    json.lines()
        .map(|line| {
            let trimmed = line.trim_start();
            if trimmed.starts_with("\"received_at\"") || trimmed.starts_with("\"generated_at\"") {
                let indent = &line[..line.len() - trimmed.len()];
                let key = &trimmed[..trimmed.find(':').unwrap()];
                let comma = if trimmed.ends_with(',') { "," } else { "" };
                format!("{indent}{key}: \"<masked>\"{comma}")
            } else {
                line.to_owned()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
