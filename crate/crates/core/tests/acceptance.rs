//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that each criterion reports exactly
//! once, in order, even when an earlier one fails. The process exits non-zero
//! if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{ExitCode, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use hybrid_grader::assess::{read_events, EventKind, Section};
use hybrid_grader::blackbox::{normalize_output, NormalizationPolicy, Verdict};
use hybrid_grader::ingest::{parse_submission_filename, MalformedName, SubmissionIdentity};
use hybrid_grader::lexcheck::{
    evaluate_rule, normalize_pattern, preprocess_source, Polarity, RuleSpec, NESTED_BRANCH_PATTERN,
};
use hybrid_grader::{load_assignment_spec, AssessmentReport, Grader, GradingLog, Layout, ReportStatus};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("leap-year hybrid scenario", leap_year_scenario),
        ("nested-branch pattern matches an independent engine", pattern_oracle),
        ("filename grammar round trip and malformed classes", filename_grammar),
        ("comment insertion leaves rule verdicts unchanged", preprocessing_invariance),
        ("output normalization", normalization),
        ("arbitrary blobs end quarantined or errored", pipeline_fuzz),
        ("batch runs are deterministic", determinism),
        ("watch mode grades and supersedes", watch_liveness),
    ];

    // Keep panic messages out of the summary lines.
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|payload| {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {message}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", n + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {reason}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

struct Scratch {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Scratch {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Scratch { _dir: dir, root }
    }

    fn mkdir(&self, name: &str) -> PathBuf {
        let path = self.root.join(name);
        fs::create_dir_all(&path).unwrap();
        path
    }
}

fn leap_year_scenario() -> Outcome {
    let spec = load_assignment_spec(leap_spec_path()).map_err(|e| e.to_string())?;

    // The spec's expected outputs must agree with the calendar oracle.
    let years: BTreeMap<String, i64> = [("y2000", 2000), ("y1900", 1900), ("y2024", 2024), ("y2023", 2023)]
        .map(|(id, y)| (id.to_owned(), y))
        .into();
    ensure!(spec.tests.len() == 4, "expected 4 tests, found {}", spec.tests.len());
    for test in &spec.tests {
        let year = years[&test.test_id];
        ensure!(test.stdin_text.trim() == year.to_string(), "{} feeds {:?}", test.test_id, test.stdin_text);
        ensure!(
            test.expected_stdout.trim_end() == leap_answer(year),
            "{} expects {:?}, calendar says {:?}",
            test.test_id,
            test.expected_stdout,
            leap_answer(year)
        );
    }
    ensure!(
        normalize_pattern(&spec.rules[0].pattern_source) == normalize_pattern(NESTED_BRANCH_PATTERN),
        "spec rule is not the nested-branch pattern"
    );

    let scratch = Scratch::new();
    let inbox = scratch.mkdir("inbox");
    let log_path = scratch.root.join("grading.log");
    let timeouts: BTreeMap<String, Duration> =
        spec.tests.iter().map(|t| (t.test_id.clone(), t.timeout)).collect();
    let grader = Grader::new(
        spec,
        Layout::new(scratch.root.join("workspace"), scratch.root.join("reports")),
        GradingLog::open(&log_path).map_err(|e| e.to_string())?,
    );

    let started = Instant::now();
    let mut reports = BTreeMap::new();
    for kind in LEAP_KINDS {
        let archive = write_leap_archive(&inbox, kind);
        let report = grader.grade_submission(&archive).map_err(|e| e.to_string())?;
        ensure!(report.status == ReportStatus::Graded, "{kind}: status {:?}", report.status);
        reports.insert(kind, report);
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "corpus took {elapsed:?}");

    let score = |kind: &str| reports[kind].score.unwrap();
    let lexical_ok = |kind: &str| reports[kind].lexical.as_ref().unwrap().all_satisfied();
    let passed = |kind: &str| reports[kind].blackbox.as_ref().map(|b| b.passed());

    ensure!(score("nested") == 100.0, "nested scored {}", score("nested"));

    ensure!(passed("flat") == Some(4), "flat passed {:?} tests", passed("flat"));
    ensure!(!lexical_ok("flat"), "flat satisfied the nested-branch rule");
    ensure!((score("flat") - 70.0).abs() <= 0.01, "flat scored {}", score("flat"));

    ensure!(score("broken") == 0.0, "broken scored {}", score("broken"));
    ensure!(!reports["broken"].blackbox.is_run(), "tests ran for a failed compile");
    let events = read_events(&log_path).map_err(|e| e.to_string())?;
    let diagnostics = events
        .iter()
        .find(|e| e.subject == "Broken_Student_3" && e.kind == EventKind::CompileError)
        .and_then(|e| e.detail["diagnostics"].as_str().map(str::to_owned))
        .unwrap_or_default();
    ensure!(diagnostics.contains("error"), "no compile diagnostics logged: {diagnostics:?}");

    let Section::Done(infinite) = &reports["infinite"].blackbox else {
        return Err("infinite: tests did not run".into());
    };
    for result in &infinite.results {
        let limit = timeouts[&result.test_id] + Duration::from_secs(1);
        ensure!(result.verdict == Verdict::Timeout, "infinite {}: {:?}", result.test_id, result.verdict);
        ensure!(result.duration <= limit, "infinite {} took {:?}", result.test_id, result.duration);
    }

    Ok(format!(
        "scores nested={} flat={} broken={} infinite={}, corpus {:.1}s",
        score("nested"),
        score("flat"),
        score("broken"),
        score("infinite"),
        elapsed.as_secs_f64()
    ))
}

/// The nested-branch pattern joined onto one line by hand, without the crate's
/// pattern normalization.
const ORACLE_PATTERN: &str =
    r"if\s*\([\s\S]*\)\s*\{[\s\S]*if\s*\([\s\S]*\)\s*\{[\s\S]*\}\s*else\s*\{[\s\S]*\}\s*\}\s*else\s*\{[\s\S]*\}";

/// Match outcomes computed with a third engine (Python `re`) when the corpus
/// was written. `nested/07` is nested code that the pattern does not accept:
/// the inner if/else must close the outer branch.
const FROZEN_LABELS: [(&str, bool); 20] = [
    ("flat/01_fig1.cpp", false),
    ("flat/02_single_if_else.cpp", false),
    ("flat/03_two_siblings.cpp", false),
    ("flat/04_inner_no_else.cpp", false),
    ("flat/05_outer_no_else.cpp", false),
    ("flat/06_ternary.cpp", false),
    ("flat/07_else_if_chain.cpp", false),
    ("flat/08_switch.cpp", false),
    ("flat/09_no_branch.cpp", false),
    ("flat/10_nested_while.cpp", false),
    ("nested/01_leap.cpp", true),
    ("nested/02_compact.cpp", true),
    ("nested/03_three_levels.cpp", true),
    ("nested/04_in_function.cpp", true),
    ("nested/05_tabs.cpp", true),
    ("nested/06_grade.cpp", true),
    ("nested/07_extra_stmts.cpp", false),
    ("nested/08_newline_braces.cpp", true),
    ("nested/09_else_if_chain_inside.cpp", true),
    ("nested/10_loop_body.cpp", true),
];

fn pattern_oracle() -> Outcome {
    let oracle = regex_lite::Regex::new(ORACLE_PATTERN).map_err(|e| e.to_string())?;
    let shipped = RuleSpec::new("nested-branch", NESTED_BRANCH_PATTERN, Polarity::MustMatch)
        .map_err(|e| e.to_string())?
        .with_stripping(false, false);
    let dir = fixtures().join("snippets");
    let mut agree = 0;
    for (name, frozen) in FROZEN_LABELS {
        let source = fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let ours = evaluate_rule(&source, &shipped).satisfied;
        let theirs = oracle.is_match(&source);
        ensure!(ours == theirs, "{name}: shipped={ours} oracle={theirs}");
        ensure!(theirs == frozen, "{name}: oracle={theirs} frozen={frozen}");
        agree += 1;
    }
    let nested = FROZEN_LABELS.iter().filter(|(n, _)| n.starts_with("nested/")).count();
    Ok(format!(
        "{agree}/{} agree ({nested} nested, {} flat or partial)",
        FROZEN_LABELS.len(),
        FROZEN_LABELS.len() - nested
    ))
}

fn random_name(rng: &mut StdRng) -> String {
    const EXTRA: [char; 6] = ['-', '\'', 'é', 'ø', 'Ł', 'ß'];
    let len = rng.random_range(1..=12);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => EXTRA[rng.random_range(0..EXTRA.len())],
            1..=4 => rng.random_range(b'A'..=b'Z') as char,
            _ => rng.random_range(b'a'..=b'z') as char,
        })
        .collect()
}

fn filename_grammar() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let first = random_name(&mut rng);
        let last = random_name(&mut rng);
        let number: u32 = if rng.random_bool(0.5) { rng.random_range(0..100) } else { rng.random() };
        let ext = ["zip", "ZIP", "Zip"][rng.random_range(0..3)];
        let file_name = format!("{first}_{last}_{number}.{ext}");
        let expected = SubmissionIdentity::new(&first, &last, number).map_err(|e| format!("{file_name}: {e}"))?;
        let parsed = parse_submission_filename(&file_name).map_err(|e| format!("{file_name}: {e}"))?;
        ensure!(parsed == expected, "{file_name} parsed as {parsed:?}");
        ensure!(
            format!("{}.{ext}", parsed.stem()) == file_name,
            "{file_name} re-rendered as {}",
            parsed.stem()
        );
    }

    let mut cases: Vec<(String, MalformedName)> = Vec::new();
    for _ in 0..50 {
        let (f, l, n) = (random_name(&mut rng), random_name(&mut rng), rng.random_range(0..50u32));
        let bad_ext = ["", ".rar", ".tar.gz", ".zip.bak", ".zi", ".7z"][rng.random_range(0..6)];
        cases.push((format!("{f}_{l}_{n}{bad_ext}"), MalformedName::MissingExtension));
        let fields = match rng.random_range(0..3) {
            0 => format!("{f}{l}_{n}"),
            1 => format!("{f}_{l}_{l}_{n}"),
            _ => format!("{f}_{l}_{n}_{n}"),
        };
        cases.push((format!("{fields}.zip"), MalformedName::WrongFieldCount));
        let empty = match rng.random_range(0..3) {
            0 => format!("_{l}_{n}"),
            1 => format!("{f}__{n}"),
            _ => format!("{f}_{l}_"),
        };
        cases.push((format!("{empty}.zip"), MalformedName::EmptyField));
        let number = ["3a", "three", "-1", "1.5", "+2", "99999999999", "0x10", "٣"][rng.random_range(0..8)];
        cases.push((format!("{f}_{l}_{number}.zip"), MalformedName::NonNumericAssignment));
    }
    for (name, class) in &cases {
        match parse_submission_filename(name) {
            Err(got) if got == *class => {}
            other => return Err(format!("{name:?}: expected {class:?}, got {other:?}")),
        }
    }
    Ok(format!("1000 identities round-trip, {} malformed names classified", cases.len()))
}

const DECOYS: [&str; 8] = [
    "if (a) { if (b) { x(); } else { y(); } } else { z(); }",
    "} else {",
    "a || b",
    "\"unterminated",
    "it's",
    "if (",
    "else if (x) {",
    "% 400 == 0",
];

/// Insertion points that are outside string and character literals: line
/// starts, line ends, and spaces on lines with no quote characters.
fn insertion_points(source: &str) -> Vec<(usize, bool)> {
    let mut points = Vec::new();
    let mut line_start = 0;
    for line in source.split_inclusive('\n') {
        let body = line.trim_end_matches('\n');
        points.push((line_start, false));
        points.push((line_start + body.len(), body.len() < line.len()));
        if !body.contains(['"', '\'']) {
            for (i, c) in body.char_indices() {
                if c == ' ' {
                    points.push((line_start + i, false));
                }
            }
        }
        line_start += line.len();
    }
    points
}

/// Inserts between one and four comments; line comments only where a
/// newline follows.
fn insert_comments(source: &str, rng: &mut StdRng) -> String {
    let points = insertion_points(source);
    let mut chosen: Vec<(usize, bool)> = (0..rng.random_range(1..=4))
        .map(|_| points[rng.random_range(0..points.len())])
        .collect();
    chosen.sort();
    chosen.dedup_by_key(|p| p.0);
    let mut out = source.to_owned();
    for &(at, before_newline) in chosen.iter().rev() {
        let decoy = DECOYS[rng.random_range(0..DECOYS.len())];
        let comment = if before_newline && rng.random_bool(0.5) {
            format!(" // {decoy}")
        } else if rng.random_bool(0.3) {
            format!(" /* {decoy}\n   {decoy} */ ")
        } else {
            format!(" /* {decoy} */ ")
        };
        out.insert_str(at, &comment);
    }
    out
}

fn invariance_rules() -> Vec<RuleSpec> {
    let rule = |id: &str, pattern: &str, polarity| RuleSpec::new(id, pattern, polarity).unwrap();
    vec![
        rule("nested-branch", NESTED_BRANCH_PATTERN, Polarity::MustMatch),
        rule("no-logical-or", r"\|\|", Polarity::MustNotMatch),
        rule("uses-modulo", r"%\s*\d", Polarity::MustMatch),
        rule("no-else-if", r"else\s+if", Polarity::MustNotMatch),
    ]
}

fn preprocessing_invariance() -> Outcome {
    let sources = fixture_sources();
    let rules = invariance_rules();
    let mut rng = StdRng::seed_from_u64(4);
    let mut flipped_by_decoys = 0;
    for pair in 0..100 {
        let (path, source) = &sources[rng.random_range(0..sources.len())];
        let commented = insert_comments(source, &mut rng);
        for rule in &rules {
            let before = evaluate_rule(source, rule).satisfied;
            let after = evaluate_rule(&commented, rule).satisfied;
            ensure!(
                before == after,
                "pair {pair} ({}), rule {}: {before} -> {after}\n{commented}",
                path.display(),
                rule.rule_id
            );
            let unstripped = rule.clone().with_stripping(false, false);
            if evaluate_rule(&commented, &unstripped).satisfied != before {
                flipped_by_decoys += 1;
            }
        }
    }
    let mut checks = 0;
    for (path, source) in &sources {
        for (comments, strings) in [(true, true), (true, false), (false, true), (false, false)] {
            let once = preprocess_source(source, comments, strings).text;
            let twice = preprocess_source(&once, comments, strings).text;
            ensure!(once == twice, "{} not idempotent ({comments}, {strings})", path.display());
            checks += 1;
        }
    }
    ensure!(flipped_by_decoys > 0, "decoy comments never affected an unstripped rule");
    Ok(format!(
        "100 pairs x {} rules unchanged ({flipped_by_decoys} verdicts would flip without stripping), \
         idempotent on {} fixtures x 4 modes ({checks} checks)",
        rules.len(),
        sources.len()
    ))
}

fn random_output(rng: &mut StdRng) -> String {
    const ALPHABET: [&str; 14] = ["a", "Z", "0", " ", "\t", "\n", "\r", "\r\n", "\n\n", "é", "İ", "ß", "Σ", "ǅ"];
    (0..rng.random_range(0..40))
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

fn normalization() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let policies: Vec<NormalizationPolicy> = (0..16u8)
        .map(|bits| NormalizationPolicy {
            unify_line_endings: bits & 1 != 0,
            trim_trailing_ws_per_line: bits & 2 != 0,
            drop_trailing_blank_lines: bits & 4 != 0,
            case_sensitive: bits & 8 != 0,
        })
        .collect();
    for i in 0..1000 {
        let raw = random_output(&mut rng);
        for policy in &policies {
            let once = normalize_output(&raw, policy);
            let twice = normalize_output(&once, policy);
            ensure!(once == twice, "string {i} {raw:?} under {policy:?}: {once:?} -> {twice:?}");
        }
    }

    let default = NormalizationPolicy::default();
    for i in 0..1000 {
        let lines: Vec<String> = (0..rng.random_range(0..6))
            .map(|_| random_output(&mut rng).replace(['\r', '\n'], ""))
            .collect();
        let trailing = if rng.random_bool(0.5) { "\n" } else { "" };
        let lf = format!("{}{trailing}", lines.join("\n"));
        let crlf = lf.replace('\n', "\r\n");
        ensure!(
            normalize_output(&lf, &default) == normalize_output(&crlf, &default),
            "case {i}: {lf:?} vs {crlf:?}"
        );
    }
    Ok("idempotent on 1000 strings x 16 policies; CRLF == LF on 1000 outputs".into())
}

fn fuzz_blob(rng: &mut StdRng, valid: &[u8]) -> Vec<u8> {
    let len = rng.random_range(0..4096);
    let mut noise: Vec<u8> = (0..len).map(|_| rng.random()).collect();
    match rng.random_range(0..5) {
        0 => noise,
        1 => {
            let mut blob = b"PK\x03\x04".to_vec();
            blob.append(&mut noise);
            blob
        }
        2 => {
            noise.extend_from_slice(b"PK\x05\x06");
            noise.extend((0..18).map(|_| rng.random::<u8>()));
            noise
        }
        3 => valid[..rng.random_range(0..valid.len())].to_vec(),
        _ => {
            let mut blob = valid[..rng.random_range(0..valid.len())].to_vec();
            blob.append(&mut noise);
            blob
        }
    }
}

fn letters(mut n: usize) -> String {
    let mut s = String::new();
    for _ in 0..4 {
        s.insert(0, (b'a' + (n % 26) as u8) as char);
        n /= 26;
    }
    s
}

fn pipeline_fuzz() -> Outcome {
    let scratch = Scratch::new();
    let inbox = scratch.mkdir("inbox");
    let valid = zip_bytes(&[("main.cpp", leap_source("nested").as_bytes())]);
    let mut rng = StdRng::seed_from_u64(6);
    for i in 0..500 {
        let path = inbox.join(format!("Fuzz_Case{}_3.zip", letters(i)));
        fs::write(path, fuzz_blob(&mut rng, &valid)).unwrap();
    }

    let started = Instant::now();
    let output = grader_bin()
        .current_dir(&scratch.root)
        .args(["batch", "inbox", "--spec"])
        .arg(leap_spec_path())
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(
        matches!(output.status.code(), Some(0 | 1)),
        "batch ended with {:?}: {}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");

    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for entry in fs::read_dir(scratch.root.join("reports")).unwrap() {
        let path = entry.unwrap().path();
        if !path.to_string_lossy().ends_with(".report.json") {
            continue;
        }
        let report: AssessmentReport =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure!(
            matches!(report.status, ReportStatus::Quarantined { .. } | ReportStatus::Errored { .. }),
            "{}: {:?}",
            report.archive,
            report.status
        );
        *counts.entry(report.status.label()).or_default() += 1;
    }
    let total: usize = counts.values().sum();
    ensure!(total == 500, "{total} reports for 500 archives");
    Ok(format!("{counts:?} in {:.1}s", elapsed.as_secs_f64()))
}

fn batch_records(root: &Path, inbox: &str) -> Result<BTreeMap<String, String>, String> {
    let reports = root.join(format!("reports-{inbox}"));
    let output = grader_bin()
        .current_dir(root)
        .args(["--reports-dir", reports.to_str().unwrap()])
        .args(["--workspace-dir", &format!("workspace-{inbox}")])
        .args(["--log", &format!("{inbox}.log")])
        .args(["batch", inbox, "--spec"])
        .arg(leap_spec_path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(output.status.code() == Some(0), "batch over {inbox}: {:?}", output.status);
    let mut records = BTreeMap::new();
    for entry in fs::read_dir(&reports).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".report.json") {
            records.insert(name, fs::read_to_string(&path).unwrap());
        }
    }
    Ok(records)
}

fn determinism() -> Outcome {
    let scratch = Scratch::new();
    let first = scratch.mkdir("inbox-a");
    for kind in LEAP_KINDS {
        write_leap_archive(&first, kind);
    }
    fs::write(first.join("Bad_Blob_3.zip"), b"not a zip").unwrap();
    fs::write(first.join("NoNumber_Here.zip"), b"").unwrap();
    write_zip(&first.join("Other_Assignment_4.zip"), &[("main.cpp", b"int main(){}")]);
    write_zip(&first.join("Only_Notes_3.zip"), &[("notes.md", b"# nothing to build")]);
    let second = scratch.mkdir("inbox-b");
    for entry in fs::read_dir(&first).unwrap() {
        let path = entry.unwrap().path();
        fs::copy(&path, second.join(path.file_name().unwrap())).unwrap();
    }

    let a = batch_records(&scratch.root, "inbox-a")?;
    let b = batch_records(&scratch.root, "inbox-b")?;
    ensure!(a.len() == 8, "expected 8 records, got {}", a.len());
    ensure!(a.keys().eq(b.keys()), "record sets differ: {:?} vs {:?}", a.keys(), b.keys());
    let mut differing = Vec::new();
    for (name, json) in &a {
        if mask_timestamps(json) != mask_timestamps(&b[name]) {
            differing.push(name.clone());
        }
    }
    ensure!(differing.is_empty(), "records differ after masking: {differing:?}");
    Ok(format!("{} records byte-identical after masking received_at/generated_at", a.len()))
}

fn wait_for(deadline: Instant, mut ready: impl FnMut() -> bool) -> bool {
    while Instant::now() < deadline {
        if ready() {
            return true;
        }
        thread::sleep(Duration::from_millis(20));
    }
    ready()
}

fn read_report(path: &Path) -> Option<AssessmentReport> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

/// Drops `kind` into the inbox atomically and waits for a graded report
/// whose `received_at` is at or after the drop.
fn drop_and_wait(scratch: &Scratch, inbox: &Path, kind: &str, budget: Duration) -> Result<(AssessmentReport, Duration), String> {
    let staging = scratch.mkdir("staging");
    let staged = write_leap_archive(&staging, "nested");
    if kind != "nested" {
        write_zip(&staged, &[("main.cpp", leap_source(kind).as_bytes())]);
    }
    let before = chrono::Utc::now() - chrono::Duration::seconds(1);
    let report_path = scratch.root.join("reports/Nested_Student_3.report.json");
    let dropped = Instant::now();
    fs::rename(&staged, inbox.join(leap_archive_name("nested"))).unwrap();
    let mut found = None;
    wait_for(dropped + budget + Duration::from_secs(5), || {
        found = read_report(&report_path).filter(|r| r.received_at >= before && r.status == ReportStatus::Graded);
        found.is_some()
    });
    let latency = dropped.elapsed();
    let report = found.ok_or_else(|| format!("{kind}: no report within {:?}", budget + Duration::from_secs(5)))?;
    ensure!(latency <= budget, "{kind}: graded after {latency:?}, budget {budget:?}");
    Ok((report, latency))
}

fn watch_liveness() -> Outcome {
    let scratch = Scratch::new();
    let inbox = scratch.mkdir("inbox");
    let log_path = scratch.root.join("grading.log");
    let mut child = grader_bin()
        .current_dir(&scratch.root)
        .args(["watch", "inbox", "--interval", "1", "--spec"])
        .arg(leap_spec_path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;

    let result = (|| {
        let started = wait_for(Instant::now() + Duration::from_secs(10), || {
            read_events(&log_path).is_ok_and(|events| events.iter().any(|e| e.kind == EventKind::WatchStarted))
        });
        ensure!(started, "watch never logged watch_started");

        // A dropped file is stable from the moment it lands, but the watcher
        // needs one more poll to see that; allow that interval plus 3 s.
        let budget = Duration::from_secs(1) + Duration::from_secs(3);
        let (first, first_latency) = drop_and_wait(&scratch, &inbox, "nested", budget)?;
        ensure!(first.score == Some(100.0), "first submission scored {:?}", first.score);

        thread::sleep(Duration::from_millis(1100));
        let (second, second_latency) = drop_and_wait(&scratch, &inbox, "flat", budget)?;
        ensure!(
            second.score.is_some_and(|s| (s - 70.0).abs() <= 0.01),
            "resubmission scored {:?}",
            second.score
        );

        let superseded: Vec<AssessmentReport> = fs::read_dir(scratch.root.join("reports"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| {
                let name = p.file_name().unwrap().to_string_lossy();
                name.starts_with("Nested_Student_3.superseded-") && name.ends_with(".report.json")
            })
            .filter_map(|p| read_report(&p))
            .collect();
        ensure!(superseded.len() == 1, "{} superseded reports", superseded.len());
        ensure!(superseded[0].status == ReportStatus::Superseded, "old report is {:?}", superseded[0].status);
        ensure!(superseded[0].received_at == first.received_at, "superseded report is not the first one");
        let logged = read_events(&log_path)
            .map_err(|e| e.to_string())?
            .iter()
            .any(|e| e.kind == EventKind::Superseded && e.subject == "Nested_Student_3");
        ensure!(logged, "no superseded event in the log");
        Ok(format!(
            "graded {:.2}s and {:.2}s after drop (budget {}s); resubmission superseded the first report",
            first_latency.as_secs_f64(),
            second_latency.as_secs_f64(),
            budget.as_secs()
        ))
    })();

    // SAFETY: plain signal delivery to our own child.
    unsafe { libc::kill(child.id() as i32, libc::SIGINT) };
    let exited = wait_for(Instant::now() + Duration::from_secs(5), || matches!(child.try_wait(), Ok(Some(_))));
    if !exited {
        let _ = child.kill();
        let _ = child.wait();
        return result.and(Err("watch did not stop on SIGINT".into()));
    }
    let status = child.wait().map_err(|e| e.to_string())?;
    let detail = result?;
    ensure!(status.success(), "watch exited with {status:?}");
    let stopped = read_events(&log_path).is_ok_and(|events| events.iter().any(|e| e.kind == EventKind::WatchStopped));
    ensure!(stopped, "no watch_stopped event");
    Ok(detail)
}
