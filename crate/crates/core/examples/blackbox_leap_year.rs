//! Compile one source tree and run black-box tests against it.
//!
//! Uses the leap-year fixtures; pass `nested`, `flat`, `broken` or
//! `infinite` (default `flat`). Requires `g++` on `PATH`.
//!
//! ```text
//! cargo run --example blackbox_leap_year -- infinite
//! ```

use std::fs;
use std::path::Path;
use std::time::Duration;

use hybrid_grader::blackbox::{run_test_suite, NormalizationPolicy, TestCase, DEFAULT_OUTPUT_CAP};
use hybrid_grader::build::{compile_workspace, CompilerProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = std::env::args().nth(1).unwrap_or_else(|| "flat".into());
    let source = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year").join(&kind).join("main.cpp");
    let workspace = tempfile::tempdir()?;
    fs::copy(&source, workspace.path().join("main.cpp"))?;

    let compile = compile_workspace(workspace.path(), &CompilerProfile::default())?;
    println!("compile succeeded: {} ({} diagnostic lines)", compile.succeeded, compile.diagnostics.len());
    for diagnostic in compile.diagnostics.iter().take(5) {
        println!("  {:?}: {}", diagnostic.severity, diagnostic.text);
    }
    let Some(executable) = compile.executable_path.as_deref() else {
        return Ok(());
    };

    // Expected outputs come from the calendar rule, not from a model answer.
    let tests: Vec<TestCase> = [2000, 1900, 2024, 2023]
        .map(|year| {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            let expected = if leap { "Leap year\n" } else { "Common year\n" };
            TestCase {
                timeout: Duration::from_secs(1),
                ..TestCase::new(format!("y{year}"), format!("{year}\n"), expected)
            }
        })
        .to_vec();
    // Trailing spaces, CRLF and extra blank lines are all forgiven by default.
    let section = run_test_suite(executable, &tests, &NormalizationPolicy::default(), DEFAULT_OUTPUT_CAP)?;
    for result in &section.results {
        println!(
            "  {:<6} {:<13} exit={:?} output={:?} ({} ms)",
            result.test_id,
            result.verdict.label(),
            result.exit_code,
            result.actual_normalized,
            result.duration.as_millis()
        );
    }
    println!("passed {}/{}", section.passed(), section.results.len());
    Ok(())
}
