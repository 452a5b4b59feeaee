//! Grade one submission archive end to end and print its report.
//!
//! Packs a leap-year fixture into `Ada_Lovelace_3.zip`, grades it under
//! `fixtures/leap_year/spec.toml` and prints the text report. Choose the
//! fixture with the first argument (default `flat`).
//!
//! ```text
//! cargo run --example grade_archive -- nested
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use hybrid_grader::assess::render_report;
use hybrid_grader::{load_assignment_spec, Grader, GradingLog, Layout};
use zip::write::SimpleFileOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind = std::env::args().nth(1).unwrap_or_else(|| "flat".into());
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year");
    let scratch = tempfile::tempdir()?;
    let root = scratch.path();

    let archive = root.join("inbox/Ada_Lovelace_3.zip");
    fs::create_dir_all(archive.parent().unwrap())?;
    let mut zip = zip::ZipWriter::new(fs::File::create(&archive)?);
    zip.start_file("main.cpp", SimpleFileOptions::default())?;
    zip.write_all(&fs::read(fixtures.join(&kind).join("main.cpp"))?)?;
    zip.finish()?;

    let spec = load_assignment_spec(fixtures.join("spec.toml"))?;
    let grader = Grader::new(
        spec,
        Layout::new(root.join("workspace"), root.join("reports")),
        GradingLog::open(root.join("grading.log"))?,
    );
    let report = grader.grade_submission(&archive)?;
    let rendered = render_report(&report);
    println!("{}", rendered.text);
    println!("--- machine record ---");
    println!("{}", rendered.json);
    println!("--- grading log ---");
    print!("{}", fs::read_to_string(root.join("grading.log"))?);
    Ok(())
}
