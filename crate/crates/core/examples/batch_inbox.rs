//! Grade a whole inbox in parallel.
//!
//! Builds an inbox holding the four leap-year fixtures plus archives that
//! end up quarantined (bad name, wrong assignment, corrupt bytes), grades it
//! and prints one line per report.
//!
//! ```text
//! cargo run --example batch_inbox
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use hybrid_grader::{load_assignment_spec, AssessmentReport, Grader, GradingLog, Layout};
use zip::write::SimpleFileOptions;

fn pack(path: &Path, source: &[u8]) -> std::io::Result<()> {
    let mut zip = zip::ZipWriter::new(fs::File::create(path)?);
    zip.start_file("main.cpp", SimpleFileOptions::default())?;
    zip.write_all(source)?;
    zip.finish()?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year");
    let scratch = tempfile::tempdir()?;
    let root = scratch.path();
    let inbox = root.join("inbox");
    fs::create_dir_all(&inbox)?;

    for (kind, student) in [("nested", "Ada_Lovelace"), ("flat", "Alan_Turing"), ("broken", "Grace_Hopper"), ("infinite", "Edsger_Dijkstra")] {
        pack(&inbox.join(format!("{student}_3.zip")), &fs::read(fixtures.join(kind).join("main.cpp"))?)?;
    }
    pack(&inbox.join("Barbara_Liskov_4.zip"), b"int main() {}")?;
    pack(&inbox.join("KenThompson_3.zip"), b"int main() {}")?;
    fs::write(inbox.join("Dennis_Ritchie_3.zip"), b"this is not a zip archive")?;

    let grader = Grader::new(
        load_assignment_spec(fixtures.join("spec.toml"))?,
        Layout::new(root.join("workspace"), root.join("reports")),
        GradingLog::open(root.join("grading.log"))?,
    )
    .with_jobs(4);
    let summary = grader.run_batch(&inbox)?;
    println!("graded {}, quarantined {}, errored {}", summary.graded, summary.quarantined, summary.errored);

    let mut reports: Vec<AssessmentReport> = Vec::new();
    for entry in fs::read_dir(root.join("reports"))? {
        let path = entry?.path();
        if path.to_string_lossy().ends_with(".report.json") {
            reports.push(serde_json::from_str(&fs::read_to_string(path)?)?);
        }
    }
    reports.sort_by(|a, b| a.archive.cmp(&b.archive));
    for report in reports {
        let score = report.score.map_or("-".into(), |s| format!("{s:.1}"));
        let reason = report.status.reason().unwrap_or("");
        println!("{:<26} {:<12} {:>6}  {reason}", report.archive, report.status.label(), score);
    }
    println!("quarantined archives were copied to {}", root.join("quarantine").display());
    Ok(())
}
