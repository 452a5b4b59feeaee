//! Watch mode: poll an inbox, grade new archives once they stop changing,
//! and supersede earlier reports when a student resubmits.
//!
//! Runs the watcher on a background thread with a 1 s interval, drops a
//! flat solution and then a nested resubmission, and stops the watcher.
//!
//! ```text
//! cargo run --example watch_inbox
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use hybrid_grader::{load_assignment_spec, AssessmentReport, Grader, GradingLog, WatchConfig};
use zip::write::SimpleFileOptions;

fn drop_submission(staging: &Path, inbox: &Path, source: &Path) -> std::io::Result<()> {
    let staged = staging.join("Ada_Lovelace_3.zip");
    let mut zip = zip::ZipWriter::new(fs::File::create(&staged)?);
    zip.start_file("main.cpp", SimpleFileOptions::default())?;
    zip.write_all(&fs::read(source)?)?;
    zip.finish()?;
    // A rename is atomic, so the watcher never sees a half-written archive.
    fs::rename(&staged, inbox.join("Ada_Lovelace_3.zip"))
}

fn wait_for_score(report: &Path, previous: Option<f64>) -> Option<f64> {
    let deadline = Instant::now() + Duration::from_secs(20);
    while Instant::now() < deadline {
        let score = fs::read_to_string(report)
            .ok()
            .and_then(|json| serde_json::from_str::<AssessmentReport>(&json).ok())
            .and_then(|r| r.score);
        if score.is_some() && score != previous {
            return score;
        }
        thread::sleep(Duration::from_millis(100));
    }
    None
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year");
    let scratch = tempfile::tempdir()?;
    let root = scratch.path();
    for dir in ["inbox", "staging"] {
        fs::create_dir_all(root.join(dir))?;
    }

    let config = WatchConfig {
        poll_interval: Duration::from_secs(1),
        ..WatchConfig::new(root.join("inbox"), root.join("workspace"), root.join("reports"))
    };
    let grader = Grader::new(
        load_assignment_spec(fixtures.join("spec.toml"))?,
        config.layout(),
        GradingLog::open(root.join("grading.log"))?,
    );
    let shutdown = AtomicBool::new(false);
    let report = root.join("reports/Ada_Lovelace_3.report.json");

    thread::scope(|scope| -> Result<(), Box<dyn std::error::Error>> {
        let watcher = scope.spawn(|| grader.watch(&config, &shutdown));

        let started = Instant::now();
        drop_submission(&root.join("staging"), &config.inbox, &fixtures.join("flat/main.cpp"))?;
        let first = wait_for_score(&report, None);
        println!("first submission: score {first:?} after {:.1}s", started.elapsed().as_secs_f64());

        let started = Instant::now();
        drop_submission(&root.join("staging"), &config.inbox, &fixtures.join("nested/main.cpp"))?;
        let second = wait_for_score(&report, first);
        println!("resubmission:     score {second:?} after {:.1}s", started.elapsed().as_secs_f64());

        shutdown.store(true, Ordering::SeqCst);
        let summary = watcher.join().expect("watcher thread")?;
        println!("watcher stopped after {} polls; {:?}", summary.ticks, summary.graded);
        Ok(())
    })?;

    let mut names: Vec<String> = fs::read_dir(root.join("reports"))?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    names.sort();
    println!("reports:");
    for name in names {
        println!("  {name}");
    }
    Ok(())
}
