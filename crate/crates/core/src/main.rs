use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use hybrid_grader::orchestrator::{default_jobs, load_assignment_spec, Grader, Layout, WatchConfig};
use hybrid_grader::{AssignmentSpec, GradingLog, ReportStatus};

#[derive(Debug, Parser)]
#[command(name = "hybrid-grader", version, about = "Grade programming assignment submissions")]
struct Cli {
    /// Directory for per-submission report files.
    #[arg(long, global = true, default_value = "reports")]
    reports_dir: PathBuf,
    /// Directory under which each submission is unpacked.
    #[arg(long, global = true, default_value = "workspace")]
    workspace_dir: PathBuf,
    /// Append-only grading log.
    #[arg(long, global = true, default_value = "grading.log")]
    log: PathBuf,
    /// Concurrent submission pipelines [default: processors, at most 8].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Remove a submission's workspace once it has been graded.
    #[arg(long, global = true)]
    clean: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grade a single archive.
    Grade {
        archive: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Grade every file currently in an inbox directory.
    Batch {
        inbox: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Poll an inbox and grade archives as they arrive, until interrupted.
    Watch {
        inbox: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Seconds between inbox scans.
        #[arg(long, default_value_t = 30.0)]
        interval: f64,
    },
    /// Check an assignment spec file and report every problem.
    ValidateSpec { file: PathBuf },
}

fn load_spec(path: &Path) -> Result<AssignmentSpec, ExitCode> {
    load_assignment_spec(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn grader(cli: &Cli, spec: AssignmentSpec, layout: Layout) -> Result<Grader, ExitCode> {
    let log = GradingLog::open(&cli.log).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })?;
    Ok(Grader::new(spec, layout, log)
        .with_jobs(cli.jobs.unwrap_or_else(default_jobs))
        .with_clean(cli.clean))
}

fn run(cli: &Cli) -> Result<ExitCode, ExitCode> {
    let layout = Layout::new(&cli.workspace_dir, &cli.reports_dir);
    let fatal = |e: &dyn std::fmt::Display| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    };

    match &cli.command {
        Command::ValidateSpec { file } => match load_assignment_spec(file) {
            Ok(spec) => {
                println!(
                    "{}: ok (assignment {}, {} rule(s), {} test(s))",
                    file.display(),
                    spec.assignment_number,
                    spec.rules.len(),
                    spec.tests.len()
                );
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("{e}");
                Ok(ExitCode::FAILURE)
            }
        },
        Command::Grade { archive, spec } => {
            let grader = grader(cli, load_spec(spec)?, layout)?;
            let report = grader.grade_submission(archive).map_err(|e| fatal(&e))?;
            let stem = report.file_stem();
            let line = match (&report.status, report.score) {
                (ReportStatus::Graded, Some(score)) => format!("graded {score:.2}/{}", report.scale),
                (status, _) => match status.reason() {
                    Some(reason) => format!("{} ({reason})", status.label()),
                    None => status.label().to_owned(),
                },
            };
            println!("{}: {line}", report.archive);
            println!("report: {}", grader.report_paths(&stem).0.display());
            Ok(if matches!(report.status, ReportStatus::Errored { .. }) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Batch { inbox, spec } => {
            let grader = grader(cli, load_spec(spec)?, layout)?;
            let summary = grader.run_batch(inbox).map_err(|e| fatal(&e))?;
            println!(
                "graded {}, quarantined {}, errored {}",
                summary.graded, summary.quarantined, summary.errored
            );
            Ok(if summary.errored == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Watch { inbox, spec, interval } => {
            if !interval.is_finite() || *interval <= 0.0 {
                return Err(fatal(&"--interval must be a positive number of seconds"));
            }
            let config = WatchConfig {
                poll_interval: Duration::from_secs_f64(*interval),
                ..WatchConfig::new(inbox, &cli.workspace_dir, &cli.reports_dir)
            };
            let problems = config.violations();
            if !problems.is_empty() {
                return Err(fatal(&problems.join("; ")));
            }
            let grader = grader(cli, load_spec(spec)?, config.layout())?;

            let shutdown = Arc::new(AtomicBool::new(false));
            let flag = shutdown.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)).map_err(|e| fatal(&e))?;
            eprintln!(
                "watching {} every {}s (Ctrl-C to stop)",
                inbox.display(),
                config.poll_interval.as_secs_f64()
            );
            let summary = grader.watch(&config, &shutdown).map_err(|e| fatal(&e))?;
            println!(
                "graded {}, quarantined {}, errored {}",
                summary.graded.graded, summary.graded.quarantined, summary.graded.errored
            );
            Ok(if summary.graded.errored == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run(&cli).unwrap_or_else(|code| code)
}
