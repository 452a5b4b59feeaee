//! Child-process execution with a wall-clock deadline and capped output.
//!
//! Children are started in their own process group so that a kill at the
//! deadline also takes down anything they forked (compiler drivers spawn
//! `cc1plus`, student programs occasionally spawn shells).

use std::io::{self, Read, Write};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

const POLL_INTERVAL: Duration = Duration::from_millis(5);
const SPAWN_RETRIES: usize = 20;

#[derive(Debug, Clone)]
pub struct Limits {
    pub timeout: Duration,
    /// Bytes of stdout kept; producing more kills the child.
    pub stdout_cap: usize,
    /// Bytes of stderr kept; the rest is drained and discarded.
    pub stderr_cap: usize,
}

#[derive(Debug)]
pub struct Outcome {
    /// `None` when we killed the child.
    pub status: Option<ExitStatus>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub timed_out: bool,
    pub overflowed: bool,
    pub duration: Duration,
}

impl Outcome {
    /// Exit code of a normally terminated child.
    pub fn exit_code(&self) -> Option<i32> {
        self.status.and_then(|s| s.code())
    }

    /// Terminated by a signal we did not send.
    pub fn crashed(&self) -> bool {
        matches!(self.status, Some(s) if s.code().is_none())
    }
}

fn spawn(command: &mut Command) -> io::Result<Child> {
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        command.process_group(0);
    }
    let mut attempt = 0;
    loop {
        match command.spawn() {
            // ETXTBSY: another thread of this process briefly holds a write
            // handle to a freshly created executable across a fork.
            Err(e) if e.raw_os_error() == Some(26) && attempt < SPAWN_RETRIES => {
                attempt += 1;
                thread::sleep(Duration::from_millis(10 * attempt as u64));
            }
            other => return other,
        }
    }
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        // The child leads its own process group; signal the whole group.
        let pgid = child.id() as libc::pid_t;
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

fn reader<R: Read + Send + 'static>(
    mut source: R,
    cap: usize,
    overflow: Option<Arc<AtomicBool>>,
) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            let n = match source.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => n,
            };
            let room = cap.saturating_sub(kept.len());
            kept.extend_from_slice(&buf[..n.min(room)]);
            if n > room {
                if let Some(flag) = &overflow {
                    flag.store(true, Ordering::SeqCst);
                    break;
                }
            }
        }
        kept
    })
}

/// Runs `command` to completion or until a limit trips.
///
/// With `merge_stderr`, stderr shares the stdout pipe so the captured text
/// preserves the child's interleaving; `Outcome::stderr` is then empty.
/// `Err` means the process could not be started.
pub fn run(
    command: &mut Command,
    stdin_data: Option<&[u8]>,
    limits: &Limits,
    merge_stderr: bool,
) -> io::Result<Outcome> {
    let (mut pipe_reader, pipe_writer) = if merge_stderr {
        let (r, w) = io::pipe()?;
        (Some(r), Some(w))
    } else {
        (None, None)
    };

    command.stdin(if stdin_data.is_some() {
        Stdio::piped()
    } else {
        Stdio::null()
    });
    match pipe_writer {
        Some(w) => {
            command.stderr(w.try_clone()?);
            command.stdout(w);
        }
        None => {
            command.stdout(Stdio::piped());
            command.stderr(Stdio::piped());
        }
    }

    let started = Instant::now();
    let spawned = spawn(command);
    // Drop our copies of the write ends so readers see EOF when the child exits.
    command.stdout(Stdio::null());
    command.stderr(Stdio::null());
    let mut child = spawned?;

    let overflow = Arc::new(AtomicBool::new(false));
    let stdout_handle = match pipe_reader.take() {
        Some(r) => reader(r, limits.stdout_cap, Some(overflow.clone())),
        None => reader(
            child.stdout.take().expect("stdout piped"),
            limits.stdout_cap,
            Some(overflow.clone()),
        ),
    };
    let stderr_handle = child
        .stderr
        .take()
        .map(|err| reader(err, limits.stderr_cap, None));

    let stdin_handle = match (stdin_data, child.stdin.take()) {
        (Some(data), Some(mut pipe)) => {
            let data = data.to_vec();
            Some(thread::spawn(move || {
                // A child that exits without reading its input is not an error.
                let _ = pipe.write_all(&data);
            }))
        }
        _ => None,
    };

    let mut timed_out = false;
    let mut overflowed = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if overflow.load(Ordering::SeqCst) {
            overflowed = true;
            kill_tree(&mut child);
            let _ = child.wait();
            break None;
        }
        if started.elapsed() >= limits.timeout {
            timed_out = true;
            kill_tree(&mut child);
            let _ = child.wait();
            break None;
        }
        thread::sleep(POLL_INTERVAL);
    };
    let duration = started.elapsed();
    if status.is_some() {
        // Descendants that outlive the child would hold the pipes open.
        kill_tree(&mut child);
    }

    let stdout = stdout_handle.join().unwrap_or_default();
    let stderr = stderr_handle
        .map(|h| h.join().unwrap_or_default())
        .unwrap_or_default();
    if let Some(h) = stdin_handle {
        let _ = h.join();
    }
    // Output past the cap may have arrived just before a normal exit.
    if !timed_out && overflow.load(Ordering::SeqCst) {
        overflowed = true;
    }

    Ok(Outcome {
        status,
        stdout,
        stderr,
        timed_out,
        overflowed,
        duration,
    })
}
