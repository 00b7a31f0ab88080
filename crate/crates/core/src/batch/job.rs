use std::fs::{self, File};
use std::io;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::SystemTime;

use thiserror::Error;

use super::script::{parse_script, ScriptError, ERROR_PREFIX, FOOTER_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Running => "running",
            JobState::Done => "done",
            JobState::Failed => "failed",
        }
    }
}

/// A detached batch job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: String,
    pub script: PathBuf,
    pub output: PathBuf,
    pub pid: u32,
    pub state: JobState,
    pub started: SystemTime,
    /// Seconds from the footer, once the job has finished.
    pub elapsed: Option<f64>,
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Script {
        path: PathBuf,
        #[source]
        source: ScriptError,
    },
    #[error("cannot start job runner {}: {source}", program.display())]
    Spawn {
        program: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed pid file {}", .0.display())]
    PidFile(PathBuf),
}

/// `<output>.pid`
pub fn pid_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".pid");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> JobError + '_ {
    move |source| JobError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Start `program batch run <script> [--seed N]` in a new session with its
/// output going to `output`, record its pid, and return without waiting.
///
/// `program` is the farm binary itself.
pub fn submit_detached(
    program: &Path,
    script: &Path,
    output: &Path,
    seed: Option<u64>,
) -> Result<JobRecord, JobError> {
    let text = fs::read_to_string(script).map_err(io_err(script))?;
    parse_script(&text).map_err(|source| JobError::Script {
        path: script.to_path_buf(),
        source,
    })?;

    let out = File::create(output).map_err(io_err(output))?;
    let err = out.try_clone().map_err(io_err(output))?;
    let mut cmd = Command::new(program);
    cmd.arg("batch").arg("run").arg(script);
    if let Some(seed) = seed {
        cmd.arg("--seed").arg(seed.to_string());
    }
    cmd.stdin(Stdio::null()).stdout(out).stderr(err);
    // SAFETY: setsid is async-signal-safe and touches no parent state.
    unsafe {
        cmd.pre_exec(|| {
            if libc::setsid() < 0 {
                return Err(io::Error::last_os_error());
            }
            Ok(())
        });
    }
    let started = SystemTime::now();
    let child = cmd.spawn().map_err(|source| JobError::Spawn {
        program: program.to_path_buf(),
        source,
    })?;
    let pid = child.id();
    // The child is never waited on here; it belongs to its own session.
    drop(child);

    let pid_file = pid_path(output);
    fs::write(&pid_file, format!("{pid}\n")).map_err(io_err(&pid_file))?;
    Ok(JobRecord {
        job_id: format!("job-{pid}"),
        script: script.to_path_buf(),
        output: output.to_path_buf(),
        pid,
        state: JobState::Running,
        started,
        elapsed: None,
    })
}

impl JobRecord {
    /// Rebuild a record from `<output>.pid` (for status queries from a
    /// later process).
    pub fn load(output: &Path) -> Result<Self, JobError> {
        let pid_file = pid_path(output);
        let text = fs::read_to_string(&pid_file).map_err(io_err(&pid_file))?;
        let pid: u32 = text
            .strip_suffix('\n')
            .unwrap_or(&text)
            .parse()
            .map_err(|_| JobError::PidFile(pid_file.clone()))?;
        let started = fs::metadata(&pid_file)
            .and_then(|m| m.modified())
            .unwrap_or_else(|_| SystemTime::now());
        let mut rec = JobRecord {
            job_id: format!("job-{pid}"),
            script: PathBuf::new(),
            output: output.to_path_buf(),
            pid,
            state: JobState::Running,
            started,
            elapsed: None,
        };
        rec.refresh();
        Ok(rec)
    }

    /// Update `state` and `elapsed` from the output file and the process.
    pub fn refresh(&mut self) -> JobState {
        let (state, elapsed) = inspect(self);
        self.state = state;
        self.elapsed = elapsed;
        state
    }
}

/// A process is alive if it exists and is not a zombie.
pub fn pid_alive(pid: u32) -> bool {
    let Ok(pid_t) = libc::pid_t::try_from(pid) else {
        return false;
    };
    // SAFETY: signal 0 only checks for existence and permission.
    let exists = unsafe { libc::kill(pid_t, 0) } == 0
        || io::Error::last_os_error().raw_os_error() == Some(libc::EPERM);
    if !exists {
        return false;
    }
    match fs::read_to_string(format!("/proc/{pid}/stat")) {
        // The state field follows the parenthesised command name.
        Ok(stat) => stat
            .rsplit_once(')')
            .and_then(|(_, rest)| rest.split_whitespace().next())
            .is_none_or(|state| state != "Z"),
        Err(_) => true,
    }
}

fn inspect(rec: &JobRecord) -> (JobState, Option<f64>) {
    let Ok(text) = fs::read_to_string(&rec.output) else {
        return (JobState::Failed, None);
    };
    if text.lines().any(|l| l.starts_with(ERROR_PREFIX)) {
        return (JobState::Failed, footer(&text));
    }
    if let Some(secs) = footer(&text) {
        return (JobState::Done, Some(secs));
    }
    if pid_alive(rec.pid) {
        (JobState::Running, None)
    } else {
        (JobState::Failed, None)
    }
}

/// Seconds from a final `## elapsed` line.
fn footer(text: &str) -> Option<f64> {
    text.lines()
        .last()
        .and_then(|l| l.strip_prefix(FOOTER_PREFIX))
        .and_then(|s| s.parse().ok())
}

pub fn job_status(rec: &JobRecord) -> JobState {
    inspect(rec).0
}
