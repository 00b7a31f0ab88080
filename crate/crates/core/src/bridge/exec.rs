use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::BridgeError;

/// An external program honouring the bridge contract: order and matrices on
/// standard input, results on standard output, exit status 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecSpec {
    pub name: String,
    pub path: PathBuf,
    pub args: Vec<String>,
}

impl ExecSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        ExecSpec {
            name,
            path,
            args: Vec::new(),
        }
    }

    pub fn with_args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }
}

/// Run `program` in `cwd` with standard input read from `input`, and return
/// everything it wrote to standard output.
pub(crate) fn run_redirected(
    exec: &ExecSpec,
    program: &Path,
    input: &Path,
    cwd: &Path,
    timeout: Duration,
) -> Result<String, BridgeError> {
    let stdin = File::open(input).map_err(|e| BridgeError::Io {
        path: input.to_path_buf(),
        source: e,
    })?;
    let mut child = Command::new(program)
        .args(&exec.args)
        .current_dir(cwd)
        .stdin(stdin)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| BridgeError::Spawn {
            program: program.to_path_buf(),
            source: e,
        })?;

    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| BridgeError::Io {
            path: program.to_path_buf(),
            source: e,
        })? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BridgeError::Timeout {
                name: exec.name.clone(),
                after: timeout,
            });
        }
        thread::sleep(Duration::from_millis(2));
    };

    let out = out_reader
        .join()
        .expect("stdout reader panicked")
        .map_err(|e| BridgeError::Io {
            path: program.to_path_buf(),
            source: e,
        })?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(BridgeError::ExitStatus {
            name: exec.name.clone(),
            code: status.code(),
            stderr: String::from_utf8_lossy(&err).trim().to_owned(),
        });
    }
    String::from_utf8(out).map_err(|_| BridgeError::NonNumeric("<invalid utf-8 output>".into()))
}
