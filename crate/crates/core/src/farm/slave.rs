use std::fmt;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command as Process, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use tempfile::TempDir;

use crate::protocol::{
    protocol_of, write_message, Command, FrameError, FrameReader, Message, TaskExpr, WorkerInfo,
    PROTOCOL_VERSION,
};
use crate::value::{parse_value, Value};

use super::FarmError;

/// Environment variable naming the worker command run on remote hosts.
pub const WORKER_CMD_ENV: &str = "KFARM_WORKER_CMD";
pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_EVAL_TIMEOUT: Duration = Duration::from_secs(600);
pub const CLOSE_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// The worker binary as a child process of the master.
    Local,
    /// `ssh -e none <host> <remote command>`.
    Ssh { host: String },
}

impl Transport {
    /// Parse a slave spec: `local` or `ssh:<host>`.
    pub fn parse(spec: &str) -> Option<Self> {
        match spec {
            "local" => Some(Transport::Local),
            _ => spec
                .strip_prefix("ssh:")
                .filter(|h| !h.is_empty())
                .map(|h| Transport::Ssh { host: h.to_owned() }),
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::Local => f.write_str("local"),
            Transport::Ssh { host } => write!(f, "ssh:{host}"),
        }
    }
}

/// How workers are started.
#[derive(Debug, Clone)]
pub struct LaunchConfig {
    /// Local worker executable and its arguments.
    pub worker_program: PathBuf,
    pub worker_args: Vec<String>,
    /// Command line run on the remote host after `ssh -e none <host>`.
    pub remote_command: String,
    pub ssh_program: PathBuf,
    pub handshake_timeout: Duration,
    pub eval_timeout: Duration,
}

impl LaunchConfig {
    pub fn new(worker_program: impl Into<PathBuf>) -> Self {
        LaunchConfig {
            worker_program: worker_program.into(),
            worker_args: vec!["worker".to_owned()],
            remote_command: std::env::var(WORKER_CMD_ENV)
                .unwrap_or_else(|_| "kfarm worker --scratch".to_owned()),
            ssh_program: PathBuf::from("ssh"),
            handshake_timeout: DEFAULT_HANDSHAKE_TIMEOUT,
            eval_timeout: DEFAULT_EVAL_TIMEOUT,
        }
    }

    /// Workers are this very executable in `worker` mode.
    pub fn from_current_exe() -> std::io::Result<Self> {
        Ok(Self::new(std::env::current_exe()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaveState {
    Launching,
    Ready,
    Closed,
    Failed,
}

/// What to ask of a worker.
#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Eval(TaskExpr),
    /// Evaluate the task on the worker and write the result to `file`.
    Export { file: String, task: TaskExpr },
    /// Read `file` as a flat list of numbers.
    Read(String),
}

type Incoming = std::io::Result<Result<Message, FrameError>>;

struct Connection {
    stdin: Option<ChildStdin>,
    rx: Receiver<Incoming>,
    next_id: u64,
}

pub struct SlaveHandle {
    processor_id: u64,
    transport: Transport,
    state: SlaveState,
    info: Option<WorkerInfo>,
    conn: Connection,
    child: Child,
    eval_timeout: Duration,
    // Local worker's directory; removed when the handle is dropped.
    scratch: Option<TempDir>,
}

impl fmt::Debug for SlaveHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlaveHandle")
            .field("processor_id", &self.processor_id)
            .field("transport", &self.transport)
            .field("state", &self.state)
            .field("pid", &self.child.id())
            .finish()
    }
}

/// Outcome of shutting one worker down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CloseOutcome {
    Clean,
    /// The worker had already died; the text describes how.
    Crashed(String),
    /// The worker ignored CLOSE and was killed after the grace period.
    Killed,
}

impl SlaveHandle {
    /// Spawn a worker and perform the INFO handshake. The processor id is
    /// provisional until the registry accepts the handle.
    pub(crate) fn launch(
        config: &LaunchConfig,
        transport: Transport,
        processor_id: u64,
    ) -> Result<Self, FarmError> {
        let (mut cmd, scratch) = match &transport {
            Transport::Local => {
                let dir = tempfile::Builder::new()
                    .prefix("kfarm-slave-")
                    .tempdir()
                    .map_err(|e| FarmError::Spawn {
                        transport: transport.to_string(),
                        source: e,
                    })?;
                let mut cmd = Process::new(&config.worker_program);
                cmd.args(&config.worker_args).current_dir(dir.path());
                (cmd, Some(dir))
            }
            Transport::Ssh { host } => {
                let mut cmd = Process::new(&config.ssh_program);
                cmd.args(["-e", "none", host, &config.remote_command]);
                (cmd, None)
            }
        };
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| FarmError::Spawn {
                transport: transport.to_string(),
                source: e,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut frames = FrameReader::new(BufReader::new(stdout));
            loop {
                match frames.read_message() {
                    Ok(None) => break,
                    Ok(Some(m)) => {
                        if tx.send(Ok(m)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });

        let mut handle = SlaveHandle {
            processor_id,
            transport,
            state: SlaveState::Launching,
            info: None,
            conn: Connection {
                stdin: Some(stdin),
                rx,
                next_id: 1,
            },
            child,
            eval_timeout: config.eval_timeout,
            scratch,
        };
        match handle.fetch_info(config.handshake_timeout) {
            Ok(info) => {
                if protocol_of(&info.version) != Some(PROTOCOL_VERSION) {
                    warn!(
                        "slave {processor_id} speaks {:?}, expected protocol {PROTOCOL_VERSION}",
                        info.version
                    );
                }
                handle.info = Some(info);
                handle.state = SlaveState::Ready;
                Ok(handle)
            }
            Err(e) => {
                handle.state = SlaveState::Failed;
                handle.kill();
                Err(FarmError::Handshake {
                    transport: handle.transport.to_string(),
                    source: Box::new(e),
                })
            }
        }
    }

    pub fn processor_id(&self) -> u64 {
        self.processor_id
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    pub fn state(&self) -> SlaveState {
        self.state
    }

    pub fn info(&self) -> Option<&WorkerInfo> {
        self.info.as_ref()
    }

    /// Working directory of a local worker (remote workers choose their own).
    pub fn workdir(&self) -> Option<&std::path::Path> {
        self.scratch.as_ref().map(TempDir::path)
    }

    /// OS pid of the child process (for ssh, of the ssh client).
    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    pub fn is_ready(&self) -> bool {
        self.state == SlaveState::Ready
    }

    /// Ask the worker for its identity.
    pub fn fetch_info(&mut self, timeout: Duration) -> Result<WorkerInfo, FarmError> {
        let v = self.request(Command::Info, None, "", timeout)?;
        WorkerInfo::from_value(self.processor_id, &v).ok_or_else(|| FarmError::Protocol {
            processor_id: self.processor_id,
            detail: format!("malformed INFO payload {v}"),
        })
    }

    /// Bind a global on the worker.
    pub fn set_global(&mut self, name: &str, value: &Value) -> Result<(), FarmError> {
        self.ensure_ready()?;
        self.request(Command::Setg, Some(name), &value.print(), self.eval_timeout)
            .map(drop)
    }

    pub fn evaluate(&mut self, directive: &Directive) -> Result<Value, FarmError> {
        self.ensure_ready()?;
        let timeout = self.eval_timeout;
        match directive {
            Directive::Eval(t) => self.request(Command::Eval, None, &t.to_string(), timeout),
            Directive::Export { file, task } => {
                self.request(Command::Export, Some(file), &task.to_string(), timeout)
            }
            Directive::Read(file) => self.request(Command::Read, Some(file), "", timeout),
        }
    }

    fn ensure_ready(&self) -> Result<(), FarmError> {
        if self.is_ready() {
            Ok(())
        } else {
            Err(FarmError::NotReady {
                processor_id: self.processor_id,
                state: self.state,
            })
        }
    }

    /// One request, one paired response. Any transport failure marks the
    /// handle failed.
    fn request(
        &mut self,
        command: Command,
        arg: Option<&str>,
        payload: &str,
        timeout: Duration,
    ) -> Result<Value, FarmError> {
        let id = self.conn.next_id;
        self.conn.next_id += 1;
        let pid = self.processor_id;
        debug!("slave {pid} <- {command} #{id}");
        let msg = Message::request(id, command, arg, payload);
        let sent = match self.conn.stdin.as_mut() {
            Some(w) => write_message(w, &msg),
            None => Err(std::io::Error::new(
                std::io::ErrorKind::BrokenPipe,
                "connection closed",
            )),
        };
        if let Err(e) = sent {
            self.state = SlaveState::Failed;
            return Err(FarmError::ConnectionLost {
                processor_id: pid,
                detail: e.to_string(),
            });
        }
        let reply = match self.conn.rx.recv_timeout(timeout) {
            Ok(Ok(Ok(m))) => m,
            Ok(Ok(Err(e))) => {
                self.state = SlaveState::Failed;
                return Err(FarmError::Protocol {
                    processor_id: pid,
                    detail: e.to_string(),
                });
            }
            Ok(Err(e)) => {
                self.state = SlaveState::Failed;
                return Err(FarmError::ConnectionLost {
                    processor_id: pid,
                    detail: e.to_string(),
                });
            }
            Err(RecvTimeoutError::Timeout) => {
                self.state = SlaveState::Failed;
                return Err(FarmError::Timeout {
                    processor_id: pid,
                    after: timeout,
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.state = SlaveState::Failed;
                return Err(FarmError::ConnectionLost {
                    processor_id: pid,
                    detail: "worker closed its output".into(),
                });
            }
        };
        match reply {
            Message::Ok { id: rid, .. } if rid == id => {
                let text = reply.payload_text();
                if text.is_empty() {
                    Ok(Value::List(Vec::new()))
                } else {
                    parse_value(&text).map_err(|e| FarmError::Protocol {
                        processor_id: pid,
                        detail: format!("unparsable payload: {e}"),
                    })
                }
            }
            // id 0 is the worker's answer to a frame it could not read.
            Message::Error {
                id: rid,
                code,
                payload,
            } if rid == id || rid == 0 => Err(FarmError::Remote {
                processor_id: pid,
                code,
                message: payload.join("\n"),
            }),
            other => {
                self.state = SlaveState::Failed;
                Err(FarmError::Protocol {
                    processor_id: pid,
                    detail: format!("response id {} does not match request {id}", other.id()),
                })
            }
        }
    }

    /// Send CLOSE and wait for the process to exit, killing it after the
    /// grace period.
    pub(crate) fn close(&mut self, grace: Duration) -> CloseOutcome {
        if let Ok(Some(status)) = self.child.try_wait() {
            self.state = SlaveState::Closed;
            return CloseOutcome::Crashed(describe(status));
        }
        let sent = self.is_ready()
            && self
                .request(Command::Close, None, "", grace)
                .is_ok();
        // Closing stdin lets a worker that missed CLOSE see end of input.
        self.conn.stdin = None;
        let deadline = Instant::now() + grace;
        let outcome = loop {
            match self.child.try_wait() {
                Ok(Some(status)) if sent || status.success() => break CloseOutcome::Clean,
                Ok(Some(status)) => break CloseOutcome::Crashed(describe(status)),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    self.kill();
                    break CloseOutcome::Killed;
                }
            }
        };
        self.state = SlaveState::Closed;
        outcome
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn describe(status: ExitStatus) -> String {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(c), _) => format!("exited with status {c}"),
        (None, Some(s)) => format!("killed by signal {s}"),
        _ => "exited".to_owned(),
    }
}

impl Drop for SlaveHandle {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            self.kill();
        }
    }
}
