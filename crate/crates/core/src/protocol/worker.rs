use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use log::{debug, warn};

use crate::bridge::{format_entry, tokenize_numbers, BridgeError};
use crate::value::{parse_value, Env, Rng, Value};

use super::frame::{write_message, Command, ErrorCode, FrameReader, Message};
use super::task::{eval_operand, Operand, TaskError};

pub const PROTOCOL_VERSION: u32 = 1;

/// Version string announced by INFO, e.g. `kfarm 0.1.0 proto/1`.
pub fn version_string() -> String {
    format!(
        "kfarm {} proto/{PROTOCOL_VERSION}",
        env!("CARGO_PKG_VERSION")
    )
}

/// Protocol version carried in a version string, if any.
pub fn protocol_of(version: &str) -> Option<u32> {
    version
        .split_whitespace()
        .find_map(|w| w.strip_prefix("proto/"))
        .and_then(|v| v.parse().ok())
}

/// Identity of a worker kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerInfo {
    pub processor_id: u64,
    pub machine_name: String,
    pub system_id: String,
    pub process_id: u32,
    pub version: String,
}

impl WorkerInfo {
    /// Identity of the current process (processor id 0 until a master
    /// assigns one).
    pub fn local() -> Self {
        WorkerInfo {
            processor_id: 0,
            machine_name: hostname(),
            system_id: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            process_id: std::process::id(),
            version: version_string(),
        }
    }

    /// The INFO payload: `{machine_name, system_id, process_id, version}`.
    pub fn to_value(&self) -> Value {
        Value::list([
            Value::text(self.machine_name.clone()),
            Value::text(self.system_id.clone()),
            Value::Integer(i64::from(self.process_id)),
            Value::text(self.version.clone()),
        ])
    }

    pub fn from_value(processor_id: u64, v: &Value) -> Option<Self> {
        match v.as_list()? {
            [Value::Text(m), Value::Text(s), Value::Integer(pid), Value::Text(ver)] => {
                Some(WorkerInfo {
                    processor_id,
                    machine_name: m.clone(),
                    system_id: s.clone(),
                    process_id: u32::try_from(*pid).ok()?,
                    version: ver.clone(),
                })
            }
            _ => None,
        }
    }
}

fn hostname() -> String {
    let mut buf = [0u8; 256];
    // SAFETY: the buffer is valid for its full length; gethostname
    // truncates and we stop at the first NUL.
    let rc = unsafe { libc::gethostname(buf.as_mut_ptr().cast(), buf.len()) };
    let name = if rc == 0 {
        let end = buf.iter().position(|&b| b == 0).unwrap_or(buf.len());
        String::from_utf8_lossy(&buf[..end]).into_owned()
    } else {
        String::new()
    };
    if name.is_empty() {
        "localhost".to_owned()
    } else {
        name
    }
}

/// Text written by EXPORT. Matrices use the bridge row layout (no order
/// line), flat numeric lists go on one line, anything else is printed in
/// canonical form.
pub fn export_text(v: &Value) -> String {
    fn entry(v: &Value) -> String {
        match v {
            Value::Real(x) => format_entry(*x),
            other => other.print(),
        }
    }
    fn line(items: &[Value]) -> String {
        items.iter().map(entry).collect::<Vec<_>>().join(" ")
    }
    let mut out = String::new();
    match v {
        _ if v.is_matrix() => {
            for row in v.as_list().unwrap_or_default() {
                let _ = writeln!(out, "{}", line(row.as_list().unwrap_or_default()));
            }
        }
        Value::List(items) if items.iter().all(Value::is_numeric) => {
            let _ = writeln!(out, "{}", line(items));
        }
        v if v.is_numeric() => {
            let _ = writeln!(out, "{}", entry(v));
        }
        other => {
            let _ = writeln!(out, "{}", other.print());
        }
    }
    out
}

/// State of one worker kernel: its globals, its generator and the directory
/// EXPORT and READ resolve relative paths against.
pub struct Worker {
    env: Env,
    rng: Rng,
    dir: PathBuf,
}

enum Flow {
    Continue,
    Close,
}

impl Worker {
    pub fn new(dir: impl Into<PathBuf>, rng: Rng) -> Self {
        Worker {
            env: Env::new(),
            rng,
            dir: dir.into(),
        }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(Path::new(name))
    }

    /// Serve requests until CLOSE or end of input.
    pub fn serve(&mut self, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
        let mut frames = FrameReader::new(input);
        while let Some(frame) = frames.read_message()? {
            let (reply, flow) = match frame {
                Ok(Message::Request {
                    id,
                    command,
                    arg,
                    payload,
                }) => {
                    debug!("request {id} {command}");
                    let text = payload.join("\n");
                    match self.handle(command, arg.as_deref(), &text) {
                        Ok((value, flow)) => (Message::ok(id, &value), flow),
                        Err(e) => (Message::error(id, e.code, &e.message), Flow::Continue),
                    }
                }
                Ok(other) => (
                    Message::error(other.id(), ErrorCode::BadFrame, "expected a request"),
                    Flow::Continue,
                ),
                Err(e) => {
                    warn!("{e}");
                    (
                        Message::error(e.id, ErrorCode::BadFrame, &e.error.to_string()),
                        Flow::Continue,
                    )
                }
            };
            write_message(&mut output, &reply)?;
            if let Flow::Close = flow {
                break;
            }
        }
        Ok(())
    }

    fn handle(
        &mut self,
        command: Command,
        arg: Option<&str>,
        payload: &str,
    ) -> Result<(String, Flow), TaskError> {
        let need_arg = || {
            arg.ok_or_else(|| {
                TaskError::new(ErrorCode::BadFrame, format!("{command} needs an argument"))
            })
        };
        let out = match command {
            Command::Info => WorkerInfo::local().to_value().print(),
            Command::Setg => {
                let name = need_arg()?;
                let value = parse_value(payload)
                    .map_err(|e| TaskError::new(ErrorCode::BadValue, e.to_string()))?;
                if !self.env.bind(name, value) {
                    return Err(TaskError::new(
                        ErrorCode::BadValue,
                        format!("invalid identifier {name:?}"),
                    ));
                }
                String::new()
            }
            Command::Eval => self.evaluate(payload)?.print(),
            Command::Export => {
                let name = need_arg()?;
                let value = self.evaluate(payload)?;
                let path = self.path(name);
                std::fs::write(&path, export_text(&value)).map_err(|e| {
                    TaskError::new(ErrorCode::IoErr, format!("{}: {e}", path.display()))
                })?;
                Value::text(name).print()
            }
            Command::Read => {
                let path = self.path(need_arg()?);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    TaskError::new(ErrorCode::IoErr, format!("{}: {e}", path.display()))
                })?;
                match tokenize_numbers(&text) {
                    Ok(tokens) => Value::List(tokens).print(),
                    Err(BridgeError::NonNumeric(tok)) => {
                        return Err(TaskError::new(
                            ErrorCode::BadValue,
                            format!("non-numeric token {tok:?} in {}", path.display()),
                        ))
                    }
                    Err(e) => return Err(TaskError::new(ErrorCode::BadValue, e.to_string())),
                }
            }
            Command::Close => return Ok((String::new(), Flow::Close)),
        };
        Ok((out, Flow::Continue))
    }

    fn evaluate(&mut self, payload: &str) -> Result<Value, TaskError> {
        let op = Operand::parse(payload)
            .map_err(|e| TaskError::new(ErrorCode::BadTask, format!("{payload:?}: {e}")))?;
        eval_operand(&op, &self.env, &mut self.rng)
    }
}

/// Serve the protocol on the given streams with a fresh worker whose files
/// live in the current directory.
pub fn worker_serve(input: impl BufRead, output: impl Write) -> io::Result<()> {
    Worker::new(".", Rng::from_entropy()).serve(input, output)
}
