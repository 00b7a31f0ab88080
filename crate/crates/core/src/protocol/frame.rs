//! Line-oriented framing.
//!
//! ```text
//! >REQ <id> <CMD> [arg]      >OK <id>      >ERR <id> <code>
//! |payload line              |payload line |payload line
//! >END                       >END          >END
//! ```

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

pub const END: &str = ">END";
pub const PAYLOAD_PREFIX: char = '|';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Info,
    Setg,
    Eval,
    Export,
    Read,
    Close,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Info,
        Command::Setg,
        Command::Eval,
        Command::Export,
        Command::Read,
        Command::Close,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Info => "INFO",
            Command::Setg => "SETG",
            Command::Eval => "EVAL",
            Command::Export => "EXPORT",
            Command::Read => "READ",
            Command::Close => "CLOSE",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, DecodeError> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DecodeError::UnknownCommand(s.to_owned()))
    }
}

/// Stable error codes carried in `>ERR` frames.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    BadFrame,
    BadTask,
    Unbound,
    IoErr,
    BadValue,
    Other(String),
}

impl ErrorCode {
    pub fn as_str(&self) -> &str {
        match self {
            ErrorCode::BadFrame => "BADFRAME",
            ErrorCode::BadTask => "BADTASK",
            ErrorCode::Unbound => "UNBOUND",
            ErrorCode::IoErr => "IOERR",
            ErrorCode::BadValue => "BADVALUE",
            ErrorCode::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "BADFRAME" => ErrorCode::BadFrame,
            "BADTASK" => ErrorCode::BadTask,
            "UNBOUND" => ErrorCode::Unbound,
            "IOERR" => ErrorCode::IoErr,
            "BADVALUE" => ErrorCode::BadValue,
            other => ErrorCode::Other(other.to_owned()),
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Request {
        id: u64,
        command: Command,
        arg: Option<String>,
        payload: Vec<String>,
    },
    Ok {
        id: u64,
        payload: Vec<String>,
    },
    Error {
        id: u64,
        code: ErrorCode,
        payload: Vec<String>,
    },
}

/// Split text into payload lines. Empty text is an empty payload.
pub fn text_lines(text: &str) -> Vec<String> {
    if text.is_empty() {
        Vec::new()
    } else {
        text.split('\n').map(str::to_owned).collect()
    }
}

impl Message {
    pub fn request(id: u64, command: Command, arg: Option<&str>, payload: &str) -> Self {
        Message::Request {
            id,
            command,
            arg: arg.map(str::to_owned),
            payload: text_lines(payload),
        }
    }

    pub fn ok(id: u64, payload: &str) -> Self {
        Message::Ok {
            id,
            payload: text_lines(payload),
        }
    }

    pub fn error(id: u64, code: ErrorCode, message: &str) -> Self {
        Message::Error {
            id,
            code,
            payload: text_lines(message),
        }
    }

    pub fn id(&self) -> u64 {
        match *self {
            Message::Request { id, .. } | Message::Ok { id, .. } | Message::Error { id, .. } => id,
        }
    }

    pub fn payload(&self) -> &[String] {
        match self {
            Message::Request { payload, .. }
            | Message::Ok { payload, .. }
            | Message::Error { payload, .. } => payload,
        }
    }

    /// Payload lines joined back into one text.
    pub fn payload_text(&self) -> String {
        self.payload().join("\n")
    }

    pub fn encode(&self) -> Vec<String> {
        encode(self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("empty frame")]
    Empty,
    #[error("unknown frame header {0:?}")]
    UnknownHeader(String),
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("bad message id {0:?}")]
    BadId(String),
    #[error("error frame without a code")]
    MissingCode,
    #[error("unexpected line inside frame: {0:?}")]
    UnexpectedLine(String),
    #[error("incomplete frame: missing {END}")]
    MissingTerminator,
}

/// Render a message as protocol lines (without line terminators).
pub fn encode(msg: &Message) -> Vec<String> {
    let header = match msg {
        Message::Request {
            id, command, arg, ..
        } => match arg {
            Some(a) => format!(">REQ {id} {command} {a}"),
            None => format!(">REQ {id} {command}"),
        },
        Message::Ok { id, .. } => format!(">OK {id}"),
        Message::Error { id, code, .. } => format!(">ERR {id} {code}"),
    };
    let mut lines = Vec::with_capacity(msg.payload().len() + 2);
    lines.push(header);
    lines.extend(msg.payload().iter().map(|l| {
        debug_assert!(!l.contains('\n'), "payload line contains a newline");
        format!("{PAYLOAD_PREFIX}{l}")
    }));
    lines.push(END.to_owned());
    lines
}

fn is_header(line: &str) -> bool {
    line.starts_with(">REQ ") || line.starts_with(">OK ") || line.starts_with(">ERR ")
}

fn parse_id(s: &str, allow_zero: bool) -> Result<u64, DecodeError> {
    let bad = || DecodeError::BadId(s.to_owned());
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    match s.parse::<u64>() {
        Ok(0) if !allow_zero => Err(bad()),
        Ok(id) => Ok(id),
        Err(_) => Err(bad()),
    }
}

/// Best-effort id of a frame whose header may be malformed, so an error
/// reply can still be paired with the request.
pub fn recover_id(lines: &[impl AsRef<str>]) -> u64 {
    lines
        .first()
        .and_then(|l| l.as_ref().split(' ').nth(1).map(str::to_owned))
        .and_then(|s| parse_id(&s, false).ok())
        .unwrap_or(0)
}

/// Inverse of [`encode`] for exactly one frame.
pub fn decode(lines: &[impl AsRef<str>]) -> Result<Message, DecodeError> {
    let (first, rest) = lines.split_first().ok_or(DecodeError::Empty)?;
    let header = first.as_ref();
    if !is_header(header) {
        return Err(DecodeError::UnknownHeader(header.to_owned()));
    }
    let body = match rest.split_last() {
        Some((last, body)) if last.as_ref() == END => body,
        _ => return Err(DecodeError::MissingTerminator),
    };
    let payload = body
        .iter()
        .map(|l| {
            l.as_ref()
                .strip_prefix(PAYLOAD_PREFIX)
                .map(str::to_owned)
                .ok_or_else(|| DecodeError::UnexpectedLine(l.as_ref().to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(rest) = header.strip_prefix(">REQ ") {
        let mut parts = rest.splitn(3, ' ');
        let id = parse_id(parts.next().unwrap_or(""), false)?;
        let command = parts.next().unwrap_or("").parse()?;
        let arg = parts.next().filter(|a| !a.is_empty()).map(str::to_owned);
        Ok(Message::Request {
            id,
            command,
            arg,
            payload,
        })
    } else if let Some(rest) = header.strip_prefix(">OK ") {
        let id = parse_id(rest, false)?;
        Ok(Message::Ok { id, payload })
    } else if let Some(rest) = header.strip_prefix(">ERR ") {
        let (id, code) = rest.split_once(' ').ok_or(DecodeError::MissingCode)?;
        if code.is_empty() || code.contains(' ') {
            return Err(DecodeError::MissingCode);
        }
        Ok(Message::Error {
            id: parse_id(id, true)?,
            code: ErrorCode::parse(code),
            payload,
        })
    } else {
        Err(DecodeError::UnknownHeader(header.to_owned()))
    }
}

/// A frame that failed to decode, with the id recovered from its header
/// (0 when none could be read).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("bad frame (id {id}): {error}")]
pub struct FrameError {
    pub id: u64,
    pub error: DecodeError,
}

/// Reads frames from a line stream, resynchronising after malformed input:
/// a bad frame ends at its `>END`, at the next header line, or at end of
/// stream, and the next call starts from there.
pub struct FrameReader<R> {
    reader: R,
    pending: Option<String>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R) -> Self {
        FrameReader {
            reader,
            pending: None,
        }
    }

    fn next_line(&mut self) -> io::Result<Option<String>> {
        if let Some(line) = self.pending.take() {
            return Ok(Some(line));
        }
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Ok(None);
        }
        if buf.ends_with('\n') {
            buf.pop();
        }
        Ok(Some(buf))
    }

    /// Raw lines of the next frame, or `None` at end of stream.
    pub fn read_raw(&mut self) -> io::Result<Option<Vec<String>>> {
        let Some(first) = self.next_line()? else {
            return Ok(None);
        };
        let mut lines = vec![first];
        if lines[0] == END {
            return Ok(Some(lines));
        }
        while let Some(line) = self.next_line()? {
            if is_header(&line) {
                self.pending = Some(line);
                break;
            }
            let done = line == END;
            lines.push(line);
            if done {
                break;
            }
        }
        Ok(Some(lines))
    }

    /// Next message; `Ok(None)` at end of stream.
    pub fn read_message(&mut self) -> io::Result<Option<Result<Message, FrameError>>> {
        Ok(self.read_raw()?.map(|lines| {
            decode(&lines).map_err(|error| FrameError {
                id: recover_id(&lines),
                error,
            })
        }))
    }
}

/// Write one frame and flush.
pub fn write_message(mut w: impl Write, msg: &Message) -> io::Result<()> {
    let mut buf = String::new();
    for line in encode(msg) {
        buf.push_str(&line);
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode(&Message::request(1, Command::Info, None, "")),
            vec![">REQ 1 INFO", ">END"]
        );
        assert_eq!(
            encode(&Message::ok(1, "{1.2}")),
            vec![">OK 1", "|{1.2}", ">END"]
        );
        assert_eq!(
            encode(&Message::error(7, ErrorCode::BadTask, "")),
            vec![">ERR 7 BADTASK", ">END"]
        );
    }

    #[test]
    fn decode_setg() {
        let m = decode(&[">REQ 3 SETG q", "|3.5", ">END"]).unwrap();
        assert_eq!(
            m,
            Message::Request {
                id: 3,
                command: Command::Setg,
                arg: Some("q".into()),
                payload: vec!["3.5".into()]
            }
        );
    }

    #[test]
    fn decode_errors() {
        assert_eq!(
            decode(&[">REQ 3 SETG q", "|3.5"]),
            Err(DecodeError::MissingTerminator)
        );
        assert_eq!(decode(&[] as &[&str]), Err(DecodeError::Empty));
        assert_eq!(
            decode(&[">FOO 1", ">END"]),
            Err(DecodeError::UnknownHeader(">FOO 1".into()))
        );
        assert_eq!(
            decode(&[">REQ x INFO", ">END"]),
            Err(DecodeError::BadId("x".into()))
        );
        assert_eq!(
            decode(&[">REQ 0 INFO", ">END"]),
            Err(DecodeError::BadId("0".into()))
        );
        assert_eq!(
            decode(&[">REQ 1 PING", ">END"]),
            Err(DecodeError::UnknownCommand("PING".into()))
        );
        assert_eq!(
            decode(&[">OK 1", "junk", ">END"]),
            Err(DecodeError::UnexpectedLine("junk".into()))
        );
        assert_eq!(decode(&[">ERR 2", ">END"]), Err(DecodeError::MissingCode));
        assert_eq!(
            decode(&[">ERR 0 BADFRAME", ">END"]).unwrap().id(),
            0
        );
    }

    #[test]
    fn payload_may_look_like_markers() {
        let m = Message::ok(4, ">END\n|x\n>REQ 1 INFO\n");
        let lines = encode(&m);
        assert_eq!(decode(&lines).unwrap(), m);
        assert_eq!(m.payload_text(), ">END\n|x\n>REQ 1 INFO\n");
    }

    #[test]
    fn reader_resynchronises() {
        let input = "garbage\n>REQ 1 INFO\n>END\n>REQ 2 EVAL\n|x\n>REQ 3 INFO\n>END\n>REQ 4 CLOSE\n";
        let mut r = FrameReader::new(input.as_bytes());
        let e = r.read_message().unwrap().unwrap().unwrap_err();
        assert_eq!(e.id, 0);
        assert_eq!(r.read_message().unwrap().unwrap().unwrap().id(), 1);
        let e = r.read_message().unwrap().unwrap().unwrap_err();
        assert_eq!(e, FrameError { id: 2, error: DecodeError::MissingTerminator });
        assert_eq!(r.read_message().unwrap().unwrap().unwrap().id(), 3);
        let e = r.read_message().unwrap().unwrap().unwrap_err();
        assert_eq!(e.id, 4);
        assert!(r.read_message().unwrap().is_none());
    }
}
