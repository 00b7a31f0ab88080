//! Pipe bridge to external programs.
//!
//! Matrices are written to a plain text file (order on the first line, then
//! one row per line), the external program runs with that file as its
//! standard input, and its standard output is read back as a stream of
//! whitespace-separated numbers.

mod dirstack;
mod exec;
mod format;

pub use dirstack::DirStack;
pub use exec::ExecSpec;
pub use format::{
    format_entry, format_fixed, parse_square, render_bridge_input, render_rows, tokenize_numbers,
    DECIMALS, FIELD_WIDTH,
};

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::numeric::{build_fill, eigenvalues, matmul, Matrix, NumericError, Spectrum};

/// Off-diagonal entries of the two fill matrices in the bridge pipeline.
pub const FILL_OFF_A: f64 = 1.213;
pub const FILL_OFF_B: f64 = 2.079;
/// File the pipeline hands to the external program.
pub const BRIDGE_FILE: &str = "mat3.dat";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("no such directory: {}", .0.display())]
    NoSuchDirectory(PathBuf),
    #[error("cannot pop the start directory")]
    StackUnderflow,
    #[error("no matrices to write")]
    NoMatrices,
    #[error("all matrices must be {expected}x{expected}, found {}x{}", found.0, found.1)]
    OrderMismatch { expected: usize, found: (usize, usize) },
    #[error("value {0} does not fit the fixed-width field")]
    FieldOverflow(f64),
    #[error("non-numeric token {0:?}")]
    NonNumeric(String),
    #[error("expected {expected} numbers, found {found}")]
    TokenCount { expected: usize, found: usize },
    #[error("failed to start {}: {source}", program.display())]
    Spawn {
        program: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{name} exited with status {}{}", code.map_or("signal".to_string(), |c| c.to_string()), if stderr.is_empty() { String::new() } else { format!(": {stderr}") })]
    ExitStatus {
        name: String,
        code: Option<i32>,
        stderr: String,
    },
    #[error("{name} did not finish within {after:?}")]
    Timeout { name: String, after: Duration },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirAction {
    Push(PathBuf),
    Pop,
    Query,
}

/// One bridge instance: a directory stack plus the exec timeout.
#[derive(Debug, Clone)]
pub struct Bridge {
    dirs: DirStack,
    timeout: Duration,
}

impl Bridge {
    pub fn new() -> Result<Self, BridgeError> {
        Ok(Self::with_dirs(DirStack::new()?))
    }

    pub fn with_dirs(dirs: DirStack) -> Self {
        Bridge {
            dirs,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn dirs(&self) -> &DirStack {
        &self.dirs
    }

    /// Push, pop or query the working directory; returns the new top.
    pub fn directory(&mut self, action: DirAction) -> Result<PathBuf, BridgeError> {
        match action {
            DirAction::Push(p) => self.dirs.push(p).map(Path::to_path_buf),
            DirAction::Pop => self.dirs.pop().map(Path::to_path_buf),
            DirAction::Query => Ok(self.dirs.current().to_path_buf()),
        }
    }

    pub fn write_bridge_input(&self, path: impl AsRef<Path>, mats: &[Matrix]) -> Result<(), BridgeError> {
        let text = render_bridge_input(mats)?;
        let path = self.dirs.resolve(path);
        std::fs::write(&path, text).map_err(|e| BridgeError::Io { path, source: e })
    }

    /// Run `exec` with standard input redirected from `input_path` and read
    /// its output as a flat list of numbers.
    pub fn run_external(&self, exec: &ExecSpec, input_path: impl AsRef<Path>) -> Result<Vec<f64>, BridgeError> {
        let program = self.resolve_program(&exec.path);
        let input = self.dirs.resolve(input_path);
        let out = exec::run_redirected(exec, &program, &input, self.dirs.current(), self.timeout)?;
        Ok(tokenize_numbers(&out)?
            .iter()
            .filter_map(crate::value::Value::as_f64)
            .collect())
    }

    /// Absolute paths and bare command names found on `PATH` are used as
    /// given; anything else is taken relative to the directory stack top.
    fn resolve_program(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        let local = self.dirs.resolve(path);
        if local.exists() || path.components().count() > 1 {
            local
        } else {
            path.to_path_buf()
        }
    }

    /// Build the two fill matrices, multiply them in the external program,
    /// and return the eigenvalues of the product it prints.
    pub fn mathlink_pipeline(&self, ns: i64, exec: &ExecSpec) -> Result<Spectrum, BridgeError> {
        let a = build_fill(ns, 0.0, FILL_OFF_A)?;
        let b = build_fill(ns, 0.0, FILL_OFF_B)?;
        self.write_bridge_input(BRIDGE_FILE, &[a, b])?;
        let tokens = self.run_external(exec, BRIDGE_FILE)?;
        let product = parse_square(&tokens, ns as usize)?;
        Ok(eigenvalues(&product)?)
    }
}

/// In-process reference for the pipeline: the same product and spectrum
/// without the external program or its output rounding.
pub fn pipeline_reference(ns: i64) -> Result<Spectrum, NumericError> {
    let a = build_fill(ns, 0.0, FILL_OFF_A)?;
    let b = build_fill(ns, 0.0, FILL_OFF_B)?;
    eigenvalues(&matmul(&a, &b)?)
}

/// Reference external program: read the order and two matrices from
/// `input`, write their product one fixed-width entry per line.
pub fn reference_matmul(input: impl BufRead, mut output: impl Write) -> Result<(), BridgeError> {
    let text = io::read_to_string(input).map_err(|e| BridgeError::Io {
        path: PathBuf::from("<stdin>"),
        source: e,
    })?;
    let tokens: Vec<f64> = tokenize_numbers(&text)?
        .iter()
        .filter_map(crate::value::Value::as_f64)
        .collect();
    let (&order, rest) = tokens.split_first().ok_or(BridgeError::TokenCount {
        expected: 1,
        found: 0,
    })?;
    if order < 1.0 || order.fract() != 0.0 {
        return Err(BridgeError::NonNumeric(format!("{order}")));
    }
    let n = order as usize;
    if rest.len() != 2 * n * n {
        return Err(BridgeError::TokenCount {
            expected: 1 + 2 * n * n,
            found: tokens.len(),
        });
    }
    let a = parse_square(&rest[..n * n], n)?;
    let b = parse_square(&rest[n * n..], n)?;
    let c = matmul(&a, &b)?;
    let mut out = String::new();
    for &x in c.as_slice() {
        out.push_str(&format_fixed(x)?);
        out.push('\n');
    }
    output
        .write_all(out.as_bytes())
        .and_then(|_| output.flush())
        .map_err(|e| BridgeError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_worker_output() {
        let input = "2\n0 1.213\n1.213 0\n0 2.079\n2.079 0\n";
        let mut out = Vec::new();
        reference_matmul(input.as_bytes(), &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "   2.521827\n   0.000000\n   0.000000\n   2.521827\n"
        );
    }

    #[test]
    fn reference_worker_rejects_short_input() {
        let mut out = Vec::new();
        assert!(matches!(
            reference_matmul("2\n1 2 3".as_bytes(), &mut out),
            Err(BridgeError::TokenCount { expected: 9, found: 4 })
        ));
        assert!(reference_matmul("".as_bytes(), &mut out).is_err());
        assert!(reference_matmul("1.5 1 1".as_bytes(), &mut out).is_err());
    }

    #[test]
    fn directory_actions() {
        let tmp = tempfile::tempdir().unwrap();
        let mut b = Bridge::with_dirs(DirStack::with_base("/"));
        assert_eq!(b.directory(DirAction::Query).unwrap(), Path::new("/"));
        assert_eq!(
            b.directory(DirAction::Push(tmp.path().into())).unwrap(),
            tmp.path()
        );
        assert_eq!(b.directory(DirAction::Query).unwrap(), tmp.path());
        assert_eq!(b.directory(DirAction::Pop).unwrap(), Path::new("/"));
        assert!(matches!(
            b.directory(DirAction::Pop),
            Err(BridgeError::StackUnderflow)
        ));
    }

    #[test]
    fn writes_into_stack_top() {
        let tmp = tempfile::tempdir().unwrap();
        let b = Bridge::with_dirs(DirStack::with_base(tmp.path()));
        let m = Matrix::from_rows(&[vec![5.0]]).unwrap();
        b.write_bridge_input("in.dat", &[m]).unwrap();
        assert_eq!(std::fs::read_to_string(tmp.path().join("in.dat")).unwrap(), "1\n5\n");
    }
}
