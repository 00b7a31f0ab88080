use std::path::{Path, PathBuf};

use super::BridgeError;

/// Working-directory stack for bridge file and exec operations.
///
/// The process working directory is never changed; the top of the stack is
/// used to resolve relative paths and as the child's working directory.
#[derive(Debug, Clone)]
pub struct DirStack {
    stack: Vec<PathBuf>,
}

impl DirStack {
    /// Stack whose bottom is the process start directory.
    pub fn new() -> Result<Self, BridgeError> {
        let cwd = std::env::current_dir().map_err(|e| BridgeError::Io {
            path: PathBuf::from("."),
            source: e,
        })?;
        Ok(Self::with_base(cwd))
    }

    pub fn with_base(base: impl Into<PathBuf>) -> Self {
        DirStack {
            stack: vec![base.into()],
        }
    }

    pub fn current(&self) -> &Path {
        self.stack.last().expect("directory stack is never empty")
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    /// Resolve `path` against the current top.
    pub fn resolve(&self, path: impl AsRef<Path>) -> PathBuf {
        self.current().join(path)
    }

    pub fn push(&mut self, path: impl AsRef<Path>) -> Result<&Path, BridgeError> {
        let target = self.resolve(path);
        if !target.is_dir() {
            return Err(BridgeError::NoSuchDirectory(target));
        }
        self.stack.push(target);
        Ok(self.current())
    }

    pub fn pop(&mut self) -> Result<&Path, BridgeError> {
        if self.stack.len() == 1 {
            return Err(BridgeError::StackUnderflow);
        }
        self.stack.pop();
        Ok(self.current())
    }
}
