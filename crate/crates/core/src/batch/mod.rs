//! Headless script execution and detached background jobs.
//!
//! A script is one statement per line:
//!
//! ```text
//! # comment
//! echo stdout                      copy every following line to the output
//! q = 3.5                          assignment (silent)
//! tridiag[3, 0, 1.2, 2.1]          bare expression, printed as "=> value"
//! export_eps["fig.eps", fig]       write a plot value as EPS
//! ```
//!
//! The output always ends with `## elapsed <seconds>`; a failing statement
//! writes `!! <line>: <CODE> <message>` and stops the script.

mod job;
mod script;

pub use job::{job_status, pid_alive, pid_path, submit_detached, JobError, JobRecord, JobState};
pub use script::{
    format_elapsed, parse_script, run_script, RunStatus, Script, ScriptError, Statement,
    StatementKind, ECHO_DIRECTIVE, ERROR_PREFIX, FOOTER_PREFIX, RESULT_PREFIX,
};
