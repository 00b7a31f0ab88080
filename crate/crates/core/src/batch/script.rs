use std::io::{self, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::eps::{render_eps, PlotSpec};
use crate::protocol::{eval_operand, ErrorCode, Operand, TaskError};
use crate::value::{Env, ParseError, Parser, Rng, Value};

pub const ECHO_DIRECTIVE: &str = "echo stdout";
pub const FOOTER_PREFIX: &str = "## elapsed ";
pub const RESULT_PREFIX: &str = "=> ";
pub const ERROR_PREFIX: &str = "!! ";

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    Blank,
    Comment,
    EchoOn,
    Assign { name: String, operand: Operand },
    Expr(Operand),
    ExportEps { path: Operand, figure: Operand },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    /// 1-based line number.
    pub line: usize,
    /// The line exactly as written, without its terminator.
    pub text: String,
    pub kind: StatementKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Script {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {source}")]
pub struct ScriptError {
    pub line: usize,
    #[source]
    pub source: ParseError,
}

impl Script {
    /// Statements that do something (not blank lines or comments).
    pub fn executable(&self) -> impl Iterator<Item = &Statement> {
        self.statements
            .iter()
            .filter(|s| !matches!(s.kind, StatementKind::Blank | StatementKind::Comment))
    }
}

fn parse_line(text: &str) -> Result<StatementKind, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(StatementKind::Blank);
    }
    if trimmed.starts_with('#') {
        return Ok(StatementKind::Comment);
    }
    if trimmed.split_whitespace().eq(ECHO_DIRECTIVE.split(' ')) {
        return Ok(StatementKind::EchoOn);
    }
    let mut p = Parser::new(text);
    let kind = if p.at_identifier() {
        let name = p.identifier()?.to_owned();
        if p.eat(b'=') {
            StatementKind::Assign {
                name,
                operand: Operand::parse_from(&mut p)?,
            }
        } else if name == "export_eps" && p.peek() == Some(b'[') {
            p.expect(b'[')?;
            let path = Operand::parse_from(&mut p)?;
            p.expect(b',')?;
            let figure = Operand::parse_from(&mut p)?;
            p.expect(b']')?;
            StatementKind::ExportEps { path, figure }
        } else {
            // A bare global or task call: reparse it as an operand.
            p = Parser::new(text);
            StatementKind::Expr(Operand::parse_from(&mut p)?)
        }
    } else {
        StatementKind::Expr(Operand::parse_from(&mut p)?)
    };
    p.finish()?;
    Ok(kind)
}

/// Split on LF only, so a CR before it stays part of the line and echo
/// reproduces it.
fn lines(text: &str) -> impl Iterator<Item = &str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let empty = text.is_empty();
    body.split('\n').filter(move |_| !empty)
}

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let statements = lines(text)
        .enumerate()
        .map(|(i, line)| {
            parse_line(line)
                .map(|kind| Statement {
                    line: i + 1,
                    text: line.to_owned(),
                    kind,
                })
                .map_err(|source| ScriptError { line: i + 1, source })
        })
        .collect::<Result<_, _>>()?;
    Ok(Script { statements })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Elapsed time for the footer: milliseconds rounded up, at least one.
pub fn format_elapsed(d: Duration) -> String {
    let ms = d.as_nanos().div_ceil(1_000_000).max(1);
    format!("{}.{:03}", ms / 1000, ms % 1000)
}

fn export_eps(path: &Value, figure: &Value) -> Result<(), TaskError> {
    let path = path.as_str().ok_or_else(|| {
        TaskError::new(
            ErrorCode::BadValue,
            format!("export_eps: path must be a string, found {}", path.kind()),
        )
    })?;
    let spec = PlotSpec::from_value(figure)
        .map_err(|e| TaskError::new(ErrorCode::BadValue, format!("export_eps: {e}")))?;
    let bytes =
        render_eps(&spec).map_err(|e| TaskError::new(ErrorCode::BadValue, e.to_string()))?;
    std::fs::write(Path::new(path), bytes)
        .map_err(|e| TaskError::new(ErrorCode::IoErr, format!("{path}: {e}")))
}

/// Execute statements in order, writing echoed lines, results, at most one
/// error line and the elapsed footer to `out`.
pub fn run_script(
    script: &Script,
    mut out: impl Write,
    env: &mut Env,
    rng: &mut Rng,
) -> io::Result<RunStatus> {
    let start = Instant::now();
    let mut echo = false;
    let mut status = RunStatus::Completed;
    for st in &script.statements {
        if st.kind == StatementKind::EchoOn {
            echo = true;
        }
        if echo {
            writeln!(out, "{}", st.text)?;
        }
        let result = match &st.kind {
            StatementKind::Blank | StatementKind::Comment | StatementKind::EchoOn => Ok(()),
            StatementKind::Assign { name, operand } => {
                eval_operand(operand, env, rng).map(|v| {
                    env.bind(name, v);
                })
            }
            StatementKind::Expr(operand) => eval_operand(operand, env, rng)
                .and_then(|v| writeln!(out, "{RESULT_PREFIX}{v}").map_err(io_task)),
            StatementKind::ExportEps { path, figure } => eval_operand(path, env, rng)
                .and_then(|p| Ok((p, eval_operand(figure, env, rng)?)))
                .and_then(|(p, f)| export_eps(&p, &f)),
        };
        if let Err(e) = result {
            let msg = e.message.replace('\n', " ");
            writeln!(out, "{ERROR_PREFIX}{}: {} {msg}", st.line, e.code)?;
            status = RunStatus::Failed;
            break;
        }
        out.flush()?;
    }
    writeln!(out, "{FOOTER_PREFIX}{}", format_elapsed(start.elapsed()))?;
    out.flush()?;
    Ok(status)
}

fn io_task(e: io::Error) -> TaskError {
    TaskError::new(ErrorCode::IoErr, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RANDOM_PLOT: &str = "echo stdout\nnumbers = random_table[100]\nfig = plot[numbers, \"xlabel\", \"ylabel\"]\nexport_eps[\"filename.eps\", fig]\n";

    fn run(text: &str) -> (String, RunStatus, Env) {
        let script = parse_script(text).unwrap();
        let mut env = Env::new();
        let mut out = Vec::new();
        let status = run_script(&script, &mut out, &mut env, &mut Rng::seeded(7)).unwrap();
        (String::from_utf8(out).unwrap(), status, env)
    }

    #[test]
    fn parses_statement_forms() {
        let s = parse_script(RANDOM_PLOT).unwrap();
        assert_eq!(s.statements.len(), 4);
        assert_eq!(s.statements[0].kind, StatementKind::EchoOn);
        assert!(matches!(&s.statements[1].kind, StatementKind::Assign { name, .. } if name == "numbers"));
        assert!(matches!(s.statements[3].kind, StatementKind::ExportEps { .. }));

        assert!(parse_script("").unwrap().statements.is_empty());
        let q = parse_script("q = 3.5").unwrap();
        assert_eq!(
            q.statements[0].kind,
            StatementKind::Assign {
                name: "q".into(),
                operand: Operand::Literal(Value::Real(3.5))
            }
        );
        let c = parse_script("# note\n\n  ns\n{1, 2}\n").unwrap();
        let kinds: Vec<_> = c.statements.iter().map(|s| &s.kind).collect();
        assert_eq!(kinds[0], &StatementKind::Comment);
        assert_eq!(kinds[1], &StatementKind::Blank);
        assert_eq!(kinds[2], &StatementKind::Expr(Operand::Global("ns".into())));
        assert_eq!(c.executable().count(), 2);
    }

    #[test]
    fn syntax_errors_carry_line() {
        let e = parse_script("q = 1\nfoo bar\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_script("x = \n").is_err());
        assert!(parse_script("export_eps[\"a.eps\"]").is_err());
        assert!(parse_script("eigen[m").is_err());
    }

    #[test]
    fn echo_and_results() {
        let (out, status, env) = run("q = 3.5\nq\necho stdout\n# c\nchop[{1e-12, 3.5}]\n");
        assert_eq!(status, RunStatus::Completed);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(
            &lines[..5],
            &["=> 3.5", "echo stdout", "# c", "chop[{1e-12, 3.5}]", "=> {0, 3.5}"]
        );
        assert!(lines[5].starts_with(FOOTER_PREFIX));
        assert_eq!(lines.len(), 6);
        assert_eq!(env.get("q"), Some(&Value::Real(3.5)));
    }

    #[test]
    fn error_stops_execution() {
        let (out, status, env) = run("a = 1\neigen_demo\nb = 2\n");
        assert_eq!(status, RunStatus::Failed);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines[0], "!! 2: UNBOUND unbound identifier eigen_demo");
        assert!(lines[1].starts_with(FOOTER_PREFIX));
        assert!(env.get("b").is_none());
    }

    #[test]
    fn random_plot_script() {
        let tmp = tempfile::tempdir().unwrap();
        let eps = tmp.path().join("filename.eps");
        let text = RANDOM_PLOT.replace("filename.eps", eps.to_str().unwrap());
        let (out, status, _) = run(&text);
        assert_eq!(status, RunStatus::Completed);
        assert!(out.starts_with(&text));
        assert!(!out.contains(RESULT_PREFIX));
        let doc = std::fs::read_to_string(&eps).unwrap();
        assert!(doc.starts_with("%!PS-Adobe-3.0 EPSF-3.0"));
        assert_eq!(doc.split_whitespace().filter(|t| *t == "lineto").count(), 99);
    }

    #[test]
    fn seeded_runs_agree() {
        let a = run("random_table[3]\n").0;
        let b = run("random_table[3]\n").0;
        assert_eq!(a.lines().next(), b.lines().next());
    }

    #[test]
    fn elapsed_format() {
        assert_eq!(format_elapsed(Duration::ZERO), "0.001");
        assert_eq!(format_elapsed(Duration::from_micros(1500)), "0.002");
        assert_eq!(format_elapsed(Duration::from_millis(12_345)), "12.345");
    }
}
