//! The fixed task vocabulary evaluated by workers and batch scripts.
//!
//! A task call is flat: `name[arg, ...]` where each argument is a value
//! literal or a global identifier. Composition goes through globals.

use std::fmt;

use thiserror::Error;

use crate::eps::PlotSpec;
use crate::numeric::{dot3, eigenvalues, matmul, Matrix};
use crate::value::{
    chop, random_table, Env, Lookup, ParseError, Parser, Rng, Value, DEFAULT_CHOP_TOLERANCE,
};

use super::frame::ErrorCode;

/// Registered task names.
pub const VOCABULARY: [&str; 8] = [
    "tridiag",
    "fill",
    "matmul",
    "eigen",
    "random_table",
    "chop",
    "plot",
    "dot3",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Literal(Value),
    Global(String),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Literal(v) => write!(f, "{v}"),
            Arg::Global(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskExpr {
    pub name: String,
    pub args: Vec<Arg>,
}

impl TaskExpr {
    pub fn new(name: impl Into<String>, args: Vec<Arg>) -> Self {
        TaskExpr {
            name: name.into(),
            args,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(text);
        let name = p.identifier()?.to_owned();
        let expr = Self::parse_call(&mut p, name)?;
        p.finish()?;
        Ok(expr)
    }

    /// Parse the bracketed argument list following `name`.
    pub fn parse_call(p: &mut Parser<'_>, name: String) -> Result<Self, ParseError> {
        p.expect(b'[')?;
        let mut args = Vec::new();
        if !p.eat(b']') {
            loop {
                args.push(if p.at_identifier() {
                    Arg::Global(p.identifier()?.to_owned())
                } else {
                    Arg::Literal(p.value()?)
                });
                if p.eat(b']') {
                    break;
                }
                p.expect(b',')?;
            }
        }
        Ok(TaskExpr { name, args })
    }
}

impl fmt::Display for TaskExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// Anything that evaluates to a value: a literal, a global, or a task call.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Literal(Value),
    Global(String),
    Call(TaskExpr),
}

impl Operand {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser::new(text);
        let op = Self::parse_from(&mut p)?;
        p.finish()?;
        Ok(op)
    }

    pub fn parse_from(p: &mut Parser<'_>) -> Result<Self, ParseError> {
        if p.at_identifier() {
            let name = p.identifier()?.to_owned();
            if p.peek() == Some(b'[') {
                TaskExpr::parse_call(p, name).map(Operand::Call)
            } else {
                Ok(Operand::Global(name))
            }
        } else {
            p.value().map(Operand::Literal)
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(v) => write!(f, "{v}"),
            Operand::Global(name) => f.write_str(name),
            Operand::Call(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct TaskError {
    pub code: ErrorCode,
    pub message: String,
}

impl TaskError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        TaskError {
            code,
            message: message.into(),
        }
    }

    fn bad_value(message: impl fmt::Display) -> Self {
        Self::new(ErrorCode::BadValue, message.to_string())
    }
}

fn resolve(arg: &Arg, env: &Env) -> Result<Value, TaskError> {
    match arg {
        Arg::Literal(v) => Ok(v.clone()),
        Arg::Global(name) => match env.lookup(name) {
            Lookup::Bound(v) => Ok(v.clone()),
            Lookup::Unbound => Err(TaskError::new(
                ErrorCode::Unbound,
                format!("unbound identifier {name}"),
            )),
        },
    }
}

pub fn eval_operand(op: &Operand, env: &Env, rng: &mut Rng) -> Result<Value, TaskError> {
    match op {
        Operand::Literal(v) => Ok(v.clone()),
        Operand::Global(name) => resolve(&Arg::Global(name.clone()), env),
        Operand::Call(t) => eval_task(t, env, rng),
    }
}

fn integer(task: &str, v: &Value) -> Result<i64, TaskError> {
    match *v {
        Value::Integer(i) => Ok(i),
        Value::Real(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Ok(x as i64),
        _ => Err(TaskError::bad_value(format!(
            "{task}: expected an integer, found {}",
            v.kind()
        ))),
    }
}

fn number(task: &str, v: Value) -> Result<Value, TaskError> {
    if v.is_numeric() {
        Ok(v)
    } else {
        Err(TaskError::bad_value(format!(
            "{task}: expected a number, found {}",
            v.kind()
        )))
    }
}

fn text(task: &str, v: &Value) -> Result<String, TaskError> {
    v.as_str().map(str::to_owned).ok_or_else(|| {
        TaskError::bad_value(format!("{task}: expected a string, found {}", v.kind()))
    })
}

fn matrix(v: &Value) -> Result<Matrix, TaskError> {
    Matrix::from_value(v).map_err(TaskError::bad_value)
}

fn order(task: &str, v: &Value) -> Result<usize, TaskError> {
    match integer(task, v)? {
        n if n > 0 => Ok(n as usize),
        n => Err(TaskError::bad_value(format!(
            "{task}: matrix order must be positive, got {n}"
        ))),
    }
}

/// Build an n×n matrix value from a per-entry rule. Entries keep the kind
/// of the argument they came from; structural zeros are exact integers.
fn build(n: usize, entry: impl Fn(usize, usize) -> Option<Value>) -> Value {
    Value::list((0..n).map(|i| {
        Value::list((0..n).map(|j| entry(i, j).unwrap_or(Value::Integer(0))))
    }))
}

fn arity(t: &TaskExpr, allowed: &[usize]) -> Result<(), TaskError> {
    if allowed.contains(&t.args.len()) {
        Ok(())
    } else {
        let want = allowed
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" or ");
        Err(TaskError::new(
            ErrorCode::BadTask,
            format!("{} takes {want} arguments, got {}", t.name, t.args.len()),
        ))
    }
}

/// Evaluate one task call. The environment is read-only: nothing a task
/// computes internally can become a global.
pub fn eval_task(t: &TaskExpr, env: &Env, rng: &mut Rng) -> Result<Value, TaskError> {
    let name = t.name.as_str();
    match name {
        "tridiag" => arity(t, &[4])?,
        "fill" => arity(t, &[3])?,
        "matmul" => arity(t, &[2])?,
        "eigen" | "random_table" => arity(t, &[1])?,
        "chop" => arity(t, &[1, 2])?,
        "plot" => arity(t, &[1, 3])?,
        "dot3" => arity(t, &[3])?,
        _ => {
            return Err(TaskError::new(
                ErrorCode::BadTask,
                format!("unknown task {name}"),
            ))
        }
    }
    let args = t
        .args
        .iter()
        .map(|a| resolve(a, env))
        .collect::<Result<Vec<_>, _>>()?;

    match (name, args.as_slice()) {
        ("tridiag", [n, d, u, l]) => {
            let n = order(name, n)?;
            let (d, u, l) = (
                number(name, d.clone())?,
                number(name, u.clone())?,
                number(name, l.clone())?,
            );
            Ok(build(n, |i, j| {
                if i == j {
                    Some(d.clone())
                } else if j == i + 1 {
                    Some(u.clone())
                } else if i == j + 1 {
                    Some(l.clone())
                } else {
                    None
                }
            }))
        }
        ("fill", [n, d, off]) => {
            let n = order(name, n)?;
            let (d, off) = (number(name, d.clone())?, number(name, off.clone())?);
            Ok(build(n, |i, j| Some(if i == j { d.clone() } else { off.clone() })))
        }
        ("matmul", [a, b]) => matmul(&matrix(a)?, &matrix(b)?)
            .map(|m| m.to_value())
            .map_err(TaskError::bad_value),
        ("dot3", [a, b, c]) => dot3(&matrix(a)?, &matrix(b)?, &matrix(c)?)
            .map(|m| m.to_value())
            .map_err(TaskError::bad_value),
        ("eigen", [m]) => eigenvalues(&matrix(m)?)
            .map(|s| s.to_value())
            .map_err(TaskError::bad_value),
        ("random_table", [times]) => {
            random_table(integer(name, times)?, rng).map_err(TaskError::bad_value)
        }
        ("chop", [v]) => chop(v, DEFAULT_CHOP_TOLERANCE).map_err(TaskError::bad_value),
        ("chop", [v, tol]) => {
            let tol = number(name, tol.clone())?.as_f64().unwrap_or_default();
            chop(v, tol).map_err(TaskError::bad_value)
        }
        ("plot", [points]) => plot(points, "", ""),
        ("plot", [points, xl, yl]) => plot(points, &text(name, xl)?, &text(name, yl)?),
        _ => unreachable!("arity checked above"),
    }
}

fn plot(points: &Value, xl: &str, yl: &str) -> Result<Value, TaskError> {
    let pts = PlotSpec::points_from_value(points).map_err(TaskError::bad_value)?;
    PlotSpec::new(pts, xl, yl)
        .map(|s| s.to_value())
        .map_err(TaskError::bad_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::parse_value;

    fn eval(src: &str, env: &Env) -> Result<Value, TaskError> {
        eval_task(&TaskExpr::parse(src).unwrap(), env, &mut Rng::seeded(1))
    }

    #[test]
    fn builders() {
        let env = Env::new();
        assert_eq!(
            eval("tridiag[2, 0, 2.6, 1.8]", &env).unwrap().print(),
            "{{0, 2.6}, {1.8, 0}}"
        );
        assert_eq!(
            eval("fill[2, 0, 1.213]", &env).unwrap().print(),
            "{{0, 1.213}, {1.213, 0}}"
        );
        assert_eq!(
            eval("tridiag[3, 5, 1, 2]", &env).unwrap().print(),
            "{{5, 1, 0}, {2, 5, 1}, {0, 2, 5}}"
        );
    }

    #[test]
    fn globals_resolve() {
        let mut env = Env::new();
        env.bind("ns", Value::Integer(2));
        assert_eq!(
            eval("tridiag[ns,0,1.2,2.1]", &env).unwrap().print(),
            "{{0, 1.2}, {2.1, 0}}"
        );
        env.bind("m", parse_value("{{0, 1}, {1, 0}}").unwrap());
        assert_eq!(eval("eigen[m]", &env).unwrap().print(), "{1.0, -1.0}");
        assert_eq!(env.len(), 2);
    }

    #[test]
    fn products() {
        let env = Env::new();
        assert_eq!(
            eval("matmul[{{1, 2}, {3, 4}}, {{0, 1}, {1, 0}}]", &env)
                .unwrap()
                .print(),
            "{{2.0, 1.0}, {4.0, 3.0}}"
        );
        assert_eq!(
            eval("dot3[{{2}}, {{3}}, {{4}}]", &env).unwrap().print(),
            "{{24.0}}"
        );
        assert_eq!(
            eval("chop[{1e-12, 0.5, -3e-11}]", &env).unwrap().print(),
            "{0, 0.5, 0}"
        );
        assert_eq!(eval("chop[{0.01}, 0.1]", &env).unwrap().print(), "{0}");
    }

    #[test]
    fn plot_value() {
        let env = Env::new();
        let v = eval("plot[{{0, 1}, {1, 2}}, \"x\", \"y\"]", &env).unwrap();
        let spec = PlotSpec::from_value(&v).unwrap();
        assert_eq!(spec.points, vec![(0.0, 1.0), (1.0, 2.0)]);
        assert!(spec.joined);
        assert_eq!(spec.xlabel, "x");
    }

    #[test]
    fn errors_carry_codes() {
        let env = Env::new();
        let code = |s| eval(s, &env).unwrap_err().code;
        assert_eq!(code("nosuch[1]"), ErrorCode::BadTask);
        assert_eq!(code("eigen[1, 2]"), ErrorCode::BadTask);
        assert_eq!(code("eigen[m]"), ErrorCode::Unbound);
        assert_eq!(code("tridiag[0, 0, 1, 1]"), ErrorCode::BadValue);
        assert_eq!(code("tridiag[\"2\", 0, 1, 1]"), ErrorCode::BadValue);
        assert_eq!(code("matmul[{{1, 2}}, {{1, 2}}]"), ErrorCode::BadValue);
        assert_eq!(code("eigen[{1, 2}]"), ErrorCode::BadValue);
        assert_eq!(code("random_table[0]"), ErrorCode::BadValue);
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "tridiag[ns, 0, 2.6, 1.8]",
            "plot[numbers, \"xlabel\", \"ylabel\"]",
            "chop[{}]",
            "eigen[m]",
        ] {
            let t = TaskExpr::parse(src).unwrap();
            assert_eq!(t.to_string(), src);
            assert_eq!(Operand::parse(src).unwrap(), Operand::Call(t));
        }
        assert_eq!(Operand::parse("ns").unwrap(), Operand::Global("ns".into()));
        assert_eq!(
            Operand::parse(" 3.5 ").unwrap(),
            Operand::Literal(Value::Real(3.5))
        );
        assert!(TaskExpr::parse("eigen[dot3[a, b, c]]").is_err());
        assert!(TaskExpr::parse("eigen[m").is_err());
        assert!(TaskExpr::parse("eigen").is_err());
    }
}
