//! Minimal Encapsulated PostScript writer for 2-D point plots.

use std::fmt::Write as _;

use thiserror::Error;

use crate::value::Value;

pub const BBOX_WIDTH: f64 = 360.0;
pub const BBOX_HEIGHT: f64 = 234.0;
/// Fraction of each bounding-box dimension left empty on every side.
pub const MARGIN: f64 = 0.1;

const FONT: &str = "Helvetica";
const FONT_SIZE: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("plot needs at least one point")]
    Empty,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("malformed plot value: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub points: Vec<(f64, f64)>,
    pub joined: bool,
    pub xlabel: String,
    pub ylabel: String,
}

impl PlotSpec {
    pub fn new(points: Vec<(f64, f64)>, xlabel: &str, ylabel: &str) -> Result<Self, PlotError> {
        let spec = PlotSpec {
            points,
            joined: true,
            xlabel: xlabel.to_owned(),
            ylabel: ylabel.to_owned(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PlotError> {
        if self.points.is_empty() {
            return Err(PlotError::Empty);
        }
        if let Some(index) = self
            .points
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(PlotError::NonFinite { index });
        }
        Ok(())
    }

    /// Read a list of `{x, y}` pairs.
    pub fn points_from_value(v: &Value) -> Result<Vec<(f64, f64)>, PlotError> {
        let items = v
            .as_list()
            .ok_or_else(|| PlotError::Malformed(format!("expected a list of pairs, found {}", v.kind())))?;
        items
            .iter()
            .enumerate()
            .map(|(i, p)| match p.as_list() {
                Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                    (Some(x), Some(y)) => Ok((x, y)),
                    _ => Err(PlotError::Malformed(format!("point {i} is not numeric"))),
                },
                _ => Err(PlotError::Malformed(format!("point {i} is not a pair"))),
            })
            .collect()
    }

    /// Plots travel between statements as `{"plot", points, xlabel, ylabel, joined}`.
    pub fn to_value(&self) -> Value {
        Value::list([
            Value::text("plot"),
            Value::list(
                self.points
                    .iter()
                    .map(|&(x, y)| Value::list([Value::Real(x), Value::Real(y)])),
            ),
            Value::text(self.xlabel.clone()),
            Value::text(self.ylabel.clone()),
            Value::Integer(i64::from(self.joined)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Self, PlotError> {
        match v.as_list() {
            Some([tag, points, xl, yl, joined]) if tag.as_str() == Some("plot") => {
                let spec = PlotSpec {
                    points: Self::points_from_value(points)?,
                    xlabel: xl
                        .as_str()
                        .ok_or_else(|| PlotError::Malformed("x label is not a string".into()))?
                        .to_owned(),
                    ylabel: yl
                        .as_str()
                        .ok_or_else(|| PlotError::Malformed("y label is not a string".into()))?
                        .to_owned(),
                    joined: joined.as_i64().is_some_and(|j| j != 0),
                };
                spec.validate()?;
                Ok(spec)
            }
            _ => Err(PlotError::Malformed("not a plot value".into())),
        }
    }
}

/// Affine map from a data range onto `[lo, hi]`; a degenerate range maps to
/// the centre.
fn scaler(values: impl Iterator<Item = f64>, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let span = max - min;
    move |v| {
        if span > 0.0 {
            (lo + (v - min) / span * (hi - lo)).clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        }
    }
}

fn ps_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('(');
    for c in s.chars() {
        match c {
            '(' | ')' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            c if c.is_ascii() && !c.is_ascii_control() => out.push(c),
            _ => out.push('?'),
        }
    }
    out.push(')');
    out
}

/// Render the plot as an EPS document.
///
/// The data polyline is the only place `lineto` appears: axes are drawn
/// with `rectstroke` and unjoined points with `arc`, so a joined plot of
/// `n` points contains exactly `n - 1` `lineto` tokens.
pub fn render_eps(spec: &PlotSpec) -> Result<Vec<u8>, PlotError> {
    spec.validate()?;
    let x0 = BBOX_WIDTH * MARGIN;
    let x1 = BBOX_WIDTH * (1.0 - MARGIN);
    let y0 = BBOX_HEIGHT * MARGIN;
    let y1 = BBOX_HEIGHT * (1.0 - MARGIN);
    let sx = scaler(spec.points.iter().map(|p| p.0), x0, x1);
    let sy = scaler(spec.points.iter().map(|p| p.1), y0, y1);

    let mut out = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(out, "%!PS-Adobe-3.0 EPSF-3.0");
    let _ = writeln!(out, "%%BoundingBox: 0 0 {} {}", BBOX_WIDTH, BBOX_HEIGHT);
    let _ = writeln!(out, "%%Creator: kfarm {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "%%Pages: 1");
    let _ = writeln!(out, "%%EndComments");
    let _ = writeln!(out, "gsave");
    let _ = writeln!(out, "0 setgray 0.5 setlinewidth");
    let _ = writeln!(out, "{x0:.2} {y0:.2} {:.2} 0 rectstroke", x1 - x0);
    let _ = writeln!(out, "{x0:.2} {y0:.2} 0 {:.2} rectstroke", y1 - y0);
    let _ = writeln!(out, "/{FONT} findfont {FONT_SIZE} scalefont setfont");
    // x label ends at the right end of the x axis, below it.
    let _ = writeln!(
        out,
        "{x1:.2} {:.2} moveto {} dup stringwidth pop neg 0 rmoveto show",
        y0 - FONT_SIZE - 2.0,
        ps_string(&spec.xlabel)
    );
    // y label starts just above the top of the y axis.
    let _ = writeln!(
        out,
        "{x0:.2} {:.2} moveto {} show",
        y1 + 4.0,
        ps_string(&spec.ylabel)
    );

    let _ = writeln!(out, "1 setlinejoin");
    if spec.joined {
        let _ = writeln!(out, "newpath");
        for (i, &(x, y)) in spec.points.iter().enumerate() {
            let op = if i == 0 { "moveto" } else { "lineto" };
            let _ = writeln!(out, "{:.2} {:.2} {op}", sx(x), sy(y));
        }
        let _ = writeln!(out, "stroke");
    } else {
        for &(x, y) in &spec.points {
            let _ = writeln!(out, "newpath {:.2} {:.2} 1.5 0 360 arc fill", sx(x), sy(y));
        }
    }
    let _ = writeln!(out, "grestore");
    let _ = writeln!(out, "showpage");
    let _ = writeln!(out, "%%EOF");
    Ok(out.into_bytes())
}
