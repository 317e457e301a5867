//! Plain-text interchange format for [`ConicProblem`].
//!
//! ```text
//! CONIC v1
//! SCALARS 2
//! PSD 3
//! BOUND 0 -inf 50
//! OBJ s 0:1 s 1:-0.5
//! LE c -10 m 0,0,1,0 m 1,1,1,0 m 2,2,1,0
//! EQ c 1 s 1:-1
//! EXP s 0:1 | c 1 m 0,1,0.5,-0.25
//! ```
//!
//! One row per line. An expression is a sequence of terms: `c v` adds a
//! constant, `s i:a` adds `a·s_i`, and `m i,j,re,im` adds the Hermitian
//! coefficient `C_ij = re + i·im` (with `i ≤ j`) of a `tr(C·X)` term. `LE`
//! rows mean `expr ≤ 0`, `EQ` rows `expr = 0`, and `EXP u | v` means
//! `e^u ≤ v`. Blank lines and lines starting with `#` are ignored.

use super::{AffineExpr, ConicError, ConicProblem, Constraint, MatrixTerm};
use crate::C64;
use std::fmt::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] ConicError),
}

fn write_expr(out: &mut String, e: &AffineExpr) -> fmt::Result {
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !first {
            out.push(' ');
        }
        first = false;
    };
    if e.constant != 0.0 || (e.scalars.is_empty() && e.matrix.is_empty()) {
        sep(out);
        write!(out, "c {:e}", e.constant)?;
    }
    for &(i, a) in &e.scalars {
        sep(out);
        write!(out, "s {i}:{a:e}")?;
    }
    for t in &e.matrix {
        sep(out);
        write!(out, "m {},{},{:e},{:e}", t.row, t.col, t.coef.re, t.coef.im)?;
    }
    Ok(())
}

fn bound_text(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

impl ConicProblem {
    /// Serialises the problem in the text interchange format.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = (|| -> fmt::Result {
            writeln!(out, "CONIC v1")?;
            writeln!(out, "SCALARS {}", self.n_scalars())?;
            writeln!(out, "PSD {}", self.psd_side)?;
            for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
                if lo.is_finite() || hi.is_finite() {
                    writeln!(out, "BOUND {i} {} {}", bound_text(lo), bound_text(hi))?;
                }
            }
            out.push_str("OBJ ");
            write_expr(&mut out, &self.objective)?;
            out.push('\n');
            for c in &self.constraints {
                match c {
                    Constraint::Le(e) => {
                        out.push_str("LE ");
                        write_expr(&mut out, e)?;
                    }
                    Constraint::Eq(e) => {
                        out.push_str("EQ ");
                        write_expr(&mut out, e)?;
                    }
                    Constraint::Exp(u, v) => {
                        out.push_str("EXP ");
                        write_expr(&mut out, u)?;
                        out.push_str(" | ");
                        write_expr(&mut out, v)?;
                    }
                }
                out.push('\n');
            }
            Ok(())
        })();
        out
    }
}

struct LineParser {
    line: usize,
}

impl LineParser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, DumpError> {
        Err(DumpError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn number(&self, s: &str) -> Result<f64, DumpError> {
        match s {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => self.err(format!("bad number `{s}`")),
            },
        }
    }

    fn finite(&self, s: &str) -> Result<f64, DumpError> {
        let v = self.number(s)?;
        if v.is_finite() {
            Ok(v)
        } else {
            self.err(format!("`{s}` must be finite"))
        }
    }

    fn index(&self, s: &str) -> Result<usize, DumpError> {
        s.parse::<usize>()
            .or_else(|_| self.err(format!("bad index `{s}`")))
    }

    fn expr<'a>(
        &self,
        tokens: &mut impl Iterator<Item = &'a str>,
    ) -> Result<AffineExpr, DumpError> {
        let mut e = AffineExpr::default();
        while let Some(tag) = tokens.next() {
            let Some(body) = tokens.next() else {
                return self.err(format!("term `{tag}` has no value"));
            };
            match tag {
                "c" => e.constant += self.finite(body)?,
                "s" => {
                    let Some((i, a)) = body.split_once(':') else {
                        return self.err(format!("scalar term `{body}` needs index:coef"));
                    };
                    e.scalars.push((self.index(i)?, self.finite(a)?));
                }
                "m" => {
                    let parts: Vec<&str> = body.split(',').collect();
                    if parts.len() != 4 {
                        return self.err(format!("matrix term `{body}` needs row,col,re,im"));
                    }
                    e.matrix.push(MatrixTerm {
                        row: self.index(parts[0])?,
                        col: self.index(parts[1])?,
                        coef: C64::new(self.finite(parts[2])?, self.finite(parts[3])?),
                    });
                }
                other => return self.err(format!("unknown term `{other}`")),
            }
        }
        Ok(e)
    }
}

/// Upper bound on declared sizes, so a corrupt header cannot request an
/// absurd allocation.
const MAX_DECLARED: usize = 1 << 20;

/// Parses the text interchange format and validates the result.
pub fn parse_dump(text: &str) -> Result<ConicProblem, DumpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let header = |lines: &mut dyn Iterator<Item = (usize, &str)>,
                  key: &str|
     -> Result<(usize, String), DumpError> {
        match lines.next() {
            Some((n, l)) => Ok((
                n,
                l.strip_prefix(key)
                    .map(str::trim)
                    .unwrap_or("\u{0}")
                    .to_string(),
            )),
            None => Err(DumpError::Syntax {
                line: 0,
                message: format!("missing `{key}` line"),
            }),
        }
    };
    let (n, magic) = header(&mut lines, "CONIC")?;
    if magic != "v1" {
        return LineParser { line: n }.err("expected `CONIC v1`");
    }
    let (n, count) = header(&mut lines, "SCALARS")?;
    let p = LineParser { line: n };
    let count = p.index(&count)?;
    let (n, side) = header(&mut lines, "PSD")?;
    let side = LineParser { line: n }.index(&side)?;
    if count > MAX_DECLARED || side > 4096 {
        return LineParser { line: n }.err("declared sizes are too large");
    }

    let mut problem = ConicProblem::new(side);
    problem.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); count];
    let mut saw_objective = false;
    for (n, line) in lines {
        let p = LineParser { line: n };
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let mut tokens = rest.split_whitespace();
        match keyword {
            "BOUND" => {
                let parts: Vec<&str> = tokens.collect();
                if parts.len() != 3 {
                    return p.err("BOUND needs index, lower and upper");
                }
                let i = p.index(parts[0])?;
                if i >= count {
                    return p.err(format!("bound for undeclared scalar {i}"));
                }
                problem.bounds[i] = (p.number(parts[1])?, p.number(parts[2])?);
            }
            "OBJ" => {
                if saw_objective {
                    return p.err("duplicate OBJ line");
                }
                saw_objective = true;
                problem.objective = p.expr(&mut tokens)?;
            }
            "LE" => problem.add(Constraint::Le(p.expr(&mut tokens)?)),
            "EQ" => problem.add(Constraint::Eq(p.expr(&mut tokens)?)),
            "EXP" => {
                let Some((u, v)) = rest.split_once('|') else {
                    return p.err("EXP needs `u | v`");
                };
                let u = p.expr(&mut u.split_whitespace())?;
                let v = p.expr(&mut v.split_whitespace())?;
                problem.add(Constraint::Exp(u, v));
            }
            other => return p.err(format!("unknown row kind `{other}`")),
        }
    }
    if !saw_objective {
        return Err(DumpError::Syntax {
            line: 0,
            message: "missing OBJ line".into(),
        });
    }
    problem.validate()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProblem {
        let mut p = ConicProblem::new(3);
        let a = p.add_scalar(-50.0, 50.0);
        let b = p.add_scalar(0.0, f64::INFINITY);
        p.add_scalar(f64::NEG_INFINITY, f64::INFINITY);
        p.objective = AffineExpr::scalar(a, 1.0).plus_scalar(b, -0.5);
        p.add(Constraint::Le(
            AffineExpr::constant(-10.0).plus_matrix_trace(3, 1.0),
        ));
        p.add(Constraint::Eq(
            AffineExpr::constant(1.0).plus_scalar(b, -1.0),
        ));
        p.add(Constraint::Exp(
            AffineExpr::scalar(a, 1.0),
            AffineExpr {
                constant: 1.0,
                scalars: vec![],
                matrix: vec![MatrixTerm {
                    row: 0,
                    col: 1,
                    coef: C64::new(0.1 + 0.2, -1.0 / 3.0),
                }],
            },
        ));
        p
    }

    #[test]
    fn round_trip_is_exact() {
        let p = sample();
        let text = p.to_dump();
        let back = parse_dump(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_dump(), text);
    }

    #[test]
    fn documented_example_parses() {
        let text = "CONIC v1\nSCALARS 2\nPSD 3\nBOUND 0 -inf 50\nOBJ s 0:1 s 1:-0.5\n\
                    LE c -10 m 0,0,1,0 m 1,1,1,0 m 2,2,1,0\nEQ c 1 s 1:-1\nEXP s 0:1 | c 1 m 0,1,0.5,-0.25\n";
        let p = parse_dump(text).unwrap();
        assert_eq!(p.n_scalars(), 2);
        assert_eq!(p.constraints.len(), 3);
        assert_eq!(p.bounds[0], (f64::NEG_INFINITY, 50.0));
    }

    #[test]
    fn rejects_malformed_input() {
        let bad = [
            "",
            "CONIC v2\nSCALARS 0\nPSD 0\nOBJ c 0\n",
            "CONIC v1\nSCALARS 1\nPSD 0\nOBJ s 3:1\n",
            "CONIC v1\nSCALARS 1\nPSD 2\nOBJ m 1,0,1,0\n",
            "CONIC v1\nSCALARS 1\nPSD 0\nOBJ c nan\n",
            "CONIC v1\nSCALARS 1\nPSD 0\nOBJ c 1\nEXP s 0:1\n",
            "CONIC v1\nSCALARS 1\nPSD 0\nLE c 1\n",
            "CONIC v1\nSCALARS 1\nPSD 0\nOBJ c\n",
            "CONIC v1\nSCALARS 99999999999\nPSD 0\nOBJ c 1\n",
        ];
        for text in bad {
            assert!(parse_dump(text).is_err(), "accepted {text:?}");
        }
    }
}
