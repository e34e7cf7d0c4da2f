//! Line-oriented text form of a [`ConicProblem`].
//!
//! ```text
//! conic 1
//! cols <n>
//! col <j> <lo> <hi> <name>
//! offset <c0>
//! cost <j> <c>
//! eq <label> <rhs> <j>:<a> ...
//! le <label> <rhs> <j>:<a> ...
//! soc <label> <k>          (or rsoc), then k member lines:
//! m <constant> <j>:<a> ...
//! ```
//!
//! Numbers use shortest round-trip formatting, so a write/parse cycle is exact.
//! Whitespace in names and labels is replaced by `_`.

use std::fmt::Write as _;

use super::{AffineExpr, ConeKind, ConicError, ConicProblem};
use crate::scalar::Scalar;

fn token(s: &str) -> String {
    if s.is_empty() {
        return "_".into();
    }
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

fn terms<T: Scalar>(out: &mut String, ts: &[(usize, T)]) {
    for &(j, a) in ts {
        let _ = write!(out, " {j}:{a:e}");
    }
}

pub fn write_dump<T: Scalar>(p: &ConicProblem<T>) -> String {
    let mut s = String::new();
    s.push_str("conic 1\n");
    let _ = writeln!(s, "cols {}", p.n_cols());
    for j in 0..p.n_cols() {
        let _ = writeln!(s, "col {j} {:e} {:e} {}", p.lower[j], p.upper[j], token(&p.col_names[j]));
    }
    let _ = writeln!(s, "offset {:e}", p.objective_offset);
    for (j, &c) in p.objective.iter().enumerate() {
        if c != T::zero() {
            let _ = writeln!(s, "cost {j} {c:e}");
        }
    }
    for (kw, rows) in [("eq", &p.eq_rows), ("le", &p.ineq_rows)] {
        for r in rows {
            let _ = write!(s, "{kw} {} {:e}", token(&r.label), r.rhs);
            terms(&mut s, &r.coeffs);
            s.push('\n');
        }
    }
    for c in &p.cones {
        let kw = match c.kind {
            ConeKind::Soc => "soc",
            ConeKind::RotatedSoc => "rsoc",
        };
        let _ = writeln!(s, "{kw} {} {}", token(&c.label), c.members.len());
        for m in &c.members {
            let _ = write!(s, "m {:e}", m.constant);
            terms(&mut s, &m.terms);
            s.push('\n');
        }
    }
    s
}

struct Cursor<'a> {
    line: usize,
    fields: std::str::SplitWhitespace<'a>,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> ConicError {
        ConicError::Dump {
            line: self.line,
            message: message.into(),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ConicError> {
        self.fields.next().ok_or_else(|| self.err(format!("missing {what}")))
    }

    fn num<T: Scalar>(&mut self, what: &str) -> Result<T, ConicError> {
        let w = self.word(what)?;
        w.parse().map_err(|_| self.err(format!("bad {what} `{w}`")))
    }

    fn index(&mut self, what: &str) -> Result<usize, ConicError> {
        let w = self.word(what)?;
        w.parse().map_err(|_| self.err(format!("bad {what} `{w}`")))
    }

    fn terms<T: Scalar>(&mut self) -> Result<Vec<(usize, T)>, ConicError> {
        let mut out = Vec::new();
        for f in self.fields.by_ref() {
            let (j, a) = f.split_once(':').ok_or_else(|| ConicError::Dump {
                line: self.line,
                message: format!("expected <col>:<coeff>, got `{f}`"),
            })?;
            let j = j.parse().ok();
            let a = a.parse().ok();
            match (j, a) {
                (Some(j), Some(a)) => out.push((j, a)),
                _ => {
                    return Err(ConicError::Dump {
                        line: self.line,
                        message: format!("bad term `{f}`"),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Parses the output of [`write_dump`] and validates the result.
pub fn parse_dump<T: Scalar>(text: &str) -> Result<ConicProblem<T>, ConicError> {
    let mut p = ConicProblem::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut pending_cone: Option<(ConeKind, String, usize, Vec<AffineExpr<T>>)> = None;
    let mut n_cols: Option<usize> = None;

    for (line, raw) in lines.by_ref() {
        let mut cur = Cursor {
            line,
            fields: raw.split_whitespace(),
        };
        let kw = cur.word("keyword")?;
        if let Some((_, _, want, members)) = pending_cone.as_mut() {
            if kw != "m" {
                return Err(cur.err(format!("expected {} more cone member lines", *want - members.len())));
            }
            let constant = cur.num("constant")?;
            let ts = cur.terms()?;
            members.push(AffineExpr::new(ts, constant));
            if members.len() == *want {
                let (kind, label, _, members) = pending_cone.take().unwrap();
                p.add_cone(kind, label, members);
            }
            continue;
        }
        match kw {
            "conic" => {
                let v = cur.word("version")?;
                if v != "1" {
                    return Err(cur.err(format!("unsupported version {v}")));
                }
            }
            "cols" => n_cols = Some(cur.index("column count")?),
            "col" => {
                let j = cur.index("column index")?;
                if j != p.n_cols() {
                    return Err(cur.err(format!("columns out of order: got {j}, expected {}", p.n_cols())));
                }
                let lo = cur.num("lower bound")?;
                let hi = cur.num("upper bound")?;
                let name = cur.word("name")?;
                p.add_col(name, lo, hi);
            }
            "offset" => p.objective_offset = cur.num("offset")?,
            "cost" => {
                let j = cur.index("column index")?;
                if j >= p.n_cols() {
                    return Err(cur.err(format!("cost on undeclared column {j}")));
                }
                p.objective[j] = cur.num("cost")?;
            }
            "eq" | "le" => {
                let label = cur.word("label")?.to_string();
                let rhs = cur.num("rhs")?;
                let ts = cur.terms()?;
                if kw == "eq" {
                    p.add_eq(label, ts, rhs);
                } else {
                    p.add_le(label, ts, rhs);
                }
            }
            "soc" | "rsoc" => {
                let kind = if kw == "soc" { ConeKind::Soc } else { ConeKind::RotatedSoc };
                let label = cur.word("label")?.to_string();
                let k = cur.index("member count")?;
                if k == 0 {
                    return Err(cur.err("empty cone block"));
                }
                pending_cone = Some((kind, label, k, Vec::with_capacity(k)));
            }
            other => return Err(cur.err(format!("unknown keyword `{other}`"))),
        }
    }
    if let Some((_, label, want, members)) = pending_cone {
        return Err(ConicError::Dump {
            line: text.lines().count(),
            message: format!("cone {label} truncated: {} of {want} members", members.len()),
        });
    }
    if let Some(n) = n_cols {
        if n != p.n_cols() {
            return Err(ConicError::Dimension(format!("declared {n} columns, found {}", p.n_cols())));
        }
    }
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProblem<f64> {
        let mut p = ConicProblem::new();
        let a = p.add_col("P line 1", -1.5, 1.0 / 3.0);
        let b = p.add_free_col("l");
        let c = p.add_col("v", 0.81, f64::INFINITY);
        p.objective_offset = 0.1;
        p.set_cost(b, 0.01);
        p.add_eq("bal", vec![(a, 1.0), (b, -0.01)], -0.2);
        p.add_le("cut", vec![(b, 1.21), (c, 1.0)], 2.21);
        p.add_cone(
            ConeKind::RotatedSoc,
            "branch",
            vec![AffineExpr::scaled(b, 0.5), AffineExpr::col(c), AffineExpr::col(a)],
        );
        p.add_cone(
            ConeKind::Soc,
            "ball",
            vec![AffineExpr::constant(1.0), AffineExpr::new(vec![(a, 2.0)], 1e-17)],
        );
        p
    }

    #[test]
    fn round_trip_is_exact() {
        let p = sample();
        let text = write_dump(&p);
        let q: ConicProblem<f64> = parse_dump(&text).unwrap();
        assert_eq!(q.col_names[0], "P_line_1");
        let mut p2 = p.clone();
        p2.col_names[0] = "P_line_1".into();
        assert_eq!(p2, q);
        assert_eq!(write_dump(&q), text);
    }

    #[test]
    fn truncated_cone_rejected() {
        let text = "cols 1\ncol 0 0e0 1e0 x\nsoc c 2\nm 1e0\n";
        assert!(matches!(parse_dump::<f64>(text), Err(ConicError::Dump { .. })));
    }

    #[test]
    fn bad_term_reports_line() {
        let text = "cols 1\ncol 0 0e0 1e0 x\nle r 1e0 0-1\n";
        match parse_dump::<f64>(text) {
            Err(ConicError::Dump { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undeclared_column_rejected() {
        let text = "cols 1\ncol 0 0e0 1e0 x\nle r 1e0 3:1e0\n";
        assert!(matches!(
            parse_dump::<f64>(text),
            Err(ConicError::ColumnOutOfRange { index: 3, .. })
        ));
    }
}
