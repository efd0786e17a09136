//! Plain-text dump of a [`ConicProgram`], one record per line:
//!
//! ```text
//! vars <n>
//! var <id> <tag> <lower> <upper>
//! obj <constant> <var>:<coef> ...
//! row <id> eq|le <tag> <constant> <var>:<coef> ...
//! cone <id> standard|rotated <tag> <members>
//! member <constant> <var>:<coef> ...
//! ```
//!
//! Rows read `constant + sum(coef * x[var]) (== | <=) 0`. Cone members follow
//! their `cone` line; a standard cone is `||m[1..]|| <= m[0]`, a rotated one
//! `2 m[0] m[1] >= ||m[2..]||^2`.

use std::io::{self, Write};

use super::program::{ConicProgram, LinExpr, RowKind, SocKind};

fn write_expr(w: &mut impl Write, e: &LinExpr) -> io::Result<()> {
    write!(w, "{:e}", e.constant)?;
    for &(v, c) in &e.terms {
        write!(w, " {v}:{c:e}")?;
    }
    writeln!(w)
}

pub fn write_program(w: &mut impl Write, prog: &ConicProgram) -> io::Result<()> {
    writeln!(w, "vars {}", prog.n_vars())?;
    for v in 0..prog.n_vars() {
        writeln!(
            w,
            "var {v} {} {:e} {:e}",
            prog.var_tags[v], prog.lower[v], prog.upper[v]
        )?;
    }
    write!(w, "obj ")?;
    write_expr(w, &prog.objective)?;
    for (r, row) in prog.rows.iter().enumerate() {
        let kind = match row.kind {
            RowKind::Eq => "eq",
            RowKind::Le => "le",
        };
        write!(w, "row {r} {kind} {} ", row.tag)?;
        write_expr(w, &row.expr)?;
    }
    for (k, soc) in prog.socs.iter().enumerate() {
        let kind = match soc.kind {
            SocKind::Standard => "standard",
            SocKind::Rotated => "rotated",
        };
        writeln!(w, "cone {k} {kind} {} {}", soc.tag, soc.members.len())?;
        for m in &soc.members {
            write!(w, "member ")?;
            write_expr(w, m)?;
        }
    }
    Ok(())
}
