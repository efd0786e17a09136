use std::ops::Range;

use super::ConicError;

pub type VarId = usize;

/// Affine form `sum(coef * x[var]) + constant`. Repeated variables are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(mut self, v: VarId, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, v: VarId, coef: f64) {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for &(v, c) in &other.terms {
            self.terms.push((v, c * scale));
        }
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::default();
        out.add_scaled(self, scale);
        out
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compacted(mut self) -> LinExpr {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>() + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `expr == 0`
    Eq,
    /// `expr <= 0`
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: RowKind,
    pub expr: LinExpr,
    pub tag: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocKind {
    /// `members = [t, x..]`, `||x|| <= t`
    Standard,
    /// `members = [t, u, x..]`, `2 t u >= ||x||^2`, `t, u >= 0`
    Rotated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub kind: SocKind,
    pub members: Vec<LinExpr>,
    pub tag: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SocId(pub usize);

/// Minimize a linear objective over box-bounded variables subject to linear
/// equality/inequality rows and second-order cone blocks.
///
/// Dual convention: every inequality row is `g(x) <= 0` with multiplier
/// `phi >= 0` and Lagrangian `objective + phi * g(x)`; equality rows use the
/// same sign with a free multiplier; a cone block with members `s(x)` enters
/// as `- <y, s(x)>` with `y` in the (self-dual) cone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    pub objective: LinExpr,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_tags: Vec<&'static str>,
    pub rows: Vec<Row>,
    pub socs: Vec<SocBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn add_var(&mut self, tag: &'static str, lo: f64, hi: f64) -> VarId {
        self.lower.push(lo);
        self.upper.push(hi);
        self.var_tags.push(tag);
        self.lower.len() - 1
    }

    pub fn add_free(&mut self, tag: &'static str) -> VarId {
        self.add_var(tag, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_vars(&mut self, tag: &'static str, n: usize, lo: f64, hi: f64) -> Range<VarId> {
        let start = self.n_vars();
        for _ in 0..n {
            self.add_var(tag, lo, hi);
        }
        start..self.n_vars()
    }

    pub fn add_le(&mut self, tag: &'static str, expr: LinExpr) -> RowId {
        self.rows.push(Row {
            kind: RowKind::Le,
            expr,
            tag,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn add_eq(&mut self, tag: &'static str, expr: LinExpr) -> RowId {
        self.rows.push(Row {
            kind: RowKind::Eq,
            expr,
            tag,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn add_soc(&mut self, tag: &'static str, kind: SocKind, members: Vec<LinExpr>) -> SocId {
        self.socs.push(SocBlock { kind, members, tag });
        SocId(self.socs.len() - 1)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Checks index ranges, bound order, finiteness and cone arity.
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.n_vars();
        let bad = |what: String| Err(ConicError::Malformed(what));
        let check = |e: &LinExpr, ctx: &str| -> Result<(), ConicError> {
            if !e.constant.is_finite() {
                return Err(ConicError::Malformed(format!("{ctx}: non-finite constant")));
            }
            for &(v, c) in &e.terms {
                if v >= n {
                    return Err(ConicError::Malformed(format!("{ctx}: variable {v} out of range")));
                }
                if !c.is_finite() {
                    return Err(ConicError::Malformed(format!("{ctx}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        if self.upper.len() != n || self.var_tags.len() != n {
            return bad("bound vectors differ in length".into());
        }
        for v in 0..n {
            if self.lower[v].is_nan() || self.upper[v].is_nan() || self.lower[v] > self.upper[v] {
                return bad(format!(
                    "variable {v} ({}) has bounds [{}, {}]",
                    self.var_tags[v], self.lower[v], self.upper[v]
                ));
            }
        }
        check(&self.objective, "objective")?;
        for (r, row) in self.rows.iter().enumerate() {
            check(&row.expr, &format!("row {r} ({})", row.tag))?;
        }
        for (k, soc) in self.socs.iter().enumerate() {
            let min = match soc.kind {
                SocKind::Standard => 1,
                SocKind::Rotated => 2,
            };
            if soc.members.len() < min {
                return bad(format!("cone {k} ({}) has too few members", soc.tag));
            }
            for m in &soc.members {
                check(m, &format!("cone {k} ({})", soc.tag))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_and_eval() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", 0.0, 1.0);
        let ys = p.add_vars("y", 2, 0.0, f64::INFINITY);
        let row = p.add_le("r", LinExpr::var(x).term(ys.start, 2.0).term(x, 1.0).plus(-1.0));
        assert_eq!(row, RowId(0));
        assert_eq!(p.rows[0].expr.eval(&[1.0, 0.5, 0.0]), 2.0);
        assert!(p.validate().is_ok());
        p.add_le("bad", LinExpr::var(7));
        assert!(p.validate().is_err());
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut p = ConicProgram::new();
        p.add_var("x", 1.0, 0.0);
        assert!(matches!(p.validate(), Err(ConicError::Malformed(_))));
    }
}
