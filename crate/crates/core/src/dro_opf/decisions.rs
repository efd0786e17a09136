use serde::Serialize;

use super::OpfInstance;
use crate::conic::{ConicProgram, LinExpr, Solution, VarId};
use crate::uncertainty::{Feature, FeatureIndex, SampleSet};

/// Set-points chosen before uncertainty is revealed, per unit, one entry per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decisions {
    pub alpha: Vec<f64>,
    pub q_c: Vec<f64>,
    pub p_b: Vec<f64>,
    pub q_b: Vec<f64>,
}

impl Decisions {
    pub fn zeros(n: usize) -> Self {
        Decisions {
            alpha: vec![0.0; n],
            q_c: vec![0.0; n],
            p_b: vec![0.0; n],
            q_b: vec![0.0; n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.alpha.len()
    }

    /// Values in symbol order `[alpha; q_c; p_b; q_b]`, see [`Symbol`].
    pub fn symbols(&self) -> Vec<f64> {
        [&self.alpha, &self.q_c, &self.p_b, &self.q_b]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

/// Decision symbols in a fixed `4N` layout, used for expressions that are
/// built once and later mapped onto program variables or fixed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Alpha(usize),
    Qc(usize),
    Pb(usize),
    Qb(usize),
}

impl Symbol {
    pub fn index(self, n_nodes: usize) -> usize {
        match self {
            Symbol::Alpha(n) => n,
            Symbol::Qc(n) => n_nodes + n,
            Symbol::Pb(n) => 2 * n_nodes + n,
            Symbol::Qb(n) => 3 * n_nodes + n,
        }
    }
}

/// One realization of the uncertain parameters at node level.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeScenario {
    pub p_av: Vec<f64>,
    pub p_l: Vec<f64>,
    pub q_l: Vec<f64>,
}

impl NodeScenario {
    pub fn from_samples(index: &FeatureIndex, samples: &SampleSet, i: usize, n_nodes: usize) -> Self {
        let get = |node: usize, feat: Feature| {
            let (f, m) = index.position(node, feat).expect("indexed");
            samples.clusters[f][(i, m)]
        };
        NodeScenario {
            p_av: (0..n_nodes).map(|n| get(n, Feature::PAv)).collect(),
            p_l: (0..n_nodes).map(|n| get(n, Feature::PL)).collect(),
            q_l: (0..n_nodes).map(|n| get(n, Feature::QL)).collect(),
        }
    }
}

/// Program variables holding the decisions, plus the epigraph variables of
/// `|q_c|` and `|q_B|` where those are not fixed.
#[derive(Debug, Clone)]
pub struct DecisionVars {
    pub alpha: Vec<VarId>,
    pub q_c: Vec<VarId>,
    pub p_b: Vec<VarId>,
    pub q_b: Vec<VarId>,
    pub abs_q_c: Vec<Option<VarId>>,
    pub abs_q_b: Vec<Option<VarId>>,
}

/// Adds decision variables with their deterministic bounds. Curtailment and
/// inverter reactive power exist only where there is PV; elsewhere they are
/// fixed at zero.
pub fn add_decision_vars(prog: &mut ConicProgram, inst: &OpfInstance) -> DecisionVars {
    let n = inst.n_nodes();
    let a = &inst.assets;
    let mut dv = DecisionVars {
        alpha: Vec::with_capacity(n),
        q_c: Vec::with_capacity(n),
        p_b: Vec::with_capacity(n),
        q_b: Vec::with_capacity(n),
        abs_q_c: Vec::with_capacity(n),
        abs_q_b: Vec::with_capacity(n),
    };
    for k in 0..n {
        let pv = a.has_pv[k];
        dv.alpha.push(prog.add_var("alpha", 0.0, if pv { 1.0 } else { 0.0 }));
        dv.q_c.push(if pv { prog.add_free("q_c") } else { prog.add_var("q_c", 0.0, 0.0) });
        let d = a.der[k];
        dv.p_b.push(prog.add_var("p_b", d.p_min, d.p_max));
        dv.q_b.push(prog.add_var("q_b", d.q_min, d.q_max));
    }
    for k in 0..n {
        let qc = dv.q_c[k];
        dv.abs_q_c.push(a.has_pv[k].then(|| abs_epigraph(prog, qc, "abs_q_c")));
        let qb = dv.q_b[k];
        let fixed_zero = a.der[k].q_min == 0.0 && a.der[k].q_max == 0.0;
        dv.abs_q_b.push((!fixed_zero).then(|| abs_epigraph(prog, qb, "abs_q_b")));
    }
    dv
}

fn abs_epigraph(prog: &mut ConicProgram, v: VarId, tag: &'static str) -> VarId {
    let t = prog.add_var(tag, 0.0, f64::INFINITY);
    prog.add_le(tag, LinExpr::var(v).term(t, -1.0));
    prog.add_le(tag, LinExpr::var(v).scaled(-1.0).term(t, -1.0));
    t
}

impl DecisionVars {
    pub fn n_nodes(&self) -> usize {
        self.alpha.len()
    }

    pub fn var(&self, s: Symbol) -> VarId {
        match s {
            Symbol::Alpha(n) => self.alpha[n],
            Symbol::Qc(n) => self.q_c[n],
            Symbol::Pb(n) => self.p_b[n],
            Symbol::Qb(n) => self.q_b[n],
        }
    }

    /// Rewrites an expression over decision symbols into program variables.
    pub fn map(&self, e: &LinExpr) -> LinExpr {
        let n = self.n_nodes();
        let mut out = LinExpr::constant(e.constant);
        for &(s, c) in &e.terms {
            let v = match s / n {
                0 => self.alpha[s % n],
                1 => self.q_c[s % n],
                2 => self.p_b[s % n],
                _ => self.q_b[s % n],
            };
            out.push(v, c);
        }
        out
    }

    /// `sum_n e_n (|q_c,n| + |q_B,n|)`.
    pub fn reactive_cost(&self, inst: &OpfInstance) -> LinExpr {
        let mut e = LinExpr::constant(0.0);
        for k in 0..self.n_nodes() {
            let coef = inst.assets.cost[k].e;
            for t in [self.abs_q_c[k], self.abs_q_b[k]].into_iter().flatten() {
                e.push(t, coef);
            }
        }
        e
    }

    pub fn extract(&self, sol: &Solution) -> Decisions {
        let take = |vs: &[VarId]| vs.iter().map(|&v| sol.value(v)).collect();
        Decisions {
            alpha: take(&self.alpha),
            q_c: take(&self.q_c),
            p_b: take(&self.p_b),
            q_b: take(&self.q_b),
        }
    }
}
