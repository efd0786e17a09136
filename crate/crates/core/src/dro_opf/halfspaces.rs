use nalgebra::DMatrix;

use super::decisions::{Decisions, Symbol};
use super::OpfInstance;
use crate::conic::LinExpr;
use crate::uncertainty::Feature;

/// The joint voltage constraint as `max_k <a_k, delta> + c_k <= 0` over the
/// global feature vector. Row `j` is the upper limit at node `j`, row `N + j`
/// the lower limit. Entries are affine in the decision symbols.
#[derive(Debug, Clone)]
pub struct VoltageHalfspaces {
    /// `K x D` coefficient expressions.
    pub a: Vec<Vec<LinExpr>>,
    pub c: Vec<LinExpr>,
}

impl VoltageHalfspaces {
    pub fn k(&self) -> usize {
        self.c.len()
    }

    /// Numeric `(A, c)` for fixed decisions.
    pub fn fixed(&self, dec: &Decisions) -> (DMatrix<f64>, Vec<f64>) {
        let x = dec.symbols();
        let d = self.a.first().map_or(0, |r| r.len());
        let a = DMatrix::from_fn(self.k(), d, |k, g| self.a[k][g].eval(&x));
        (a, self.c.iter().map(|e| e.eval(&x)).collect())
    }
}

/// Voltages are `rho = R p + B q + a` with `p = (1 - alpha) p_av - p_l + p_B`
/// and `q = q_c - q_l + q_B`, so the coefficient of `p_av,n` is
/// `R_jn (1 - alpha_n)` and the decision-only part is
/// `w_j = sum_n R_jn p_B,n + B_jn (q_c,n + q_B,n) + a_j`.
pub fn voltage_halfspaces(inst: &OpfInstance) -> VoltageHalfspaces {
    let n = inst.n_nodes();
    let (r, b) = (&inst.sens.r, &inst.sens.b);
    let lim = inst.assets.v_limits;
    let d = inst.index.total_dim();
    let mut upper = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![LinExpr::constant(0.0); d];
        for (g, slot) in inst.index.global_slots().enumerate() {
            let k = slot.node;
            row[g] = match slot.feature {
                Feature::PAv => {
                    LinExpr::constant(r[(j, k)]).term(Symbol::Alpha(k).index(n), -r[(j, k)])
                }
                Feature::PL => LinExpr::constant(-r[(j, k)]),
                Feature::QL => LinExpr::constant(-b[(j, k)]),
            };
        }
        let mut wj = LinExpr::constant(inst.sens.a[j]);
        for k in 0..n {
            wj.push(Symbol::Pb(k).index(n), r[(j, k)]);
            wj.push(Symbol::Qc(k).index(n), b[(j, k)]);
            wj.push(Symbol::Qb(k).index(n), b[(j, k)]);
        }
        upper.push(row);
        w.push(wj);
    }
    let mut a = Vec::with_capacity(2 * n);
    let mut c = Vec::with_capacity(2 * n);
    for j in 0..n {
        a.push(upper[j].clone());
        c.push(w[j].clone().plus(-lim.v_max));
    }
    for j in 0..n {
        a.push(upper[j].iter().map(|e| e.scaled(-1.0)).collect());
        c.push(w[j].scaled(-1.0).plus(lim.v_min));
    }
    VoltageHalfspaces { a, c }
}
