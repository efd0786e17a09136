//! Multi-source Wasserstein program: worst-case expected cost and worst-case
//! CVaR constraints over the product of per-cluster Wasserstein balls
//! (order 1, l1 ground metric) intersected with the support box.

use std::ops::Range;

use nalgebra::DMatrix;

use super::decisions::{add_decision_vars, DecisionVars, Decisions};
use super::halfspaces::voltage_halfspaces;
use super::saa::quadratic_epigraphs;
use super::{BuiltProgram, ConstraintHandles, DecisionLayout, DroError, OpfInstance};
use crate::conic::{self, ConicProgram, LinExpr, RowId, SolverConfig, VarId};
use crate::uncertainty::{Feature, FeatureIndex, SampleSet, SupportBox};

pub fn build_msw_dro(inst: &OpfInstance) -> Result<BuiltProgram, DroError> {
    inst.validate()?;
    let mut p = ConicProgram::new();
    let dv = add_decision_vars(&mut p, inst);
    let mut layout = DecisionLayout::new(dv.clone());

    worst_case_cost(&mut p, inst, &dv, &mut layout);
    let vol_budget = voltage_block(&mut p, inst, &dv, &mut layout);
    let inv_budget = inverter_block(&mut p, inst, &dv, &mut layout);
    p.validate()?;
    Ok(BuiltProgram {
        program: p,
        layout,
        handles: ConstraintHandles { vol_budget, inv_budget },
    })
}

/// Objective: `sum_f lambda_co_f eps_f + sum_n (mean_i s_co1 + e_n(|q_c| + |q_B|) + mean_i s_co2)`.
/// Each `s_co1` row caps the purchase/feed-in term at a support corner less
/// the transport cost of reaching it, or at the sample itself; `s_co2` does
/// the same for the curtailment reimbursement.
fn worst_case_cost(p: &mut ConicProgram, inst: &OpfInstance, dv: &DecisionVars, layout: &mut DecisionLayout) {
    let n = inst.n_nodes();
    let ns = inst.n_samples();
    let inv_i = 1.0 / ns as f64;
    let lam = p.add_vars("lambda_co", inst.n_clusters(), 0.0, f64::INFINITY);
    let mut obj = dv.reactive_cost(inst);
    for (f, v) in lam.clone().enumerate() {
        obj.push(v, inst.eps[f]);
    }
    let s1 = p.add_vars("s_co1", n * ns, 0.0, f64::INFINITY);
    let s2 = p.add_vars("s_co2", n * ns, 0.0, f64::INFINITY);
    for k in 0..n {
        let cc = inst.assets.cost[k];
        let lam_l = lam.start + inst.index.cluster_of(k, Feature::PL);
        let lam_a = lam.start + inst.index.cluster_of(k, Feature::PAv);
        let (pl_lo, pl_hi) = inst.bounds(k, Feature::PL);
        let (pa_lo, pa_hi) = inst.bounds(k, Feature::PAv);
        let (a, pb) = (dv.alpha[k], dv.p_b[k]);
        // p_l - (1 - alpha) p_av - p_B
        let net = |pl: f64, pav: f64| LinExpr::constant(pl - pav).term(a, pav).term(pb, -1.0);
        for i in 0..ns {
            let (v1, v2) = (s1.start + k * ns + i, s2.start + k * ns + i);
            obj.push(v1, inv_i);
            obj.push(v2, inv_i);
            let pl = inst.sample(i, k, Feature::PL);
            let pav = inst.sample(i, k, Feature::PAv);

            let row = net(pl_hi, pa_lo)
                .scaled(cc.c)
                .term(lam_l, -(pl_hi - pl))
                .term(lam_a, -(pav - pa_lo))
                .term(v1, -1.0);
            p.add_le("co1_buy_corner", row.compacted());
            let row = net(pl_lo, pa_hi)
                .scaled(-cc.d)
                .term(lam_l, -(pl - pl_lo))
                .term(lam_a, -(pa_hi - pav))
                .term(v1, -1.0);
            p.add_le("co1_sell_corner", row.compacted());
            p.add_le("co1_buy", net(pl, pav).scaled(cc.c).term(v1, -1.0));
            p.add_le("co1_sell", net(pl, pav).scaled(-cc.d).term(v1, -1.0));

            let row = LinExpr::constant(0.0)
                .term(a, cc.h * pa_hi)
                .term(lam_a, -(pa_hi - pav))
                .term(v2, -1.0);
            p.add_le("co2_upper", row.compacted());
            let row = LinExpr::constant(0.0)
                .term(a, cc.h * pa_lo)
                .term(lam_a, -(pav - pa_lo))
                .term(v2, -1.0);
            p.add_le("co2_lower", row.compacted());
            p.add_le("co2_sample", LinExpr::constant(0.0).term(a, cc.h * pav).term(v2, -1.0));
        }
    }
    p.objective = obj;
    layout.lambda_co = lam.collect();
    layout.blocks.push(("s_co1", s1));
    layout.blocks.push(("s_co2", s2));
}

/// Max-affine loss `max_r <a_r, delta> + c_r` over the global feature vector,
/// with coefficients affine in program variables.
pub(crate) struct MaxAffine {
    pub a: Vec<Vec<LinExpr>>,
    pub c: Vec<LinExpr>,
}

/// Emits `s_i >= sup_{delta in box} [loss(delta) - sum_f lambda_f ||delta_f - d_f,i||_1]`
/// for every sample through the dual of the inner problem: per piece, cluster
/// sample and component a multiplier `|z| <= lambda_f`, and `u, l >= 0` with
/// `a - z = u - l` resolving the supremum over the interval. Components with
/// a degenerate interval contribute `a * upper` directly. Returns the `s`
/// variables and the range spanned by `(z, u, l)`.
pub(crate) fn emit_worst_case(
    p: &mut ConicProgram,
    loss: &MaxAffine,
    index: &FeatureIndex,
    samples: &SampleSet,
    support: &SupportBox,
    lambda: &[VarId],
    tag: &'static str,
) -> (Range<VarId>, Range<VarId>) {
    let ns = samples.n_samples();
    let mut free = Vec::new();
    let mut fixed = Vec::new();
    for f in 0..index.n_clusters() {
        for m in 0..index.dim(f) {
            let g = index.global(f, m);
            let (lo, hi) = support.bounds(f, m);
            if lo < hi {
                free.push((f, m, g, lo, hi));
            } else {
                fixed.push((g, hi));
            }
        }
    }
    let s = p.add_vars(tag, ns, f64::NEG_INFINITY, f64::INFINITY);
    let aux_start = p.n_vars();
    for (a_r, c_r) in loss.a.iter().zip(&loss.c) {
        let mut base = c_r.clone();
        for &(g, hi) in &fixed {
            base.add_scaled(&a_r[g], hi);
        }
        let base = base.compacted();
        for i in 0..ns {
            let z = p.add_vars("wc_z", free.len(), f64::NEG_INFINITY, f64::INFINITY);
            let u = p.add_vars("wc_u", free.len(), 0.0, f64::INFINITY);
            let l = p.add_vars("wc_l", free.len(), 0.0, f64::INFINITY);
            let mut row = base.clone();
            for (j, &(f, m, g, lo, hi)) in free.iter().enumerate() {
                let (zv, uv, lv) = (z.start + j, u.start + j, l.start + j);
                let d = samples.clusters[f][(i, m)];
                row.push(zv, d);
                row.push(uv, hi);
                row.push(lv, -lo);
                let eq = a_r[g].clone().term(zv, -1.0).term(uv, -1.0).term(lv, 1.0);
                p.add_eq("wc_split", eq);
                p.add_le("wc_z_cap", LinExpr::var(zv).term(lambda[f], -1.0));
                p.add_le("wc_z_cap", LinExpr::var(zv).scaled(-1.0).term(lambda[f], -1.0));
            }
            p.add_le("wc_piece", row.term(s.start + i, -1.0));
        }
    }
    (s, aux_start..p.n_vars())
}

/// Joint voltage block: the worst-case CVaR of `max_k <a_k, delta> + c_k`
/// with an extra zero piece, written through `varphi <= 0` and `varpi`.
fn voltage_block(p: &mut ConicProgram, inst: &OpfInstance, dv: &DecisionVars, layout: &mut DecisionLayout) -> RowId {
    let varphi = p.add_var("varphi_vol", f64::NEG_INFINITY, 0.0);
    let varpi = p.add_free("varpi_vol");
    let (lam, s) = voltage_sup(p, inst, |e| dv.map(e), varphi);
    let mut budget = LinExpr::constant(0.0).term(varpi, -inst.assets.risk.eta_vol);
    for (f, &v) in lam.iter().enumerate() {
        budget.push(v, inst.eps[f]);
    }
    for v in s.clone() {
        budget.push(v, 1.0 / inst.n_samples() as f64);
    }
    let row = p.add_le("vol_budget", budget);
    p.add_le("vol_link", LinExpr::var(varpi).term(varphi, 1.0));
    layout.lambda_vol = lam;
    layout.varphi_vol = Some(varphi);
    layout.varpi_vol = Some(varpi);
    layout.blocks.push(("s_vol", s));
    row
}

fn voltage_sup(
    p: &mut ConicProgram,
    inst: &OpfInstance,
    map: impl Fn(&LinExpr) -> LinExpr,
    varphi: VarId,
) -> (Vec<VarId>, Range<VarId>) {
    let hs = voltage_halfspaces(inst);
    let d = inst.index.total_dim();
    let mut a: Vec<Vec<LinExpr>> = hs.a.iter().map(|row| row.iter().map(&map).collect()).collect();
    let mut c: Vec<LinExpr> = hs.c.iter().map(|e| map(e).term(varphi, -1.0)).collect();
    a.push(vec![LinExpr::constant(0.0); d]);
    c.push(LinExpr::constant(0.0));
    let lam: Vec<VarId> = p.add_vars("lambda_vol", inst.n_clusters(), 0.0, f64::INFINITY).collect();
    let (s, _) = emit_worst_case(
        p,
        &MaxAffine { a, c },
        &inst.index,
        &inst.samples,
        &inst.support,
        &lam,
        "s_vol",
    );
    (lam, s)
}

/// Per PV node: worst-case CVaR of `((1 - alpha) p_av)^2 + q_c^2 - S^2`
/// using only that node's availability data.
fn inverter_block(
    p: &mut ConicProgram,
    inst: &OpfInstance,
    dv: &DecisionVars,
    layout: &mut DecisionLayout,
) -> Vec<(usize, RowId)> {
    let ns = inst.n_samples();
    let eta = inst.assets.risk.eta_inv;
    let mut out = Vec::new();
    for k in inst.pv_nodes() {
        let f = inst.index.cluster_of(k, Feature::PAv);
        let (_, hi) = inst.bounds(k, Feature::PAv);
        let s2 = inst.assets.pv_rating[k].powi(2);
        let (t, sigma) = quadratic_epigraphs(p, dv, k);
        let lam = p.add_var("lambda_inv", 0.0, f64::INFINITY);
        let varphi = p.add_var("varphi_inv", f64::NEG_INFINITY, 0.0);
        let varpi = p.add_free("varpi_inv");
        let s = p.add_vars("s_inv", ns, 0.0, f64::INFINITY);
        // w = sigma - S^2 - varphi
        let w = LinExpr::constant(-s2).term(sigma, 1.0).term(varphi, -1.0);
        for i in 0..ns {
            let pav = inst.sample(i, k, Feature::PAv);
            let sv = s.start + i;
            p.add_le(
                "inv_upper",
                w.clone().term(t, hi * hi).term(lam, -(hi - pav)).term(sv, -1.0).compacted(),
            );
            p.add_le("inv_sample", w.clone().term(t, pav * pav).term(sv, -1.0));
        }
        let mut budget = LinExpr::constant(0.0)
            .term(lam, inst.eps[f])
            .term(varpi, -eta);
        for v in s.clone() {
            budget.push(v, 1.0 / ns as f64);
        }
        out.push((k, p.add_le("inv_budget", budget)));
        p.add_le("inv_link", LinExpr::var(varpi).term(varphi, 1.0));
        layout.lambda_inv.push((k, lam));
        layout.varphi_inv.push((k, varphi));
        layout.varpi_inv.push((k, varpi));
        layout.t_inv.push((k, t));
        layout.sigma_inv.push((k, sigma));
        layout.pv_cluster.push((k, inst.index.cluster_of(k, Feature::PAv)));
        layout.blocks.push(("s_inv", s));
    }
    out
}

/// Optimal value of the voltage block for fixed decisions: the worst-case
/// CVaR `min_varphi varphi + (1/eta)(sum_f lambda_f eps_f + mean_i s_i)`.
/// At zero radius this is the empirical CVaR of the joint voltage loss.
pub fn voltage_block_value(inst: &OpfInstance, dec: &Decisions, cfg: &SolverConfig) -> Result<f64, DroError> {
    inst.validate()?;
    let x = dec.symbols();
    let mut p = ConicProgram::new();
    let varphi = p.add_free("varphi_vol");
    let (lam, s) = voltage_sup(&mut p, inst, |e| LinExpr::constant(e.eval(&x)), varphi);
    let inv_eta = 1.0 / inst.assets.risk.eta_vol;
    let mut obj = LinExpr::var(varphi);
    for (f, &v) in lam.iter().enumerate() {
        obj.push(v, inv_eta * inst.eps[f]);
    }
    for v in s {
        obj.push(v, inv_eta / inst.n_samples() as f64);
    }
    p.objective = obj;
    let sol = conic::solve(&p, cfg)?;
    super::require_optimal(&sol)?;
    Ok(sol.objective)
}

/// `sup E_Q[max_r (<a_r, delta> + c_r)]` over distributions within `eps_f` of
/// the empirical distribution of each cluster and supported on the box, for
/// a loss with numeric coefficients.
pub fn worst_case_expectation(
    a: &DMatrix<f64>,
    c: &[f64],
    index: &FeatureIndex,
    samples: &SampleSet,
    support: &SupportBox,
    eps: &[f64],
    cfg: &SolverConfig,
) -> Result<f64, DroError> {
    let d = index.total_dim();
    if a.ncols() != d || a.nrows() != c.len() || eps.len() != index.n_clusters() {
        return Err(DroError::Instance("loss and cluster dimensions disagree".into()));
    }
    let loss = MaxAffine {
        a: (0..a.nrows())
            .map(|r| (0..d).map(|g| LinExpr::constant(a[(r, g)])).collect())
            .collect(),
        c: c.iter().map(|&v| LinExpr::constant(v)).collect(),
    };
    let mut p = ConicProgram::new();
    let lam: Vec<VarId> = p.add_vars("lambda", index.n_clusters(), 0.0, f64::INFINITY).collect();
    let (s, _) = emit_worst_case(&mut p, &loss, index, samples, support, &lam, "s");
    let mut obj = LinExpr::constant(0.0);
    for (f, &v) in lam.iter().enumerate() {
        obj.push(v, eps[f]);
    }
    for v in s {
        obj.push(v, 1.0 / samples.n_samples() as f64);
    }
    p.objective = obj;
    let sol = conic::solve(&p, cfg)?;
    super::require_optimal(&sol)?;
    Ok(sol.objective)
}
