//! Sample-average program: empirical expected cost with CVaR versions of the
//! voltage and inverter chance constraints.

use super::decisions::{add_decision_vars, DecisionVars};
use super::halfspaces::voltage_halfspaces;
use super::{BuiltProgram, ConstraintHandles, DecisionLayout, DroError, OpfInstance};
use crate::conic::{ConicProgram, LinExpr, SocKind};
use crate::uncertainty::Feature;

pub fn build_saa(inst: &OpfInstance) -> Result<BuiltProgram, DroError> {
    inst.validate()?;
    let n = inst.n_nodes();
    let ns = inst.n_samples();
    let inv_i = 1.0 / ns as f64;
    let mut p = ConicProgram::new();
    let dv = add_decision_vars(&mut p, inst);
    let mut layout = DecisionLayout::new(dv.clone());

    // cost
    let mut obj = dv.reactive_cost(inst);
    let y = p.add_vars("cost_epi", n * ns, 0.0, f64::INFINITY);
    for k in 0..n {
        let cc = inst.assets.cost[k];
        let mean_pav = (0..ns).map(|i| inst.sample(i, k, Feature::PAv)).sum::<f64>() * inv_i;
        obj.push(dv.alpha[k], cc.h * mean_pav);
        for i in 0..ns {
            let yv = y.start + k * ns + i;
            obj.push(yv, inv_i);
            // net = p_l - p_B - (1 - alpha) p_av
            let (pav, pl) = (inst.sample(i, k, Feature::PAv), inst.sample(i, k, Feature::PL));
            let net = LinExpr::constant(pl - pav).term(dv.p_b[k], -1.0).term(dv.alpha[k], pav);
            p.add_le("cost_buy", net.scaled(cc.c).term(yv, -1.0));
            p.add_le("cost_sell", net.scaled(-cc.d).term(yv, -1.0));
        }
    }
    p.objective = obj;
    layout.blocks.push(("cost_epi", y));

    let vol_budget = saa_voltage(&mut p, inst, &dv, &mut layout);
    let inv_budget = saa_inverter(&mut p, inst, &dv, &mut layout);
    p.validate()?;
    Ok(BuiltProgram {
        program: p,
        layout,
        handles: ConstraintHandles { vol_budget, inv_budget },
    })
}

/// `(1/I) sum_i [max_k(<a_k, d_i> + c_k) + phi]^+ <= eta phi`.
fn saa_voltage(
    p: &mut ConicProgram,
    inst: &OpfInstance,
    dv: &DecisionVars,
    layout: &mut DecisionLayout,
) -> crate::conic::RowId {
    let ns = inst.n_samples();
    let hs = voltage_halfspaces(inst);
    let phi = p.add_free("varphi_vol");
    let v = p.add_vars("cvar_vol", ns, 0.0, f64::INFINITY);
    for i in 0..ns {
        let delta = inst.samples.global_row(i);
        for k in 0..hs.k() {
            let mut e = hs.c[k].clone();
            for (g, &d) in delta.iter().enumerate() {
                e.add_scaled(&hs.a[k][g], d);
            }
            let e = dv.map(&e).term(phi, 1.0).term(v.start + i, -1.0).compacted();
            p.add_le("vol_sample", e);
        }
    }
    let mut budget = LinExpr::constant(0.0).term(phi, -inst.assets.risk.eta_vol);
    for i in v.clone() {
        budget.push(i, 1.0 / ns as f64);
    }
    layout.varphi_vol = Some(phi);
    layout.blocks.push(("cvar_vol", v));
    p.add_le("vol_budget", budget)
}

/// Per PV node: `(1/I) sum_i [t p_av,i^2 + sigma - S^2 + phi]^+ <= eta phi`
/// with `t >= (1 - alpha)^2` and `sigma >= q_c^2` as rotated cones.
fn saa_inverter(
    p: &mut ConicProgram,
    inst: &OpfInstance,
    dv: &DecisionVars,
    layout: &mut DecisionLayout,
) -> Vec<(usize, crate::conic::RowId)> {
    let ns = inst.n_samples();
    let eta = inst.assets.risk.eta_inv;
    let mut out = Vec::new();
    for k in inst.pv_nodes() {
        let (t, sigma) = quadratic_epigraphs(p, dv, k);
        let phi = p.add_free("varphi_inv");
        let v = p.add_vars("cvar_inv", ns, 0.0, f64::INFINITY);
        let s2 = inst.assets.pv_rating[k].powi(2);
        for i in 0..ns {
            let pav = inst.sample(i, k, Feature::PAv);
            let e = LinExpr::constant(-s2)
                .term(t, pav * pav)
                .term(sigma, 1.0)
                .term(phi, 1.0)
                .term(v.start + i, -1.0);
            p.add_le("inv_sample", e);
        }
        let mut budget = LinExpr::constant(0.0).term(phi, -eta);
        for i in v.clone() {
            budget.push(i, 1.0 / ns as f64);
        }
        out.push((k, p.add_le("inv_budget", budget)));
        layout.varphi_inv.push((k, phi));
        layout.t_inv.push((k, t));
        layout.sigma_inv.push((k, sigma));
        layout.pv_cluster.push((k, inst.index.cluster_of(k, Feature::PAv)));
        layout.blocks.push(("cvar_inv", v));
    }
    out
}

/// `t >= (1 - alpha_n)^2` and `sigma >= q_c,n^2`.
pub(super) fn quadratic_epigraphs(p: &mut ConicProgram, dv: &DecisionVars, k: usize) -> (usize, usize) {
    let t = p.add_var("curtail_sq", 0.0, f64::INFINITY);
    let sigma = p.add_var("q_c_sq", 0.0, f64::INFINITY);
    p.add_soc(
        "curtail_sq",
        SocKind::Rotated,
        vec![LinExpr::var(t), LinExpr::constant(0.5), LinExpr::constant(1.0).term(dv.alpha[k], -1.0)],
    );
    p.add_soc(
        "q_c_sq",
        SocKind::Rotated,
        vec![LinExpr::var(sigma), LinExpr::constant(0.5), LinExpr::var(dv.q_c[k])],
    );
    (t, sigma)
}
