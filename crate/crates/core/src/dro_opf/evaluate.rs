//! Ex-post evaluation of fixed decisions against realized uncertainty.

use nalgebra::DVector;

use super::decisions::{Decisions, NodeScenario};
use crate::case_io::{AssetTable, VoltageLimits};
use crate::lindistflow::{predict_voltages, VoltageSensitivity};

/// DSO cost of one realization: grid purchases, feed-in payments, reactive
/// power payments and curtailment reimbursement.
pub fn realized_cost(assets: &AssetTable, dec: &Decisions, sc: &NodeScenario) -> f64 {
    (0..dec.n_nodes())
        .map(|n| {
            let k = assets.cost[n];
            let pv = (1.0 - dec.alpha[n]) * sc.p_av[n];
            let net = sc.p_l[n] - dec.p_b[n] - pv;
            k.c * net.max(0.0)
                + k.d * (-net).max(0.0)
                + k.e * (dec.q_c[n].abs() + dec.q_b[n].abs())
                + k.h * dec.alpha[n] * sc.p_av[n]
        })
        .sum()
}

/// Squared voltage magnitudes under the linearized flow model.
pub fn realized_voltages(sens: &VoltageSensitivity, dec: &Decisions, sc: &NodeScenario) -> DVector<f64> {
    let n = dec.n_nodes();
    let p: Vec<f64> = (0..n)
        .map(|k| (1.0 - dec.alpha[k]) * sc.p_av[k] - sc.p_l[k] + dec.p_b[k])
        .collect();
    let q: Vec<f64> = (0..n).map(|k| dec.q_c[k] - sc.q_l[k] + dec.q_b[k]).collect();
    predict_voltages(sens, &p, &q).expect("decision and scenario sizes match the network")
}

/// Slack allowed before a voltage counts as out of limits, so that a
/// solution sitting exactly on a limit is not reported as violating it.
pub const VOLTAGE_TOL: f64 = 1e-7;

/// True when any node leaves `[v_min, v_max]` (joint violation).
pub fn voltage_violation(v: &DVector<f64>, lim: &VoltageLimits) -> bool {
    v.iter().any(|&x| x > lim.v_max + VOLTAGE_TOL || x < lim.v_min - VOLTAGE_TOL)
}

/// Largest excess of apparent power over the inverter rating, per unit squared.
pub fn inverter_excess(assets: &AssetTable, dec: &Decisions, sc: &NodeScenario) -> f64 {
    assets
        .pv_nodes()
        .map(|n| {
            let p = (1.0 - dec.alpha[n]) * sc.p_av[n];
            p * p + dec.q_c[n] * dec.q_c[n] - assets.pv_rating[n] * assets.pv_rating[n]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
