//! Tidy CSV tables. Floats use Rust's shortest round-trip formatting so that
//! identical runs give identical bytes.

use std::path::Path;

use super::oos::{OosScore, ResultBundle};
use super::sweep::SweepRow;
use super::{HarnessError, Study};
use crate::valuation::{CriticalEpsReport, DataValueReport};

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write(dir: &Path, name: &str, content: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

pub fn objective_csv(rows: &[SweepRow]) -> String {
    table(
        &["hour", "level", "eps", "objective", "error"],
        rows.iter()
            .map(|r| {
                vec![
                    r.hour.to_string(),
                    r.level.to_string(),
                    join(&r.eps),
                    opt(r.objective),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    )
}

fn mu_rows(hour: usize, level: String, rep: &DataValueReport) -> Vec<Vec<String>> {
    (0..rep.mu.len())
        .map(|f| {
            vec![
                hour.to_string(),
                level.clone(),
                (f + 1).to_string(),
                rep.eps[f].to_string(),
                rep.lambda_co[f].to_string(),
                rep.lambda_vol[f].to_string(),
                rep.sum_lambda_inv(f).to_string(),
                rep.phi_vol.to_string(),
                rep.mu[f].to_string(),
            ]
        })
        .collect()
}

const MU_HEADER: [&str; 9] = ["hour", "level", "f", "eps", "lambda_co", "lambda_vol", "sum_lambda_inv", "phi_vol", "mu"];

pub fn mu_csv(rows: &[SweepRow]) -> String {
    table(
        &MU_HEADER,
        rows.iter()
            .filter_map(|r| r.report.as_ref().map(|rep| mu_rows(r.hour, r.level.to_string(), rep)))
            .flatten()
            .collect(),
    )
}

pub fn lambda_csv(study: &Study, rows: &[SweepRow]) -> String {
    let mut out = Vec::new();
    for r in rows {
        let Some(rep) = &r.report else { continue };
        for f in 0..rep.mu.len() {
            for (family, v) in [("co", rep.lambda_co[f]), ("vol", rep.lambda_vol[f])] {
                out.push(vec![
                    r.hour.to_string(),
                    r.level.to_string(),
                    family.into(),
                    (f + 1).to_string(),
                    String::new(),
                    v.to_string(),
                    String::new(),
                ]);
            }
        }
        for t in &rep.inverter {
            out.push(vec![
                r.hour.to_string(),
                r.level.to_string(),
                "inv".into(),
                (t.cluster + 1).to_string(),
                study.net.nodes[t.node].bus_id.to_string(),
                t.lambda_inv.to_string(),
                t.phi_inv.to_string(),
            ]);
        }
    }
    table(&["hour", "level", "family", "f", "bus", "lambda", "phi"], out)
}

fn scores(b: &ResultBundle) -> [&OosScore; 2] {
    [&b.dro, &b.saa]
}

pub fn cost_oos_csv(bundles: &[ResultBundle]) -> String {
    let mut out = Vec::new();
    for b in bundles {
        for s in scores(b) {
            for (i, c) in s.costs.iter().enumerate() {
                out.push(vec![
                    b.hour.to_string(),
                    b.replicate.to_string(),
                    s.formulation.clone(),
                    i.to_string(),
                    c.to_string(),
                ]);
            }
        }
    }
    table(&["hour", "replicate", "formulation", "sample", "cost"], out)
}

pub fn voltages_oos_csv(study: &Study, bundles: &[ResultBundle]) -> String {
    let mut out = Vec::new();
    for b in bundles {
        for s in scores(b) {
            for (i, v) in s.voltages.iter().enumerate() {
                for (n, x) in v.iter().enumerate() {
                    out.push(vec![
                        b.hour.to_string(),
                        b.replicate.to_string(),
                        s.formulation.clone(),
                        i.to_string(),
                        study.net.nodes[n].bus_id.to_string(),
                        x.to_string(),
                    ]);
                }
            }
        }
    }
    table(&["hour", "replicate", "formulation", "sample", "bus", "v_sq"], out)
}

/// Linear-interpolation percentile of a sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn oos_summary_csv(bundles: &[ResultBundle]) -> String {
    let mut out = Vec::new();
    for b in bundles {
        for s in scores(b) {
            let mut row = vec![
                b.hour.to_string(),
                b.replicate.to_string(),
                s.formulation.clone(),
                join(&b.eps),
                s.objective.to_string(),
                s.mean_cost.to_string(),
            ];
            row.extend([0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&q| percentile(&s.costs, q).to_string()));
            row.push(s.violations.to_string());
            row.push(s.violation_rate.to_string());
            row.push(s.kkt_ok.to_string());
            out.push(row);
        }
    }
    table(
        &[
            "hour",
            "replicate",
            "formulation",
            "eps",
            "objective",
            "mean_cost",
            "cost_p5",
            "cost_p25",
            "cost_p50",
            "cost_p75",
            "cost_p95",
            "violations",
            "violation_rate",
            "kkt_ok",
        ],
        out,
    )
}

pub fn oos_mu_csv(bundles: &[ResultBundle]) -> String {
    table(
        &MU_HEADER,
        bundles
            .iter()
            .flat_map(|b| mu_rows(b.hour, format!("replicate {}", b.replicate), &b.value))
            .collect(),
    )
}

pub fn critical_eps_csv(reports: &[CriticalEpsReport]) -> String {
    let mut out = Vec::new();
    for r in reports {
        for e in &r.entries {
            out.push(vec![
                (r.cluster + 1).to_string(),
                e.family.name().into(),
                e.critical.map(|c| c.to_string()).unwrap_or_else(|| "above grid max".into()),
                join(&e.vanished_at),
                r.others.to_string(),
                r.tol.to_string(),
            ]);
        }
    }
    table(&["f", "family", "critical", "vanished_at", "others", "tol"], out)
}
