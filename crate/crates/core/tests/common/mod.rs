//! Small feeders shared by the integration tests.
#![allow(dead_code)]

pub mod oracles;

use gridval::case_io::{ClusterSpec, DerUnit, PvSpec, PvUnit, ScenarioConfig, VoltageLimits};
use gridval::conic::SolverConfig;
use gridval::dro_opf::{Decisions, OpfInstance};
use gridval::harness::Study;
use gridval::uncertainty::LoadCase;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Radial feeder rooted at bus 1. Entry `k` describes bus `k + 2`.
#[derive(Debug, Clone)]
pub struct Feeder {
    pub parent: Vec<u32>,
    pub r_ohm: Vec<f64>,
    pub x_ohm: Vec<f64>,
    pub pd_kw: Vec<f64>,
    pub qd_kvar: Vec<f64>,
}

impl Feeder {
    pub fn case_text(&self) -> String {
        let mut s = String::from("function mpc = small\nmpc.version = '2';\nmpc.baseMVA = 10;\nmpc.bus = [\n");
        s.push_str("\t1\t3\t0\t0\t0\t0\t1\t1\t0\t12.66\t1\t1\t1;\n");
        for k in 0..self.parent.len() {
            s.push_str(&format!(
                "\t{}\t1\t{}\t{}\t0\t0\t1\t1\t0\t12.66\t1\t1.1\t0.9;\n",
                k + 2,
                self.pd_kw[k],
                self.qd_kvar[k]
            ));
        }
        s.push_str("];\nmpc.branch = [\n");
        for k in 0..self.parent.len() {
            s.push_str(&format!(
                "\t{}\t{}\t{}\t{}\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n",
                self.parent[k],
                k + 2,
                self.r_ohm[k],
                self.x_ohm[k]
            ));
        }
        s.push_str("];\n");
        s
    }
}

/// Five buses: a trunk 1-2-3-4 with a lateral 2-5.
pub fn five_bus_feeder() -> Feeder {
    Feeder {
        parent: vec![1, 2, 3, 2],
        r_ohm: vec![0.6, 0.9, 1.1, 0.8],
        x_ohm: vec![0.35, 0.5, 0.6, 0.45],
        pd_kw: vec![250.0, 300.0, 200.0, 350.0],
        qd_kvar: vec![120.0, 150.0, 90.0, 160.0],
    }
}

pub fn five_bus_scenario() -> ScenarioConfig {
    ScenarioConfig {
        pv: Some(PvSpec::Units(vec![
            PvUnit { bus: 3, rating_kw: 900.0 },
            PvUnit { bus: 4, rating_kw: 1600.0 },
        ])),
        der: Some(vec![DerUnit {
            bus: 5,
            p_min_kw: -200.0,
            p_max_kw: 200.0,
            q_min_kvar: 0.0,
            q_max_kvar: 0.0,
        }]),
        voltage_limits: Some(VoltageLimits {
            v_min: 0.95,
            v_max: 1.03,
            v0_sq: 1.0,
        }),
        clusters: ClusterSpec::Buses(vec![vec![2, 3], vec![4, 5]]),
        ..Default::default()
    }
}

pub fn five_bus() -> Study {
    Study::new(&five_bus_feeder().case_text(), &five_bus_scenario()).expect("five-bus study")
}

pub const NOON: usize = 12;

pub fn instance(study: &Study, hour: usize, n: usize, seed: u64, eps: Vec<f64>) -> OpfInstance {
    let samples = study.draw(hour, LoadCase::Low, n, seed).expect("draw");
    study.instance(hour, LoadCase::Low, samples, eps).expect("instance")
}

pub fn solver() -> SolverConfig {
    SolverConfig::default()
}

pub fn random_feeder(rng: &mut ChaCha8Rng) -> Feeder {
    let mut f = five_bus_feeder();
    for k in 0..f.parent.len() {
        f.parent[k] = rng.random_range(1..=k as u32 + 1);
        f.r_ohm[k] = rng.random_range(0.2..1.5);
        f.x_ohm[k] = rng.random_range(0.1..0.8);
        f.pd_kw[k] = rng.random_range(50.0..400.0);
        f.qd_kvar[k] = rng.random_range(20.0..200.0);
    }
    f
}

pub fn random_decisions(inst: &OpfInstance, rng: &mut ChaCha8Rng) -> Decisions {
    let n = inst.n_nodes();
    let mut d = Decisions::zeros(n);
    for k in 0..n {
        if inst.assets.has_pv[k] {
            d.alpha[k] = rng.random_range(0.0..1.0);
            d.q_c[k] = rng.random_range(-0.05..0.05);
        }
        let lim = inst.assets.der[k];
        if lim.p_max > lim.p_min {
            d.p_b[k] = rng.random_range(lim.p_min..=lim.p_max);
        }
    }
    d
}
