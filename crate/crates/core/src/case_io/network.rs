use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::matpower::RawCase;
use super::CaseError;

/// Unit of the `r`/`x` columns of the case file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpedanceUnit {
    #[default]
    Ohm,
    Pu,
}

/// Unit of the `Pd`/`Qd` columns of the case file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadUnit {
    #[default]
    Kw,
    Mw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseUnits {
    #[serde(default)]
    pub impedance: ImpedanceUnit,
    #[serde(default)]
    pub load: LoadUnit,
}

/// A non-slack node together with the branch feeding it from its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub bus_id: u32,
    /// Index of the parent node, `None` when the parent is the slack bus.
    pub parent: Option<usize>,
    pub r_pu: f64,
    pub x_pu: f64,
    /// Single-period base load from the case file, per unit.
    pub p_load_pu: f64,
    pub q_load_pu: f64,
}

/// Radial feeder rooted at the slack bus. Nodes are the `N` non-slack buses
/// in breadth-first order from the slack (children visited by ascending bus
/// id), so every parent precedes its children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub base_mva: f64,
    pub slack_bus: u32,
    pub nodes: Vec<Node>,
}

/// Branch view `(parent, child, r_pu, x_pu)`; the parent is `None` for the slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub parent: Option<usize>,
    pub child: usize,
    pub r_pu: f64,
    pub x_pu: f64,
}

impl Network {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn branches(&self) -> impl Iterator<Item = Branch> + '_ {
        self.nodes.iter().enumerate().map(|(child, n)| Branch {
            parent: n.parent,
            child,
            r_pu: n.r_pu,
            x_pu: n.x_pu,
        })
    }

    pub fn index_of(&self, bus_id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.bus_id == bus_id)
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.bus_id).collect()
    }

    /// Node indices from `node` up to (excluding) the slack.
    pub fn path_to_root(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn kw_to_pu(&self, kw: f64) -> f64 {
        kw / (1000.0 * self.base_mva)
    }

    pub fn pu_to_kw(&self, pu: f64) -> f64 {
        pu * 1000.0 * self.base_mva
    }
}

/// Converts a parsed case into a radial network in per unit.
pub fn build_network(raw: &RawCase, units: CaseUnits) -> Result<Network, CaseError> {
    raw.validate()?;
    let slacks: Vec<_> = raw.buses.iter().filter(|b| b.kind == 3).collect();
    let slack = match slacks.as_slice() {
        [one] => *one,
        [] => return Err(CaseError::Config("case has no slack (type 3) bus".into())),
        many => {
            return Err(CaseError::Config(format!(
                "case has {} slack buses, expected exactly one",
                many.len()
            )))
        }
    };

    let live: Vec<_> = raw.branches.iter().filter(|b| b.in_service()).collect();
    if live.len() + 1 != raw.buses.len() {
        return Err(CaseError::NotRadial(format!(
            "{} in-service branches for {} buses",
            live.len(),
            raw.buses.len()
        )));
    }

    let bus_by_id: BTreeMap<u32, usize> =
        raw.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    // adjacency keyed by bus id so neighbours come out sorted
    let mut adj: BTreeMap<u32, Vec<(u32, usize)>> = BTreeMap::new();
    for (k, br) in live.iter().enumerate() {
        if br.from == br.to {
            return Err(CaseError::NotRadial(format!("self-loop at bus {}", br.from)));
        }
        adj.entry(br.from).or_default().push((br.to, k));
        adj.entry(br.to).or_default().push((br.from, k));
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }

    let mut node_of_bus: BTreeMap<u32, Option<usize>> = BTreeMap::new();
    node_of_bus.insert(slack.id, None);
    let mut nodes: Vec<Node> = Vec::with_capacity(raw.buses.len() - 1);
    let mut queue = VecDeque::from([slack.id]);
    while let Some(bus) = queue.pop_front() {
        let parent = node_of_bus[&bus];
        for &(next, k) in adj.get(&bus).map(Vec::as_slice).unwrap_or(&[]) {
            if node_of_bus.contains_key(&next) {
                continue;
            }
            let br = live[k];
            let from_bus = &raw.buses[bus_by_id[&bus]];
            let to_bus = &raw.buses[bus_by_id[&next]];
            if br.r < 0.0 || br.x < 0.0 {
                return Err(CaseError::Config(format!(
                    "negative impedance on branch {}-{}",
                    br.from, br.to
                )));
            }
            let scale = match units.impedance {
                ImpedanceUnit::Pu => 1.0,
                ImpedanceUnit::Ohm => {
                    let kv = from_bus.base_kv;
                    if !(kv > 0.0) {
                        return Err(CaseError::Config(format!(
                            "bus {} has no base kV for ohmic impedance conversion",
                            from_bus.id
                        )));
                    }
                    raw.base_mva / (kv * kv)
                }
            };
            let load_scale = match units.load {
                LoadUnit::Kw => 1.0 / (1000.0 * raw.base_mva),
                LoadUnit::Mw => 1.0 / raw.base_mva,
            };
            nodes.push(Node {
                bus_id: next,
                parent,
                r_pu: br.r * scale,
                x_pu: br.x * scale,
                p_load_pu: to_bus.pd * load_scale,
                q_load_pu: to_bus.qd * load_scale,
            });
            node_of_bus.insert(next, Some(nodes.len() - 1));
            queue.push_back(next);
        }
    }

    if nodes.len() + 1 != raw.buses.len() {
        return Err(CaseError::NotRadial(format!(
            "{} of {} buses reachable from slack bus {}",
            nodes.len() + 1,
            raw.buses.len(),
            slack.id
        )));
    }
    if raw.buses[bus_by_id[&slack.id]].pd != 0.0 || slack.qd != 0.0 {
        log::warn!("load at slack bus {} is ignored", slack.id);
    }

    Ok(Network {
        base_mva: raw.base_mva,
        slack_bus: slack.id,
        nodes,
    })
}
