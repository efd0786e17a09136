use std::collections::BTreeMap;

use serde::Serialize;

use super::UncertaintyError;
use crate::case_io::scenario::STUDY_CLUSTERS;
use crate::case_io::{ClusterPreset, ClusterSpec, Network};

/// Uncertain quantity at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// Available PV active power.
    PAv,
    /// Active load.
    PL,
    /// Reactive load.
    QL,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::PAv, Feature::PL, Feature::QL];

    pub fn name(self) -> &'static str {
        match self {
            Feature::PAv => "p_av",
            Feature::PL => "p_l",
            Feature::QL => "q_l",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    pub node: usize,
    pub feature: Feature,
}

/// Data providers, each owning an ordered list of (node, feature) slots.
/// Every slot of the network belongs to exactly one provider.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSet {
    pub n_nodes: usize,
    pub clusters: Vec<Vec<Slot>>,
}

impl ClusterSet {
    /// Each group of nodes becomes one provider; a node contributes
    /// `(p_av, p_l, q_l)` in that order.
    pub fn from_node_groups(n_nodes: usize, groups: &[Vec<usize>]) -> Result<Self, UncertaintyError> {
        let clusters = groups
            .iter()
            .map(|g| {
                g.iter()
                    .flat_map(|&node| Feature::ALL.map(|feature| Slot { node, feature }))
                    .collect()
            })
            .collect();
        let set = ClusterSet { n_nodes, clusters };
        feature_index_map(&set)?;
        Ok(set)
    }

    pub fn per_node(n_nodes: usize) -> Self {
        let groups: Vec<Vec<usize>> = (0..n_nodes).map(|n| vec![n]).collect();
        Self::from_node_groups(n_nodes, &groups).expect("singletons partition the nodes")
    }

    /// One provider for all load data, one for all PV availability.
    pub fn load_pv(n_nodes: usize) -> Self {
        let loads = (0..n_nodes)
            .flat_map(|node| [Feature::PL, Feature::QL].map(|feature| Slot { node, feature }))
            .collect();
        let pv = (0..n_nodes)
            .map(|node| Slot {
                node,
                feature: Feature::PAv,
            })
            .collect();
        ClusterSet {
            n_nodes,
            clusters: vec![loads, pv],
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }
}

/// Resolves a scenario cluster specification against a network. Buses in the
/// bus-range preset that are the slack or absent from the network are skipped.
pub fn cluster_set_from_spec(spec: &ClusterSpec, net: &Network) -> Result<ClusterSet, UncertaintyError> {
    let n = net.n_nodes();
    match spec {
        ClusterSpec::Named(ClusterPreset::PerNode) => Ok(ClusterSet::per_node(n)),
        ClusterSpec::Named(ClusterPreset::LoadPv) => Ok(ClusterSet::load_pv(n)),
        ClusterSpec::Named(ClusterPreset::Study5) => {
            let groups: Vec<Vec<usize>> = STUDY_CLUSTERS
                .iter()
                .map(|&(lo, hi)| (lo..=hi).filter_map(|b| net.index_of(b)).collect())
                .collect();
            ClusterSet::from_node_groups(n, &groups)
        }
        ClusterSpec::Buses(lists) => {
            let mut groups = Vec::with_capacity(lists.len());
            for list in lists {
                let mut g = Vec::with_capacity(list.len());
                for &bus in list {
                    g.push(net.index_of(bus).ok_or_else(|| {
                        UncertaintyError::Partition(format!("bus {bus} is not a non-slack node"))
                    })?);
                }
                groups.push(g);
            }
            ClusterSet::from_node_groups(n, &groups)
        }
    }
}

/// Bijection between `(node, feature)` and `(cluster, position)`, plus the
/// concatenated ("global") position used by program assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureIndex {
    by_slot: BTreeMap<Slot, (usize, usize)>,
    slots: Vec<Vec<Slot>>,
    offsets: Vec<usize>,
}

impl FeatureIndex {
    pub fn position(&self, node: usize, feature: Feature) -> Option<(usize, usize)> {
        self.by_slot.get(&Slot { node, feature }).copied()
    }

    pub fn slot(&self, cluster: usize, m: usize) -> Slot {
        self.slots[cluster][m]
    }

    pub fn n_clusters(&self) -> usize {
        self.slots.len()
    }

    pub fn dim(&self, cluster: usize) -> usize {
        self.slots[cluster].len()
    }

    /// Total number of uncertain features.
    pub fn total_dim(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0)
    }

    pub fn global(&self, cluster: usize, m: usize) -> usize {
        self.offsets[cluster] + m
    }

    pub fn global_of(&self, node: usize, feature: Feature) -> usize {
        let (f, m) = self.position(node, feature).expect("feature index covers every slot");
        self.global(f, m)
    }

    pub fn cluster_of(&self, node: usize, feature: Feature) -> usize {
        self.position(node, feature).expect("feature index covers every slot").0
    }

    /// Cluster of each global position.
    pub fn cluster_of_global(&self) -> Vec<usize> {
        (0..self.n_clusters())
            .flat_map(|f| std::iter::repeat(f).take(self.dim(f)))
            .collect()
    }

    /// Slots in global order.
    pub fn global_slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.slots.iter().flatten().copied()
    }

    /// Position of `p_av` at `node` (the `e_n` / `m_n` selector).
    pub fn pv_selector(&self, node: usize) -> (usize, usize) {
        self.position(node, Feature::PAv).expect("every node has a p_av slot")
    }

    /// Position of `p_l` at `node` (the `r_n` selector).
    pub fn load_selector(&self, node: usize) -> (usize, usize) {
        self.position(node, Feature::PL).expect("every node has a p_l slot")
    }
}

pub fn feature_index_map(clusters: &ClusterSet) -> Result<FeatureIndex, UncertaintyError> {
    let mut by_slot = BTreeMap::new();
    let mut offsets = vec![0];
    for (f, slots) in clusters.clusters.iter().enumerate() {
        if slots.is_empty() {
            return Err(UncertaintyError::Partition(format!("cluster {} is empty", f + 1)));
        }
        for (m, &slot) in slots.iter().enumerate() {
            if slot.node >= clusters.n_nodes {
                return Err(UncertaintyError::Partition(format!(
                    "cluster {} references node {} of {}",
                    f + 1,
                    slot.node,
                    clusters.n_nodes
                )));
            }
            if let Some((g, _)) = by_slot.insert(slot, (f, m)) {
                return Err(UncertaintyError::Partition(format!(
                    "{} of node {} is in clusters {} and {}",
                    slot.feature.name(),
                    slot.node,
                    g + 1,
                    f + 1
                )));
            }
        }
        offsets.push(offsets[f] + slots.len());
    }
    let want = 3 * clusters.n_nodes;
    if by_slot.len() != want {
        return Err(UncertaintyError::Partition(format!(
            "clusters cover {} of {want} node features",
            by_slot.len()
        )));
    }
    Ok(FeatureIndex {
        by_slot,
        slots: clusters.clusters.clone(),
        offsets,
    })
}
