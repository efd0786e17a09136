//! Independent reference computations.

use gridval::case_io::Network;
use gridval::dro_opf::{Decisions, OpfInstance};
use gridval::lindistflow::predict_voltages;
use gridval::uncertainty::Feature;

/// Backward sweep for branch flows, forward sweep for squared voltages.
pub fn voltage_recursion(net: &Network, v0: f64, p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = net.n_nodes();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| net.path_to_root(j).len());
    let (mut fp, mut fq) = (p.to_vec(), q.to_vec());
    for &j in order.iter().rev() {
        if let Some(par) = net.nodes[j].parent {
            fp[par] += fp[j];
            fq[par] += fq[j];
        }
    }
    let mut v = vec![0.0; n];
    for &j in &order {
        let up = net.nodes[j].parent.map_or(v0, |par| v[par]);
        v[j] = up + 2.0 * (net.nodes[j].r_pu * fp[j] + net.nodes[j].x_pu * fq[j]);
    }
    v
}

/// Minimum transport cost by enumerating every spanning tree of the
/// bipartite supply/demand graph; basic feasible plans are tree-supported.
pub fn transport_brute_force(cost: &[Vec<f64>], supply: &[i64], demand: &[i64]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(n + m - 1);
    let parent: Vec<usize> = (0..n + m).collect();
    enumerate(&cells, n, 0, n + m - 1, &mut chosen, parent, &mut |tree| {
        if let Some(c) = tree_plan_cost(tree, cost, supply, demand) {
            best = best.min(c);
        }
    });
    best
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

fn enumerate(
    cells: &[(usize, usize)],
    n_rows: usize,
    from: usize,
    need: usize,
    chosen: &mut Vec<(usize, usize)>,
    uf: Vec<usize>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    if cells.len() - from < need - chosen.len() {
        return;
    }
    for k in from..cells.len() {
        let (i, j) = cells[k];
        let mut next = uf.clone();
        let (a, b) = (find(&mut next, i), find(&mut next, n_rows + j));
        if a == b {
            continue;
        }
        next[a] = b;
        chosen.push(cells[k]);
        enumerate(cells, n_rows, k + 1, need, chosen, next, visit);
        chosen.pop();
    }
}

/// Flows on a spanning tree by peeling leaves; `None` if any is negative.
fn tree_plan_cost(tree: &[(usize, usize)], cost: &[Vec<f64>], supply: &[i64], demand: &[i64]) -> Option<f64> {
    let n = supply.len();
    let mut mass: Vec<i64> = supply.iter().chain(demand).copied().collect();
    let mut alive = vec![true; tree.len()];
    let mut total = 0.0;
    for _ in 0..tree.len() {
        let mut deg = vec![0; mass.len()];
        for (e, &(i, j)) in tree.iter().enumerate() {
            if alive[e] {
                deg[i] += 1;
                deg[n + j] += 1;
            }
        }
        let (e, leaf) = tree
            .iter()
            .enumerate()
            .filter(|(e, _)| alive[*e])
            .find_map(|(e, &(i, j))| {
                if deg[i] == 1 {
                    Some((e, i))
                } else if deg[n + j] == 1 {
                    Some((e, n + j))
                } else {
                    None
                }
            })?;
        let (i, j) = tree[e];
        let other = if leaf == i { n + j } else { i };
        let flow = mass[leaf];
        if flow < 0 {
            return None;
        }
        mass[leaf] = 0;
        mass[other] -= flow;
        total += flow as f64 * cost[i][j];
        alive[e] = false;
    }
    Some(total)
}

/// Mean of the worst `eta` share, computed from the sorted losses with a
/// fractional weight on the boundary sample.
pub fn sorted_tail_mean(losses: &[f64], eta: f64) -> f64 {
    let mut v = losses.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let mut mass = eta * v.len() as f64;
    let mut acc = 0.0;
    for x in v {
        let w = mass.min(1.0);
        acc += w * x;
        mass -= w;
        if mass <= 0.0 {
            break;
        }
    }
    acc / (eta * losses.len() as f64)
}

pub fn sample(inst: &OpfInstance, i: usize, node: usize, feat: Feature) -> f64 {
    let (f, m) = inst.index.position(node, feat).unwrap();
    inst.samples.clusters[f][(i, m)]
}

/// Largest voltage-limit excess over all nodes, both directions, per sample.
pub fn voltage_losses(inst: &OpfInstance, d: &Decisions) -> Vec<f64> {
    let n = inst.n_nodes();
    let lim = inst.assets.v_limits;
    (0..inst.n_samples())
        .map(|i| {
            let p: Vec<f64> = (0..n)
                .map(|k| (1.0 - d.alpha[k]) * sample(inst, i, k, Feature::PAv) - sample(inst, i, k, Feature::PL) + d.p_b[k])
                .collect();
            let q: Vec<f64> = (0..n).map(|k| d.q_c[k] - sample(inst, i, k, Feature::QL) + d.q_b[k]).collect();
            predict_voltages(&inst.sens, &p, &q)
                .unwrap()
                .iter()
                .map(|&v| (v - lim.v_max).max(lim.v_min - v))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}
