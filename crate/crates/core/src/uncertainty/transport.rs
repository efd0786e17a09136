//! Exact order-1 Wasserstein distance between uniform empirical
//! distributions under the l1 ground metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use super::UncertaintyError;
use crate::conic::{self, ConicProgram, LinExpr, SolverConfig};
use crate::registry::{Named, Registry};

/// Atoms are matrix rows; both distributions put equal mass on their rows.
pub trait TransportSolver: Named + Send + Sync {
    fn distance(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, UncertaintyError>;
}

pub fn transport_registry() -> Registry<dyn TransportSolver> {
    Registry::<dyn TransportSolver>::new("transport solver")
        .with(Box::new(MinCostFlow))
        .with(Box::new(TransportLp))
}

pub fn wasserstein_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, UncertaintyError> {
    MinCostFlow.distance(a, b)
}

fn check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), UncertaintyError> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(UncertaintyError::Transport("empty distribution".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(UncertaintyError::Transport(format!(
            "dimension mismatch: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(())
}

pub fn l1_cost_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| {
            (0..b.nrows())
                .map(|j| a.row(i).iter().zip(b.row(j).iter()).map(|(x, y)| (x - y).abs()).sum())
                .collect()
        })
        .collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Successive shortest paths on the bipartite transportation network with
/// integer masses `|b|/g` per source atom and `|a|/g` per sink atom.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinCostFlow;

impl Named for MinCostFlow {
    fn name(&self) -> &'static str {
        "min-cost-flow"
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by node
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Minimum total cost of shipping integer `supply` to `demand` (equal totals)
/// over a complete bipartite graph with costs `cost[i][j]`.
pub fn transport_min_cost(cost: &[Vec<f64>], supply: &[u64], demand: &[u64]) -> f64 {
    let (na, nb) = (supply.len(), demand.len());
    let mut flow = vec![vec![0u64; nb]; na];
    let mut sup = supply.to_vec();
    let mut dem = demand.to_vec();
    // potentials on sources [0, na) and sinks [na, na + nb)
    let mut pot = vec![0.0f64; na + nb];
    let mut remaining: u64 = sup.iter().sum();

    let mut dist = vec![f64::INFINITY; na + nb];
    let mut prev = vec![usize::MAX; na + nb];
    let mut done = vec![false; na + nb];
    while remaining > 0 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        let mut heap = BinaryHeap::new();
        for i in 0..na {
            if sup[i] > 0 {
                dist[i] = 0.0;
                heap.push(Item(0.0, i));
            }
        }
        let mut target = usize::MAX;
        while let Some(Item(d, u)) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            if u < na {
                for j in 0..nb {
                    let v = na + j;
                    let rc = (cost[u][j] + pot[u] - pot[v]).max(0.0);
                    if d + rc < dist[v] {
                        dist[v] = d + rc;
                        prev[v] = u;
                        heap.push(Item(dist[v], v));
                    }
                }
            } else {
                let j = u - na;
                if dem[j] > 0 {
                    target = u;
                    break;
                }
                for i in 0..na {
                    if flow[i][j] > 0 {
                        let rc = (-cost[i][j] + pot[u] - pot[i]).max(0.0);
                        if d + rc < dist[i] {
                            dist[i] = d + rc;
                            prev[i] = u;
                            heap.push(Item(dist[i], i));
                        }
                    }
                }
            }
        }
        assert!(target != usize::MAX, "balanced transportation problem always has a path");
        let dt = dist[target];
        for v in 0..na + nb {
            pot[v] += dist[v].min(dt);
        }

        // bottleneck along the path
        let mut push = dem[target - na];
        let mut v = target;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= na {
                push = push.min(flow[v][u - na]);
            }
            v = u;
        }
        push = push.min(sup[v]);

        let mut v = target;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < na {
                flow[u][v - na] += push;
            } else {
                flow[v][u - na] -= push;
            }
            v = u;
        }
        sup[v] -= push;
        dem[target - na] -= push;
        remaining -= push;
    }

    let mut total = 0.0;
    for i in 0..na {
        for j in 0..nb {
            if flow[i][j] > 0 {
                total += flow[i][j] as f64 * cost[i][j];
            }
        }
    }
    total
}

impl TransportSolver for MinCostFlow {
    fn distance(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, UncertaintyError> {
        check(a, b)?;
        let (na, nb) = (a.nrows(), b.nrows());
        let g = gcd(na, nb);
        let cost = l1_cost_matrix(a, b);
        let supply = vec![(nb / g) as u64; na];
        let demand = vec![(na / g) as u64; nb];
        let total_mass = (na * nb / g) as f64;
        Ok(transport_min_cost(&cost, &supply, &demand) / total_mass)
    }
}

/// The transportation linear program handed to the conic backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransportLp;

impl Named for TransportLp {
    fn name(&self) -> &'static str {
        "lp"
    }
}

impl TransportSolver for TransportLp {
    fn distance(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, UncertaintyError> {
        check(a, b)?;
        let (na, nb) = (a.nrows(), b.nrows());
        let cost = l1_cost_matrix(a, b);
        let mut p = ConicProgram::new();
        let x = p.add_vars("coupling", na * nb, 0.0, f64::INFINITY);
        let at = |i: usize, j: usize| x.start + i * nb + j;
        for i in 0..na {
            for j in 0..nb {
                p.objective.push(at(i, j), cost[i][j]);
            }
        }
        for i in 0..na {
            let mut e = LinExpr::constant(-1.0 / na as f64);
            (0..nb).for_each(|j| e.push(at(i, j), 1.0));
            p.add_eq("source", e);
        }
        for j in 0..nb {
            let mut e = LinExpr::constant(-1.0 / nb as f64);
            (0..na).for_each(|i| e.push(at(i, j), 1.0));
            p.add_eq("sink", e);
        }
        let sol = conic::solve(&p, &SolverConfig::default())
            .map_err(|e| UncertaintyError::Transport(e.to_string()))?;
        if !sol.is_optimal() {
            return Err(UncertaintyError::Transport(format!(
                "transport LP ended with status {:?}",
                sol.status
            )));
        }
        Ok(sol.objective)
    }
}
