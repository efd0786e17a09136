//! LinDistFlow voltage sensitivities for radial feeders.
//!
//! Squared voltage magnitudes are approximated as `rho = R p + B q + a`,
//! with `p`, `q` the net nodal injections (generation minus load) in per unit.

use nalgebra::{DMatrix, DVector};

use crate::case_io::Network;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SensitivityError {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("substation voltage must be positive, got {0}")]
    BadV0(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSensitivity {
    pub r: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub a: DVector<f64>,
}

impl VoltageSensitivity {
    pub fn n_nodes(&self) -> usize {
        self.a.len()
    }
}

/// `R[j,k] = 2 * sum of r over the branches shared by the root paths of j and
/// k`, and likewise `B` with reactances. `a` is `v0_sq` at every node.
pub fn sensitivity_matrices(net: &Network, v0_sq: f64) -> Result<VoltageSensitivity, SensitivityError> {
    if !(v0_sq > 0.0) {
        return Err(SensitivityError::BadV0(v0_sq));
    }
    let n = net.n_nodes();
    // cumulative impedance from the slack down to each node; parents come first
    let mut cum_r = vec![0.0; n];
    let mut cum_x = vec![0.0; n];
    let mut depth = vec![0usize; n];
    for (j, node) in net.nodes.iter().enumerate() {
        let (pr, px, pd) = match node.parent {
            Some(p) => (cum_r[p], cum_x[p], depth[p] + 1),
            None => (0.0, 0.0, 0),
        };
        cum_r[j] = pr + node.r_pu;
        cum_x[j] = px + node.x_pu;
        depth[j] = pd;
    }

    let lca = |mut j: usize, mut k: usize| -> Option<usize> {
        while depth[j] > depth[k] {
            j = net.nodes[j].parent?;
        }
        while depth[k] > depth[j] {
            k = net.nodes[k].parent?;
        }
        while j != k {
            j = net.nodes[j].parent?;
            k = net.nodes[k].parent?;
        }
        Some(j)
    };

    let mut r = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            if let Some(m) = lca(j, k) {
                r[(j, k)] = 2.0 * cum_r[m];
                b[(j, k)] = 2.0 * cum_x[m];
                r[(k, j)] = r[(j, k)];
                b[(k, j)] = b[(j, k)];
            }
        }
    }
    Ok(VoltageSensitivity {
        r,
        b,
        a: DVector::from_element(n, v0_sq),
    })
}

/// Squared voltages for net injections `p`, `q` (per unit).
pub fn predict_voltages(
    sens: &VoltageSensitivity,
    p: &[f64],
    q: &[f64],
) -> Result<DVector<f64>, SensitivityError> {
    let n = sens.n_nodes();
    for got in [p.len(), q.len()] {
        if got != n {
            return Err(SensitivityError::Dimension { expected: n, got });
        }
    }
    let p = DVector::from_column_slice(p);
    let q = DVector::from_column_slice(q);
    Ok(&sens.r * p + &sens.b * q + &sens.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::Node;

    fn chain(rs: &[(f64, f64)]) -> Network {
        let nodes = rs
            .iter()
            .enumerate()
            .map(|(i, &(r, x))| Node {
                bus_id: i as u32 + 2,
                parent: i.checked_sub(1),
                r_pu: r,
                x_pu: x,
                p_load_pu: 0.0,
                q_load_pu: 0.0,
            })
            .collect();
        Network {
            base_mva: 1.0,
            slack_bus: 1,
            nodes,
        }
    }

    #[test]
    fn single_line() {
        let s = sensitivity_matrices(&chain(&[(0.1, 0.2)]), 1.0).unwrap();
        assert!((s.r[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((s.b[(0, 0)] - 0.4).abs() < 1e-15);
        let rho = predict_voltages(&s, &[0.1], &[0.05]).unwrap();
        assert!((rho[0] - 1.04).abs() < 1e-12);
    }

    #[test]
    fn two_node_chain() {
        let s = sensitivity_matrices(&chain(&[(0.1, 0.0), (0.1, 0.0)]), 1.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.2, 0.2, 0.2, 0.4]);
        assert!((s.r - want).abs().max() < 1e-15);
    }

    #[test]
    fn zero_impedance_and_zero_injection() {
        let s = sensitivity_matrices(&chain(&[(0.0, 0.0); 3]), 1.05).unwrap();
        assert_eq!(s.r.abs().max(), 0.0);
        assert_eq!(s.b.abs().max(), 0.0);
        let rho = predict_voltages(&s, &[0.3, -0.1, 0.2], &[0.0; 3]).unwrap();
        assert!(rho.iter().all(|&v| v == 1.05));
    }

    #[test]
    fn dimension_checked() {
        let s = sensitivity_matrices(&chain(&[(0.1, 0.1)]), 1.0).unwrap();
        assert_eq!(
            predict_voltages(&s, &[0.0, 0.0], &[0.0]),
            Err(SensitivityError::Dimension { expected: 1, got: 2 })
        );
        assert!(sensitivity_matrices(&chain(&[(0.1, 0.1)]), 0.0).is_err());
    }
}
