mod common;

use common::oracles::voltage_recursion;
use gridval::case_io::{build_network, parse_matpower_case, CaseUnits, Network, Node, CASE33BW};
use gridval::lindistflow::{predict_voltages, sensitivity_matrices, VoltageSensitivity};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-10;

fn tree(parents: &[Option<usize>], z: &[(f64, f64)]) -> Network {
    Network {
        base_mva: 1.0,
        slack_bus: 1,
        nodes: parents
            .iter()
            .zip(z)
            .enumerate()
            .map(|(i, (&parent, &(r, x)))| Node {
                bus_id: i as u32 + 2,
                parent,
                r_pu: r,
                x_pu: x,
                p_load_pu: 0.0,
                q_load_pu: 0.0,
            })
            .collect(),
    }
}

fn check_against_recursion(net: &Network, seed: u64) {
    let v0 = 1.0;
    let sens = sensitivity_matrices(net, v0).unwrap();
    let n = net.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // unit injections recover the columns; random ones test the affine map
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let zero = vec![0.0; n];
        let vr = voltage_recursion(net, 0.0, &e, &zero);
        let vb = voltage_recursion(net, 0.0, &zero, &e);
        for j in 0..n {
            assert!((sens.r[(j, k)] - vr[j]).abs() < TOL, "R[{j},{k}]");
            assert!((sens.b[(j, k)] - vb[j]).abs() < TOL, "B[{j},{k}]");
        }
    }
    for _ in 0..5 {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let got = predict_voltages(&sens, &p, &q).unwrap();
        let want = voltage_recursion(net, v0, &p, &q);
        for j in 0..n {
            assert!((got[j] - want[j]).abs() < TOL, "node {j}: {} vs {}", got[j], want[j]);
        }
    }
    check_symmetric_psd(&sens);
}

fn check_symmetric_psd(sens: &VoltageSensitivity) {
    for m in [&sens.r, &sens.b] {
        assert!((m - m.transpose()).amax() == 0.0, "not symmetric");
        let scale = m.amax().max(1.0);
        let eig = m.clone().symmetric_eigen().eigenvalues;
        assert!(eig.min() >= -1e-12 * scale, "min eigenvalue {}", eig.min());
    }
}

#[test]
fn chain_matches_recursion() {
    let n: usize = 12;
    let parents: Vec<_> = (0..n).map(|i| i.checked_sub(1)).collect();
    let z: Vec<_> = (0..n).map(|i| (0.01 + 0.003 * i as f64, 0.02 - 0.001 * i as f64)).collect();
    check_against_recursion(&tree(&parents, &z), 1);
}

#[test]
fn star_matches_recursion() {
    let n = 9;
    let parents = vec![None; n];
    let z: Vec<_> = (0..n).map(|i| (0.05 * (i + 1) as f64, 0.02 * (i + 1) as f64)).collect();
    let net = tree(&parents, &z);
    check_against_recursion(&net, 2);
    // star leaves share nothing but the slack
    let sens = sensitivity_matrices(&net, 1.0).unwrap();
    assert_eq!(sens.r[(0, 1)], 0.0);
    assert!((sens.r[(3, 3)] - 2.0 * z[3].0).abs() < TOL);
}

#[test]
fn star_of_chains_matches_recursion() {
    // two laterals of length 3 under a common first node
    let parents = vec![None, Some(0), Some(1), Some(2), Some(0), Some(4), Some(5)];
    let z = vec![(0.02, 0.01), (0.03, 0.02), (0.01, 0.04), (0.05, 0.01), (0.02, 0.02), (0.04, 0.03), (0.01, 0.01)];
    check_against_recursion(&tree(&parents, &z), 3);
}

#[test]
fn case33bw_matches_recursion() {
    let net = build_network(&parse_matpower_case(CASE33BW).unwrap(), CaseUnits::default()).unwrap();
    assert_eq!(net.n_nodes(), 32);
    check_against_recursion(&net, 4);
}

#[test]
fn flat_start_gives_v0() {
    let net = build_network(&parse_matpower_case(CASE33BW).unwrap(), CaseUnits::default()).unwrap();
    let sens = sensitivity_matrices(&net, 1.0404).unwrap();
    let zero = vec![0.0; 32];
    let v = predict_voltages(&sens, &zero, &zero).unwrap();
    assert!(v.iter().all(|&x| (x - 1.0404).abs() < TOL));
}

fn random_tree() -> impl Strategy<Value = Network> {
    (1usize..15).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..1000, n),
            proptest::collection::vec((1e-4f64..0.2, 1e-4f64..0.2), n),
        )
            .prop_map(|(picks, z)| {
                // node i attaches to the slack or to an earlier node
                let parents: Vec<Option<usize>> =
                    picks.iter().enumerate().map(|(i, &k)| (k % (i + 1)).checked_sub(1)).collect();
                tree(&parents, &z)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_match_recursion(net in random_tree(), seed in any::<u64>()) {
        check_against_recursion(&net, seed);
    }

    #[test]
    fn diagonal_dominates_row(net in random_tree()) {
        let s = sensitivity_matrices(&net, 1.0).unwrap();
        let n = net.n_nodes();
        for j in 0..n {
            for k in 0..n {
                prop_assert!(s.r[(j, k)] <= s.r[(j, j)] + TOL);
                prop_assert!(s.r[(j, k)] >= 0.0);
            }
        }
    }
}
