mod common;

use common::NOON;
use gridval::conic::solver_registry;
use gridval::dro_opf::{formulation_registry, solve_opf, Formulation};
use gridval::valuation::{
    critical_epsilon, envelope_fd_check, marginal_data_value, solve_and_value, Family, ValuationError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dro() -> Box<dyn Formulation> {
    Box::new(gridval::dro_opf::MswDro)
}

#[test]
fn envelope_holds_at_random_smooth_points() {
    let study = common::five_bus();
    let backends = solver_registry();
    let backend = backends.get("clarabel").unwrap();
    let form = dro();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut smooth, mut kinks, mut sloped) = (0, 0, 0);
    for k in 0..10 {
        let eps: Vec<f64> = (0..2).map(|_| 10f64.powf(rng.random_range(-4.0..-1.7))).collect();
        let f = k % 2;
        let inst = common::instance(&study, NOON, 10, k as u64, eps.clone());
        let h = (0.02 * eps[f]).max(1e-5);
        let c = envelope_fd_check(&inst, f, h, form.as_ref(), backend, &common::solver()).unwrap();
        println!(
            "eps {:?} f {} mu {:.6} fd {:.6} gap {:.2e} kink {}",
            eps, f, c.mu, c.central_difference, c.relative_gap, c.kink
        );
        if c.kink {
            kinks += 1;
            continue;
        }
        smooth += 1;
        if c.central_difference.abs() > 1e-2 {
            sloped += 1;
        }
        assert!(c.within_tolerance, "{c:?}");
    }
    assert!(smooth >= 5, "{kinks} of 10 points were kinks");
    assert!(sloped >= 3, "only {sloped} points where the radius matters");
}

#[test]
fn mu_is_assembled_from_its_parts() {
    let study = common::five_bus();
    let inst = common::instance(&study, NOON, 10, 1, vec![0.003, 0.02]);
    let backends = solver_registry();
    let rep = solve_and_value(&inst, dro().as_ref(), backends.get("clarabel").unwrap(), &common::solver()).unwrap();
    for f in 0..2 {
        let inv: f64 = rep.inverter.iter().filter(|t| t.cluster == f).map(|t| t.phi_inv * t.lambda_inv).sum();
        let want = rep.lambda_co[f] + rep.phi_vol * rep.lambda_vol[f] + inv;
        assert!((rep.mu[f] - want).abs() < 1e-12);
    }
    // every PV node appears once, in the cluster that owns its p_av
    let mut nodes: Vec<usize> = rep.inverter.iter().map(|t| t.node).collect();
    nodes.sort();
    assert_eq!(nodes, inst.pv_nodes());
    assert_eq!(rep.csv_rows().len(), 2);
}

#[test]
fn data_value_vanishes_at_huge_radius() {
    let study = common::five_bus();
    let inst = common::instance(&study, NOON, 10, 2, vec![5.0; 2]);
    let backends = solver_registry();
    let rep = solve_and_value(&inst, dro().as_ref(), backends.get("clarabel").unwrap(), &common::solver()).unwrap();
    for f in 0..2 {
        assert!(rep.mu[f].abs() < 1e-4, "{:?}", rep.mu);
        assert!(rep.lambda_vol[f].abs() < 1e-6);
    }
}

#[test]
fn missing_duals_are_an_error() {
    let study = common::five_bus();
    let inst = common::instance(&study, NOON, 6, 0, vec![0.01; 2]);
    let backends = solver_registry();
    let mut s = solve_opf(&inst, dro().as_ref(), backends.get("clarabel").unwrap(), &common::solver()).unwrap();
    s.solution.row_duals.clear();
    match marginal_data_value(&s.solution, &s.built, &inst.eps) {
        Err(ValuationError::MissingDual(_)) => {}
        other => panic!("expected a missing-dual error, got {other:?}"),
    }
    s.solution.row_duals = vec![f64::NAN; s.built.program.rows.len()];
    assert!(matches!(
        marginal_data_value(&s.solution, &s.built, &inst.eps),
        Err(ValuationError::MissingDual(_))
    ));
    assert!(marginal_data_value(&s.solution, &s.built, &[0.01]).is_err());
}

#[test]
fn critical_radius_on_extreme_grids() {
    let study = common::five_bus();
    let inst = common::instance(&study, NOON, 8, 3, vec![0.01; 2]);
    let forms = formulation_registry();
    let backends = solver_registry();
    let (form, backend) = (forms.get("msw-dro").unwrap(), backends.get("clarabel").unwrap());

    let huge = critical_epsilon(&inst, 0, &[10.0, 5.0, 2.0], 0.01, form, backend, &common::solver()).unwrap();
    let vol = huge.entry(Family::Vol);
    assert_eq!(vol.critical, Some(2.0));
    assert_eq!(vol.vanished_at, vec![10.0, 5.0, 2.0]);
    assert!(huge.grid.contains(&vol.critical.unwrap()));

    let tiny = critical_epsilon(&inst, 0, &[1e-5, 1e-6, 1e-7], 0.01, form, backend, &common::solver()).unwrap();
    assert_eq!(tiny.entry(Family::Co).critical, None);
    assert!(tiny.tol > 0.0);

    assert!(critical_epsilon(&inst, 0, &[0.1, 1.0], 0.01, form, backend, &common::solver()).is_err());
    assert!(critical_epsilon(&inst, 7, &[0.1], 0.01, form, backend, &common::solver()).is_err());
}
