use std::sync::Arc;

use num_complex::Complex;
use unitexp::dynamics::{run_dynamics, Kernel, Problem, StateMethod, TruncationGuard};
use unitexp::expansion::{Order, WFamily};
use unitexp::models::{
    driven_analytic, driven_commutator_kernel, driven_h0, driven_h1, interaction_picture, rabi_hamiltonians,
    DrivenOscillatorSpec, InteractionFrame, Modulated, RabiSpec, QUBIT_E, QUBIT_G,
};
use unitexp::operator::{annihilation, StateVector};
use unitexp::propagators::{
    dyson_propagator, exact_propagator, product_propagator, survival_and_transition, CommutatorCheck, ExactOptions,
    PropagatorSeries, Target,
};
use unitexp::quadrature::TimeGrid;
use unitexp::Error;

fn rabi_problem(d: usize) -> (Problem<f64>, unitexp::OperatorF64, unitexp::OperatorF64) {
    let spec = RabiSpec::new(1.0, 0.6, 0.3, d).unwrap();
    let hs = rabi_hamiltonians(&spec).unwrap();
    let space = spec.space();
    let psi0 = StateVector::basis(&space, spec.index(QUBIT_G, 0)).unwrap();
    let problem = Problem {
        frame: InteractionFrame::new(&hs.h0_grw).unwrap(),
        hint: Modulated::constant(hs.hint_grw.clone()),
        lambda: 1.0,
        psi0: psi0.clone(),
        targets: vec![
            Target::new("g0", psi0),
            Target::new("e1", StateVector::basis(&space, spec.index(QUBIT_E, 1)).unwrap()),
        ],
        kernel: None,
        cnumber_check: CommutatorCheck::default(),
        analytic: None,
        guard: None,
    };
    (problem, hs.h0_grw, hs.hint_grw)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn state_engine_matches_operator_series() {
    let (problem, h0, hint) = rabi_problem(12);
    let grid = TimeGrid::new(3.0, 300).unwrap();
    let methods: Vec<(String, StateMethod)> = vec![
        ("exact".into(), StateMethod::Exact),
        ("w1".into(), StateMethod::Product(Order::new(2).unwrap())),
        ("w1w2".into(), StateMethod::Product(Order::new(3).unwrap())),
        ("p5".into(), StateMethod::Product(Order::new(5).unwrap())),
        ("born1".into(), StateMethod::Born(1)),
        ("born2".into(), StateMethod::Born(2)),
        ("h0".into(), StateMethod::H0Only),
    ];
    let dy = run_dynamics(&problem, &grid, &methods, ExactOptions::default()).unwrap();

    let h1 = interaction_picture(&h0, |_| hint.clone(), &grid).unwrap();
    let u0 = problem.frame.u0_series(&grid).unwrap();
    let family = WFamily::build(&h1, Order::new(5).unwrap(), 1.0).unwrap();
    let exact = exact_propagator(
        |t| problem.frame.rotate(&hint, t),
        &grid,
        ExactOptions::default(),
    )
    .unwrap();
    let identity = PropagatorSeries::new(
        grid.clone(),
        unitexp::propagators::Method::H0Only,
        vec![unitexp::operator::Operator::identity(h0.space()); grid.len()],
    )
    .unwrap();
    let reference: Vec<(&str, PropagatorSeries<f64>)> = vec![
        ("exact", exact),
        ("w1", product_propagator(&family.truncated(Order::new(2).unwrap()).unwrap()).unwrap()),
        ("w1w2", product_propagator(&family.truncated(Order::new(3).unwrap()).unwrap()).unwrap()),
        ("p5", product_propagator(&family).unwrap()),
        ("born1", dyson_propagator(&h1, 1.0, 1).unwrap()),
        ("born2", dyson_propagator(&h1, 1.0, 2).unwrap()),
        ("h0", identity),
    ];
    for (label, series) in reference {
        let table = survival_and_transition(&series, Some(&u0), &problem.psi0, &problem.targets).unwrap();
        for (target, col) in ["g0", "e1"].iter().zip(table.columns()) {
            let got = dy.result.column(&format!("{label}_{target}")).unwrap();
            let d = max_diff(got, &col.values);
            assert!(d < 1e-9, "{label}_{target}: {d:e}");
        }
    }
}

#[test]
fn driven_closed_forms_track_exact() {
    let spec = DrivenOscillatorSpec::new(1.0, 0.2, Arc::new(|t: f64| (0.7 * t).cos()), 15).unwrap();
    let grid = TimeGrid::new(6.0, 600).unwrap();
    let x = {
        let a = annihilation::<f64>(15).unwrap();
        &a + &a.dagger()
    };
    let f = spec.f.clone();
    let kernel: Kernel<f64> = Arc::new(driven_commutator_kernel(&spec));
    let psi0 = StateVector::basis(&spec.space(), 0).unwrap();
    let problem = Problem {
        frame: InteractionFrame::new(&driven_h0(&spec).unwrap()).unwrap(),
        hint: Modulated::new(vec![(x, Arc::new(move |t| Complex::new(f(t), 0.0)))]).unwrap(),
        lambda: spec.g,
        psi0: psi0.clone(),
        targets: vec![
            Target::new("0", psi0),
            Target::new("1", StateVector::basis(&spec.space(), 1).unwrap()),
        ],
        kernel: Some(kernel),
        cnumber_check: CommutatorCheck { subspace: Some(spec.untruncated_levels()), ..CommutatorCheck::default() },
        analytic: Some(driven_analytic(&spec, &grid).unwrap()),
        guard: Some(TruncationGuard::for_fock_dim(15)),
    };
    let methods: Vec<(String, StateMethod)> = vec![
        ("exact".into(), StateMethod::Exact),
        ("cnumber".into(), StateMethod::CNumber),
        ("analytic".into(), StateMethod::Analytic),
        ("w1w2".into(), StateMethod::Product(Order::new(3).unwrap())),
    ];
    let dy = run_dynamics(&problem, &grid, &methods, ExactOptions::default()).unwrap();
    for label in ["cnumber", "analytic", "w1w2"] {
        for target in ["0", "1"] {
            let d = max_diff(
                dy.result.column(&format!("{label}_{target}")).unwrap(),
                dy.result.column(&format!("exact_{target}")).unwrap(),
            );
            assert!(d < 1e-8, "{label}_{target}: {d:e}");
        }
    }
    assert_eq!(dy.guarded.as_deref(), Some("exact"));
    assert!(dy.max_tail.unwrap() < 1e-8);

    // the engine's H1 agrees with the model's closed form
    let h1 = driven_h1(&spec).unwrap();
    let frame = &problem.frame;
    for t in [0.3, 2.9] {
        let rotated = frame.rotate(&problem.hint.at(t), t);
        assert!(rotated.max_abs_diff(&h1(t)) < 1e-12);
    }
}

#[test]
fn guard_trips_on_small_truncation() {
    let (mut problem, _, _) = rabi_problem(6);
    problem.guard = Some(TruncationGuard::for_fock_dim(6));
    let grid = TimeGrid::new(20.0, 400).unwrap();
    let methods = vec![("w1".to_string(), StateMethod::Product(Order::new(2).unwrap()))];
    match run_dynamics(&problem, &grid, &methods, ExactOptions::default()) {
        Err(Error::Truncation { suggested_fock_dim, .. }) => assert_eq!(suggested_fock_dim, 10),
        other => panic!("expected a truncation error, got {other:?}"),
    }
}

#[test]
fn rejects_inapplicable_methods() {
    let (problem, _, _) = rabi_problem(8);
    let grid = TimeGrid::new(1.0, 10).unwrap();
    for m in [StateMethod::CNumber, StateMethod::Analytic, StateMethod::Born(3)] {
        assert!(run_dynamics(&problem, &grid, &[("m".into(), m)], ExactOptions::default()).is_err());
    }
    assert!(run_dynamics(&problem, &grid, &[], ExactOptions::default()).is_err());
}
