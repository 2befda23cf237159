mod common;

use common::*;
use debtgame_core::*;

#[test]
fn theorem_structure() {
    let v = criterion_8(&reference_solution());
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn equilibrium_verification() {
    let v = criterion_7(&reference_solution());
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn reference_build_has_one_case_one_touch() {
    let sol = reference_solution();
    assert!(sol.is_complete());
    assert_eq!(sol.n0(), 1);
    assert!(sol.touch_points[0] < sol.solver.cs.x_flat());
    assert!(sol.hypotheses.w_exceeds_b && sol.hypotheses.theta_below_p_c);
}

#[test]
fn hypothesis_failure_is_reported() {
    // W(x*) is far below B here
    let m = Model::reference(1.2, 5.0, Salvage::Constant { value: 0.5 });
    match EquilibriumSolution::build(&m, SolverOptions::default()) {
        Err(Error::HypothesisViolated(msg)) => assert!(msg.contains("W(x*) > B"), "{msg}"),
        other => panic!(
            "expected hypothesis error, got {:?}",
            other.map(|s| s.touch_points)
        ),
    }
}

#[test]
fn document_round_trip() {
    let sol = reference_solution();
    let doc = sol.to_document("abc").unwrap();
    let json = serde_json::to_string(&doc).unwrap();
    let back = EquilibriumSolution::from_document(serde_json::from_str(&json).unwrap()).unwrap();
    for i in 0..=50 {
        let x = 1.2 * i as f64 / 50.0;
        assert_eq!(sol.eval(x), back.eval(x));
    }
}

fn reference_sim_opts() -> SimOptions {
    SimOptions::default()
}

#[test]
fn constant_strategy_cost() {
    let m = reference_model();
    let (x0, p, v) = (0.9, 0.8, 0.1);
    let u = ((LAMBDA + R) - (LAMBDA + MU + v) * p) * x0;
    let prices = FixedPrice(p);
    let sim = Simulator::new(&m, &prices, reference_sim_opts()).unwrap();
    let traj = sim.simulate(x0, &ConstantControls { u, v }).unwrap();
    assert!(
        matches!(traj.outcome, Outcome::Steady { .. }),
        "{:?}",
        traj.outcome
    );
    let want = (l(u) + c(v)) / R;
    assert!((discounted_cost(&traj) - want).abs() < 1e-9 * (1.0 + want));
}

#[test]
fn zero_debt_costs_nothing() {
    let m = reference_model();
    let prices = FixedPrice(1.0);
    let sim = Simulator::new(&m, &prices, reference_sim_opts()).unwrap();
    let traj = sim
        .simulate(0.0, &ConstantControls { u: 0.0, v: 0.0 })
        .unwrap();
    assert_eq!(discounted_cost(&traj), 0.0);
    assert!((price_functional(&traj, REF_THETA) - 1.0).abs() < 1e-9);
}

#[test]
fn no_devaluation_pays_full_price_without_default() {
    let m = reference_model();
    let prices = FixedPrice(1.0);
    let sim = Simulator::new(&m, &prices, reference_sim_opts()).unwrap();
    // the repayment that keeps x = 0.5 fixed at p = 1
    let traj = sim
        .simulate(
            0.5,
            &ConstantControls {
                u: (R - MU) * 0.5,
                v: 0.0,
            },
        )
        .unwrap();
    assert!((price_functional(&traj, REF_THETA) - 1.0).abs() < 1e-9);
}

#[test]
fn no_control_bankruptcy_time() {
    let m = reference_model();
    let prices = FixedPrice(1.0);
    let sim = Simulator::new(&m, &prices, reference_sim_opts()).unwrap();
    let x0 = 0.6;
    let traj = sim
        .simulate(x0, &ConstantControls { u: 0.0, v: 0.0 })
        .unwrap();
    let t_b = (REF_X_STAR / x0).ln() / (R - MU);
    assert!((traj.bankruptcy_time().unwrap() - t_b).abs() < 1e-8 * t_b);
    let j = (-R * t_b).exp() * REF_B;
    assert!((discounted_cost(&traj) - j).abs() < 1e-10);
    let psi = (LAMBDA + R) / (LAMBDA + R) * (1.0 - (-(R + LAMBDA) * t_b).exp())
        + (-(R + LAMBDA) * t_b).exp() * REF_THETA;
    assert!((price_functional(&traj, REF_THETA) - psi).abs() < 1e-10);
}

#[test]
fn arrival_time_matches_cointegrated_clock() {
    let sol = reference_solution();
    let sim = Simulator::new(sol.model(), &sol, reference_sim_opts()).unwrap();
    for x0 in [0.85, 1.0, 1.15] {
        let traj = sim.simulate(x0, &EquilibriumFeedback(&sol)).unwrap();
        let y = sol.arcs[0].state(x0)[2];
        let t_b = traj
            .bankruptcy_time()
            .expect("above the touch point the debtor defaults");
        assert!(
            (t_b + y).abs() < 1e-6 * (1.0 + t_b),
            "x0 {x0}: T_b {t_b} vs -y {}",
            -y
        );
    }
}

#[test]
fn trajectories_below_touch_point_settle() {
    let sol = reference_solution();
    let sim = Simulator::new(sol.model(), &sol, reference_sim_opts()).unwrap();
    let traj = sim.simulate(0.4, &EquilibriumFeedback(&sol)).unwrap();
    match traj.outcome {
        Outcome::Steady { x, touch_index, .. } => {
            assert_eq!(touch_index, Some(0));
            assert!((x - sol.touch_points[0]).abs() < 1e-9);
        }
        other => panic!("{other:?}"),
    }
    let csv = traj.to_csv();
    assert!(csv.starts_with("t,x,u,v,discounted_cost,D\n"));
}
