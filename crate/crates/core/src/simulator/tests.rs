use super::*;
use crate::measures::{GridPath, Interp};

fn explicit(n: Servers, epochs: Vec<f64>, services: Vec<f64>, horizon: f64) -> SimConfig {
    SimConfig::new(n, ArrivalSpec::Explicit { epochs }, ServiceSpec::Explicit(services), horizon)
}

#[test]
fn empty_system_stays_empty() {
    let tr = simulate_gg_n(&explicit(Servers::Finite(3), vec![], vec![], 5.0)).unwrap();
    for t in [0.0, 1.0, 4.9] {
        assert_eq!(tr.q.eval(t), 0);
        assert_eq!(tr.a.eval(t), 0);
    }
    assert_eq!(verify_system_equations(&tr), 0);
}

#[test]
fn zero_service_tie_follows_minimal_admission() {
    let tr = simulate_gg_n(&explicit(Servers::Finite(1), vec![1.0, 2.0], vec![2.0, 0.0], 5.0)).unwrap();
    let q = |t| tr.q.eval(t);
    let a = |t| tr.a.eval(t);
    assert_eq!((q(0.5), q(1.0), q(1.9), q(2.0), q(2.9), q(3.0), q(4.0)), (0, 1, 1, 2, 2, 0, 0));
    assert_eq!((a(0.5), a(1.0), a(2.0), a(2.99), a(3.0), a(4.5)), (0, 1, 1, 1, 2, 2));
    assert_eq!(tr.tau, vec![1.0, 3.0]);
    assert_eq!(verify_system_equations(&tr), 0);
}

#[test]
fn other_zero_service_solution_also_solves_the_equations() {
    let mut tr = simulate_gg_n(&explicit(Servers::Finite(1), vec![1.0, 2.0], vec![2.0, 0.0], 5.0)).unwrap();
    let times = vec![0.0, 1.0, 2.0, 3.0];
    tr.q = StepPath::new(times.clone(), vec![0, 1, 1, 0]);
    tr.a = StepPath::new(times, vec![0, 1, 2, 2]);
    tr.tau = vec![1.0, 2.0];
    assert_eq!(verify_system_equations(&tr), 0);
}

#[test]
fn perturbed_trace_is_detected() {
    let mut cfg = SimConfig::new(
        Servers::Finite(2),
        ArrivalSpec::Poisson { rate: 3.0 },
        ServiceSpec::Distribution(crate::measures::MixedCdf::exponential(1.0, 1.0 / 64.0, 40.0).unwrap()),
        4.0,
    );
    cfg.seed = 11;
    let tr = simulate_gg_n(&cfg).unwrap();
    assert_eq!(verify_system_equations(&tr), 0);
    let mut bad = tr.clone();
    let k = bad.a.values().len() / 2;
    let mut v = bad.a.values().to_vec();
    v[k] += 1;
    bad.a = StepPath::new(bad.a.times().to_vec(), v);
    assert!(verify_system_equations(&bad) >= 1);
}

#[test]
fn initial_customers_finishing_together() {
    let cfg = explicit(Servers::Finite(2), vec![], vec![], 3.0).with_initial(2, Residuals::Explicit(vec![1.0, 1.0]));
    let tr = simulate_gg_n(&cfg).unwrap();
    assert_eq!(tr.q.eval(0.0), 2);
    assert_eq!(tr.q.eval(0.99), 2);
    assert_eq!(tr.q.eval(1.0), 0);
    assert_eq!(tr.qtilde.eval(0.5), 2);
    assert_eq!(tr.qtilde.eval(1.0), 0);
    assert_eq!(verify_system_equations(&tr), 0);
}

#[test]
fn infinite_server_hand_walk() {
    let tr = simulate_gg_inf(&explicit(Servers::Infinite, vec![1.0, 2.0], vec![2.0, 2.0], 5.0)).unwrap();
    assert_eq!(tr.q.eval(1.5), 1);
    assert_eq!(tr.q.eval(2.5), 2);
    assert_eq!(tr.q.eval(3.5), 1);
    assert_eq!(tr.a.values(), tr.e.values());
    assert_eq!(verify_system_equations(&tr), 0);

    let cfg = explicit(Servers::Infinite, vec![], vec![], 2.0).with_initial(4, Residuals::Explicit(vec![5.0; 4]));
    let tr = simulate_gg_inf(&cfg).unwrap();
    assert!(tr.q.values().iter().all(|&v| v == 4));
}

#[test]
fn queued_customers_enter_in_order() {
    let cfg = explicit(Servers::Finite(1), vec![0.5], vec![1.0, 0.0, 2.0], 6.0).with_initial(3, Residuals::Explicit(vec![1.0]));
    let tr = simulate_gg_n(&cfg).unwrap();
    // initial resident leaves at 1, queued #1 (1.0) at [1,2), queued #2 passes at 2, arrival 2.0 at [2,4)
    assert_eq!(tr.tau, vec![1.0, 2.0, 2.0]);
    assert_eq!(tr.q.eval(1.5), 3);
    assert_eq!(tr.q.eval(2.0), 1);
    assert_eq!(tr.q.eval(4.0), 0);
    assert_eq!(verify_system_equations(&tr), 0);
    assert_eq!(work_conservation_defect(&tr), 0);
}

#[test]
fn config_rejects_all_mass_at_zero() {
    let cfg = SimConfig::new(
        Servers::Finite(1),
        ArrivalSpec::Poisson { rate: 1.0 },
        ServiceSpec::Distribution(crate::measures::MixedCdf::point_mass(0.0).unwrap()),
        1.0,
    );
    assert!(matches!(simulate(&cfg), Err(SimError::Config(_))));
}

#[test]
fn event_budget_is_enforced() {
    let mut cfg = explicit(Servers::Finite(1), (1..=50).map(f64::from).collect(), vec![0.5; 50], 100.0);
    cfg.event_budget = 20;
    assert!(matches!(simulate(&cfg), Err(SimError::AdmissionCascade(20))));
}

#[test]
fn same_seed_same_trace() {
    let f = crate::measures::MixedCdf::exponential(1.0, 1.0 / 64.0, 40.0).unwrap();
    let mut cfg = SimConfig::new(Servers::Finite(5), ArrivalSpec::Poisson { rate: 4.0 }, ServiceSpec::Distribution(f.clone()), 10.0);
    cfg = cfg.with_initial(8, Residuals::Sampled(f));
    cfg.seed = 99;
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed = 100;
    assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
}

#[test]
fn scaled_path_arithmetic() {
    let tr = simulate_gg_inf(&{
        explicit(Servers::Infinite, vec![], vec![], 2.0).with_initial(110, Residuals::Explicit(vec![10.0; 110]))
    })
    .unwrap();
    let q = GridPath::constant(0.25, 2.0, 1.0).unwrap();
    let (fl, diff) = scaled_paths(&tr, 100.0, &q).unwrap();
    assert!(fl.values().iter().all(|&v| (v - 1.1).abs() < 1e-15));
    assert!(diff.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    let exact = GridPath::constant(0.25, 2.0, 1.1).unwrap();
    let (_, zero) = scaled_paths(&tr, 100.0, &exact).unwrap();
    assert!(zero.values().iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn empirical_initial_process_single_residual() {
    let f = crate::measures::MixedCdf::exponential(1.0, 1.0 / 64.0, 40.0).unwrap();
    let s = empirical_initial_process(&[0.75], &f, 1.0, 0.25, 2.0).unwrap();
    for k in 0..9 {
        let t = k as f64 * 0.25;
        let ind = if t >= 0.75 { 1.0 } else { 0.0 };
        assert!((s.values()[k] - (ind - f.eval(t))).abs() < 1e-15);
    }
    assert_eq!(s.interp(), Interp::RightConstant);
}

#[test]
fn waiting_customers_fill_idle_servers_at_time_zero() {
    // two servers, one busy, three waiting: one waiting customer starts at 0
    let mut cfg = explicit(Servers::Finite(2), vec![], vec![1.0, 1.0, 1.0], 5.0);
    cfg.in_service0 = 1;
    cfg.queued0 = 3;
    cfg.residuals = Residuals::Explicit(vec![0.5]);
    let tr = simulate_gg_n(&cfg).unwrap();
    assert_eq!(tr.a.eval(0.0), 1);
    assert_eq!(tr.tau, vec![0.0, 0.5, 1.0]);
    assert_eq!(tr.q.eval(0.0), 4);
    assert_eq!(tr.q.eval(2.0), 0);
    assert_eq!(verify_system_equations(&tr), 0);
    assert_eq!(work_conservation_defect(&tr), 0);
}
