//! Acceptance suite: runs every criterion at its stated tolerance and
//! runtime budget, prints one PASS/FAIL line each and exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use manyserver::fluid::{
    bound_rho, check_regularity, fixed_point_residual, solve_fluid, solve_volterra, FluidModel, Nonlinearity,
    Verdict, VolterraProblem, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use manyserver::gaussian::{
    brownian_path, h_covariance, solve_limit_x, z_covariance, z_l_covariance, InfServerSampler, LimitInputs, X0Law,
    YSpec, ZSource,
};
use manyserver::harness::{parse_scenario, run_clt, run_lln, stats::mean_var, Scenario};
use manyserver::measures::streams::stream;
use manyserver::measures::{GridPath, Interp, MixedCdf};
use manyserver::simulator::{
    simulate, verify_system_equations, work_conservation_defect, ArrivalSpec, Residuals, Servers, ServiceSpec,
    SimConfig,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn atom(x: f64) -> MixedCdf {
    MixedCdf::point_mass(x).unwrap()
}

fn lin(step: f64, horizon: f64, f: impl Fn(f64) -> f64) -> GridPath {
    GridPath::from_fn(step, horizon, Interp::Linear, f).unwrap()
}

fn scenario(file: &str) -> Result<Scenario, String> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(file);
    parse_scenario(&p).map_err(e)
}

fn halfin_whitt(step: f64, horizon: f64) -> Result<Scenario, String> {
    Scenario::from_toml_str(&format!(
        r#"
name = "hw"
horizon = {horizon}
grid_step = {step}
q0 = 1.0
arrival_rate = 1.0
service = {{ kind = "exponential", rate = 1.0 }}
residual = {{ kind = "equilibrium", of = {{ kind = "exponential", rate = 1.0 }} }}
"#
    ))
    .map_err(e)
}

fn fluid_golden() -> Outcome {
    let h = 2f64.powi(-7);
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;

    let t0 = Instant::now();
    let m = FluidModel { q0: 0.0, e: lin(h, 5.0, |t| t), f: atom(2.0), ftilde: atom(1.0), extended: None };
    let s = solve_fluid(&m, h, DEFAULT_TOL).map_err(e)?;
    for (t, want) in [(1.0, 1.0), (2.5, 2.0), (3.5, 2.5), (4.5, 3.0)] {
        worst = worst.max((s.q.eval(t) - want).abs());
    }
    slowest = slowest.max(t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let m = FluidModel { q0: 2.0, e: lin(h, 3.0, |_| 0.0), f: atom(1.0), ftilde: atom(1.0), extended: None };
    let s = solve_fluid(&m, h, DEFAULT_TOL).map_err(e)?;
    for (t, want) in [(0.5, 2.0), (1.5, 1.0), (2.5, 0.0)] {
        worst = worst.max((s.q.eval(t) - want).abs());
    }
    slowest = slowest.max(t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let hw = halfin_whitt(h, 8.0)?.solve_fluid().map_err(e)?;
    let hw_sup = hw.q.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    worst = worst.max(hw_sup);
    slowest = slowest.max(t0.elapsed().as_secs_f64());

    ensure(worst <= 1e-6, || format!("max error {worst:e} > 1e-6"))?;
    ensure(slowest < 1.0, || format!("slowest example took {slowest:.2} s"))?;
    Ok(format!("max error {worst:.1e}, critical sup|q - 1| = {hw_sup:.1e}"))
}

fn sin_e(t: f64) -> f64 {
    let c = 1.0 / (1.0 + PI);
    if t <= 1.0 {
        c * (-(t - 1.0).powi(2) + PI * t + 1.0)
    } else if t < 2.0 {
        c * (-(t - 2.0).powi(2) + PI * (t - 1.0) + 1.0 + (t - 2.0).powi(2) * (PI / (2.0 - t)).sin()) + 1.0
    } else {
        2.0
    }
}

fn sin_q(t: f64) -> f64 {
    if t >= 2.0 {
        1.0
    } else {
        1.0 + (t - 2.0).powi(2) * (PI / (2.0 - t)).sin() / (1.0 + PI)
    }
}

/// Sup over [1, 2] of the linear interpolant's error, on a mesh 64 times
/// finer than the solver grid.
fn sin_error(h: f64) -> Result<f64, String> {
    let m = FluidModel { q0: 0.0, e: lin(h, 2.0, sin_e), f: atom(1.0), ftilde: atom(1.0), extended: None };
    let s = solve_fluid(&m, h, DEFAULT_TOL).map_err(e)?;
    let k = (64.0 / h) as usize;
    Ok((0..=k).map(|i| 1.0 + i as f64 / k as f64).map(|t| (s.q.eval(t) - sin_q(t)).abs()).fold(0.0, f64::max))
}

fn sin_example() -> Outcome {
    let t0 = Instant::now();
    let err = sin_error(2f64.powi(-10))?;
    let secs = t0.elapsed().as_secs_f64();
    ensure(err < 1e-3, || format!("sup error {err:e} at step 2^-10"))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    let coarse = sin_error(2f64.powi(-7))?;
    Ok(format!("sup error {err:.2e} at 2^-10 ({coarse:.2e} at 2^-7)"))
}

fn random_cdf<R: Rng>(rng: &mut R, zero_mass: f64) -> MixedCdf {
    let exp = MixedCdf::exponential(rng.random_range(0.5..2.0), 1.0 / 128.0, 40.0).unwrap();
    let uni = MixedCdf::uniform(0.0, rng.random_range(0.5..3.0), 1.0 / 128.0).unwrap();
    let a1 = atom(0.25 * rng.random_range(1..8) as f64);
    let a2 = atom(0.25 * rng.random_range(1..8) as f64);
    let zero = atom(0.0);
    let kind = rng.random_range(0..3);
    let rest = 1.0 - zero_mass;
    let parts: Vec<(f64, &MixedCdf)> = match kind {
        0 => vec![(zero_mass, &zero), (rest * 0.5, &a1), (rest * 0.5, &a2)],
        1 => vec![(zero_mass, &zero), (rest, &exp)],
        _ => vec![(zero_mass, &zero), (rest * 0.3, &a1), (rest * 0.4, &uni), (rest * 0.3, &exp)],
    };
    MixedCdf::mixture(&parts).unwrap()
}

fn simulator_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2024, 3, 0);
    let mut events = 0usize;
    for case in 0..200 {
        let n = rng.random_range(1..=32usize);
        let zero_mass = rng.random_range(0.0..=0.3);
        let service = random_cdf(&mut rng, zero_mass);
        let ftilde = random_cdf(&mut rng, 0.0);
        let rate = n as f64 * rng.random_range(0.3..1.5);
        let arrivals = match rng.random_range(0..3) {
            0 => ArrivalSpec::Poisson { rate },
            1 => ArrivalSpec::Deterministic { rate: (rate * 4.0).round().max(1.0) / 4.0 },
            _ => ArrivalSpec::Renewal { interarrival: MixedCdf::mixture(&[(0.5, &atom(0.25)), (0.5, &atom(0.5))]).unwrap() },
        };
        let q0 = rng.random_range(0..=2 * n);
        let mut cfg = SimConfig::new(Servers::Finite(n), arrivals, ServiceSpec::Distribution(service), 5.0)
            .with_initial(q0, Residuals::Sampled(ftilde));
        cfg.seed = case;
        let tr = simulate(&cfg).map_err(e)?;
        events += tr.event_times.len();
        let r = verify_system_equations(&tr);
        let w = work_conservation_defect(&tr);
        ensure(r == 0 && w == 0, || format!("case {case}: residual {r}, work-conservation defect {w}"))?;
    }

    // the nonuniqueness example: n = 1, arrivals at 1 and 2, services 2 and 0
    let cfg = SimConfig::new(
        Servers::Finite(1),
        ArrivalSpec::Explicit { epochs: vec![1.0, 2.0] },
        ServiceSpec::Explicit(vec![2.0, 0.0]),
        5.0,
    );
    let tr = simulate(&cfg).map_err(e)?;
    let ind = |c: bool| c as i64;
    for k in 0..=500 {
        let t = k as f64 / 100.0;
        let q = ind((1.0..2.0).contains(&t)) + 2 * ind((2.0..3.0).contains(&t));
        let a = ind((1.0..3.0).contains(&t)) + 2 * ind(t >= 3.0);
        ensure(tr.q.eval(t) == q && tr.a.eval(t) == a, || {
            format!("t = {t}: Q = {}, A = {} but expected {q}, {a}", tr.q.eval(t), tr.a.eval(t))
        })?;
    }
    ensure(verify_system_equations(&tr) == 0, || "nonuniqueness trace has nonzero residual".into())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 configs, {events} events, all residuals 0; second solution reproduced"))
}

fn z_covariance_checks() -> Outcome {
    let start = Instant::now();
    let h = 2f64.powi(-7);
    let a = lin(h, 4.0, |t| 0.7 * t);
    let times = [0.25, 1.0, 2.5, 4.0];

    let zero = z_covariance(&atom(1.5), &a, &times).map_err(e)?;
    ensure(zero.iter().all(|&v| v == 0.0), || format!("deterministic service: max entry {:e}", zero.amax()))?;

    let (l, m) = (0.7f64, 1.3f64);
    let f = MixedCdf::exponential(m, 2f64.powi(-12), 40.0).map_err(e)?;
    let c = z_covariance(&f, &a, &times).map_err(e)?;
    let mut worst: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let want = l * ((1.0 - (-m * t).exp()) / m - (1.0 - (-2.0 * m * t).exp()) / (2.0 * m));
        worst = worst.max((c[(i, i)] - want).abs());
    }
    ensure(worst <= 1e-6, || format!("exponential variance error {worst:e}"))?;

    let f = MixedCdf::exponential(1.0, 2f64.powi(-10), 40.0).map_err(e)?;
    let a = lin(h, 4.0, |t| 2.0 * t);
    let times = [0.5, 1.0, 2.0, 3.0];
    let target = z_covariance(&f, &a, &times).map_err(e)?;
    let mut ladder = Vec::new();
    for mesh in [0.5, 0.25, 0.125, 0.0625] {
        let part: Vec<f64> = (0..=(4.0 / mesh) as usize + 1).map(|k| k as f64 * mesh).collect();
        ladder.push((z_l_covariance(&f, &a, &part, &times).map_err(e)? - &target).amax());
    }
    ensure(ladder.windows(2).all(|w| w[1] < w[0]), || format!("ladder not strictly decreasing: {ladder:?}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("variance error {worst:.1e}; ladder {:.2e} > {:.2e} > {:.2e} > {:.2e}", ladder[0], ladder[1], ladder[2], ladder[3]))
}

fn structural_x() -> Outcome {
    let start = Instant::now();
    let h = 2f64.powi(-7);
    let fm = FluidModel { q0: 0.0, e: lin(h, 3.0, |t| t), f: atom(2.0), ftilde: atom(1.0), extended: None };
    let fl = solve_fluid(&fm, h, DEFAULT_TOL).map_err(e)?;
    let mut rng = stream(5, 0, 0);
    let nodes = (3.0 / h) as usize + 1;
    let y = GridPath::new(h, brownian_path(h, nodes, 1.0, &mut rng), Interp::Linear).map_err(e)?;
    let inputs = LimitInputs {
        x0: X0Law::PointMass(0.0),
        q0: 0.0,
        f: atom(2.0),
        ftilde: atom(1.0),
        y: YSpec::Path(y.clone()),
        z: ZSource::Zero,
        q: fl.q,
        a: fl.a,
    };
    let s = solve_limit_x(&inputs, h, 3.0, DEFAULT_TOL, &mut rng).map_err(e)?;
    let mut worst: f64 = 0.0;
    for k in 0..nodes - 1 {
        let t = k as f64 * h;
        let want = if t < 2.0 { y.eval(t) } else { y.eval(t) - y.eval(t - 2.0) };
        worst = worst.max((s.x.values()[k] - want).abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max deviation {worst:.1e}, solver residual {:.1e}", s.residual))
}

fn infinite_server_variance() -> Outcome {
    let start = Instant::now();
    let (lambda, mu) = (2.0, 1.0);
    let h = 2f64.powi(-7);
    let f = MixedCdf::exponential(mu, h, 40.0).map_err(e)?;
    let times = [0.5, 1.0, 2.0];
    let inputs = LimitInputs {
        x0: X0Law::PointMass(0.0),
        q0: 0.0,
        f: f.clone(),
        ftilde: atom(1.0),
        y: YSpec::Brownian { rate: lambda },
        z: ZSource::Covariance,
        q: lin(h, 2.0, |_| 0.0),
        a: lin(h, 2.0, |t| lambda * t),
    };
    let sampler = InfServerSampler::new(inputs.clone(), h, &times).map_err(e)?;
    let n = 100_000;
    let mut rng = stream(6, 0, 0);
    let mut cols = vec![Vec::with_capacity(n); times.len()];
    for _ in 0..n {
        let s = sampler.sample(&mut rng).map_err(e)?;
        for (c, x) in cols.iter_mut().zip(&s.x) {
            c.push(*x);
        }
    }
    let cov_y = inputs.y.covariance().ok_or("Brownian Y has a covariance")?;
    let hc = h_covariance(cov_y, &f, &times).map_err(e)?;
    let zc = z_covariance(&f, &inputs.a, &times).map_err(e)?;
    let mut notes = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let want = lambda * (1.0 - (-mu * t).exp()) / mu;
        let (_, var) = mean_var(&cols[i]);
        let se = var * (2.0 / (n as f64 - 1.0)).sqrt();
        let parts = hc[(i, i)] + zc[(i, i)];
        ensure((var - want).abs() <= 3.0 * se, || format!("t = {t}: sampled {var} vs {want}, SE {se:e}"))?;
        ensure((var - parts).abs() <= 3.0 * se, || format!("t = {t}: sampled {var} vs Var H + Var Z {parts}"))?;
        ensure((parts - want).abs() <= 1e-3, || format!("t = {t}: Var H + Var Z = {parts} vs {want}"))?;
        notes.push(format!("t={t}: {:+.2} SE", (var - want) / se));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.2} s"))?;
    Ok(notes.join(", "))
}

fn lln_trend() -> Outcome {
    let scn = scenario("mm_n.toml")?;
    let r = run_lln(&scn, &[64, 256, 1024], 200, scn.seed).map_err(e)?;
    let med: Vec<f64> = r.rows.iter().map(|row| row.median_q).collect();
    let ratios: Vec<f64> = med.windows(2).map(|w| w[1] / w[0]).collect();
    ensure(ratios.iter().all(|r| (0.3..=0.8).contains(r)), || format!("medians {med:?}, ratios {ratios:?}"))?;
    ensure(r.elapsed_secs < 300.0, || format!("took {:.1} s", r.elapsed_secs))?;
    Ok(format!("medians {:.4} {:.4} {:.4}, ratios {:.3} {:.3}", med[0], med[1], med[2], ratios[0], ratios[1]))
}

fn clt_marginals() -> Outcome {
    let scn = scenario("halfin_whitt.toml")?;
    let r = run_clt(&scn, 400, 4000, &[1.0, 2.0, 4.0], scn.seed).map_err(e)?;
    let detail: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("t={}: p={:.3}, mean {:+.2} SE, var {:+.2} SE", row.t, row.p_value, row.mean_z, row.var_z))
        .collect();
    ensure(r.passes(1e-3, 3.0), || detail.join("; "))?;
    ensure(r.elapsed_secs < 600.0, || format!("took {:.1} s", r.elapsed_secs))?;
    Ok(format!("[{}] {}", r.label, detail.join("; ")))
}

fn solver_contracts() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2024, 9, 0);
    let mut worst_res: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for case in 0..100 {
        let h = if rng.random_bool(0.5) { 2f64.powi(-6) } else { 2f64.powi(-7) };
        let horizon = h * (rng.random_range(1.0..5.0f64) / h).round();
        let zero_mass = rng.random_range(0.0..0.5);
        let kernel = random_cdf(&mut rng, zero_mass);
        let (c0, c1, c2, w) = (
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.5..6.0),
        );
        let forcing = lin(h, horizon, |t: f64| c0 + c1 * t + c2 * (w * t).sin());
        let reference = lin(h, horizon, |t: f64| 1.0 + (w * t).cos() * c1);
        let f = match rng.random_range(0..3) {
            0 => Nonlinearity::Identity,
            1 => Nonlinearity::RegimeIndicator { reference, level: 1.0, level_tol: 1e-9 },
            _ => Nonlinearity::ShiftedPositivePart { shift: reference.map(|v| 10.0 * (v - 1.0)) },
        };
        let p = VolterraProblem { forcing, kernel, f };
        let s = solve_volterra(&p, h, 1e-10, DEFAULT_MAX_ITER).map_err(|err| format!("case {case}: {err}"))?;
        let res = fixed_point_residual(&p, &s.y).map_err(e)?;
        let rho = bound_rho(&p.kernel, horizon, s.t0).map_err(e)?;
        let ratio = s.y.sup_norm(horizon) / (rho * p.forcing.sup_norm(horizon));
        ensure(res <= 1e-9, || format!("case {case}: residual {res:e}"))?;
        ensure(ratio <= 1.0, || format!("case {case}: sup|y| exceeds the growth bound by factor {ratio}"))?;
        worst_res = worst_res.max(res);
        worst_ratio = worst_ratio.max(ratio);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max residual {worst_res:.1e}, max sup|y| / (rho sup|x|) = {worst_ratio:.3}"))
}

fn regularity_checker() -> Outcome {
    let start = Instant::now();
    let h = 2f64.powi(-7);
    let eps = [0.9, 0.5, 0.1, 0.01, 0.001, 1e-4];

    let hw = halfin_whitt(h, 8.0)?;
    let q = hw.solve_fluid().map_err(e)?.q;
    let r = check_regularity(&q, &hw.f, 8.0, &eps);
    ensure(r.values.iter().all(|v| v.1 == 0.0), || format!("critical fluid: {:?}", r.values))?;

    let m = FluidModel { q0: 2.0, e: lin(h, 4.0, |_| 0.0), f: atom(1.0), ftilde: atom(1.0), extended: None };
    let q = solve_fluid(&m, h, DEFAULT_TOL).map_err(e)?.q;
    let r = check_regularity(&q, &m.f, 4.0, &eps);
    ensure(r.values.iter().all(|v| v.1 == 0.0), || format!("three-step fluid: {:?}", r.values))?;

    // overloaded start draining through level 1 under exponential service
    let scn = Scenario::from_toml_str(
        r#"
name = "drain"
horizon = 6.0
q0 = 1.5
arrival_rate = 0.5
service = { kind = "exponential", rate = 1.0 }
residual = { kind = "exponential", rate = 1.0 }
"#,
    )
    .map_err(e)?;
    let q = scn.solve_fluid().map_err(e)?.q;
    let r = check_regularity(&q, &scn.f, 6.0, &[0.1, 0.01, 0.001, 1e-4]);
    let v: Vec<f64> = r.values.iter().map(|x| x.1).collect();
    ensure(v[0] > 0.0, || "continuous example never comes near level 1".into())?;
    ensure(v.windows(2).all(|w| w[1] <= w[0]) && v[3] < 1e-3, || format!("values {v:?}"))?;
    ensure(r.verdict == Verdict::HoldsNumerically, || "verdict fails".into())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("continuous F: {:.1e} {:.1e} {:.1e} {:.1e}", v[0], v[1], v[2], v[3]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fluid golden values", fluid_golden),
        ("oscillating fluid example", sin_example),
        ("simulator exactness", simulator_exactness),
        ("Z covariance", z_covariance_checks),
        ("structural X", structural_x),
        ("infinite-server variance", infinite_server_variance),
        ("LLN trend", lln_trend),
        ("CLT marginals", clt_marginals),
        ("solver contracts", solver_contracts),
        ("regularity checker", regularity_checker),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = run();
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} ({secs:.2} s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} ({secs:.2} s)", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
