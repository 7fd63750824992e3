use std::time::Instant;

use rayon::prelude::*;

use crate::fluid::{check_regularity, Verdict};
use crate::gaussian::{InfServerSampler, LimitSampler};
use crate::measures::streams::{derive_seed, stream};
use crate::measures::GridPath;
use crate::simulator::{simulate, SimTrace, StepPath};

use super::report::{fmt, ExperimentReport, Table};
use super::scenario::{FluidReference, Scenario, ServerMode};
use super::stats::{ks_two_sample, mean_var, quantile};
use super::HarnessError;

/// Experiment ids for seed derivation.
const EXP_LLN: u64 = 1;
const EXP_CLT_SIM: u64 = 2;
const EXP_CLT_LIMIT: u64 = 3;

/// ε values for the regularity check run before a CLT experiment.
pub const CHECK_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// `sup_{[0,T]} |X(t)/n − x(t)|` for a step path `X` and a linearly
/// interpolated `x`. Between consecutive change points of `X` and nodes of
/// `x` the difference is linear, so both one-sided values at those points
/// suffice.
pub fn sup_deviation(path: &StepPath, n: f64, fluid: &GridPath, horizon: f64) -> f64 {
    let mut pts: Vec<f64> = path.times().iter().copied().filter(|&t| t <= horizon).collect();
    pts.extend((0..fluid.len()).map(|k| fluid.time(k)).filter(|&t| t <= horizon));
    pts.push(horizon);
    let mut worst: f64 = 0.0;
    for t in pts {
        let f = fluid.eval(t);
        worst = worst.max((path.eval(t) as f64 / n - f).abs());
        if t > 0.0 {
            worst = worst.max((path.eval_left(t) as f64 / n - f).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnRow {
    pub n: usize,
    pub reps: usize,
    pub median_q: f64,
    pub q90_q: f64,
    pub median_a: f64,
    pub q90_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnReport {
    pub rows: Vec<LlnRow>,
    /// `(n, rep, sup|Q/n − q|, sup|A/n − a|)`.
    pub raw: Vec<(usize, usize, f64, f64)>,
    pub elapsed_secs: f64,
}

fn run_one(scn: &Scenario, n: usize, seed: u64) -> Result<SimTrace, HarnessError> {
    Ok(simulate(&scn.sim_config(n, seed))?)
}

/// For each `n`, `reps` seeded runs and the sup-deviations of `Q/n` from
/// `q` and of `A/n` from `a` over `[0, T]`.
pub fn run_lln(scn: &Scenario, n_list: &[usize], reps: usize, master_seed: u64) -> Result<LlnReport, HarnessError> {
    let start = Instant::now();
    let fluid = scn.solve_fluid()?;
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &n in n_list {
        let exp = EXP_LLN << 32 | n as u64;
        let dev: Vec<(f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let tr = run_one(scn, n, derive_seed(master_seed, exp, r as u64))?;
                let nf = n as f64;
                Ok((
                    sup_deviation(&tr.q, nf, &fluid.q, scn.horizon),
                    sup_deviation(&tr.a, nf, &fluid.a, scn.horizon),
                ))
            })
            .collect::<Result<_, HarnessError>>()?;
        let dq: Vec<f64> = dev.iter().map(|d| d.0).collect();
        let da: Vec<f64> = dev.iter().map(|d| d.1).collect();
        rows.push(LlnRow {
            n,
            reps,
            median_q: quantile(&dq, 0.5),
            q90_q: quantile(&dq, 0.9),
            median_a: quantile(&da, 0.5),
            q90_a: quantile(&da, 0.9),
        });
        raw.extend(dev.iter().enumerate().map(|(r, d)| (n, r, d.0, d.1)));
    }
    Ok(LlnReport { rows, raw, elapsed_secs: start.elapsed().as_secs_f64() })
}

impl LlnReport {
    pub fn to_report(&self) -> ExperimentReport {
        let mut summary = Table::new(&["n", "reps", "median_sup_q", "q90_sup_q", "median_sup_a", "q90_sup_a"]);
        for r in &self.rows {
            summary.push(vec![
                r.n.to_string(),
                r.reps.to_string(),
                fmt(r.median_q),
                fmt(r.q90_q),
                fmt(r.median_a),
                fmt(r.q90_a),
            ]);
        }
        let mut raw = Table::new(&["n", "rep", "sup_q", "sup_a"]);
        for &(n, r, q, a) in &self.raw {
            raw.push(vec![n.to_string(), r.to_string(), fmt(q), fmt(a)]);
        }
        ExperimentReport { summary, raw, label: "lln".into(), elapsed_secs: self.elapsed_secs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRow {
    pub t: f64,
    pub sim_mean: f64,
    pub sim_var: f64,
    pub limit_mean: f64,
    pub limit_var: f64,
    /// Mean difference in standard errors.
    pub mean_z: f64,
    /// Variance difference in (normal-theory) standard errors.
    pub var_z: f64,
    pub ks: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub reps: usize,
    pub rows: Vec<CltRow>,
    /// "path" when the regularity condition holds numerically, else "fdd-only".
    pub label: String,
    /// `sim[i][r]`: `Xⁿ(t_i)` of replication `r`; `limit[i][r]` likewise.
    pub sim: Vec<Vec<f64>>,
    pub limit: Vec<Vec<f64>>,
    pub elapsed_secs: f64,
}

/// Samples of the limit process at `t_points`, one independent stream per
/// replication.
pub fn sample_limit(
    scn: &Scenario,
    fluid: &FluidReference,
    t_points: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let inputs = scn.limit_inputs(fluid);
    let step = scn.clt.grid_step;
    let rows: Vec<Vec<f64>> = match scn.servers {
        ServerMode::Finite => {
            let horizon = t_points.iter().copied().fold(0.0, f64::max);
            let sampler = LimitSampler::new(inputs, step, horizon, scn.tol)?;
            (0..reps)
                .into_par_iter()
                .map(|r| {
                    let s = sampler.sample(&mut stream(master_seed, EXP_CLT_LIMIT, r as u64))?;
                    Ok(t_points.iter().map(|&t| s.x.eval(t)).collect())
                })
                .collect::<Result<_, HarnessError>>()?
        }
        ServerMode::Infinite => {
            let sampler = InfServerSampler::new(inputs, step, t_points)?;
            (0..reps)
                .into_par_iter()
                .map(|r| Ok(sampler.sample(&mut stream(master_seed, EXP_CLT_LIMIT, r as u64))?.x))
                .collect::<Result<_, HarnessError>>()?
        }
    };
    Ok(transpose(rows, t_points.len()))
}

fn transpose(rows: Vec<Vec<f64>>, m: usize) -> Vec<Vec<f64>> {
    (0..m).map(|i| rows.iter().map(|r| r[i]).collect()).collect()
}

/// Samples of `Xⁿ(t) = √n(Qⁿ(t)/n − q(t))` at `t_points`.
pub fn sample_scaled(
    scn: &Scenario,
    fluid: &FluidReference,
    n: usize,
    t_points: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let nf = n as f64;
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let tr = run_one(scn, n, derive_seed(master_seed, EXP_CLT_SIM, r as u64))?;
            Ok(t_points.iter().map(|&t| nf.sqrt() * (tr.q.eval(t) as f64 / nf - fluid.q.eval(t))).collect())
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(transpose(rows, t_points.len()))
}

/// Compares simulated `Xⁿ(t)` with samples of the limit `X(t)` at each
/// time point: moments and a two-sample KS test.
pub fn run_clt(
    scn: &Scenario,
    n: usize,
    reps: usize,
    t_points: &[f64],
    master_seed: u64,
) -> Result<CltReport, HarnessError> {
    let start = Instant::now();
    let fluid = scn.solve_fluid()?;
    let label = match scn.servers {
        ServerMode::Infinite => "path".to_string(),
        ServerMode::Finite => {
            let c = check_regularity(&fluid.q, &scn.f, scn.horizon, &CHECK_EPS);
            if c.verdict == Verdict::HoldsNumerically { "path" } else { "fdd-only" }.to_string()
        }
    };
    let sim = sample_scaled(scn, &fluid, n, t_points, reps, master_seed)?;
    let limit = sample_limit(scn, &fluid, t_points, reps, master_seed)?;
    let rows = t_points
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (sm, sv) = mean_var(&sim[i]);
            let (lm, lv) = mean_var(&limit[i]);
            let (ns, nl) = (sim[i].len() as f64, limit[i].len() as f64);
            let mean_se = (sv / ns + lv / nl).sqrt();
            let var_se = (2.0 * sv * sv / (ns - 1.0) + 2.0 * lv * lv / (nl - 1.0)).sqrt();
            let z = |d: f64, se: f64| if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY };
            let ks = ks_two_sample(&sim[i], &limit[i]);
            CltRow {
                t,
                sim_mean: sm,
                sim_var: sv,
                limit_mean: lm,
                limit_var: lv,
                mean_z: z(sm - lm, mean_se),
                var_z: z(sv - lv, var_se),
                ks: ks.statistic,
                p_value: ks.p_value,
            }
        })
        .collect();
    Ok(CltReport { n, reps, rows, label, sim, limit, elapsed_secs: start.elapsed().as_secs_f64() })
}

impl CltReport {
    /// Criteria: KS p-value above `alpha` and both moment gaps within
    /// `bands` standard errors at every time point.
    pub fn passes(&self, alpha: f64, bands: f64) -> bool {
        self.rows.iter().all(|r| r.p_value > alpha && r.mean_z.abs() <= bands && r.var_z.abs() <= bands)
    }

    pub fn to_report(&self) -> ExperimentReport {
        let mut summary = Table::new(&[
            "t", "n", "reps", "label", "sim_mean", "sim_var", "limit_mean", "limit_var", "mean_z", "var_z", "ks", "p_value",
        ]);
        for r in &self.rows {
            summary.push(vec![
                fmt(r.t),
                self.n.to_string(),
                self.reps.to_string(),
                self.label.clone(),
                fmt(r.sim_mean),
                fmt(r.sim_var),
                fmt(r.limit_mean),
                fmt(r.limit_var),
                fmt(r.mean_z),
                fmt(r.var_z),
                fmt(r.ks),
                fmt(r.p_value),
            ]);
        }
        let mut raw = Table::new(&["t", "rep", "x_n", "x_limit"]);
        for (i, r) in self.rows.iter().enumerate() {
            for k in 0..self.sim[i].len().max(self.limit[i].len()) {
                let cell = |v: &Vec<f64>| v.get(k).map_or(String::new(), |&x| fmt(x));
                raw.push(vec![fmt(r.t), k.to_string(), cell(&self.sim[i]), cell(&self.limit[i])]);
            }
        }
        ExperimentReport { summary, raw, label: self.label.clone(), elapsed_secs: self.elapsed_secs }
    }
}
