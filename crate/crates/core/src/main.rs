use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manyserver::fluid::check_regularity;
use manyserver::gaussian::{c_diagnostic, InfServerSampler, LimitSampler};
use manyserver::harness::{
    emit_report, fmt, parse_scenario_with_grid, run_clt, run_lln, HarnessError, Scenario, ServerMode, Table,
    CHECK_EPS,
};
use manyserver::measures::streams::stream;
use manyserver::simulator::simulate;

/// Many-server queue lab: simulation, fluid and diffusion limits.
#[derive(Debug, Parser)]
#[command(name = "manyserver", version)]
struct Cli {
    /// Master seed; overrides the scenario's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid step, as a number or `2^-k`; overrides the scenario's `grid_step`.
    #[arg(long, global = true, value_parser = parse_step)]
    grid: Option<f64>,
    /// Directory for output files whose path is relative or not given.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Event simulation of the n-th queue of a scenario.
    #[command(subcommand)]
    Sim(SimCmd),
    #[command(subcommand)]
    Fluid(FluidCmd),
    /// Gaussian limit process.
    #[command(subcommand)]
    Limit(LimitCmd),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Exp(ExpCmd),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SimCmd {
    /// Writes the event trace: time, Q, A, Qtilde, E, event_kind.
    Run {
        #[command(flatten)]
        common: Common,
        /// Scale (server count); defaults to the scenario's CLT n.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum FluidCmd {
    /// Solves the fluid equations and writes t, q, a.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Regularity check of the fluid path against the service law:
    /// sup_t of the F-mass of {s : 0 < |q(t − s) − 1| < ε} for each ε.
    #[command(name = "regularity", visible_alias = "check29")]
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = CHECK_EPS.to_vec())]
        eps: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum LimitCmd {
    /// Writes rep, t, S, Y, Z, X for independent draws of the limit.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Writes the covariance matrix of Z on the limit grid.
    Zcov {
        #[command(flatten)]
        common: Common,
    },
    /// Writes the diagnostic C(t) on the fluid grid.
    Cdiag {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
enum ExpCmd {
    /// Sup-deviations of Q/n and A/n from the fluid limit.
    Lln {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
        /// Exit with code 4 unless median deviations fall with ratio in [0.3, 0.8].
        #[arg(long)]
        assert: bool,
    },
    /// Marginals of √n(Q/n − q) against the limit X.
    Clt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        /// Exit with code 4 unless KS p > 0.001 and moments agree within 3 SE.
        #[arg(long)]
        assert: bool,
    },
}

fn parse_step(s: &str) -> Result<f64, String> {
    let v = match s.strip_prefix("2^") {
        Some(k) => 2f64.powi(k.parse::<i32>().map_err(|e| format!("bad exponent in {s}: {e}"))?),
        None => s.parse::<f64>().map_err(|e| format!("bad grid step {s}: {e}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("grid step {s} must be positive"))
    }
}

struct Ctx {
    seed: Option<u64>,
    grid: Option<f64>,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn scenario(&self, c: &Common) -> Result<Scenario, HarnessError> {
        parse_scenario_with_grid(&c.config, self.grid)
    }

    fn seed(&self, s: &Scenario) -> u64 {
        self.seed.unwrap_or(s.seed)
    }

    fn out(&self, c: &Common, s: &Scenario, suffix: &str) -> PathBuf {
        let p = c.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}_{suffix}.csv", s.name)));
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p,
        }
    }
}

fn write_table(t: &Table, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, t.to_csv_bytes()?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sim_run(ctx: &Ctx, common: &Common, n: Option<usize>) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    let n = n.unwrap_or(s.clt.n);
    let tr = simulate(&s.sim_config(n, ctx.seed(&s)))?;
    let mut t = Table::new(&["time", "Q", "A", "Qtilde", "E", "event_kind"]);
    for (&time, kind) in tr.event_times.iter().zip(&tr.event_kinds) {
        t.push(vec![
            fmt(time),
            tr.q.eval(time).to_string(),
            tr.a.eval(time).to_string(),
            tr.qtilde.eval(time).to_string(),
            tr.e.eval(time).to_string(),
            kind.as_str().to_string(),
        ]);
    }
    write_table(&t, &ctx.out(common, &s, &format!("trace_n{n}")))
}

fn fluid_solve(ctx: &Ctx, common: &Common) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    let fl = s.solve_fluid()?;
    let mut t = Table::new(&["t", "q", "a"]);
    for k in 0..fl.q.len() {
        let x = fl.q.time(k);
        t.push(vec![fmt(x), fmt(fl.q.values()[k]), fmt(fl.a.values()[k])]);
    }
    eprintln!("fluid residual {:e}", fl.residual);
    write_table(&t, &ctx.out(common, &s, "fluid"))
}

fn fluid_check(ctx: &Ctx, common: &Common, eps: &[f64]) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(HarnessError::Config("eps values must be positive".into()));
    }
    let fl = s.solve_fluid()?;
    let r = check_regularity(&fl.q, &s.f, s.horizon, eps);
    let mut t = Table::new(&["eps", "value"]);
    for &(e, v) in &r.values {
        t.push(vec![fmt(e), fmt(v)]);
        println!("eps = {e:e}: {v:e}");
    }
    println!("verdict: {}", r.verdict.as_str());
    if common.out.is_some() {
        write_table(&t, &ctx.out(common, &s, "regularity"))?;
    }
    Ok(())
}

fn limit_sample(ctx: &Ctx, common: &Common, reps: usize) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    let fl = s.solve_fluid()?;
    let seed = ctx.seed(&s);
    let inputs = s.limit_inputs(&fl);
    let step = s.clt.grid_step;
    let mut t = Table::new(&["rep", "t", "S", "Y", "Z", "X"]);
    match s.servers {
        ServerMode::Finite => {
            let sampler = LimitSampler::new(inputs, step, s.horizon, s.tol)?;
            for r in 0..reps {
                let x = sampler.sample(&mut stream(seed, 0, r as u64))?;
                for k in 0..x.x.len() {
                    let v = |p: &manyserver::measures::GridPath| fmt(p.values()[k]);
                    t.push(vec![r.to_string(), fmt(x.x.time(k)), v(&x.s), v(&x.y), v(&x.z), v(&x.x)]);
                }
            }
        }
        ServerMode::Infinite => {
            let m = (s.horizon / step).round() as usize;
            let times: Vec<f64> = (0..=m).map(|k| k as f64 * step).collect();
            let sampler = InfServerSampler::new(inputs, step, &times)?;
            for r in 0..reps {
                let x = sampler.sample(&mut stream(seed, 0, r as u64))?;
                for (k, &tk) in x.times.iter().enumerate() {
                    t.push(vec![r.to_string(), fmt(tk), fmt(x.s[k]), fmt(x.y[k]), fmt(x.z[k]), fmt(x.x[k])]);
                }
            }
        }
    }
    write_table(&t, &ctx.out(common, &s, "limit"))
}

fn limit_zcov(ctx: &Ctx, common: &Common) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    let fl = s.solve_fluid()?;
    let step = s.clt.grid_step;
    let m = (s.horizon / step).round() as usize;
    let times: Vec<f64> = (0..=m).map(|k| k as f64 * step).collect();
    let cov = manyserver::gaussian::z_covariance(&s.f, &fl.a, &times)?;
    let mut header = vec!["t".to_string()];
    header.extend(times.iter().map(|&x| fmt(x)));
    let mut t = Table { header, rows: Vec::new() };
    for (i, &ti) in times.iter().enumerate() {
        let mut row = vec![fmt(ti)];
        row.extend((0..times.len()).map(|j| fmt(cov[(i, j)])));
        t.push(row);
    }
    write_table(&t, &ctx.out(common, &s, "zcov"))
}

fn limit_cdiag(ctx: &Ctx, common: &Common) -> Result<(), HarnessError> {
    let s = ctx.scenario(common)?;
    let fl = s.solve_fluid()?;
    let times: Vec<f64> = (0..fl.a.len()).map(|k| fl.a.time(k)).collect();
    let c = c_diagnostic(&fl.a, &s.f, &times)?;
    let mut t = Table::new(&["t", "C"]);
    for (x, v) in times.iter().zip(c) {
        t.push(vec![fmt(*x), fmt(v)]);
    }
    write_table(&t, &ctx.out(common, &s, "cdiag"))
}

fn exp_lln(
    ctx: &Ctx,
    common: &Common,
    n: Option<Vec<usize>>,
    reps: Option<usize>,
    assert: bool,
) -> Result<bool, HarnessError> {
    let s = ctx.scenario(common)?;
    let n = n.unwrap_or_else(|| s.lln.n.clone());
    let reps = reps.unwrap_or(s.lln.reps);
    let r = run_lln(&s, &n, reps, ctx.seed(&s))?;
    for row in &r.rows {
        eprintln!("n = {}: median sup|Q/n - q| = {:.4e}, median sup|A/n - a| = {:.4e}", row.n, row.median_q, row.median_a);
    }
    eprintln!("elapsed {:.2} s", r.elapsed_secs);
    emit_report(&r.to_report(), &ctx.out(common, &s, "lln"))?;
    Ok(!assert
        || r.rows.windows(2).all(|w| {
            let ratio = w[1].median_q / w[0].median_q;
            (0.3..=0.8).contains(&ratio)
        }))
}

fn exp_clt(
    ctx: &Ctx,
    common: &Common,
    n: Option<usize>,
    reps: Option<usize>,
    t: Option<Vec<f64>>,
    assert: bool,
) -> Result<bool, HarnessError> {
    let s = ctx.scenario(common)?;
    let n = n.unwrap_or(s.clt.n);
    let reps = reps.unwrap_or(s.clt.reps);
    let t = t.unwrap_or_else(|| s.clt.t_points.clone());
    let r = run_clt(&s, n, reps, &t, ctx.seed(&s))?;
    eprintln!("label: {}", r.label);
    for row in &r.rows {
        eprintln!(
            "t = {}: mean {:.4} vs {:.4}, var {:.4} vs {:.4}, KS {:.4} (p = {:.3e})",
            row.t, row.sim_mean, row.limit_mean, row.sim_var, row.limit_var, row.ks, row.p_value
        );
    }
    eprintln!("elapsed {:.2} s", r.elapsed_secs);
    emit_report(&r.to_report(), &ctx.out(common, &s, "clt"))?;
    Ok(!assert || r.passes(1e-3, 3.0))
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("--threads: {e}")))?;
    }
    let ctx = Ctx { seed: cli.seed, grid: cli.grid, out_dir: cli.out_dir };
    match cli.cmd {
        Command::Sim(SimCmd::Run { common, n }) => sim_run(&ctx, &common, n).map(|_| true),
        Command::Fluid(FluidCmd::Solve { common }) => fluid_solve(&ctx, &common).map(|_| true),
        Command::Fluid(FluidCmd::Check { common, eps }) => fluid_check(&ctx, &common, &eps).map(|_| true),
        Command::Limit(LimitCmd::Sample { common, reps }) => limit_sample(&ctx, &common, reps).map(|_| true),
        Command::Limit(LimitCmd::Zcov { common }) => limit_zcov(&ctx, &common).map(|_| true),
        Command::Limit(LimitCmd::Cdiag { common }) => limit_cdiag(&ctx, &common).map(|_| true),
        Command::Exp(ExpCmd::Lln { common, n, reps, assert }) => exp_lln(&ctx, &common, n, reps, assert),
        Command::Exp(ExpCmd::Clt { common, n, reps, t, assert }) => exp_clt(&ctx, &common, n, reps, t, assert),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance check failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
