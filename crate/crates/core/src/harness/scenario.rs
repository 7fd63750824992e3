use std::path::Path;

use serde::Deserialize;

use crate::fluid::{infinite_server_fluid, solve_fluid, FluidModel};
use crate::gaussian::{LimitInputs, X0Law, YSpec, ZSource};
use crate::measures::{divides, DistSpec, GridPath, Interp, MixedCdf, MASS_EPS};
use crate::simulator::{ArrivalSpec, Residuals, Servers, ServiceSpec, SimConfig};

use super::HarnessError;

pub const DEFAULT_GRID_STEP: f64 = 1.0 / 128.0;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default grid of the limit-process solver in CLT experiments.
pub const DEFAULT_LIMIT_GRID_STEP: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerMode {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    Poisson,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum X0Config {
    Point { value: f64 },
    Normal { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YConfig {
    Brownian,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimit {
    x0: Option<X0Config>,
    y: Option<YConfig>,
    y_rate: Option<f64>,
    z: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFluid {
    /// Slope of the fluid arrival curve, when declared separately.
    e_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLln {
    n: Option<Vec<usize>>,
    reps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClt {
    n: Option<usize>,
    reps: Option<usize>,
    t: Option<Vec<f64>>,
    grid_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    horizon: f64,
    grid_step: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    servers: Option<ServerMode>,
    q0: f64,
    arrival_rate: f64,
    arrivals: Option<ArrivalKind>,
    service: DistSpec,
    residual: DistSpec,
    fluid: Option<RawFluid>,
    limit: Option<RawLimit>,
    lln: Option<RawLln>,
    clt: Option<RawClt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnSettings {
    pub n: Vec<usize>,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltSettings {
    pub n: usize,
    pub reps: usize,
    pub t_points: Vec<f64>,
    pub grid_step: f64,
}

/// A validated experiment scenario: the `n`-indexed queue family, its fluid
/// model and the inputs of its limit process.
///
/// Arrivals are `Poisson(λn)` or deterministic at rate `λn`, and
/// `Q₀ = ⌊q₀n⌋`. The fluid arrival curve is `e(t) = λ_f t`, where `λ_f`
/// equals `λ` except in the critically loaded case `q₀ = 1`, `F̃` the
/// equilibrium law of `F`, `λ·mean ≈ 1`: there `λ_f` is set to one over the
/// mean of the tabulated `F`, so the fluid sits at 1 to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub horizon: f64,
    pub grid_step: f64,
    pub tol: f64,
    pub seed: u64,
    pub servers: ServerMode,
    pub q0: f64,
    pub arrival_rate: f64,
    pub fluid_rate: f64,
    pub arrivals: ArrivalKind,
    pub service: DistSpec,
    pub residual: DistSpec,
    pub f: MixedCdf,
    pub ftilde: MixedCdf,
    pub x0: X0Law,
    pub y: YSpec,
    pub z: ZSource,
    pub lln: LlnSettings,
    pub clt: CltSettings,
}

/// Fluid paths an experiment compares against.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidReference {
    pub q: GridPath,
    /// Entries into service (arrivals, for infinite servers).
    pub a: GridPath,
    pub e: GridPath,
    pub residual: f64,
}

fn bad<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    parse_scenario_with_grid(path, None)
}

/// As [`parse_scenario`], with `grid_step` replaced when `grid` is given.
pub fn parse_scenario_with_grid(path: &Path, grid: Option<f64>) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_toml_str_with_grid(&text, grid).map_err(|e| match e {
        HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Self::from_toml_str_with_grid(text, None)
    }

    pub fn from_toml_str_with_grid(text: &str, grid: Option<f64>) -> Result<Self, HarnessError> {
        let mut raw: RawScenario = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if grid.is_some() {
            raw.grid_step = grid;
        }
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawScenario) -> Result<Self, HarnessError> {
        let grid_step = raw.grid_step.unwrap_or(DEFAULT_GRID_STEP);
        let tol = raw.tol.unwrap_or(DEFAULT_TOL);
        if !(raw.horizon > 0.0 && raw.horizon.is_finite()) {
            return bad(format!("horizon: {} must be positive", raw.horizon));
        }
        if !(grid_step > 0.0 && grid_step <= raw.horizon) {
            return bad(format!("grid_step: {grid_step} must be positive and at most the horizon"));
        }
        if !(tol > 0.0) {
            return bad(format!("tol: {tol} must be positive"));
        }
        if !(raw.q0 >= 0.0 && raw.q0.is_finite()) {
            return bad(format!("q0: {} must be finite and nonnegative", raw.q0));
        }
        if !(raw.arrival_rate > 0.0 && raw.arrival_rate.is_finite()) {
            return bad(format!(
                "arrival_rate: {} must be positive (the arrival fluid e must be nondecreasing and nonzero)",
                raw.arrival_rate
            ));
        }
        let servers = raw.servers.unwrap_or(ServerMode::Finite);
        let f = raw.service.build(grid_step, raw.horizon).map_err(|e| HarnessError::Config(format!("service: {e}")))?;
        let ftilde =
            raw.residual.build(grid_step, raw.horizon).map_err(|e| HarnessError::Config(format!("residual: {e}")))?;
        if servers == ServerMode::Finite && f.eval(0.0) >= 1.0 - MASS_EPS {
            return bad("service: F(0) = 1; service times must not all be zero (F(0) < 1 is required)");
        }

        let mut fluid_rate = raw.arrival_rate;
        if let Some(e_rate) = raw.fluid.as_ref().and_then(|f| f.e_rate) {
            let gap = (e_rate - raw.arrival_rate).abs() * raw.horizon;
            if gap > 1e-9 * raw.arrival_rate.max(1.0) {
                return bad(format!(
                    "fluid.e_rate: e(t) = {e_rate}·t differs from the mean arrival curve {}·t by {gap:.3e} on [0, {}]",
                    raw.arrival_rate, raw.horizon
                ));
            }
            fluid_rate = e_rate;
        }
        let critical = servers == ServerMode::Finite
            && raw.q0 == 1.0
            && matches!(&raw.residual, DistSpec::Equilibrium { of } if **of == raw.service)
            && raw.service.mean().is_some_and(|m| (raw.arrival_rate * m - 1.0).abs() <= 1e-4);
        if critical {
            fluid_rate = 1.0 / f.survival_integral(f.horizon());
        }

        let arrivals = raw.arrivals.unwrap_or(ArrivalKind::Poisson);
        let limit = raw.limit.unwrap_or(RawLimit { x0: None, y: None, y_rate: None, z: None });
        let x0 = match limit.x0 {
            None => X0Law::PointMass(0.0),
            Some(X0Config::Point { value }) => X0Law::PointMass(value),
            Some(X0Config::Normal { mean, variance }) => {
                if !(variance >= 0.0) {
                    return bad(format!("limit.x0.variance: {variance} must be nonnegative"));
                }
                X0Law::Normal { mean, variance }
            }
        };
        let default_y = match arrivals {
            ArrivalKind::Poisson => YConfig::Brownian,
            ArrivalKind::Deterministic => YConfig::Zero,
        };
        let y = match limit.y.unwrap_or(default_y) {
            YConfig::Zero => YSpec::Zero,
            YConfig::Brownian => YSpec::Brownian { rate: limit.y_rate.unwrap_or(raw.arrival_rate) },
        };
        let z = if limit.z.unwrap_or(true) { ZSource::Covariance } else { ZSource::Zero };

        let lln = raw.lln.unwrap_or(RawLln { n: None, reps: None });
        let lln = LlnSettings { n: lln.n.unwrap_or_else(|| vec![64, 256, 1024]), reps: lln.reps.unwrap_or(200) };
        if lln.n.iter().any(|&n| n == 0) || lln.reps == 0 {
            return bad("lln: n values and reps must be positive");
        }
        let clt = raw.clt.unwrap_or(RawClt { n: None, reps: None, t: None, grid_step: None });
        let clt = CltSettings {
            n: clt.n.unwrap_or(400),
            reps: clt.reps.unwrap_or(4000),
            t_points: clt.t.unwrap_or_else(|| vec![raw.horizon]),
            grid_step: clt.grid_step.unwrap_or(DEFAULT_LIMIT_GRID_STEP.max(grid_step)),
        };
        if clt.n == 0 || clt.reps == 0 {
            return bad("clt: n and reps must be positive");
        }
        if !divides(grid_step, clt.grid_step) {
            return bad(format!("clt.grid_step: {} must be a multiple of grid_step {grid_step}", clt.grid_step));
        }
        for &t in &clt.t_points {
            let k = (t / clt.grid_step).round();
            if !(t >= 0.0 && t <= raw.horizon) || (k * clt.grid_step - t).abs() > 1e-9 {
                return bad(format!("clt.t: {t} must be a node of the limit grid inside [0, {}]", raw.horizon));
            }
        }

        Ok(Scenario {
            name: raw.name,
            horizon: raw.horizon,
            grid_step,
            tol,
            seed: raw.seed.unwrap_or(0),
            servers,
            q0: raw.q0,
            arrival_rate: raw.arrival_rate,
            fluid_rate,
            arrivals,
            service: raw.service,
            residual: raw.residual,
            f,
            ftilde,
            x0,
            y,
            z,
            lln,
            clt,
        })
    }

    pub fn fluid_arrivals(&self) -> Result<GridPath, HarnessError> {
        Ok(GridPath::from_fn(self.grid_step, self.horizon, Interp::Linear, |t| self.fluid_rate * t)?)
    }

    pub fn fluid_model(&self) -> Result<FluidModel, HarnessError> {
        Ok(FluidModel {
            q0: self.q0,
            e: self.fluid_arrivals()?,
            f: self.f.clone(),
            ftilde: self.ftilde.clone(),
            extended: None,
        })
    }

    /// Solves the fluid model and refuses to go on unless the fixed-point
    /// residual is within tolerance.
    pub fn solve_fluid(&self) -> Result<FluidReference, HarnessError> {
        let e = self.fluid_arrivals()?;
        let r = match self.servers {
            ServerMode::Finite => {
                let s = solve_fluid(&self.fluid_model()?, self.grid_step, self.tol)?;
                FluidReference { q: s.q, a: s.a, e, residual: s.residual }
            }
            ServerMode::Infinite => {
                let q = infinite_server_fluid(self.q0, &e, &self.f, &self.ftilde)?;
                FluidReference { q, a: e.clone(), e, residual: 0.0 }
            }
        };
        if r.residual > self.tol {
            return Err(HarnessError::Numerical(format!(
                "fluid residual {:e} exceeds tolerance {:e}",
                r.residual, self.tol
            )));
        }
        Ok(r)
    }

    /// Queue with `n` servers (or scale `n` for infinite servers).
    pub fn sim_config(&self, n: usize, seed: u64) -> SimConfig {
        let rate = self.arrival_rate * n as f64;
        let arrivals = match self.arrivals {
            ArrivalKind::Poisson => ArrivalSpec::Poisson { rate },
            ArrivalKind::Deterministic => ArrivalSpec::Deterministic { rate },
        };
        let servers = match self.servers {
            ServerMode::Finite => Servers::Finite(n),
            ServerMode::Infinite => Servers::Infinite,
        };
        let q0 = (self.q0 * n as f64 + 1e-9).floor() as usize;
        let mut cfg = SimConfig::new(servers, arrivals, ServiceSpec::Distribution(self.f.clone()), self.horizon)
            .with_initial(q0, Residuals::Sampled(self.ftilde.clone()));
        cfg.seed = seed;
        cfg
    }

    pub fn limit_inputs(&self, fluid: &FluidReference) -> LimitInputs {
        LimitInputs {
            x0: self.x0.clone(),
            q0: self.q0,
            f: self.f.clone(),
            ftilde: self.ftilde.clone(),
            y: self.y.clone(),
            z: self.z,
            q: fluid.q.clone(),
            a: fluid.a.clone(),
        }
    }
}
