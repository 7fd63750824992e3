//! Exact event-driven simulation of the FCFS many-server queue and the
//! infinite-server queue, with a checker for the pathwise system equations.
//!
//! All customers' service requirements are drawn before the run starts, so
//! a trace is a deterministic function of the configuration and the seed.

mod engine;
mod scaled;
mod trace;

pub use engine::{simulate, simulate_gg_inf, simulate_gg_n};
pub use scaled::{empirical_initial_process, scaled_paths};
pub use trace::{verify_system_equations, work_conservation_defect, EventKind, SimTrace, StepPath};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::measures::{streams, MeasureError, MixedCdf, MASS_EPS};

/// Default cap on processed events per run.
pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("admission cascade: event budget of {0} exhausted before the horizon")]
    AdmissionCascade(u64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Servers {
    Finite(usize),
    Infinite,
}

impl Servers {
    pub fn count(&self) -> Option<usize> {
        match self {
            Servers::Finite(n) => Some(*n),
            Servers::Infinite => None,
        }
    }
}

/// Remaining service times of the customers in service at time 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Residuals {
    Explicit(Vec<f64>),
    Sampled(MixedCdf),
}

/// Service requirements of the customers that enter service after time 0,
/// in order of entry.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceSpec {
    Distribution(MixedCdf),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalSpec {
    Poisson { rate: f64 },
    /// Ordinary renewal process: the first arrival comes after one interarrival time.
    Renewal { interarrival: MixedCdf },
    /// Epochs `k / rate`, `k = 1, 2, …`.
    Deterministic { rate: f64 },
    Explicit { epochs: Vec<f64> },
}

impl ArrivalSpec {
    /// Mean number of arrivals by `t`, where known in closed form.
    pub fn mean_count(&self, t: f64) -> Option<f64> {
        match self {
            ArrivalSpec::Poisson { rate } => Some(rate * t),
            ArrivalSpec::Deterministic { rate } => Some((rate * t + 1e-9).floor()),
            ArrivalSpec::Explicit { epochs } => Some(epochs.iter().filter(|&&e| e <= t).count() as f64),
            ArrivalSpec::Renewal { .. } => None,
        }
    }

    fn epochs<R: Rng>(&self, horizon: f64, rng: &mut R) -> Result<Vec<f64>, SimError> {
        let mut out = Vec::new();
        match self {
            ArrivalSpec::Poisson { rate } => {
                let mut t = 0.0;
                loop {
                    let x: f64 = Exp1.sample(rng);
                    t += x / rate;
                    if t > horizon {
                        break;
                    }
                    out.push(t);
                }
            }
            ArrivalSpec::Renewal { interarrival } => {
                let mut t = 0.0;
                loop {
                    t += interarrival.sample(rng)?;
                    if t > horizon {
                        break;
                    }
                    out.push(t);
                }
            }
            ArrivalSpec::Deterministic { rate } => {
                let mut k = 1u64;
                loop {
                    let t = k as f64 / rate;
                    if t > horizon {
                        break;
                    }
                    out.push(t);
                    k += 1;
                }
            }
            ArrivalSpec::Explicit { epochs } => out.extend(epochs.iter().copied().filter(|&t| t <= horizon)),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub servers: Servers,
    /// Customers in service at time 0 (each has a residual service time).
    pub in_service0: usize,
    /// Customers waiting at time 0; they enter service in order ahead of
    /// any later arrival.
    pub queued0: usize,
    pub residuals: Residuals,
    pub service: ServiceSpec,
    /// Service law of the customers waiting at time 0, when it differs from
    /// the law of later arrivals.
    pub queued_service: Option<MixedCdf>,
    pub arrivals: ArrivalSpec,
    pub horizon: f64,
    pub seed: u64,
    pub event_budget: u64,
}

impl SimConfig {
    pub fn new(servers: Servers, arrivals: ArrivalSpec, service: ServiceSpec, horizon: f64) -> Self {
        SimConfig {
            servers,
            in_service0: 0,
            queued0: 0,
            residuals: Residuals::Explicit(Vec::new()),
            service,
            queued_service: None,
            arrivals,
            horizon,
            seed: 0,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }

    /// Standard initial condition: `Q₀` customers present, the first
    /// `Q₀ ∧ n` of them in service.
    pub fn with_initial(mut self, q0: usize, residuals: Residuals) -> Self {
        self.in_service0 = match self.servers {
            Servers::Finite(n) => q0.min(n),
            Servers::Infinite => q0,
        };
        self.queued0 = q0 - self.in_service0;
        self.residuals = residuals;
        self
    }

    pub fn q0(&self) -> usize {
        self.in_service0 + self.queued0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if let Servers::Finite(0) = self.servers {
            return bad("server count must be positive".into());
        }
        if let Servers::Finite(n) = self.servers {
            if self.in_service0 > n {
                return bad(format!("{} customers in service at time 0 but only {n} servers", self.in_service0));
            }
        }
        if self.servers == Servers::Infinite && self.queued0 > 0 {
            return bad("an infinite-server system has no waiting customers".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be positive", self.horizon));
        }
        let zero_mass_ok = |f: &MixedCdf, what: &str| {
            if f.eval(0.0) >= 1.0 - MASS_EPS {
                Err(SimError::Config(format!("{what} puts all its mass at 0; F(0) < 1 is required")))
            } else {
                Ok(())
            }
        };
        // an infinite-server system has no queue, so zero service times are harmless there
        let finite = self.servers != Servers::Infinite;
        match &self.service {
            ServiceSpec::Distribution(f) if finite => zero_mass_ok(f, "service distribution")?,
            ServiceSpec::Distribution(_) => {}
            ServiceSpec::Explicit(v) => {
                if v.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                    return bad("explicit service times must be finite and nonnegative".into());
                }
            }
        }
        if let Some(fh) = &self.queued_service {
            zero_mass_ok(fh, "queued-customer service distribution")?;
        }
        if let Residuals::Explicit(r) = &self.residuals {
            if r.len() != self.in_service0 {
                return bad(format!(
                    "{} residual service times given for {} customers in service",
                    r.len(),
                    self.in_service0
                ));
            }
            if r.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return bad("residual service times must be finite and nonnegative".into());
            }
        }
        match &self.arrivals {
            ArrivalSpec::Poisson { rate } | ArrivalSpec::Deterministic { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return bad(format!("arrival rate {rate} must be positive"));
                }
            }
            ArrivalSpec::Renewal { interarrival } => zero_mass_ok(interarrival, "interarrival distribution")?,
            ArrivalSpec::Explicit { epochs } => {
                if epochs.windows(2).any(|w| w[1] < w[0]) || epochs.iter().any(|&t| !(t >= 0.0)) {
                    return bad("arrival epochs must be nonnegative and nondecreasing".into());
                }
            }
        }
        Ok(())
    }
}

/// Purposes of the per-run substreams.
const STREAM_ARRIVALS: u64 = 0;
const STREAM_SERVICE: u64 = 1;
const STREAM_RESIDUALS: u64 = 2;
const STREAM_QUEUED: u64 = 3;

/// Everything random about one run, drawn before the event loop.
#[derive(Debug, Clone)]
pub(crate) struct Realization {
    pub residuals: Vec<f64>,
    pub arrivals: Vec<f64>,
    /// Service times in order of entry into service (initially queued first).
    pub services: Vec<f64>,
}

pub(crate) fn realize(cfg: &SimConfig) -> Result<Realization, SimError> {
    cfg.validate()?;
    let sub = |p| streams::substream(cfg.seed, 0, 0, p);
    let residuals = match &cfg.residuals {
        Residuals::Explicit(r) => r.clone(),
        Residuals::Sampled(f) => {
            let mut rng = sub(STREAM_RESIDUALS);
            (0..cfg.in_service0).map(|_| f.sample(&mut rng)).collect::<Result<_, _>>()?
        }
    };
    let arrivals = cfg.arrivals.epochs(cfg.horizon, &mut sub(STREAM_ARRIVALS))?;
    let queued = cfg.queued0;
    let needed = queued + arrivals.len();
    let services = match &cfg.service {
        ServiceSpec::Explicit(v) => {
            if v.len() < needed {
                return Err(SimError::Config(format!(
                    "{} explicit service times given but {needed} customers may enter service",
                    v.len()
                )));
            }
            v[..needed].to_vec()
        }
        ServiceSpec::Distribution(f) => {
            let mut out = Vec::with_capacity(needed);
            let mut rq = sub(STREAM_QUEUED);
            for _ in 0..queued {
                out.push(cfg.queued_service.as_ref().unwrap_or(f).sample(&mut rq)?);
            }
            let mut rs = sub(STREAM_SERVICE);
            for _ in 0..arrivals.len() {
                out.push(f.sample(&mut rs)?);
            }
            out
        }
    };
    Ok(Realization { residuals, arrivals, services })
}

#[cfg(test)]
mod tests;
