use crate::measures::{convolve_stieltjes, GridPath, Interp, MixedCdf, MASS_EPS};

use super::volterra::{linear_path, solve_volterra, Nonlinearity, VolterraProblem};
use super::{FluidError, DEFAULT_MAX_ITER};

/// Inputs of the fluid equation: initial fluid level `q₀`, cumulative
/// arrival fluid `e`, service law `F` and residual law `F̃` of the fluid in
/// service at time 0. The optional extension gives the waiting fluid its
/// own service law `F̂` and separate initial levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidModel {
    pub q0: f64,
    pub e: GridPath,
    pub f: MixedCdf,
    pub ftilde: MixedCdf,
    pub extended: Option<ExtendedInputs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedInputs {
    /// Fluid waiting at time 0.
    pub qhat0: f64,
    /// Fluid in service at time 0.
    pub qtilde0: f64,
    pub fhat: MixedCdf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidSolution {
    pub q: GridPath,
    pub a: GridPath,
    pub extended: Option<ExtendedPaths>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPaths {
    /// Fluid present at time 0 that has not yet left.
    pub qhat: GridPath,
    /// Entries into service of the fluid arriving after 0.
    pub acheck: GridPath,
    /// Entries into service of the fluid waiting at 0.
    pub ahat: GridPath,
}

fn plus(x: f64) -> f64 {
    x.max(0.0)
}

impl FluidModel {
    pub fn validate(&self) -> Result<(), FluidError> {
        if !(self.q0 >= 0.0 && self.q0.is_finite()) {
            return Err(FluidError::Invalid(format!("q0 = {} must be finite and nonnegative", self.q0)));
        }
        if let Some(k) = self.e.values().windows(2).position(|w| w[1] < w[0] - 1e-12) {
            return Err(FluidError::Invalid(format!("arrival fluid e decreases after t = {}", self.e.time(k))));
        }
        if self.f.eval(0.0) >= 1.0 - MASS_EPS {
            return Err(FluidError::Invalid("service law has F(0) = 1; F(0) < 1 is required".into()));
        }
        if let Some(x) = &self.extended {
            if !(x.qhat0 >= 0.0 && x.qtilde0 >= 0.0) {
                return Err(FluidError::Invalid("initial fluid levels must be nonnegative".into()));
            }
            if x.fhat.eval(0.0) >= 1.0 - MASS_EPS {
                return Err(FluidError::Invalid("waiting-fluid service law has F̂(0) = 1".into()));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.e.horizon()
    }
}

fn level_one(step: f64, horizon: f64) -> Result<Nonlinearity, FluidError> {
    // (y − 1)⁺ as the shifted positive part with m ≡ −1
    Ok(Nonlinearity::ShiftedPositivePart { shift: linear_path(step, horizon, |_| -1.0)? })
}

fn solve_checked(p: &VolterraProblem, step: f64, tol: f64) -> Result<(GridPath, usize, f64), FluidError> {
    let s = solve_volterra(p, step, tol, DEFAULT_MAX_ITER)?;
    if s.residual > tol {
        return Err(FluidError::Residual { residual: s.residual, tol });
    }
    Ok((s.y, s.iterations, s.residual))
}

fn check_invariants(q: &GridPath, a: &GridPath, what: &str) -> Result<(), FluidError> {
    if let Some(k) = q.values().iter().position(|&v| v < -1e-6) {
        return Err(FluidError::Invariant(format!("{what} ≥ 0 at t = {}", q.time(k))));
    }
    if let Some(k) = a.values().windows(2).position(|w| w[1] < w[0] - 1e-6) {
        return Err(FluidError::Invariant(format!("monotonicity of the entry fluid at t = {}", a.time(k))));
    }
    Ok(())
}

/// Solves `q = q₀ − (q₀−1)⁺F − (q₀∧1)F̃ + e − ∫e(t−s)dF(s) + ∫(q(t−s)−1)⁺dF(s)`
/// and sets `a = (q₀−1)⁺ + e − (q−1)⁺`. Models with the extension are
/// delegated to [`solve_fluid_extended`].
pub fn solve_fluid(m: &FluidModel, grid_step: f64, tol: f64) -> Result<FluidSolution, FluidError> {
    if m.extended.is_some() {
        return solve_fluid_extended(m, grid_step, tol);
    }
    m.validate()?;
    let horizon = m.horizon();
    let (q0, over, under) = (m.q0, plus(m.q0 - 1.0), m.q0.min(1.0));
    let mut x = Vec::new();
    let nodes = crate::measures::node_count(grid_step, horizon);
    for k in 0..nodes {
        let t = k as f64 * grid_step;
        let v = q0 - over * m.f.eval_exact(t)? - under * m.ftilde.eval_exact(t)? + m.e.eval(t)
            - convolve_stieltjes(&m.e, &m.f, t)?;
        x.push(v);
    }
    let p = VolterraProblem {
        forcing: GridPath::new(grid_step, x, Interp::Linear)?,
        kernel: m.f.clone(),
        f: level_one(grid_step, horizon)?,
    };
    let (q, iterations, residual) = solve_checked(&p, grid_step, tol)?;
    let a = GridPath::from_fn(grid_step, horizon, Interp::Linear, |t| over + m.e.eval(t) - plus(q.eval(t) - 1.0))?;
    check_invariants(&q, &a, "q")?;
    Ok(FluidSolution { q, a, extended: None, iterations, residual })
}

/// Two-class fluid model: first
/// `q̂ = q̂₀(1 − F̂) + q̃₀(1 − F̃) + ∫(q̂(t−s)−1)⁺dF̂(s)`, then
/// `q = e − ∫e(t−s)dF(s) + q̂ − ∫(q̂(t−s)−1)⁺dF(s) + ∫(q(t−s)−1)⁺dF(s)`,
/// with `ǎ = e + (q̂−1)⁺ − (q−1)⁺` and `â = q̂₀ − (q̂−1)⁺`.
pub fn solve_fluid_extended(m: &FluidModel, grid_step: f64, tol: f64) -> Result<FluidSolution, FluidError> {
    m.validate()?;
    let ext = m
        .extended
        .as_ref()
        .ok_or_else(|| FluidError::Invalid("model has no extended inputs".into()))?;
    let horizon = m.horizon();
    let nodes = crate::measures::node_count(grid_step, horizon);
    let times: Vec<f64> = (0..nodes).map(|k| k as f64 * grid_step).collect();

    let mut xhat = Vec::with_capacity(nodes);
    for &t in &times {
        xhat.push(ext.qhat0 * (1.0 - ext.fhat.eval_exact(t)?) + ext.qtilde0 * (1.0 - m.ftilde.eval_exact(t)?));
    }
    let phat = VolterraProblem {
        forcing: GridPath::new(grid_step, xhat, Interp::Linear)?,
        kernel: ext.fhat.clone(),
        f: level_one(grid_step, horizon)?,
    };
    let (qhat, it_hat, res_hat) = solve_checked(&phat, grid_step, tol)?;

    let qhat_over = qhat.map(|v| plus(v - 1.0));
    let mut x = Vec::with_capacity(nodes);
    for (k, &t) in times.iter().enumerate() {
        x.push(
            m.e.eval(t) - convolve_stieltjes(&m.e, &m.f, t)? + qhat.values()[k]
                - convolve_stieltjes(&qhat_over, &m.f, t)?,
        );
    }
    let p = VolterraProblem {
        forcing: GridPath::new(grid_step, x, Interp::Linear)?,
        kernel: m.f.clone(),
        f: level_one(grid_step, horizon)?,
    };
    let (q, it, res) = solve_checked(&p, grid_step, tol)?;

    let acheck = GridPath::from_fn(grid_step, horizon, Interp::Linear, |t| {
        m.e.eval(t) + plus(qhat.eval(t) - 1.0) - plus(q.eval(t) - 1.0)
    })?;
    let ahat = qhat_over.map(|v| ext.qhat0 - v);
    check_invariants(&q, &acheck, "q")?;
    check_invariants(&qhat, &ahat, "q̂")?;
    // total entries: fluid waiting at 0 plus arrivals, less what is still queued
    let a = acheck.zip_with(&ahat, |x, y| x + y)?;
    Ok(FluidSolution {
        q,
        a,
        extended: Some(ExtendedPaths { qhat, acheck, ahat }),
        iterations: it.max(it_hat),
        residual: res.max(res_hat),
    })
}

/// Fluid level of the infinite-server queue,
/// `q̄(t) = q₀(1 − F̃(t)) + e(t) − ∫e(t−s)dF(s)`. No equation to solve.
pub fn infinite_server_fluid(q0: f64, e: &GridPath, f: &MixedCdf, ftilde: &MixedCdf) -> Result<GridPath, FluidError> {
    if !(q0 >= 0.0 && q0.is_finite()) {
        return Err(FluidError::Invalid(format!("q0 = {q0} must be finite and nonnegative")));
    }
    let step = e.step();
    let mut v = Vec::with_capacity(e.len());
    for k in 0..e.len() {
        let t = k as f64 * step;
        v.push(q0 * (1.0 - ftilde.eval_exact(t)?) + e.values()[k] - convolve_stieltjes(e, f, t)?);
    }
    Ok(GridPath::new(step, v, e.interp())?)
}
