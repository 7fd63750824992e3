use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::fluid::{regime, solve_volterra, FluidError, Nonlinearity, Regime, VolterraProblem, DEFAULT_MAX_ITER, LEVEL_TOL};
use crate::measures::{ConvolutionKernel, GridPath, Interp, MixedCdf, TIME_EPS};

use super::sampling::{brownian_path, sample_s, GaussianSampler};
use super::{z_covariance, GaussianError};

/// Law of the limiting initial fluctuation `X₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum X0Law {
    PointMass(f64),
    Normal { mean: f64, variance: f64 },
    /// Uniform draw from the listed values.
    Empirical(Vec<f64>),
}

impl X0Law {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, GaussianError> {
        match self {
            X0Law::PointMass(x) => Ok(*x),
            X0Law::Normal { mean, variance } => {
                let n = Normal::new(*mean, variance.sqrt())
                    .map_err(|e| GaussianError::Invalid(format!("X0 normal law: {e}")))?;
                Ok(n.sample(rng))
            }
            X0Law::Empirical(v) => {
                if v.is_empty() {
                    return Err(GaussianError::Invalid("empirical X0 law has no values".into()));
                }
                Ok(v[rng.random_range(0..v.len())])
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            X0Law::PointMass(_) => 0.0,
            X0Law::Normal { variance, .. } => *variance,
            X0Law::Empirical(v) => {
                let n = v.len() as f64;
                let m = v.iter().sum::<f64>() / n;
                v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
            }
        }
    }
}

/// Limit of the scaled arrival fluctuations.
#[derive(Debug, Clone, PartialEq)]
pub enum YSpec {
    Zero,
    /// Brownian motion with the given variance rate.
    Brownian { rate: f64 },
    /// A fixed path, read at the grid nodes.
    Path(GridPath),
}

impl YSpec {
    /// Covariance function of `Y`, when it is Gaussian with a known one.
    pub fn covariance(&self) -> Option<impl Fn(f64, f64) -> f64 + Sync + use<>> {
        let rate = match self {
            YSpec::Zero => 0.0,
            YSpec::Brownian { rate } => *rate,
            YSpec::Path(_) => return None,
        };
        Some(move |s: f64, t: f64| if s < 0.0 || t < 0.0 { 0.0 } else { rate * s.min(t) })
    }

    fn sample<R: Rng + ?Sized>(&self, step: f64, nodes: usize, rng: &mut R) -> Vec<f64> {
        match self {
            YSpec::Zero => vec![0.0; nodes],
            YSpec::Brownian { rate } => brownian_path(step, nodes, *rate, rng),
            YSpec::Path(p) => (0..nodes).map(|k| p.eval(k as f64 * step)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZSource {
    Zero,
    /// Sampled from the covariance built from `F` and `a`.
    Covariance,
}

/// Inputs of the limit equations. For the infinite-server equation `a`
/// is the arrival fluid `e` and `q` is not used.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitInputs {
    pub x0: X0Law,
    pub q0: f64,
    pub f: MixedCdf,
    pub ftilde: MixedCdf,
    pub y: YSpec,
    pub z: ZSource,
    pub q: GridPath,
    pub a: GridPath,
}

/// One draw of the limit process and its ingredients on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample {
    pub x0: f64,
    /// `W⁰(F̃(t))`, before the `√(q₀ ∧ 1)` factor.
    pub s: GridPath,
    pub y: GridPath,
    pub z: GridPath,
    /// `H(t) = Y(t) − ∫_{[0,t]} Y(t − s) dF(s)`.
    pub h: GridPath,
    pub x: GridPath,
    pub residual: f64,
}

fn initial_split(x0: f64, r: Regime) -> (f64, f64) {
    // coefficients of 1 − F and 1 − F̃
    match r {
        Regime::Above => (x0, 0.0),
        Regime::At => (x0.max(0.0), x0.min(0.0)),
        Regime::Below => (0.0, x0),
    }
}

fn grid_nodes(step: f64, horizon: f64) -> Result<usize, GaussianError> {
    if !(step > 0.0 && horizon >= 0.0 && horizon.is_finite()) {
        return Err(GaussianError::Invalid(format!("grid step {step} / horizon {horizon} invalid")));
    }
    Ok(crate::measures::node_count(step, horizon))
}

/// Prepared sampler for the many-server limit equation
/// `X(t) = (X₀1{q₀>1} + X₀⁺1{q₀=1})(1 − F(t)) + (X₀1{q₀<1} + X₀∧0 1{q₀=1})(1 − F̃(t))
///  + √(q₀∧1) S(t) + H(t) + Z(t) + ∫(X(t−s)1{q(t−s)>1} + X(t−s)⁺1{q(t−s)=1}) dF(s)`.
/// The `Z` covariance is factored once; each sample then costs one solve.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    inputs: LimitInputs,
    step: f64,
    times: Vec<f64>,
    tol: f64,
    kernel: ConvolutionKernel,
    z: Option<GaussianSampler>,
    surv: Vec<f64>,
    surv_tilde: Vec<f64>,
    q0_regime: Regime,
}

impl LimitSampler {
    pub fn new(inputs: LimitInputs, grid_step: f64, horizon: f64, tol: f64) -> Result<Self, GaussianError> {
        let nodes = grid_nodes(grid_step, horizon)?;
        let times: Vec<f64> = (0..nodes).map(|k| k as f64 * grid_step).collect();
        if inputs.q.horizon() < horizon - TIME_EPS {
            return Err(GaussianError::Invalid("fluid path q does not cover the horizon".into()));
        }
        let kernel = ConvolutionKernel::new(&inputs.f, grid_step, nodes, Interp::Linear)?;
        let z = match inputs.z {
            ZSource::Zero => None,
            ZSource::Covariance => Some(GaussianSampler::new(&z_covariance(&inputs.f, &inputs.a, &times)?)?),
        };
        let surv = times.iter().map(|&t| Ok(1.0 - inputs.f.eval_exact(t)?)).collect::<Result<_, GaussianError>>()?;
        let surv_tilde =
            times.iter().map(|&t| Ok(1.0 - inputs.ftilde.eval_exact(t)?)).collect::<Result<_, GaussianError>>()?;
        let q0_regime = regime(inputs.q0, 1.0, LEVEL_TOL);
        Ok(LimitSampler { inputs, step: grid_step, times, tol, kernel, z, surv, surv_tilde, q0_regime })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Covariance of `Z` on the grid (zero when `Z` is switched off).
    pub fn z_covariance(&self) -> Result<DMatrix<f64>, GaussianError> {
        match self.inputs.z {
            ZSource::Zero => Ok(DMatrix::zeros(self.times.len(), self.times.len())),
            ZSource::Covariance => z_covariance(&self.inputs.f, &self.inputs.a, &self.times),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LimitSample, GaussianError> {
        let inp = &self.inputs;
        let n = self.times.len();
        let path = |v: Vec<f64>| GridPath::new(self.step, v, Interp::Linear);

        let x0 = inp.x0.sample(rng)?;
        let s = sample_s(&inp.ftilde, &self.times, rng)?;
        let y = inp.y.sample(self.step, n, rng);
        let z = match &self.z {
            Some(zs) => zs.sample(rng),
            None => vec![0.0; n],
        };
        let h: Vec<f64> = (0..n).map(|k| y[k] - self.kernel.apply_at(&y, k)).collect();

        let (c_f, c_ft) = initial_split(x0, self.q0_regime);
        let root = inp.q0.min(1.0).sqrt();
        let forcing: Vec<f64> = (0..n)
            .map(|k| c_f * self.surv[k] + c_ft * self.surv_tilde[k] + root * s[k] + h[k] + z[k])
            .collect();
        let problem = VolterraProblem {
            forcing: path(forcing)?,
            kernel: inp.f.clone(),
            f: Nonlinearity::RegimeIndicator { reference: inp.q.clone(), level: 1.0, level_tol: LEVEL_TOL },
        };
        let sol = solve_volterra(&problem, self.step, self.tol, DEFAULT_MAX_ITER)?;
        if sol.residual > self.tol {
            return Err(FluidError::Residual { residual: sol.residual, tol: self.tol }.into());
        }
        Ok(LimitSample {
            x0,
            s: path(s)?,
            y: path(y)?,
            z: path(z)?,
            h: path(h)?,
            x: sol.y,
            residual: sol.residual,
        })
    }
}

/// One draw of the many-server limit process on the grid `0, h, …, T`.
pub fn solve_limit_x<R: Rng + ?Sized>(
    inputs: &LimitInputs,
    grid_step: f64,
    horizon: f64,
    tol: f64,
    rng: &mut R,
) -> Result<LimitSample, GaussianError> {
    LimitSampler::new(inputs.clone(), grid_step, horizon, tol)?.sample(rng)
}

/// Draw of the infinite-server limit at selected times.
#[derive(Debug, Clone, PartialEq)]
pub struct InfServerSample {
    pub times: Vec<f64>,
    pub x0: f64,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
}

/// Prepared sampler for the infinite-server limit
/// `X̄(t) = (1 − F̃(t))X₀ + √q₀ S(t) + Y(t) − ∫Y(t−s)dF(s) + Z̄(t)`, where the
/// covariance of `Z̄` is built from the arrival fluid `e` (passed as `a`).
/// `Y` lives on the full grid; the other components only at `times`.
#[derive(Debug, Clone)]
pub struct InfServerSampler {
    inputs: LimitInputs,
    step: f64,
    nodes: usize,
    times: Vec<f64>,
    index: Vec<usize>,
    kernel: ConvolutionKernel,
    z: Option<GaussianSampler>,
}

impl InfServerSampler {
    pub fn new(inputs: LimitInputs, grid_step: f64, times: &[f64]) -> Result<Self, GaussianError> {
        let horizon = times.iter().copied().fold(0.0, f64::max);
        let nodes = grid_nodes(grid_step, horizon)?;
        let index = times
            .iter()
            .map(|&t| {
                let k = (t / grid_step).round();
                if (k * grid_step - t).abs() > TIME_EPS || t < 0.0 {
                    Err(GaussianError::Invalid(format!("time {t} is not a grid node")))
                } else {
                    Ok(k as usize)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let kernel = ConvolutionKernel::new(&inputs.f, grid_step, nodes, Interp::Linear)?;
        let z = match inputs.z {
            ZSource::Zero => None,
            ZSource::Covariance => Some(GaussianSampler::new(&z_covariance(&inputs.f, &inputs.a, times)?)?),
        };
        Ok(InfServerSampler { inputs, step: grid_step, nodes, times: times.to_vec(), index, kernel, z })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<InfServerSample, GaussianError> {
        let inp = &self.inputs;
        let x0 = inp.x0.sample(rng)?;
        let s = sample_s(&inp.ftilde, &self.times, rng)?;
        let yfull = inp.y.sample(self.step, self.nodes, rng);
        let z = match &self.z {
            Some(zs) => zs.sample(rng),
            None => vec![0.0; self.times.len()],
        };
        let y: Vec<f64> = self.index.iter().map(|&k| yfull[k]).collect();
        let h: Vec<f64> = self.index.iter().map(|&k| yfull[k] - self.kernel.apply_at(&yfull, k)).collect();
        let root = inp.q0.sqrt();
        let x = (0..self.times.len())
            .map(|i| {
                let t = self.times[i];
                Ok((1.0 - inp.ftilde.eval_exact(t)?) * x0 + root * s[i] + h[i] + z[i])
            })
            .collect::<Result<Vec<f64>, GaussianError>>()?;
        Ok(InfServerSample { times: self.times.clone(), x0, s, y, h, z, x })
    }
}

pub fn solve_limit_x_infserver<R: Rng + ?Sized>(
    inputs: &LimitInputs,
    grid_step: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<InfServerSample, GaussianError> {
    InfServerSampler::new(inputs.clone(), grid_step, times)?.sample(rng)
}
