use super::{divides, split_index, MeasureError, TIME_EPS};

/// How a [`GridPath`] is evaluated between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    /// Càdlàg step function: the value at node `k` holds on `[kh, (k+1)h)`.
    #[default]
    RightConstant,
    /// Linear interpolation between consecutive nodes.
    Linear,
}

/// A real path sampled on the uniform grid `0, h, 2h, …, (N−1)h`.
///
/// Evaluation is total: `g(t) = 0` for `t < 0` and `g` is held at its last
/// value beyond the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    step: f64,
    values: Vec<f64>,
    interp: Interp,
}

impl GridPath {
    pub fn new(step: f64, values: Vec<f64>, interp: Interp) -> Result<Self, MeasureError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(MeasureError::InvalidPath(format!("grid step {step} must be positive")));
        }
        if values.is_empty() {
            return Err(MeasureError::InvalidPath("a path needs at least one value".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(MeasureError::InvalidPath(format!("non-finite value at node {k}")));
        }
        Ok(GridPath { step, values, interp })
    }

    /// Samples `f` at the nodes of `[0, horizon]`.
    pub fn from_fn(step: f64, horizon: f64, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self, MeasureError> {
        let n = node_count(step, horizon);
        Self::new(step, (0..n).map(|k| f(k as f64 * step)).collect(), interp)
    }

    pub fn constant(step: f64, horizon: f64, c: f64) -> Result<Self, MeasureError> {
        Self::from_fn(step, horizon, Interp::RightConstant, |_| c)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < -TIME_EPS {
            return 0.0;
        }
        let (k, th) = split_index(t.max(0.0), self.step);
        let last = self.values.len() - 1;
        if k >= last {
            return self.values[last];
        }
        match self.interp {
            Interp::RightConstant => self.values[k],
            Interp::Linear => self.values[k] + th * (self.values[k + 1] - self.values[k]),
        }
    }

    /// Left limit `g(t−)`; equals `g(t)` except at nodes of a step path.
    pub fn eval_left(&self, t: f64) -> f64 {
        if t <= TIME_EPS {
            return 0.0;
        }
        match self.interp {
            Interp::Linear => self.eval(t),
            Interp::RightConstant => {
                let (k, th) = split_index(t, self.step);
                if th == 0.0 && k <= self.values.len() - 1 {
                    self.values[k - 1]
                } else {
                    self.eval(t)
                }
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridPath { step: self.step, values: self.values.iter().map(|&v| f(v)).collect(), interp: self.interp }
    }

    /// Pointwise combination of two paths on the same grid.
    pub fn zip_with(&self, other: &GridPath, f: impl Fn(f64, f64) -> f64) -> Result<Self, MeasureError> {
        if (self.step - other.step).abs() > TIME_EPS || self.len() != other.len() {
            return Err(MeasureError::GridMismatch(format!(
                "paths on grids ({}, {}) and ({}, {})",
                self.step,
                self.len(),
                other.step,
                other.len()
            )));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridPath { step: self.step, values, interp: self.interp })
    }

    /// Re-expresses the path on a finer grid whose step divides this one.
    pub fn refine(&self, step: f64) -> Result<Self, MeasureError> {
        if !divides(step, self.step) {
            return Err(MeasureError::GridMismatch(format!("step {step} does not divide {}", self.step)));
        }
        Self::from_fn(step, self.horizon(), self.interp, |t| self.eval(t))
    }

    pub fn with_interp(mut self, interp: Interp) -> Self {
        self.interp = interp;
        self
    }

    pub fn sup_norm(&self, horizon: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .take_while(|(k, _)| self.time(*k) <= horizon + TIME_EPS)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn node_count(step: f64, horizon: f64) -> usize {
    (horizon / step + 1e-9).floor() as usize + 1
}

/// `sup_{t ∈ [0, T]} |g(t) − h(t)|`, taken over the union of both grids'
/// nodes. For step and piecewise-linear paths the supremum is attained
/// there; crossings strictly between nodes are not resolved further.
pub fn sup_distance(g: &GridPath, h: &GridPath, horizon: f64) -> f64 {
    let mut times: Vec<f64> = Vec::with_capacity(g.len() + h.len());
    for p in [g, h] {
        let n = node_count(p.step, horizon).min(p.len());
        times.extend((0..n).map(|k| k as f64 * p.step));
    }
    if horizon > g.horizon().max(h.horizon()) {
        times.push(horizon);
    }
    times
        .into_iter()
        .map(|t| (g.eval(t) - h.eval(t)).abs())
        .fold(0.0, f64::max)
}
