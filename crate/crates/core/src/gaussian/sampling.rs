use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::measures::{GridPath, Interp, MixedCdf};

use super::{GaussianError, PSD_JITTER};

/// Square-root factor of a covariance matrix, reusable across samples.
///
/// Coordinates with zero variance are held at 0 and left out of the
/// factorisation. If the rest is not numerically positive definite, a
/// diagonal jitter of `PSD_JITTER · trace` is added once before giving up.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    active: Vec<usize>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self, GaussianError> {
        if !cov.is_square() {
            return Err(GaussianError::Invalid("covariance matrix must be square".into()));
        }
        let dim = cov.nrows();
        if (0..dim).any(|i| (0..i).any(|j| cov[(i, j)] != cov[(j, i)])) {
            return Err(GaussianError::Invalid("covariance matrix must be symmetric".into()));
        }
        let trace = cov.trace();
        let active: Vec<usize> = (0..dim).filter(|&i| cov[(i, i)] > 0.0).collect();
        if (0..dim).any(|i| cov[(i, i)] < -PSD_JITTER * trace.abs()) {
            return Err(GaussianError::NotPsd { jitter: 0.0 });
        }
        let m = active.len();
        let sub = DMatrix::from_fn(m, m, |i, j| cov[(active[i], active[j])]);
        if let Some(c) = Cholesky::new(sub.clone()) {
            return Ok(GaussianSampler { dim, active, factor: c.l(), jitter: 0.0 });
        }
        let jitter = PSD_JITTER * trace;
        let bumped = sub + DMatrix::identity(m, m) * jitter;
        match Cholesky::new(bumped) {
            Some(c) => Ok(GaussianSampler { dim, active, factor: c.l(), jitter }),
            None => Err(GaussianError::NotPsd { jitter }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal jitter that was needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.active.len();
        let xi = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = &self.factor * xi;
        let mut out = vec![0.0; self.dim];
        for (k, &i) in self.active.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }
}

/// One zero-mean Gaussian path with covariance `cov` at the nodes `k·step`,
/// linearly interpolated.
pub fn sample_gaussian_path<R: Rng + ?Sized>(
    cov: &DMatrix<f64>,
    step: f64,
    rng: &mut R,
) -> Result<GridPath, GaussianError> {
    let s = GaussianSampler::new(cov)?;
    Ok(GridPath::new(step, s.sample(rng), Interp::Linear)?)
}

/// Brownian motion with variance rate `rate` at `nodes` grid points
/// `0, step, 2·step, …`, from independent increments.
pub fn brownian_path<R: Rng + ?Sized>(step: f64, nodes: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let sd = (rate * step).sqrt();
    let mut out = Vec::with_capacity(nodes);
    let mut w = 0.0;
    for k in 0..nodes {
        if k > 0 {
            w += sd * rng.sample::<f64, _>(StandardNormal);
        }
        out.push(w);
    }
    out
}

/// Brownian bridge on `[0, 1]` at the nondecreasing points `xs`, as
/// `W(x) − x W(1)` for a Brownian motion `W`.
pub fn brownian_bridge_at<R: Rng + ?Sized>(xs: &[f64], rng: &mut R) -> Result<Vec<f64>, GaussianError> {
    if xs.iter().any(|x| !(0.0..=1.0).contains(x)) || xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(GaussianError::Invalid("bridge points must be sorted in [0, 1]".into()));
    }
    let mut w = Vec::with_capacity(xs.len());
    let (mut prev, mut acc) = (0.0, 0.0);
    for &x in xs {
        acc += (x - prev).sqrt() * rng.sample::<f64, _>(StandardNormal);
        prev = x;
        w.push(acc);
    }
    let w1 = acc + (1.0 - prev).sqrt() * rng.sample::<f64, _>(StandardNormal);
    Ok(xs.iter().zip(w).map(|(&x, v)| v - x * w1).collect())
}

/// `S(t) = W⁰(F̃(t))` at the given nondecreasing times.
pub fn sample_s<R: Rng + ?Sized>(ftilde: &MixedCdf, times: &[f64], rng: &mut R) -> Result<Vec<f64>, GaussianError> {
    let xs: Vec<f64> = times.iter().map(|&t| ftilde.eval(t).clamp(0.0, 1.0)).collect();
    let mut s = brownian_bridge_at(&xs, rng)?;
    // pin the bridge ends exactly
    for (v, &x) in s.iter_mut().zip(&xs) {
        if x == 0.0 || x == 1.0 {
            *v = 0.0;
        }
    }
    Ok(s)
}
