use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::measures::{convolve_stieltjes, f_prime, stieltjes_integral_fn, GridPath, Interp, MixedCdf, TIME_EPS};

use super::GaussianError;

fn check_times(times: &[f64]) -> Result<(), GaussianError> {
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(GaussianError::Invalid("time grid must be nonnegative and sorted".into()));
    }
    Ok(())
}

/// Fills a symmetric matrix from its upper triangle, entries in parallel.
fn symmetric(m: usize, entry: impl Fn(usize, usize) -> Result<f64, GaussianError> + Sync) -> Result<DMatrix<f64>, GaussianError> {
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| entry(i, j))
        .collect::<Result<Vec<f64>, GaussianError>>()?;
    let mut out = DMatrix::zeros(m, m);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        out[(i, j)] = v;
        out[(j, i)] = v;
    }
    Ok(out)
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // 1 / (2√3)

/// `∫_{[0,lo]} F(lo − u)(1 − F(hi − u)) da(u)`, `lo ≤ hi`.
///
/// On each cell of a linear `a` the integrand is cut at the points where
/// either argument crosses a break of `F`; between cuts it is a product of
/// two linear functions, which two-point Gauss–Legendre integrates exactly.
fn z_entry(f: &MixedCdf, a: &GridPath, lo: f64, hi: f64) -> f64 {
    let g = |u: f64| f.eval(lo - u) * (1.0 - f.eval(hi - u));
    let av = a.values();
    let h = a.step();
    // the atom of a at 0 under the [0, ·] convention
    let mut acc = av[0] * g(0.0);
    match a.interp() {
        Interp::RightConstant => {
            for k in 1..av.len() {
                let u = k as f64 * h;
                if u > lo + TIME_EPS {
                    break;
                }
                acc += (av[k] - av[k - 1]) * g(u.min(lo));
            }
        }
        Interp::Linear => {
            let mut cuts = Vec::new();
            for k in 0..av.len() - 1 {
                let u0 = k as f64 * h;
                if u0 >= lo - TIME_EPS {
                    break;
                }
                let u1 = ((k + 1) as f64 * h).min(lo);
                let slope = (av[k + 1] - av[k]) / h;
                if slope == 0.0 {
                    continue;
                }
                cuts.clear();
                cuts.push(u0);
                cuts.extend(f.breaks_between(lo - u1, lo - u0).iter().map(|b| lo - b));
                cuts.extend(f.breaks_between(hi - u1, hi - u0).iter().map(|b| hi - b));
                cuts.push(u1);
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    let len = w[1] - w[0];
                    if len <= 0.0 {
                        continue;
                    }
                    let mid = 0.5 * (w[0] + w[1]);
                    let d = GAUSS_OFFSET * len;
                    acc += slope * 0.5 * len * (g(mid - d) + g(mid + d));
                }
            }
        }
    }
    acc
}

/// Covariance of `Z` on the time grid:
/// `E Z(s)Z(t) = ∫_{[0, s∧t]} F(s∧t − u)(1 − F(s∨t − u)) da(u)`,
/// including the atom `a(0)` at the origin.
pub fn z_covariance(f: &MixedCdf, a: &GridPath, times: &[f64]) -> Result<DMatrix<f64>, GaussianError> {
    check_times(times)?;
    if let Some(&last) = times.last() {
        if last > a.horizon() + TIME_EPS {
            return Err(GaussianError::Invalid(format!("time {last} beyond the horizon {} of a", a.horizon())));
        }
        f.check_horizon(last)?;
    }
    if a.values().windows(2).any(|w| w[1] < w[0] - 1e-12) || a.values().first().is_some_and(|&v| v < 0.0) {
        return Err(GaussianError::Invalid("a must be nonnegative and nondecreasing".into()));
    }
    symmetric(times.len(), |i, j| Ok(z_entry(f, a, times[i], times[j])))
}

/// Exact covariance of the finite-sum approximation `Z_l` built on the
/// partition `0 = s₀ < s₁ < …`:
/// `Σᵢ (a(sᵢ) − a(sᵢ₋₁)) F(t∧s − sᵢ₋₁)(1 − F(t∨s − sᵢ₋₁)) 1{sᵢ₋₁ ≤ t∧s} + a(0)F(t∧s)(1 − F(t∨s))`.
pub fn z_l_covariance(
    f: &MixedCdf,
    a: &GridPath,
    partition: &[f64],
    times: &[f64],
) -> Result<DMatrix<f64>, GaussianError> {
    check_times(times)?;
    check_partition(partition, times.last().copied().unwrap_or(0.0))?;
    symmetric(times.len(), |i, j| {
        let (lo, hi) = (times[i], times[j]);
        let mut acc = a.eval(0.0) * f.eval(lo) * (1.0 - f.eval(hi));
        for w in partition.windows(2) {
            if w[0] > lo + TIME_EPS {
                break;
            }
            acc += (a.eval(w[1]) - a.eval(w[0])) * f.eval(lo - w[0]) * (1.0 - f.eval(hi - w[0]));
        }
        Ok(acc)
    })
}

pub(crate) fn check_partition(partition: &[f64], cover: f64) -> Result<(), GaussianError> {
    if partition.first() != Some(&0.0) || partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GaussianError::Invalid("partition must start at 0 and increase strictly".into()));
    }
    if *partition.last().unwrap() <= cover {
        return Err(GaussianError::Invalid(format!("partition must extend beyond t = {cover}")));
    }
    Ok(())
}

/// Covariance of `H(t) = Y(t) − ∫_{[0,t]} Y(t − s) dF(s)` from the
/// covariance of `Y`, by bilinearity:
/// `c(s,t) − ∫c(s, t−u)dF(u) − ∫c(s−v, t)dF(v) + ∬c(s−v, t−u)dF(u)dF(v)`.
/// Each integral is a plain Stieltjes sum; this is a brute-force oracle.
pub fn h_covariance(
    cov_y: impl Fn(f64, f64) -> f64 + Sync,
    f: &MixedCdf,
    times: &[f64],
) -> Result<DMatrix<f64>, GaussianError> {
    check_times(times)?;
    if let Some(&last) = times.last() {
        f.check_horizon(last)?;
    }
    symmetric(times.len(), |i, j| {
        let (s, t) = (times[i], times[j]);
        let c = &cov_y;
        let one = stieltjes_integral_fn(|u| c(s, t - u), f, t)?;
        let two = stieltjes_integral_fn(|v| c(s - v, t), f, s)?;
        let both = stieltjes_integral_fn(|v| stieltjes_integral_fn(|u| c(s - v, t - u), f, t).unwrap_or(0.0), f, s)?;
        Ok(c(s, t) - one - two + both)
    })
}

/// `C(t) = ∫_{[0,t]} a(t − s) dF′(s)` at the given times.
pub fn c_diagnostic(a: &GridPath, f: &MixedCdf, times: &[f64]) -> Result<Vec<f64>, GaussianError> {
    check_times(times)?;
    let fp = f_prime(f);
    times.iter().map(|&t| Ok(convolve_stieltjes(a, &fp, t)?)).collect()
}
