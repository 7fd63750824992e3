use nalgebra::DMatrix;
use rand::Rng;

use crate::measures::{GridPath, MixedCdf, TIME_EPS};

use super::covariance::check_partition;
use super::sampling::brownian_bridge_at;
use super::GaussianError;

/// Values of a Kiefer process `K(t, x)`, with covariance
/// `(t ∧ s)(x ∧ y − xy)`, on a product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KieferGrid {
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// `values[(i, j)] = K(t_grid[i], x_grid[j])`.
    pub values: DMatrix<f64>,
}

fn find(grid: &[f64], v: f64) -> Option<usize> {
    let tol = 1e-12 * v.abs().max(1.0);
    let i = grid.partition_point(|&g| g < v - tol);
    (i < grid.len() && (grid[i] - v).abs() <= tol).then_some(i)
}

impl KieferGrid {
    /// `K(t, x)`; zero on the boundary `t = 0`, `x ∈ {0, 1}` whether or not
    /// it is on the grid.
    pub fn value(&self, t: f64, x: f64) -> Result<f64, GaussianError> {
        if t <= 0.0 || x <= 0.0 || x >= 1.0 {
            return Ok(0.0);
        }
        match (find(&self.t_grid, t), find(&self.x_grid, x)) {
            (Some(i), Some(j)) => Ok(self.values[(i, j)]),
            _ => Err(GaussianError::OffGrid { t, x }),
        }
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    v
}

/// Sums over `t`-increments of independent Brownian bridges on `x_grid`,
/// each scaled by `√Δt`; the covariance is exact at the grid points.
pub fn sample_kiefer<R: Rng + ?Sized>(
    t_grid: &[f64],
    x_grid: &[f64],
    rng: &mut R,
) -> Result<KieferGrid, GaussianError> {
    if t_grid.iter().any(|&t| !(t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(GaussianError::Invalid("Kiefer time grid must be sorted and nonnegative".into()));
    }
    let mut values = DMatrix::zeros(t_grid.len(), x_grid.len());
    let mut prev = 0.0;
    for (i, &t) in t_grid.iter().enumerate() {
        let b = brownian_bridge_at(x_grid, rng)?;
        let sd = (t - prev).sqrt();
        for (j, &x) in x_grid.iter().enumerate() {
            let base = if i == 0 { 0.0 } else { values[(i - 1, j)] };
            values[(i, j)] = if x <= 0.0 || x >= 1.0 { 0.0 } else { base + sd * b[j] };
        }
        prev = t;
    }
    Ok(KieferGrid { t_grid: t_grid.to_vec(), x_grid: x_grid.to_vec(), values })
}

/// The `(t, x)` points at which [`z_via_kiefer`] reads `K(a(·), F(·))`
/// for this partition and set of times.
pub fn kiefer_grid_for(
    a: &GridPath,
    f: &MixedCdf,
    partition: &[f64],
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), GaussianError> {
    check_partition(partition, times.iter().copied().fold(0.0, f64::max))?;
    let mut ts = vec![a.eval(0.0)];
    let mut xs = Vec::new();
    for &t in times {
        xs.push(f.eval(t));
        for w in partition.windows(2) {
            if w[0] > t + TIME_EPS {
                break;
            }
            ts.push(a.eval(w[0]));
            ts.push(a.eval(w[1]));
            xs.push(f.eval(t - w[0]));
        }
    }
    Ok((sorted_unique(ts), sorted_unique(xs)))
}

/// `Z_l(t) = −[Σᵢ (V(sᵢ, t − sᵢ₋₁) − V(sᵢ₋₁, t − sᵢ₋₁)) 1{sᵢ₋₁ ≤ t} + V(0, t)]`
/// with `V(s, x) = K(a(s), F(x))`.
pub fn z_via_kiefer(
    k: &KieferGrid,
    a: &GridPath,
    f: &MixedCdf,
    partition: &[f64],
    times: &[f64],
) -> Result<Vec<f64>, GaussianError> {
    check_partition(partition, times.iter().copied().fold(0.0, f64::max))?;
    let v = |s: f64, x: f64| k.value(a.eval(s), f.eval(x));
    times
        .iter()
        .map(|&t| {
            let mut acc = v(0.0, t)?;
            for w in partition.windows(2) {
                if w[0] > t + TIME_EPS {
                    break;
                }
                acc += v(w[1], t - w[0])? - v(w[0], t - w[0])?;
            }
            Ok(-acc)
        })
        .collect()
}
