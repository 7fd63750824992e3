use crate::measures::{convolve_stieltjes, ConvolutionKernel, GridPath, Interp, MeasureError, MixedCdf};

use super::FluidError;

/// Mass of the kernel allowed on one solver block.
const BLOCK_MASS: f64 = 0.9;

/// The nonlinearities `f(y, t)` the solver accepts. Each satisfies
/// `|f(y, t)| ≤ |y|` and is 1-Lipschitz in `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    Identity,
    /// `y` where `z(t) > c`, `y⁺` where `z(t) = c`, `0` where `z(t) < c`;
    /// `z(t) = c` is decided with tolerance `level_tol`.
    RegimeIndicator { reference: GridPath, level: f64, level_tol: f64 },
    /// `(y + m(t))⁺ − m(t)⁺`.
    ShiftedPositivePart { shift: GridPath },
}

/// How a reference value compares with a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Below,
    At,
    Above,
}

pub fn regime(value: f64, level: f64, level_tol: f64) -> Regime {
    if value > level + level_tol {
        Regime::Above
    } else if value < level - level_tol {
        Regime::Below
    } else {
        Regime::At
    }
}

impl Nonlinearity {
    /// Per-node form of `f`, with the reference path sampled once.
    fn at_nodes(&self, step: f64, nodes: usize) -> NodeMap {
        let t = |k: usize| k as f64 * step;
        match self {
            Nonlinearity::Identity => NodeMap::Identity,
            Nonlinearity::RegimeIndicator { reference, level, level_tol } => {
                NodeMap::Regime((0..nodes).map(|k| regime(reference.eval(t(k)), *level, *level_tol)).collect())
            }
            Nonlinearity::ShiftedPositivePart { shift } => {
                NodeMap::Shift((0..nodes).map(|k| shift.eval(t(k))).collect())
            }
        }
    }

    pub fn apply(&self, y: f64, t: f64) -> f64 {
        match self {
            Nonlinearity::Identity => y,
            Nonlinearity::RegimeIndicator { reference, level, level_tol } => {
                apply_regime(regime(reference.eval(t), *level, *level_tol), y)
            }
            Nonlinearity::ShiftedPositivePart { shift } => apply_shift(shift.eval(t), y),
        }
    }
}

fn apply_regime(r: Regime, y: f64) -> f64 {
    match r {
        Regime::Above => y,
        Regime::At => y.max(0.0),
        Regime::Below => 0.0,
    }
}

fn apply_shift(m: f64, y: f64) -> f64 {
    (y + m).max(0.0) - m.max(0.0)
}

enum NodeMap {
    Identity,
    Regime(Vec<Regime>),
    Shift(Vec<f64>),
}

impl NodeMap {
    fn apply(&self, k: usize, y: f64) -> f64 {
        match self {
            NodeMap::Identity => y,
            NodeMap::Regime(r) => apply_regime(r[k], y),
            NodeMap::Shift(m) => apply_shift(m[k], y),
        }
    }
}

/// `y(t) = x(t) + ∫_{[0,t]} f(y(t − s), t − s) dB(s)` on the grid of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraProblem {
    pub forcing: GridPath,
    pub kernel: MixedCdf,
    pub f: Nonlinearity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub y: GridPath,
    /// Largest number of successive approximations used on one block.
    pub iterations: usize,
    /// Fixed-point residual from the independent quadrature route.
    pub residual: f64,
    /// Block length `t₀`: the largest grid multiple with `B(t₀) ≤ 0.9`
    /// (one grid step when even that exceeds 0.9).
    pub t0: f64,
}

/// Solves the equation by successive approximations, block by block.
///
/// The grid is cut into blocks of length `t₀` with `B(t₀) ≤ 0.9`. On each
/// block the contribution of earlier nodes is fixed and the remaining map
/// is a sup-norm contraction; iteration starts from the zero function and
/// stops once a sweep moves no node by more than `tol / 10`. Sweeps run
/// forwards in time and use each new node value at once, so a causal
/// kernel with little mass near 0 settles in a handful of sweeps. The
/// returned residual is recomputed with plain Stieltjes quadrature.
pub fn solve_volterra(
    p: &VolterraProblem,
    grid_step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<VolterraSolution, FluidError> {
    if !(tol > 0.0) {
        return Err(FluidError::Invalid(format!("tolerance {tol} must be positive")));
    }
    if p.kernel.eval(0.0) >= 1.0 {
        return Err(FluidError::Invalid("kernel has B(0) = 1".into()));
    }
    let forcing = if (p.forcing.step() - grid_step).abs() <= 1e-15 {
        p.forcing.clone()
    } else {
        p.forcing.refine(grid_step)?
    };
    let interp = forcing.interp();
    let n = forcing.len();
    let kern = ConvolutionKernel::new(&p.kernel, grid_step, n, interp)?;
    let map = p.f.at_nodes(grid_step, n);
    let x = forcing.values();

    let mut block = 0usize;
    while block + 1 < n && p.kernel.eval((block + 1) as f64 * grid_step) <= BLOCK_MASS {
        block += 1;
    }
    let block = block.max(1);

    let mut y = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut fixed = Vec::with_capacity(block);
    let mut worst_iters = 0;
    let mut lo = 0;
    while lo < n {
        let hi = (lo + block).min(n);
        fixed.clear();
        fixed.extend((lo..hi).map(|k| x[k] + kern.apply_known(&g, k, lo)));
        for k in lo..hi {
            y[k] = 0.0;
            g[k] = 0.0;
        }
        let mut iters = 0;
        loop {
            iters += 1;
            let mut change: f64 = 0.0;
            for k in lo..hi {
                let v = fixed[k - lo] + kern.apply_unknown(&g, k, lo);
                change = change.max((v - y[k]).abs());
                y[k] = v;
                g[k] = map.apply(k, v);
            }
            if change <= 0.1 * tol {
                break;
            }
            if iters >= max_iter {
                return Err(FluidError::NotConverged { iterations: iters, residual: change });
            }
        }
        worst_iters = worst_iters.max(iters);
        lo = hi;
    }

    let y = GridPath::new(grid_step, y, interp)?;
    let residual = fixed_point_residual(p, &y)?;
    Ok(VolterraSolution { y, iterations: worst_iters, residual, t0: block as f64 * grid_step })
}

/// `sup_k |y(t_k) − x(t_k) − ∫_{[0,t_k]} f(y(t_k − s), t_k − s) dB(s)|`,
/// computed by direct quadrature rather than the solver's kernel.
pub fn fixed_point_residual(p: &VolterraProblem, y: &GridPath) -> Result<f64, MeasureError> {
    let step = y.step();
    let g = GridPath::new(
        step,
        (0..y.len()).map(|k| p.f.apply(y.values()[k], k as f64 * step)).collect(),
        y.interp(),
    )?;
    let mut worst: f64 = 0.0;
    for k in 0..y.len() {
        let t = k as f64 * step;
        let rhs = p.forcing.eval(t) + convolve_stieltjes(&g, &p.kernel, t)?;
        worst = worst.max((y.values()[k] - rhs).abs());
    }
    Ok(worst)
}

/// `ρ(T) = Σ_{i=1}^{⌊T/t₀⌋+1} (1 − B(t₀))^{−i}`, the growth bound of the
/// successive-approximation argument.
pub fn bound_rho(b: &MixedCdf, horizon: f64, t0: f64) -> Result<f64, FluidError> {
    if !(t0 > 0.0) {
        return Err(FluidError::Invalid(format!("t0 = {t0} must be positive")));
    }
    let bt = b.eval(t0);
    if bt >= 1.0 {
        return Err(FluidError::Invalid(format!("B(t0) = {bt} is not below 1; choose a smaller t0")));
    }
    let terms = (horizon / t0 + 1e-12).floor() as i32 + 1;
    let r = 1.0 / (1.0 - bt);
    Ok((1..=terms).map(|i| r.powi(i)).sum())
}

/// Node values of a path built from a function, in linear mode.
pub(crate) fn linear_path(step: f64, horizon: f64, f: impl Fn(f64) -> f64) -> Result<GridPath, MeasureError> {
    GridPath::from_fn(step, horizon, Interp::Linear, f)
}
