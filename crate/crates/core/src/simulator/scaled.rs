use crate::measures::{GridPath, Interp, MeasureError, MixedCdf};

use super::SimTrace;

/// `(Qⁿ(t)/n, √n (Qⁿ(t)/n − q(t)))` at the grid nodes of `q`.
pub fn scaled_paths(trace: &SimTrace, n: f64, q: &GridPath) -> Result<(GridPath, GridPath), MeasureError> {
    if q.horizon() > trace.horizon + 1e-9 {
        return Err(MeasureError::GridMismatch(format!(
            "fluid path horizon {} exceeds trace horizon {}",
            q.horizon(),
            trace.horizon
        )));
    }
    let fluid: Vec<f64> = (0..q.len()).map(|k| trace.q.eval(q.time(k)) as f64 / n).collect();
    let diff: Vec<f64> = fluid.iter().zip(q.values()).map(|(f, qv)| n.sqrt() * (f - qv)).collect();
    Ok((
        GridPath::new(q.step(), fluid, Interp::RightConstant)?,
        GridPath::new(q.step(), diff, Interp::RightConstant)?,
    ))
}

/// `Sⁿ(t) = √n (F̃ⁿ(t) − F̃(t))` with `F̃ⁿ` the empirical distribution of
/// the residual service times, normalised by `n`.
pub fn empirical_initial_process(
    residuals: &[f64],
    ftilde: &MixedCdf,
    n: f64,
    step: f64,
    horizon: f64,
) -> Result<GridPath, MeasureError> {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    GridPath::from_fn(step, horizon, Interp::RightConstant, |t| {
        let count = sorted.partition_point(|&r| r <= t) as f64;
        n.sqrt() * (count / n - ftilde.eval(t))
    })
}
