use super::{divides, split_index, GridPath, Interp, MeasureError, MixedCdf};

/// Discrete weights reproducing `∫_{[0,t]} g(t − s) dF(s)` at grid times
/// `t = kh` for any path `g` on the grid with step `h`:
///
/// `conv[k] = Σ_{j ≤ k} w[j] g[k − j] − boundary[k] g[0]`.
///
/// The weights are built from the same quadrature nodes as
/// [`convolve_stieltjes`](super::convolve_stieltjes), so both routes agree to
/// rounding. The continuous grid of `F` must be a refinement of the path
/// grid (or `F` purely atomic) so that no cell straddles a node.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernel {
    step: f64,
    interp: Interp,
    weights: Vec<f64>,
    boundary: Vec<f64>,
}

impl ConvolutionKernel {
    pub fn new(f: &MixedCdf, step: f64, nodes: usize, interp: Interp) -> Result<Self, MeasureError> {
        if let Some(cs) = f.cont_step() {
            if !divides(cs, step) {
                return Err(MeasureError::GridMismatch(format!(
                    "distribution grid {cs} does not refine path grid {step}"
                )));
            }
        }
        let horizon = (nodes.saturating_sub(1)) as f64 * step;
        f.check_horizon(horizon)?;
        let mut weights = vec![0.0; nodes + 1];
        let mut boundary = vec![0.0; nodes + 1];
        for piece in f.pieces() {
            let (p, th) = split_index(piece.node(), step);
            if p >= nodes {
                break;
            }
            let m = piece.mass;
            if th == 0.0 {
                weights[p] += m;
                continue;
            }
            match interp {
                Interp::RightConstant => weights[p + 1] += m,
                Interp::Linear => {
                    weights[p] += m * (1.0 - th);
                    weights[p + 1] += m * th;
                    boundary[p] += m * (1.0 - th);
                }
            }
        }
        weights.truncate(nodes);
        boundary.truncate(nodes);
        Ok(ConvolutionKernel { step, interp, weights, boundary })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mass of `[0, kh]` seen by node `k`: `Σ_{j ≤ k} w[j] − boundary[k]`.
    /// Equals `F(kh)`.
    pub fn mass_through(&self, k: usize) -> f64 {
        self.weights[..=k].iter().sum::<f64>() - self.boundary[k]
    }

    /// `conv[k]` for the node values `g`, using `g[0..=k]` only.
    pub fn apply_at(&self, g: &[f64], k: usize) -> f64 {
        let mut acc = 0.0;
        for j in 0..=k {
            acc += self.weights[j] * g[k - j];
        }
        acc - self.boundary[k] * g[0]
    }

    /// Contribution to `conv[k]` from `g[0..lo]` only (the part already
    /// known when solving forwards in time from node `lo`).
    pub fn apply_known(&self, g: &[f64], k: usize, lo: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..lo.min(k + 1) {
            acc += self.weights[k - i] * g[i];
        }
        if lo > 0 {
            acc -= self.boundary[k] * g[0];
        }
        acc
    }

    /// Contribution to `conv[k]` from `g[lo..=k]`.
    pub fn apply_unknown(&self, g: &[f64], k: usize, lo: usize) -> f64 {
        let mut acc = 0.0;
        for i in lo..=k {
            acc += self.weights[k - i] * g[i];
        }
        if lo == 0 {
            acc -= self.boundary[k] * g[0];
        }
        acc
    }

    pub fn apply(&self, g: &GridPath) -> Result<GridPath, MeasureError> {
        if (g.step() - self.step).abs() > 1e-12 || g.interp() != self.interp {
            return Err(MeasureError::GridMismatch("path does not match the kernel grid".into()));
        }
        let n = g.len().min(self.len());
        let v = g.values();
        let out = (0..n).map(|k| self.apply_at(v, k)).collect();
        GridPath::new(self.step, out, self.interp)
    }
}
