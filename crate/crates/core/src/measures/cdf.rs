use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MeasureError, MASS_EPS, TIME_EPS};

/// A distribution function on `[0, ∞)` made of explicit atoms plus a
/// continuous part tabulated on a uniform grid and interpolated linearly
/// (a piecewise-constant density).
///
/// Mass of the continuous part beyond the tabulated horizon is kept as
/// `tail_mass`; it is never renormalised away. A sub-distribution (total
/// mass below one, e.g. the output of [`f_prime`](super::f_prime)) records
/// its missing mass as `defect`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedCdf {
    atoms: Vec<(f64, f64)>,
    cont_step: f64,
    cont: Vec<f64>,
    tail_mass: f64,
    defect: f64,
    breaks: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    pieces: Vec<Piece>,
}

/// One integration element of a [`MixedCdf`]: an atom (`lo == hi`) or a
/// cell `(lo, hi]` of the continuous part carrying uniform density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

impl Piece {
    pub fn is_atom(&self) -> bool {
        self.lo == self.hi
    }

    /// Quadrature node: the atom location or the cell midpoint.
    pub fn node(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl MixedCdf {
    /// Builds a distribution from atoms `(location, mass)`, a continuous part
    /// given as cumulative masses at `k * cont_step` (first value must be 0),
    /// and the continuous mass lying beyond the last node.
    pub fn new(
        atoms: Vec<(f64, f64)>,
        cont_step: f64,
        cont: Vec<f64>,
        tail_mass: f64,
    ) -> Result<Self, MeasureError> {
        Self::with_defect(atoms, cont_step, cont, tail_mass, 0.0)
    }

    pub(crate) fn with_defect(
        mut atoms: Vec<(f64, f64)>,
        cont_step: f64,
        mut cont: Vec<f64>,
        tail_mass: f64,
        defect: f64,
    ) -> Result<Self, MeasureError> {
        if !(cont_step > 0.0 && cont_step.is_finite()) {
            return Err(MeasureError::Invalid(format!("continuous grid step {cont_step} must be positive")));
        }
        if cont.is_empty() {
            cont.push(0.0);
        }
        if cont[0].abs() > MASS_EPS {
            return Err(MeasureError::Invalid("continuous part must start at 0".into()));
        }
        cont[0] = 0.0;
        for w in cont.windows(2) {
            if !(w[1] >= w[0] - MASS_EPS) || !w[1].is_finite() {
                return Err(MeasureError::Invalid("continuous part must be nondecreasing".into()));
            }
        }
        for &(x, m) in &atoms {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(MeasureError::Invalid(format!("atom location {x} must be a finite nonnegative time")));
            }
            if !(m >= 0.0 && m.is_finite()) {
                return Err(MeasureError::Invalid(format!("atom mass {m} must be nonnegative")));
            }
        }
        if !(tail_mass >= -MASS_EPS) || !(defect >= -MASS_EPS) {
            return Err(MeasureError::Invalid("tail mass and defect must be nonnegative".into()));
        }
        atoms.retain(|&(_, m)| m > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // merge coincident atoms
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if (last.0 - x).abs() <= TIME_EPS => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        let atom_total: f64 = merged.iter().map(|a| a.1).sum();
        let cont_total = *cont.last().unwrap();
        let total = atom_total + cont_total + tail_mass.max(0.0) + defect.max(0.0);
        if (total - 1.0).abs() > 1e-12 {
            return Err(MeasureError::Invalid(format!(
                "masses sum to {total}, not 1 (atoms {atom_total}, continuous {cont_total}, tail {tail_mass})"
            )));
        }
        let mut cdf = MixedCdf {
            atoms: merged,
            cont_step,
            cont,
            tail_mass: tail_mass.max(0.0),
            defect: defect.max(0.0),
            breaks: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            pieces: Vec::new(),
        };
        cdf.build_table();
        Ok(cdf)
    }

    fn build_table(&mut self) {
        let n_nodes = if self.has_continuous_part() { self.cont.len() } else { 1 };
        let mut breaks: Vec<f64> = (0..n_nodes).map(|k| k as f64 * self.cont_step).collect();
        for &(x, _) in &self.atoms {
            breaks.push(x);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);

        let mut left = Vec::with_capacity(breaks.len());
        let mut right = Vec::with_capacity(breaks.len());
        let mut atom_idx = 0;
        let mut atoms_before = 0.0;
        for &b in &breaks {
            let c = self.cont_at(b);
            left.push(atoms_before + c);
            while atom_idx < self.atoms.len() && self.atoms[atom_idx].0 <= b + TIME_EPS {
                atoms_before += self.atoms[atom_idx].1;
                atom_idx += 1;
            }
            right.push(atoms_before + c);
        }

        let mut pieces = Vec::with_capacity(2 * breaks.len());
        for i in 0..breaks.len() {
            let jump = right[i] - left[i];
            if jump > 0.0 {
                pieces.push(Piece { lo: breaks[i], hi: breaks[i], mass: jump });
            }
            if i + 1 < breaks.len() {
                let m = left[i + 1] - right[i];
                if m > 0.0 {
                    pieces.push(Piece { lo: breaks[i], hi: breaks[i + 1], mass: m });
                }
            }
        }
        self.breaks = breaks;
        self.left = left;
        self.right = right;
        self.pieces = pieces;
    }

    /// Cumulative continuous mass at `x`, linear between nodes.
    fn cont_at(&self, x: f64) -> f64 {
        if x <= 0.0 || !self.has_continuous_part() {
            return 0.0;
        }
        let r = x / self.cont_step;
        let last = self.cont.len() - 1;
        if r >= last as f64 {
            return self.cont[last];
        }
        let k = r.floor() as usize;
        let th = r - k as f64;
        self.cont[k] + th * (self.cont[k + 1] - self.cont[k])
    }

    pub fn point_mass(x: f64) -> Result<Self, MeasureError> {
        Self::new(vec![(x, 1.0)], 1.0, vec![0.0], 0.0)
    }

    /// Exponential law with the given rate, tabulated on `[0, horizon]`.
    pub fn exponential(rate: f64, step: f64, horizon: f64) -> Result<Self, MeasureError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(MeasureError::Invalid(format!("exponential rate {rate} must be positive")));
        }
        Self::from_fn(|x| -(-rate * x).exp_m1(), step, horizon, |h| (-rate * h).exp())
    }

    pub fn uniform(low: f64, high: f64, step: f64) -> Result<Self, MeasureError> {
        if !(0.0 <= low && low < high && high.is_finite()) {
            return Err(MeasureError::Invalid(format!("uniform bounds [{low}, {high}] are invalid")));
        }
        let horizon = (high / step).ceil() * step;
        Self::from_fn(|x| ((x - low) / (high - low)).clamp(0.0, 1.0), step, horizon, |_| 0.0)
    }

    /// Tabulates an absolutely continuous distribution function `cdf` on the
    /// grid; `tail(horizon)` gives the mass beyond the last node.
    pub fn from_fn(
        cdf: impl Fn(f64) -> f64,
        step: f64,
        horizon: f64,
        tail: impl Fn(f64) -> f64,
    ) -> Result<Self, MeasureError> {
        if !(step > 0.0) || !(horizon >= step) {
            return Err(MeasureError::Invalid(format!("grid step {step} and horizon {horizon} are invalid")));
        }
        let n = (horizon / step).round() as usize;
        let t_max = n as f64 * step;
        let cont: Vec<f64> = (0..=n).map(|k| cdf(k as f64 * step)).collect();
        let tail_mass = tail(t_max);
        // absorb rounding so the masses add up
        let total = cont[n] + tail_mass;
        let cont = if (total - 1.0).abs() <= 1e-10 {
            cont.into_iter().map(|c| c / total).collect()
        } else {
            cont
        };
        Self::new(Vec::new(), step, cont, tail_mass / total.max(f64::MIN_POSITIVE))
    }

    /// Empirical distribution: each sample carries mass `1/N`.
    pub fn empirical(samples: &[f64]) -> Result<Self, MeasureError> {
        if samples.is_empty() {
            return Err(MeasureError::Invalid("empirical distribution needs at least one sample".into()));
        }
        if samples.windows(2).any(|w| w[1] < w[0]) {
            return Err(MeasureError::Invalid("empirical samples must be sorted".into()));
        }
        let m = 1.0 / samples.len() as f64;
        Self::new(samples.iter().map(|&x| (x, m)).collect(), 1.0, vec![0.0], 0.0)
    }

    /// Convex combination of distributions. Continuous parts are resampled
    /// onto the finest step and longest horizon among the components.
    pub fn mixture(components: &[(f64, &MixedCdf)]) -> Result<Self, MeasureError> {
        if components.is_empty() {
            return Err(MeasureError::Invalid("mixture needs components".into()));
        }
        let wsum: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 >= 0.0)) || (wsum - 1.0).abs() > 1e-12 {
            return Err(MeasureError::Invalid(format!("mixture weights must be nonnegative and sum to 1, got {wsum}")));
        }
        let with_cont: Vec<_> = components.iter().filter(|c| c.1.has_continuous_part()).collect();
        let step = with_cont
            .iter()
            .map(|c| c.1.cont_step)
            .fold(f64::INFINITY, f64::min);
        let step = if step.is_finite() { step } else { 1.0 };
        let horizon = with_cont.iter().map(|c| c.1.horizon()).fold(0.0, f64::max);
        let n = (horizon / step).round() as usize;
        let mut cont = vec![0.0; n + 1];
        let mut atoms = Vec::new();
        let mut tail = 0.0;
        let mut defect = 0.0;
        for &(w, d) in components {
            for &(x, m) in &d.atoms {
                atoms.push((x, w * m));
            }
            if d.has_continuous_part() {
                for (k, c) in cont.iter_mut().enumerate() {
                    *c += w * d.cont_at(k as f64 * step);
                }
            }
            tail += w * d.tail_mass;
            defect += w * d.defect;
        }
        Self::with_defect(atoms, step, cont, tail, defect)
    }

    /// Stationary-excess law `λ ∫₀ᵗ (1 − F(s)) ds` with `λ = 1 / mean(F)`,
    /// tabulated on `F`'s continuous grid (or `step` when `F` is purely atomic).
    pub fn equilibrium(base: &MixedCdf, step: f64) -> Result<Self, MeasureError> {
        if base.tail_mass > MASS_EPS {
            return Err(MeasureError::Invalid(
                "stationary-excess law needs a base distribution without tail mass".into(),
            ));
        }
        let step = if base.has_continuous_part() { base.cont_step } else { step };
        let end = base.breaks.last().copied().unwrap_or(0.0);
        let mean = base.survival_integral(end);
        if !(mean > 0.0) {
            return Err(MeasureError::Invalid("base distribution has zero mean".into()));
        }
        let n = (end / step).ceil() as usize;
        let cont: Vec<f64> = (0..=n).map(|k| base.survival_integral(k as f64 * step) / mean).collect();
        let tail = 1.0 - cont[n];
        Self::new(Vec::new(), step, cont.into_iter().map(|c| c.min(1.0)).collect(), tail.max(0.0))
    }

    /// `∫₀ˣ (1 − F(s)) ds`, exact for the piecewise-linear representation.
    pub fn survival_integral(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev_b = 0.0;
        let mut prev_f = self.eval(0.0);
        for (i, &b) in self.breaks.iter().enumerate() {
            if b <= 0.0 {
                continue;
            }
            let end = b.min(x);
            if end <= prev_b {
                break;
            }
            let f_end = if end < b { self.eval(end) } else { self.left[i] };
            acc += (end - prev_b) * (1.0 - 0.5 * (prev_f + f_end));
            if end < b {
                return acc;
            }
            prev_b = b;
            prev_f = self.right[i];
        }
        if x > prev_b {
            acc += (x - prev_b) * (1.0 - prev_f);
        }
        acc
    }

    pub fn has_continuous_part(&self) -> bool {
        self.cont.len() > 1
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Step of the continuous part's grid, if there is one.
    pub fn cont_step(&self) -> Option<f64> {
        self.has_continuous_part().then_some(self.cont_step)
    }

    /// Grid step and cumulative node masses of the continuous part.
    pub fn continuous_table(&self) -> (f64, &[f64]) {
        (self.cont_step, &self.cont)
    }

    /// Right end of the tabulated continuous part (0 when purely atomic).
    pub fn horizon(&self) -> f64 {
        if self.has_continuous_part() {
            (self.cont.len() - 1) as f64 * self.cont_step
        } else {
            0.0
        }
    }

    /// Integration elements in increasing order of location.
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Points in the open interval `(lo, hi)` where `F` jumps or changes
    /// slope. Between consecutive points `F` is linear.
    pub fn breaks_between(&self, lo: f64, hi: f64) -> &[f64] {
        let i = self.breaks.partition_point(|&b| b <= lo);
        let j = self.breaks.partition_point(|&b| b < hi).max(i);
        &self.breaks[i..j]
    }

    /// Total mass carried by atoms.
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let i = self.breaks.partition_point(|&b| b <= x + TIME_EPS);
        i.checked_sub(1)
    }

    /// `F(x)`, right-continuous. Beyond the horizon the tail is not added;
    /// use [`eval_exact`](Self::eval_exact) when that matters.
    pub fn eval(&self, x: f64) -> f64 {
        if x < -TIME_EPS {
            return 0.0;
        }
        match self.locate(x) {
            None => 0.0,
            Some(i) => {
                let b = self.breaks[i];
                if (x - b).abs() <= TIME_EPS || i + 1 == self.breaks.len() {
                    self.right[i]
                } else {
                    let b1 = self.breaks[i + 1];
                    let th = (x - b) / (b1 - b);
                    self.right[i] + th * (self.left[i + 1] - self.right[i])
                }
            }
        }
    }

    pub fn eval_exact(&self, x: f64) -> Result<f64, MeasureError> {
        self.check_horizon(x)?;
        Ok(self.eval(x))
    }

    pub(crate) fn check_horizon(&self, x: f64) -> Result<(), MeasureError> {
        if self.tail_mass > MASS_EPS && x > self.horizon() + TIME_EPS {
            return Err(MeasureError::BeyondHorizon { x, horizon: self.horizon(), tail: self.tail_mass });
        }
        Ok(())
    }

    /// `F(x−)`.
    pub fn eval_left(&self, x: f64) -> f64 {
        if x <= TIME_EPS {
            return 0.0;
        }
        match self.locate(x) {
            Some(i) if (x - self.breaks[i]).abs() <= TIME_EPS => self.left[i],
            _ => self.eval(x),
        }
    }

    /// `ΔF(x) = F(x) − F(x−)`.
    pub fn jump(&self, x: f64) -> f64 {
        self.eval(x) - self.eval_left(x)
    }

    /// Generalised inverse `inf{x : F(x) ≥ u}` for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64, MeasureError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(MeasureError::Invalid(format!("quantile level {u} outside [0, 1]")));
        }
        let i = self.right.partition_point(|&r| r < u);
        if i == self.right.len() {
            return self.tail_quantile(u);
        }
        if i == 0 || u > self.left[i] {
            return Ok(self.breaks[i]);
        }
        let (b0, b1) = (self.breaks[i - 1], self.breaks[i]);
        let (f0, f1) = (self.right[i - 1], self.left[i]);
        if f1 <= f0 {
            return Ok(b0);
        }
        Ok(b0 + (u - f0) / (f1 - f0) * (b1 - b0))
    }

    // Tail beyond the horizon is extrapolated exponentially, with the hazard
    // matched to the density of the last tabulated cell.
    fn tail_quantile(&self, u: f64) -> Result<f64, MeasureError> {
        let represented = *self.right.last().unwrap();
        if self.tail_mass <= 0.0 || self.defect > 0.0 && u > represented + self.tail_mass {
            return Err(MeasureError::UnsampleableTail(1.0 - represented));
        }
        if !self.has_continuous_part() {
            return Err(MeasureError::UnsampleableTail(self.tail_mass));
        }
        let n = self.cont.len() - 1;
        let density = (self.cont[n] - self.cont[n - 1]) / self.cont_step;
        if !(density > 0.0) {
            return Err(MeasureError::UnsampleableTail(self.tail_mass));
        }
        let hazard = density / self.tail_mass;
        let v = ((u - represented) / self.tail_mass).clamp(0.0, 1.0 - f64::EPSILON);
        Ok(self.horizon() - (-v).ln_1p() / hazard)
    }

    /// Inverse-transform sample; consumes exactly one uniform from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, MeasureError> {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

/// Distribution as declared in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Uniform { low: f64, high: f64 },
    Mixture { components: Vec<MixtureComponent> },
    Empirical { samples: Vec<f64> },
    /// Stationary-excess law of another distribution: `∫₀ᵗ (1 − G(s)) ds / mean(G)`.
    Equilibrium { of: Box<DistSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub dist: DistSpec,
}

impl DistSpec {
    /// Tabulates the distribution with continuous grid `step`, covering at
    /// least `horizon` (exponential tables extend until the tail is
    /// negligible).
    pub fn build(&self, step: f64, horizon: f64) -> Result<MixedCdf, MeasureError> {
        match self {
            DistSpec::Exponential { rate } => {
                let h = (horizon.max(36.0 / rate) / step).ceil() * step;
                MixedCdf::exponential(*rate, step, h)
            }
            DistSpec::Deterministic { value } => MixedCdf::point_mass(*value),
            DistSpec::Uniform { low, high } => MixedCdf::uniform(*low, *high, step),
            DistSpec::Empirical { samples } => MixedCdf::empirical(samples),
            DistSpec::Mixture { components } => {
                let built: Vec<(f64, MixedCdf)> = components
                    .iter()
                    .map(|c| Ok((c.weight, c.dist.build(step, horizon)?)))
                    .collect::<Result<_, MeasureError>>()?;
                let refs: Vec<(f64, &MixedCdf)> = built.iter().map(|(w, d)| (*w, d)).collect();
                MixedCdf::mixture(&refs)
            }
            DistSpec::Equilibrium { of } => MixedCdf::equilibrium(&of.build(step, horizon)?, step),
        }
    }

    /// Mean of the declared law, when it is known in closed form.
    pub fn mean(&self) -> Option<f64> {
        match self {
            DistSpec::Exponential { rate } => Some(1.0 / rate),
            DistSpec::Deterministic { value } => Some(*value),
            DistSpec::Uniform { low, high } => Some(0.5 * (low + high)),
            DistSpec::Empirical { samples } => Some(samples.iter().sum::<f64>() / samples.len() as f64),
            DistSpec::Mixture { components } => components
                .iter()
                .map(|c| c.dist.mean().map(|m| c.weight * m))
                .sum(),
            DistSpec::Equilibrium { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::streams;

    fn half_uniform_half_atom() -> MixedCdf {
        let u = MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0).unwrap();
        let a = MixedCdf::point_mass(1.0).unwrap();
        MixedCdf::mixture(&[(0.5, &u), (0.5, &a)]).unwrap()
    }

    #[test]
    fn unit_atom_eval_left_and_jump() {
        let f = MixedCdf::point_mass(1.0).unwrap();
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval_left(1.0), 0.0);
        assert_eq!(f.jump(1.0), 1.0);
        assert_eq!(f.eval(0.999), 0.0);
    }

    #[test]
    fn continuous_cdf_has_no_jumps() {
        let f = MixedCdf::exponential(1.5, 1.0 / 64.0, 20.0).unwrap();
        for k in 0..200 {
            assert_eq!(f.jump(k as f64 * 0.013), 0.0);
        }
    }

    #[test]
    fn mixture_evaluates_directly() {
        let f = half_uniform_half_atom();
        assert!((f.eval(0.6) - 0.3).abs() < 1e-15);
        assert!((f.eval_left(1.0) - 0.5).abs() < 1e-15);
        assert!((f.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((f.jump(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn masses_must_add_up() {
        assert!(MixedCdf::new(vec![(1.0, 0.5)], 1.0, vec![0.0], 0.0).is_err());
        assert!(MixedCdf::new(vec![(1.0, 0.5)], 1.0, vec![0.0, 0.2, 0.1], 0.4).is_err());
    }

    #[test]
    fn beyond_horizon_is_flagged_only_with_tail() {
        let f = MixedCdf::exponential(1.0, 0.25, 2.0).unwrap();
        assert!(matches!(f.eval_exact(3.0), Err(MeasureError::BeyondHorizon { .. })));
        assert!(f.eval_exact(1.5).is_ok());
        let g = MixedCdf::point_mass(5.0).unwrap();
        assert_eq!(g.eval_exact(9.0).unwrap(), 1.0);
    }

    #[test]
    fn quantiles_honour_atoms_and_inverse_transform() {
        let f = MixedCdf::point_mass(2.0).unwrap();
        let mut rng = streams::stream(1, 0, 0);
        for _ in 0..100 {
            assert_eq!(f.sample(&mut rng).unwrap(), 2.0);
        }
        let u = MixedCdf::uniform(0.0, 1.0, 1.0 / 128.0).unwrap();
        assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-15);
        let m = half_uniform_half_atom();
        assert_eq!(m.quantile(0.7).unwrap(), 1.0);
        assert!((m.quantile(0.2).unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn tail_extrapolation_is_exponential() {
        let f = MixedCdf::exponential(1.0, 1.0 / 128.0, 2.0).unwrap();
        let tail = f.tail_mass();
        assert!((tail - (-2.0f64).exp()).abs() < 1e-12);
        // median of the tail part sits ln 2 past the horizon
        let u = 1.0 - tail / 2.0;
        let x = f.quantile(u).unwrap();
        assert!((x - (2.0 + std::f64::consts::LN_2)).abs() < 0.01, "{x}");
    }

    #[test]
    fn atomic_tail_is_unsampleable() {
        let f = MixedCdf::new(vec![(1.0, 0.5)], 1.0, vec![0.0], 0.5).unwrap();
        assert!(matches!(f.quantile(0.9), Err(MeasureError::UnsampleableTail(_))));
    }

    #[test]
    fn equilibrium_of_exponential_is_exponential() {
        let f = MixedCdf::exponential(2.0, 1.0 / 128.0, 30.0).unwrap();
        let g = MixedCdf::equilibrium(&f, 1.0 / 128.0).unwrap();
        for k in 0..50 {
            let x = k as f64 * 0.1;
            assert!((g.eval(x) - f.eval(x)).abs() < 2e-5, "{x}");
        }
    }

    #[test]
    fn survival_integral_is_the_mean() {
        let u = MixedCdf::uniform(0.0, 1.0, 1.0 / 16.0).unwrap();
        assert!((u.survival_integral(5.0) - 0.5).abs() < 1e-14);
        let d = MixedCdf::point_mass(3.0).unwrap();
        assert!((d.survival_integral(10.0) - 3.0).abs() < 1e-14);
        assert!((d.survival_integral(2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dist_spec_parses_tagged_records() {
        let spec: DistSpec = toml::from_str(
            r#"
            kind = "mixture"
            components = [
                { weight = 0.7, kind = "exponential", rate = 2.0 },
                { weight = 0.3, kind = "deterministic", value = 0.0 },
            ]
            "#,
        )
        .unwrap();
        let f = spec.build(1.0 / 128.0, 5.0).unwrap();
        assert!((f.jump(0.0) - 0.3).abs() < 1e-15);
        assert!((spec.mean().unwrap() - 0.35).abs() < 1e-15);
    }
}
