use super::{GridPath, MeasureError, MixedCdf, MASS_EPS, TIME_EPS};

/// `∫_{[0,t]} g(u) dF(u)`: atoms exactly, continuous cells by the midpoint rule.
pub fn stieltjes_integral(g: &GridPath, f: &MixedCdf, t: f64) -> Result<f64, MeasureError> {
    stieltjes_integral_fn(|u| g.eval(u), f, t)
}

pub fn stieltjes_integral_fn(g: impl Fn(f64) -> f64, f: &MixedCdf, t: f64) -> Result<f64, MeasureError> {
    f.check_horizon(t)?;
    let mut acc = 0.0;
    for_each_piece(f, t, |node, mass| acc += g(node) * mass);
    Ok(acc)
}

/// `∫_{[0,t]} g(t − s) dF(s)`.
pub fn convolve_stieltjes(g: &GridPath, f: &MixedCdf, t: f64) -> Result<f64, MeasureError> {
    convolve_stieltjes_fn(|u| g.eval(u), f, t)
}

pub fn convolve_stieltjes_fn(g: impl Fn(f64) -> f64, f: &MixedCdf, t: f64) -> Result<f64, MeasureError> {
    stieltjes_integral_fn(|s| g(t - s), f, t)
}

/// Visits the integration elements of `F` restricted to `[0, t]`, passing the
/// quadrature node and the mass. A cell cut by `t` contributes its partial
/// mass at the midpoint of the retained part.
pub(crate) fn for_each_piece(f: &MixedCdf, t: f64, mut visit: impl FnMut(f64, f64)) {
    if t < -TIME_EPS {
        return;
    }
    for p in f.pieces() {
        if p.lo > t + TIME_EPS {
            break;
        }
        if p.is_atom() {
            visit(p.lo, p.mass);
        } else if p.hi <= t + TIME_EPS {
            visit(p.node(), p.mass);
        } else {
            let m = f.eval(t) - f.eval(p.lo);
            if m > 0.0 {
                visit(0.5 * (p.lo + t), m);
            }
        }
    }
}

/// Result of [`hazard_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hazard {
    pub value: f64,
    /// Where integration stopped because `1 − F(u−)` vanished, if it did.
    pub stopped_at: Option<f64>,
}

/// Cumulative hazard `∫_{[0,x]} dF(u) / (1 − F(u−))`.
///
/// Within a cell of the continuous part `F` is linear, so the cell
/// contributes `−ln((1 − F(hi)) / (1 − F(lo)))` exactly. Integration stops
/// (and reports where) once the survival function reaches zero.
pub fn hazard_integral(f: &MixedCdf, x: f64) -> Result<Hazard, MeasureError> {
    f.check_horizon(x)?;
    let mut value = 0.0;
    for p in f.pieces() {
        if p.lo > x + TIME_EPS {
            break;
        }
        let surv_before = 1.0 - if p.is_atom() { f.eval_left(p.lo) } else { f.eval(p.lo) };
        if surv_before <= MASS_EPS {
            return Ok(Hazard { value, stopped_at: Some(p.lo) });
        }
        if p.is_atom() {
            value += p.mass / surv_before;
        } else {
            let end = p.hi.min(x);
            let surv_after = 1.0 - f.eval(end);
            if surv_after <= MASS_EPS {
                return Ok(Hazard { value: f64::INFINITY, stopped_at: Some(end) });
            }
            value += (surv_before / surv_after).ln();
        }
    }
    Ok(Hazard { value, stopped_at: None })
}

/// `F′(x) = ∫_{[0,x]} (1 − F(u)) / (1 − F(u−)) dF(u)`.
///
/// The continuous part is unchanged; each atom is scaled by the ratio of the
/// survival function after and before it. The removed mass is recorded as
/// the result's defect so that it remains a valid sub-distribution.
pub fn f_prime(f: &MixedCdf) -> MixedCdf {
    let atoms: Vec<(f64, f64)> = f
        .atoms()
        .iter()
        .map(|&(u, m)| {
            let before = 1.0 - f.eval_left(u);
            let after = 1.0 - f.eval(u);
            let ratio = if before <= MASS_EPS { 0.0 } else { (after / before).max(0.0) };
            (u, m * ratio)
        })
        .collect();
    let kept: f64 = atoms.iter().map(|a| a.1).sum();
    let defect = f.defect() + f.atom_mass() - kept;
    let (step, cont) = f.continuous_table();
    MixedCdf::with_defect(atoms, step, cont.to_vec(), f.tail_mass(), defect)
        .expect("F′ of a valid distribution is a valid sub-distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Interp;

    const H: f64 = 1.0 / 128.0;

    fn mix() -> MixedCdf {
        let u = MixedCdf::uniform(0.0, 1.0, H).unwrap();
        let a = MixedCdf::point_mass(1.0).unwrap();
        MixedCdf::mixture(&[(0.5, &u), (0.5, &a)]).unwrap()
    }

    fn ident(horizon: f64) -> GridPath {
        GridPath::from_fn(H, horizon, Interp::Linear, |u| u).unwrap()
    }

    #[test]
    fn constant_integrand_gives_total_mass() {
        let f = mix();
        let one = GridPath::constant(H, 3.0, 1.0).unwrap();
        for t in [0.0, 0.3, 0.999, 1.0, 2.0] {
            assert!((stieltjes_integral(&one, &f, t).unwrap() - f.eval(t)).abs() < 1e-15);
            assert!((convolve_stieltjes(&one, &f, t).unwrap() - f.eval(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn atom_examples() {
        let g = ident(4.0);
        let a1 = MixedCdf::point_mass(1.0).unwrap();
        assert!((stieltjes_integral(&g, &a1, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let a2 = MixedCdf::point_mass(2.0).unwrap();
        assert!((convolve_stieltjes(&g, &a2, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((convolve_stieltjes(&g, &a2, 2.5).unwrap() - 0.5).abs() < 1e-15);
        // atom at 0 is inside [0, t]
        let a0 = MixedCdf::point_mass(0.0).unwrap();
        assert!((convolve_stieltjes(&g, &a0, 1.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_first_moment() {
        let u = MixedCdf::uniform(0.0, 1.0, H).unwrap();
        assert!((stieltjes_integral(&ident(2.0), &u, 1.0).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn additive_over_intervals() {
        let f = MixedCdf::exponential(1.3, H, 40.0).unwrap();
        let g = GridPath::from_fn(H, 5.0, Interp::Linear, |u| (3.0 * u).sin()).unwrap();
        let whole = stieltjes_integral(&g, &f, 2.0).unwrap();
        let a = stieltjes_integral(&g, &f, 0.7).unwrap();
        let b = stieltjes_integral(&g, &f, 2.0).unwrap() - a;
        assert!((whole - a - b).abs() < 1e-15);
    }

    #[test]
    fn hazard_examples() {
        let a1 = MixedCdf::point_mass(1.0).unwrap();
        let h = hazard_integral(&a1, 1.5).unwrap();
        assert_eq!(h.value, 1.0);
        let e = MixedCdf::exponential(2.0, H, 30.0).unwrap();
        // exact at grid nodes, linear interpolation of F in between
        assert!((hazard_integral(&e, 1.75).unwrap().value - 3.5).abs() < 1e-9);
        assert!((hazard_integral(&e, 1.7).unwrap().value - 3.4).abs() < 1e-4);
        assert_eq!(hazard_integral(&e, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn hazard_stops_where_survival_vanishes() {
        let two = MixedCdf::new(vec![(1.0, 0.5), (2.0, 0.5)], 1.0, vec![0.0], 0.0).unwrap();
        let h = hazard_integral(&two, 3.0).unwrap();
        assert!((h.value - 1.5).abs() < 1e-15);
        assert_eq!(h.stopped_at, None);
        let u = MixedCdf::uniform(0.0, 1.0, 0.25).unwrap();
        let h = hazard_integral(&u, 2.0).unwrap();
        assert!(h.stopped_at.is_some());
    }

    #[test]
    fn f_prime_examples() {
        let e = MixedCdf::exponential(1.0, H, 40.0).unwrap();
        let fp = f_prime(&e);
        for k in 0..100 {
            let x = k as f64 * 0.05;
            assert_eq!(fp.eval(x), e.eval(x));
        }
        let a1 = MixedCdf::point_mass(1.0).unwrap();
        let fp = f_prime(&a1);
        assert_eq!(fp.eval(0.5), 0.0);
        assert_eq!(fp.eval(3.0), 0.0);
        let fp = f_prime(&mix());
        assert!((fp.eval(0.4) - 0.2).abs() < 1e-15);
        assert!((fp.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((fp.defect() - 0.5).abs() < 1e-15);
    }
}
