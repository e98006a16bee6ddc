//! Thermodynamic-limit mean-field theory.
//!
//! Per spin, with `m = (m_x, m_z)` the polarisation of a spin 1/2, every
//! supported model has energy `e(m) = -a m_x^p - b m_z^q` with `a, b >= 0`,
//! and the variational free energy is `f = e - T s(|m|)` where `s` is the
//! entropy of a spin with polarisation `|m|`. Stationary points satisfy
//! `m = tanh(|g| / T) g / |g|` with `g = -grad e`; the reported state is the
//! stationary point of lowest `f`.

use crate::model::{mn_coupling, CollectiveModelSpec, Family};
use serde::Serialize;
use spinmi_core::{Error, Result};

/// Grid points used to bracket the roots of the self-consistency equation.
pub const ROOT_GRID: usize = 256;
/// Lower end of the root search; the trivial root `m = 0` is handled apart.
pub const ROOT_FLOOR: f64 = 1e-12;
/// Order-parameter jump above which a transition is called first order.
pub const FIRST_ORDER_JUMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldEnergy {
    pub a: f64,
    pub p: u32,
    pub b: f64,
    pub q: u32,
}

impl MeanFieldEnergy {
    pub fn from_family(family: &Family) -> Result<Self> {
        match *family {
            // Anisotropy <= 1 keeps the in-plane order along x.
            Family::Lmg { anisotropy, field } => {
                Ok(MeanFieldEnergy { a: anisotropy.max(1.0) / 4.0, p: 2, b: field.abs() / 2.0, q: 1 })
            }
            Family::Mn { x_order, z_order, angle } => {
                if x_order < 2 && z_order < 2 {
                    return Err(Error::Unsupported("mean field needs an interaction of order >= 2".into()));
                }
                let k = mn_coupling(x_order, z_order);
                Ok(MeanFieldEnergy { a: angle.cos().max(0.0), p: x_order, b: (k * angle.sin()).max(0.0), q: z_order })
            }
        }
    }

    pub fn energy(&self, mx: f64, mz: f64) -> f64 {
        -self.a * mx.powi(self.p as i32) - self.b * mz.powi(self.q as i32)
    }

    /// Scale of the effective field, used to bracket temperatures.
    pub fn scale(&self) -> f64 {
        (self.a * self.p as f64 + self.b * self.q as f64).max(f64::MIN_POSITIVE)
    }
}

/// Entropy (nats) of a spin 1/2 with polarisation `r`.
pub fn spin_entropy(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    let term = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    std::f64::consts::LN_2 - 0.5 * (term(1.0 + r) + term(1.0 - r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub m_x: f64,
    pub m_z: f64,
    /// Free energy per spin, `e - T s`.
    pub free_energy: f64,
    pub is_ordered: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    mx: f64,
    mz: f64,
    ordered: bool,
}

fn free_energy(model: &MeanFieldEnergy, t: f64, mx: f64, mz: f64) -> f64 {
    model.energy(mx, mz) - t * spin_entropy((mx * mx + mz * mz).sqrt())
}

/// Roots of `f` on `[ROOT_FLOOR, 1]` bracketed on a uniform grid and refined
/// by bisection.
fn bracketed_roots(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let xs: Vec<f64> =
        (0..ROOT_GRID).map(|i| ROOT_FLOOR + (1.0 - ROOT_FLOOR) * i as f64 / (ROOT_GRID - 1) as f64).collect();
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..ROOT_GRID - 1 {
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 && i + 2 < ROOT_GRID {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (xs[i], xs[i + 1], fa);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Ordering component of power `p >= 2` against a constant field `b` on the
/// other axis (`q = 1`). Returns `(ordering, field-axis)` polarisations.
fn field_axis_candidates(a: f64, p: u32, b: f64, t: f64) -> Vec<(f64, f64, bool)> {
    let field_only = (b / t).tanh();
    let mut out = vec![(0.0, field_only, false)];
    let g = |x: f64| ((p as f64 * a * x.powi(p as i32 - 1)).powi(2) + b * b).sqrt();
    // Self-consistency divided by the ordering component.
    let reduced = |x: f64| {
        let gx = g(x);
        if gx == 0.0 {
            return 1.0;
        }
        1.0 - (gx / t).tanh() * p as f64 * a * x.powi(p as i32 - 2) / gx
    };
    if a > 0.0 {
        for x in bracketed_roots(reduced) {
            let gx = g(x);
            let r = (gx / t).tanh();
            out.push((x, r * b / gx, true));
        }
    }
    out
}

/// Roots on one axis with no competing field: `x = tanh(p a x^{p-1} / T)`.
fn pure_axis_roots(a: f64, p: u32, t: f64) -> Vec<f64> {
    if a <= 0.0 {
        return Vec::new();
    }
    bracketed_roots(|x| 1.0 - (p as f64 * a * x.powi(p as i32 - 1) / t).tanh() / x)
}

fn candidates(model: &MeanFieldEnergy, t: f64) -> Vec<Candidate> {
    let MeanFieldEnergy { a, p, b, q } = *model;
    match (p >= 2, q >= 2) {
        (true, false) => field_axis_candidates(a, p, b, t)
            .into_iter()
            .map(|(x, z, ordered)| Candidate { mx: x, mz: z, ordered })
            .collect(),
        (false, true) => field_axis_candidates(b, q, a, t)
            .into_iter()
            .map(|(z, x, ordered)| Candidate { mx: x, mz: z, ordered })
            .collect(),
        _ => {
            // For p, q >= 2 the angular derivative of f at fixed |m| is
            // positive then negative, so minima lie on the axes.
            let mut out = vec![Candidate { mx: 0.0, mz: 0.0, ordered: false }];
            out.extend(pure_axis_roots(a, p, t).into_iter().map(|x| Candidate { mx: x, mz: 0.0, ordered: true }));
            out.extend(pure_axis_roots(b, q, t).into_iter().map(|z| Candidate { mx: 0.0, mz: z, ordered: true }));
            out
        }
    }
}

/// Lowest-free-energy stationary point at temperature `t > 0`. Ties within
/// rounding go to the ordered solution, which makes continuous onsets sharp.
pub fn solve(model: &MeanFieldEnergy, t: f64) -> Result<MeanFieldState> {
    if !(t > 0.0) {
        return Err(Error::InvalidModel(format!("temperature {t} must be positive")));
    }
    if t.is_infinite() {
        return Ok(MeanFieldState { m_x: 0.0, m_z: 0.0, free_energy: f64::NEG_INFINITY, is_ordered: false });
    }
    let mut best: Option<(Candidate, f64)> = None;
    for c in candidates(model, t) {
        let f = free_energy(model, t, c.mx, c.mz);
        if !f.is_finite() {
            return Err(Error::Numerical(format!("free energy not finite at T = {t}")));
        }
        best = match best {
            None => Some((c, f)),
            Some((bc, bf)) => {
                let tol = 1e-14 * bf.abs().max(1.0);
                if f < bf - tol || (f <= bf + tol && c.ordered && !bc.ordered) {
                    Some((c, f))
                } else {
                    Some((bc, bf))
                }
            }
        };
    }
    let (c, f) = best.ok_or_else(|| Error::Numerical("no self-consistent solution".into()))?;
    Ok(MeanFieldState { m_x: c.mx, m_z: c.mz, free_energy: f, is_ordered: c.ordered })
}

pub fn mean_field(spec: &CollectiveModelSpec) -> Result<MeanFieldState> {
    spec.validate()?;
    let model = MeanFieldEnergy::from_family(&spec.family)?;
    solve(&model, 1.0 / spec.beta)
}

/// `T_c(h) = h / (2 artanh h)` for the LMG model, `1/2` at zero field.
pub fn lmg_critical_temperature(field: f64) -> f64 {
    let h = field.abs();
    if h == 0.0 {
        0.5
    } else if h >= 1.0 {
        0.0
    } else {
        h / (2.0 * h.atanh())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransitionOrder {
    Continuous,
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub parameter: f64,
    /// `None` when no ordered phase exists at this parameter.
    pub temperature: Option<f64>,
    /// Order parameter just below `temperature` minus its value just above.
    pub jump: f64,
    pub order: Option<TransitionOrder>,
}

fn order_parameter(model: &MeanFieldEnergy, state: &MeanFieldState) -> f64 {
    let x = if model.p >= 2 { state.m_x.abs() } else { 0.0 };
    let z = if model.q >= 2 { state.m_z.abs() } else { 0.0 };
    x.max(z)
}

/// Ordering temperature by bisection on the onset of order.
pub fn critical_temperature(model: &MeanFieldEnergy) -> Result<BoundaryPoint> {
    let scale = model.scale();
    let low = 1e-6 * scale;
    let none = BoundaryPoint { parameter: f64::NAN, temperature: None, jump: 0.0, order: None };
    if !solve(model, low)?.is_ordered {
        return Ok(none);
    }
    let mut hi = scale;
    let mut guard = 0;
    while solve(model, hi)?.is_ordered {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Numerical("order persists at all temperatures".into()));
        }
    }
    let mut lo = low;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if solve(model, mid)?.is_ordered {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    let below = order_parameter(model, &solve(model, lo)?);
    let above = order_parameter(model, &solve(model, hi)?);
    let jump = below - above;
    let order = if jump > FIRST_ORDER_JUMP { TransitionOrder::FirstOrder } else { TransitionOrder::Continuous };
    Ok(BoundaryPoint { parameter: f64::NAN, temperature: Some(0.5 * (lo + hi)), jump, order: Some(order) })
}

/// Phase boundary `T_c(parameter)` for a family built from each parameter.
pub fn phase_boundary(family: impl Fn(f64) -> Family, grid: &[f64]) -> Result<Vec<BoundaryPoint>> {
    grid.iter()
        .map(|&x| {
            let model = MeanFieldEnergy::from_family(&family(x))?;
            Ok(BoundaryPoint { parameter: x, ..critical_temperature(&model)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn lmg(h: f64) -> Family {
        Family::Lmg { anisotropy: 0.0, field: h }
    }

    #[test]
    fn lmg_zero_field_transition() {
        let p = critical_temperature(&MeanFieldEnergy::from_family(&lmg(0.0)).unwrap()).unwrap();
        assert!((p.temperature.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.order, Some(TransitionOrder::Continuous));
    }

    #[test]
    fn lmg_closed_form_curve() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        for p in phase_boundary(lmg, &grid).unwrap() {
            let exact = lmg_critical_temperature(p.parameter);
            assert!((p.temperature.unwrap() - exact).abs() < 1e-8, "h = {}", p.parameter);
            assert_eq!(p.order, Some(TransitionOrder::Continuous));
        }
        assert!((lmg_critical_temperature(0.5) - 0.45512).abs() < 1e-5);
        assert!(lmg_critical_temperature(1.0 - 1e-12) < 0.05);
    }

    #[test]
    fn self_consistency_holds_at_solution() {
        let model = MeanFieldEnergy::from_family(&lmg(0.4)).unwrap();
        let s = solve(&model, 0.3).unwrap();
        assert!(s.is_ordered);
        let r = (s.m_x.powi(2) + 0.16).sqrt();
        let rhs = s.m_x * (r / 0.6).tanh() / r;
        assert!((s.m_x - rhs).abs() < 1e-12);
    }

    #[test]
    fn two_one_model_is_rescaled_lmg() {
        // T_{2,1}(w) = 4 cos w T_LMG(tan w).
        let grid = [0.1, 0.3, 0.6, 0.7];
        let pts = phase_boundary(|w| Family::Mn { x_order: 2, z_order: 1, angle: w }, &grid).unwrap();
        for p in pts {
            let expected = 4.0 * p.parameter.cos() * lmg_critical_temperature(p.parameter.tan());
            assert!((p.temperature.unwrap() - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn three_one_is_first_order_and_ends_at_quarter_pi() {
        let fam = |w| Family::Mn { x_order: 3, z_order: 1, angle: w };
        let p = phase_boundary(fam, &[0.3]).unwrap()[0];
        assert_eq!(p.order, Some(TransitionOrder::FirstOrder));
        let near: Vec<f64> = phase_boundary(fam, &[0.3, FRAC_PI_4 - 0.1, FRAC_PI_4 - 1e-2, FRAC_PI_4 - 1e-3])
            .unwrap()
            .iter()
            .map(|p| p.temperature.unwrap())
            .collect();
        assert!(near.windows(2).all(|w| w[1] < w[0]), "{near:?}");
        assert!(phase_boundary(fam, &[FRAC_PI_4 + 1e-3]).unwrap()[0].temperature.is_none());
    }

    #[test]
    fn two_two_is_continuous() {
        let fam = |w| Family::Mn { x_order: 2, z_order: 2, angle: w };
        for p in phase_boundary(fam, &[0.2, 0.6, 1.2]).unwrap() {
            assert_eq!(p.order, Some(TransitionOrder::Continuous), "w = {}", p.parameter);
        }
    }

    #[test]
    fn continuous_onset_has_no_jump() {
        let model = MeanFieldEnergy::from_family(&lmg(0.3)).unwrap();
        let tc = lmg_critical_temperature(0.3);
        let m = solve(&model, tc * (1.0 - 1e-12)).unwrap().m_x;
        assert!(m < 1e-5);
    }
}
