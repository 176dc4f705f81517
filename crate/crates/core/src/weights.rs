//! Carleman weight functions: the radial weight `phi`, its validation, the
//! elliptic factors `e^{2 s varphi}`, `sigma`, and the degenerate parabolic
//! weight built on `ell(t) = 1 / (t (T - t))`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{BoundaryId, DomainKind, GridDomain, GridField};
use crate::riemannian::euclidean_gradient;
use crate::{Error, Result, WeightCondition};

/// Default lower bound on `min |grad phi|`.
pub const DEFAULT_DELTA_MIN: f64 = 1e-3;

/// Largest exponent whose `exp` is finite in double precision.
pub const EXPONENT_BUDGET: f64 = 709.0;

/// Tolerance for `phi = 0` on the vanishing boundary.
pub const VANISHING_TOL: f64 = 1e-12;

/// Distance-type weight vanishing on the circle `upsilon`: `r - a` when it is
/// the inner circle of radius `a`, `b - r` when it is the outer circle of
/// radius `b`.
pub fn build_radial_weight(dom: &GridDomain, upsilon: BoundaryId) -> Result<GridField> {
    if dom.kind != DomainKind::Annulus {
        return Err(Error::UnsupportedGeometry(
            "radial weights need an annulus".into(),
        ));
    }
    let (a, b) = (dom.r_inner, dom.r_outer);
    let mut phi = GridField::from_polar(dom, |r, _| match upsilon {
        BoundaryId::Inner => r - a,
        BoundaryId::Outer => b - r,
    });
    // exact zero on the vanishing ring regardless of rounding in `radius`
    let ring = dom.boundary_ring(upsilon)?;
    for j in 0..dom.n_theta {
        let k = dom.index(ring, j);
        phi.values[k] = 0.0;
    }
    Ok(phi)
}

/// Checks, in order, positivity off `upsilon`, vanishing on `upsilon` and
/// the gradient floor. Returns `delta = min |grad phi|`.
pub fn validate_weight(phi: &GridField, upsilon: BoundaryId, delta_min: f64) -> Result<f64> {
    let d = phi.domain;
    let ring = d.boundary_ring(upsilon)?;

    let mut worst: Option<(usize, f64)> = None;
    for (k, &v) in phi.values.iter().enumerate() {
        let (i, _) = d.ring_and_angle(k);
        if i != ring && !(v > 0.0) && worst.map_or(true, |(_, w)| v < w) {
            worst = Some((k, v));
        }
    }
    if let Some((node, value)) = worst {
        return Err(Error::WeightViolation {
            condition: WeightCondition::Positive,
            node,
            value,
        });
    }

    let mut worst: Option<(usize, f64)> = None;
    for j in 0..d.n_theta {
        let k = d.index(ring, j);
        let v = phi.values[k];
        if !(v.abs() <= VANISHING_TOL) && worst.map_or(true, |(_, w)| v.abs() > w) {
            worst = Some((k, v.abs()));
        }
    }
    if let Some((node, value)) = worst {
        return Err(Error::WeightViolation {
            condition: WeightCondition::VanishesOnBoundary,
            node,
            value,
        });
    }

    let grad = euclidean_gradient(phi);
    let (node, delta) = (0..grad.x.len())
        .map(|k| (k, grad.x[k].hypot(grad.y[k])))
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    if !(delta > delta_min) {
        return Err(Error::WeightViolation {
            condition: WeightCondition::GradientFloor,
            node,
            value: delta,
        });
    }
    Ok(delta)
}

/// Validated elliptic weight with its parameters and derived factors.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticWeight {
    pub phi: GridField,
    pub delta: f64,
    pub upsilon: BoundaryId,
    pub gamma: f64,
    pub s: f64,
    /// `e^{gamma phi}`
    pub phi_big: GridField,
    /// `s gamma e^{gamma phi}`
    pub sigma: GridField,
}

fn check_params(gamma: f64, s: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite() && s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} and s = {s} must be positive"
        )));
    }
    Ok(())
}

impl EllipticWeight {
    pub fn new(phi: GridField, upsilon: BoundaryId, gamma: f64, s: f64, delta_min: f64) -> Result<Self> {
        let delta = validate_weight(&phi, upsilon, delta_min)?;
        Self::assemble(phi, delta, upsilon, gamma, s)
    }

    /// Radial weight on an annulus, validated with the default floor.
    pub fn radial(dom: &GridDomain, upsilon: BoundaryId, gamma: f64, s: f64) -> Result<Self> {
        Self::new(build_radial_weight(dom, upsilon)?, upsilon, gamma, s, DEFAULT_DELTA_MIN)
    }

    /// Same `phi` with new `(gamma, s)`; skips revalidation.
    pub fn with_params(&self, gamma: f64, s: f64) -> Result<Self> {
        Self::assemble(self.phi.clone(), self.delta, self.upsilon, gamma, s)
    }

    fn assemble(phi: GridField, delta: f64, upsilon: BoundaryId, gamma: f64, s: f64) -> Result<Self> {
        check_params(gamma, s)?;
        let top = phi.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(gamma * v));
        if top > EXPONENT_BUDGET {
            return Err(Error::ParameterOverflow { exponent: top });
        }
        let phi_big = GridField {
            domain: phi.domain,
            values: phi.values.iter().map(|&v| (gamma * v).exp()).collect(),
        };
        let sigma = phi_big.scaled(s * gamma);
        Ok(Self {
            phi,
            delta,
            upsilon,
            gamma,
            s,
            phi_big,
            sigma,
        })
    }

    /// `2 s varphi` per node.
    pub fn exponent(&self) -> Vec<f64> {
        self.phi_big.values.iter().map(|v| 2.0 * self.s * v).collect()
    }

    pub fn max_exponent(&self) -> f64 {
        self.exponent().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// How the exponent `2 s varphi` is rescaled before exponentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentShift {
    /// No rescaling; fails once the exponent leaves the budget.
    None,
    /// Subtract the largest exponent over the domain.
    Max,
    /// Subtract a caller-chosen constant.
    Fixed(f64),
}

/// `e^{2 s varphi - shift}`, `sigma` and `sigma^3` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanFactors {
    pub e2sphi: GridField,
    pub sigma: GridField,
    pub sigma3: GridField,
    pub shift: f64,
}

pub fn carleman_factors(w: &EllipticWeight, shift: ExponentShift) -> Result<CarlemanFactors> {
    let e = w.exponent();
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = match shift {
        ExponentShift::None => 0.0,
        ExponentShift::Max => top,
        ExponentShift::Fixed(c) => c,
    };
    if !(top - shift <= EXPONENT_BUDGET) {
        return Err(Error::ParameterOverflow { exponent: top - shift });
    }
    let dom = w.phi.domain;
    Ok(CarlemanFactors {
        e2sphi: GridField {
            domain: dom,
            values: e.iter().map(|v| (v - shift).exp()).collect(),
        },
        sigma: w.sigma.clone(),
        sigma3: GridField {
            domain: dom,
            values: w.sigma.values.iter().map(|v| v * v * v).collect(),
        },
        shift,
    })
}

/// `1 / (t (T - t))`
#[inline]
pub fn ell(t: f64, t_final: f64) -> f64 {
    1.0 / (t * (t_final - t))
}

/// Degenerate parabolic weight. `varphi` and `xi` are evaluated on demand
/// from `phi_x` and `ell` rather than stored per space-time node.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicWeight {
    pub phi_x: GridField,
    /// `max phi`
    pub m: f64,
    pub t_final: f64,
    pub t_grid: Vec<f64>,
    pub ell: Vec<f64>,
    pub gamma: f64,
    pub s: f64,
    e_phi: Vec<f64>,
    e_2m: f64,
}

/// Time nodes `k T / n_t`, `k = 0..=n_t`, clamped to `[t_min, T - t_min]`
/// with `t_min = T / (4 n_t)`.
pub fn clamped_time_grid(t_final: f64, n_t: usize) -> Vec<f64> {
    let t_min = t_final / (4.0 * n_t as f64);
    (0..=n_t)
        .map(|k| (k as f64 * t_final / n_t as f64).clamp(t_min, t_final - t_min))
        .collect()
}

pub fn build_parabolic_weight(
    phi_x: &GridField,
    t_final: f64,
    n_t: usize,
    gamma: f64,
    s: f64,
) -> Result<ParabolicWeight> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("T = {t_final} must be positive")));
    }
    if n_t < 16 {
        return Err(Error::InvalidParameter(format!("n_t = {n_t} < 16")));
    }
    check_params(gamma, s)?;
    let m = phi_x.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if 2.0 * gamma * m > EXPONENT_BUDGET {
        return Err(Error::ParameterOverflow {
            exponent: 2.0 * gamma * m,
        });
    }
    let t_grid = clamped_time_grid(t_final, n_t);
    let ell = t_grid.iter().map(|&t| self::ell(t, t_final)).collect();
    Ok(ParabolicWeight {
        e_phi: phi_x.values.iter().map(|&v| (gamma * v).exp()).collect(),
        e_2m: (2.0 * gamma * m).exp(),
        phi_x: phi_x.clone(),
        m,
        t_final,
        t_grid,
        ell,
        gamma,
        s,
    })
}

impl ParabolicWeight {
    /// `(e^{gamma phi} - e^{2 gamma m}) ell(t_k)` at spatial node `node`.
    #[inline]
    pub fn varphi(&self, k: usize, node: usize) -> f64 {
        (self.e_phi[node] - self.e_2m) * self.ell[k]
    }

    /// `e^{gamma phi} ell(t_k)`
    #[inline]
    pub fn xi(&self, k: usize, node: usize) -> f64 {
        self.e_phi[node] * self.ell[k]
    }

    /// `s gamma xi`
    #[inline]
    pub fn sigma(&self, k: usize, node: usize) -> f64 {
        self.s * self.gamma * self.xi(k, node)
    }

    /// `2 s varphi`
    #[inline]
    pub fn exponent(&self, k: usize, node: usize) -> f64 {
        2.0 * self.s * self.varphi(k, node)
    }

    /// Largest `2 s varphi` over the space-time grid: attained where `phi = m`
    /// and `ell` is smallest.
    pub fn max_exponent(&self) -> f64 {
        let ell_min = self.ell.iter().copied().fold(f64::INFINITY, f64::min);
        2.0 * self.s * ((self.gamma * self.m).exp() - self.e_2m) * ell_min
    }

    /// Trapezoid weights over `t_grid`.
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.t_grid)
    }

    pub fn with_params(&self, gamma: f64, s: f64) -> Result<Self> {
        build_parabolic_weight(&self.phi_x, self.t_final, self.t_grid.len() - 1, gamma, s)
    }
}

/// Trapezoid weights on a possibly non-uniform increasing grid.
pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut w = alloc::vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = t[k + 1] - t[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_annulus, build_disk, BoundaryRole, BoundaryTags};

    fn annulus(a: f64, b: f64) -> GridDomain {
        build_annulus(a, b, 16, 32, BoundaryTags::annulus(BoundaryRole::S, BoundaryRole::Gamma)).unwrap()
    }

    #[test]
    fn radial_weight_inner() {
        let d = annulus(1.0, 2.0);
        let phi = build_radial_weight(&d, BoundaryId::Inner).unwrap();
        assert!((phi.at(8, 3) - 0.5).abs() < 1e-15);
        let delta = validate_weight(&phi, BoundaryId::Inner, DEFAULT_DELTA_MIN).unwrap();
        assert!((delta - 1.0).abs() < 1e-10);
    }

    #[test]
    fn radial_weight_outer() {
        let d = annulus(0.5, 1.0);
        let phi = build_radial_weight(&d, BoundaryId::Outer).unwrap();
        assert!((phi.at(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(phi.at(16, 5), 0.0);
        let delta = validate_weight(&phi, BoundaryId::Outer, DEFAULT_DELTA_MIN).unwrap();
        assert!((delta - 1.0).abs() < 1e-10);
    }

    #[test]
    fn radial_weight_rejects_disk() {
        let d = build_disk(1.0, 16, 32, BoundaryRole::S).unwrap();
        assert_eq!(
            build_radial_weight(&d, BoundaryId::Outer).unwrap_err().kind(),
            "UnsupportedGeometry"
        );
    }

    fn condition(e: Error) -> WeightCondition {
        match e {
            Error::WeightViolation { condition, .. } => condition,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_weight_fails_gradient_floor() {
        let d = annulus(1.0, 2.0);
        let phi = GridField::from_polar(&d, |r, _| (r - 1.0) * (r - 1.0));
        let e = validate_weight(&phi, BoundaryId::Inner, DEFAULT_DELTA_MIN).unwrap_err();
        assert_eq!(condition(e), WeightCondition::GradientFloor);
    }

    #[test]
    fn negative_weight_fails_positivity() {
        let d = annulus(1.0, 2.0);
        let phi = GridField::from_polar(&d, |r, _| r - 1.5);
        let e = validate_weight(&phi, BoundaryId::Inner, DEFAULT_DELTA_MIN).unwrap_err();
        assert_eq!(condition(e), WeightCondition::Positive);
    }

    #[test]
    fn nonvanishing_weight_fails() {
        let d = annulus(1.0, 2.0);
        let phi = GridField::from_polar(&d, |r, _| r - 0.9);
        let e = validate_weight(&phi, BoundaryId::Inner, DEFAULT_DELTA_MIN).unwrap_err();
        assert_eq!(condition(e), WeightCondition::VanishesOnBoundary);
    }

    #[test]
    fn factors_at_zero_weight() {
        let d = annulus(1.0, 2.0);
        let phi = build_radial_weight(&d, BoundaryId::Inner).unwrap();
        let w = EllipticWeight::new(phi, BoundaryId::Inner, 1.0, 1.0, DEFAULT_DELTA_MIN).unwrap();
        let f = carleman_factors(&w, ExponentShift::None).unwrap();
        let k = d.index(0, 4);
        assert!((f.sigma.values[k] - 1.0).abs() < 1e-15);
        assert!((f.e2sphi.values[k] - core::f64::consts::E.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn sigma_arithmetic() {
        let d = annulus(1.0, 2.0);
        let phi = build_radial_weight(&d, BoundaryId::Inner).unwrap();
        let w = EllipticWeight::new(phi, BoundaryId::Inner, 3.0, 10.0, DEFAULT_DELTA_MIN).unwrap();
        let k = d.index(16, 0);
        // phi = 1 on the outer circle
        assert!((w.sigma.values[k] - 602.566_107_6).abs() < 1e-6);
        let w2 = w.with_params(3.0, 20.0).unwrap();
        assert!((w2.sigma.values[k] - 2.0 * w.sigma.values[k]).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_reported_unless_shifted() {
        let d = annulus(1.0, 2.0);
        let w = EllipticWeight::radial(&d, BoundaryId::Inner, 3.0, 160.0).unwrap();
        assert_eq!(
            carleman_factors(&w, ExponentShift::None).unwrap_err().kind(),
            "ParameterOverflow"
        );
        let f = carleman_factors(&w, ExponentShift::Max).unwrap();
        assert!(f.e2sphi.values.iter().all(|v| v.is_finite() && *v <= 1.0));
    }

    #[test]
    fn parabolic_weight_shape() {
        let d = annulus(0.5, 1.0);
        let phi = build_radial_weight(&d, BoundaryId::Outer).unwrap();
        let w = build_parabolic_weight(&phi, 1.0, 16, 2.0, 10.0).unwrap();
        assert_eq!(w.t_grid.len(), 17);
        assert!((w.t_grid[8] - 0.5).abs() < 1e-15);
        assert!((w.ell[8] - 4.0).abs() < 1e-12);
        assert!((w.t_grid[0] - 1.0 / 64.0).abs() < 1e-15);
        for k in 0..w.t_grid.len() {
            assert!(w.ell[k] >= 4.0 - 1e-12);
            for node in 0..d.node_count() {
                assert!(w.varphi(k, node) < 0.0);
                assert!(w.xi(k, node) > 0.0);
            }
        }
        let top = (0..w.t_grid.len())
            .flat_map(|k| (0..d.node_count()).map(move |n| (k, n)))
            .map(|(k, n)| w.exponent(k, n))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((top - w.max_exponent()).abs() <= 1e-12 * top.abs());
    }
}
