//! Both sides of the elliptic and parabolic Carleman inequalities, the default
//! test banks and `(gamma, s)` sweeps with stable-region detection.
//!
//! Every weighted integrand carries `exp(2 s varphi - shift)`. The terms are
//! accumulated with `exp(2 s varphi - top)`, `top` the largest exponent on the
//! grid, and rescaled by the single factor `exp(top - shift)` at the end, so
//! changing the shift multiplies all five terms by the same number.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{boundary_curve, BoundaryId, GridDomain, GridField};
use crate::riemannian::{
    arclength_derivative, dnu_g, euclidean_gradient, laplace_beltrami, smooth_bump, MetricField,
    PotentialField, VectorField,
};
use crate::special::bessel_k0;
use crate::weights::{ExponentShift, ParabolicWeight, EXPONENT_BUDGET};
use crate::{Error, Result};

/// Right-hand sides at or below this are treated as zero.
pub const RHS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarlemanSides {
    pub lhs_interior: f64,
    pub lhs_upsilon: f64,
    pub rhs_pde: f64,
    pub rhs_pi: f64,
    pub rhs_tau: f64,
    pub s: f64,
    pub gamma: f64,
    pub exponent_shift: f64,
}

impl CarlemanSides {
    pub fn lhs(&self) -> f64 {
        self.lhs_interior + self.lhs_upsilon
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_pde + self.rhs_pi + self.rhs_tau
    }

    /// `lhs / rhs`, or `None` when the right-hand side vanishes.
    pub fn ratio(&self) -> Option<f64> {
        let rhs = self.rhs();
        if rhs <= RHS_FLOOR {
            None
        } else {
            Some(self.lhs() / rhs)
        }
    }

    pub fn terms(&self) -> [f64; 5] {
        [
            self.lhs_interior,
            self.lhs_upsilon,
            self.rhs_pde,
            self.rhs_pi,
            self.rhs_tau,
        ]
    }

    fn scaled(mut self, c: f64) -> Self {
        self.lhs_interior *= c;
        self.lhs_upsilon *= c;
        self.rhs_pde *= c;
        self.rhs_pi *= c;
        self.rhs_tau *= c;
        self
    }
}

fn resolve_shift(top: f64, shift: ExponentShift) -> Result<(f64, f64)> {
    let shift = match shift {
        ExponentShift::None => 0.0,
        ExponentShift::Max => top,
        ExponentShift::Fixed(c) => c,
    };
    let rescale = top - shift;
    if !(rescale <= EXPONENT_BUDGET) {
        return Err(Error::ParameterOverflow { exponent: rescale });
    }
    Ok((shift, rescale.exp()))
}

fn check_params(gamma: f64, s: f64) -> Result<()> {
    if !(gamma > 0.0 && s > 0.0 && gamma.is_finite() && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma}, s = {s} must be positive"
        )));
    }
    Ok(())
}

fn other(id: BoundaryId) -> BoundaryId {
    match id {
        BoundaryId::Inner => BoundaryId::Outer,
        BoundaryId::Outer => BoundaryId::Inner,
    }
}

fn sq_norm(v: &VectorField, k: usize) -> f64 {
    v.x[k] * v.x[k] + v.y[k] * v.y[k]
}

/// `(weight, phi, a, b, c, d)`: a quadrature weight, the weight function and up
/// to four squared quantities at a node.
type Node = [f64; 6];

struct EllipticTerms {
    /// `a = |grad u|^2`, `b = u^2`, `c = |P u|^2`
    interior: Vec<Node>,
    /// `a = |d_{nu_g} u|^2`, `b = u^2`, `c = |grad_tau u|^2`
    upsilon: Vec<Node>,
    /// `a = |grad u|^2`, `b = u^2`
    pi: Vec<Node>,
}

fn elliptic_terms(
    phi: &GridField,
    upsilon: BoundaryId,
    g: &MetricField,
    p: &PotentialField,
    u: &GridField,
) -> Result<EllipticTerms> {
    let dom = u.domain;
    if phi.domain != dom || g.domain != dom || p.p.len() != dom.node_count() {
        return Err(Error::IncompatibleData("fields live on different grids".into()));
    }
    let grad = euclidean_gradient(u);
    let lap = laplace_beltrami(g, u);
    let vw = dom.volume_weights();
    let interior = (0..dom.node_count())
        .filter(|&k| vw[k] != 0.0)
        .map(|k| {
            let pu = -lap.values[k] + p.p[k] * u.values[k];
            [vw[k], phi.values[k], sq_norm(&grad, k), u.values[k] * u.values[k], pu * pu, 0.0]
        })
        .collect();

    let ups = boundary_curve(&dom, upsilon)?;
    let dn = dnu_g(g, u, &ups);
    let tr = ups.trace(u);
    let tau = arclength_derivative(&tr, ups.radius);
    let upsilon_terms = (0..ups.len())
        .map(|j| {
            let k = ups.nodes[j];
            [ups.ds[j], phi.values[k], dn[j] * dn[j], tr[j] * tr[j], tau[j] * tau[j], 0.0]
        })
        .collect();

    let pic = boundary_curve(&dom, other(upsilon))?;
    let pi = (0..pic.len())
        .map(|j| {
            let k = pic.nodes[j];
            [pic.ds[j], phi.values[k], sq_norm(&grad, k), u.values[k] * u.values[k], 0.0, 0.0]
        })
        .collect();
    Ok(EllipticTerms {
        interior,
        upsilon: upsilon_terms,
        pi,
    })
}

impl EllipticTerms {
    fn sides(&self, gamma: f64, s: f64, shift: ExponentShift) -> Result<CarlemanSides> {
        check_params(gamma, s)?;
        let big = |phi: f64| (gamma * phi).exp();
        let top = self
            .interior
            .iter()
            .chain(&self.upsilon)
            .chain(&self.pi)
            .fold(f64::NEG_INFINITY, |m, n| m.max(2.0 * s * big(n[1])));
        let (shift, rescale) = resolve_shift(top, shift)?;
        let (mut li, mut lu, mut rp, mut rpi, mut rt) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for n in &self.interior {
            let vp = big(n[1]);
            let e = (2.0 * s * vp - top).exp() * n[0];
            let sigma = s * gamma * vp;
            li += e * sigma * gamma * (n[2] + sigma * sigma * n[3]);
            rp += e * n[4];
        }
        for n in &self.upsilon {
            let vp = big(n[1]);
            let e = (2.0 * s * vp - top).exp() * n[0];
            let sigma = s * gamma * vp;
            lu += e * sigma * (n[2] + sigma * sigma * n[3]);
            rt += e * sigma * n[4];
        }
        for n in &self.pi {
            let vp = big(n[1]);
            let e = (2.0 * s * vp - top).exp() * n[0];
            let sigma = s * gamma * vp;
            rpi += e * sigma * (n[2] + sigma * sigma * n[3]);
        }
        Ok(CarlemanSides {
            lhs_interior: li,
            lhs_upsilon: lu,
            rhs_pde: rp,
            rhs_pi: rpi,
            rhs_tau: rt,
            s,
            gamma,
            exponent_shift: shift,
        }
        .scaled(rescale))
    }
}

/// Both sides of the elliptic inequality for the weight `phi` (vanishing on
/// `upsilon`) at a single `(gamma, s)`. `Pi` is the other boundary circle.
pub fn elliptic_sides(
    w: &crate::weights::EllipticWeight,
    g: &MetricField,
    p: &PotentialField,
    u: &GridField,
    shift: ExponentShift,
) -> Result<CarlemanSides> {
    elliptic_terms(&w.phi, w.upsilon, g, p, u)?.sides(w.gamma, w.s, shift)
}

/// Elliptic sides at every `(gamma, s)` of `params`, sharing the derivative
/// work. Each point uses its own maximal-exponent shift unless `shift` fixes one.
pub fn elliptic_sides_many(
    phi: &GridField,
    upsilon: BoundaryId,
    g: &MetricField,
    p: &PotentialField,
    u: &GridField,
    params: &[(f64, f64)],
    shift: ExponentShift,
) -> Result<Vec<Result<CarlemanSides>>> {
    let terms = elliptic_terms(phi, upsilon, g, p, u)?;
    Ok(params
        .iter()
        .map(|&(gamma, s)| terms.sides(gamma, s, shift))
        .collect())
}

/// One time slice of a space-time field: `u(t_k)` and `d_t u(t_k)`.
pub type Slice = (GridField, GridField);

/// Both sides of the parabolic inequality for several weights sharing one
/// time grid. `slice(k, t_k)` supplies the field at the weight's `k`-th time
/// node; each slice is requested once.
pub fn parabolic_sides_many(
    weights: &[ParabolicWeight],
    upsilon: BoundaryId,
    g: &MetricField,
    mut slice: impl FnMut(usize, f64) -> Result<Slice>,
    shift: ExponentShift,
) -> Result<Vec<CarlemanSides>> {
    let Some(first) = weights.first() else {
        return Ok(Vec::new());
    };
    let dom = first.phi_x.domain;
    if g.domain != dom {
        return Err(Error::IncompatibleData("metric and weight grids differ".into()));
    }
    if weights.iter().any(|w| w.t_grid != first.t_grid || w.phi_x.domain != dom) {
        return Err(Error::IncompatibleData("weights must share their grids".into()));
    }
    let tw = first.time_weights();
    let vw = dom.volume_weights();
    let ups = boundary_curve(&dom, upsilon)?;
    let pic = boundary_curve(&dom, other(upsilon))?;
    let mut tops = Vec::with_capacity(weights.len());
    let mut acc = Vec::with_capacity(weights.len());
    for w in weights {
        let top = w.max_exponent();
        let (sh, rescale) = resolve_shift(top, shift)?;
        tops.push(top);
        acc.push((
            CarlemanSides {
                lhs_interior: 0.0,
                lhs_upsilon: 0.0,
                rhs_pde: 0.0,
                rhs_pi: 0.0,
                rhs_tau: 0.0,
                s: w.s,
                gamma: w.gamma,
                exponent_shift: sh,
            },
            rescale,
        ));
    }
    for (k, &t) in first.t_grid.iter().enumerate() {
        let (u, ut) = slice(k, t)?;
        if u.domain != dom || ut.domain != dom {
            return Err(Error::IncompatibleData("slice does not match the weight grid".into()));
        }
        let grad = euclidean_gradient(&u);
        let lap = laplace_beltrami(g, &u);
        let dn = dnu_g(g, &u, &ups);
        let tr = ups.trace(&u);
        let tau = arclength_derivative(&tr, ups.radius);
        for ((w, (sides, _)), &top) in weights.iter().zip(acc.iter_mut()).zip(&tops) {
            let weight = |node: usize| (w.exponent(k, node) - top).exp() * tw[k];
            let (gamma, s) = (w.gamma, w.s);
            let (mut li, mut rp) = (0.0, 0.0);
            for node in 0..dom.node_count() {
                if vw[node] == 0.0 {
                    continue;
                }
                let e = weight(node) * vw[node];
                let sigma = s * gamma * w.xi(k, node);
                let uu = u.values[node];
                li += e * gamma * sigma * (sq_norm(&grad, node) + sigma * sigma * uu * uu);
                let r = ut.values[node] - lap.values[node];
                rp += e * r * r;
            }
            let (mut lu, mut rt) = (0.0, 0.0);
            for j in 0..ups.len() {
                let node = ups.nodes[j];
                let e = weight(node) * ups.ds[j];
                let sigma = s * gamma * w.xi(k, node);
                let (uu, dt) = (tr[j], ut.values[node]);
                lu += e * sigma * (dn[j] * dn[j] + sigma * sigma * uu * uu);
                rt += e * (dt * dt / sigma + sigma * tau[j] * tau[j]);
            }
            let mut rpi = 0.0;
            for j in 0..pic.len() {
                let node = pic.nodes[j];
                let e = weight(node) * pic.ds[j];
                let sigma = s * gamma * w.xi(k, node);
                let (uu, dt) = (u.values[node], ut.values[node]);
                rpi += e * (dt * dt / sigma + sigma * sq_norm(&grad, node) + sigma * sigma * sigma * uu * uu);
            }
            sides.lhs_interior += li;
            sides.lhs_upsilon += lu;
            sides.rhs_pde += rp;
            sides.rhs_pi += rpi;
            sides.rhs_tau += rt;
        }
    }
    Ok(acc.into_iter().map(|(s, c)| s.scaled(c)).collect())
}

pub fn parabolic_sides(
    w: &ParabolicWeight,
    upsilon: BoundaryId,
    g: &MetricField,
    slice: impl FnMut(usize, f64) -> Result<Slice>,
    shift: ExponentShift,
) -> Result<CarlemanSides> {
    let mut v = parabolic_sides_many(core::slice::from_ref(w), upsilon, g, slice, shift)?;
    Ok(v.remove(0))
}

/// Members of the default elliptic test bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticMember {
    LogR,
    RCosTheta,
    R3Cos3Theta,
    K0Radial,
    Bump,
    BumpCos(u32),
}

/// Smooth bump centred at the middle of the annulus with half-width
/// `0.4 (b - a)`, so it vanishes near both circles.
pub fn annulus_bump(dom: &GridDomain, r: f64) -> f64 {
    let mid = 0.5 * (dom.r_inner + dom.r_outer);
    smooth_bump((r - mid) / (0.4 * (dom.r_outer - dom.r_inner)))
}

impl EllipticMember {
    pub fn id(&self) -> String {
        match self {
            EllipticMember::LogR => "log_r".into(),
            EllipticMember::RCosTheta => "r_cos_theta".into(),
            EllipticMember::R3Cos3Theta => "r3_cos_3theta".into(),
            EllipticMember::K0Radial => "k0_radial".into(),
            EllipticMember::Bump => "bump".into(),
            EllipticMember::BumpCos(k) => format!("bump_cos_{k}theta"),
        }
    }

    pub fn field(&self, dom: &GridDomain) -> GridField {
        // K_0 and the bump depend on the ring only
        let radial: Vec<f64> = (0..=dom.n_r)
            .map(|i| {
                let r = dom.radius(i);
                match *self {
                    EllipticMember::K0Radial => bessel_k0(r),
                    EllipticMember::Bump | EllipticMember::BumpCos(_) => annulus_bump(dom, r),
                    _ => 0.0,
                }
            })
            .collect();
        let mut u = GridField::zeros(dom);
        for (idx, v) in u.values.iter_mut().enumerate() {
            let (i, j) = dom.ring_and_angle(idx);
            let (r, t) = (dom.radius(i), dom.theta(j));
            *v = match *self {
                EllipticMember::LogR => r.ln(),
                EllipticMember::RCosTheta => r * t.cos(),
                EllipticMember::R3Cos3Theta => r * r * r * (3.0 * t).cos(),
                EllipticMember::K0Radial | EllipticMember::Bump => radial[i],
                EllipticMember::BumpCos(k) => radial[i] * (k as f64 * t).cos(),
            };
        }
        u
    }
}

/// `{log r, r cos theta, r^3 cos 3 theta, K_0(r), bump, bump cos k theta for k = 1, 2, 5}`.
pub fn elliptic_bank() -> Vec<EllipticMember> {
    vec![
        EllipticMember::LogR,
        EllipticMember::RCosTheta,
        EllipticMember::R3Cos3Theta,
        EllipticMember::K0Radial,
        EllipticMember::Bump,
        EllipticMember::BumpCos(1),
        EllipticMember::BumpCos(2),
        EllipticMember::BumpCos(5),
    ]
}

/// Members of the default space-time test bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParabolicMember {
    /// `e^{-t} r cos theta`
    DecayingRCos,
    /// `r^2 + 4 t`
    Paraboloid,
    /// `bump(r) cos 2 theta (1 + t)`
    GrowingBump,
    /// `e^{-2t} K_0(r)`
    DecayingK0,
}

impl ParabolicMember {
    pub fn id(&self) -> &'static str {
        match self {
            ParabolicMember::DecayingRCos => "exp_r_cos_theta",
            ParabolicMember::Paraboloid => "r2_plus_4t",
            ParabolicMember::GrowingBump => "bump_cos_2theta_linear",
            ParabolicMember::DecayingK0 => "exp_k0_radial",
        }
    }

    /// `(u, u_t)` at `(t, r, theta)`.
    pub fn eval(&self, dom: &GridDomain, t: f64, r: f64, th: f64) -> (f64, f64) {
        self.combine(self.radial(dom, r), t, r, th)
    }

    /// The time-independent radial factor, where one is expensive.
    fn radial(&self, dom: &GridDomain, r: f64) -> f64 {
        match self {
            ParabolicMember::GrowingBump => annulus_bump(dom, r),
            ParabolicMember::DecayingK0 => bessel_k0(r),
            _ => 0.0,
        }
    }

    fn combine(&self, radial: f64, t: f64, r: f64, th: f64) -> (f64, f64) {
        match self {
            ParabolicMember::DecayingRCos => {
                let u = (-t).exp() * r * th.cos();
                (u, -u)
            }
            ParabolicMember::Paraboloid => (r * r + 4.0 * t, 4.0),
            ParabolicMember::GrowingBump => {
                let b = radial * (2.0 * th).cos();
                (b * (1.0 + t), b)
            }
            ParabolicMember::DecayingK0 => {
                let u = (-2.0 * t).exp() * radial;
                (u, -2.0 * u)
            }
        }
    }

    pub fn slice(&self, dom: &GridDomain, t: f64) -> Slice {
        let radial: Vec<f64> = (0..=dom.n_r).map(|i| self.radial(dom, dom.radius(i))).collect();
        let mut u = GridField::zeros(dom);
        let mut ut = GridField::zeros(dom);
        for idx in 0..dom.node_count() {
            let (i, j) = dom.ring_and_angle(idx);
            let (a, b) = self.combine(radial[i], t, dom.radius(i), dom.theta(j));
            u.values[idx] = a;
            ut.values[idx] = b;
        }
        (u, ut)
    }
}

pub fn parabolic_bank() -> Vec<ParabolicMember> {
    vec![
        ParabolicMember::DecayingRCos,
        ParabolicMember::Paraboloid,
        ParabolicMember::GrowingBump,
        ParabolicMember::DecayingK0,
    ]
}

/// Status of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointFlag {
    Ok,
    /// The right-hand side vanished after shifting.
    Indeterminate,
    /// Evaluation failed with the named error kind.
    Failed(String),
}

impl PointFlag {
    pub fn label(&self) -> String {
        match self {
            PointFlag::Ok => "ok".into(),
            PointFlag::Indeterminate => "indeterminate".into(),
            PointFlag::Failed(k) => format!("error:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub test_id: String,
    pub gamma: f64,
    pub s: f64,
    pub sides: Option<CarlemanSides>,
    pub ratio: Option<f64>,
    pub flag: PointFlag,
}

/// Corner of the detected stable region and its constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StableRegion {
    pub gamma_star: f64,
    pub s_star: f64,
    pub c_emp: f64,
    /// Largest bank ratio at `(max gamma, max s)`.
    pub ratio_at_max: f64,
    /// Number of `(gamma, s)` grid points in the region.
    pub points: usize,
}

/// Ratios may exceed the value at the grid maximum by this factor inside the
/// stable region.
pub const REGION_SLACK: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub test_ids: Vec<String>,
    pub gamma_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Ordered by test, then gamma, then s.
    pub points: Vec<SweepPoint>,
    pub region: Option<StableRegion>,
    /// Why no region was found.
    pub diagnostic: Option<String>,
}

impl SweepResult {
    /// Builds the result from evaluations ordered by test, then gamma, then s,
    /// and runs the region detection.
    pub fn assemble(
        test_ids: Vec<String>,
        gamma_grid: Vec<f64>,
        s_grid: Vec<f64>,
        evaluations: Vec<Result<CarlemanSides>>,
    ) -> Result<Self> {
        let (ng, ns) = (gamma_grid.len(), s_grid.len());
        if test_ids.is_empty() || ng == 0 || ns == 0 {
            return Err(Error::InvalidParameter("sweeps need a bank and nonempty grids".into()));
        }
        if evaluations.len() != test_ids.len() * ng * ns {
            return Err(Error::IncompatibleData("evaluation count does not match the grids".into()));
        }
        let mut points = Vec::with_capacity(evaluations.len());
        for (idx, ev) in evaluations.into_iter().enumerate() {
            let t = idx / (ng * ns);
            let (a, b) = ((idx / ns) % ng, idx % ns);
            let (sides, ratio, flag) = match ev {
                Ok(sd) => match sd.ratio() {
                    Some(r) => (Some(sd), Some(r), PointFlag::Ok),
                    None => (Some(sd), None, PointFlag::Indeterminate),
                },
                Err(e) => (None, None, PointFlag::Failed(e.kind().to_string())),
            };
            points.push(SweepPoint {
                test_id: test_ids[t].clone(),
                gamma: gamma_grid[a],
                s: s_grid[b],
                sides,
                ratio,
                flag,
            });
        }
        let mut out = Self {
            test_ids,
            gamma_grid,
            s_grid,
            points,
            region: None,
            diagnostic: None,
        };
        match out.detect() {
            Ok(r) => out.region = Some(r),
            Err(msg) => out.diagnostic = Some(msg),
        }
        Ok(out)
    }

    /// Largest determinate ratio over the bank at grid point `(a, b)`.
    pub fn bank_max(&self, a: usize, b: usize) -> Option<f64> {
        let (ng, ns) = (self.gamma_grid.len(), self.s_grid.len());
        (0..self.test_ids.len())
            .filter_map(|t| self.points[t * ng * ns + a * ns + b].ratio)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    }

    fn detect(&self) -> core::result::Result<StableRegion, String> {
        let (ng, ns) = (self.gamma_grid.len(), self.s_grid.len());
        let top = self
            .bank_max(ng - 1, ns - 1)
            .ok_or_else(|| "every ratio at the grid maximum is indeterminate".to_string())?;
        let bound = REGION_SLACK * top;
        let mut best: Option<(usize, usize, usize, f64)> = None;
        for a in 0..ng {
            for b in 0..ns {
                let mut c = f64::NEG_INFINITY;
                let mut valid = true;
                'scan: for aa in a..ng {
                    for bb in b..ns {
                        match self.bank_max(aa, bb) {
                            Some(r) if r <= bound => c = c.max(r),
                            _ => {
                                valid = false;
                                break 'scan;
                            }
                        }
                    }
                }
                if !valid {
                    continue;
                }
                let size = (ng - a) * (ns - b);
                if best.map_or(true, |(_, _, n, _)| size > n) {
                    best = Some((a, b, size, c));
                }
            }
        }
        let (a, b, n, c) = best.ok_or_else(|| "no corner satisfies the bound".to_string())?;
        Ok(StableRegion {
            gamma_star: self.gamma_grid[a],
            s_star: self.s_grid[b],
            c_emp: c,
            ratio_at_max: top,
            points: n,
        })
    }

    pub fn stable_region(&self) -> Result<&StableRegion> {
        self.region.as_ref().ok_or_else(|| {
            Error::NoStableRegion(self.diagnostic.clone().unwrap_or_default())
        })
    }
}

/// Sequential sweep: `eval(test, gamma, s)` for every bank member and grid point.
pub fn sweep(
    test_ids: Vec<String>,
    gamma_grid: Vec<f64>,
    s_grid: Vec<f64>,
    mut eval: impl FnMut(usize, f64, f64) -> Result<CarlemanSides>,
) -> Result<SweepResult> {
    let mut evaluations = Vec::new();
    for t in 0..test_ids.len() {
        for &g in &gamma_grid {
            for &s in &s_grid {
                evaluations.push(eval(t, g, s));
            }
        }
    }
    SweepResult::assemble(test_ids, gamma_grid, s_grid, evaluations)
}

/// `start * factor^k` for `k = 0..count`.
pub fn geometric_grid(start: f64, factor: f64, count: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(count);
    let mut x = start;
    for _ in 0..count {
        v.push(x);
        x *= factor;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_annulus, BoundaryRole, BoundaryTags};
    use crate::weights::{build_parabolic_weight, build_radial_weight, EllipticWeight};

    fn annulus(a: f64, b: f64, n_r: usize, n_t: usize) -> GridDomain {
        build_annulus(a, b, n_r, n_t, BoundaryTags::annulus(BoundaryRole::S, BoundaryRole::Gamma)).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_terms() {
        let d = annulus(1.0, 2.0, 32, 32);
        let w = EllipticWeight::radial(&d, BoundaryId::Inner, 3.0, 5.0).unwrap();
        let g = MetricField::euclidean(&d);
        let sd = elliptic_sides(&w, &g, &PotentialField::zero(&d), &GridField::zeros(&d), ExponentShift::Max)
            .unwrap();
        assert_eq!(sd.terms(), [0.0; 5]);
        assert_eq!(sd.ratio(), None);
    }

    #[test]
    fn doubling_quadruples() {
        let d = annulus(1.0, 2.0, 32, 32);
        let w = EllipticWeight::radial(&d, BoundaryId::Inner, 2.0, 4.0).unwrap();
        let g = MetricField::sample(crate::riemannian::MetricPreset::anisotropic_default(), &d).unwrap();
        let p = PotentialField::zero(&d);
        let u = GridField::from_polar(&d, |r, t| r * r * (2.0 * t).sin() + 1.0);
        let a = elliptic_sides(&w, &g, &p, &u, ExponentShift::Max).unwrap();
        let b = elliptic_sides(&w, &g, &p, &u.scaled(2.0), ExponentShift::Max).unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert_eq!(4.0 * x, y);
        }
    }

    #[test]
    fn shift_changes_no_ratio() {
        let d = annulus(1.0, 2.0, 32, 32);
        let w = EllipticWeight::radial(&d, BoundaryId::Inner, 3.0, 20.0).unwrap();
        let g = MetricField::euclidean(&d);
        let p = PotentialField::zero(&d);
        let u = EllipticMember::BumpCos(2).field(&d);
        let a = elliptic_sides(&w, &g, &p, &u, ExponentShift::Max).unwrap();
        let b = elliptic_sides(&w, &g, &p, &u, ExponentShift::Fixed(a.exponent_shift - 300.0)).unwrap();
        let (ra, rb) = (a.ratio().unwrap(), b.ratio().unwrap());
        assert!((ra - rb).abs() <= 1e-12 * ra);
    }

    #[test]
    fn upsilon_term_grows_with_s() {
        let d = annulus(1.0, 2.0, 32, 32);
        let phi = build_radial_weight(&d, BoundaryId::Inner).unwrap();
        let g = MetricField::euclidean(&d);
        let p = PotentialField::zero(&d);
        let u = EllipticMember::RCosTheta.field(&d);
        let params: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&s| (1.0, s)).collect();
        let v = elliptic_sides_many(&phi, BoundaryId::Inner, &g, &p, &u, &params, ExponentShift::Fixed(0.0)).unwrap();
        for pair in v.windows(2) {
            assert!(pair[1].as_ref().unwrap().lhs_upsilon >= pair[0].as_ref().unwrap().lhs_upsilon);
        }
    }

    #[test]
    fn zero_bank_has_no_region() {
        let ids = vec!["zero".to_string()];
        let zero = CarlemanSides {
            lhs_interior: 0.0,
            lhs_upsilon: 0.0,
            rhs_pde: 0.0,
            rhs_pi: 0.0,
            rhs_tau: 0.0,
            s: 1.0,
            gamma: 1.0,
            exponent_shift: 0.0,
        };
        let r = sweep(ids, vec![1.0], vec![1.0, 2.0], |_, _, _| Ok(zero)).unwrap();
        assert!(r.points.iter().all(|p| p.flag == PointFlag::Indeterminate));
        assert_eq!(r.stable_region().unwrap_err().kind(), "NoStableRegion");
    }

    #[test]
    fn single_point_sweep() {
        let base = CarlemanSides {
            lhs_interior: 3.0,
            lhs_upsilon: 0.0,
            rhs_pde: 1.0,
            rhs_pi: 1.0,
            rhs_tau: 0.0,
            s: 1.0,
            gamma: 1.0,
            exponent_shift: 0.0,
        };
        let r = sweep(vec!["a".into()], vec![1.0], vec![1.0], |_, _, _| Ok(base)).unwrap();
        let reg = r.stable_region().unwrap();
        assert_eq!(reg.c_emp, 1.5);
        assert_eq!(reg.points, 1);
    }

    #[test]
    fn region_detection_picks_largest_corner() {
        // ratio 10/s for s in {1, 2, 4, 8}: bound 1.2 * 1.25 admits s = 8 only
        let r = sweep(vec!["a".into()], vec![1.0, 2.0], vec![1.0, 2.0, 4.0, 8.0], |_, g, s| {
            Ok(CarlemanSides {
                lhs_interior: 10.0 / s + 0.01 * g,
                lhs_upsilon: 0.0,
                rhs_pde: 1.0,
                rhs_pi: 0.0,
                rhs_tau: 0.0,
                s,
                gamma: g,
                exponent_shift: 0.0,
            })
        })
        .unwrap();
        let reg = r.stable_region().unwrap();
        assert_eq!((reg.gamma_star, reg.s_star, reg.points), (1.0, 8.0, 2));
        assert!((reg.c_emp - 1.27).abs() < 1e-12);
    }

    #[test]
    fn parabolic_zero_and_homogeneity() {
        let d = annulus(0.5, 1.0, 16, 32);
        let phi = build_radial_weight(&d, BoundaryId::Outer).unwrap();
        let w = build_parabolic_weight(&phi, 1.0, 16, 2.0, 1.0).unwrap();
        let g = MetricField::euclidean(&d);
        let zero = parabolic_sides(&w, BoundaryId::Outer, &g, |_, _| Ok((GridField::zeros(&d), GridField::zeros(&d))), ExponentShift::Max).unwrap();
        assert_eq!(zero.terms(), [0.0; 5]);
        let m = ParabolicMember::DecayingRCos;
        let a = parabolic_sides(&w, BoundaryId::Outer, &g, |_, t| Ok(m.slice(&d, t)), ExponentShift::Max).unwrap();
        let b = parabolic_sides(
            &w,
            BoundaryId::Outer,
            &g,
            |_, t| {
                let (u, ut) = m.slice(&d, t);
                Ok((u.scaled(3.0), ut.scaled(3.0)))
            },
            ExponentShift::Max,
        )
        .unwrap();
        for (x, y) in a.terms().iter().zip(b.terms()) {
            assert!((9.0 * x - y).abs() <= 1e-12 * y.abs());
        }
    }
}
