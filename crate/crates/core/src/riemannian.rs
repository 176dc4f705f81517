//! Metric tensors and the discrete differential operators built from them.
//!
//! Metrics are closed-form Cartesian tensor fields `g_ij(x)`. On the polar grid
//! the Laplace-Beltrami operator is written in divergence form
//! `Delta_g u = W^{-1} d_a (A^{ab} d_b u)` with `W = r sqrt|g|` and
//! `A = W G^{-1}`, `G` the metric pulled back to `(r, theta)`. Interior nodes use
//! a finite-volume flux stencil (the same one the solvers assemble, so it is
//! symmetric); boundary rings use second-order one-sided differences of the
//! expanded form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{BoundaryCurve, GridDomain, GridField};
use crate::{Error, Result};

/// Symmetric 2x2 tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub fn diag(a: f64, b: f64) -> Self {
        Self {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    #[inline]
    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2 {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    #[inline]
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }

    /// `v^T M w`
    #[inline]
    pub fn bilinear(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        let mw = self.apply(w);
        v[0] * mw[0] + v[1] * mw[1]
    }

    #[inline]
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.bilinear(v, v)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        m - d
    }
}

/// Closed-form metric families.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum MetricPreset {
    Euclidean,
    /// `g = c I`
    Conformal { c: f64 },
    /// `g = diag(1 + amplitude sin^2(theta) rho(|x|), 1)` with `rho` a smooth
    /// bump of height one supported in `|r - bump_center| < bump_width`.
    Anisotropic {
        amplitude: f64,
        bump_center: f64,
        bump_width: f64,
    },
}

impl Default for MetricPreset {
    fn default() -> Self {
        MetricPreset::Euclidean
    }
}

/// `exp(1 - 1/(1 - x^2))` on `|x| < 1`, zero outside; peak value 1.
pub fn smooth_bump(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// Polar flux coefficients at a point: `A^{rr}, A^{r theta}, A^{theta theta}`
/// and the volume density `W = r sqrt|g|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCoeffs {
    pub a_rr: f64,
    pub a_rt: f64,
    pub a_tt: f64,
    pub w: f64,
}

impl MetricPreset {
    pub fn anisotropic_default() -> Self {
        MetricPreset::Anisotropic {
            amplitude: 0.5,
            bump_center: 1.5,
            bump_width: 0.75,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricPreset::Euclidean => Ok(()),
            MetricPreset::Conformal { c } if c > 0.0 && c.is_finite() => Ok(()),
            MetricPreset::Conformal { c } => {
                Err(Error::InvalidMetric(format!("conformal factor {c} must be positive")))
            }
            MetricPreset::Anisotropic {
                amplitude,
                bump_center,
                bump_width,
            } => {
                if !(amplitude > -1.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidMetric(format!(
                        "amplitude {amplitude} must exceed -1"
                    )));
                }
                if !(bump_width > 0.0 && bump_center.is_finite() && bump_width.is_finite()) {
                    return Err(Error::InvalidMetric("bump width must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Whether `g` is a multiple of the identity (no mixed polar coefficient).
    pub fn is_conformal(&self) -> bool {
        matches!(self, MetricPreset::Euclidean | MetricPreset::Conformal { .. })
    }

    /// Cartesian components `g_ij(x, y)`.
    pub fn at(&self, x: f64, y: f64) -> Sym2 {
        match *self {
            MetricPreset::Euclidean => Sym2::IDENTITY,
            MetricPreset::Conformal { c } => Sym2::diag(c, c),
            MetricPreset::Anisotropic {
                amplitude,
                bump_center,
                bump_width,
            } => {
                let r2 = x * x + y * y;
                if r2 == 0.0 {
                    return Sym2::IDENTITY;
                }
                let rho = smooth_bump((r2.sqrt() - bump_center) / bump_width);
                Sym2::diag(1.0 + amplitude * (y * y / r2) * rho, 1.0)
            }
        }
    }

    /// Polar coefficients at `center + r (cos t, sin t)`; requires `r > 0`.
    pub fn polar(&self, center: [f64; 2], r: f64, t: f64) -> PolarCoeffs {
        let (s, c) = t.sin_cos();
        let g = self.at(center[0] + r * c, center[1] + r * s);
        let sq = g.det().sqrt();
        let gi = g.inverse();
        let er = [c, s];
        let et = [-s, c];
        PolarCoeffs {
            a_rr: r * sq * gi.quad(er),
            a_rt: sq * gi.bilinear(er, et),
            a_tt: sq * gi.quad(et) / r,
            w: r * sq,
        }
    }
}

/// Metric sampled on every node of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub domain: GridDomain,
    pub preset: MetricPreset,
    pub g: Vec<Sym2>,
    pub g_inv: Vec<Sym2>,
    pub det_g: Vec<f64>,
    /// Lower bound of the eigenvalues of `g` over the nodes.
    pub theta_ell: f64,
}

impl MetricField {
    pub fn sample(preset: MetricPreset, domain: &GridDomain) -> Result<Self> {
        preset.validate()?;
        let n = domain.node_count();
        let mut g = Vec::with_capacity(n);
        let mut g_inv = Vec::with_capacity(n);
        let mut det_g = Vec::with_capacity(n);
        let mut theta_ell = f64::INFINITY;
        for idx in 0..n {
            let (i, j) = domain.ring_and_angle(idx);
            let [x, y] = domain.position(i, j);
            let gij = preset.at(x, y);
            let d = gij.det();
            let lam = gij.min_eigenvalue();
            if !(d > 0.0) || !(lam > 0.0) {
                return Err(Error::InvalidMetric(format!(
                    "metric not positive definite at node {idx}"
                )));
            }
            theta_ell = theta_ell.min(lam);
            g.push(gij);
            g_inv.push(gij.inverse());
            det_g.push(d);
        }
        Ok(Self {
            domain: *domain,
            preset,
            g,
            g_inv,
            det_g,
            theta_ell,
        })
    }

    pub fn euclidean(domain: &GridDomain) -> Self {
        Self::sample(MetricPreset::Euclidean, domain).expect("identity metric is valid")
    }
}

/// Potential `p` families.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum PotentialPreset {
    Constant { value: f64 },
    /// `p = base + slope |x|^2`
    Radial { base: f64, slope: f64 },
}

impl Default for PotentialPreset {
    fn default() -> Self {
        PotentialPreset::Constant { value: 0.0 }
    }
}

impl PotentialPreset {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        match *self {
            PotentialPreset::Constant { value } => value,
            PotentialPreset::Radial { base, slope } => base + slope * (x * x + y * y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub p: Vec<f64>,
    /// Declared lower bound; zero means none is claimed.
    pub eta: f64,
}

impl PotentialField {
    pub fn sample(preset: PotentialPreset, eta: f64, domain: &GridDomain) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta = {eta} must be >= 0")));
        }
        let p: Vec<f64> = (0..domain.node_count())
            .map(|idx| {
                let (i, j) = domain.ring_and_angle(idx);
                let [x, y] = domain.position(i, j);
                preset.at(x, y)
            })
            .collect();
        if eta > 0.0 {
            if let Some((k, v)) = p.iter().enumerate().find(|(_, &v)| !(v >= eta)) {
                return Err(Error::InvalidParameter(format!(
                    "p = {v} < eta = {eta} at node {k}"
                )));
            }
        }
        Ok(Self { p, eta })
    }

    pub fn zero(domain: &GridDomain) -> Self {
        Self {
            p: vec![0.0; domain.node_count()],
            eta: 0.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.p.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Finite-volume stencil of `int_cell W Delta_g u` on a polar grid.
///
/// Cells are `[r_i - h/2, r_i + h/2] x [theta_j - dtheta/2, theta_j + dtheta/2]`;
/// the disk centre owns the small disk of radius `h/2`. Mixed fluxes use
/// centred differences, which keeps the assembled matrix symmetric. On a disk
/// the mixed terms of ring 1 that would touch the centre are dropped; every
/// shipped metric has `A^{r theta} = 0` near the origin.
pub struct FluxStencil {
    pub domain: GridDomain,
    pub preset: MetricPreset,
    a_rt: Option<Vec<f64>>,
}

impl FluxStencil {
    pub fn new(domain: &GridDomain, preset: MetricPreset) -> Self {
        let a_rt = if preset.is_conformal() {
            None
        } else {
            let mut v = vec![0.0; domain.node_count()];
            for (idx, slot) in v.iter_mut().enumerate() {
                let (i, j) = domain.ring_and_angle(idx);
                let r = domain.radius(i);
                if r > 0.0 {
                    *slot = preset.polar(domain.center, r, domain.theta(j)).a_rt;
                }
            }
            Some(v)
        };
        Self {
            domain: *domain,
            preset,
            a_rt,
        }
    }

    /// Measure of the control volume of node `(i, j)`.
    pub fn volume(&self, i: usize, j: usize) -> f64 {
        let d = &self.domain;
        let h = d.dr();
        if d.is_disk() && i == 0 {
            let g0 = self.preset.at(d.center[0], d.center[1]);
            return g0.det().sqrt() * PI * 0.25 * h * h;
        }
        self.preset.polar(d.center, d.radius(i), d.theta(j)).w * h * d.dtheta()
    }

    /// Emits `(node, coefficient)` pairs with `sum coef u(node) ~ vol Delta_g u`
    /// at a non-boundary node `(i, j)`.
    pub fn row(&self, i: usize, j: usize, emit: &mut impl FnMut(usize, f64)) {
        let d = &self.domain;
        let h = d.dr();
        let dth = d.dtheta();
        let n = d.n_theta;
        let c = d.center;
        if d.is_disk() && i == 0 {
            let mut diag = 0.0;
            for jj in 0..n {
                let k = self.preset.polar(c, 0.5 * h, d.theta(jj)).a_rr * dth / h;
                emit(d.index(1, jj), k);
                diag -= k;
            }
            emit(0, diag);
            return;
        }
        debug_assert!(!d.is_boundary_ring(i));
        let r = d.radius(i);
        let t = d.theta(j);
        let jp = (j + 1) % n;
        let jm = (j + n - 1) % n;
        let cp = self.preset.polar(c, r + 0.5 * h, t).a_rr * dth / h;
        let cm = self.preset.polar(c, r - 0.5 * h, t).a_rr * dth / h;
        let dp = self.preset.polar(c, r, t + 0.5 * dth).a_tt * h / dth;
        let dm = self.preset.polar(c, r, t - 0.5 * dth).a_tt * h / dth;
        emit(d.index(i + 1, j), cp);
        emit(d.index(i - 1, j), cm);
        emit(d.index(i, jp), dp);
        emit(d.index(i, jm), dm);
        emit(d.index(i, j), -(cp + cm + dp + dm));
        if let Some(a) = &self.a_rt {
            let touches_center = d.is_disk() && i == 1;
            let a_up = a[d.index(i + 1, j)];
            let a_dn = a[d.index(i - 1, j)];
            let a_jp = a[d.index(i, jp)];
            let a_jm = a[d.index(i, jm)];
            // d_r(A^{r theta} d_theta u)
            emit(d.index(i + 1, jp), 0.25 * a_up);
            emit(d.index(i + 1, jm), -0.25 * a_up);
            if !touches_center {
                emit(d.index(i - 1, jp), -0.25 * a_dn);
                emit(d.index(i - 1, jm), 0.25 * a_dn);
            }
            // d_theta(A^{theta r} d_r u)
            emit(d.index(i + 1, jp), 0.25 * a_jp);
            emit(d.index(i + 1, jm), -0.25 * a_jm);
            if !touches_center {
                emit(d.index(i - 1, jp), -0.25 * a_jp);
                emit(d.index(i - 1, jm), 0.25 * a_jm);
            }
        }
    }

    /// `vol * Delta_g u` at a non-boundary node.
    pub fn apply_at(&self, u: &GridField, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        self.row(i, j, &mut |k, c| acc += c * u.values[k]);
        acc
    }
}

/// First and second polar derivatives of `u` at `(i, j)`, second order. Radial
/// derivatives are one-sided on boundary rings.
struct PolarJet {
    u_r: f64,
    u_t: f64,
    u_rr: f64,
    u_tt: f64,
    u_rt: f64,
}

fn radial_first(d: &GridDomain, i: usize, f: impl Fn(usize) -> f64) -> f64 {
    let h = d.dr();
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if i == d.n_r {
        (3.0 * f(i) - 4.0 * f(i - 1) + f(i - 2)) / (2.0 * h)
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

fn radial_second(d: &GridDomain, i: usize, f: impl Fn(usize) -> f64) -> f64 {
    let h2 = d.dr() * d.dr();
    if i == 0 {
        (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
    } else if i == d.n_r {
        (2.0 * f(i) - 5.0 * f(i - 1) + 4.0 * f(i - 2) - f(i - 3)) / h2
    } else {
        (f(i + 1) - 2.0 * f(i) + f(i - 1)) / h2
    }
}

fn polar_jet(u: &GridField, i: usize, j: usize) -> PolarJet {
    let d = &u.domain;
    let n = d.n_theta;
    let dth = d.dtheta();
    let jp = (j + 1) % n;
    let jm = (j + n - 1) % n;
    let dtheta_at = |ii: usize| (u.at(ii, jp) - u.at(ii, jm)) / (2.0 * dth);
    PolarJet {
        u_r: radial_first(d, i, |ii| u.at(ii, j)),
        u_t: dtheta_at(i),
        u_rr: radial_second(d, i, |ii| u.at(ii, j)),
        u_tt: (u.at(i, jp) - 2.0 * u.at(i, j) + u.at(i, jm)) / (dth * dth),
        u_rt: radial_first(d, i, dtheta_at),
    }
}

/// Cartesian Euclidean gradient of `u` at node `(i, j)`.
///
/// Centred differences in the interior, one-sided radial differences on
/// boundary rings; at the disk centre the first Fourier mode of ring 1.
pub fn cartesian_gradient_at(u: &GridField, i: usize, j: usize) -> [f64; 2] {
    let d = &u.domain;
    if d.is_disk() && i == 0 {
        let h = d.dr();
        let n = d.n_theta;
        let (mut gx, mut gy) = (0.0, 0.0);
        for jj in 0..n {
            let t = d.theta(jj);
            let v = u.at(1, jj);
            gx += v * t.cos();
            gy += v * t.sin();
        }
        let scale = 2.0 / (n as f64 * h);
        return [gx * scale, gy * scale];
    }
    let d = &u.domain;
    let n = d.n_theta;
    let dth = d.dtheta();
    let u_r = radial_first(d, i, |ii| u.at(ii, j));
    let u_t = (u.at(i, (j + 1) % n) - u.at(i, (j + n - 1) % n)) / (2.0 * dth);
    let r = d.radius(i);
    let (s, c) = d.theta(j).sin_cos();
    [c * u_r - s * u_t / r, s * u_r + c * u_t / r]
}

/// Cartesian vector field on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub domain: GridDomain,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    #[inline]
    pub fn get(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }
}

/// Euclidean gradient `grad u` on every node.
pub fn euclidean_gradient(u: &GridField) -> VectorField {
    let d = u.domain;
    let n = d.node_count();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for k in 0..n {
        let (i, j) = d.ring_and_angle(k);
        let g = cartesian_gradient_at(u, i, j);
        x[k] = g[0];
        y[k] = g[1];
    }
    VectorField { domain: d, x, y }
}

/// `grad_g w = g^{ij} d_i w e_j`, Cartesian components.
pub fn grad_g(g: &MetricField, w: &GridField) -> VectorField {
    let mut v = euclidean_gradient(w);
    for k in 0..v.x.len() {
        let r = g.g_inv[k].apply([v.x[k], v.y[k]]);
        v.x[k] = r[0];
        v.y[k] = r[1];
    }
    v
}

/// Pointwise `g_ij X^i X^j`.
pub fn norm_g_sq(g: &MetricField, x: &VectorField) -> GridField {
    let values = (0..x.x.len()).map(|k| g.g[k].quad(x.get(k))).collect();
    GridField {
        domain: x.domain,
        values,
    }
}

/// Discrete `Delta_g u` on every node.
pub fn laplace_beltrami(g: &MetricField, u: &GridField) -> GridField {
    let stencil = FluxStencil::new(&u.domain, g.preset);
    laplace_beltrami_with(&stencil, u)
}

pub(crate) fn laplace_beltrami_with(stencil: &FluxStencil, u: &GridField) -> GridField {
    let d = u.domain;
    let mut out = vec![0.0; d.node_count()];
    for (k, slot) in out.iter_mut().enumerate() {
        let (i, j) = d.ring_and_angle(k);
        *slot = if d.is_boundary_ring(i) {
            expanded_laplace_beltrami(stencil.preset, u, i, j)
        } else {
            stencil.apply_at(u, i, j) / stencil.volume(i, j)
        };
    }
    GridField {
        domain: d,
        values: out,
    }
}

/// Non-conservative form on a boundary ring, with the coefficient derivatives
/// taken from the closed-form metric.
fn expanded_laplace_beltrami(preset: MetricPreset, u: &GridField, i: usize, j: usize) -> f64 {
    let d = &u.domain;
    let r = d.radius(i);
    let t = d.theta(j);
    let c = d.center;
    let a = preset.polar(c, r, t);
    let jet = polar_jet(u, i, j);
    let mut acc = a.a_rr * jet.u_rr + a.a_tt * jet.u_tt;
    let dr = 1e-5 * r.max(1.0);
    let dt = 1e-5;
    let ap = preset.polar(c, r + dr, t);
    let am = preset.polar(c, r - dr, t);
    let a_rr_r = (ap.a_rr - am.a_rr) / (2.0 * dr);
    acc += a_rr_r * jet.u_r;
    if !preset.is_conformal() {
        let bp = preset.polar(c, r, t + dt);
        let bm = preset.polar(c, r, t - dt);
        let a_rt_r = (ap.a_rt - am.a_rt) / (2.0 * dr);
        let a_rt_t = (bp.a_rt - bm.a_rt) / (2.0 * dt);
        let a_tt_t = (bp.a_tt - bm.a_tt) / (2.0 * dt);
        acc += a_rt_r * jet.u_t + 2.0 * a.a_rt * jet.u_rt + a_rt_t * jet.u_r + a_tt_t * jet.u_t;
    }
    acc / a.w
}

/// `nu_g^i = g^{ij} nu_j / sqrt(g^{kl} nu_k nu_l)` per curve node.
pub fn metric_normal(g: &MetricField, curve: &BoundaryCurve) -> Vec<[f64; 2]> {
    curve
        .nodes
        .iter()
        .zip(&curve.normal)
        .map(|(&k, &nu)| {
            let gi = &g.g_inv[k];
            let raised = gi.apply(nu);
            let norm = gi.quad(nu).sqrt();
            [raised[0] / norm, raised[1] / norm]
        })
        .collect()
}

/// Euclidean gradient of `u` at the curve nodes (same stencils as
/// [`euclidean_gradient`]).
pub fn gradient_on_curve(u: &GridField, curve: &BoundaryCurve) -> Vec<[f64; 2]> {
    (0..curve.len())
        .map(|j| cartesian_gradient_at(u, curve.ring, j))
        .collect()
}

/// `d_{nu_g} u = <nu_g, grad_g u>_g = nu_g . grad u` per curve node.
pub fn dnu_g(g: &MetricField, u: &GridField, curve: &BoundaryCurve) -> Vec<f64> {
    let nug = metric_normal(g, curve);
    gradient_on_curve(u, curve)
        .iter()
        .zip(&nug)
        .map(|(gr, n)| gr[0] * n[0] + gr[1] * n[1])
        .collect()
}

/// Euclidean tangential gradient of the trace on a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialGradient {
    /// Signed arclength derivative.
    pub derivative: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub components: Vec<[f64; 2]>,
}

/// Arclength derivative of a periodic trace sampled uniformly on a circle of
/// radius `radius`, by centred differences.
pub fn arclength_derivative(trace: &[f64], radius: f64) -> Vec<f64> {
    let n = trace.len();
    let dth = 2.0 * PI / n as f64;
    (0..n)
        .map(|j| (trace[(j + 1) % n] - trace[(j + n - 1) % n]) / (2.0 * dth * radius))
        .collect()
}

pub fn tangential_grad(u: &GridField, curve: &BoundaryCurve) -> TangentialGradient {
    let derivative = arclength_derivative(&curve.trace(u), curve.radius);
    let components = derivative
        .iter()
        .zip(&curve.theta)
        .map(|(dv, t)| [-dv * t.sin(), dv * t.cos()])
        .collect();
    TangentialGradient {
        magnitude: derivative.iter().map(|v| v.abs()).collect(),
        derivative,
        components,
    }
}

/// `|grad_{tau_g} u|_g^2` per curve node, where
/// `grad_{tau_g} u = grad_g u - (d_{nu_g} u) nu_g`.
pub fn tangential_grad_g(g: &MetricField, u: &GridField, curve: &BoundaryCurve) -> Vec<f64> {
    let nug = metric_normal(g, curve);
    gradient_on_curve(u, curve)
        .iter()
        .zip(&nug)
        .zip(&curve.nodes)
        .map(|((gr, n), &k)| {
            let x = g.g_inv[k].apply(*gr);
            let a = g.g[k].bilinear(*n, x);
            let y = [x[0] - a * n[0], x[1] - a * n[1]];
            g.g[k].quad(y)
        })
        .collect()
}

/// `|grad_g u|_g^2` per curve node from the same discrete gradient.
pub fn grad_g_norm_sq_on_curve(g: &MetricField, u: &GridField, curve: &BoundaryCurve) -> Vec<f64> {
    gradient_on_curve(u, curve)
        .iter()
        .zip(&curve.nodes)
        .map(|(gr, &k)| g.g_inv[k].quad(*gr))
        .collect()
}
