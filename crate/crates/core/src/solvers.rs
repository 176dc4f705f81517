//! Forward solvers: Dirichlet problems for `-Delta_g u + p u = 0` on a disk or
//! a truncated exterior annulus, and Crank-Nicolson stepping of
//! `u_t = Delta_g u + f` on a disk.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{BoundaryCurve, BoundaryId, DomainKind, GridDomain, GridField, NormalSense};
use crate::riemannian::{arclength_derivative, gradient_on_curve, FluxStencil, MetricField, PotentialField};
use crate::sparse::{pcg, CgStats, Csr, RingPreconditioner};
use crate::{Error, Result};

/// Default relative residual for every linear solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Default bound on `exp(-sqrt(eta) (R_inf - r_Gamma))`.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

/// Interior unknowns of a domain and the symmetric matrix
/// `kscale K + mscale M` acting on them, where `K` is the discrete
/// `-Delta_g + p` times the control volumes and `M` the lumped mass.
struct Operator {
    offset: usize,
    matrix: Csr,
    /// `(row, boundary node, coefficient)` couplings moved to the right-hand side.
    coupling: Vec<(usize, usize, f64)>,
    mass: Vec<f64>,
    blocks: Vec<Range<usize>>,
    stencil: FluxStencil,
}

fn unknown_range(dom: &GridDomain) -> Range<usize> {
    match dom.kind {
        DomainKind::Disk => 0..1 + (dom.n_r - 1) * dom.n_theta,
        DomainKind::Annulus => dom.n_theta..dom.n_r * dom.n_theta,
    }
}

impl Operator {
    fn assemble(stencil: FluxStencil, p: Option<&[f64]>, kscale: f64, mscale: f64) -> Self {
        let dom = stencil.domain;
        let range = unknown_range(&dom);
        let offset = range.start;
        let n = range.len();
        let mut rows = Vec::with_capacity(n);
        let mut coupling = Vec::new();
        let mut mass = Vec::with_capacity(n);
        for row in 0..n {
            let (i, j) = dom.ring_and_angle(row + offset);
            let vol = stencil.volume(i, j);
            let mut entries = Vec::with_capacity(9);
            stencil.row(i, j, &mut |node, c| {
                if range.contains(&node) {
                    entries.push((node - offset, -kscale * c));
                } else {
                    coupling.push((row, node, -kscale * c));
                }
            });
            let pv = p.map_or(0.0, |p| p[row + offset]);
            entries.push((row, kscale * pv * vol + mscale * vol));
            mass.push(vol);
            rows.push(entries);
        }
        let mut blocks = Vec::new();
        let mut start = 0;
        if dom.is_disk() {
            blocks.push(0..1);
            start = 1;
        }
        while start < n {
            blocks.push(start..start + dom.n_theta);
            start += dom.n_theta;
        }
        Self {
            offset,
            matrix: Csr::from_rows(n, rows),
            coupling,
            mass,
            blocks,
            stencil,
        }
    }

    /// Subtracts the boundary couplings for the full field `bnd` from `rhs`.
    fn lift(&self, bnd: &[f64], rhs: &mut [f64]) {
        for &(row, node, c) in &self.coupling {
            rhs[row] -= c * bnd[node];
        }
    }
}

/// Which inverse problem a Dirichlet problem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProblemKind {
    /// `-Delta_g v + p v = 0` in the disk `B`, `v = a` on its boundary circle.
    Interior,
    /// `-Delta_g u + p u = 0` outside the circle `S`, truncated at `R_inf`
    /// with `u = 0` there.
    ExteriorTruncated,
}

/// A Dirichlet problem on a grid. For `Interior` the domain is the disk `B`;
/// for `ExteriorTruncated` it is the annulus `(r_S, R_inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem {
    pub kind: ProblemKind,
    pub domain: GridDomain,
    pub metric: MetricField,
    pub potential: PotentialField,
    /// Values of the unknown data on `S`, one per angle.
    pub data: Vec<f64>,
    pub tolerance: f64,
}

impl EllipticProblem {
    pub fn new(
        kind: ProblemKind,
        metric: MetricField,
        potential: PotentialField,
        data: Vec<f64>,
    ) -> Result<Self> {
        let domain = metric.domain;
        match kind {
            ProblemKind::Interior if !domain.is_disk() => {
                return Err(Error::UnsupportedGeometry("interior problems live on a disk".into()))
            }
            ProblemKind::ExteriorTruncated if domain.is_disk() => {
                return Err(Error::UnsupportedGeometry(
                    "exterior problems live on an annulus".into(),
                ))
            }
            _ => {}
        }
        if potential.p.len() != domain.node_count() {
            return Err(Error::IncompatibleData("potential does not match the grid".into()));
        }
        match kind {
            ProblemKind::Interior if potential.min() < 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "interior problems need p >= 0 (min p = {})",
                    potential.min()
                )))
            }
            ProblemKind::ExteriorTruncated if !(potential.eta > 0.0) => {
                return Err(Error::InvalidParameter(
                    "exterior problems need p >= eta > 0".into(),
                ))
            }
            _ => {}
        }
        if data.len() != domain.n_theta {
            return Err(Error::IncompatibleData(format!(
                "{} boundary values for {} angles",
                data.len(),
                domain.n_theta
            )));
        }
        Ok(Self {
            kind,
            domain,
            metric,
            potential,
            data,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    /// Ring carrying the data.
    pub fn s_ring(&self) -> usize {
        match self.kind {
            ProblemKind::Interior => self.domain.n_r,
            ProblemKind::ExteriorTruncated => 0,
        }
    }

    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        if data.len() != self.domain.n_theta {
            return Err(Error::IncompatibleData("boundary data length".into()));
        }
        out.data = data;
        Ok(out)
    }
}

/// A solved field with solver metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub field: GridField,
    pub stats: CgStats,
    /// `exp(-sqrt(eta) (R_inf - r_Gamma))` for exterior solves.
    pub truncation_bound: Option<f64>,
}

fn solve_dirichlet(prob: &EllipticProblem) -> Result<(GridField, CgStats)> {
    let dom = prob.domain;
    let stencil = FluxStencil::new(&dom, prob.metric.preset);
    let op = Operator::assemble(stencil, Some(&prob.potential.p), 1.0, 0.0);
    let mut full = GridField::zeros(&dom);
    let ring = prob.s_ring();
    for (j, &v) in prob.data.iter().enumerate() {
        full.values[dom.index(ring, j)] = v;
    }
    let mut rhs = vec![0.0; op.matrix.n];
    op.lift(&full.values, &mut rhs);
    let pre = RingPreconditioner::new(&op.matrix, &op.blocks);
    let mut x = vec![0.0; op.matrix.n];
    let stats = pcg(&op.matrix, &rhs, &mut x, &pre, prob.tolerance)?;
    full.values[op.offset..op.offset + x.len()].copy_from_slice(&x);
    Ok((full, stats))
}

pub fn solve_interior(prob: &EllipticProblem) -> Result<Solution> {
    if prob.kind != ProblemKind::Interior {
        return Err(Error::IncompatibleData("not an interior problem".into()));
    }
    let (field, stats) = solve_dirichlet(prob)?;
    Ok(Solution {
        field,
        stats,
        truncation_bound: None,
    })
}

/// Truncation error proxy `exp(-sqrt(eta) (R_inf - r_gamma))`.
pub fn truncation_bound(eta: f64, r_inf: f64, r_gamma: f64) -> f64 {
    (-(eta.sqrt()) * (r_inf - r_gamma)).exp()
}

/// Solves on the problem's annulus, whose outer radius is `R_inf`, after
/// checking that the truncation bound at `r_gamma` is below `truncation_tol`.
pub fn solve_exterior_truncated(prob: &EllipticProblem, r_gamma: f64, truncation_tol: f64) -> Result<Solution> {
    if prob.kind != ProblemKind::ExteriorTruncated {
        return Err(Error::IncompatibleData("not an exterior problem".into()));
    }
    let bound = truncation_bound(prob.potential.eta, prob.domain.r_outer, r_gamma);
    if !(bound <= truncation_tol) {
        return Err(Error::TruncationTooSmall {
            bound,
            tolerance: truncation_tol,
        });
    }
    let (field, stats) = solve_dirichlet(prob)?;
    Ok(Solution {
        field,
        stats,
        truncation_bound: Some(bound),
    })
}

/// The measurement circle of radius `r`, with normal `+e_r`. Fails unless it
/// is a grid ring.
pub fn gamma_curve(dom: &GridDomain, r: f64) -> Result<BoundaryCurve> {
    match dom.ring_at_radius(r) {
        Some(i) if !(dom.is_disk() && i == 0) => BoundaryCurve::ring(dom, i, NormalSense::RadialOutward),
        _ => Err(Error::GammaOffGrid { radius: r }),
    }
}

/// Discrete `L^2` norm on a circle.
pub fn l2_norm(curve: &BoundaryCurve, w: &[f64]) -> f64 {
    curve.ds.iter().zip(w).map(|(d, v)| d * v * v).sum::<f64>().sqrt()
}

/// Discrete `H^1` norm on a circle: `L^2` of the trace plus `L^2` of its
/// arclength derivative.
pub fn h1_norm(curve: &BoundaryCurve, w: &[f64]) -> f64 {
    let dw = arclength_derivative(w, curve.radius);
    let l2 = l2_norm(curve, w);
    let d2 = l2_norm(curve, &dw);
    (l2 * l2 + d2 * d2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CauchyNorms {
    pub l2_trace: f64,
    pub h1_trace: f64,
    pub l2_normal: f64,
}

/// Trace and normal derivative on the measurement circle.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub radius: f64,
    pub theta: Vec<f64>,
    pub trace: Vec<f64>,
    pub normal_deriv: Vec<f64>,
    pub norms: CauchyNorms,
}

/// Samples `(u, d_nu u)` on `curve`. The normal derivative uses centred radial
/// differences on interior rings and one-sided ones on the grid edge.
pub fn extract_cauchy(u: &GridField, curve: &BoundaryCurve) -> Result<CauchyData> {
    if u.domain != curve.domain {
        return Err(Error::IncompatibleData("field and curve live on different grids".into()));
    }
    let trace = curve.trace(u);
    let normal_deriv: Vec<f64> = gradient_on_curve(u, curve)
        .iter()
        .zip(&curve.normal)
        .map(|(g, n)| g[0] * n[0] + g[1] * n[1])
        .collect();
    let norms = CauchyNorms {
        l2_trace: l2_norm(curve, &trace),
        h1_trace: h1_norm(curve, &trace),
        l2_normal: l2_norm(curve, &normal_deriv),
    };
    Ok(CauchyData {
        radius: curve.radius,
        theta: curve.theta.clone(),
        trace,
        normal_deriv,
        norms,
    })
}

/// Heat-type problem `u_t = Delta_g u + f` on the disk `domain`.
pub struct ParabolicProblem<'a> {
    pub domain: GridDomain,
    pub metric: MetricField,
    pub t_final: f64,
    pub n_t: usize,
    pub u0: GridField,
    /// Dirichlet data `g(t, theta)` on the boundary circle.
    pub boundary: &'a dyn Fn(f64, f64) -> f64,
    /// Manufactured source `f(t, x, y)`; absent for the physical problem.
    pub source: Option<&'a dyn Fn(f64, f64, f64) -> f64>,
    pub tolerance: f64,
}

impl<'a> ParabolicProblem<'a> {
    pub fn new(
        metric: MetricField,
        t_final: f64,
        n_t: usize,
        u0: GridField,
        boundary: &'a dyn Fn(f64, f64) -> f64,
    ) -> Self {
        Self {
            domain: metric.domain,
            metric,
            t_final,
            n_t,
            u0,
            boundary,
            source: None,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_t as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_t).map(|k| k as f64 * self.dt()).collect()
    }

    fn check(&self) -> Result<()> {
        if !self.domain.is_disk() {
            return Err(Error::UnsupportedGeometry("parabolic problems live on a disk".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("T = {} must be positive", self.t_final)));
        }
        if self.n_t < 64 {
            return Err(Error::InvalidParameter(format!(
                "dt = T/{} exceeds T/64",
                self.n_t
            )));
        }
        if self.u0.domain != self.domain {
            return Err(Error::IncompatibleData("u0 does not match the grid".into()));
        }
        let d = &self.domain;
        for j in 0..d.n_theta {
            let g = (self.boundary)(0.0, d.theta(j));
            let u = self.u0.at(d.n_r, j);
            if (g - u).abs() > 1e-10 * (1.0 + g.abs()) {
                return Err(Error::IncompatibleData(format!(
                    "g(0, theta_{j}) = {g} but u0 = {u} on the boundary"
                )));
            }
        }
        Ok(())
    }
}

/// Totals over all time steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicStats {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_relative_residual: f64,
}

/// Crank-Nicolson stepping with a lumped mass matrix; `observer(k, t_k, u)` is
/// called for `k = 0..=n_t`. Each step starts from the previous state.
pub fn solve_parabolic_with(
    prob: &ParabolicProblem<'_>,
    mut observer: impl FnMut(usize, f64, &GridField),
) -> Result<ParabolicStats> {
    prob.check()?;
    let dom = prob.domain;
    let dt = prob.dt();
    let stencil = FluxStencil::new(&dom, prob.metric.preset);
    let op = Operator::assemble(stencil, None, 0.5 * dt, 1.0);
    let pre = RingPreconditioner::new(&op.matrix, &op.blocks);
    let n = op.matrix.n;
    let nb = dom.n_r;

    let source_at = |t: f64| -> Option<Vec<f64>> {
        prob.source.map(|f| {
            (0..n)
                .map(|row| {
                    let (i, j) = dom.ring_and_angle(row + op.offset);
                    let [x, y] = dom.position(i, j);
                    f(t, x, y)
                })
                .collect()
        })
    };

    let mut u = prob.u0.clone();
    observer(0, 0.0, &u);
    let mut f_prev = source_at(0.0);
    let mut stats = ParabolicStats::default();
    let mut rhs = vec![0.0; n];
    let mut x: Vec<f64> = u.values[op.offset..op.offset + n].to_vec();
    for k in 1..=prob.n_t {
        let t = k as f64 * dt;
        for (row, r) in rhs.iter_mut().enumerate() {
            let (i, j) = dom.ring_and_angle(row + op.offset);
            *r = op.mass[row] * u.values[row + op.offset] + 0.5 * dt * op.stencil.apply_at(&u, i, j);
        }
        let f_next = source_at(t);
        if let (Some(a), Some(b)) = (&f_prev, &f_next) {
            for row in 0..n {
                rhs[row] += 0.5 * dt * op.mass[row] * (a[row] + b[row]);
            }
        }
        for j in 0..dom.n_theta {
            u.values[dom.index(nb, j)] = (prob.boundary)(t, dom.theta(j));
        }
        op.lift(&u.values, &mut rhs);
        let s = pcg(&op.matrix, &rhs, &mut x, &pre, prob.tolerance)?;
        stats.steps += 1;
        stats.total_iterations += s.iterations;
        stats.max_relative_residual = stats.max_relative_residual.max(s.relative_residual);
        u.values[op.offset..op.offset + n].copy_from_slice(&x);
        observer(k, t, &u);
        f_prev = f_next;
    }
    Ok(stats)
}

/// A field on every time node of a uniform grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub domain: GridDomain,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn slice(&self, k: usize) -> GridField {
        GridField {
            domain: self.domain,
            values: self.values[k].clone(),
        }
    }

    /// `d_t u` at time node `k`: centred differences inside, second-order
    /// one-sided at the ends.
    pub fn time_derivative(&self, k: usize) -> Vec<f64> {
        let rows: Vec<&[f64]> = self.values.iter().map(|v| v.as_slice()).collect();
        time_derivative(&rows, &self.times, k)
    }
}

/// Second-order time derivative at node `k` of samples on a uniform grid.
pub fn time_derivative(rows: &[&[f64]], times: &[f64], k: usize) -> Vec<f64> {
    let nt = rows.len() - 1;
    let dt = times[1] - times[0];
    let m = rows[0].len();
    (0..m)
        .map(|q| {
            if k == 0 {
                (-3.0 * rows[0][q] + 4.0 * rows[1][q] - rows[2][q]) / (2.0 * dt)
            } else if k == nt {
                (3.0 * rows[nt][q] - 4.0 * rows[nt - 1][q] + rows[nt - 2][q]) / (2.0 * dt)
            } else {
                (rows[k + 1][q] - rows[k - 1][q]) / (2.0 * dt)
            }
        })
        .collect()
}

pub fn solve_parabolic(prob: &ParabolicProblem<'_>) -> Result<(SpaceTimeField, ParabolicStats)> {
    let mut values = Vec::with_capacity(prob.n_t + 1);
    let stats = solve_parabolic_with(prob, |_, _, u| values.push(u.values.clone()))?;
    Ok((
        SpaceTimeField {
            domain: prob.domain,
            times: prob.times(),
            values,
        },
        stats,
    ))
}

/// Exterior annulus `(r_s, r_inf)` with roles `S` inside and artificial outside.
pub fn exterior_domain(r_s: f64, r_inf: f64, n_r: usize, n_theta: usize) -> Result<GridDomain> {
    crate::geometry::build_annulus(
        r_s,
        r_inf,
        n_r,
        n_theta,
        crate::geometry::BoundaryTags::annulus(
            crate::geometry::BoundaryRole::S,
            crate::geometry::BoundaryRole::Artificial,
        ),
    )
}

/// Boundary id of `S` for a problem kind.
pub fn s_boundary(kind: ProblemKind) -> BoundaryId {
    match kind {
        ProblemKind::Interior => BoundaryId::Outer,
        ProblemKind::ExteriorTruncated => BoundaryId::Inner,
    }
}
