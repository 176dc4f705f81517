//! Concentric polar grids, boundary curves and quadrature.
//!
//! Nodes sit at `r_i = r_inner + i h` for `i = 0..=n_r` and `theta_j = j dtheta`
//! for `j = 0..n_theta`; the angular direction is periodic, so node `(i, n_theta)`
//! is node `(i, 0)` and is never stored. On a disk every node of ring 0 is the
//! centre and they share a single storage slot.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DomainKind {
    Disk,
    Annulus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryId {
    Inner,
    Outer,
}

impl FromStr for BoundaryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(BoundaryId::Inner),
            "outer" => Ok(BoundaryId::Outer),
            other => Err(Error::UnknownBoundary(other.to_string())),
        }
    }
}

/// Role a boundary circle plays in the inverse problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryRole {
    /// Carries the unknown Dirichlet data.
    S,
    /// Measurement circle.
    Gamma,
    /// Truncation boundary of an exterior problem.
    Artificial,
}

/// Role of each boundary circle. A disk has no inner boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryTags {
    pub inner: Option<BoundaryRole>,
    pub outer: BoundaryRole,
}

impl BoundaryTags {
    pub fn annulus(inner: BoundaryRole, outer: BoundaryRole) -> Self {
        Self {
            inner: Some(inner),
            outer,
        }
    }

    pub fn disk(outer: BoundaryRole) -> Self {
        Self { inner: None, outer }
    }
}

/// Uniform `(r, theta)` grid over a disk or annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridDomain {
    pub kind: DomainKind,
    pub r_inner: f64,
    pub r_outer: f64,
    pub center: [f64; 2],
    pub n_r: usize,
    pub n_theta: usize,
    pub tags: BoundaryTags,
}

fn check_counts(n_r: usize, n_theta: usize) -> Result<()> {
    if n_r < 8 {
        return Err(Error::InvalidGeometry(format!("n_r = {n_r} < 8")));
    }
    if n_theta < 16 || n_theta % 2 != 0 {
        return Err(Error::InvalidGeometry(format!(
            "n_theta = {n_theta} must be even and >= 16"
        )));
    }
    Ok(())
}

/// Annulus `r_inner < |x - center| < r_outer` centred at the origin.
pub fn build_annulus(
    r_inner: f64,
    r_outer: f64,
    n_r: usize,
    n_theta: usize,
    tags: BoundaryTags,
) -> Result<GridDomain> {
    if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "annulus radii ({r_inner}, {r_outer}) need 0 < r_inner < r_outer"
        )));
    }
    if tags.inner.is_none() {
        return Err(Error::InvalidGeometry("annulus needs a role for the inner circle".into()));
    }
    check_counts(n_r, n_theta)?;
    Ok(GridDomain {
        kind: DomainKind::Annulus,
        r_inner,
        r_outer,
        center: [0.0, 0.0],
        n_r,
        n_theta,
        tags,
    })
}

/// Disk `|x - center| < radius` centred at the origin.
pub fn build_disk(radius: f64, n_r: usize, n_theta: usize, outer: BoundaryRole) -> Result<GridDomain> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidGeometry(format!("disk radius {radius} must be positive")));
    }
    check_counts(n_r, n_theta)?;
    Ok(GridDomain {
        kind: DomainKind::Disk,
        r_inner: 0.0,
        r_outer: radius,
        center: [0.0, 0.0],
        n_r,
        n_theta,
        tags: BoundaryTags::disk(outer),
    })
}

impl GridDomain {
    /// Same geometry with both cell counts multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> GridDomain {
        GridDomain {
            n_r: self.n_r * factor,
            n_theta: self.n_theta * factor,
            ..*self
        }
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        (self.r_outer - self.r_inner) / self.n_r as f64
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r {
            self.r_outer
        } else {
            self.r_inner + i as f64 * self.dr()
        }
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// `f(theta_j)` for every angle of the grid.
    pub fn theta_samples(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_theta).map(|j| f(self.theta(j))).collect()
    }

    pub fn is_disk(&self) -> bool {
        self.kind == DomainKind::Disk
    }

    pub fn node_count(&self) -> usize {
        match self.kind {
            DomainKind::Disk => 1 + self.n_r * self.n_theta,
            DomainKind::Annulus => (self.n_r + 1) * self.n_theta,
        }
    }

    /// Storage slot of node `(i, j)`; `j` is taken modulo `n_theta`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        let j = j % self.n_theta;
        match self.kind {
            DomainKind::Disk if i == 0 => 0,
            DomainKind::Disk => 1 + (i - 1) * self.n_theta + j,
            DomainKind::Annulus => i * self.n_theta + j,
        }
    }

    /// Inverse of [`index`](Self::index); the disk centre maps to `(0, 0)`.
    #[inline]
    pub fn ring_and_angle(&self, idx: usize) -> (usize, usize) {
        match self.kind {
            DomainKind::Disk if idx == 0 => (0, 0),
            DomainKind::Disk => (1 + (idx - 1) / self.n_theta, (idx - 1) % self.n_theta),
            DomainKind::Annulus => (idx / self.n_theta, idx % self.n_theta),
        }
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        let r = self.radius(i);
        let t = self.theta(j);
        [self.center[0] + r * t.cos(), self.center[1] + r * t.sin()]
    }

    /// Ring index of a boundary circle.
    pub fn boundary_ring(&self, id: BoundaryId) -> Result<usize> {
        match (id, self.kind) {
            (BoundaryId::Outer, _) => Ok(self.n_r),
            (BoundaryId::Inner, DomainKind::Annulus) => Ok(0),
            (BoundaryId::Inner, DomainKind::Disk) => {
                Err(Error::UnknownBoundary("inner (a disk has no inner boundary)".into()))
            }
        }
    }

    pub fn role(&self, id: BoundaryId) -> Result<BoundaryRole> {
        match id {
            BoundaryId::Outer => Ok(self.tags.outer),
            BoundaryId::Inner => self
                .tags
                .inner
                .filter(|_| self.kind == DomainKind::Annulus)
                .ok_or_else(|| Error::UnknownBoundary("inner".into())),
        }
    }

    /// Boundary circle carrying `role`, if any.
    pub fn boundary_with_role(&self, role: BoundaryRole) -> Option<BoundaryId> {
        [BoundaryId::Inner, BoundaryId::Outer]
            .into_iter()
            .find(|&id| self.role(id).ok() == Some(role))
    }

    /// Whether ring `i` is a Dirichlet boundary ring.
    #[inline]
    pub fn is_boundary_ring(&self, i: usize) -> bool {
        i == self.n_r || (i == 0 && self.kind == DomainKind::Annulus)
    }

    /// Ring whose radius equals `r` up to `1e-9` relative to the cell size.
    pub fn ring_at_radius(&self, r: f64) -> Option<usize> {
        let x = (r - self.r_inner) / self.dr();
        let i = x.round();
        if i < 0.0 || i > self.n_r as f64 || (x - i).abs() > 1e-9 {
            return None;
        }
        Some(i as usize)
    }

    /// Composite Simpson weights in `r` over `[r_inner, r_outer]` (a 3/8 panel
    /// closes an odd cell count), without the Jacobian factor `r`.
    pub fn radial_weights(&self) -> Vec<f64> {
        simpson_weights(self.n_r, self.dr())
    }

    /// Quadrature weight of every storage slot for `int f dx = int int f r dr dtheta`.
    pub fn volume_weights(&self) -> Vec<f64> {
        let rw = self.radial_weights();
        let dth = self.dtheta();
        let mut w = vec![0.0; self.node_count()];
        for (i, &wi) in rw.iter().enumerate() {
            let r = self.radius(i);
            if self.is_disk() && i == 0 {
                // the Jacobian vanishes at the centre
                continue;
            }
            for j in 0..self.n_theta {
                w[self.index(i, j)] += wi * r * dth;
            }
        }
        w
    }
}

/// Composite Simpson weights on `n` uniform cells of width `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let (simpson_cells, tail) = if n % 2 == 0 { (n, 0) } else { (n - 3, 3) };
    let mut k = 0;
    while k < simpson_cells {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
        k += 2;
    }
    if tail == 3 {
        let c = 3.0 * h / 8.0;
        w[k] += c;
        w[k + 1] += 3.0 * c;
        w[k + 2] += 3.0 * c;
        w[k + 3] += c;
    }
    w
}

/// Scalar values on every storage slot of a [`GridDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub domain: GridDomain,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: &GridDomain) -> Self {
        Self {
            domain: *domain,
            values: vec![0.0; domain.node_count()],
        }
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self {
            domain: *domain,
            values: vec![c; domain.node_count()],
        }
    }

    pub fn from_values(domain: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::IncompatibleData(format!(
                "field has {} values, domain has {} nodes",
                values.len(),
                domain.node_count()
            )));
        }
        Ok(Self {
            domain: *domain,
            values,
        })
    }

    /// Samples `f(r, theta)`; the disk centre is sampled once at `theta = 0`.
    pub fn from_polar(domain: &GridDomain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; domain.node_count()];
        for (idx, v) in values.iter_mut().enumerate() {
            let (i, j) = domain.ring_and_angle(idx);
            *v = f(domain.radius(i), domain.theta(j));
        }
        Self {
            domain: *domain,
            values,
        }
    }

    /// Samples `f(x, y)` at node positions.
    pub fn from_cartesian(domain: &GridDomain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; domain.node_count()];
        for (idx, v) in values.iter_mut().enumerate() {
            let (i, j) = domain.ring_and_angle(idx);
            let [x, y] = domain.position(i, j);
            *v = f(x, y);
        }
        Self {
            domain: *domain,
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Values on ring `i`, ordered by angle.
    pub fn ring(&self, i: usize) -> Vec<f64> {
        (0..self.domain.n_theta).map(|j| self.at(i, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Orientation of the unit normal attached to a grid ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalSense {
    /// `+ e_r`
    RadialOutward,
    /// `- e_r`
    RadialInward,
}

/// A grid circle with arclength elements and a unit normal per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub domain: GridDomain,
    /// Boundary id when the curve is a domain boundary; `None` for an interior ring.
    pub id: Option<BoundaryId>,
    pub ring: usize,
    pub radius: f64,
    pub nodes: Vec<usize>,
    pub theta: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    pub ds: Vec<f64>,
    pub normal: Vec<[f64; 2]>,
}

impl BoundaryCurve {
    /// Any non-centre grid ring with the requested normal orientation.
    pub fn ring(domain: &GridDomain, ring: usize, sense: NormalSense) -> Result<Self> {
        if ring > domain.n_r || (domain.is_disk() && ring == 0) {
            return Err(Error::InvalidGeometry(format!("ring {ring} is not a circle of the grid")));
        }
        let radius = domain.radius(ring);
        let n = domain.n_theta;
        let sign = match sense {
            NormalSense::RadialOutward => 1.0,
            NormalSense::RadialInward => -1.0,
        };
        let theta: Vec<f64> = (0..n).map(|j| domain.theta(j)).collect();
        let id = if ring == domain.n_r {
            Some(BoundaryId::Outer)
        } else if ring == 0 {
            Some(BoundaryId::Inner)
        } else {
            None
        };
        Ok(Self {
            domain: *domain,
            id,
            ring,
            radius,
            nodes: (0..n).map(|j| domain.index(ring, j)).collect(),
            positions: (0..n).map(|j| domain.position(ring, j)).collect(),
            ds: vec![radius * domain.dtheta(); n],
            normal: theta
                .iter()
                .map(|t| [sign * t.cos(), sign * t.sin()])
                .collect(),
            theta,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_domain_boundary(&self) -> bool {
        self.domain.is_boundary_ring(self.ring)
    }

    /// Samples a field on the curve.
    pub fn trace(&self, u: &GridField) -> Vec<f64> {
        self.nodes.iter().map(|&k| u.values[k]).collect()
    }

    pub fn length(&self) -> f64 {
        self.ds.iter().sum()
    }
}

/// Boundary circle `id` with the normal pointing out of the domain.
pub fn boundary_curve(domain: &GridDomain, id: BoundaryId) -> Result<BoundaryCurve> {
    let ring = domain.boundary_ring(id)?;
    let sense = match id {
        BoundaryId::Outer => NormalSense::RadialOutward,
        BoundaryId::Inner => NormalSense::RadialInward,
    };
    BoundaryCurve::ring(domain, ring, sense)
}

/// `int f dx` with Simpson in `r` and the periodic trapezoid rule in `theta`.
pub fn integrate_volume(f: &GridField) -> f64 {
    f.domain
        .volume_weights()
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * v)
        .sum()
}

/// `int f dS` over a curve by the periodic trapezoid rule.
pub fn integrate_boundary(curve: &BoundaryCurve, f: &[f64]) -> f64 {
    debug_assert_eq!(f.len(), curve.len());
    curve.ds.iter().zip(f).map(|(w, v)| w * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags() -> BoundaryTags {
        BoundaryTags::annulus(BoundaryRole::S, BoundaryRole::Gamma)
    }

    #[test]
    fn annulus_node_count() {
        let d = build_annulus(1.0, 2.0, 64, 128, tags()).unwrap();
        assert_eq!(d.node_count(), 65 * 128);
        assert_eq!(d.radius(64), 2.0);
    }

    #[test]
    fn degenerate_radii_rejected() {
        assert!(matches!(
            build_annulus(1.0, 1.0, 64, 128, tags()),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(build_annulus(1.0, 2.0, 7, 128, tags()).is_err());
        assert!(build_annulus(1.0, 2.0, 8, 18 - 1, tags()).is_err());
    }

    #[test]
    fn interior_case_relabeling() {
        let d = build_annulus(
            0.5,
            1.0,
            8,
            16,
            BoundaryTags::annulus(BoundaryRole::Gamma, BoundaryRole::S),
        )
        .unwrap();
        assert_eq!(d.boundary_with_role(BoundaryRole::S), Some(BoundaryId::Outer));
        assert_eq!(d.boundary_with_role(BoundaryRole::Gamma), Some(BoundaryId::Inner));
    }

    #[test]
    fn boundary_normals_and_length() {
        let d = build_annulus(1.0, 2.0, 16, 64, tags()).unwrap();
        let outer = boundary_curve(&d, BoundaryId::Outer).unwrap();
        assert!((outer.length() - 4.0 * PI).abs() < 1e-10);
        for (n, t) in outer.normal.iter().zip(&outer.theta) {
            assert!((n[0] - t.cos()).abs() < 1e-15 && (n[1] - t.sin()).abs() < 1e-15);
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
        }
        let inner = boundary_curve(&d, BoundaryId::Inner).unwrap();
        for (n, t) in inner.normal.iter().zip(&inner.theta) {
            assert!((n[0] + t.cos()).abs() < 1e-15 && (n[1] + t.sin()).abs() < 1e-15);
        }
        assert!(matches!("top".parse::<BoundaryId>(), Err(Error::UnknownBoundary(_))));
    }

    #[test]
    fn disk_has_no_inner_boundary() {
        let d = build_disk(1.0, 16, 32, BoundaryRole::S).unwrap();
        assert!(matches!(
            boundary_curve(&d, BoundaryId::Inner),
            Err(Error::UnknownBoundary(_))
        ));
        assert_eq!(d.index(0, 5), 0);
        assert_eq!(d.ring_and_angle(d.index(3, 7)), (3, 7));
    }

    #[test]
    fn volume_quadrature() {
        let d = build_annulus(1.0, 2.0, 32, 64, tags()).unwrap();
        assert!((integrate_volume(&GridField::constant(&d, 1.0)) - 3.0 * PI).abs() < 1e-10);
        let r2 = GridField::from_polar(&d, |r, _| r * r);
        assert!((integrate_volume(&r2) - 7.5 * PI).abs() < 1e-8);
        assert_eq!(integrate_volume(&GridField::zeros(&d)), 0.0);
        // odd cell count exercises the 3/8 closing panel
        let d = build_annulus(1.0, 2.0, 33, 64, tags()).unwrap();
        let r2 = GridField::from_polar(&d, |r, _| r * r);
        assert!((integrate_volume(&r2) - 7.5 * PI).abs() < 1e-8);
    }

    #[test]
    fn disk_area() {
        let d = build_disk(1.0, 16, 32, BoundaryRole::S).unwrap();
        assert!((integrate_volume(&GridField::constant(&d, 1.0)) - PI).abs() < 1e-12);
    }

    #[test]
    fn boundary_quadrature() {
        let d = build_annulus(1.0, 2.0, 8, 64, tags()).unwrap();
        let c = boundary_curve(&d, BoundaryId::Inner).unwrap();
        let ones = vec![1.0; c.len()];
        assert!((integrate_boundary(&c, &ones) - 2.0 * PI).abs() < 1e-12);
        let cos2: Vec<f64> = c.theta.iter().map(|t| t.cos().powi(2)).collect();
        assert!((integrate_boundary(&c, &cos2) - PI).abs() < 1e-12);
        assert_eq!(integrate_boundary(&c, &vec![0.0; c.len()]), 0.0);
    }

    #[test]
    fn ring_lookup() {
        let d = build_disk(1.0, 64, 16, BoundaryRole::S).unwrap();
        assert_eq!(d.ring_at_radius(0.5), Some(32));
        assert_eq!(d.ring_at_radius(0.51), None);
    }
}
