//! Admissible boundary data, stability ratios and Monte-Carlo studies.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{boundary_curve, build_disk, BoundaryRole, GridDomain, GridField};
use crate::riemannian::{arclength_derivative, MetricField, MetricPreset, PotentialField, PotentialPreset};
use crate::solvers::{
    exterior_domain, extract_cauchy, gamma_curve, h1_norm, l2_norm, s_boundary, solve_exterior_truncated,
    solve_interior, solve_parabolic_with, time_derivative, EllipticProblem, ParabolicProblem,
    ProblemKind, Solution, DEFAULT_TOLERANCE, DEFAULT_TRUNCATION_TOL,
};
use crate::trace::TrigSeries;
use crate::{Error, Result};

/// Rejection budget per sample.
pub const MAX_REJECTIONS: usize = 1000;
/// Slack in the nodewise admissibility check.
pub const ADMISSIBLE_SLACK: f64 = 1e-12;

/// `|a| >= alpha` and `|d_tau a| <= beta` on `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibleSpec {
    pub alpha: f64,
    pub beta: f64,
    pub fourier_degree: usize,
    pub rng_seed: u64,
}

impl AdmissibleSpec {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need alpha > 0 and finite beta >= 0 (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Outcome of a nodewise admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleReport {
    pub pass: bool,
    /// Node with the largest violation, if any.
    pub worst_node: Option<usize>,
    pub min_abs: f64,
    pub max_tangential: f64,
}

/// Checks `|a| >= alpha` and `|d_tau a| <= beta` at every sample of `a`
/// (uniform angles on the circle of radius `radius`), with the tangential
/// stencil used for the boundary norms.
pub fn check_admissible(a: &[f64], radius: f64, alpha: f64, beta: f64) -> AdmissibleReport {
    let da = arclength_derivative(a, radius);
    let mut worst: Option<(usize, f64)> = None;
    let mut min_abs = f64::INFINITY;
    let mut max_tan: f64 = 0.0;
    for (j, (&v, &d)) in a.iter().zip(&da).enumerate() {
        min_abs = min_abs.min(v.abs());
        max_tan = max_tan.max(d.abs());
        let excess = (alpha - ADMISSIBLE_SLACK - v.abs()).max(d.abs() - beta - ADMISSIBLE_SLACK);
        if excess > 0.0 && worst.map_or(true, |(_, w)| excess > w) {
            worst = Some((j, excess));
        }
    }
    AdmissibleReport {
        pass: worst.is_none(),
        worst_node: worst.map(|w| w.0),
        min_abs,
        max_tangential: max_tan,
    }
}

/// Positive trigonometric samples: a random oscillation `o` of degree at most
/// `fourier_degree`, scaled so `max |o'| / r <= 0.98 beta`, lifted by a
/// constant `c0 >= alpha + max |o|`. Each draw is verified on `n_theta` nodes.
pub fn sample_admissible(
    spec: &AdmissibleSpec,
    radius: f64,
    n_theta: usize,
    count: usize,
) -> Result<Vec<TrigSeries>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut out = Vec::with_capacity(count);
    for sample in 0..count {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let cand = draw_series(&mut rng, spec, radius);
            if check_admissible(&cand.sample(n_theta), radius, spec.alpha, spec.beta).pass {
                accepted = Some(cand);
                break;
            }
        }
        out.push(accepted.ok_or(Error::SamplingExhausted { sample })?);
    }
    Ok(out)
}

fn draw_oscillation(rng: &mut ChaCha8Rng, degree: usize) -> TrigSeries {
    let mut o = TrigSeries::constant(0.0);
    for k in 1..=degree {
        let amp = 1.0 / k as f64;
        o.cos.push(amp * rng.gen_range(-1.0..1.0));
        o.sin.push(amp * rng.gen_range(-1.0..1.0));
    }
    o
}

fn abs_sum(o: &TrigSeries) -> f64 {
    o.cos.iter().chain(&o.sin).map(|c| c.abs()).sum()
}

/// `max |o'|` bound: the larger of a dense sample and nothing (exact zero for
/// constants).
fn max_derivative(o: &TrigSeries) -> f64 {
    let n = 64 * (o.degree() + 1);
    let (_, _, d) = o.extrema(n);
    // a dense sample can miss the peak slightly; pad by the sampling error bound
    let k = o.degree() as f64;
    let pad = abs_sum(o) * k * k * k * (PI / n as f64).powi(2) / 2.0;
    d + pad
}

fn draw_series(rng: &mut ChaCha8Rng, spec: &AdmissibleSpec, radius: f64) -> TrigSeries {
    let o = draw_oscillation(rng, spec.fourier_degree);
    let dmax = max_derivative(&o);
    let lambda = if dmax > 0.0 {
        (0.98 * spec.beta * radius / dmax).min(1.0)
    } else {
        0.0
    };
    let mut a = o.scaled(lambda);
    let lift = spec.alpha + abs_sum(&a);
    a.c0 = lift * (1.0 + rng.gen_range(0.0..1.0));
    a
}

/// Dirichlet problem template for stability studies. Samples are given as
/// trigonometric series so the same datum can be replayed on refined grids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EllipticSetup {
    pub kind: ProblemKind,
    pub domain: GridDomain,
    pub metric: MetricPreset,
    pub potential: PotentialPreset,
    pub eta: f64,
    pub gamma_radius: f64,
    pub tolerance: f64,
    pub truncation_tol: f64,
}

impl EllipticSetup {
    /// `B` the disk of radius `radius`, `Gamma` the circle `gamma_radius`.
    pub fn interior(radius: f64, gamma_radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Ok(Self {
            kind: ProblemKind::Interior,
            domain: build_disk(radius, n_r, n_theta, BoundaryRole::S)?,
            metric: MetricPreset::Euclidean,
            potential: PotentialPreset::Constant { value: 0.0 },
            eta: 0.0,
            gamma_radius,
            tolerance: DEFAULT_TOLERANCE,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        })
    }

    /// `S` the circle `r_s`, truncation at `r_inf`, `p >= eta > 0`.
    pub fn exterior(
        r_s: f64,
        r_inf: f64,
        gamma_radius: f64,
        n_r: usize,
        n_theta: usize,
        potential: PotentialPreset,
        eta: f64,
    ) -> Result<Self> {
        Ok(Self {
            kind: ProblemKind::ExteriorTruncated,
            domain: exterior_domain(r_s, r_inf, n_r, n_theta)?,
            metric: MetricPreset::Euclidean,
            potential,
            eta,
            gamma_radius,
            tolerance: DEFAULT_TOLERANCE,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        })
    }

    pub fn refined(&self) -> Self {
        Self {
            domain: self.domain.refined(2),
            ..self.clone()
        }
    }

    /// Radius of `S`.
    pub fn r_s(&self) -> f64 {
        match self.kind {
            ProblemKind::Interior => self.domain.r_outer,
            ProblemKind::ExteriorTruncated => self.domain.r_inner,
        }
    }

    pub fn problem(&self, data: Vec<f64>) -> Result<EllipticProblem> {
        let g = MetricField::sample(self.metric, &self.domain)?;
        let p = PotentialField::sample(self.potential, self.eta, &self.domain)?;
        let mut prob = EllipticProblem::new(self.kind, g, p, data)?;
        prob.tolerance = self.tolerance;
        Ok(prob)
    }

    pub fn solve(&self, a: &TrigSeries) -> Result<Solution> {
        gamma_curve(&self.domain, self.gamma_radius)?;
        let prob = self.problem(a.sample(self.domain.n_theta))?;
        match self.kind {
            ProblemKind::Interior => solve_interior(&prob),
            ProblemKind::ExteriorTruncated => {
                solve_exterior_truncated(&prob, self.gamma_radius, self.truncation_tol)
            }
        }
    }
}

/// Norms and stability ratio of one sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleRecord {
    pub sample_id: usize,
    pub l2_s: f64,
    pub h1_s: f64,
    pub h1_gamma: f64,
    pub l2_dn_gamma: f64,
    /// `None` when the sample failed or the denominator vanished.
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

impl SampleRecord {
    fn failed(sample_id: usize, error: String) -> Self {
        Self {
            sample_id,
            l2_s: f64::NAN,
            h1_s: f64::NAN,
            h1_gamma: f64::NAN,
            l2_dn_gamma: f64::NAN,
            ratio: None,
            error: Some(error),
        }
    }
}

/// `||a||_{H^1(S)} / (||u||_{H^1(Gamma)} + ||d_nu u||_{L^2(Gamma)})`.
pub fn elliptic_ratio(a: &TrigSeries, setup: &EllipticSetup) -> Result<SampleRecord> {
    let dom = setup.domain;
    let sol = setup.solve(a)?;
    let s_curve = boundary_curve(&dom, s_boundary(setup.kind))?;
    let a_s = s_curve.trace(&sol.field);
    let cauchy = extract_cauchy(&sol.field, &gamma_curve(&dom, setup.gamma_radius)?)?;
    let h1_s = h1_norm(&s_curve, &a_s);
    let den = cauchy.norms.h1_trace + cauchy.norms.l2_normal;
    let (ratio, error) = if den > 0.0 {
        (Some(h1_s / den), None)
    } else {
        (None, Some("ZeroDenominator".to_string()))
    };
    Ok(SampleRecord {
        sample_id: 0,
        l2_s: l2_norm(&s_curve, &a_s),
        h1_s,
        h1_gamma: cauchy.norms.h1_trace,
        l2_dn_gamma: cauchy.norms.l2_normal,
        ratio,
        error,
    })
}

/// Summary statistics over determinate ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aggregate {
    pub max: f64,
    pub median: f64,
    pub worst_sample: usize,
    pub failures: usize,
}

fn aggregate(ratios: impl Iterator<Item = Option<f64>>) -> Option<Aggregate> {
    let mut v = Vec::new();
    let mut failures = 0;
    let mut worst = (0, f64::NEG_INFINITY);
    for (i, r) in ratios.enumerate() {
        match r {
            Some(r) => {
                if r > worst.1 {
                    worst = (i, r);
                }
                v.push(r);
            }
            None => failures += 1,
        }
    }
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    Some(Aggregate {
        max: worst.1,
        median,
        worst_sample: worst.0,
        failures,
    })
}

/// Worst sample recomputed on the refined grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinementCheck {
    pub n_r: usize,
    pub n_theta: usize,
    pub ratio: f64,
    /// `|refined - coarse| / coarse`
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub spec: AdmissibleSpec,
    pub setup: EllipticSetup,
    pub samples: Vec<TrigSeries>,
    pub records: Vec<SampleRecord>,
    pub aggregate: Option<Aggregate>,
    pub refined: Option<RefinementCheck>,
}

impl StabilityReport {
    /// Builds the report from per-sample records (in sample order) and, when
    /// asked, replays the worst sample on a refined grid.
    pub fn assemble(
        spec: AdmissibleSpec,
        setup: EllipticSetup,
        samples: Vec<TrigSeries>,
        mut records: Vec<SampleRecord>,
        refine: bool,
    ) -> Result<Self> {
        for (i, r) in records.iter_mut().enumerate() {
            r.sample_id = i;
        }
        let agg = aggregate(records.iter().map(|r| r.ratio));
        let refined = match (refine, agg) {
            (true, Some(a)) => {
                let fine = setup.refined();
                let r = elliptic_ratio(&samples[a.worst_sample], &fine)?;
                r.ratio.map(|ratio| RefinementCheck {
                    n_r: fine.domain.n_r,
                    n_theta: fine.domain.n_theta,
                    ratio,
                    relative_change: (ratio - a.max).abs() / a.max,
                })
            }
            _ => None,
        };
        Ok(Self {
            spec,
            setup,
            samples,
            records,
            aggregate: agg,
            refined,
        })
    }
}

/// Evaluates one sample, recording failures instead of propagating them.
pub fn evaluate_sample(id: usize, a: &TrigSeries, setup: &EllipticSetup) -> SampleRecord {
    match elliptic_ratio(a, setup) {
        Ok(mut r) => {
            r.sample_id = id;
            r
        }
        Err(e) => SampleRecord::failed(id, e.kind().to_string()),
    }
}

pub fn run_study(spec: &AdmissibleSpec, setup: &EllipticSetup, count: usize, refine: bool) -> Result<StabilityReport> {
    let samples = sample_admissible(spec, setup.r_s(), setup.domain.n_theta, count)?;
    let records = samples
        .iter()
        .enumerate()
        .map(|(i, a)| evaluate_sample(i, a, setup))
        .collect();
    StabilityReport::assemble(*spec, setup.clone(), samples, records, refine)
}

/// `g(t, theta) = g0(t) g1(theta)` with
/// `g0 = 1 + sum_m b_m (1 - cos(m pi t / T))`, so `g0(0) = 1` and `g0'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparableData {
    pub t_final: f64,
    pub time: Vec<f64>,
    pub space: TrigSeries,
}

impl SeparableData {
    pub fn g0(&self, t: f64) -> f64 {
        1.0 + self
            .time
            .iter()
            .enumerate()
            .map(|(m, b)| b * (1.0 - ((m + 1) as f64 * PI * t / self.t_final).cos()))
            .sum::<f64>()
    }

    pub fn g0_prime(&self, t: f64) -> f64 {
        self.time
            .iter()
            .enumerate()
            .map(|(m, b)| {
                let w = (m + 1) as f64 * PI / self.t_final;
                b * w * (w * t).sin()
            })
            .sum()
    }

    pub fn eval(&self, t: f64, theta: f64) -> f64 {
        self.g0(t) * self.space.eval(theta)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            space: self.space.scaled(lambda),
            ..self.clone()
        }
    }
}

/// Initial states for the parabolic problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialProfile {
    /// Harmonic extension of `g(0, .)` into the disk.
    #[default]
    HarmonicExtension,
}

/// `|g| >= alpha` and `|d_t g| + |d_tau g| <= beta` on `(0, T) x S`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicAdmissibleSpec {
    pub alpha: f64,
    pub beta: f64,
    pub u0: InitialProfile,
    pub time_degree: usize,
    pub fourier_degree: usize,
    pub rng_seed: u64,
}

/// Nodewise check of a space-time datum on the solver's `(t, theta)` nodes,
/// with centred differences in both directions.
pub fn check_parabolic_admissible(
    g: &SeparableData,
    radius: f64,
    n_theta: usize,
    n_t: usize,
    alpha: f64,
    beta: f64,
) -> bool {
    let g1 = g.space.sample(n_theta);
    let d1 = arclength_derivative(&g1, radius);
    let dt = g.t_final / n_t as f64;
    let g0: Vec<f64> = (0..=n_t).map(|k| g.g0(k as f64 * dt)).collect();
    let rows: Vec<[f64; 1]> = g0.iter().map(|&v| [v]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let times: Vec<f64> = (0..=n_t).map(|k| k as f64 * dt).collect();
    for k in 0..=n_t {
        let d0 = time_derivative(&refs, &times, k)[0];
        for j in 0..n_theta {
            let v = g0[k] * g1[j];
            let d = (d0 * g1[j]).abs() + (g0[k] * d1[j]).abs();
            if v.abs() < alpha - ADMISSIBLE_SLACK || d > beta + ADMISSIBLE_SLACK {
                return false;
            }
        }
    }
    true
}

fn draw_separable(rng: &mut ChaCha8Rng, spec: &ParabolicAdmissibleSpec, radius: f64, t_final: f64) -> SeparableData {
    // g0 stays in [1, 2] and g1 >= alpha; each derivative term gets 0.45 beta
    let o = draw_oscillation(rng, spec.fourier_degree);
    let dmax = max_derivative(&o);
    let lambda_x = if dmax > 0.0 {
        (0.45 * spec.beta * radius / (2.0 * dmax)).min(1.0)
    } else {
        0.0
    };
    let mut g1 = o.scaled(lambda_x);
    let osc = abs_sum(&g1);
    g1.c0 = (spec.alpha + osc) * (1.0 + rng.gen_range(0.0..1.0));
    let m1 = g1.c0 + osc;
    let b: Vec<f64> = (1..=spec.time_degree)
        .map(|m| rng.gen_range(0.0..1.0) / m as f64)
        .collect();
    let bsum: f64 = b.iter().sum();
    let d0: f64 = b
        .iter()
        .enumerate()
        .map(|(m, v)| v * (m + 1) as f64 * PI / t_final)
        .sum();
    let mut lambda_t: f64 = if bsum > 0.0 { 0.5 / bsum } else { 0.0 };
    if d0 > 0.0 {
        lambda_t = lambda_t.min(0.45 * spec.beta / (m1 * d0));
    }
    SeparableData {
        t_final,
        time: b.iter().map(|v| v * lambda_t).collect(),
        space: g1,
    }
}

/// Separable admissible samples verified on the `(n_t + 1) x n_theta` nodes.
pub fn sample_parabolic_admissible(
    spec: &ParabolicAdmissibleSpec,
    radius: f64,
    n_theta: usize,
    n_t: usize,
    t_final: f64,
    count: usize,
) -> Result<Vec<SeparableData>> {
    AdmissibleSpec {
        alpha: spec.alpha,
        beta: spec.beta,
        fourier_degree: spec.fourier_degree,
        rng_seed: spec.rng_seed,
    }
    .validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut out = Vec::with_capacity(count);
    for sample in 0..count {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let cand = draw_separable(&mut rng, spec, radius, t_final);
            if check_parabolic_admissible(&cand, radius, n_theta, n_t, spec.alpha, spec.beta) {
                accepted = Some(cand);
                break;
            }
        }
        out.push(accepted.ok_or(Error::SamplingExhausted { sample })?);
    }
    Ok(out)
}

/// Parabolic problem template: the disk `B` with boundary `S`, measurement
/// circle `Gamma` inside.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicSetup {
    pub domain: GridDomain,
    pub metric: MetricPreset,
    pub gamma_radius: f64,
    pub t_final: f64,
    pub n_t: usize,
    pub tolerance: f64,
}

impl ParabolicSetup {
    pub fn new(radius: f64, gamma_radius: f64, n_r: usize, n_theta: usize, t_final: f64, n_t: usize) -> Result<Self> {
        Ok(Self {
            domain: build_disk(radius, n_r, n_theta, BoundaryRole::S)?,
            metric: MetricPreset::Euclidean,
            gamma_radius,
            t_final,
            n_t,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn refined(&self) -> Self {
        Self {
            domain: self.domain.refined(2),
            n_t: 2 * self.n_t,
            ..self.clone()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_t)
            .map(|k| k as f64 * self.t_final / self.n_t as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicRecord {
    pub sample_id: usize,
    /// `||g||_{H^1((eps, T - eps) x S)}`
    pub h1_window_s: f64,
    /// `||g1||_{H^1(S)}`
    pub h1_g1_s: f64,
    /// `||u||_{H^1((0, T) x Gamma)}`
    pub h1_sigma0: f64,
    /// `||d_nu u||_{L^2((0, T) x Gamma)}`
    pub l2_dn_sigma0: f64,
    pub ratio: Option<f64>,
    pub corollary_ratio: Option<f64>,
    pub error: Option<String>,
}

/// Quadrature weights integrating the piecewise-linear interpolant of nodal
/// values over `[a, b]`.
pub fn window_weights(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let h = t1 - t0;
        // integrals of (t1 - t) / h and (t - t0) / h over [lo, hi]
        let left = ((t1 - lo).powi(2) - (t1 - hi).powi(2)) / (2.0 * h);
        let right = ((hi - t0).powi(2) - (lo - t0).powi(2)) / (2.0 * h);
        w[k] += left;
        w[k + 1] += right;
    }
    w
}

/// Theorem-type ratio `||g||_{H^1((eps, T-eps) x S)} / (||u||_{H^1(Sigma_0)} +
/// ||d_nu u||_{L^2(Sigma_0)})` and its separable variant with `||g1||_{H^1(S)}`
/// in the numerator.
pub fn parabolic_ratio(g: &SeparableData, eps: f64, setup: &ParabolicSetup) -> Result<ParabolicRecord> {
    let t_final = setup.t_final;
    if !(eps > 0.0 && eps < 0.5 * t_final) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, T/2)")));
    }
    if (g.t_final - t_final).abs() > 1e-14 * t_final {
        return Err(Error::IncompatibleData("datum and setup disagree on T".into()));
    }
    let dom = setup.domain;
    let metric = MetricField::sample(setup.metric, &dom)?;
    let gc = gamma_curve(&dom, setup.gamma_radius)?;
    let s_curve = boundary_curve(&dom, crate::geometry::BoundaryId::Outer)?;
    let r_s = dom.r_outer;
    let u0 = GridField::from_polar(&dom, |r, t| g.g0(0.0) * g.space.harmonic_extension(r, t, r_s));
    let bc = |t: f64, th: f64| g.eval(t, th);
    let mut prob = ParabolicProblem::new(metric, t_final, setup.n_t, u0, &bc);
    prob.tolerance = setup.tolerance;

    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(setup.n_t + 1);
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(setup.n_t + 1);
    let mut failure = None;
    solve_parabolic_with(&prob, |_, _, u| match extract_cauchy(u, &gc) {
        Ok(c) => {
            traces.push(c.trace);
            normals.push(c.normal_deriv);
        }
        Err(e) => failure = Some(e),
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let times = setup.times();
    let tw = crate::weights::trapezoid_weights(&times);
    let refs: Vec<&[f64]> = traces.iter().map(|v| v.as_slice()).collect();
    let mut h1_sigma0 = 0.0;
    let mut l2_dn = 0.0;
    for k in 0..times.len() {
        let ut = time_derivative(&refs, &times, k);
        let us = arclength_derivative(&traces[k], gc.radius);
        for j in 0..gc.len() {
            let u = traces[k][j];
            h1_sigma0 += tw[k] * gc.ds[j] * (u * u + us[j] * us[j] + ut[j] * ut[j]);
            l2_dn += tw[k] * gc.ds[j] * normals[k][j] * normals[k][j];
        }
    }
    let (h1_sigma0, l2_dn) = (h1_sigma0.sqrt(), l2_dn.sqrt());

    let ww = window_weights(&times, eps, t_final - eps);
    let g_rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| s_curve.theta.iter().map(|&th| g.eval(t, th)).collect())
        .collect();
    let g_refs: Vec<&[f64]> = g_rows.iter().map(|v| v.as_slice()).collect();
    let mut h1_window = 0.0;
    for k in 0..times.len() {
        if ww[k] == 0.0 {
            continue;
        }
        let gt = time_derivative(&g_refs, &times, k);
        let gs = arclength_derivative(&g_rows[k], r_s);
        for j in 0..s_curve.len() {
            let v = g_rows[k][j];
            h1_window += ww[k] * s_curve.ds[j] * (v * v + gs[j] * gs[j] + gt[j] * gt[j]);
        }
    }
    let h1_window = h1_window.sqrt();
    let h1_g1 = h1_norm(&s_curve, &g.space.sample(dom.n_theta));
    let den = h1_sigma0 + l2_dn;
    let (ratio, corollary_ratio, error) = if den > 0.0 {
        (Some(h1_window / den), Some(h1_g1 / den), None)
    } else {
        (None, None, Some("ZeroDenominator".to_string()))
    };
    Ok(ParabolicRecord {
        sample_id: 0,
        h1_window_s: h1_window,
        h1_g1_s: h1_g1,
        h1_sigma0,
        l2_dn_sigma0: l2_dn,
        ratio,
        corollary_ratio,
        error,
    })
}

/// Closed form of the ratio for `g = 1`: `sqrt(r_S (T - 2 eps) / (r_Gamma T))`.
pub fn constant_data_ratio(r_s: f64, r_gamma: f64, t_final: f64, eps: f64) -> f64 {
    (r_s * (t_final - 2.0 * eps) / (r_gamma * t_final)).sqrt()
}

pub fn evaluate_parabolic_sample(id: usize, g: &SeparableData, eps: f64, setup: &ParabolicSetup) -> ParabolicRecord {
    match parabolic_ratio(g, eps, setup) {
        Ok(mut r) => {
            r.sample_id = id;
            r
        }
        Err(e) => ParabolicRecord {
            sample_id: id,
            h1_window_s: f64::NAN,
            h1_g1_s: f64::NAN,
            h1_sigma0: f64::NAN,
            l2_dn_sigma0: f64::NAN,
            ratio: None,
            corollary_ratio: None,
            error: Some(e.kind().to_string()),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParabolicStabilityReport {
    pub spec: ParabolicAdmissibleSpec,
    pub setup: ParabolicSetup,
    pub epsilon: f64,
    pub samples: Vec<SeparableData>,
    pub records: Vec<ParabolicRecord>,
    pub aggregate: Option<Aggregate>,
    pub corollary_aggregate: Option<Aggregate>,
    pub refined: Option<RefinementCheck>,
}

impl ParabolicStabilityReport {
    pub fn assemble(
        spec: ParabolicAdmissibleSpec,
        setup: ParabolicSetup,
        epsilon: f64,
        samples: Vec<SeparableData>,
        mut records: Vec<ParabolicRecord>,
        refine: bool,
    ) -> Result<Self> {
        for (i, r) in records.iter_mut().enumerate() {
            r.sample_id = i;
        }
        let agg = aggregate(records.iter().map(|r| r.ratio));
        let cagg = aggregate(records.iter().map(|r| r.corollary_ratio));
        let refined = match (refine, agg) {
            (true, Some(a)) => {
                let fine = setup.refined();
                let r = parabolic_ratio(&samples[a.worst_sample], epsilon, &fine)?;
                r.ratio.map(|ratio| RefinementCheck {
                    n_r: fine.domain.n_r,
                    n_theta: fine.domain.n_theta,
                    ratio,
                    relative_change: (ratio - a.max).abs() / a.max,
                })
            }
            _ => None,
        };
        Ok(Self {
            spec,
            setup,
            epsilon,
            samples,
            records,
            aggregate: agg,
            corollary_aggregate: cagg,
            refined,
        })
    }
}

pub fn run_parabolic_study(
    spec: &ParabolicAdmissibleSpec,
    setup: &ParabolicSetup,
    count: usize,
    epsilon: f64,
    refine: bool,
) -> Result<ParabolicStabilityReport> {
    let samples = sample_parabolic_admissible(
        spec,
        setup.domain.r_outer,
        setup.domain.n_theta,
        setup.n_t,
        setup.t_final,
        count,
    )?;
    let records = samples
        .iter()
        .enumerate()
        .map(|(i, g)| evaluate_parabolic_sample(i, g, epsilon, setup))
        .collect();
    ParabolicStabilityReport::assemble(*spec, setup.clone(), epsilon, samples, records, refine)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alpha: f64, beta: f64) -> AdmissibleSpec {
        AdmissibleSpec {
            alpha,
            beta,
            fourier_degree: 4,
            rng_seed: 7,
        }
    }

    #[test]
    fn zero_beta_gives_constants() {
        let v = sample_admissible(&spec(1.0, 0.0), 1.0, 64, 5).unwrap();
        for a in v {
            assert!(a.cos.iter().chain(&a.sin).all(|&c| c == 0.0));
            assert!(a.c0 >= 1.0);
        }
    }

    #[test]
    fn samples_are_admissible() {
        let v = sample_admissible(&spec(1.0, 2.0), 1.0, 256, 100).unwrap();
        assert_eq!(v.len(), 100);
        for a in &v {
            assert!(check_admissible(&a.sample(256), 1.0, 1.0, 2.0).pass);
        }
        assert!(sample_admissible(&spec(1.0, 2.0), 1.0, 256, 0).unwrap().is_empty());
    }

    #[test]
    fn admissibility_checks() {
        let n = 128;
        let th: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let alpha = 0.7;
        assert!(check_admissible(&vec![alpha; n], 1.0, alpha, 0.0).pass);
        let c: Vec<f64> = th.iter().map(|t| alpha * t.cos()).collect();
        assert!(!check_admissible(&c, 1.0, alpha, 10.0).pass);
        let b: Vec<f64> = th.iter().map(|t| alpha * (2.0 + t.sin())).collect();
        assert!(check_admissible(&b, 1.0, alpha, alpha).pass);
    }

    #[test]
    fn constant_interior_ratio() {
        let setup = EllipticSetup::interior(1.0, 0.5, 32, 64).unwrap();
        let r = elliptic_ratio(&TrigSeries::constant(1.0), &setup).unwrap();
        assert!((r.ratio.unwrap() - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn window_weights_integrate_linears() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let w = window_weights(&t, 0.25, 0.73);
        let total: f64 = w.iter().sum();
        assert!((total - 0.48).abs() < 1e-14);
        let lin: f64 = w.iter().zip(&t).map(|(a, b)| a * b).sum();
        assert!((lin - 0.5 * (0.73f64.powi(2) - 0.25f64.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn constant_parabolic_ratio() {
        let setup = ParabolicSetup::new(1.0, 0.5, 16, 32, 1.0, 64).unwrap();
        let g = SeparableData {
            t_final: 1.0,
            time: vec![],
            space: TrigSeries::constant(1.0),
        };
        let r = parabolic_ratio(&g, 0.25, &setup).unwrap();
        let expect = constant_data_ratio(1.0, 0.5, 1.0, 0.25);
        assert!((expect - 1.0).abs() < 1e-15);
        assert!((r.ratio.unwrap() - expect).abs() < 1e-6, "{:?}", r);
    }

    #[test]
    fn separable_samples_are_admissible() {
        let ps = ParabolicAdmissibleSpec {
            alpha: 1.0,
            beta: 2.0,
            u0: InitialProfile::HarmonicExtension,
            time_degree: 3,
            fourier_degree: 3,
            rng_seed: 11,
        };
        let v = sample_parabolic_admissible(&ps, 1.0, 64, 64, 1.0, 20).unwrap();
        for g in &v {
            assert!(check_parabolic_admissible(g, 1.0, 64, 64, 1.0, 2.0));
            assert_eq!(g.g0(0.0), 1.0);
        }
    }
}
