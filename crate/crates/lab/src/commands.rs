use std::collections::BTreeMap;
use std::path::Path;

use carleman_core::carleman::{
    elliptic_bank, elliptic_sides_many, parabolic_bank, parabolic_sides_many, CarlemanSides, SweepResult,
};
use carleman_core::geometry::{GridDomain, GridField};
use carleman_core::solvers::{extract_cauchy, gamma_curve, solve_parabolic_with, ParabolicProblem, ProblemKind};
use carleman_core::stability::{
    evaluate_parabolic_sample, evaluate_sample, parabolic_ratio, sample_admissible, sample_parabolic_admissible,
    EllipticSetup, InitialProfile, ParabolicSetup, ParabolicStabilityReport, SeparableData,
};
use carleman_core::weights::{build_parabolic_weight, build_radial_weight, validate_weight, ExponentShift};
use carleman_core::{AdmissibleSpec, MetricField, ParabolicAdmissibleSpec, PotentialField, Result as CoreResult};
use carleman_core::{Error as CoreError, StabilityReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{DataConfig, ExperimentConfig, GeometryConfig, WeightConfig};
use crate::error::LabError;
use crate::oracles;
use crate::report::{num, opt, OutputDir};
use crate::{Command, RunSummary};

pub(crate) fn dispatch(cmd: Command, cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, LabError> {
    let mut out = OutputDir::create(dir)?;
    let mut lines = Vec::new();
    let failure = match cmd {
        Command::VerifyCarleman => verify_carleman(cfg, &mut out, &mut lines)?,
        Command::VerifyParabolic => verify_parabolic(cfg, &mut out, &mut lines)?,
        Command::Solve => solve(cfg, &mut out, &mut lines)?,
        Command::Stability => stability(cfg, &mut out, &mut lines)?,
        Command::ParabolicStability => parabolic_stability(cfg, &mut out, &mut lines)?,
        Command::OracleCheck => oracle_check(&mut out, &mut lines)?,
    };
    Ok(RunSummary {
        files: out.written,
        lines,
        failure,
    })
}

/// The config without its output block, so relocating a run leaves the
/// reports unchanged.
fn echo(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.remove("output");
    }
    v
}

fn params(w: &WeightConfig) -> Vec<(f64, f64)> {
    w.gammas
        .iter()
        .flat_map(|&g| w.s_values.iter().map(move |&s| (g, s)))
        .collect()
}

fn elliptic_sweep(cfg: &ExperimentConfig, dom: &GridDomain, w: &WeightConfig) -> CoreResult<SweepResult> {
    let g = MetricField::sample(cfg.metric, dom)?;
    let p = PotentialField::sample(cfg.potential.p, cfg.potential.eta, dom)?;
    let phi = build_radial_weight(dom, w.upsilon)?;
    validate_weight(&phi, w.upsilon, w.delta_min)?;
    let params = params(w);
    let bank = elliptic_bank();
    let per_member: Vec<_> = bank
        .par_iter()
        .map(|m| elliptic_sides_many(&phi, w.upsilon, &g, &p, &m.field(dom), &params, ExponentShift::Max))
        .collect();
    let mut evals = Vec::with_capacity(bank.len() * params.len());
    for r in per_member {
        match r {
            Ok(v) => evals.extend(v),
            Err(e) => evals.extend(params.iter().map(|_| Err(e.clone()))),
        }
    }
    SweepResult::assemble(
        bank.iter().map(|m| m.id()).collect(),
        w.gammas.clone(),
        w.s_values.clone(),
        evals,
    )
}

fn parabolic_sweep(
    cfg: &ExperimentConfig,
    dom: &GridDomain,
    n_t: usize,
    w: &WeightConfig,
) -> CoreResult<SweepResult> {
    let g = MetricField::sample(cfg.metric, dom)?;
    let phi = build_radial_weight(dom, w.upsilon)?;
    validate_weight(&phi, w.upsilon, w.delta_min)?;
    let params = params(w);
    let built: Vec<CoreResult<_>> = params
        .iter()
        .map(|&(gamma, s)| build_parabolic_weight(&phi, cfg.solver.t_final, n_t, gamma, s))
        .collect();
    let ok: Vec<_> = built.iter().filter_map(|b| b.as_ref().ok().cloned()).collect();
    let bank = parabolic_bank();
    let per_member: Vec<_> = bank
        .par_iter()
        .map(|m| parabolic_sides_many(&ok, w.upsilon, &g, |_, t| Ok(m.slice(dom, t)), ExponentShift::Max))
        .collect();
    let mut evals: Vec<CoreResult<CarlemanSides>> = Vec::with_capacity(bank.len() * params.len());
    for r in per_member {
        let mut next = 0;
        for b in &built {
            match (b, &r) {
                (Err(e), _) => evals.push(Err(e.clone())),
                (Ok(_), Ok(sides)) => {
                    evals.push(Ok(sides[next]));
                    next += 1;
                }
                (Ok(_), Err(e)) => evals.push(Err(e.clone())),
            }
        }
    }
    SweepResult::assemble(
        bank.iter().map(|m| m.id().to_string()).collect(),
        w.gammas.clone(),
        w.s_values.clone(),
        evals,
    )
}

const SWEEP_HEADER: [&str; 10] = [
    "test_id",
    "s",
    "gamma",
    "lhs_interior",
    "lhs_upsilon",
    "rhs_pde",
    "rhs_pi",
    "rhs_tau",
    "ratio",
    "flag",
];

fn sweep_rows(r: &SweepResult) -> Vec<Vec<String>> {
    r.points
        .iter()
        .map(|p| {
            let t = p.sides.map(|s| s.terms());
            let term = |k: usize| t.map(|t| num(t[k])).unwrap_or_default();
            vec![
                p.test_id.clone(),
                num(p.s),
                num(p.gamma),
                term(0),
                term(1),
                term(2),
                term(3),
                term(4),
                opt(p.ratio),
                p.flag.label(),
            ]
        })
        .collect()
}

fn flag_counts(r: &SweepResult) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for p in &r.points {
        *m.entry(p.flag.label()).or_insert(0) += 1;
    }
    m
}

/// Writes the sweep artifacts; `None` when a stable region was found on the
/// base grid.
fn write_sweep(
    cfg: &ExperimentConfig,
    prefix: &str,
    coarse: &SweepResult,
    refined: Option<&SweepResult>,
    grids: Value,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<Option<LabError>, LabError> {
    out.csv(&format!("{prefix}.csv"), &SWEEP_HEADER, sweep_rows(coarse))?;
    if let Some(r) = refined {
        out.csv(&format!("{prefix}_refined.csv"), &SWEEP_HEADER, sweep_rows(r))?;
    }
    let change = match (coarse.region, refined.and_then(|r| r.region)) {
        (Some(a), Some(b)) => Some((b.c_emp - a.c_emp).abs() / a.c_emp),
        _ => None,
    };
    let summary = json!({
        "config": echo(cfg),
        "grids": grids,
        "region": coarse.region,
        "diagnostic": coarse.diagnostic,
        "refined_region": refined.and_then(|r| r.region),
        "refined_diagnostic": refined.and_then(|r| r.diagnostic.clone()),
        "c_emp_relative_change": change,
        "flags": flag_counts(coarse),
    });
    out.json(&format!("{prefix}_summary.json"), &summary)?;
    // ratio against s, one series per bank member and gamma
    let ng = coarse.gamma_grid.len();
    let ns = coarse.s_grid.len();
    let mut pts = Vec::new();
    for (t, id) in coarse.test_ids.iter().enumerate() {
        for (a, g) in coarse.gamma_grid.iter().enumerate() {
            for b in 0..ns {
                let p = &coarse.points[t * ng * ns + a * ns + b];
                if let Some(r) = p.ratio {
                    pts.push((p.s, r, format!("{id} gamma={}", num(*g))));
                }
            }
        }
    }
    out.plot(&format!("{prefix}_plot.csv"), pts)?;

    match coarse.region {
        Some(r) => {
            lines.push(format!(
                "stable region: gamma* = {}, s* = {}, C_emp = {}",
                num(r.gamma_star),
                num(r.s_star),
                num(r.c_emp)
            ));
            if let Some(c) = change {
                lines.push(format!("C_emp relative change under refinement: {}", num(c)));
            }
            Ok(None)
        }
        None => {
            let msg = coarse.diagnostic.clone().unwrap_or_default();
            lines.push(format!("no stable region: {msg}"));
            Ok(Some(LabError::Numeric(CoreError::NoStableRegion(msg))))
        }
    }
}

fn verify_carleman(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<Option<LabError>, LabError> {
    let dom = cfg.domain()?;
    let w = cfg.weight()?;
    let coarse = elliptic_sweep(cfg, &dom, w)?;
    let fine_dom = dom.refined(2);
    let refined = if w.refine {
        Some(elliptic_sweep(cfg, &fine_dom, w)?)
    } else {
        None
    };
    let grids = json!({
        "base": {"n_r": dom.n_r, "n_theta": dom.n_theta},
        "refined": w.refine.then(|| json!({"n_r": fine_dom.n_r, "n_theta": fine_dom.n_theta})),
    });
    write_sweep(cfg, "sweep", &coarse, refined.as_ref(), grids, out, lines)
}

fn verify_parabolic(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<Option<LabError>, LabError> {
    let dom = cfg.domain()?;
    let w = cfg.weight()?;
    let n_t = cfg.solver.n_t;
    let coarse = parabolic_sweep(cfg, &dom, n_t, w)?;
    let fine_dom = dom.refined(2);
    let refined = if w.refine {
        Some(parabolic_sweep(cfg, &fine_dom, 2 * n_t, w)?)
    } else {
        None
    };
    let grids = json!({
        "base": {"n_r": dom.n_r, "n_theta": dom.n_theta, "n_t": n_t},
        "refined": w.refine.then(|| json!({"n_r": fine_dom.n_r, "n_theta": fine_dom.n_theta, "n_t": 2 * n_t})),
    });
    write_sweep(cfg, "parabolic_sweep", &coarse, refined.as_ref(), grids, out, lines)
}

pub(crate) fn elliptic_setup(cfg: &ExperimentConfig) -> Result<EllipticSetup, LabError> {
    let kind = match cfg.geometry()? {
        GeometryConfig::Disk { .. } => ProblemKind::Interior,
        GeometryConfig::Exterior { .. } => ProblemKind::ExteriorTruncated,
        GeometryConfig::Annulus { .. } => {
            return Err(LabError::Config("elliptic problems use a disk or exterior geometry".into()))
        }
    };
    Ok(EllipticSetup {
        kind,
        domain: cfg.domain()?,
        metric: cfg.metric,
        potential: cfg.potential.p,
        eta: cfg.potential.eta,
        gamma_radius: cfg.geometry()?.gamma_radius().unwrap_or_default(),
        tolerance: cfg.solver.tolerance,
        truncation_tol: cfg.solver.truncation_tol,
    })
}

pub(crate) fn parabolic_setup(cfg: &ExperimentConfig) -> Result<ParabolicSetup, LabError> {
    Ok(ParabolicSetup {
        domain: cfg.domain()?,
        metric: cfg.metric,
        gamma_radius: cfg.geometry()?.gamma_radius().unwrap_or_default(),
        t_final: cfg.solver.t_final,
        n_t: cfg.solver.n_t,
        tolerance: cfg.solver.tolerance,
    })
}

fn field_rows(u: &GridField) -> Vec<Vec<String>> {
    let d = u.domain;
    (0..d.node_count())
        .map(|idx| {
            let (i, j) = d.ring_and_angle(idx);
            vec![num(d.radius(i)), num(d.theta(j)), num(u.values[idx])]
        })
        .collect()
}

fn solve(cfg: &ExperimentConfig, out: &mut OutputDir, lines: &mut Vec<String>) -> Result<Option<LabError>, LabError> {
    let data = cfg.data.as_ref().ok_or_else(|| LabError::Config("missing data block".into()))?;
    match data {
        DataConfig::Elliptic { trace } => {
            let setup = elliptic_setup(cfg)?;
            let sol = setup.solve(trace)?;
            let c = extract_cauchy(&sol.field, &gamma_curve(&setup.domain, setup.gamma_radius)?)?;
            let record = evaluate_sample(0, trace, &setup);
            out.csv("solution.csv", &["r", "theta", "value"], field_rows(&sol.field))?;
            out.csv(
                "cauchy.csv",
                &["theta", "trace", "normal_derivative"],
                (0..c.theta.len()).map(|j| vec![num(c.theta[j]), num(c.trace[j]), num(c.normal_deriv[j])]),
            )?;
            out.json(
                "solve_summary.json",
                &json!({
                    "config": echo(cfg),
                    "kind": setup.kind,
                    "gamma_radius": c.radius,
                    "cg_iterations": sol.stats.iterations,
                    "cg_relative_residual": sol.stats.relative_residual,
                    "truncation_bound": sol.truncation_bound,
                    "cauchy_norms": c.norms,
                    "record": record,
                }),
            )?;
            lines.push(format!(
                "solved {} nodes in {} CG iterations; ratio = {}",
                setup.domain.node_count(),
                sol.stats.iterations,
                opt(record.ratio)
            ));
        }
        DataConfig::Parabolic { time, space } => {
            let setup = parabolic_setup(cfg)?;
            let g = SeparableData {
                t_final: setup.t_final,
                time: time.clone(),
                space: space.clone(),
            };
            let dom = setup.domain;
            let gc = gamma_curve(&dom, setup.gamma_radius)?;
            let r_s = dom.r_outer;
            let u0 = GridField::from_polar(&dom, |r, t| g.g0(0.0) * g.space.harmonic_extension(r, t, r_s));
            let bc = |t: f64, th: f64| g.eval(t, th);
            let mut prob = ParabolicProblem::new(MetricField::sample(setup.metric, &dom)?, setup.t_final, setup.n_t, u0, &bc);
            prob.tolerance = setup.tolerance;
            let mut rows = Vec::new();
            let mut last = None;
            let mut failure = None;
            let stats = solve_parabolic_with(&prob, |k, t, u| {
                match extract_cauchy(u, &gc) {
                    Ok(c) => rows.extend((0..c.theta.len()).map(|j| {
                        vec![num(t), num(c.theta[j]), num(c.trace[j]), num(c.normal_deriv[j])]
                    })),
                    Err(e) => failure = Some(e),
                }
                if k == setup.n_t {
                    last = Some(u.clone());
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            let record = parabolic_ratio(&g, cfg.epsilon(), &setup)?;
            if let Some(u) = &last {
                out.csv("solution.csv", &["r", "theta", "value"], field_rows(u))?;
            }
            out.csv("cauchy.csv", &["t", "theta", "trace", "normal_derivative"], rows)?;
            out.json(
                "solve_summary.json",
                &json!({
                    "config": echo(cfg),
                    "kind": "parabolic",
                    "gamma_radius": gc.radius,
                    "epsilon": cfg.epsilon(),
                    "stats": stats,
                    "record": record,
                }),
            )?;
            lines.push(format!(
                "solved {} time steps ({} CG iterations); ratio = {}",
                stats.steps,
                stats.total_iterations,
                opt(record.ratio)
            ));
        }
    }
    Ok(None)
}

fn stability(cfg: &ExperimentConfig, out: &mut OutputDir, lines: &mut Vec<String>) -> Result<Option<LabError>, LabError> {
    let setup = elliptic_setup(cfg)?;
    let a = cfg.admissible()?;
    let study = cfg.study()?;
    let spec = AdmissibleSpec {
        alpha: a.alpha,
        beta: a.beta,
        fourier_degree: a.fourier_degree,
        rng_seed: a.seed,
    };
    let samples = sample_admissible(&spec, setup.r_s(), setup.domain.n_theta, study.count)?;
    let records = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| evaluate_sample(i, s, &setup))
        .collect();
    let report = StabilityReport::assemble(spec, setup, samples, records, study.refine)?;

    out.csv(
        "stability.csv",
        &["sample_id", "h1_S", "h1_Gamma", "l2_dn_Gamma", "ratio", "error"],
        report.records.iter().map(|r| {
            vec![
                r.sample_id.to_string(),
                num(r.h1_s),
                num(r.h1_gamma),
                num(r.l2_dn_gamma),
                opt(r.ratio),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    out.json(
        "stability_summary.json",
        &json!({
            "config": echo(cfg),
            "spec": report.spec,
            "kind": report.setup.kind,
            "aggregate": report.aggregate,
            "refined": report.refined,
            "samples": report.samples,
        }),
    )?;
    out.plot(
        "stability_plot.csv",
        report
            .records
            .iter()
            .filter_map(|r| r.ratio.map(|v| (r.sample_id as f64, v, "ratio".to_string()))),
    )?;
    match report.aggregate {
        Some(agg) => lines.push(format!(
            "{} samples: max ratio {}, median {}, {} failures",
            report.records.len(),
            num(agg.max),
            num(agg.median),
            agg.failures
        )),
        None => lines.push(format!("{} samples: no determinate ratio", report.records.len())),
    }
    if let Some(r) = report.refined {
        lines.push(format!("worst sample on refined grid: {} (change {})", num(r.ratio), num(r.relative_change)));
    }
    Ok(None)
}

fn parabolic_stability(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    lines: &mut Vec<String>,
) -> Result<Option<LabError>, LabError> {
    let setup = parabolic_setup(cfg)?;
    let a = cfg.admissible()?;
    let study = cfg.study()?;
    let eps = cfg.epsilon();
    let spec = ParabolicAdmissibleSpec {
        alpha: a.alpha,
        beta: a.beta,
        u0: InitialProfile::HarmonicExtension,
        time_degree: a.time_degree,
        fourier_degree: a.fourier_degree,
        rng_seed: a.seed,
    };
    let samples = sample_parabolic_admissible(
        &spec,
        setup.domain.r_outer,
        setup.domain.n_theta,
        setup.n_t,
        setup.t_final,
        study.count,
    )?;
    let records = samples
        .par_iter()
        .enumerate()
        .map(|(i, g)| evaluate_parabolic_sample(i, g, eps, &setup))
        .collect();
    let report = ParabolicStabilityReport::assemble(spec, setup, eps, samples, records, study.refine)?;

    out.csv(
        "parabolic_stability.csv",
        &[
            "sample_id",
            "h1_S_window",
            "h1_g1_S",
            "h1_Sigma0",
            "l2_dn_Sigma0",
            "ratio",
            "corollary_ratio",
            "error",
        ],
        report.records.iter().map(|r| {
            vec![
                r.sample_id.to_string(),
                num(r.h1_window_s),
                num(r.h1_g1_s),
                num(r.h1_sigma0),
                num(r.l2_dn_sigma0),
                opt(r.ratio),
                opt(r.corollary_ratio),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    out.json(
        "parabolic_stability_summary.json",
        &json!({
            "config": echo(cfg),
            "spec": report.spec,
            "epsilon": report.epsilon,
            "aggregate": report.aggregate,
            "corollary_aggregate": report.corollary_aggregate,
            "refined": report.refined,
            "samples": report.samples,
        }),
    )?;
    let mut pts = Vec::new();
    for r in &report.records {
        if let Some(v) = r.ratio {
            pts.push((r.sample_id as f64, v, "ratio".to_string()));
        }
        if let Some(v) = r.corollary_ratio {
            pts.push((r.sample_id as f64, v, "corollary_ratio".to_string()));
        }
    }
    out.plot("parabolic_stability_plot.csv", pts)?;
    match report.aggregate {
        Some(agg) => lines.push(format!(
            "{} samples at eps = {}: max ratio {}, median {}, {} failures",
            report.records.len(),
            num(eps),
            num(agg.max),
            num(agg.median),
            agg.failures
        )),
        None => lines.push(format!("{} samples: no determinate ratio", report.records.len())),
    }
    if let Some(c) = report.corollary_aggregate {
        lines.push(format!("corollary ratio: max {}, median {}", num(c.max), num(c.median)));
    }
    Ok(None)
}

fn oracle_check(out: &mut OutputDir, lines: &mut Vec<String>) -> Result<Option<LabError>, LabError> {
    let results = oracles::run_all();
    for r in &results {
        lines.push(format!(
            "{} {}: value {} reference {} error {} (tolerance {})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            num(r.value),
            num(r.reference),
            num(r.error),
            num(r.tolerance)
        ));
    }
    out.json("oracle_check.json", &results)?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    Ok((!failed.is_empty()).then(|| LabError::OracleFailed(failed.join(", "))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use carleman_core::geometry::BoundaryId;

    #[test]
    fn params_are_gamma_major() {
        let w = WeightConfig {
            upsilon: BoundaryId::Inner,
            gammas: vec![1.0, 2.0],
            s_values: vec![3.0, 4.0, 5.0],
            delta_min: 1e-3,
            refine: false,
        };
        let p = params(&w);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], (1.0, 3.0));
        assert_eq!(p[2], (1.0, 5.0));
        assert_eq!(p[3], (2.0, 3.0));
    }
}
