//! Task execution: each task turns a validated scenario into a structured
//! result, a set of tables and a list of pass/fail checks.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use plap_core::capacity::{
    self, check_obstacle_solution, BarrierReport, CapacityError, LocalityReport, PotentialCheck,
    ProbeLevel, RegularityReport, Verdict,
};
use plap_core::degiorgi::{
    self, CaccioppoliReport, DecayConfig, DecayReport, IterationSchedule, LevelSetStats,
};
use plap_core::degiorgi::{OscillationEntry, ThresholdReport};
use plap_core::domain::{Membership, NodeLabel};
use plap_core::operator::Stencil;
use plap_core::solver::{
    generalized_solution, solve_dirichlet, solve_obstacle, BoundaryData, CauchyEntry,
    ObstacleConstraint, SolveError, SolveReport,
};
use plap_core::{build_grid, math, Field, GridDomain, Point, ShapeSpec};

use crate::expr::Expr;
use crate::output::Table;
use crate::scenario::{
    DegiorgiParams, DirichletParams, Expect, LocalityParams, ObstacleParams, RadialOracle,
    Scenario, Task,
};

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    /// The scenario is well-formed but cannot be set up (exit code 2).
    #[error("{0}")]
    Config(String),
    /// A computation failed (exit code 1).
    #[error("{0}")]
    Run(String),
}

impl From<CapacityError> for TaskError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::Solve(s) => TaskError::Run(s.to_string()),
            other => TaskError::Config(other.to_string()),
        }
    }
}

impl From<SolveError> for TaskError {
    fn from(e: SolveError) -> Self {
        TaskError::Run(e.to_string())
    }
}

fn grid(shape: &ShapeSpec, h: f64) -> Result<GridDomain, TaskError> {
    build_grid(shape, h).map_err(|e| TaskError::Config(format!("shape at h = {h}: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: None,
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub converged: bool,
    pub checks: Vec<Check>,
    /// Verdict, or whether the solve converged.
    pub status: String,
    pub key_metric: Option<(String, f64)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.converged && self.checks.iter().all(|c| c.passed)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn converged_status(c: bool) -> String {
    if c { "converged" } else { "not-converged" }.to_string()
}

#[derive(Serialize)]
struct GridSummary {
    h: f64,
    nodes: usize,
    interior: usize,
    boundary: usize,
    warnings: Vec<String>,
}

fn summary(g: &GridDomain) -> GridSummary {
    GridSummary {
        h: g.h(),
        nodes: g.lattice.len(),
        interior: g.count(NodeLabel::Interior),
        boundary: g.count(NodeLabel::Boundary),
        warnings: g.warnings.clone(),
    }
}

pub fn execute(s: &Scenario) -> Result<Outcome, TaskError> {
    match &s.task {
        Task::Dirichlet(p) => dirichlet(s, p),
        Task::Obstacle(p) => obstacle(s, p),
        Task::WienerProbe(p) => {
            let mut cfg = p.clone();
            cfg.criteria.solid_angle.seed = s.seed;
            probe(s, &cfg)
        }
        Task::Barrier(p) => barrier(s, p.h, &p.barrier),
        Task::DegiorgiInstrument(p) => instrument(s, p),
        Task::Locality(p) => locality(s, p),
    }
}

fn expect_error(expect: &Expect, err: Option<f64>, checks: &mut Vec<Check>) {
    if let Some(bound) = expect.max_error {
        let ok = err.is_some_and(|e| e <= bound);
        checks.push(
            Check::new("expect.max_error", ok).detail(format!("measured {err:?}, bound {bound}")),
        );
    }
}

fn expect_verdict(expect: &Expect, verdict: Verdict, checks: &mut Vec<Check>) {
    if let Some(v) = expect.verdict {
        checks.push(Check::new("expect.verdict", v == verdict).detail(format!(
            "got {}, expected {}",
            verdict.as_str(),
            v.as_str()
        )));
    }
}

#[derive(Serialize)]
struct DirichletResult {
    grid: GridSummary,
    solve: Vec<SolveReport>,
    data_range: (f64, f64),
    solution_range: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    widths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cauchy: Option<Vec<CauchyEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_holds: Option<bool>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn dirichlet(s: &Scenario, p: &DirichletParams) -> Result<Outcome, TaskError> {
    let g = grid(&s.shape, p.h)?;
    let y = p.y.as_deref().map_or([0.0; 3], math::to_point);
    let data = Expr::parse(&p.boundary).map_err(|e| TaskError::Config(e.to_string()))?;
    let phi = BoundaryData::from_fn(&g, |x| data.eval(x, &y), p.smooth);
    if !phi.is_finite(&g) {
        return Err(TaskError::Config(
            "params.boundary: not finite at every boundary node".into(),
        ));
    }
    let (u, reports, gen) = match &p.generalized {
        Some(gp) => {
            let gs = generalized_solution(&g, &s.operator, &phi, gp.levels, gp.kind, &p.solver)?;
            (gs.field.clone(), gs.reports.clone(), Some(gs))
        }
        None => {
            let (u, r) = solve_dirichlet(&g, &s.operator, &phi, &p.solver)?;
            (u, vec![r], None)
        }
    };
    let converged = reports.iter().all(|r| r.converged);
    let tol = p.solver.tol();
    let data_range = range(g.boundary_nodes().map(|i| phi.values.values[i]));
    let solution_range = range(g.interior_nodes().map(|i| u.values[i]));
    let mut checks = vec![Check::new(
        "maximum principle",
        solution_range.0 >= data_range.0 - 2.0 * tol
            && solution_range.1 <= data_range.1 + 2.0 * tol,
    )];
    let max_error = match &p.exact {
        Some(src) => {
            let ex = Expr::parse(src).map_err(|e| TaskError::Config(e.to_string()))?;
            Some(
                g.interior_nodes()
                    .chain(g.boundary_nodes())
                    .map(|i| (u.values[i] - ex.eval(&g.point(i), &y)).abs())
                    .fold(0.0, f64::max),
            )
        }
        None => None,
    };
    expect_error(&s.expect, max_error, &mut checks);
    let mut tables = Vec::new();
    if let Some(gs) = &gen {
        checks.push(Check::new("contraction", gs.contraction_holds));
        let mut t = Table::new(
            "cauchy",
            &["k", "j", "field_diff", "data_diff", "within_bound"],
        );
        for c in &gs.cauchy {
            t.push(vec![
                c.k.into(),
                c.j.into(),
                c.field_diff.into(),
                c.data_diff.into(),
                c.within_bound.into(),
            ]);
        }
        tables.push(t);
    }
    let result = DirichletResult {
        grid: summary(&g),
        solve: reports,
        data_range,
        solution_range,
        max_error,
        widths: gen.as_ref().map(|gs| gs.widths.clone()),
        cauchy: gen.as_ref().map(|gs| gs.cauchy.clone()),
        contraction_holds: gen.as_ref().map(|gs| gs.contraction_holds),
    };
    Ok(Outcome {
        result: to_value(&result),
        tables,
        converged,
        checks,
        status: converged_status(converged),
        key_metric: max_error.map(|e| ("max_error".to_string(), e)),
    })
}

/// Interior nodes in the closed region.
fn region_nodes(g: &GridDomain, region: &plap_core::Shape) -> Vec<usize> {
    let spec = ShapeSpec {
        dim: g.dim(),
        root: region.clone(),
    };
    g.interior_nodes()
        .filter(|&i| spec.classify(&g.point(i), 0.5 * g.h()) != Membership::Outside)
        .collect()
}

/// The radial obstacle solution `u(r)` on `inner ≤ r ≤ outer`.
pub fn radial_profile(o: &RadialOracle, t: f64, dim: usize, m: f64, r: f64) -> f64 {
    let n = dim as f64;
    if t == n {
        m * (o.outer / r).ln() / (o.outer / o.inner).ln()
    } else {
        let q = (t - n) / (t - 1.0);
        m * (r.powf(q) - o.outer.powf(q)) / (o.inner.powf(q) - o.outer.powf(q))
    }
}

#[derive(Serialize)]
struct RadialComparison {
    max_relative_error: f64,
    worst_radius: f64,
    compared_nodes: usize,
    /// `(r, computed, exact)` along the first axis.
    profile: Vec<(f64, f64, f64)>,
}

#[derive(Serialize)]
struct ObstacleResult {
    grid: GridSummary,
    constraint_nodes: usize,
    solve: SolveReport,
    check: PotentialCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    radial: Option<RadialComparison>,
}

fn solve_region(
    s: &Scenario,
    g: &GridDomain,
    region: &plap_core::Shape,
    m: f64,
    sign: plap_core::solver::Sign,
    cfg: &plap_core::solver::SolverConfig,
) -> Result<(Vec<usize>, Field, SolveReport, PotentialCheck), TaskError> {
    let nodes = region_nodes(g, region);
    if nodes.is_empty() {
        return Err(TaskError::Config(format!(
            "params.region: contains no interior node at h = {}",
            g.h()
        )));
    }
    let c = ObstacleConstraint {
        nodes: nodes.clone(),
        m,
        sign,
    };
    let (u, rep) = solve_obstacle(g, &c, &s.operator, cfg)?;
    let check = check_obstacle_solution(g, &u, &nodes, &s.operator, sign, m, cfg.tol())?;
    Ok((nodes, u, rep, check))
}

fn obstacle(s: &Scenario, p: &ObstacleParams) -> Result<Outcome, TaskError> {
    let g = grid(&s.shape, p.h)?;
    let (nodes, u, solve, check) = solve_region(s, &g, &p.region, p.m, p.sign, &p.solver)?;
    let mut checks = vec![Check::new("obstacle characterization", check.passed)];
    let mut tables = Vec::new();
    let radial = p.radial.as_ref().map(|o| {
        let c = math::to_point(&o.center);
        let sm = p.sign.value() * p.m;
        let (mut worst, mut at, mut count) = (0.0f64, f64::NAN, 0usize);
        let mut profile = Vec::new();
        for i in g.interior_nodes() {
            let x = g.point(i);
            let r = math::dist(&x, &c);
            if r < o.inner || r > o.r_max {
                continue;
            }
            let exact = radial_profile(o, s.operator.t, g.dim(), sm, r);
            let err = ((u.values[i] - exact) / exact).abs();
            count += 1;
            if err > worst {
                worst = err;
                at = r;
            }
            let on_axis = (1..g.dim()).all(|d| x[d] == c[d]) && x[0] > c[0];
            if on_axis {
                profile.push((r, u.values[i], exact));
            }
        }
        profile.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut t = Table::new("radial_profile", &["r", "computed", "exact"]);
        for &(r, v, e) in &profile {
            t.push(vec![r.into(), v.into(), e.into()]);
        }
        tables.push(t);
        RadialComparison {
            max_relative_error: worst,
            worst_radius: at,
            compared_nodes: count,
            profile,
        }
    });
    let err = radial.as_ref().map(|r| r.max_relative_error);
    expect_error(&s.expect, err, &mut checks);
    let converged = solve.converged;
    let result = ObstacleResult {
        grid: summary(&g),
        constraint_nodes: nodes.len(),
        solve,
        check,
        radial,
    };
    Ok(Outcome {
        result: to_value(&result),
        tables,
        converged,
        checks,
        status: converged_status(converged),
        key_metric: err.map(|e| ("max_relative_error".to_string(), e)),
    })
}

/// Runs a probe with its levels in parallel.
pub fn run_probe(
    shape: &ShapeSpec,
    cfg: &plap_core::capacity::WienerProbeConfig,
    spec: &plap_core::OperatorSpec,
) -> Result<RegularityReport, CapacityError> {
    let sigma = capacity::prepare_probe(shape, cfg, spec)?;
    let levels: Vec<ProbeLevel> = cfg
        .levels
        .par_iter()
        .map(
            |&h| match capacity::probe_level(shape, &sigma, cfg, spec, h) {
                Ok(r) => ProbeLevel {
                    h,
                    result: Some(r),
                    error: None,
                },
                Err(e) => ProbeLevel {
                    h,
                    result: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    Ok(capacity::finish_probe(shape, cfg, spec, sigma, levels))
}

fn probe_converged(r: &RegularityReport) -> bool {
    r.levels
        .iter()
        .all(|l| l.result.as_ref().is_some_and(|x| x.solve.converged))
}

fn probe_checks(r: &RegularityReport, checks: &mut Vec<Check>, label: &str) {
    for l in &r.levels {
        match &l.result {
            Some(x) => checks.push(Check::new(
                &format!("{label}potential check at h = {}", l.h),
                x.check.passed,
            )),
            None => checks.push(
                Check::new(&format!("{label}level h = {}", l.h), false)
                    .detail(l.error.clone().unwrap_or_default()),
            ),
        }
    }
}

fn probe_tables(r: &RegularityReport, suffix: &str) -> Vec<Table> {
    let mut t = Table::new(
        &format!("probe{suffix}"),
        &["h", "k", "r_k", "omega", "deficit_near_y"],
    );
    for row in r.rows() {
        t.push(vec![
            row.h.into(),
            row.k.into(),
            row.r_k.into(),
            row.omega.into(),
            row.deficit_near_y.into(),
        ]);
    }
    let mut out = vec![t];
    if let Some(c) = &r.criteria {
        let mut t = Table::new(
            &format!("criteria{suffix}"),
            &[
                "k",
                "r_k",
                "sigma",
                "sigma_double",
                "solid_angle",
                "sigma_hat",
            ],
        );
        for x in &c.radii {
            t.push(vec![
                x.k.into(),
                x.r.into(),
                x.sigma.into(),
                x.sigma_double.into(),
                x.solid_angle.into(),
                x.sigma_hat.into(),
            ]);
        }
        out.push(t);
        if let Some(d) = &c.decay {
            out.push(envelope_table(&format!("envelope{suffix}"), d, None));
        }
    }
    out
}

fn envelope_table(name: &str, d: &DecayReport, h: Option<f64>) -> Table {
    let mut t = Table::new(name, &["h", "k", "r_k", "omega", "envelope", "n0", "eta"]);
    for e in &d.entries {
        t.push(vec![
            h.into(),
            e.k.into(),
            e.r.into(),
            e.omega.into(),
            e.envelope.into(),
            e.n0.into(),
            e.eta.into(),
        ]);
    }
    t
}

fn probe(s: &Scenario, cfg: &plap_core::capacity::WienerProbeConfig) -> Result<Outcome, TaskError> {
    let rep = run_probe(&s.shape, cfg, &s.operator)?;
    let converged = probe_converged(&rep);
    let mut checks = Vec::new();
    probe_checks(&rep, &mut checks, "");
    expect_verdict(&s.expect, rep.verdict, &mut checks);
    Ok(Outcome {
        tables: probe_tables(&rep, ""),
        result: to_value(&rep),
        converged,
        checks,
        status: rep.verdict.as_str().to_string(),
        key_metric: rep.decay_ratio.map(|q| ("decay_ratio".to_string(), q)),
    })
}

#[derive(Serialize)]
struct BarrierResult {
    grid: GridSummary,
    report: BarrierReport,
}

fn barrier(
    s: &Scenario,
    h: f64,
    cfg: &plap_core::capacity::BarrierConfig,
) -> Result<Outcome, TaskError> {
    let g = grid(&s.shape, h)?;
    let (_, _, rep) = capacity::barrier_build(&g, &s.operator, cfg)?;
    let mut checks = vec![
        Check::new("(j) on the far boundary", rep.j_holds),
        Check::new("V >= 0", rep.v_nonnegative),
        Check::new("U <= 0", rep.u_nonpositive),
    ];
    if let Some(want) = s.expect.jj_trend {
        checks.push(Check::new("expect.jj_trend", rep.jj_trend == want));
    }
    let mut t = Table::new("barrier", &["delta", "v_max", "u_min"]);
    for (a, b) in rep.v_maxima.iter().zip(&rep.u_minima) {
        t.push(vec![a.0.into(), a.1.into(), b.1.into()]);
    }
    let converged = rep.v_solve.converged && rep.u_solve.converged;
    let ratio = match (rep.v_maxima.first(), rep.v_maxima.last()) {
        (Some((_, Some(a))), Some((_, Some(b)))) if *a > 0.0 => Some(b / a),
        _ => None,
    };
    let status = if rep.jj_trend {
        "jj-trend"
    } else {
        "no-jj-trend"
    }
    .to_string();
    Ok(Outcome {
        result: to_value(&BarrierResult {
            grid: summary(&g),
            report: rep,
        }),
        tables: vec![t],
        converged,
        checks,
        status,
        key_metric: ratio.map(|q| ("v_max_ratio".to_string(), q)),
    })
}

#[derive(Serialize)]
struct InstrumentLevel {
    h: f64,
    constraint_nodes: usize,
    solve: SolveReport,
    check: PotentialCheck,
    level_stats: Vec<LevelSetStats>,
    caccioppoli: Vec<CaccioppoliReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<ThresholdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oscillation: Option<Vec<OscillationEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<DecayReport>,
}

#[derive(Serialize)]
struct InstrumentResult {
    theta: degiorgi::Constants,
    levels: Vec<InstrumentLevel>,
}

fn instrument_level(
    s: &Scenario,
    p: &DegiorgiParams,
    h: f64,
) -> Result<InstrumentLevel, TaskError> {
    let g = grid(&s.shape, h)?;
    let (nodes, u, solve, check) = solve_region(
        s,
        &g,
        &p.region,
        p.m,
        plap_core::solver::Sign::Plus,
        &p.solver,
    )?;
    let y: Point = math::to_point(&p.y);
    let t = s.operator.t;
    let level_stats = p
        .level_stats
        .iter()
        .map(|q| degiorgi::level_stats(&g, &u, &y, q.k, q.rho, t))
        .collect();
    let stencil = Stencil::new(&g);
    let caccioppoli = p
        .caccioppoli
        .iter()
        .map(|q| {
            degiorgi::check_caccioppoli(
                &g,
                &stencil,
                &u,
                &y,
                q.k,
                q.rho,
                q.big_r,
                t,
                p.solver.tol(),
            )
        })
        .collect();
    let threshold = p.schedule.as_ref().map(|sc| {
        let trial = IterationSchedule {
            r0: sc.r0,
            k0: sc.k0,
            d: sc.d,
            levels: sc.levels,
        };
        degiorgi::fit_threshold(&g, &u, &y, &trial, t)
    });
    let (oscillation, decay) = match &p.oscillation {
        Some(o) => {
            let seq = degiorgi::oscillation_sequence(&g, &u, &y, o.r0, o.ratio, o.count);
            let decay = o.sigma.as_ref().map(|sig| {
                let radii: Vec<f64> = (0..=o.count)
                    .map(|k| o.r0 * o.ratio.powi(-(k as i32)))
                    .collect();
                let omega: Vec<f64> = (0..=o.count)
                    .map(|k| seq.iter().find(|e| e.k == k).map_or(f64::NAN, |e| e.omega))
                    .collect();
                let cfg = DecayConfig {
                    c1: o.c1,
                    t,
                    lower_order: o.lower_order,
                    ..DecayConfig::default()
                };
                degiorgi::n0_and_decay(&radii, sig, &omega, &cfg)
            });
            (Some(seq), decay)
        }
        None => (None, None),
    };
    Ok(InstrumentLevel {
        h,
        constraint_nodes: nodes.len(),
        solve,
        check,
        level_stats,
        caccioppoli,
        threshold,
        oscillation,
        decay,
    })
}

fn instrument(s: &Scenario, p: &DegiorgiParams) -> Result<Outcome, TaskError> {
    let levels: Vec<InstrumentLevel> = p
        .levels
        .par_iter()
        .map(|&h| instrument_level(s, p, h))
        .collect::<Result<_, _>>()?;
    let converged = levels.iter().all(|l| l.solve.converged);
    let mut checks = Vec::new();
    let mut stats = Table::new(
        "level_stats",
        &["h", "source", "m", "k", "rho", "b", "u_int", "psi"],
    );
    let mut cacc = Table::new(
        "caccioppoli",
        &["h", "k", "rho", "big_r", "lhs", "rhs", "c_emp", "violation"],
    );
    let mut osc = Table::new("oscillation", &["h", "k", "r_k", "inf", "sup", "omega"]);
    let mut env: Option<Table> = None;
    for l in &levels {
        checks.push(Check::new(
            &format!("obstacle characterization at h = {}", l.h),
            l.check.passed,
        ));
        for (i, st) in l.level_stats.iter().enumerate() {
            stats.push(vec![
                l.h.into(),
                "query".into(),
                i.into(),
                st.k.into(),
                st.rho.into(),
                st.b.into(),
                st.u_int.into(),
                st.psi.into(),
            ]);
        }
        if let Some(th) = &l.threshold {
            for (m, st) in th.trial.stats.iter().enumerate() {
                stats.push(vec![
                    l.h.into(),
                    "schedule".into(),
                    m.into(),
                    st.k.into(),
                    st.rho.into(),
                    st.b.into(),
                    st.u_int.into(),
                    st.psi.into(),
                ]);
            }
            checks.push(Check::new(
                &format!("psi nonincreasing at h = {}", l.h),
                th.trial.nonincreasing,
            ));
            if let Some(f) = &th.fitted {
                for (m, st) in f.stats.iter().enumerate() {
                    stats.push(vec![
                        l.h.into(),
                        "fitted".into(),
                        m.into(),
                        st.k.into(),
                        st.rho.into(),
                        st.b.into(),
                        st.u_int.into(),
                        st.psi.into(),
                    ]);
                }
                checks.push(Check::new(
                    &format!("psi geometric decay at the fitted drop, h = {}", l.h),
                    f.geometric_decay,
                ));
            }
            if let Some(empty) = th.empty {
                checks.push(Check::new(
                    &format!("B(k0 - d, r0/2) empty at h = {}", l.h),
                    empty,
                ));
            }
        }
        for c in &l.caccioppoli {
            cacc.push(vec![
                l.h.into(),
                c.k.into(),
                c.rho.into(),
                c.big_r.into(),
                c.lhs.into(),
                c.rhs.into(),
                c.c_emp.into(),
                c.violation.into(),
            ]);
            checks.push(Check::new(
                &format!("Caccioppoli at h = {}, k = {}, rho = {}", l.h, c.k, c.rho),
                !c.violation,
            ));
        }
        if let Some(seq) = &l.oscillation {
            for e in seq {
                osc.push(vec![
                    l.h.into(),
                    e.k.into(),
                    e.r.into(),
                    e.inf.into(),
                    e.sup.into(),
                    e.omega.into(),
                ]);
            }
        }
        if let Some(d) = &l.decay {
            let t = envelope_table("envelope", d, Some(l.h));
            match &mut env {
                Some(e) => e.rows.extend(t.rows),
                None => env = Some(t),
            }
        }
    }
    if levels.len() > 1 {
        for (i, q) in p.caccioppoli.iter().enumerate() {
            let c: Vec<f64> = levels.iter().map(|l| l.caccioppoli[i].c_emp).collect();
            let (lo, hi) = range(c.iter().copied());
            let stable = hi == 0.0 || (lo > 0.0 && hi.is_finite() && hi <= 2.0 * lo);
            checks.push(
                Check::new(
                    &format!(
                        "c_emp within factor 2 across levels, k = {}, rho = {}",
                        q.k, q.rho
                    ),
                    stable,
                )
                .detail(format!("{c:?}")),
            );
        }
    }
    let key = levels
        .last()
        .and_then(|l| l.caccioppoli.first())
        .map(|c| ("c_emp".to_string(), c.c_emp));
    let mut tables = vec![stats, cacc];
    if !osc.rows.is_empty() {
        tables.push(osc);
    }
    tables.extend(env);
    let result = InstrumentResult {
        theta: degiorgi::constants(s.operator.t, s.shape.dim),
        levels,
    };
    Ok(Outcome {
        result: to_value(&result),
        tables,
        converged,
        checks,
        status: converged_status(converged),
        key_metric: key,
    })
}

fn locality(s: &Scenario, p: &LocalityParams) -> Result<Outcome, TaskError> {
    let mut cfg = p.probe.clone();
    cfg.criteria.solid_angle.seed = s.seed;
    cfg.validate(s.shape.dim)?;
    let compared = capacity::check_same_near(&s.shape, &p.lambda, &cfg.point(), p.r, cfg.finest())?;
    let a = run_probe(&s.shape, &cfg, &s.operator)?;
    let b = run_probe(&p.lambda, &cfg, &s.operator)?;
    let agree = a.verdict == b.verdict;
    let converged = probe_converged(&a) && probe_converged(&b);
    let mut checks = vec![Check::new("verdicts agree", agree).detail(format!(
        "{} vs {}",
        a.verdict.as_str(),
        b.verdict.as_str()
    ))];
    probe_checks(&a, &mut checks, "omega: ");
    probe_checks(&b, &mut checks, "lambda: ");
    if let Some(v) = s.expect.verdict {
        checks.push(Check::new(
            "expect.verdict",
            a.verdict == v && b.verdict == v,
        ));
    }
    let mut tables = probe_tables(&a, "_omega");
    tables.extend(probe_tables(&b, "_lambda"));
    let status = if agree { "agree" } else { "disagree" }.to_string();
    let rep = LocalityReport {
        r: p.r,
        compared_nodes: compared,
        omega: a,
        lambda: b,
        agree,
    };
    Ok(Outcome {
        result: to_value(&rep),
        tables,
        converged,
        checks,
        status,
        key_metric: None,
    })
}
