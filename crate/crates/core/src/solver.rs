//! Nonlinear Gauss–Seidel minimisation of the discrete energy over Dirichlet
//! and obstacle constraint sets.
//!
//! Each node update minimises the energy exactly along that node's value
//! (safeguarded Newton on the monotone 1D derivative), projects onto the
//! obstacle bounds, and is then over-relaxed. An over-relaxed value that would
//! raise the local energy is replaced by the exact minimiser, so the energy
//! never increases between sweeps.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, NodeLabel};
use crate::math;
use crate::operator::{Field, OperatorError, OperatorKind, OperatorSpec, Stencil, Term, MAX_TERMS};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    Lexicographic,
    /// Nodes with even index sum first, then odd.
    RedBlack,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol_u: f64,
    pub tol_r: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    /// Over-relaxation factor; `None` picks `2 / (1 + sin(π h / L))`.
    pub omega: Option<f64>,
    /// Start nonlinear solves from the `t = 2` solution.
    pub warm_start: bool,
    /// Record the energy after every sweep.
    pub track_energy: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_u: 1e-8,
            tol_r: 1e-8,
            max_sweeps: 100_000,
            order: SweepOrder::Lexicographic,
            omega: None,
            warm_start: true,
            track_energy: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol_u: tol,
            tol_r: tol,
            ..Self::default()
        }
    }

    /// The larger of the two tolerances.
    pub fn tol(&self) -> f64 {
        self.tol_u.max(self.tol_r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy: f64,
    pub max_update: f64,
    /// Largest `|residual|` over nodes not held at a bound.
    pub max_residual: f64,
    /// Most negative one-sided residual violation on nodes held at a bound.
    pub bound_residual: f64,
    pub converged: bool,
    pub omega: f64,
    pub warm_start_sweeps: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub energy_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl SolveReport {
    /// Whether the recorded energies never increase beyond `slack`.
    pub fn energy_monotone(&self, slack: f64) -> bool {
        self.energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * (1.0 + w[0].abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    Operator(OperatorError),
    NonPotential,
    Invalid(String),
}

impl core::fmt::Display for SolveError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolveError::Operator(e) => e.fmt(f),
            SolveError::NonPotential => f.write_str(
                "the solver needs a potential operator; custom fields have residuals only",
            ),
            SolveError::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<OperatorError> for SolveError {
    fn from(e: OperatorError) -> Self {
        SolveError::Operator(e)
    }
}

/// Dirichlet data, stored at the boundary nodes of one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub values: Field,
    /// The data is already smooth (a closed form), so mollifying it is a no-op.
    pub smooth: bool,
}

impl BoundaryData {
    pub fn from_fn(domain: &GridDomain, mut f: impl FnMut(&Point) -> f64, smooth: bool) -> Self {
        let mut values = Field::zeros(domain);
        for i in domain.boundary_nodes() {
            values.values[i] = f(&domain.point(i));
        }
        Self { values, smooth }
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self::from_fn(domain, |_| c, true)
    }

    pub fn is_finite(&self, domain: &GridDomain) -> bool {
        domain
            .boundary_nodes()
            .all(|i| self.values.values[i].is_finite())
    }

    /// `sup_{∂Ω} |φ|`.
    pub fn sup_norm(&self, domain: &GridDomain) -> f64 {
        domain
            .boundary_nodes()
            .map(|i| self.values.values[i].abs())
            .fold(0.0, f64::max)
    }

    fn range(&self, domain: &GridDomain) -> (f64, f64) {
        domain
            .boundary_nodes()
            .map(|i| self.values.values[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `v ≥ m` (sign `+`) or `v ≤ −m` (sign `−`) on the nodes `E` of a solve
/// region whose boundary carries zero data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConstraint {
    pub nodes: Vec<usize>,
    pub m: f64,
    pub sign: Sign,
}

fn check_spec(spec: &OperatorSpec) -> Result<(), SolveError> {
    spec.validate()?;
    if !spec.is_potential() {
        return Err(SolveError::NonPotential);
    }
    Ok(())
}

fn is_linear(spec: &OperatorSpec) -> bool {
    match spec.kind {
        OperatorKind::PLaplace | OperatorKind::RegularizedPLaplace => spec.t == 2.0,
        OperatorKind::Custom => true,
    }
}

/// Returns `Σ A(g)·c` and `Σ cᵀ DA(g) c` at centre value `s`.
#[inline]
fn local_derivative(spec: &OperatorSpec, terms: &[Term], s0: f64, s: f64) -> (f64, f64) {
    let ds = s - s0;
    let mut r = 0.0;
    let mut d = 0.0;
    for t in terms {
        let g = [
            t.g0[0] + ds * t.c[0],
            t.g0[1] + ds * t.c[1],
            t.g0[2] + ds * t.c[2],
        ];
        let (a, b) = spec.flux_and_curvature(&g, &t.c);
        r += a;
        d += b;
    }
    (r, d)
}

fn local_energy(spec: &OperatorSpec, terms: &[Term], s0: f64, s: f64) -> f64 {
    let ds = s - s0;
    terms
        .iter()
        .map(|t| {
            let g = [
                t.g0[0] + ds * t.c[0],
                t.g0[1] + ds * t.c[1],
                t.g0[2] + ds * t.c[2],
            ];
            spec.density(&g).unwrap_or(0.0)
        })
        .sum()
}

const SCALAR_TOL: f64 = 1e-14;
const SCALAR_ITERS: usize = 200;

/// Exact minimiser of the convex local energy, as the root of its
/// nondecreasing derivative: Newton steps, kept inside the sign bracket once
/// one is known and replaced by bisection when they leave it.
fn local_min(spec: &OperatorSpec, terms: &[Term], s0: f64, linear: bool) -> f64 {
    let (r0, d0) = local_derivative(spec, terms, s0, s0);
    if r0 == 0.0 {
        return s0;
    }
    if linear && d0 > 0.0 {
        return s0 - r0 / d0;
    }
    let (mut lo, mut hi) = if r0 < 0.0 {
        (s0, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, s0)
    };
    let mut x = s0;
    let (mut r, mut d) = (r0, d0);
    let mut reach = 1e-12 * (1.0 + s0.abs());
    for _ in 0..SCALAR_ITERS {
        let mut nx = if d > 0.0 { x - r / d } else { f64::NAN };
        if (nx - x).abs() <= SCALAR_TOL * x.abs().max(1.0) {
            return nx.clamp(lo, hi);
        }
        if !(nx >= lo && nx <= hi) {
            nx = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                reach = reach.max((nx - x).abs()) * 2.0;
                if lo.is_finite() {
                    lo + reach
                } else {
                    hi - reach
                }
            };
        }
        let tol = SCALAR_TOL * nx.abs().max(1.0);
        if (nx - x).abs() <= tol || hi - lo <= tol {
            return nx;
        }
        x = nx;
        (r, d) = local_derivative(spec, terms, s0, x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    x
}

/// Rounds values within a few ulps of an active bound onto it, so obstacle
/// nodes hold `±m` exactly rather than up to rounding.
#[inline]
fn snap(x: f64, lo: f64, hi: f64) -> f64 {
    const SNAP: f64 = 1e-12;
    if lo.is_finite() && x - lo <= SNAP * lo.abs().max(1.0) {
        lo
    } else if hi.is_finite() && hi - x <= SNAP * hi.abs().max(1.0) {
        hi
    } else {
        x
    }
}

struct Problem<'a> {
    domain: &'a GridDomain,
    stencil: Stencil,
    lower: Vec<f64>,
    upper: Vec<f64>,
    order: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(domain: &'a GridDomain, order: SweepOrder) -> Self {
        let n = domain.lattice.len();
        let mut nodes: Vec<usize> = domain.interior_nodes().collect();
        if order == SweepOrder::RedBlack {
            let parity = |i: usize| {
                let ijk = domain.lattice.ijk(i);
                (ijk[0] + ijk[1] + ijk[2]) % 2
            };
            nodes.sort_by_key(|&i| (parity(i), i));
        }
        Self {
            domain,
            stencil: Stencil::new(domain),
            lower: alloc::vec![f64::NEG_INFINITY; n],
            upper: alloc::vec![f64::INFINITY; n],
            order: nodes,
        }
    }

    fn auto_omega(&self) -> f64 {
        let lat = &self.domain.lattice;
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for &i in &self.order {
            let ijk = lat.ijk(i);
            for d in 0..lat.dim {
                lo[d] = lo[d].min(ijk[d]);
                hi[d] = hi[d].max(ijk[d]);
            }
        }
        let cells = (0..lat.dim)
            .map(|d| hi[d].saturating_sub(lo[d]) + 2)
            .max()
            .unwrap_or(2);
        2.0 / (1.0 + math::sin(core::f64::consts::PI / cells as f64))
    }

    /// Residual statistics: max `|r|` over free nodes and the worst
    /// one-sided violation over nodes held at a bound.
    fn residuals(&self, spec: &OperatorSpec, u: &[f64]) -> (f64, f64) {
        let mut free = 0.0f64;
        let mut bound = 0.0f64;
        for &i in &self.order {
            let r = self.stencil.node_residual(spec, u, i);
            if u[i] <= self.lower[i] {
                bound = bound.max(-r);
            } else if u[i] >= self.upper[i] {
                bound = bound.max(r);
            } else {
                free = free.max(r.abs());
            }
        }
        (free, bound.max(0.0))
    }

    fn run(&self, spec: &OperatorSpec, u: &mut [f64], cfg: &SolverConfig) -> SolveReport {
        let linear = is_linear(spec);
        let omega = cfg.omega.unwrap_or_else(|| self.auto_omega());
        let mut report = SolveReport {
            iterations: 0,
            energy: 0.0,
            max_update: 0.0,
            max_residual: f64::INFINITY,
            bound_residual: 0.0,
            converged: false,
            omega,
            warm_start_sweeps: 0,
            energy_trace: Vec::new(),
            notes: Vec::new(),
        };
        if cfg.track_energy {
            report.energy_trace.push(self.energy(spec, u));
        }
        let mut terms = [Term::default(); MAX_TERMS];
        for sweep in 1..=cfg.max_sweeps {
            let mut max_up = 0.0f64;
            for &i in &self.order {
                let n = self.stencil.node_terms(u, i, &mut terms);
                let terms = &terms[..n];
                let s0 = u[i];
                let (lo, hi) = (self.lower[i], self.upper[i]);
                let star = local_min(spec, terms, s0, linear).clamp(lo, hi);
                let mut next = (s0 + omega * (star - s0)).clamp(lo, hi);
                if next != star
                    && !linear
                    && local_energy(spec, terms, s0, next) > local_energy(spec, terms, s0, s0)
                {
                    next = star;
                }
                next = snap(next, lo, hi);
                max_up = max_up.max((next - s0).abs());
                u[i] = next;
            }
            report.iterations = sweep;
            report.max_update = max_up;
            if cfg.track_energy {
                report.energy_trace.push(self.energy(spec, u));
            }
            if max_up <= cfg.tol_u {
                let (free, bound) = self.residuals(spec, u);
                report.max_residual = free;
                report.bound_residual = bound;
                if free <= cfg.tol_r && bound <= cfg.tol_r {
                    report.converged = true;
                    break;
                }
            }
        }
        if !report.converged {
            let (free, bound) = self.residuals(spec, u);
            report.max_residual = free;
            report.bound_residual = bound;
        }
        report.energy = self.energy(spec, u);
        report
    }

    fn energy(&self, spec: &OperatorSpec, u: &[f64]) -> f64 {
        let field = Field { values: u.to_vec() };
        self.stencil.energy(spec, &field).unwrap_or(f64::NAN)
    }
}

fn warm_spec(spec: &OperatorSpec) -> Option<OperatorSpec> {
    if is_linear(spec) {
        None
    } else {
        Some(OperatorSpec::p_laplace(2.0))
    }
}

fn warm_config(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        tol_u: cfg.tol_u.max(1e-6),
        tol_r: cfg.tol_r.max(1e-6),
        track_energy: false,
        ..cfg.clone()
    }
}

/// Minimises the energy over fields equal to `φ` on `∂Ω`.
pub fn solve_dirichlet(
    domain: &GridDomain,
    spec: &OperatorSpec,
    phi: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    check_spec(spec)?;
    check_config(cfg)?;
    if phi.values.len() != domain.lattice.len() {
        return Err(OperatorError::GridMismatch {
            expected: domain.lattice.len(),
            got: phi.values.len(),
        }
        .into());
    }
    if !phi.is_finite(domain) {
        return Err(SolveError::Invalid("boundary data is not finite".into()));
    }
    let problem = Problem::new(domain, cfg.order);
    let count = domain.count(NodeLabel::Boundary).max(1);
    let mean = domain
        .boundary_nodes()
        .map(|i| phi.values.values[i])
        .sum::<f64>()
        / count as f64;
    let mut u = alloc::vec![0.0; domain.lattice.len()];
    for (i, v) in u.iter_mut().enumerate() {
        *v = match domain.label(i) {
            NodeLabel::Interior => mean,
            NodeLabel::Boundary => phi.values.values[i],
            NodeLabel::Exterior => 0.0,
        };
    }
    let mut warm_sweeps = 0;
    if cfg.warm_start {
        if let Some(w) = warm_spec(spec) {
            warm_sweeps = problem.run(&w, &mut u, &warm_config(cfg)).iterations;
        }
    }
    let mut report = problem.run(spec, &mut u, cfg);
    report.warm_start_sweeps = warm_sweeps;
    Ok((Field { values: u }, report))
}

fn check_config(cfg: &SolverConfig) -> Result<(), SolveError> {
    if !(cfg.tol_u > 0.0 && cfg.tol_r > 0.0) {
        return Err(SolveError::Invalid("tolerances must be positive".into()));
    }
    if let Some(w) = cfg.omega {
        if !(w > 0.0 && w < 2.0) {
            return Err(SolveError::Invalid("omega must lie in (0, 2)".into()));
        }
    }
    if cfg.max_sweeps == 0 {
        return Err(SolveError::Invalid("max_sweeps must be positive".into()));
    }
    Ok(())
}

/// Minimises the energy over `K_{±m}`: fields vanishing on the boundary of
/// the solve region with `v ≥ m` (or `v ≤ −m`) on `E`.
pub fn solve_obstacle(
    domain: &GridDomain,
    constraint: &ObstacleConstraint,
    spec: &OperatorSpec,
    cfg: &SolverConfig,
) -> Result<(Field, SolveReport), SolveError> {
    check_spec(spec)?;
    check_config(cfg)?;
    if !(constraint.m > 0.0 && constraint.m.is_finite()) {
        return Err(SolveError::Invalid(
            "obstacle level m must be positive".into(),
        ));
    }
    if let Some(&bad) = constraint
        .nodes
        .iter()
        .find(|&&i| i >= domain.lattice.len() || !domain.is_interior(i))
    {
        return Err(SolveError::Invalid(alloc::format!(
            "obstacle node {bad} is not interior to the solve region"
        )));
    }
    let n = domain.lattice.len();
    if constraint.nodes.is_empty() {
        let mut report = SolveReport {
            iterations: 0,
            energy: 0.0,
            max_update: 0.0,
            max_residual: 0.0,
            bound_residual: 0.0,
            converged: true,
            omega: 1.0,
            warm_start_sweeps: 0,
            energy_trace: Vec::new(),
            notes: Vec::new(),
        };
        report
            .notes
            .push("empty obstacle set: the zero field is the solution".into());
        return Ok((
            Field {
                values: alloc::vec![0.0; n],
            },
            report,
        ));
    }
    let mut problem = Problem::new(domain, cfg.order);
    let level = constraint.sign.value() * constraint.m;
    let mut u = alloc::vec![0.0; n];
    for &i in &constraint.nodes {
        u[i] = level;
        match constraint.sign {
            Sign::Plus => problem.lower[i] = level,
            Sign::Minus => problem.upper[i] = level,
        }
    }
    let mut warm_sweeps = 0;
    if cfg.warm_start {
        if let Some(w) = warm_spec(spec) {
            warm_sweeps = problem.run(&w, &mut u, &warm_config(cfg)).iterations;
        }
    }
    let mut report = problem.run(spec, &mut u, cfg);
    report.warm_start_sweeps = warm_sweeps;
    Ok((Field { values: u }, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mollifier {
    /// Uniform average over the boundary nodes within the width.
    Box,
    /// Weights `1 − |x − y| / width`.
    Hat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub k: usize,
    pub j: usize,
    /// `sup_Ω |u_k − u_j|`.
    pub field_diff: f64,
    /// `sup_{∂Ω} |φ_k − φ_j|`.
    pub data_diff: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedSolution {
    pub field: Field,
    pub widths: Vec<f64>,
    pub reports: Vec<SolveReport>,
    pub cauchy: Vec<CauchyEntry>,
    pub contraction_holds: bool,
}

/// Averages the data over boundary nodes within `width` of each node.
pub fn mollify(
    domain: &GridDomain,
    phi: &BoundaryData,
    width: f64,
    kind: Mollifier,
) -> BoundaryData {
    if phi.smooth {
        return phi.clone();
    }
    let nodes: Vec<(usize, Point)> = domain
        .boundary_nodes()
        .map(|i| (i, domain.point(i)))
        .collect();
    let mut values = Field::zeros(domain);
    for &(i, x) in &nodes {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(j, y) in &nodes {
            let r = math::dist(&x, &y);
            if r > width {
                continue;
            }
            let w = match kind {
                Mollifier::Box => 1.0,
                Mollifier::Hat => 1.0 - r / width,
            };
            num += w * phi.values.values[j];
            den += w;
        }
        values.values[i] = if den > 0.0 {
            num / den
        } else {
            phi.values.values[i]
        };
    }
    BoundaryData {
        values,
        smooth: false,
    }
}

/// Solves for data mollified at widths `2^{−k}·diam`, `k = 1..=n`, logs the
/// pairwise differences and checks `sup|u_k − u_j| ≤ sup|φ_k − φ_j| + 2·tol`.
pub fn generalized_solution(
    domain: &GridDomain,
    spec: &OperatorSpec,
    phi: &BoundaryData,
    n: usize,
    kind: Mollifier,
    cfg: &SolverConfig,
) -> Result<GeneralizedSolution, SolveError> {
    if n == 0 {
        return Err(SolveError::Invalid(
            "sequence length must be positive".into(),
        ));
    }
    let b = domain.lattice.bounds();
    let diam = math::dist(&b.lo, &b.hi);
    let mut data = Vec::with_capacity(n);
    let mut fields: Vec<Field> = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    for k in 1..=n {
        let width = diam / (1u64 << k.min(62)) as f64;
        let pk = mollify(domain, phi, width, kind);
        let (u, rep) = solve_dirichlet(domain, spec, &pk, cfg)?;
        if !rep.converged {
            return Err(SolveError::Invalid(alloc::format!(
                "inner solve {k} did not converge"
            )));
        }
        widths.push(width);
        data.push(pk);
        fields.push(u);
        reports.push(rep);
    }
    let tol = cfg.tol();
    let mut cauchy = Vec::new();
    for k in 0..n {
        for j in 0..k {
            let field_diff = fields[k].max_diff_where(&fields[j], |i| domain.is_interior(i));
            let data_diff = data[k]
                .values
                .max_diff_where(&data[j].values, |i| domain.label(i) == NodeLabel::Boundary);
            cauchy.push(CauchyEntry {
                k: k + 1,
                j: j + 1,
                field_diff,
                data_diff,
                within_bound: field_diff <= data_diff + 2.0 * tol,
            });
        }
    }
    let contraction_holds = cauchy.iter().all(|c| c.within_bound);
    let field = fields.pop().unwrap_or_else(|| Field::zeros(domain));
    Ok(GeneralizedSolution {
        field,
        widths,
        reports,
        cauchy,
        contraction_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `min_∂ φ − tol ≤ u ≤ max_∂ φ + tol` at every interior node.
    pub u_within_data_range: bool,
    pub v_within_data_range: bool,
    /// Whether `φ ≤ ψ` on the boundary, so that `u ≤ v` is required.
    pub data_ordered: bool,
    pub order_preserved: Option<bool>,
    pub sup_field_diff: f64,
    pub sup_data_diff: f64,
    pub contraction_holds: bool,
    /// Largest amount by which any of the checks is exceeded.
    pub worst_excess: f64,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.u_within_data_range
            && self.v_within_data_range
            && self.order_preserved.unwrap_or(true)
            && self.contraction_holds
    }
}

/// Nodewise maximum principle, order preservation and contraction for two
/// solutions `u` (data `φ`) and `v` (data `ψ`) on the same grid.
pub fn verify_comparison(
    domain: &GridDomain,
    u: &Field,
    phi: &BoundaryData,
    v: &Field,
    psi: &BoundaryData,
    tol: f64,
) -> ComparisonReport {
    let mut worst = f64::NEG_INFINITY;
    let mut range_check = |w: &Field, data: &BoundaryData| {
        let (lo, hi) = data.range(domain);
        let mut ok = true;
        for i in domain.interior_nodes() {
            let x = w.values[i];
            let excess = (lo - x).max(x - hi);
            worst = worst.max(excess - tol);
            ok &= excess <= tol;
        }
        ok
    };
    let u_ok = range_check(u, phi);
    let v_ok = range_check(v, psi);
    let data_ordered = domain
        .boundary_nodes()
        .all(|i| phi.values.values[i] <= psi.values.values[i]);
    let order_preserved = if data_ordered {
        let mut ok = true;
        for i in domain.interior_nodes() {
            let excess = u.values[i] - v.values[i];
            worst = worst.max(excess - 2.0 * tol);
            ok &= excess <= 2.0 * tol;
        }
        Some(ok)
    } else {
        None
    };
    let sup_field_diff = u.max_diff_where(v, |i| domain.is_interior(i));
    let sup_data_diff = phi
        .values
        .max_diff_where(&psi.values, |i| domain.label(i) == NodeLabel::Boundary);
    worst = worst.max(sup_field_diff - sup_data_diff - 2.0 * tol);
    ComparisonReport {
        u_within_data_range: u_ok,
        v_within_data_range: v_ok,
        data_ordered,
        order_preserved,
        sup_field_diff,
        sup_data_diff,
        contraction_holds: sup_field_diff <= sup_data_diff + 2.0 * tol,
        worst_excess: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, Shape, ShapeSpec};
    use alloc::vec;

    fn square(h: f64) -> GridDomain {
        let s = ShapeSpec::new(
            2,
            Shape::Box {
                min: vec![0.0, 0.0],
                max: vec![1.0, 1.0],
            },
        )
        .unwrap();
        build_grid(&s, h).unwrap()
    }

    #[test]
    fn constant_data() {
        let g = square(1.0 / 16.0);
        for t in [1.5, 2.0, 3.0] {
            let (u, rep) = solve_dirichlet(
                &g,
                &OperatorSpec::p_laplace(t),
                &BoundaryData::constant(&g, 5.0),
                &SolverConfig::default(),
            )
            .unwrap();
            assert!(rep.converged);
            assert!(u.max_diff_where(&Field::constant(&g, 5.0), |i| g.is_interior(i)) <= 1e-8);
        }
    }

    #[test]
    fn affine_data_is_reproduced() {
        let g = square(1.0 / 16.0);
        let phi = BoundaryData::from_fn(&g, |x| x[0], true);
        let exact = Field::from_fn(&g, |x| x[0]);
        for t in [1.5, 2.0, 3.0] {
            let cfg = SolverConfig::default();
            let (u, rep) = solve_dirichlet(&g, &OperatorSpec::p_laplace(t), &phi, &cfg).unwrap();
            assert!(rep.converged, "t = {t}: {rep:?}");
            assert!(
                u.max_diff_where(&exact, |i| g.is_interior(i)) <= 10.0 * cfg.tol(),
                "t = {t}"
            );
        }
    }

    #[test]
    fn energy_never_increases() {
        let g = square(1.0 / 16.0);
        let phi = BoundaryData::from_fn(&g, |x| math::sin(3.0 * x[0]) + x[1] * x[1], true);
        for t in [1.5, 3.0] {
            let cfg = SolverConfig {
                track_energy: true,
                warm_start: false,
                ..SolverConfig::default()
            };
            let (_, rep) = solve_dirichlet(&g, &OperatorSpec::p_laplace(t), &phi, &cfg).unwrap();
            assert!(rep.converged);
            assert!(rep.energy_monotone(1e-14), "t = {t}");
        }
    }

    #[test]
    fn custom_operator_is_refused() {
        let g = square(0.25);
        let err = solve_dirichlet(
            &g,
            &OperatorSpec::custom(1.0, &[]),
            &BoundaryData::constant(&g, 1.0),
            &SolverConfig::default(),
        );
        assert_eq!(err.unwrap_err(), SolveError::NonPotential);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let g = square(1.0 / 32.0);
        let phi = BoundaryData::from_fn(&g, |x| x[0] * x[1], true);
        let cfg = SolverConfig {
            max_sweeps: 3,
            ..SolverConfig::default()
        };
        let (u, rep) = solve_dirichlet(&g, &OperatorSpec::p_laplace(2.0), &phi, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert!(u.is_finite());
    }

    #[test]
    fn empty_obstacle_gives_zero() {
        let g = square(0.125);
        let c = ObstacleConstraint {
            nodes: vec![],
            m: 1.0,
            sign: Sign::Plus,
        };
        let (u, rep) = solve_obstacle(
            &g,
            &c,
            &OperatorSpec::p_laplace(3.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
        assert!(rep.converged && !rep.notes.is_empty());
    }

    #[test]
    fn obstacle_bounds_and_residual_signs() {
        let g = square(1.0 / 16.0);
        let e: Vec<usize> = g
            .interior_nodes()
            .filter(|&i| math::dist(&g.point(i), &[0.5, 0.5, 0.0]) <= 0.15)
            .collect();
        for sign in [Sign::Plus, Sign::Minus] {
            let c = ObstacleConstraint {
                nodes: e.clone(),
                m: 2.0,
                sign,
            };
            let cfg = SolverConfig::default();
            let (u, rep) = solve_obstacle(&g, &c, &OperatorSpec::p_laplace(3.0), &cfg).unwrap();
            assert!(rep.converged);
            let s = sign.value();
            for &i in &e {
                assert_eq!(u.values[i], 2.0 * s);
            }
            for i in g.interior_nodes() {
                let w = s * u.values[i];
                assert!(w >= -cfg.tol() && w <= 2.0 + cfg.tol());
            }
        }
    }

    #[test]
    fn mollified_smooth_data_is_unchanged() {
        let g = square(0.125);
        let phi = BoundaryData::from_fn(&g, |x| x[0] * x[0], true);
        assert_eq!(mollify(&g, &phi, 0.5, Mollifier::Hat), phi);
        let rough = BoundaryData {
            smooth: false,
            ..phi.clone()
        };
        let m = mollify(&g, &rough, 1e-3, Mollifier::Box);
        assert_eq!(m.values, phi.values);
    }

    #[test]
    fn comparison_of_shifted_data() {
        let g = square(1.0 / 16.0);
        let spec = OperatorSpec::p_laplace(3.0);
        let cfg = SolverConfig::default();
        let phi = BoundaryData::from_fn(&g, |x| x[0] * x[1], true);
        let psi = BoundaryData::from_fn(&g, |x| x[0] * x[1] + 1.0, true);
        let (u, _) = solve_dirichlet(&g, &spec, &phi, &cfg).unwrap();
        let (v, _) = solve_dirichlet(&g, &spec, &psi, &cfg).unwrap();
        let rep = verify_comparison(&g, &u, &phi, &v, &psi, cfg.tol());
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.sup_field_diff - 1.0).abs() <= 2.0 * cfg.tol());
    }
}
