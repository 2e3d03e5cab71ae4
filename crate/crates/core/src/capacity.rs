//! Capacitary potentials of complement caps, barriers, the Wiener probe and
//! the locality check.
//!
//! All grids of one probe share a lattice: the Ω grid and the grid of the
//! auxiliary ball `Σ = I(y₀, 2R)` are sampled on the same box, so node
//! indices coincide and fields move between them without interpolation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::degiorgi::{self, DecayConfig, DecayReport, OscillationEntry};
use crate::domain::{
    build_grid, build_grid_in, complement_cap, criterion_density, density, sigma_hat_bounds,
    solid_angle_lower_bound, Bounds, CapError, ComplementCap, DensitySample, DensityVerdict,
    GridDomain, GridError, NodeLabel, ShapeSpec, SolidAngleConfig,
};
use crate::math;
use crate::operator::{Field, OperatorSpec, Stencil};
use crate::solver::{
    solve_dirichlet, solve_obstacle, BoundaryData, ObstacleConstraint, Sign, SolveError,
    SolveReport, SolverConfig,
};
use crate::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum CapacityError {
    Config(String),
    Grid(GridError),
    Cap(CapError),
    Solve(SolveError),
    /// The two shapes of a locality check differ near `y`.
    Precondition(String),
}

impl core::fmt::Display for CapacityError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CapacityError::Config(m) => write!(f, "invalid probe configuration: {m}"),
            CapacityError::Grid(e) => e.fmt(f),
            CapacityError::Cap(e) => e.fmt(f),
            CapacityError::Solve(e) => e.fmt(f),
            CapacityError::Precondition(m) => write!(f, "precondition failed: {m}"),
        }
    }
}

impl From<GridError> for CapacityError {
    fn from(e: GridError) -> Self {
        CapacityError::Grid(e)
    }
}

impl From<CapError> for CapacityError {
    fn from(e: CapError) -> Self {
        CapacityError::Cap(e)
    }
}

impl From<SolveError> for CapacityError {
    fn from(e: SolveError) -> Self {
        CapacityError::Solve(e)
    }
}

/// The auxiliary ball `Σ = I(y₀, 2R)` with `Ω ⊂ I(y₀, R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma {
    pub center: Point,
    /// `R`; the ball itself has radius `2R`.
    pub radius: f64,
}

impl Sigma {
    /// `y₀` is the centre of Ω's bounding box; `R` is the largest distance
    /// from `y₀` to an interior node of Ω at spacing `h`, plus `h`.
    pub fn around(omega: &ShapeSpec, h: f64) -> Result<Self, CapacityError> {
        let b = omega.bounds();
        if !b.is_bounded(omega.dim) {
            return Err(GridError::Unbounded.into());
        }
        let mut center = [0.0; 3];
        for (d, c) in center.iter_mut().enumerate().take(omega.dim) {
            *c = 0.5 * (b.lo[d] + b.hi[d]);
        }
        let g = build_grid(omega, h)?;
        let reach = g
            .interior_nodes()
            .map(|i| math::dist(&g.point(i), &center))
            .fold(0.0, f64::max);
        Ok(Self {
            center,
            radius: reach + h,
        })
    }

    pub fn shape(&self, dim: usize) -> ShapeSpec {
        ShapeSpec::ball(dim, &self.center[..dim], 2.0 * self.radius)
    }

    pub fn bounds(&self, dim: usize) -> Bounds {
        let mut b = Bounds {
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        for d in 0..dim {
            b.lo[d] = self.center[d] - 2.0 * self.radius;
            b.hi[d] = self.center[d] + 2.0 * self.radius;
        }
        b
    }

    /// Ω and Σ sampled on one lattice of spacing `h`.
    pub fn grids(
        &self,
        omega: &ShapeSpec,
        h: f64,
    ) -> Result<(GridDomain, GridDomain), CapacityError> {
        let b = self.bounds(omega.dim);
        let og = build_grid_in(omega, h, &b)?;
        let sg = build_grid_in(&self.shape(omega.dim), h, &b)?;
        Ok((og, sg))
    }
}

/// Checks of the obstacle characterization on a computed potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialCheck {
    pub tol: f64,
    pub min: f64,
    pub max: f64,
    /// `u = ±m` exactly on `E`.
    pub exact_on_obstacle: bool,
    /// `0 ≤ ±u ≤ m + tol`.
    pub within_bounds: bool,
    /// Largest `|r|` on interior nodes of `Σ` off `E`.
    pub free_residual: f64,
    /// Largest one-sided violation on `E`.
    pub obstacle_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitaryPotential {
    pub field: Field,
    pub report: SolveReport,
    pub check: PotentialCheck,
}

/// `u_{±m,ρ}`: the solution of the obstacle problem on `Σ` with `±u ≥ m` on
/// the cap nodes. The cap must come from a grid on the same lattice.
pub fn capacitary_potential(
    sigma: &GridDomain,
    cap: &ComplementCap,
    spec: &OperatorSpec,
    sign: Sign,
    m: f64,
    cfg: &SolverConfig,
) -> Result<CapacitaryPotential, CapacityError> {
    if cap.is_empty() {
        return Err(CapacityError::Config("the complement cap is empty".into()));
    }
    if cap.h != sigma.h() || cap.nodes.iter().any(|&i| i >= sigma.lattice.len()) {
        return Err(CapacityError::Config(
            "the cap and Σ are sampled on different lattices".into(),
        ));
    }
    let constraint = ObstacleConstraint {
        nodes: cap.nodes.clone(),
        m,
        sign,
    };
    let (field, report) = solve_obstacle(sigma, &constraint, spec, cfg)?;
    let check = check_obstacle_solution(sigma, &field, &cap.nodes, spec, sign, m, cfg.tol())?;
    Ok(CapacitaryPotential {
        field,
        report,
        check,
    })
}

/// Verifies an obstacle solution on its grid: `u = ±m` on the constraint
/// nodes, `0 ≤ ±u ≤ m + tol`, residual within `tol` off the constraint and
/// one-sided on it.
pub fn check_obstacle_solution(
    sigma: &GridDomain,
    u: &Field,
    obstacle: &[usize],
    spec: &OperatorSpec,
    sign: Sign,
    m: f64,
    tol: f64,
) -> Result<PotentialCheck, CapacityError> {
    let s = sign.value();
    let mut on_e = alloc::vec![false; sigma.lattice.len()];
    for &i in obstacle {
        on_e[i] = true;
    }
    let residual = Stencil::new(sigma)
        .residual(sigma, spec, u)
        .map_err(SolveError::from)?;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut free = 0.0f64;
    let mut held = 0.0f64;
    for i in sigma.interior_nodes() {
        let v = u.values[i];
        min = min.min(v);
        max = max.max(v);
        let r = s * residual.values[i];
        if on_e[i] {
            held = held.max(-r);
        } else {
            free = free.max(r.abs());
        }
    }
    let exact_on_obstacle = obstacle.iter().all(|&i| u.values[i] == s * m);
    let within_bounds = sigma.interior_nodes().all(|i| {
        let w = s * u.values[i];
        w >= -tol && w <= m + tol
    });
    let passed = exact_on_obstacle && within_bounds && free <= tol && held <= tol;
    Ok(PotentialCheck {
        tol,
        min,
        max,
        exact_on_obstacle,
        within_bounds,
        free_residual: free,
        obstacle_residual: held,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriteriaConfig {
    /// `Λ` of the density test.
    pub lambda: f64,
    /// `C₁` of the decay envelope.
    pub c1: f64,
    pub solid_angle: SolidAngleConfig,
    /// Skip the Monte-Carlo estimate of `σ̂`.
    pub skip_solid_angle: bool,
    pub lower_order: bool,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            c1: 1.0,
            solid_angle: SolidAngleConfig {
                directions: 1024,
                probes: 64,
                seed: 0x005e_ed0f_c0de,
            },
            skip_solid_angle: false,
            lower_order: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerProbeConfig {
    pub y: Vec<f64>,
    #[serde(default = "one")]
    pub m: f64,
    pub rho0: f64,
    pub r0: f64,
    /// Radii are `r_k = r₀ q^{−k}`.
    #[serde(default = "four")]
    pub ratio: f64,
    /// `K`.
    pub count: usize,
    /// Spacings, strictly decreasing.
    pub levels: Vec<f64>,
    #[serde(default = "decay_default")]
    pub decay: f64,
    /// Stagnation floor as a fraction of `m`.
    #[serde(default = "floor_default")]
    pub floor: f64,
    /// Physical radius at which the deficit is followed across levels;
    /// defaults to the smallest `r_k` not below the coarsest spacing.
    #[serde(default)]
    pub stagnation_radius: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub criteria: CriteriaConfig,
}

fn one() -> f64 {
    1.0
}
fn four() -> f64 {
    4.0
}
fn decay_default() -> f64 {
    0.1
}
fn floor_default() -> f64 {
    0.25
}

/// Smallest `K` accepted by the probe.
pub const MIN_RADII: usize = 3;

impl WienerProbeConfig {
    pub fn radius(&self, k: usize) -> f64 {
        self.r0 * math::powf(self.ratio, -(k as f64))
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.count).map(|k| self.radius(k)).collect()
    }

    pub fn point(&self) -> Point {
        math::to_point(&self.y)
    }

    pub fn finest(&self) -> f64 {
        self.levels.last().copied().unwrap_or(f64::NAN)
    }

    pub fn stagnation(&self) -> f64 {
        if let Some(r) = self.stagnation_radius {
            return r;
        }
        let coarse = self.levels.first().copied().unwrap_or(0.0);
        self.radii()
            .into_iter()
            .filter(|&r| r >= coarse)
            .fold(self.r0, f64::min)
    }

    pub fn validate(&self, dim: usize) -> Result<(), CapacityError> {
        let bad = |m: String| Err(CapacityError::Config(m));
        if self.y.len() != dim {
            return bad(format!(
                "y has {} coordinates, expected {dim}",
                self.y.len()
            ));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("m must be positive, got {}", self.m));
        }
        if !(self.rho0 > 0.0 && self.r0 > 0.0 && self.r0 <= 0.5 * self.rho0) {
            return bad(format!(
                "need 0 < r0 <= rho0/2, got r0 = {}, rho0 = {}",
                self.r0, self.rho0
            ));
        }
        if !(self.ratio > 1.0) {
            return bad(format!("ratio must exceed 1, got {}", self.ratio));
        }
        if self.count < MIN_RADII {
            return bad(format!(
                "count must be at least {MIN_RADII}, got {}",
                self.count
            ));
        }
        if self.levels.is_empty() || self.levels.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("levels must be positive spacings".into());
        }
        if self.levels.windows(2).any(|w| w[1] >= w[0]) {
            return bad("levels must be strictly decreasing".into());
        }
        if self.radius(self.count) < self.finest() {
            return bad(format!(
                "smallest radius {} is below the finest spacing {}",
                self.radius(self.count),
                self.finest()
            ));
        }
        if !(self.decay > 0.0 && self.floor > 0.0) {
            return bad("decay and floor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    RegularTrend,
    IrregularTrend,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::RegularTrend => "regular-trend",
            Verdict::IrregularTrend => "irregular-trend",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub h: f64,
    pub sigma_nodes: usize,
    pub obstacle_nodes: usize,
    pub solve: SolveReport,
    pub check: PotentialCheck,
    pub oscillation: Vec<OscillationEntry>,
    /// `m − inf u` over the interior nodes of Ω in `I(y, r_k)`, per `k`.
    pub deficit_near_y: Vec<Option<f64>>,
    /// `m − min u` over the interior neighbours of `y`.
    pub grid_deficit: f64,
    /// `m − inf u` at the stagnation radius.
    pub stagnation_deficit: Option<f64>,
    /// Same for the sign `−` potential, solved only when `A` is not odd.
    pub minus_grid_deficit: Option<f64>,
    pub minus_stagnation_deficit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub h: f64,
    pub result: Option<LevelResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusCriteria {
    pub k: usize,
    pub r: f64,
    /// `σ(r_k)`.
    pub sigma: f64,
    /// `σ(2 r_k)`.
    pub sigma_double: f64,
    /// Monte-Carlo solid-angle estimate, when computed.
    pub solid_angle: Option<f64>,
    pub solid_angle_std_error: Option<f64>,
    /// Lower bound for `σ̂(r_k)`.
    pub sigma_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub h: f64,
    pub radii: Vec<RadiusCriteria>,
    pub density: DensityVerdict,
    /// Smallest `σ̂` bound over the radii; a positive floor is what the
    /// cone criterion provides.
    pub sigma_hat_min: f64,
    pub decay: Option<DecayReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub h: f64,
    pub k: usize,
    pub r_k: f64,
    pub omega: Option<f64>,
    pub deficit_near_y: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub config: WienerProbeConfig,
    pub sigma: Sigma,
    pub radii: Vec<f64>,
    pub stagnation_radius: f64,
    pub levels: Vec<ProbeLevel>,
    pub criteria: Option<CriteriaReport>,
    /// `ω(r_K) / ω(r₀)` on the finest level.
    pub decay_ratio: Option<f64>,
    pub deficit_shrinks: bool,
    pub deficit_stagnates: bool,
    /// `ω(r_{k+1}) ≤ ω(r_k) + tol` on every level.
    pub omega_monotone: bool,
    pub minus_by_reflection: bool,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

impl RegularityReport {
    /// One row per level and radius.
    pub fn rows(&self) -> Vec<ProbeRow> {
        let mut out = Vec::new();
        for lvl in &self.levels {
            for (k, &r) in self.radii.iter().enumerate() {
                let (omega, deficit) = match &lvl.result {
                    Some(res) => (
                        res.oscillation.iter().find(|e| e.k == k).map(|e| e.omega),
                        res.deficit_near_y.get(k).copied().flatten(),
                    ),
                    None => (None, None),
                };
                out.push(ProbeRow {
                    h: lvl.h,
                    k,
                    r_k: r,
                    omega,
                    deficit_near_y: deficit,
                });
            }
        }
        out
    }
}

fn interior_min(domain: &GridDomain, u: &Field, y: &Point, r: f64) -> Option<f64> {
    domain
        .lattice
        .nodes_in_ball(y, r)
        .into_iter()
        .filter(|&i| domain.is_interior(i))
        .map(|i| u.values[i])
        .reduce(f64::min)
}

fn neighbour_min(domain: &GridDomain, u: &Field, y: usize) -> Option<f64> {
    domain
        .lattice
        .neighbour_displacements()
        .into_iter()
        .map(|d| (y as isize + domain.lattice.offset(d)) as usize)
        .filter(|&i| domain.is_interior(i))
        .map(|i| u.values[i])
        .reduce(f64::min)
}

fn boundary_node(domain: &GridDomain, y: &Point) -> Result<usize, CapacityError> {
    let node = domain.node_at(y).ok_or_else(|| {
        CapacityError::Config(format!("y is not a node at spacing {}", domain.h()))
    })?;
    if domain.label(node) != NodeLabel::Boundary {
        return Err(CapacityError::Config(format!(
            "y is not a boundary node at spacing {}",
            domain.h()
        )));
    }
    Ok(node)
}

/// Solves for the potential of `E_{ρ₀}` at spacing `h` and collects the
/// per-level statistics. Levels are independent, so callers may run them in
/// parallel and hand the results to [`assemble_probe`].
pub fn probe_level(
    omega: &ShapeSpec,
    sigma: &Sigma,
    config: &WienerProbeConfig,
    spec: &OperatorSpec,
    h: f64,
) -> Result<LevelResult, CapacityError> {
    let y = config.point();
    let (og, sg) = sigma.grids(omega, h)?;
    let node = boundary_node(&og, &y)?;
    let cap = complement_cap(&og, node, config.rho0)?;
    let plus = capacitary_potential(&sg, &cap, spec, Sign::Plus, config.m, &config.solver)?;
    let u = &plus.field;
    let oscillation =
        degiorgi::oscillation_sequence(&og, u, &y, config.r0, config.ratio, config.count);
    let m = config.m;
    let deficit_near_y = config
        .radii()
        .iter()
        .map(|&r| interior_min(&og, u, &y, r).map(|v| m - v))
        .collect();
    let grid_deficit = neighbour_min(&og, u, node).map_or(0.0, |v| m - v);
    let rs = config.stagnation();
    let stagnation_deficit = interior_min(&og, u, &y, rs).map(|v| m - v);
    let (mut minus_grid_deficit, mut minus_stagnation_deficit) = (None, None);
    if !spec.odd_symmetric {
        let minus = capacitary_potential(&sg, &cap, spec, Sign::Minus, m, &config.solver)?;
        let w = minus.field.negated();
        minus_grid_deficit = neighbour_min(&og, &w, node).map(|v| m - v);
        minus_stagnation_deficit = interior_min(&og, &w, &y, rs).map(|v| m - v);
    }
    Ok(LevelResult {
        h,
        sigma_nodes: sg.count(NodeLabel::Interior),
        obstacle_nodes: cap.count(),
        solve: plus.report,
        check: plus.check,
        oscillation,
        deficit_near_y,
        grid_deficit,
        stagnation_deficit,
        minus_grid_deficit,
        minus_stagnation_deficit,
    })
}

/// Density, `σ̂` and envelope evaluations on the finest Ω grid.
pub fn probe_criteria(
    omega: &ShapeSpec,
    sigma: &Sigma,
    config: &WienerProbeConfig,
    spec: &OperatorSpec,
    omega_seq: Option<&[OscillationEntry]>,
) -> Result<CriteriaReport, CapacityError> {
    let h = config.finest();
    let y = config.point();
    let (og, _) = sigma.grids(omega, h)?;
    let node = boundary_node(&og, &y)?;
    let mut radii = Vec::new();
    for (k, r) in config.radii().into_iter().enumerate() {
        let cap = complement_cap(&og, node, r)?;
        let sigma_r = density(&cap);
        let sigma_double = density(&complement_cap(&og, node, 2.0 * r)?);
        let (angle, se) = if config.criteria.skip_solid_angle {
            (None, None)
        } else {
            let mut sa = config.criteria.solid_angle;
            sa.seed = sa.seed.wrapping_add(k as u64);
            let est = solid_angle_lower_bound(omega, &cap, &sa)
                .map_err(|e| CapacityError::Config(e.to_string()))?;
            (Some(est.value), Some(est.std_error))
        };
        let sigma_hat = sigma_hat_bounds(&cap, angle.unwrap_or(0.0));
        radii.push(RadiusCriteria {
            k,
            r,
            sigma: sigma_r,
            sigma_double,
            solid_angle: angle,
            solid_angle_std_error: se,
            sigma_hat,
        });
    }
    let samples: Vec<DensitySample> = radii
        .iter()
        .map(|c| DensitySample::at_radius(c.r, c.sigma))
        .collect();
    let density_verdict = criterion_density(&samples, config.criteria.lambda, spec.t, 0.0);
    let sigma_hat_min = radii
        .iter()
        .map(|c| c.sigma_hat)
        .fold(f64::INFINITY, f64::min);
    let decay = omega_seq.map(|seq| {
        let rs: Vec<f64> = radii.iter().map(|c| c.r).collect();
        let sig: Vec<f64> = radii.iter().map(|c| c.sigma_double).collect();
        let om: Vec<f64> = (0..rs.len())
            .map(|k| seq.iter().find(|e| e.k == k).map_or(f64::NAN, |e| e.omega))
            .collect();
        let cfg = DecayConfig {
            c1: config.criteria.c1,
            t: spec.t,
            lower_order: config.criteria.lower_order,
            ..DecayConfig::default()
        };
        degiorgi::n0_and_decay(&rs, &sig, &om, &cfg)
    });
    Ok(CriteriaReport {
        h,
        radii,
        density: density_verdict,
        sigma_hat_min,
        decay,
    })
}

/// Applies the verdict rules to per-level results (ordered as `config.levels`).
pub fn assemble_probe(
    config: &WienerProbeConfig,
    sigma: Sigma,
    spec: &OperatorSpec,
    levels: Vec<ProbeLevel>,
    criteria: Option<CriteriaReport>,
    mut diagnostics: Vec<String>,
) -> RegularityReport {
    let m = config.m;
    let tol = 10.0 * config.solver.tol();
    let results: Vec<&LevelResult> = levels.iter().filter_map(|l| l.result.as_ref()).collect();
    let complete = results.len() == levels.len() && !levels.is_empty();
    for l in &levels {
        if let Some(e) = &l.error {
            diagnostics.push(format!("h = {}: {e}", l.h));
        }
        if let Some(r) = &l.result {
            if !r.solve.converged {
                diagnostics.push(format!("h = {}: solver did not converge", l.h));
            }
            if !r.check.passed {
                diagnostics.push(format!("h = {}: potential check failed", l.h));
            }
        }
    }
    let converged = complete && results.iter().all(|r| r.solve.converged);
    let omega_monotone = results.iter().all(|r| {
        r.oscillation
            .windows(2)
            .all(|w| w[1].omega <= w[0].omega + tol)
    });

    let decay_ratio = results.last().and_then(|r| {
        let first = r.oscillation.iter().find(|e| e.k == 0)?;
        let last = r.oscillation.iter().find(|e| e.k == config.count)?;
        if first.omega > 0.0 {
            Some(last.omega / first.omega)
        } else {
            None
        }
    });
    let pick = |r: &LevelResult, minus: bool| {
        if minus {
            r.minus_grid_deficit
        } else {
            Some(r.grid_deficit)
        }
    };
    let pick_stag = |r: &LevelResult, minus: bool| {
        if minus {
            r.minus_stagnation_deficit
        } else {
            r.stagnation_deficit
        }
    };
    let signs: &[bool] = if spec.odd_symmetric {
        &[false]
    } else {
        &[false, true]
    };
    let shrinks = |minus: bool| {
        let d: Vec<Option<f64>> = results.iter().map(|r| pick(r, minus)).collect();
        d.len() >= 2
            && d.iter().all(Option::is_some)
            && d.windows(2).all(|w| w[1].unwrap() < w[0].unwrap())
    };
    let stagnates = |minus: bool| {
        let d: Vec<Option<f64>> = results.iter().map(|r| pick_stag(r, minus)).collect();
        d.len() >= 2
            && d.iter().all(|v| v.is_some_and(|v| v >= config.floor * m))
            && d.windows(2).all(|w| w[1].unwrap() >= w[0].unwrap() - tol)
    };
    let deficit_shrinks = signs.iter().all(|&s| shrinks(s));
    let deficit_stagnates = signs.iter().any(|&s| stagnates(s));

    let verdict = if !converged {
        Verdict::Inconclusive
    } else if decay_ratio.is_some_and(|q| q <= config.decay) && deficit_shrinks {
        Verdict::RegularTrend
    } else if deficit_stagnates {
        Verdict::IrregularTrend
    } else {
        Verdict::Inconclusive
    };
    RegularityReport {
        config: config.clone(),
        sigma,
        radii: config.radii(),
        stagnation_radius: config.stagnation(),
        levels,
        criteria,
        decay_ratio,
        deficit_shrinks,
        deficit_stagnates,
        omega_monotone,
        minus_by_reflection: spec.odd_symmetric,
        verdict,
        diagnostics,
    }
}

/// Runs every level in turn and applies the verdict rules. Invalid
/// configurations are errors; failures on individual levels make the
/// verdict inconclusive and are recorded as diagnostics.
pub fn wiener_probe(
    omega: &ShapeSpec,
    config: &WienerProbeConfig,
    spec: &OperatorSpec,
) -> Result<RegularityReport, CapacityError> {
    let sigma = prepare_probe(omega, config, spec)?;
    let levels = config
        .levels
        .iter()
        .map(|&h| match probe_level(omega, &sigma, config, spec, h) {
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
        })
        .collect();
    Ok(finish_probe(omega, config, spec, sigma, levels))
}

/// Validation and `Σ` placement shared by sequential and parallel drivers.
pub fn prepare_probe(
    omega: &ShapeSpec,
    config: &WienerProbeConfig,
    spec: &OperatorSpec,
) -> Result<Sigma, CapacityError> {
    config.validate(omega.dim)?;
    spec.validate().map_err(SolveError::from)?;
    Sigma::around(omega, config.finest())
}

/// Criteria on the finest level followed by [`assemble_probe`].
pub fn finish_probe(
    omega: &ShapeSpec,
    config: &WienerProbeConfig,
    spec: &OperatorSpec,
    sigma: Sigma,
    levels: Vec<ProbeLevel>,
) -> RegularityReport {
    let mut diagnostics = Vec::new();
    let seq = levels
        .last()
        .and_then(|l| l.result.as_ref())
        .map(|r| r.oscillation.clone());
    let criteria = match probe_criteria(omega, &sigma, config, spec, seq.as_deref()) {
        Ok(c) => Some(c),
        Err(e) => {
            diagnostics.push(format!("criteria: {e}"));
            None
        }
    };
    assemble_probe(config, sigma, spec, levels, criteria, diagnostics)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub y: Vec<f64>,
    pub rho: f64,
    #[serde(default = "one")]
    pub m: f64,
    /// Radii `δ_k` at which `max V` over `Ω ∩ I(y, δ_k)` is recorded, decreasing.
    pub deltas: Vec<f64>,
    #[serde(default = "decay_default")]
    pub decay: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub v_solve: SolveReport,
    pub u_solve: SolveReport,
    /// `V ≥ m − tol` and `U ≤ −m + tol` on `∂Ω ∖ I(y, ρ)`.
    pub j_holds: bool,
    pub v_min: f64,
    pub u_max: f64,
    pub v_nonnegative: bool,
    pub u_nonpositive: bool,
    /// `(δ_k, max V)`, `None` where `Ω ∩ I(y, δ_k)` has no nodes.
    pub v_maxima: Vec<(f64, Option<f64>)>,
    pub u_minima: Vec<(f64, Option<f64>)>,
    /// `max V` nonincreasing in `δ` and `M(δ_K) ≤ decay · M(δ_0)`.
    pub jj_trend: bool,
}

/// The pair `V`, `U` solving the Dirichlet problem with data
/// `±m |x−y|²/ρ²`, with the barrier conditions evaluated on the grid.
pub fn barrier_build(
    domain: &GridDomain,
    spec: &OperatorSpec,
    cfg: &BarrierConfig,
) -> Result<(Field, Field, BarrierReport), CapacityError> {
    let dim = domain.dim();
    if cfg.y.len() != dim {
        return Err(CapacityError::Config(format!(
            "y has {} coordinates, expected {dim}",
            cfg.y.len()
        )));
    }
    if !(cfg.rho > 0.0 && cfg.m > 0.0) {
        return Err(CapacityError::Config("rho and m must be positive".into()));
    }
    if cfg.deltas.is_empty() || cfg.deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CapacityError::Config(
            "deltas must be nonempty and strictly decreasing".into(),
        ));
    }
    let y = math::to_point(&cfg.y);
    boundary_node(domain, &y)?;
    let (m, rho2) = (cfg.m, cfg.rho * cfg.rho);
    let data = |s: f64| {
        BoundaryData::from_fn(
            domain,
            |x| {
                let d = math::dist(x, &y);
                s * m * d * d / rho2
            },
            true,
        )
    };
    let (v, v_solve) = solve_dirichlet(domain, spec, &data(1.0), &cfg.solver)?;
    let (u, u_solve) = solve_dirichlet(domain, spec, &data(-1.0), &cfg.solver)?;
    let tol = cfg.solver.tol();
    let far: Vec<usize> = domain
        .boundary_nodes()
        .filter(|&i| math::dist(&domain.point(i), &y) > cfg.rho)
        .collect();
    let j_holds = far
        .iter()
        .all(|&i| v.values[i] >= m - tol && u.values[i] <= -m + tol);
    let all: Vec<usize> = domain
        .interior_nodes()
        .chain(domain.boundary_nodes())
        .collect();
    let v_min = all
        .iter()
        .map(|&i| v.values[i])
        .fold(f64::INFINITY, f64::min);
    let u_max = all
        .iter()
        .map(|&i| u.values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let extreme = |f: &Field, s: f64| -> Vec<(f64, Option<f64>)> {
        cfg.deltas
            .iter()
            .map(|&d| {
                let vals = domain
                    .lattice
                    .nodes_in_ball(&y, d)
                    .into_iter()
                    .filter(|&i| domain.is_interior(i));
                (
                    d,
                    vals.map(|i| s * f.values[i])
                        .reduce(f64::max)
                        .map(|x| s * x),
                )
            })
            .collect()
    };
    let v_maxima = extreme(&v, 1.0);
    let u_minima = extreme(&u, -1.0);
    let jj_trend = {
        let vals: Option<Vec<f64>> = v_maxima.iter().map(|p| p.1).collect();
        match vals {
            Some(vs) if vs.len() >= 2 => {
                vs.windows(2).all(|w| w[1] <= w[0] + tol) && vs[vs.len() - 1] <= cfg.decay * vs[0]
            }
            _ => false,
        }
    };
    let report = BarrierReport {
        v_solve,
        u_solve,
        j_holds,
        v_min,
        u_max,
        v_nonnegative: v_min >= -tol,
        u_nonpositive: u_max <= tol,
        v_maxima,
        u_minima,
        jj_trend,
    };
    Ok((v, u, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub r: f64,
    /// Nodes compared near `y` on the finest grid.
    pub compared_nodes: usize,
    pub omega: RegularityReport,
    pub lambda: RegularityReport,
    pub agree: bool,
}

/// Checks that Ω and Λ have the same interior nodes in `I(y, r)` at the
/// finest spacing.
pub fn check_same_near(
    omega: &ShapeSpec,
    lambda: &ShapeSpec,
    y: &Point,
    r: f64,
    h: f64,
) -> Result<usize, CapacityError> {
    if omega.dim != lambda.dim {
        return Err(CapacityError::Precondition(
            "the shapes have different dimensions".into(),
        ));
    }
    let mut b = Bounds {
        lo: [0.0; 3],
        hi: [0.0; 3],
    };
    for d in 0..omega.dim {
        b.lo[d] = y[d] - r;
        b.hi[d] = y[d] + r;
    }
    let go = build_grid_in(omega, h, &b)?;
    let gl = build_grid_in(lambda, h, &b)?;
    let mut compared = 0;
    for i in go.lattice.nodes_in_ball(y, r) {
        let p = go.point(i);
        let j = gl
            .node_at(&p)
            .ok_or_else(|| CapacityError::Precondition("lattices are misaligned".into()))?;
        if go.is_interior(i) != gl.is_interior(j) {
            return Err(CapacityError::Precondition(format!(
                "the shapes differ at ({}) inside I(y, {r})",
                p[..omega.dim]
                    .iter()
                    .map(|c| format!("{c}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        compared += 1;
    }
    Ok(compared)
}

/// Runs the probe on Ω and on Λ; passes iff the verdicts agree.
pub fn locality_check(
    omega: &ShapeSpec,
    lambda: &ShapeSpec,
    r: f64,
    spec: &OperatorSpec,
    config: &WienerProbeConfig,
) -> Result<LocalityReport, CapacityError> {
    config.validate(omega.dim)?;
    let compared = check_same_near(omega, lambda, &config.point(), r, config.finest())?;
    let a = wiener_probe(omega, config, spec)?;
    let b = wiener_probe(lambda, config, spec)?;
    let agree = a.verdict == b.verdict;
    Ok(LocalityReport {
        r,
        compared_nodes: compared,
        omega: a,
        lambda: b,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use alloc::boxed::Box;
    use alloc::vec;

    fn annulus_cap(h: f64) -> (GridDomain, GridDomain, ComplementCap) {
        // Ω = unit disk minus the closed disk of radius 1/4; the cap at
        // y = (1/4, 0) with radius 1/2 holds the inner disk's nodes.
        let omega = ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                    Shape::Complement {
                        item: Box::new(Shape::Ball {
                            center: vec![0.0, 0.0],
                            radius: 0.25,
                        }),
                    },
                ],
            },
        )
        .unwrap();
        let sigma = Sigma {
            center: [0.0; 3],
            radius: 0.5,
        };
        let (og, sg) = sigma.grids(&omega, h).unwrap();
        let y = og.node_at(&[0.25, 0.0, 0.0]).unwrap();
        let cap = complement_cap(&og, y, 0.5).unwrap();
        (og, sg, cap)
    }

    #[test]
    fn potential_respects_bounds_and_sign_symmetry() {
        let (_, sg, cap) = annulus_cap(1.0 / 16.0);
        let cfg = SolverConfig::with_tol(1e-10);
        let spec = OperatorSpec::p_laplace(3.0);
        let plus = capacitary_potential(&sg, &cap, &spec, Sign::Plus, 1.0, &cfg).unwrap();
        assert!(plus.report.converged);
        assert!(plus.check.passed, "{:?}", plus.check);
        assert!(plus.check.min >= 0.0 && plus.check.max == 1.0);
        let minus = capacitary_potential(&sg, &cap, &spec, Sign::Minus, 1.0, &cfg).unwrap();
        assert!(minus.check.passed);
        let diff = plus
            .field
            .max_diff_where(&minus.field.negated(), |i| sg.is_interior(i));
        assert!(diff <= 2e-9, "{diff}");
    }

    #[test]
    fn potential_grows_with_the_cap() {
        let (og, sg, cap) = annulus_cap(1.0 / 16.0);
        let small = complement_cap(&og, cap.center, 0.2).unwrap();
        assert!(small.count() < cap.count());
        let cfg = SolverConfig::with_tol(1e-10);
        let spec = OperatorSpec::p_laplace(2.0);
        let a = capacitary_potential(&sg, &small, &spec, Sign::Plus, 1.0, &cfg).unwrap();
        let b = capacitary_potential(&sg, &cap, &spec, Sign::Plus, 1.0, &cfg).unwrap();
        assert!(sg
            .interior_nodes()
            .all(|i| a.field.values[i] <= b.field.values[i] + 2e-10));
    }

    #[test]
    fn config_validation() {
        let mut c = WienerProbeConfig {
            y: vec![0.5, 0.0],
            m: 1.0,
            rho0: 0.2,
            r0: 0.1,
            ratio: 2.0,
            count: 3,
            levels: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            decay: 0.1,
            floor: 0.25,
            stagnation_radius: None,
            solver: SolverConfig::default(),
            criteria: CriteriaConfig::default(),
        };
        assert!(c.validate(2).is_ok());
        assert_eq!(c.stagnation(), 0.05);
        c.count = 2;
        assert!(c.validate(2).is_err());
        c.count = 3;
        c.r0 = 0.15;
        assert!(c.validate(2).is_err());
        c.r0 = 0.1;
        c.levels = vec![1.0 / 64.0, 1.0 / 32.0];
        assert!(c.validate(2).is_err());
        c.levels = vec![1.0 / 8.0];
        c.count = 5;
        assert!(c.validate(2).is_err());
    }

    #[test]
    fn locality_guard_rejects_different_shapes() {
        let a = ShapeSpec::ball(2, &[0.0, 0.0], 0.5);
        let b = ShapeSpec::ball(2, &[0.1, 0.0], 0.5);
        let y = [0.5, 0.0, 0.0];
        assert!(matches!(
            check_same_near(&a, &b, &y, 0.2, 1.0 / 32.0),
            Err(CapacityError::Precondition(_))
        ));
        assert!(check_same_near(&a, &a, &y, 0.2, 1.0 / 32.0).unwrap() > 0);
    }

    #[test]
    fn barrier_data_condition_holds() {
        let g = build_grid(&ShapeSpec::ball(2, &[0.0, 0.0], 0.5), 1.0 / 16.0).unwrap();
        let cfg = BarrierConfig {
            y: vec![0.5, 0.0],
            rho: 0.25,
            m: 1.0,
            deltas: vec![0.25, 0.125],
            decay: 0.5,
            solver: SolverConfig::with_tol(1e-10),
        };
        let (v, u, rep) = barrier_build(&g, &OperatorSpec::p_laplace(2.0), &cfg).unwrap();
        assert!(rep.j_holds && rep.v_nonnegative && rep.u_nonpositive);
        assert!(v.max_diff_where(&u.negated(), |i| g.label(i) != NodeLabel::Exterior) < 1e-8);
    }
}
