//! The monotone field `A(p)`, its structure checks, and the discrete energy
//! and weak form on a lattice.
//!
//! The discrete gradient lives on cells. Every cell contributes the average
//! over its `2^N` corners of `W(g_κ)`, where `g_κ` collects the one-sided
//! differences along the cell edges leaving corner `κ`. Every edge difference
//! enters the energy, so the only discrete gradient-free fields are constants.
//! For `t = 2` this reproduces the `2N+1` point Laplacian.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, NodeLabel};
use crate::math;
use crate::rng::Sampler;
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    #[serde(rename = "pLaplace")]
    PLaplace,
    #[serde(rename = "regularizedPLaplace")]
    RegularizedPLaplace,
    /// `A(p) = scale·p + shift`. Evaluated through the weak form only.
    #[serde(rename = "custom")]
    Custom,
}

/// Default floor on `|p|` where `|p|^{t−2}` would blow up.
pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSpec")]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub t: f64,
    pub a: f64,
    pub p0: f64,
    pub odd_symmetric: bool,
    pub homogeneous: bool,
    /// Floor on the gradient magnitude inside `|p|^{t−2}`.
    pub eps: f64,
    pub scale: f64,
    pub shift: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpec {
    kind: OperatorKind,
    t: f64,
    #[serde(default = "one")]
    a: f64,
    #[serde(default)]
    p0: f64,
    odd_symmetric: Option<bool>,
    homogeneous: Option<bool>,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    shift: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl From<RawSpec> for OperatorSpec {
    fn from(r: RawSpec) -> Self {
        let shifted = r.shift.iter().any(|&s| s != 0.0);
        let (odd, hom) = match r.kind {
            OperatorKind::PLaplace => (true, true),
            OperatorKind::RegularizedPLaplace => (true, false),
            OperatorKind::Custom => (!shifted, !shifted && r.t == 2.0),
        };
        OperatorSpec {
            kind: r.kind,
            t: r.t,
            a: r.a,
            p0: r.p0,
            odd_symmetric: r.odd_symmetric.unwrap_or(odd),
            homogeneous: r.homogeneous.unwrap_or(hom),
            eps: r.eps,
            scale: r.scale,
            shift: r.shift,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorError {
    Invalid(String),
    EnergyUndefined,
    GridMismatch { expected: usize, got: usize },
}

impl core::fmt::Display for OperatorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OperatorError::Invalid(m) => write!(f, "invalid operator: {m}"),
            OperatorError::EnergyUndefined => f.write_str("energy undefined; use weak_residual"),
            OperatorError::GridMismatch { expected, got } => {
                write!(f, "field has {got} values, grid has {expected} nodes")
            }
        }
    }
}

impl OperatorSpec {
    pub fn p_laplace(t: f64) -> Self {
        Self {
            kind: OperatorKind::PLaplace,
            t,
            a: 1.0,
            p0: 0.0,
            odd_symmetric: true,
            homogeneous: true,
            eps: DEFAULT_EPS,
            scale: 1.0,
            shift: Vec::new(),
        }
    }

    pub fn regularized(t: f64) -> Self {
        Self {
            kind: OperatorKind::RegularizedPLaplace,
            homogeneous: false,
            ..Self::p_laplace(t)
        }
    }

    /// `A(p) = scale·p + shift`, declared with exponent 2.
    pub fn custom(scale: f64, shift: &[f64]) -> Self {
        let shifted = shift.iter().any(|&s| s != 0.0);
        Self {
            kind: OperatorKind::Custom,
            odd_symmetric: !shifted,
            homogeneous: !shifted,
            scale,
            shift: shift.to_vec(),
            ..Self::p_laplace(2.0)
        }
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        let bad = |m: &str| Err(OperatorError::Invalid(m.into()));
        if !(self.t > 1.0 && self.t.is_finite()) {
            return bad("t must be a finite number greater than 1");
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.p0 >= 0.0 && self.p0.is_finite()) {
            return bad("p0 must be nonnegative");
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad("eps must be nonnegative");
        }
        match self.kind {
            OperatorKind::PLaplace if !(self.odd_symmetric && self.homogeneous) => {
                bad("pLaplace is odd-symmetric and homogeneous")
            }
            OperatorKind::RegularizedPLaplace if !self.odd_symmetric || self.homogeneous => {
                bad("regularizedPLaplace is odd-symmetric and not homogeneous")
            }
            OperatorKind::Custom
                if !self.scale.is_finite() || self.shift.iter().any(|s| !s.is_finite()) =>
            {
                bad("custom scale and shift must be finite")
            }
            _ => Ok(()),
        }
    }

    /// Whether the field is the gradient of a known density `W`.
    pub fn is_potential(&self) -> bool {
        self.kind != OperatorKind::Custom
    }

    fn shift_at(&self, d: usize) -> f64 {
        self.shift.get(d).copied().unwrap_or(0.0)
    }

    /// Magnitude factor `f(|p|)` with `A(p) = f(|p|)·p` for the built-in kinds.
    #[inline]
    fn factor(&self, norm2: f64) -> f64 {
        let e = 0.5 * (self.t - 2.0);
        match self.kind {
            OperatorKind::PLaplace => {
                if self.t < 2.0 {
                    pow_sq(norm2.max(self.eps * self.eps), e)
                } else {
                    pow_sq(norm2, e)
                }
            }
            OperatorKind::RegularizedPLaplace => pow_sq(1.0 + norm2, e),
            OperatorKind::Custom => self.scale,
        }
    }

    #[inline]
    pub fn apply_a(&self, p: &Point) -> Point {
        let f = self.factor(math::dot(p, p));
        let mut out = [f * p[0], f * p[1], f * p[2]];
        if self.kind == OperatorKind::Custom {
            for (d, o) in out.iter_mut().enumerate() {
                *o += self.shift_at(d);
            }
        }
        out
    }

    /// `cᵀ DA(p) c`.
    #[inline]
    pub fn curvature(&self, p: &Point, c: &Point) -> f64 {
        let n2 = math::dot(p, p);
        let cc = math::dot(c, c);
        match self.kind {
            OperatorKind::Custom => self.scale * cc,
            OperatorKind::PLaplace => {
                if self.t == 2.0 {
                    return cc;
                }
                let n = math::sqrt(n2);
                let floor = n.max(self.eps);
                if floor == 0.0 {
                    return 0.0;
                }
                let pc = math::dot(p, c);
                let along = if n > 0.0 { pc * pc / n2 } else { 0.0 };
                pow_sq(floor * floor, 0.5 * (self.t - 2.0)) * (cc + (self.t - 2.0) * along)
            }
            OperatorKind::RegularizedPLaplace => {
                let q = 1.0 + n2;
                let pc = math::dot(p, c);
                pow_sq(q, 0.5 * (self.t - 2.0)) * (cc + (self.t - 2.0) * pc * pc / q)
            }
        }
    }

    /// `(A(p)·c, cᵀ DA(p) c)` sharing one evaluation of the magnitude factor.
    #[inline]
    pub fn flux_and_curvature(&self, p: &Point, c: &Point) -> (f64, f64) {
        let n2 = math::dot(p, p);
        let cc = math::dot(c, c);
        let pc = math::dot(p, c);
        match self.kind {
            OperatorKind::Custom => {
                let shift =
                    self.shift_at(0) * c[0] + self.shift_at(1) * c[1] + self.shift_at(2) * c[2];
                (self.scale * pc + shift, self.scale * cc)
            }
            OperatorKind::PLaplace => {
                if self.t == 2.0 {
                    return (pc, cc);
                }
                let floored = if self.t < 2.0 {
                    n2.max(self.eps * self.eps)
                } else {
                    n2
                };
                let f = pow_sq(floored, 0.5 * (self.t - 2.0));
                let along = if n2 > 0.0 { pc * pc / n2 } else { 0.0 };
                (f * pc, f * (cc + (self.t - 2.0) * along))
            }
            OperatorKind::RegularizedPLaplace => {
                let q = 1.0 + n2;
                let f = pow_sq(q, 0.5 * (self.t - 2.0));
                (f * pc, f * (cc + (self.t - 2.0) * pc * pc / q))
            }
        }
    }

    /// The energy density `W` with `∇W = A`, shifted so that `W(0) = 0`.
    #[inline]
    pub fn density(&self, p: &Point) -> Option<f64> {
        let n2 = math::dot(p, p);
        match self.kind {
            OperatorKind::PLaplace => Some(pow_sq(n2, 0.5 * self.t) / self.t),
            OperatorKind::RegularizedPLaplace => {
                Some((pow_sq(1.0 + n2, 0.5 * self.t) - 1.0) / self.t)
            }
            OperatorKind::Custom => None,
        }
    }

    /// `B(p) = −A(−p)`.
    pub fn reflect(&self) -> Self {
        let mut out = self.clone();
        if self.kind == OperatorKind::Custom {
            for s in out.shift.iter_mut() {
                *s = -*s;
            }
        }
        out
    }

    /// Whether `A(s p) = s^{t−1} A(p)` is exact for this kind.
    fn hom_scale(&self) -> bool {
        self.kind == OperatorKind::PLaplace
    }
}

/// `x^e` for `x ≥ 0`, with the quarter-integer exponents of the common
/// exponents done without `powf`.
#[inline]
fn pow_sq(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e == 0.5 {
        math::sqrt(x)
    } else if e == 1.5 {
        x * math::sqrt(x)
    } else if e == 2.0 {
        x * x
    } else if e == 0.75 {
        let r = math::sqrt(x);
        r * math::sqrt(r)
    } else if e == -0.25 {
        1.0 / math::sqrt(math::sqrt(x))
    } else {
        math::powf(x, e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    Monotone,
    Coercive,
    Growth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub p: Point,
    pub q: Option<Point>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub seed: u64,
    pub monotone_failures: usize,
    pub coercive_failures: usize,
    pub growth_failures: usize,
    /// First witnesses of each failing check.
    pub witnesses: Vec<Violation>,
    pub passed: bool,
}

const WITNESSES_PER_CHECK: usize = 4;
const CHECK_MAX_NORM: f64 = 1e3;
const CHECK_REL_SLACK: f64 = 1e-12;

fn random_vector(rng: &mut Sampler, dim: usize, lo: f64, hi: f64) -> Point {
    let dir = rng.direction(dim);
    // Log-uniform magnitudes cover the whole range; a zero floor is replaced
    // by a small positive one.
    let lo = lo.max(1e-6);
    let r = math::exp(math::ln(lo) + rng.uniform() * (math::ln(hi) - math::ln(lo)));
    [r * dir[0], r * dir[1], r * dir[2]]
}

/// Samples pairs with `|p|, |q| ∈ [p₀, 10³]` and tests strict monotonicity,
/// `A(p)·p ≥ a|p|^t` and `|A(p)| ≤ a^{-1}|p|^{t−1}`.
pub fn check_assumptions(
    spec: &OperatorSpec,
    dim: usize,
    samples: usize,
    seed: u64,
) -> AssumptionReport {
    let mut rng = Sampler::new(seed);
    let mut rep = AssumptionReport {
        samples,
        seed,
        monotone_failures: 0,
        coercive_failures: 0,
        growth_failures: 0,
        witnesses: Vec::new(),
        passed: true,
    };
    let witness = |rep: &mut AssumptionReport, v: Violation| {
        let seen = rep
            .witnesses
            .iter()
            .filter(|w| w.assumption == v.assumption)
            .count();
        if seen < WITNESSES_PER_CHECK {
            rep.witnesses.push(v);
        }
    };
    for _ in 0..samples {
        let p = random_vector(&mut rng, dim, spec.p0, CHECK_MAX_NORM);
        let q = random_vector(&mut rng, dim, spec.p0, CHECK_MAX_NORM);
        let ap = spec.apply_a(&p);
        let aq = spec.apply_a(&q);
        let mono = math::dot(&math::sub(&ap, &aq), &math::sub(&p, &q));
        if !(mono > 0.0) {
            rep.monotone_failures += 1;
            witness(
                &mut rep,
                Violation {
                    assumption: Assumption::Monotone,
                    p,
                    q: Some(q),
                    value: mono,
                },
            );
        }
        for x in [p, q] {
            let ax = spec.apply_a(&x);
            let n = math::norm(&x);
            let coer = math::dot(&ax, &x) - spec.a * math::powf(n, spec.t);
            if coer < -CHECK_REL_SLACK * spec.a * math::powf(n, spec.t) {
                rep.coercive_failures += 1;
                witness(
                    &mut rep,
                    Violation {
                        assumption: Assumption::Coercive,
                        p: x,
                        q: None,
                        value: coer,
                    },
                );
            }
            let bound = math::powf(n, spec.t - 1.0) / spec.a;
            let growth = math::norm(&ax) - bound;
            if growth > CHECK_REL_SLACK * bound {
                rep.growth_failures += 1;
                witness(
                    &mut rep,
                    Violation {
                        assumption: Assumption::Growth,
                        p: x,
                        q: None,
                        value: growth,
                    },
                );
            }
        }
    }
    rep.passed = rep.monotone_failures + rep.coercive_failures + rep.growth_failures == 0;
    rep
}

/// Relative deviation from `A(s p) = s^{t−1} A(p)`; `None` for kinds where
/// homogeneity is not claimed.
pub fn homogeneity_defect(spec: &OperatorSpec, p: &Point, s: f64) -> Option<f64> {
    if !spec.hom_scale() {
        return None;
    }
    let lhs = spec.apply_a(&[s * p[0], s * p[1], s * p[2]]);
    let k = math::powf(s, spec.t - 1.0);
    let rhs = spec.apply_a(p);
    let diff = math::norm(&[
        lhs[0] - k * rhs[0],
        lhs[1] - k * rhs[1],
        lhs[2] - k * rhs[2],
    ]);
    let scale = math::norm(&lhs).max(f64::MIN_POSITIVE);
    Some(diff / scale)
}

/// One value per lattice node. Exterior entries are carried but ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(domain: &GridDomain) -> Self {
        Self {
            values: alloc::vec![0.0; domain.lattice.len()],
        }
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self::from_fn(domain, |_| c)
    }

    /// Evaluates `f` at every non-exterior node.
    pub fn from_fn(domain: &GridDomain, mut f: impl FnMut(&Point) -> f64) -> Self {
        let mut values = alloc::vec![0.0; domain.lattice.len()];
        for (i, v) in values.iter_mut().enumerate() {
            if domain.label(i) != NodeLabel::Exterior {
                *v = f(&domain.point(i));
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `max |self − other|` over nodes accepted by `keep`.
    pub fn max_diff_where(&self, other: &Field, mut keep: impl FnMut(usize) -> bool) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Corner gradients of one cell term, the coefficient of the centre node and
/// the term weight. `g = g0 + (s − s0)·c` when the centre takes value `s`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Term {
    pub g0: Point,
    pub c: Point,
}

/// At most `2^N · (N + 1)` terms for `N ≤ 3`.
pub(crate) const MAX_TERMS: usize = 32;

/// Precomputed cell structure of a grid.
#[derive(Clone, Debug)]
pub struct Stencil {
    dim: usize,
    h: f64,
    /// Flat offsets of the `2^N` cell corners relative to the base node.
    corners: Vec<isize>,
    /// Base nodes of cells with at least one interior corner.
    cells: Vec<usize>,
    len: usize,
}

impl Stencil {
    pub fn new(domain: &GridDomain) -> Self {
        let lat = &domain.lattice;
        let dim = lat.dim;
        let corners: Vec<isize> = (0..1usize << dim)
            .map(|k| {
                let mut d = [0i64; 3];
                for (b, di) in d.iter_mut().enumerate().take(dim) {
                    *di = ((k >> b) & 1) as i64;
                }
                lat.offset(d)
            })
            .collect();
        let mut cells = Vec::new();
        for base in 0..lat.len() {
            let ijk = lat.ijk(base);
            if (0..dim).any(|d| ijk[d] + 1 >= lat.shape[d]) {
                continue;
            }
            if corners
                .iter()
                .any(|&o| domain.is_interior((base as isize + o) as usize))
            {
                cells.push(base);
            }
        }
        Self {
            dim,
            h: lat.h,
            corners,
            cells,
            len: lat.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Area/volume weight of a single corner term.
    pub fn term_weight(&self) -> f64 {
        math::powf(self.h, self.dim as f64) / (1usize << self.dim) as f64
    }

    /// Gradient seen from corner `kappa` of the cell at `base`.
    #[inline]
    pub fn corner_gradient(&self, values: &[f64], base: usize, kappa: usize) -> Point {
        let mut g = [0.0; 3];
        for (d, gd) in g.iter_mut().enumerate().take(self.dim) {
            let hi = (base as isize + self.corners[kappa | (1 << d)]) as usize;
            let lo = (base as isize + self.corners[kappa & !(1 << d)]) as usize;
            *gd = (values[hi] - values[lo]) / self.h;
        }
        g
    }

    fn check_len(&self, u: &Field) -> Result<(), OperatorError> {
        if u.len() != self.len {
            return Err(OperatorError::GridMismatch {
                expected: self.len,
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, spec: &OperatorSpec, u: &Field) -> Result<f64, OperatorError> {
        self.check_len(u)?;
        if !spec.is_potential() {
            return Err(OperatorError::EnergyUndefined);
        }
        let mut total = 0.0;
        for &base in &self.cells {
            let mut cell = 0.0;
            for k in 0..self.corners.len() {
                let g = self.corner_gradient(&u.values, base, k);
                cell += spec.density(&g).unwrap_or(0.0);
            }
            total += cell;
        }
        Ok(total * self.term_weight())
    }

    /// Fills `out` with the terms coupling interior node `i` and returns
    /// their count.
    #[inline]
    pub(crate) fn node_terms(
        &self,
        values: &[f64],
        i: usize,
        out: &mut [Term; MAX_TERMS],
    ) -> usize {
        let mut n = 0;
        let ncorner = self.corners.len();
        for mu in 0..ncorner {
            let base = (i as isize - self.corners[mu]) as usize;
            let mut c = [0.0; 3];
            for (d, cd) in c.iter_mut().enumerate().take(self.dim) {
                *cd = if mu & (1 << d) != 0 {
                    1.0 / self.h
                } else {
                    -1.0 / self.h
                };
            }
            out[n] = Term {
                g0: self.corner_gradient(values, base, mu),
                c,
            };
            n += 1;
            for d in 0..self.dim {
                let kappa = mu ^ (1 << d);
                let mut cd = [0.0; 3];
                cd[d] = c[d];
                out[n] = Term {
                    g0: self.corner_gradient(values, base, kappa),
                    c: cd,
                };
                n += 1;
            }
        }
        n
    }

    /// Residual scale factor: `h^{2−N}` times the term weight.
    pub(crate) fn residual_weight(&self) -> f64 {
        self.h * self.h / (1usize << self.dim) as f64
    }

    /// `h^{2−N} ∂E/∂u_i`, the discrete `a(u, ψ_i)` against the nodal hat.
    pub fn node_residual(&self, spec: &OperatorSpec, values: &[f64], i: usize) -> f64 {
        let mut terms = [Term::default(); MAX_TERMS];
        let n = self.node_terms(values, i, &mut terms);
        let mut r = 0.0;
        for t in &terms[..n] {
            r += math::dot(&spec.apply_a(&t.g0), &t.c);
        }
        r * self.residual_weight()
    }

    /// Residuals at interior nodes; zero elsewhere.
    pub fn residual(
        &self,
        domain: &GridDomain,
        spec: &OperatorSpec,
        u: &Field,
    ) -> Result<Field, OperatorError> {
        self.check_len(u)?;
        let mut values = alloc::vec![0.0; self.len];
        for i in domain.interior_nodes() {
            values[i] = self.node_residual(spec, &u.values, i);
        }
        Ok(Field { values })
    }
}

pub fn apply_a(spec: &OperatorSpec, p: &Point) -> Point {
    spec.apply_a(p)
}

pub fn reflect(spec: &OperatorSpec) -> OperatorSpec {
    spec.reflect()
}

pub fn energy(spec: &OperatorSpec, domain: &GridDomain, u: &Field) -> Result<f64, OperatorError> {
    Stencil::new(domain).energy(spec, u)
}

pub fn weak_residual(
    spec: &OperatorSpec,
    domain: &GridDomain,
    u: &Field,
) -> Result<Field, OperatorError> {
    Stencil::new(domain).residual(domain, spec, u)
}
