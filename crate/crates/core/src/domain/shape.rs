//! Constructive shape descriptions.
//!
//! A [`ShapeSpec`] is a composition tree of primitives. It answers two
//! questions: whether a lattice node lies in the open set it describes
//! (with ties on the boundary resolved toward the exterior), and which part
//! of a straight line it covers, which drives the solid-angle estimator.
//!
//! Codimension-one primitives (`flat_cone`, `twisted_cone`) have no volume.
//! On a lattice of spacing `h` they are realised as one-node-thick layers;
//! along a line they show up as isolated points.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::interval::{Interval, IntervalSet};
use crate::math::{self, add_scaled, dot, norm, sub, to_point};
use crate::Point;

/// Relative slack used when a point sits on a primitive's boundary.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Open ball.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Open axis-aligned box.
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    /// `{x : normal · x < offset}`.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Solid right circular cone truncated by the sphere of radius `length`
    /// about its vertex: `(x−v)·axis ≥ 0`, `|x−v|² ≤ (1+opening)((x−v)·axis)²`.
    Cone {
        vertex: Vec<f64>,
        axis: Vec<f64>,
        opening: f64,
        length: f64,
    },
    /// Flat truncated cone in the hyperplane `x_N = v_N` around the `x_1`
    /// axis: `x_1 ≥ v_1`, `|x−v| ≤ length`, `|x−v|² ≤ (1+opening)(x_1−v_1)²`.
    /// In two dimensions this is a segment (a slit).
    FlatCone {
        vertex: Vec<f64>,
        opening: f64,
        length: f64,
    },
    /// Piecewise-flat image of a flat cone: the union over `i` of the pieces
    /// of the coordinate hyperplanes `x_i = v_i` lying in the closed positive
    /// orthant at `v`, truncated at `length` and restricted to the cone of
    /// the given opening around the orthant diagonal.
    TwistedCone {
        vertex: Vec<f64>,
        opening: f64,
        length: f64,
    },
    /// Power cusp `{0 < s < length, |x − v − s·axis| < coefficient · s^exponent}`
    /// with `s = (x−v)·axis`.
    Cusp {
        vertex: Vec<f64>,
        axis: Vec<f64>,
        exponent: f64,
        coefficient: f64,
        length: f64,
    },
    Union {
        items: Vec<Shape>,
    },
    Intersection {
        items: Vec<Shape>,
    },
    Complement {
        item: Box<Shape>,
    },
}

/// A shape together with its ambient dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub dim: usize,
    pub root: Shape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Membership {
    Outside,
    OnBoundary,
    Inside,
}

impl Membership {
    fn flip(self) -> Self {
        match self {
            Membership::Outside => Membership::Inside,
            Membership::OnBoundary => Membership::OnBoundary,
            Membership::Inside => Membership::Outside,
        }
    }

    fn strict(value: f64, scale: f64) -> Self {
        // value < 0 means inside.
        if value < -TIE_EPS * scale {
            Membership::Inside
        } else if value <= TIE_EPS * scale {
            Membership::OnBoundary
        } else {
            Membership::Outside
        }
    }
}

/// Axis-aligned bounds; `None` along an axis means unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lo: Point,
    pub hi: Point,
}

impl Bounds {
    fn everything() -> Self {
        Self {
            lo: [f64::NEG_INFINITY; 3],
            hi: [f64::INFINITY; 3],
        }
    }

    pub fn is_bounded(&self, dim: usize) -> bool {
        (0..dim).all(|d| self.lo[d].is_finite() && self.hi[d].is_finite())
    }

    fn union(&self, o: &Self) -> Self {
        let mut b = *self;
        for d in 0..3 {
            b.lo[d] = b.lo[d].min(o.lo[d]);
            b.hi[d] = b.hi[d].max(o.hi[d]);
        }
        b
    }

    fn intersect(&self, o: &Self) -> Self {
        let mut b = *self;
        for d in 0..3 {
            b.lo[d] = b.lo[d].max(o.lo[d]);
            b.hi[d] = b.hi[d].min(o.hi[d]);
        }
        b
    }

    pub fn is_empty(&self, dim: usize) -> bool {
        (0..dim).any(|d| self.lo[d] > self.hi[d])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeError(pub String);

impl core::fmt::Display for ShapeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "invalid shape: {}", self.0)
    }
}

fn check_vec(name: &str, v: &[f64], dim: usize) -> Result<(), ShapeError> {
    if v.len() != dim {
        return Err(ShapeError(format!(
            "{name} has {} components, expected {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ShapeError(format!("{name} is not finite")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<(), ShapeError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(ShapeError(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

fn unit(v: &[f64]) -> Point {
    let p = to_point(v);
    let n = norm(&p);
    [p[0] / n, p[1] / n, p[2] / n]
}

fn diagonal(dim: usize) -> Point {
    let c = 1.0 / math::sqrt(dim as f64);
    let mut d = [0.0; 3];
    for x in d.iter_mut().take(dim) {
        *x = c;
    }
    d
}

/// Solution set of `a t² + b t + c < 0` (open).
fn quadratic_negative(a: f64, b: f64, c: f64) -> IntervalSet {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(f64::MIN_POSITIVE);
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return if c < 0.0 {
                IntervalSet::full()
            } else {
                IntervalSet::empty()
            };
        }
        let root = -c / b;
        return if b > 0.0 {
            IntervalSet::from_interval(Interval::open(f64::NEG_INFINITY, root))
        } else {
            IntervalSet::from_interval(Interval::open(root, f64::INFINITY))
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return if a > 0.0 {
            IntervalSet::empty()
        } else {
            IntervalSet::full()
        };
    }
    let sq = math::sqrt(disc);
    // Numerically stable roots.
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let (mut r1, mut r2) = (q / a, if q != 0.0 { c / q } else { -q / a });
    if r1 > r2 {
        core::mem::swap(&mut r1, &mut r2);
    }
    if a > 0.0 {
        IntervalSet::from_interval(Interval::open(r1, r2))
    } else {
        IntervalSet::from_items(alloc::vec![
            Interval::open(f64::NEG_INFINITY, r1),
            Interval::open(r2, f64::INFINITY),
        ])
    }
}

fn ball_line(center: &Point, radius: f64, x: &Point, xi: &Point) -> IntervalSet {
    let rel = sub(x, center);
    quadratic_negative(
        dot(xi, xi),
        2.0 * dot(&rel, xi),
        dot(&rel, &rel) - radius * radius,
    )
}

fn halfline(normal: &Point, offset: f64, x: &Point, xi: &Point) -> IntervalSet {
    // normal · (x + t xi) < offset
    let a = dot(normal, xi);
    let b = dot(normal, x) - offset;
    quadratic_negative(0.0, a, b)
}

impl Shape {
    fn validate(&self, dim: usize) -> Result<(), ShapeError> {
        match self {
            Shape::Ball { center, radius } => {
                check_vec("ball.center", center, dim)?;
                check_positive("ball.radius", *radius)
            }
            Shape::Box { min, max } => {
                check_vec("box.min", min, dim)?;
                check_vec("box.max", max, dim)?;
                for d in 0..dim {
                    check_positive("box side", max[d] - min[d])?;
                }
                Ok(())
            }
            Shape::Halfspace { normal, offset } => {
                check_vec("halfspace.normal", normal, dim)?;
                if !offset.is_finite() || norm(&to_point(normal)) == 0.0 {
                    return Err(ShapeError(
                        "halfspace needs a nonzero normal and finite offset".into(),
                    ));
                }
                Ok(())
            }
            Shape::Cone {
                vertex,
                axis,
                opening,
                length,
            } => {
                check_vec("cone.vertex", vertex, dim)?;
                check_vec("cone.axis", axis, dim)?;
                if norm(&to_point(axis)) == 0.0 {
                    return Err(ShapeError("cone.axis must be nonzero".into()));
                }
                check_positive("cone.opening", *opening)?;
                check_positive("cone.length", *length)
            }
            Shape::FlatCone {
                vertex,
                opening,
                length,
            }
            | Shape::TwistedCone {
                vertex,
                opening,
                length,
            } => {
                check_vec("cone.vertex", vertex, dim)?;
                check_positive("cone.opening", *opening)?;
                check_positive("cone.length", *length)
            }
            Shape::Cusp {
                vertex,
                axis,
                exponent,
                coefficient,
                length,
            } => {
                check_vec("cusp.vertex", vertex, dim)?;
                check_vec("cusp.axis", axis, dim)?;
                if norm(&to_point(axis)) == 0.0 {
                    return Err(ShapeError("cusp.axis must be nonzero".into()));
                }
                check_positive("cusp.exponent", *exponent)?;
                check_positive("cusp.coefficient", *coefficient)?;
                check_positive("cusp.length", *length)
            }
            Shape::Union { items } | Shape::Intersection { items } => {
                if items.is_empty() {
                    return Err(ShapeError(
                        "union/intersection needs at least one item".into(),
                    ));
                }
                items.iter().try_for_each(|s| s.validate(dim))
            }
            Shape::Complement { item } => item.validate(dim),
        }
    }

    fn bounds(&self, dim: usize) -> Bounds {
        let ball_bounds = |c: &Point, r: f64| {
            let mut b = Bounds::everything();
            for d in 0..dim {
                b.lo[d] = c[d] - r;
                b.hi[d] = c[d] + r;
            }
            b
        };
        match self {
            Shape::Ball { center, radius } => ball_bounds(&to_point(center), *radius),
            Shape::Box { min, max } => {
                let mut b = Bounds::everything();
                for d in 0..dim {
                    b.lo[d] = min[d];
                    b.hi[d] = max[d];
                }
                b
            }
            Shape::Halfspace { .. } | Shape::Complement { .. } => Bounds::everything(),
            Shape::Cone { vertex, length, .. }
            | Shape::FlatCone { vertex, length, .. }
            | Shape::TwistedCone { vertex, length, .. } => ball_bounds(&to_point(vertex), *length),
            Shape::Cusp {
                vertex,
                coefficient,
                exponent,
                length,
                ..
            } => {
                let w = coefficient * math::powf(*length, *exponent);
                ball_bounds(&to_point(vertex), math::sqrt(length * length + w * w))
            }
            Shape::Union { items } => {
                let mut it = items.iter().map(|s| s.bounds(dim));
                let first = it.next().unwrap_or_else(Bounds::everything);
                it.fold(first, |a, b| a.union(&b))
            }
            Shape::Intersection { items } => items
                .iter()
                .map(|s| s.bounds(dim))
                .fold(Bounds::everything(), |a, b| a.intersect(&b)),
        }
    }

    fn min_feature(&self, dim: usize) -> f64 {
        match self {
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Box { min, max } => (0..dim)
                .map(|d| max[d] - min[d])
                .fold(f64::INFINITY, f64::min),
            Shape::Halfspace { .. } => f64::INFINITY,
            Shape::Cone { length, .. }
            | Shape::FlatCone { length, .. }
            | Shape::TwistedCone { length, .. }
            | Shape::Cusp { length, .. } => *length,
            Shape::Union { items } | Shape::Intersection { items } => items
                .iter()
                .map(|s| s.min_feature(dim))
                .fold(f64::INFINITY, f64::min),
            Shape::Complement { item } => item.min_feature(dim),
        }
    }

    /// Membership of `x`. `layer` is the half-thickness given to
    /// codimension-one primitives (zero for the analytic set).
    fn classify(&self, dim: usize, x: &Point, layer: f64) -> Membership {
        match self {
            Shape::Ball { center, radius } => {
                let c = to_point(center);
                let r2 = radius * radius;
                let rel = sub(x, &c);
                Membership::strict(dot(&rel, &rel) - r2, r2)
            }
            Shape::Box { min, max } => {
                let mut m = Membership::Inside;
                for d in 0..dim {
                    let scale = (max[d] - min[d]).abs().max(1.0);
                    m = m.min(Membership::strict(min[d] - x[d], scale));
                    m = m.min(Membership::strict(x[d] - max[d], scale));
                }
                m
            }
            Shape::Halfspace { normal, offset } => {
                let n = to_point(normal);
                let scale = norm(&n) * (norm(x) + offset.abs()).max(1.0);
                Membership::strict(dot(&n, x) - offset, scale)
            }
            Shape::Cone {
                vertex,
                axis,
                opening,
                length,
            } => {
                let rel = sub(x, &to_point(vertex));
                let a = unit(axis);
                let s = dot(&rel, &a);
                let r2 = dot(&rel, &rel);
                let scale = length * length;
                Membership::strict(-s, *length)
                    .min(Membership::strict(r2 - (1.0 + opening) * s * s, scale))
                    .min(Membership::strict(r2 - length * length, scale))
            }
            Shape::FlatCone {
                vertex,
                opening,
                length,
            } => {
                let v = to_point(vertex);
                let n = dim - 1;
                let off = x[n] - v[n];
                if !in_layer(off, layer) {
                    return Membership::Outside;
                }
                let mut rel = sub(x, &v);
                rel[n] = 0.0;
                if flat_cone_closed(&rel, *opening, *length) {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            Shape::TwistedCone {
                vertex,
                opening,
                length,
            } => {
                let v = to_point(vertex);
                let diag = diagonal(dim);
                for i in 0..dim {
                    if !in_layer(x[i] - v[i], layer) {
                        continue;
                    }
                    let mut rel = sub(x, &v);
                    rel[i] = 0.0;
                    if twisted_piece_closed(&rel, dim, *opening, *length, &diag) {
                        return Membership::Inside;
                    }
                }
                Membership::Outside
            }
            Shape::Cusp {
                vertex,
                axis,
                exponent,
                coefficient,
                length,
            } => {
                let rel = sub(x, &to_point(vertex));
                let a = unit(axis);
                let s = dot(&rel, &a);
                if s <= 0.0 || s >= *length {
                    return if s == 0.0 || s == *length {
                        Membership::OnBoundary
                    } else {
                        Membership::Outside
                    };
                }
                let perp = norm(&add_scaled(&rel, -s, &a));
                let w = coefficient * math::powf(s, *exponent);
                Membership::strict(perp - w, w.max(f64::MIN_POSITIVE))
            }
            Shape::Union { items } => items
                .iter()
                .map(|s| s.classify(dim, x, layer))
                .max()
                .unwrap_or(Membership::Outside),
            Shape::Intersection { items } => items
                .iter()
                .map(|s| s.classify(dim, x, layer))
                .min()
                .unwrap_or(Membership::Inside),
            Shape::Complement { item } => item.classify(dim, x, layer).flip(),
        }
    }

    /// Parameters `t` with `x + t·xi` in the (analytic) set.
    fn line(&self, dim: usize, x: &Point, xi: &Point) -> IntervalSet {
        match self {
            Shape::Ball { center, radius } => ball_line(&to_point(center), *radius, x, xi),
            Shape::Box { min, max } => {
                let mut set = IntervalSet::full();
                for d in 0..dim {
                    let mut e = [0.0; 3];
                    e[d] = 1.0;
                    set = set.intersection(&halfline(&e, max[d], x, xi));
                    e[d] = -1.0;
                    set = set.intersection(&halfline(&e, -min[d], x, xi));
                }
                set
            }
            Shape::Halfspace { normal, offset } => halfline(&to_point(normal), *offset, x, xi),
            Shape::Cone {
                vertex,
                axis,
                opening,
                length,
            } => {
                let v = to_point(vertex);
                let a = unit(axis);
                let rel = sub(x, &v);
                let neg_a = [-a[0], -a[1], -a[2]];
                // s > 0
                let front = halfline(&neg_a, dot(&neg_a, &v), x, xi);
                let k = 1.0 + opening;
                let (ra, xa) = (dot(&rel, &a), dot(xi, &a));
                let cone = quadratic_negative(
                    dot(xi, xi) - k * xa * xa,
                    2.0 * (dot(&rel, xi) - k * ra * xa),
                    dot(&rel, &rel) - k * ra * ra,
                );
                front
                    .intersection(&cone)
                    .intersection(&ball_line(&v, *length, x, xi))
            }
            Shape::FlatCone {
                vertex,
                opening,
                length,
            } => {
                let v = to_point(vertex);
                let n = dim - 1;
                match plane_hit(x, xi, n, v[n]) {
                    Some(t) => {
                        let p = add_scaled(x, t, xi);
                        let mut rel = sub(&p, &v);
                        rel[n] = 0.0;
                        if flat_cone_closed(&rel, *opening, *length) {
                            IntervalSet::from_interval(Interval::point(t))
                        } else {
                            IntervalSet::empty()
                        }
                    }
                    None => IntervalSet::empty(),
                }
            }
            Shape::TwistedCone {
                vertex,
                opening,
                length,
            } => {
                let v = to_point(vertex);
                let diag = diagonal(dim);
                let mut pts = Vec::new();
                for i in 0..dim {
                    if let Some(t) = plane_hit(x, xi, i, v[i]) {
                        let p = add_scaled(x, t, xi);
                        let mut rel = sub(&p, &v);
                        rel[i] = 0.0;
                        if twisted_piece_closed(&rel, dim, *opening, *length, &diag) {
                            pts.push(Interval::point(t));
                        }
                    }
                }
                IntervalSet::from_items(pts)
            }
            Shape::Cusp { .. } => self.line_by_sampling(dim, x, xi),
            Shape::Union { items } => items.iter().fold(IntervalSet::empty(), |acc, s| {
                acc.union(&s.line(dim, x, xi))
            }),
            Shape::Intersection { items } => items.iter().fold(IntervalSet::full(), |acc, s| {
                acc.intersection(&s.line(dim, x, xi))
            }),
            Shape::Complement { item } => item.line(dim, x, xi).complement(),
        }
    }

    /// Line intersection for primitives without a closed form: sign changes
    /// of the membership along the chord through the bounding ball, refined
    /// by bisection.
    fn line_by_sampling(&self, dim: usize, x: &Point, xi: &Point) -> IntervalSet {
        let b = self.bounds(dim);
        let mut c = [0.0; 3];
        let mut r2 = 0.0;
        for d in 0..dim {
            c[d] = 0.5 * (b.lo[d] + b.hi[d]);
            r2 += 0.25 * (b.hi[d] - b.lo[d]) * (b.hi[d] - b.lo[d]);
        }
        let chord = ball_line(&c, math::sqrt(r2) * 1.001, x, xi);
        let Some(iv) = chord.intervals().first().copied() else {
            return IntervalSet::empty();
        };
        const SAMPLES: usize = 512;
        let inside = |t: f64| self.classify(dim, &add_scaled(x, t, xi), 0.0) == Membership::Inside;
        let refine = |mut a: f64, mut b: f64, a_in: bool| {
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if inside(m) == a_in {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let mut items = Vec::new();
        let step = (iv.hi - iv.lo) / SAMPLES as f64;
        let mut prev_t = iv.lo;
        let mut prev_in = inside(prev_t);
        let mut start = if prev_in { Some(prev_t) } else { None };
        for k in 1..=SAMPLES {
            let t = iv.lo + step * k as f64;
            let now = inside(t);
            if now != prev_in {
                let edge = refine(prev_t, t, prev_in);
                if now {
                    start = Some(edge);
                } else if let Some(s) = start.take() {
                    items.push(Interval::open(s, edge));
                }
            }
            prev_t = t;
            prev_in = now;
        }
        if let Some(s) = start {
            items.push(Interval::open(s, iv.hi));
        }
        IntervalSet::from_items(items)
    }
}

fn in_layer(offset: f64, layer: f64) -> bool {
    if layer > 0.0 {
        -layer <= offset && offset < layer
    } else {
        offset == 0.0
    }
}

fn plane_hit(x: &Point, xi: &Point, axis: usize, level: f64) -> Option<f64> {
    if xi[axis].abs() < 1e-14 {
        None
    } else {
        Some((level - x[axis]) / xi[axis])
    }
}

fn flat_cone_closed(rel: &Point, opening: f64, length: f64) -> bool {
    let r2 = dot(rel, rel);
    let slack = TIE_EPS * length * length;
    rel[0] >= -TIE_EPS * length
        && r2 <= length * length + slack
        && r2 <= (1.0 + opening) * rel[0] * rel[0] + slack
}

fn twisted_piece_closed(rel: &Point, dim: usize, opening: f64, length: f64, diag: &Point) -> bool {
    let tol = TIE_EPS * length;
    if (0..dim).any(|j| rel[j] < -tol) {
        return false;
    }
    let r2 = dot(rel, rel);
    let s = dot(rel, diag);
    let slack = TIE_EPS * length * length;
    r2 <= length * length + slack && r2 <= (1.0 + opening) * s * s + slack
}

impl ShapeSpec {
    pub fn new(dim: usize, root: Shape) -> Result<Self, ShapeError> {
        let spec = Self { dim, root };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        if !(2..=3).contains(&self.dim) {
            return Err(ShapeError(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        self.root.validate(self.dim)
    }

    pub fn bounds(&self) -> Bounds {
        self.root.bounds(self.dim)
    }

    /// Smallest size parameter among the primitives.
    pub fn min_feature(&self) -> f64 {
        self.root.min_feature(self.dim)
    }

    /// Whether `x` lies in the open set, thin primitives thickened to a layer
    /// of half-width `layer`.
    pub fn contains(&self, x: &Point, layer: f64) -> bool {
        self.root.classify(self.dim, x, layer) == Membership::Inside
    }

    pub fn classify(&self, x: &Point, layer: f64) -> Membership {
        self.root.classify(self.dim, x, layer)
    }

    /// Parameters `t` for which `x + t·xi` lies in the analytic set.
    pub fn line_set(&self, x: &Point, xi: &Point) -> IntervalSet {
        self.root.line(self.dim, x, xi)
    }

    pub fn ball(dim: usize, center: &[f64], radius: f64) -> Self {
        Self {
            dim,
            root: Shape::Ball {
                center: center.to_vec(),
                radius,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn slit_disk() -> ShapeSpec {
        ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                    Shape::Complement {
                        item: Box::new(Shape::FlatCone {
                            vertex: vec![0.0, 0.0],
                            opening: 1.0,
                            length: 2.0,
                        }),
                    },
                ],
            },
        )
        .unwrap()
    }

    #[test]
    fn boundary_ties_go_to_the_exterior() {
        let b = ShapeSpec::new(
            2,
            Shape::Box {
                min: vec![0.0, 0.0],
                max: vec![1.0, 1.0],
            },
        )
        .unwrap();
        assert!(!b.contains(&[0.0, 0.5, 0.0], 0.0));
        assert!(b.contains(&[0.5, 0.5, 0.0], 0.0));
        let c = ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Ball {
                        center: vec![0.0, 0.0],
                        radius: 2.0,
                    },
                    Shape::Complement {
                        item: Box::new(Shape::Ball {
                            center: vec![0.0, 0.0],
                            radius: 1.0,
                        }),
                    },
                ],
            },
        )
        .unwrap();
        assert!(!c.contains(&[1.0, 0.0, 0.0], 0.0));
        assert!(c.contains(&[1.5, 0.0, 0.0], 0.0));
    }

    #[test]
    fn slit_is_one_layer_thick() {
        let s = slit_disk();
        let h = 0.125;
        assert!(!s.contains(&[0.5, 0.0, 0.0], h / 2.0));
        assert!(s.contains(&[0.5, h, 0.0], h / 2.0));
        assert!(s.contains(&[-0.5, 0.0, 0.0], h / 2.0));
        assert!(!s.contains(&[0.0, 0.0, 0.0], h / 2.0));
    }

    #[test]
    fn line_meets_slit_in_a_point() {
        let s = slit_disk();
        let x = [0.5, 0.5, 0.0];
        let down = [0.0, -1.0, 0.0];
        let outside = s.line_set(&x, &down).complement();
        assert!(outside.contains(0.5));
        assert!(!outside.contains(0.4));
        // A line that crosses the axis left of the tip misses the slit.
        let x2 = [-0.5, 0.5, 0.0];
        let inside_disk = IntervalSet::from_interval(Interval::closed(-0.2, 0.8));
        assert!(s
            .line_set(&x2, &down)
            .complement()
            .intersection(&inside_disk)
            .is_empty());
    }

    #[test]
    fn cone_line_agrees_with_membership() {
        let cone = ShapeSpec::new(
            3,
            Shape::Cone {
                vertex: vec![0.0, 0.0, 0.0],
                axis: vec![1.0, 0.0, 0.0],
                opening: 0.5,
                length: 1.0,
            },
        )
        .unwrap();
        let x = [-0.3, 0.1, 0.05];
        let xi = [0.9, -0.1, 0.02];
        let set = cone.line_set(&x, &xi);
        for k in 0..400 {
            let t = -2.0 + 4.0 * k as f64 / 400.0;
            let p = add_scaled(&x, t, &xi);
            let m = cone.classify(&p, 0.0);
            if m != Membership::OnBoundary {
                assert_eq!(set.contains(t), m == Membership::Inside, "t = {t}");
            }
        }
    }

    #[test]
    fn cusp_line_by_sampling_agrees_with_membership() {
        let cusp = ShapeSpec::new(
            2,
            Shape::Cusp {
                vertex: vec![0.0, 0.0],
                axis: vec![1.0, 0.0],
                exponent: 2.0,
                coefficient: 1.0,
                length: 1.0,
            },
        )
        .unwrap();
        let x = [0.5, 0.6, 0.0];
        let xi = [0.0, -1.0, 0.0];
        let set = cusp.line_set(&x, &xi);
        // |y| < 0.25 at x_1 = 0.5  ->  t in (0.35, 0.85)
        assert_eq!(set.intervals().len(), 1);
        let iv = set.intervals()[0];
        assert!((iv.lo - 0.35).abs() < 1e-9 && (iv.hi - 0.85).abs() < 1e-9);
    }

    #[test]
    fn twisted_cone_pieces_are_orthogonal_to_each_axis() {
        let tc = ShapeSpec::new(
            3,
            Shape::TwistedCone {
                vertex: vec![0.0; 3],
                opening: 4.0,
                length: 1.0,
            },
        )
        .unwrap();
        assert_eq!(tc.classify(&[0.0, 0.3, 0.3], 0.0), Membership::Inside);
        assert_eq!(tc.classify(&[0.3, 0.0, 0.3], 0.0), Membership::Inside);
        assert_eq!(tc.classify(&[0.3, 0.3, 0.0], 0.0), Membership::Inside);
        assert_eq!(tc.classify(&[0.3, 0.3, 0.3], 0.0), Membership::Outside);
        assert_eq!(tc.classify(&[0.0, -0.3, 0.3], 0.0), Membership::Outside);
    }

    #[test]
    fn rejects_bad_primitives() {
        assert!(ShapeSpec::new(
            2,
            Shape::Ball {
                center: vec![0.0, 0.0],
                radius: -1.0
            }
        )
        .is_err());
        assert!(ShapeSpec::new(
            2,
            Shape::Ball {
                center: vec![0.0],
                radius: 1.0
            }
        )
        .is_err());
        assert!(ShapeSpec::new(
            4,
            Shape::Ball {
                center: vec![0.0; 4],
                radius: 1.0
            }
        )
        .is_err());
    }
}
