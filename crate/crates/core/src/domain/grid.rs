use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::shape::{Bounds, ShapeError, ShapeSpec};
use crate::math;
use crate::Point;

/// Node indexing of a Cartesian lattice `h·Z^N` restricted to a box.
///
/// Node `(i, j, k)` sits at `((first[0] + i)·h, (first[1] + j)·h, ...)`, so
/// lattices with equal spacing share node positions regardless of their box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    pub h: f64,
    pub first: [i64; 3],
    pub shape: [usize; 3],
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.shape[0], self.shape[0] * self.shape[1]]
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.shape[0] * (ijk[1] + self.shape[1] * ijk[2])
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let rest = idx / self.shape[0];
        [i, rest % self.shape[1], rest / self.shape[1]]
    }

    pub fn point(&self, idx: usize) -> Point {
        let ijk = self.ijk(idx);
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = (self.first[d] + ijk[d] as i64) as f64 * self.h;
        }
        p
    }

    /// Index of the node nearest to `x`, if it is inside the box.
    pub fn nearest(&self, x: &Point) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for d in 0..self.dim {
            let k = math::round(x[d] / self.h) as i64 - self.first[d];
            if k < 0 || k >= self.shape[d] as i64 {
                return None;
            }
            ijk[d] = k as usize;
        }
        Some(self.index(ijk))
    }

    /// Whether `x` coincides with a lattice node (to rounding).
    pub fn is_node(&self, x: &Point) -> bool {
        (0..self.dim).all(|d| {
            let k = x[d] / self.h;
            (k - math::round(k)).abs() < 1e-9
        })
    }

    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds {
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        for d in 0..self.dim {
            b.lo[d] = self.first[d] as f64 * self.h;
            b.hi[d] = (self.first[d] + self.shape[d] as i64 - 1) as f64 * self.h;
        }
        b
    }

    /// Whether the closed ball `I(x, r)` lies within the box.
    pub fn contains_ball(&self, x: &Point, r: f64) -> bool {
        let b = self.bounds();
        (0..self.dim).all(|d| x[d] - r >= b.lo[d] - 1e-12 && x[d] + r <= b.hi[d] + 1e-12)
    }

    /// Indices of all nodes in the closed ball `I(x, r)` clipped to the box.
    pub fn nodes_in_ball(&self, x: &Point, r: f64) -> Vec<usize> {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for d in 0..self.dim {
            let a = math::floor((x[d] - r) / self.h) as i64 - self.first[d];
            let b = math::ceil((x[d] + r) / self.h) as i64 - self.first[d];
            lo[d] = a.clamp(0, self.shape[d] as i64 - 1) as usize;
            hi[d] = b.clamp(0, self.shape[d] as i64 - 1) as usize;
        }
        let r2 = r * r * (1.0 + 1e-12) + 1e-24;
        let mut out = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let idx = self.index([i, j, k]);
                    let p = self.point(idx);
                    let rel = math::sub(&p, x);
                    if math::dot(&rel, &rel) <= r2 {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// Linear offset of a displacement in `{-1, 0, 1}^N`.
    pub fn offset(&self, disp: [i64; 3]) -> isize {
        let s = self.strides();
        (disp[0] * s[0] as i64 + disp[1] * s[1] as i64 + disp[2] * s[2] as i64) as isize
    }

    /// Lattice displacements of the `3^N - 1` Chebyshev neighbours.
    pub fn neighbour_displacements(&self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        let range = |d: usize| if d < self.dim { -1..=1 } else { 0..=0 };
        for dz in range(2) {
            for dy in range(1) {
                for dx in range(0) {
                    if (dx, dy, dz) != (0, 0, 0) {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }

    fn on_edge(&self, idx: usize) -> bool {
        let ijk = self.ijk(idx);
        (0..self.dim).any(|d| ijk[d] == 0 || ijk[d] + 1 == self.shape[d])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    /// Node of the open set Ω.
    Interior,
    /// Node of the complement sharing a lattice cell with an interior node.
    Boundary,
    Exterior,
}

/// A shape sampled on a lattice.
#[derive(Clone, Debug)]
pub struct GridDomain {
    pub shape: ShapeSpec,
    pub lattice: Lattice,
    pub labels: Vec<NodeLabel>,
    /// Non-fatal diagnostics recorded while building.
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridError {
    Shape(ShapeError),
    BadSpacing(f64),
    Unbounded,
    EmptyInterior,
    TooLarge(usize),
}

impl core::fmt::Display for GridError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GridError::Shape(e) => write!(f, "{e}"),
            GridError::BadSpacing(h) => write!(f, "grid spacing must be positive, got {h}"),
            GridError::Unbounded => write!(f, "shape is unbounded"),
            GridError::EmptyInterior => write!(f, "empty interior"),
            GridError::TooLarge(n) => write!(f, "grid would have {n} nodes"),
        }
    }
}

impl From<ShapeError> for GridError {
    fn from(e: ShapeError) -> Self {
        GridError::Shape(e)
    }
}

const MAX_NODES: usize = 50_000_000;

/// Samples `shape` on the lattice `h·Z^N`, padded by one node around the
/// shape's bounding box.
pub fn build_grid(shape: &ShapeSpec, h: f64) -> Result<GridDomain, GridError> {
    shape.validate()?;
    let b = shape.bounds();
    if !b.is_bounded(shape.dim) {
        return Err(GridError::Unbounded);
    }
    if b.is_empty(shape.dim) {
        return Err(GridError::EmptyInterior);
    }
    build_grid_in(shape, h, &b)
}

/// Samples `shape` on the lattice nodes covering `bounds` (plus one node of
/// padding). Nodes on the edge of the box are never interior.
pub fn build_grid_in(shape: &ShapeSpec, h: f64, bounds: &Bounds) -> Result<GridDomain, GridError> {
    shape.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(GridError::BadSpacing(h));
    }
    let dim = shape.dim;
    let mut first = [0i64; 3];
    let mut dims = [1usize; 3];
    for d in 0..dim {
        if !(bounds.lo[d].is_finite() && bounds.hi[d].is_finite()) {
            return Err(GridError::Unbounded);
        }
        let lo = math::floor(bounds.lo[d] / h - 1e-9) as i64 - 1;
        let hi = math::ceil(bounds.hi[d] / h + 1e-9) as i64 + 1;
        first[d] = lo;
        dims[d] = (hi - lo + 1) as usize;
    }
    let lattice = Lattice {
        dim,
        h,
        first,
        shape: dims,
    };
    if lattice.len() > MAX_NODES {
        return Err(GridError::TooLarge(lattice.len()));
    }

    let mut warnings = Vec::new();
    let feature = shape.min_feature();
    if h > feature {
        warnings.push(format!(
            "spacing {h} exceeds smallest shape feature {feature}"
        ));
    }

    let layer = 0.5 * h;
    let mut labels = vec![NodeLabel::Exterior; lattice.len()];
    let mut clipped = 0usize;
    for (idx, label) in labels.iter_mut().enumerate() {
        if shape.contains(&lattice.point(idx), layer) {
            if lattice.on_edge(idx) {
                clipped += 1;
            } else {
                *label = NodeLabel::Interior;
            }
        }
    }
    if clipped > 0 {
        warnings.push(format!(
            "{clipped} nodes of the shape fall on the grid edge and were labelled boundary"
        ));
    }
    if !labels.contains(&NodeLabel::Interior) {
        return Err(GridError::EmptyInterior);
    }

    let disps: Vec<isize> = lattice
        .neighbour_displacements()
        .into_iter()
        .map(|d| lattice.offset(d))
        .collect();
    let mut out = labels.clone();
    for idx in 0..labels.len() {
        if labels[idx] != NodeLabel::Interior {
            continue;
        }
        for &off in &disps {
            let n = (idx as isize + off) as usize;
            if labels[n] != NodeLabel::Interior {
                out[n] = NodeLabel::Boundary;
            }
        }
    }

    Ok(GridDomain {
        shape: shape.clone(),
        lattice,
        labels: out,
        warnings,
    })
}

impl GridDomain {
    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn point(&self, idx: usize) -> Point {
        self.lattice.point(idx)
    }

    pub fn label(&self, idx: usize) -> NodeLabel {
        self.labels[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.labels[idx] == NodeLabel::Interior
    }

    pub fn count(&self, label: NodeLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == NodeLabel::Interior)
            .map(|(i, _)| i)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == NodeLabel::Boundary)
            .map(|(i, _)| i)
    }

    /// Node at position `x`, which must coincide with a lattice node.
    pub fn node_at(&self, x: &Point) -> Option<usize> {
        if !self.lattice.is_node(x) {
            return None;
        }
        self.lattice.nearest(x)
    }
}

#[cfg(test)]
mod tests {
    use super::super::shape::Shape;
    use super::*;

    #[test]
    fn unit_box_quarter_spacing_counts() {
        let s = ShapeSpec::new(
            2,
            Shape::Box {
                min: vec![0.0, 0.0],
                max: vec![1.0, 1.0],
            },
        )
        .unwrap();
        let g = build_grid(&s, 0.25).unwrap();
        assert_eq!(g.count(NodeLabel::Interior), 9);
        assert_eq!(g.count(NodeLabel::Boundary), 16);
    }

    #[test]
    fn empty_intersection_is_rejected() {
        let s = ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                    Shape::Ball {
                        center: vec![5.0, 0.0],
                        radius: 1.0,
                    },
                ],
            },
        )
        .unwrap();
        let err = build_grid(&s, 0.1).unwrap_err();
        assert_eq!(format!("{err}"), "empty interior");
    }

    #[test]
    fn coarse_spacing_records_a_warning() {
        let s = ShapeSpec::ball(2, &[0.0, 0.0], 0.2);
        let g = build_grid(&s, 0.5).unwrap_or_else(|_| build_grid(&s, 0.15).unwrap());
        assert!(!g.warnings.is_empty());
    }

    #[test]
    fn unbounded_shape_is_rejected() {
        let s = ShapeSpec::new(
            2,
            Shape::Halfspace {
                normal: vec![1.0, 0.0],
                offset: 0.0,
            },
        )
        .unwrap();
        assert_eq!(build_grid(&s, 0.1).unwrap_err(), GridError::Unbounded);
    }

    #[test]
    fn lattice_round_trips_indices() {
        let l = Lattice {
            dim: 3,
            h: 0.5,
            first: [-2, -1, 0],
            shape: [5, 4, 3],
        };
        for idx in 0..l.len() {
            assert_eq!(l.index(l.ijk(idx)), idx);
            assert_eq!(l.nearest(&l.point(idx)), Some(idx));
        }
    }
}
