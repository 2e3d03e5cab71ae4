use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grid::{GridDomain, NodeLabel};
use crate::math;
use crate::Point;

/// The complement of Ω inside a closed ball about a boundary node,
/// `E_ρ = ∁Ω ∩ I(y, ρ)`, as a set of lattice nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementCap {
    pub center: usize,
    pub center_point: Point,
    pub radius: f64,
    pub dim: usize,
    pub h: f64,
    pub nodes: Vec<usize>,
}

impl ComplementCap {
    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// `|E_ρ|` as node count times `h^N`.
    pub fn volume(&self) -> f64 {
        self.nodes.len() as f64 * math::powf(self.h, self.dim as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CapError {
    NotBoundary(usize),
    BadRadius(f64),
    OutsideGrid { radius: f64 },
}

impl core::fmt::Display for CapError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CapError::NotBoundary(i) => write!(f, "node {i} is not a boundary node"),
            CapError::BadRadius(r) => write!(f, "cap radius must be positive, got {r}"),
            CapError::OutsideGrid { radius } => {
                write!(f, "cap radius {radius} exceeds the grid bounds")
            }
        }
    }
}

pub fn complement_cap(
    domain: &GridDomain,
    y: usize,
    radius: f64,
) -> Result<ComplementCap, CapError> {
    if domain.label(y) != NodeLabel::Boundary {
        return Err(CapError::NotBoundary(y));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CapError::BadRadius(radius));
    }
    let yp = domain.point(y);
    if !domain.lattice.contains_ball(&yp, radius) {
        return Err(CapError::OutsideGrid { radius });
    }
    let nodes = domain
        .lattice
        .nodes_in_ball(&yp, radius)
        .into_iter()
        .filter(|&i| domain.label(i) != NodeLabel::Interior)
        .collect();
    Ok(ComplementCap {
        center: y,
        center_point: yp,
        radius,
        dim: domain.dim(),
        h: domain.h(),
        nodes,
    })
}

/// `σ(ρ) = |E_ρ| / |I(y, ρ)|`, clamped to `[0, 1]`.
pub fn density(cap: &ComplementCap) -> f64 {
    let ball = math::unit_ball_volume(cap.dim) * math::powf(cap.radius, cap.dim as f64);
    (cap.volume() / ball).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::super::grid::build_grid;
    use super::super::shape::{Shape, ShapeSpec};
    use super::*;
    use alloc::boxed::Box;
    use alloc::vec;

    fn half_box() -> ShapeSpec {
        ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Halfspace {
                        normal: vec![1.0, 0.0],
                        offset: 0.0,
                    },
                    Shape::Box {
                        min: vec![-1.0, -1.0],
                        max: vec![1.0, 1.0],
                    },
                ],
            },
        )
        .unwrap()
    }

    #[test]
    fn halfspace_density_tends_to_one_half() {
        let mut last = 1.0;
        for h in [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0] {
            let g = build_grid(&half_box(), h).unwrap();
            let y = g.node_at(&[0.0, 0.0, 0.0]).unwrap();
            let cap = complement_cap(&g, y, 0.5).unwrap();
            let err = (density(&cap) - 0.5).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn caps_are_nested() {
        let g = build_grid(&half_box(), 1.0 / 32.0).unwrap();
        let y = g.node_at(&[0.0, 0.25, 0.0]).unwrap();
        let big = complement_cap(&g, y, 0.5).unwrap();
        let small = complement_cap(&g, y, 0.2).unwrap();
        assert!(small.nodes.iter().all(|n| big.nodes.contains(n)));
        assert!(small.volume() <= big.volume());
    }

    #[test]
    fn quarter_plane_wedge_density() {
        // Omega is three quarters of a square; the complement near the
        // reentrant corner is a 90 degree wedge.
        let s = ShapeSpec::new(
            2,
            Shape::Intersection {
                items: vec![
                    Shape::Box {
                        min: vec![-1.0, -1.0],
                        max: vec![1.0, 1.0],
                    },
                    Shape::Complement {
                        item: Box::new(Shape::Box {
                            min: vec![0.0, 0.0],
                            max: vec![2.0, 2.0],
                        }),
                    },
                ],
            },
        )
        .unwrap();
        let g = build_grid(&s, 1.0 / 256.0).unwrap();
        let y = g.node_at(&[0.0, 0.0, 0.0]).unwrap();
        let cap = complement_cap(&g, y, 0.5).unwrap();
        assert!((density(&cap) - 0.25).abs() < 0.01);
    }

    #[test]
    fn slit_cap_is_one_layer() {
        let s = ShapeSpec::new(
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
        .unwrap();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let g = build_grid(&s, h).unwrap();
            let y = g.node_at(&[0.0, 0.0, 0.0]).unwrap();
            let rho = 0.25;
            let cap = complement_cap(&g, y, rho).unwrap();
            // nodes (0,0) .. (rho,0) on the slit
            assert_eq!(cap.count(), (rho / h) as usize + 1);
            assert!((cap.volume() - h * h * (rho / h + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let g = build_grid(&half_box(), 0.125).unwrap();
        let interior = g.node_at(&[-0.5, 0.0, 0.0]).unwrap();
        assert_eq!(
            complement_cap(&g, interior, 0.1).unwrap_err(),
            CapError::NotBoundary(interior)
        );
        let y = g.node_at(&[0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            complement_cap(&g, y, 5.0),
            Err(CapError::OutsideGrid { .. })
        ));
    }
}
