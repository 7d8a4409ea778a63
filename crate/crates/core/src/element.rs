//! Per-element geometry and basis values at quadrature points.

use crate::mesh::{Mesh, Point};
use crate::quadrature::{to_physical, QuadratureRule};
use crate::reference::{bubble_from_bary, BUBBLE_SCALE};

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub corners: [Point; 3],
    pub area: f64,
    /// Physical gradients of the barycentric coordinates (constant).
    pub grad_bary: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let corners = mesh.corners(t);
        let [p0, p1, p2] = corners;
        let area = crate::mesh::signed_area(p0, p1, p2);
        let s = 1.0 / (2.0 * area);
        let grad_bary = [
            [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
            [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
            [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
        ];
        ElementGeometry { corners, area, grad_bary }
    }

    pub fn point(&self, bary: &[f64; 3]) -> Point {
        to_physical(&self.corners, bary)
    }

    pub fn bubble_grad(&self, bary: &[f64; 3]) -> [f64; 2] {
        let [l0, l1, l2] = *bary;
        let g = &self.grad_bary;
        [
            BUBBLE_SCALE * (g[0][0] * l1 * l2 + g[1][0] * l0 * l2 + g[2][0] * l0 * l1),
            BUBBLE_SCALE * (g[0][1] * l1 * l2 + g[1][1] * l0 * l2 + g[2][1] * l0 * l1),
        ]
    }
}

/// Everything needed at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub x: Point,
    /// Quadrature weight times element area.
    pub weight: f64,
    pub bubble: f64,
    pub bubble_grad: [f64; 2],
}

pub fn quad_points(geo: &ElementGeometry, rule: &QuadratureRule) -> Vec<QuadPoint> {
    rule.iter()
        .map(|(bary, w)| QuadPoint {
            bary: *bary,
            x: geo.point(bary),
            weight: w * geo.area,
            bubble: bubble_from_bary(bary),
            bubble_grad: geo.bubble_grad(bary),
        })
        .collect()
}
