//! Symmetric quadrature on triangles in barycentric form.

use crate::mesh::Point;

/// Points in barycentric coordinates with weights summing to one; scale by
/// the element area at use.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// The seven-point rule exact for all polynomials of total degree ≤ 5.
    pub fn degree5() -> Self {
        let sqrt15 = 15f64.sqrt();
        let a1 = (6.0 - sqrt15) / 21.0;
        let a2 = (6.0 + sqrt15) / 21.0;
        let w1 = (155.0 - sqrt15) / 1200.0;
        let w2 = (155.0 + sqrt15) / 1200.0;
        let b1 = 1.0 - 2.0 * a1;
        let b2 = 1.0 - 2.0 * a2;
        let third = 1.0 / 3.0;
        QuadratureRule {
            points: vec![
                [third, third, third],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
        }
    }

    /// Gauss–Legendre points on `[0, 1]` (three points, degree 5), used for
    /// edge traces.
    pub fn gauss_line3() -> [(f64, f64); 3] {
        let r = (0.6f64).sqrt() / 2.0;
        [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// `∫_T f` for a triangle with the given corners.
    pub fn integrate(&self, corners: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let area = crate::mesh::signed_area(corners[0], corners[1], corners[2]);
        area * self.iter().map(|(b, w)| w * f(to_physical(corners, b))).sum::<f64>()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::degree5()
    }
}

#[inline]
pub fn to_physical(corners: &[Point; 3], bary: &[f64; 3]) -> Point {
    [
        bary[0] * corners[0][0] + bary[1] * corners[1][0] + bary[2] * corners[2][0],
        bary[0] * corners[0][1] + bary[1] * corners[1][1] + bary[2] * corners[2][1],
    ]
}
