//! Pointwise evaluation of discrete fields and error norms.

use crate::element::{quad_points, ElementGeometry};
use crate::mesh::{Mesh, Point, PointLocator};
use crate::mms::ExactFields;
use crate::quadrature::QuadratureRule;
use crate::solver::PlateSolution;
use crate::spaces::{DofLayout, MultiplierBasis};

/// Values of `(φ, ∇φ, u, ∇u, ζ)` at one point; `grad_phi[i][j] = ∂ⱼ φᵢ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValues {
    pub phi: [f64; 2],
    pub grad_phi: [[f64; 2]; 2],
    pub u: f64,
    pub grad_u: [f64; 2],
    pub zeta: [f64; 2],
}

/// Anything the discrete solution can be compared against.
pub trait ReferenceFields: Sync {
    fn at(&self, p: Point) -> FieldValues;
}

impl ReferenceFields for ExactFields {
    fn at(&self, p: Point) -> FieldValues {
        FieldValues {
            phi: self.phi(p),
            grad_phi: self.grad_phi(p),
            u: self.u(p),
            grad_u: self.grad_u(p),
            zeta: self.zeta(p),
        }
    }
}

/// A solved triple bound to its discretization.
pub struct DiscreteFields<'a> {
    mesh: &'a Mesh,
    layout: &'a DofLayout,
    basis: &'a MultiplierBasis,
    solution: &'a PlateSolution,
    locator: PointLocator<'a>,
}

impl<'a> DiscreteFields<'a> {
    pub fn new(mesh: &'a Mesh, layout: &'a DofLayout, basis: &'a MultiplierBasis, solution: &'a PlateSolution) -> Self {
        DiscreteFields { mesh, layout, basis, solution, locator: PointLocator::new(mesh) }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    /// Values on triangle `t` at barycentric point `bary`.
    pub fn eval(&self, t: usize, bary: &[f64; 3]) -> FieldValues {
        let geo = ElementGeometry::new(self.mesh, t);
        self.eval_with(t, &geo, bary)
    }

    fn eval_with(&self, t: usize, geo: &ElementGeometry, bary: &[f64; 3]) -> FieldValues {
        let tri = &self.mesh.triangles()[t];
        let m = self.layout.m;
        let sol = self.solution;
        let mut out = FieldValues::default();
        for k in 0..3 {
            let Some(s) = self.layout.s_dof(tri[k]) else { continue };
            let g = geo.grad_bary[k];
            for c in 0..2 {
                let a = sol.phi[c * m + s];
                out.phi[c] += a * bary[k];
                out.grad_phi[c][0] += a * g[0];
                out.grad_phi[c][1] += a * g[1];
            }
            let a = sol.u[s];
            out.u += a * bary[k];
            out.grad_u[0] += a * g[0];
            out.grad_u[1] += a * g[1];
        }
        let b = sol.u[self.layout.bubble_dof(t)];
        let bg = geo.bubble_grad(bary);
        out.u += b * crate::reference::bubble_from_bary(bary);
        out.grad_u[0] += b * bg[0];
        out.grad_u[1] += b * bg[1];
        out.zeta = [
            self.basis.eval_combination(tri, bary, &sol.zeta[..m]),
            self.basis.eval_combination(tri, bary, &sol.zeta[m..]),
        ];
        out
    }
}

impl ReferenceFields for DiscreteFields<'_> {
    /// # Panics
    /// If `p` lies outside the mesh.
    fn at(&self, p: Point) -> FieldValues {
        let (t, bary) = self.locator.locate(p).unwrap_or_else(|| panic!("point {p:?} outside the mesh"));
        self.eval(t, &bary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub phi_h1: f64,
    pub u_h1: f64,
    pub zeta_l2: f64,
    /// `t·‖ζ − ζ_h‖_{L²}`.
    pub zeta_tl2: f64,
}

impl ErrorNorms {
    pub const ZERO: ErrorNorms = ErrorNorms { phi_h1: 0.0, u_h1: 0.0, zeta_l2: 0.0, zeta_tl2: 0.0 };
}

/// Full `H¹` norms of the rotation and deflection errors and the `L²` norm
/// of the multiplier error, integrated elementwise with the degree-five
/// rule on the mesh of `fields`.
pub fn error_norms_against(fields: &DiscreteFields, reference: &dyn ReferenceFields, t: f64) -> ErrorNorms {
    let rule = QuadratureRule::degree5();
    let (mut phi2, mut u2, mut z2) = (0.0, 0.0, 0.0);
    for e in 0..fields.mesh.num_triangles() {
        let geo = ElementGeometry::new(fields.mesh, e);
        for qp in quad_points(&geo, &rule) {
            let h = fields.eval_with(e, &geo, &qp.bary);
            let r = reference.at(qp.x);
            let w = qp.weight;
            for c in 0..2 {
                phi2 += w * sq(r.phi[c] - h.phi[c]);
                phi2 += w * (sq(r.grad_phi[c][0] - h.grad_phi[c][0]) + sq(r.grad_phi[c][1] - h.grad_phi[c][1]));
                z2 += w * sq(r.zeta[c] - h.zeta[c]);
            }
            u2 += w * (sq(r.u - h.u) + sq(r.grad_u[0] - h.grad_u[0]) + sq(r.grad_u[1] - h.grad_u[1]));
        }
    }
    let zeta_l2 = z2.sqrt();
    ErrorNorms { phi_h1: phi2.sqrt(), u_h1: u2.sqrt(), zeta_l2, zeta_tl2: t * zeta_l2 }
}

/// Errors of a solution against manufactured fields.
pub fn error_norms(
    solution: &PlateSolution,
    exact: &ExactFields,
    mesh: &Mesh,
    layout: &DofLayout,
    basis: &MultiplierBasis,
) -> ErrorNorms {
    let fields = DiscreteFields::new(mesh, layout, basis, solution);
    error_norms_against(&fields, exact, exact.t())
}

/// Errors of a coarse solution measured against a reference solution on a
/// finer mesh. Integration runs over the fine mesh, with the coarse fields
/// located pointwise, so the meshes need not be nested.
pub fn reference_error_norms(coarse: &DiscreteFields, reference: &DiscreteFields, t: f64) -> ErrorNorms {
    let rule = QuadratureRule::degree5();
    let (mut phi2, mut u2, mut z2) = (0.0, 0.0, 0.0);
    for e in 0..reference.mesh.num_triangles() {
        let geo = ElementGeometry::new(reference.mesh, e);
        for qp in quad_points(&geo, &rule) {
            let r = reference.eval_with(e, &geo, &qp.bary);
            let h = coarse.at(qp.x);
            let w = qp.weight;
            for c in 0..2 {
                phi2 += w * sq(r.phi[c] - h.phi[c]);
                phi2 += w * (sq(r.grad_phi[c][0] - h.grad_phi[c][0]) + sq(r.grad_phi[c][1] - h.grad_phi[c][1]));
                z2 += w * sq(r.zeta[c] - h.zeta[c]);
            }
            u2 += w * (sq(r.u - h.u) + sq(r.grad_u[0] - h.grad_u[0]) + sq(r.grad_u[1] - h.grad_u[1]));
        }
    }
    let zeta_l2 = z2.sqrt();
    ErrorNorms { phi_h1: phi2.sqrt(), u_h1: u2.sqrt(), zeta_l2, zeta_tl2: t * zeta_l2 }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}
