//! Manufactured solutions.
//!
//! Given a deflection `u*` (with `u* = ∇u* = 0` on the boundary) and a
//! shear field `ρ*` (zero on the boundary), the exact solution is
//!
//! ```text
//! φ* = ∇u* + c_t ρ*,   ζ* = ρ*,
//! f* = −div 𝒞ε(φ*) + ρ*/(1 − t²),   g* = div ρ*/(1 − t²),
//! ```
//!
//! which satisfies the constraint equation exactly and stays bounded as
//! `t → 0`. Setting `f* = 0` needs `ρ*` tied to `u*`; the extra rotation
//! forcing avoids that.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{check_thickness, Loads, Material};
use crate::error::Result;
use crate::mesh::Point;

/// Analytic deflection and shear fields with the derivatives the forcing
/// and the error norms need.
pub trait ManufacturedSolution: Send + Sync {
    fn u(&self, p: Point) -> f64;
    fn grad_u(&self, p: Point) -> [f64; 2];
    /// `[u_xx, u_xy, u_yy]`.
    fn hess_u(&self, p: Point) -> [f64; 3];
    /// `[u_xxx, u_xxy, u_xyy, u_yyy]`.
    fn third_u(&self, p: Point) -> [f64; 4];
    fn rho(&self, p: Point) -> [f64; 2];
    /// `jac[i][j] = ∂ⱼ ρᵢ`.
    fn jac_rho(&self, p: Point) -> [[f64; 2]; 2];
    /// Per component, `[∂xx, ∂xy, ∂yy]`.
    fn hess_rho(&self, p: Point) -> [[f64; 3]; 2];
}

/// `u* = (x(1−x)y(1−y))²`, `ρ* = (sin πx sin πy, 0)` on the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultCase;

fn bump(x: f64) -> [f64; 4] {
    // P = p², p = x(1 − x): returns [P, P', P'', P''']
    let p = x * (1.0 - x);
    let dp = 1.0 - 2.0 * x;
    [p * p, 2.0 * p * dp, 2.0 * dp * dp - 4.0 * p, -12.0 * dp]
}

impl ManufacturedSolution for DefaultCase {
    fn u(&self, p: Point) -> f64 {
        bump(p[0])[0] * bump(p[1])[0]
    }

    fn grad_u(&self, p: Point) -> [f64; 2] {
        let (bx, by) = (bump(p[0]), bump(p[1]));
        [bx[1] * by[0], bx[0] * by[1]]
    }

    fn hess_u(&self, p: Point) -> [f64; 3] {
        let (bx, by) = (bump(p[0]), bump(p[1]));
        [bx[2] * by[0], bx[1] * by[1], bx[0] * by[2]]
    }

    fn third_u(&self, p: Point) -> [f64; 4] {
        let (bx, by) = (bump(p[0]), bump(p[1]));
        [bx[3] * by[0], bx[2] * by[1], bx[1] * by[2], bx[0] * by[3]]
    }

    fn rho(&self, p: Point) -> [f64; 2] {
        [(PI * p[0]).sin() * (PI * p[1]).sin(), 0.0]
    }

    fn jac_rho(&self, p: Point) -> [[f64; 2]; 2] {
        let (sx, cx) = (PI * p[0]).sin_cos();
        let (sy, cy) = (PI * p[1]).sin_cos();
        [[PI * cx * sy, PI * sx * cy], [0.0, 0.0]]
    }

    fn hess_rho(&self, p: Point) -> [[f64; 3]; 2] {
        let (sx, cx) = (PI * p[0]).sin_cos();
        let (sy, cy) = (PI * p[1]).sin_cos();
        let pi2 = PI * PI;
        [[-pi2 * sx * sy, pi2 * cx * cy, -pi2 * sx * sy], [0.0; 3]]
    }
}

/// Exact `(φ*, u*, ζ*)` and forcing for one `(material, t)` pair.
#[derive(Clone)]
pub struct ExactFields {
    solution: Arc<dyn ManufacturedSolution>,
    material: Material,
    t: f64,
    c_t: f64,
}

impl std::fmt::Debug for ExactFields {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactFields").field("material", &self.material).field("t", &self.t).finish()
    }
}

impl ExactFields {
    pub fn new(solution: Arc<dyn ManufacturedSolution>, material: Material, t: f64) -> Result<Self> {
        check_thickness(t)?;
        Ok(ExactFields { solution, material, t, c_t: material.c_t(t) })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self, p: Point) -> f64 {
        self.solution.u(p)
    }

    pub fn grad_u(&self, p: Point) -> [f64; 2] {
        self.solution.grad_u(p)
    }

    pub fn phi(&self, p: Point) -> [f64; 2] {
        let g = self.solution.grad_u(p);
        let r = self.solution.rho(p);
        [g[0] + self.c_t * r[0], g[1] + self.c_t * r[1]]
    }

    /// `jac[i][j] = ∂ⱼ φᵢ`.
    pub fn grad_phi(&self, p: Point) -> [[f64; 2]; 2] {
        let h = self.solution.hess_u(p);
        let j = self.solution.jac_rho(p);
        let c = self.c_t;
        [[h[0] + c * j[0][0], h[1] + c * j[0][1]], [h[1] + c * j[1][0], h[2] + c * j[1][1]]]
    }

    pub fn zeta(&self, p: Point) -> [f64; 2] {
        self.solution.rho(p)
    }

    /// `−div 𝒞ε(φ*) + ρ*/(1 − t²)`.
    pub fn rotation_forcing(&self, p: Point) -> [f64; 2] {
        let c = self.c_t;
        let d3 = self.solution.third_u(p);
        let hr = self.solution.hess_rho(p);
        // second derivatives of φ* = ∇u* + c ρ*
        let p1_xx = d3[0] + c * hr[0][0];
        let p1_xy = d3[1] + c * hr[0][1];
        let p1_yy = d3[2] + c * hr[0][2];
        let p2_xx = d3[1] + c * hr[1][0];
        let p2_xy = d3[2] + c * hr[1][1];
        let p2_yy = d3[3] + c * hr[1][2];
        let nu = self.material.poisson;
        let db = self.material.bending_rigidity();
        let div1 = db * (p1_xx + nu * p2_xy + 0.5 * (1.0 - nu) * (p1_yy + p2_xy));
        let div2 = db * (0.5 * (1.0 - nu) * (p1_xy + p2_xx) + p2_yy + nu * p1_xy);
        let r = self.solution.rho(p);
        let s = 1.0 / (1.0 - self.t * self.t);
        [-div1 + s * r[0], -div2 + s * r[1]]
    }

    /// `div ρ*/(1 − t²)`.
    pub fn transverse_load(&self, p: Point) -> f64 {
        let j = self.solution.jac_rho(p);
        (j[0][0] + j[1][1]) / (1.0 - self.t * self.t)
    }
}

/// Loads `(g*, f*)` reproducing the manufactured solution, and the exact
/// fields to measure errors against.
pub fn apply_mms_loads(solution: Arc<dyn ManufacturedSolution>, material: &Material, t: f64) -> Result<(Loads, ExactFields)> {
    let exact = ExactFields::new(solution, *material, t)?;
    let (eg, ef) = (exact.clone(), exact.clone());
    let loads = Loads::new(
        Arc::new(move |p| eg.transverse_load(p)),
        Some(Arc::new(move |p| ef.rotation_forcing(p))),
    );
    Ok((loads, exact))
}
