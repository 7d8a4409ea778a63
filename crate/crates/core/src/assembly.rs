//! Assembly of the discrete saddle-point system.
//!
//! Unknowns are ordered `(φ, u, ζ)` with `φ ∈ V_h` (x-components first,
//! then y-components), `u ∈ W_h` (hats, then bubbles) and `ζ ∈ [M_h]²`
//! (same component split as `φ`). The assembled matrix is
//!
//! ```text
//! ⎡ A_φφ   A_φu    D      ⎤
//! ⎢ A_φuᵀ  A_uu   −G      ⎥
//! ⎣ Dᵀ    −Gᵀ    −c_t M_ζ ⎦
//! ```
//!
//! with `A_φφ = ∫𝒞ε(φ):ε(ψ) + λ∫φ·ψ`, `A_φu = −λ∫∇u·ψ`, `A_uu = λ∫∇u·∇v`,
//! `D = ∫ψ·η`, `G = ∫∇v·η`, `M_ζ = ∫ζ·η` and `c_t = t²/(λ(1 − t²))`. It is
//! symmetric, and its quadratic form is `a(·;·) + 2b(·;ζ) − c_t(ζ, ζ)`.

use std::sync::Arc;

use crate::element::{quad_points, ElementGeometry, QuadPoint};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use crate::spaces::{DofLayout, MultiplierBasis, MultiplierKind};

/// Isotropic plate material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
    pub shear_correction: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { young: 1.0, poisson: 0.3, shear_correction: 5.0 / 6.0 }
    }
}

impl Material {
    pub fn new(young: f64, poisson: f64, shear_correction: f64) -> Result<Self> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(Error::Config(format!("Young's modulus must be positive, got {young}")));
        }
        if !(poisson > 0.0 && poisson < 0.5) {
            return Err(Error::Config(format!("Poisson ratio must lie in (0, 0.5), got {poisson}")));
        }
        if !(shear_correction > 0.0 && shear_correction.is_finite()) {
            return Err(Error::Config(format!("shear correction must be positive, got {shear_correction}")));
        }
        Ok(Material { young, poisson, shear_correction })
    }

    /// Shear modulus times the shear correction factor, `E·k / (2(1 + ν))`.
    pub fn lambda(&self) -> f64 {
        self.young * self.shear_correction / (2.0 * (1.0 + self.poisson))
    }

    /// `E / (12(1 − ν²))`.
    pub fn bending_rigidity(&self) -> f64 {
        self.young / (12.0 * (1.0 - self.poisson * self.poisson))
    }

    /// `t² / (λ(1 − t²))`.
    pub fn c_t(&self, t: f64) -> f64 {
        t * t / (self.lambda() * (1.0 - t * t))
    }

    /// `𝒞ε : ε'` for symmetric tensors stored as `[ε₁₁, ε₂₂, ε₁₂]`.
    pub fn bending_product(&self, e: &[f64; 3], f: &[f64; 3]) -> f64 {
        let nu = self.poisson;
        let contraction = e[0] * f[0] + e[1] * f[1] + 2.0 * e[2] * f[2];
        self.bending_rigidity() * ((1.0 - nu) * contraction + nu * (e[0] + e[1]) * (f[0] + f[1]))
    }
}

pub fn check_thickness(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThickness(t))
    }
}

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Transverse load `g` (tested against `W_h`) and an optional rotation
/// forcing `f` (tested against `V_h`).
#[derive(Clone)]
pub struct Loads {
    pub g: ScalarFn,
    pub f: Option<VectorFn>,
}

impl Loads {
    pub fn new(g: ScalarFn, f: Option<VectorFn>) -> Self {
        Loads { g, f }
    }

    pub fn uniform(g: f64) -> Self {
        Loads { g: Arc::new(move |_| g), f: None }
    }

    pub fn zero() -> Self {
        Loads::uniform(0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let g = self.g.clone();
        let f = self.f.clone();
        Loads {
            g: Arc::new(move |p| s * g(p)),
            f: f.map(|f| -> VectorFn {
                Arc::new(move |p| {
                    let v = f(p);
                    [s * v[0], s * v[1]]
                })
            }),
        }
    }
}

impl std::fmt::Debug for Loads {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Loads").field("rotation_forcing", &self.f.is_some()).finish_non_exhaustive()
    }
}

/// Blocks and right-hand side of the discrete saddle-point problem.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub layout: DofLayout,
    pub kind: MultiplierKind,
    pub material: Material,
    pub t: f64,
    pub c_t: f64,
    pub a_phiphi: SparseMatrix,
    pub a_phiu: SparseMatrix,
    pub a_uu: SparseMatrix,
    pub d: SparseMatrix,
    pub g: SparseMatrix,
    pub m_zeta: SparseMatrix,
    pub rhs_phi: Vec<f64>,
    pub rhs_u: Vec<f64>,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.layout.total_dofs()
    }

    pub fn full_matrix(&self) -> SparseMatrix {
        let [o_phi, o_u, o_z] = self.layout.offsets();
        let n = self.dim();
        let mut b = TripletBuilder::new(n, n);
        b.add_block(o_phi, o_phi, &self.a_phiphi, 1.0);
        b.add_block(o_phi, o_u, &self.a_phiu, 1.0);
        b.add_block(o_u, o_phi, &self.a_phiu.transpose(), 1.0);
        b.add_block(o_u, o_u, &self.a_uu, 1.0);
        b.add_block(o_phi, o_z, &self.d, 1.0);
        b.add_block(o_z, o_phi, &self.d.transpose(), 1.0);
        b.add_block(o_u, o_z, &self.g, -1.0);
        b.add_block(o_z, o_u, &self.g.transpose(), -1.0);
        b.add_block(o_z, o_z, &self.m_zeta, -self.c_t);
        b.build()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.dim());
        r.extend_from_slice(&self.rhs_phi);
        r.extend_from_slice(&self.rhs_u);
        r.resize(self.dim(), 0.0);
        r
    }
}

/// A `W_h` function restricted to one element: global dof, value and
/// gradient at a quadrature point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalW {
    pub dof: usize,
    pub value: f64,
    pub grad: [f64; 2],
}

pub(crate) fn local_w(layout: &DofLayout, tri: &[usize; 3], t: usize, geo: &ElementGeometry, qp: &QuadPoint) -> Vec<LocalW> {
    let mut out = Vec::with_capacity(4);
    for k in 0..3 {
        if let Some(dof) = layout.s_dof(tri[k]) {
            out.push(LocalW { dof, value: qp.bary[k], grad: geo.grad_bary[k] });
        }
    }
    out.push(LocalW { dof: layout.bubble_dof(t), value: qp.bubble, grad: qp.bubble_grad });
    out
}

/// Symmetric gradient of `λ·e_comp` as `[ε₁₁, ε₂₂, ε₁₂]`.
fn strain(grad: [f64; 2], comp: usize) -> [f64; 3] {
    if comp == 0 {
        [grad[0], 0.0, 0.5 * grad[1]]
    } else {
        [0.0, grad[1], 0.5 * grad[0]]
    }
}

/// Assembles every block and the load vector. Integrals use the
/// degree-five rule, exact for all bilinear forms involved.
pub fn assemble(
    mesh: &Mesh,
    layout: &DofLayout,
    multiplier: &MultiplierBasis,
    material: &Material,
    t: f64,
    loads: &Loads,
) -> Result<SaddleSystem> {
    check_thickness(t)?;
    let rule = QuadratureRule::degree5();
    let m = layout.m;
    let nw = layout.dim_w();
    let lam = material.lambda();

    let mut a_pp = TripletBuilder::new(2 * m, 2 * m);
    let mut a_pu = TripletBuilder::new(2 * m, nw);
    let mut a_uu = TripletBuilder::new(nw, nw);
    let mut d = TripletBuilder::new(2 * m, 2 * m);
    let mut g = TripletBuilder::new(nw, 2 * m);
    let mut m_scalar = TripletBuilder::new(m, m);
    let mut rhs_phi = vec![0.0; 2 * m];
    let mut rhs_u = vec![0.0; nw];

    for (t_idx, tri) in mesh.triangles().iter().enumerate() {
        let geo = ElementGeometry::new(mesh, t_idx);
        let s: [Option<usize>; 3] = [0, 1, 2].map(|k| layout.s_dof(tri[k]));
        let mult = multiplier.local_functions(tri);

        // Bending part: constant strains.
        for a in 0..3 {
            let Some(sa) = s[a] else { continue };
            for b in 0..3 {
                let Some(sb) = s[b] else { continue };
                for ca in 0..2 {
                    let ea = strain(geo.grad_bary[a], ca);
                    for cb in 0..2 {
                        let eb = strain(geo.grad_bary[b], cb);
                        let v = geo.area * material.bending_product(&ea, &eb);
                        if v != 0.0 {
                            a_pp.add(ca * m + sa, cb * m + sb, v);
                        }
                    }
                }
            }
        }

        for qp in quad_points(&geo, &rule) {
            let w = qp.weight;
            let hats = qp.bary;
            let ws = local_w(layout, tri, t_idx, &geo, &qp);
            let mu: Vec<(usize, f64)> = mult.iter().map(|(r, c)| (*r, multiplier.local_value(c, &hats))).collect();

            for a in 0..3 {
                let Some(sa) = s[a] else { continue };
                for b in 0..3 {
                    let Some(sb) = s[b] else { continue };
                    let v = w * lam * hats[a] * hats[b];
                    a_pp.add(sa, sb, v);
                    a_pp.add(m + sa, m + sb, v);
                }
                for lw in &ws {
                    for c in 0..2 {
                        a_pu.add(c * m + sa, lw.dof, -w * lam * lw.grad[c] * hats[a]);
                    }
                }
                for &(r, mu_r) in &mu {
                    let v = w * hats[a] * mu_r;
                    d.add(sa, r, v);
                    d.add(m + sa, m + r, v);
                }
                if let Some(f) = &loads.f {
                    let fv = f(qp.x);
                    rhs_phi[sa] += w * fv[0] * hats[a];
                    rhs_phi[m + sa] += w * fv[1] * hats[a];
                }
            }

            let gv = (loads.g)(qp.x);
            for lw in &ws {
                for lw2 in &ws {
                    a_uu.add(lw.dof, lw2.dof, w * lam * (lw.grad[0] * lw2.grad[0] + lw.grad[1] * lw2.grad[1]));
                }
                for &(r, mu_r) in &mu {
                    g.add(lw.dof, r, w * lw.grad[0] * mu_r);
                    g.add(lw.dof, m + r, w * lw.grad[1] * mu_r);
                }
                rhs_u[lw.dof] += w * gv * lw.value;
            }

            for &(r, mu_r) in &mu {
                for &(r2, mu_r2) in &mu {
                    m_scalar.add(r, r2, w * mu_r * mu_r2);
                }
            }
        }
    }

    let m_scalar = m_scalar.build();
    let mut m_zeta = TripletBuilder::new(2 * m, 2 * m);
    m_zeta.add_block(0, 0, &m_scalar, 1.0);
    m_zeta.add_block(m, m, &m_scalar, 1.0);

    Ok(SaddleSystem {
        layout: layout.clone(),
        kind: multiplier.kind,
        material: *material,
        t,
        c_t: material.c_t(t),
        a_phiphi: a_pp.build(),
        a_phiu: a_pu.build(),
        a_uu: a_uu.build(),
        d: d.build(),
        g: g.build(),
        m_zeta: m_zeta.build(),
        rhs_phi,
        rhs_u,
    })
}

/// Scalar multiplier mass matrix `∫ μᵢ μⱼ`.
pub fn multiplier_mass(mesh: &Mesh, basis: &MultiplierBasis, rule: &QuadratureRule) -> SparseMatrix {
    let mut b = TripletBuilder::new(basis.dim(), basis.dim());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        let mult = basis.local_functions(tri);
        for (bary, w) in rule.iter() {
            let vals: Vec<f64> = mult.iter().map(|(_, c)| basis.local_value(c, bary)).collect();
            for (i, (ri, _)) in mult.iter().enumerate() {
                for (j, (rj, _)) in mult.iter().enumerate() {
                    b.add(*ri, *rj, w * area * vals[i] * vals[j]);
                }
            }
        }
    }
    b.build()
}

/// `∫ f μᵢ` for every multiplier basis function.
pub fn scalar_load(mesh: &Mesh, basis: &MultiplierBasis, rule: &QuadratureRule, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = mesh.corners(t);
        let area = mesh.area(t);
        let mult = basis.local_functions(tri);
        for (bary, w) in rule.iter() {
            let fx = f(crate::quadrature::to_physical(&corners, bary));
            for (r, c) in &mult {
                out[*r] += w * area * fx * basis.local_value(c, bary);
            }
        }
    }
    out
}

/// `S_h` mass matrix `∫ φᵢ φⱼ`.
pub fn hat_mass(mesh: &Mesh, layout: &DofLayout) -> SparseMatrix {
    let mut b = TripletBuilder::new(layout.m, layout.m);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        for a in 0..3 {
            let Some(sa) = layout.s_dof(tri[a]) else { continue };
            for c in 0..3 {
                let Some(sc) = layout.s_dof(tri[c]) else { continue };
                b.add(sa, sc, area * if a == c { 1.0 / 6.0 } else { 1.0 / 12.0 });
            }
        }
    }
    b.build()
}

/// Gram matrix `∫ μᵢ φⱼ` (multiplier rows, `S_h` columns).
pub fn multiplier_hat_gram(mesh: &Mesh, layout: &DofLayout, basis: &MultiplierBasis, rule: &QuadratureRule) -> SparseMatrix {
    let mut b = TripletBuilder::new(basis.dim(), layout.m);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        let mult = basis.local_functions(tri);
        for (bary, w) in rule.iter() {
            for (r, c) in &mult {
                let mu = basis.local_value(c, bary);
                for a in 0..3 {
                    if let Some(sa) = layout.s_dof(tri[a]) {
                        b.add(*r, sa, w * area * mu * bary[a]);
                    }
                }
            }
        }
    }
    b.build()
}

/// `∫ f φⱼ` for every `S_h` basis function.
pub fn hat_load(mesh: &Mesh, layout: &DofLayout, rule: &QuadratureRule, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; layout.m];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = mesh.corners(t);
        let area = mesh.area(t);
        for (bary, w) in rule.iter() {
            let fx = f(crate::quadrature::to_physical(&corners, bary));
            for a in 0..3 {
                if let Some(sa) = layout.s_dof(tri[a]) {
                    out[sa] += w * area * fx * bary[a];
                }
            }
        }
    }
    out
}
