//! Stability and structure diagnostics: discrete inf-sup constants, the
//! Fortin projector pair, partition of unity, continuity and
//! biorthogonality of the multiplier bases.

use faer::{Mat, Side};

use crate::assembly::{hat_load, hat_mass, multiplier_hat_gram, multiplier_mass, scalar_load};
use crate::element::{quad_points, ElementGeometry};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, LuSolver, SparseMatrix};
use crate::mesh::{barycentric, Mesh, Point};
use crate::quadrature::QuadratureRule;
use crate::reference::BUBBLE_SCALE;
use crate::spaces::{discretize, DofLayout, MultiplierBasis, MultiplierKind, Weighting};

/// `M^{-1/2}` of a symmetric positive definite matrix.
fn inverse_sqrt(m: &SparseMatrix) -> Result<Mat<f64>> {
    let dense = m.to_dense();
    let evd = dense
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SingularMatrix(format!("eigendecomposition failed: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let n = dense.nrows();
    if let Some(k) = (0..n).find(|&k| !(s[k] > 0.0)) {
        return Err(Error::SingularMatrix(format!("mass matrix eigenvalue {} at index {k}", s[k])));
    }
    let scaled = Mat::from_fn(n, n, |i, k| u[(i, k)] / s[k].sqrt());
    Ok(&scaled * u.transpose())
}

/// Discrete inf-sup constant between the multiplier space and `S_h`:
/// the smallest singular value of `M_M^{-1/2} B M_S^{-1/2}` with
/// `B[i, j] = ∫ μᵢ φⱼ`. Dense; intended for moderate mesh sizes.
pub fn infsup_constant(mesh: &Mesh, layout: &DofLayout, basis: &MultiplierBasis) -> Result<f64> {
    let rule = QuadratureRule::degree5();
    let mm = inverse_sqrt(&multiplier_mass(mesh, basis, &rule))?;
    let ms = inverse_sqrt(&hat_mass(mesh, layout))?;
    let b = multiplier_hat_gram(mesh, layout, basis, &rule).to_dense();
    let k = &mm * &b * &ms;
    let sv = k
        .singular_values()
        .map_err(|e| Error::SingularMatrix(format!("singular value decomposition failed: {e:?}")))?;
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupReport {
    pub kind: MultiplierKind,
    /// `(h, β_h)` per mesh.
    pub values: Vec<(f64, f64)>,
}

impl InfSupReport {
    pub fn min(&self) -> f64 {
        self.values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ratio(&self) -> f64 {
        self.min() / self.max()
    }
}

/// Inf-sup constants over a mesh sequence. A value at or below `1e-10`
/// is reported as a stability failure.
pub fn infsup_estimate(meshes: &[Mesh], kind: MultiplierKind, weighting: &Weighting) -> Result<InfSupReport> {
    if meshes.len() < 2 {
        return Err(Error::Config("inf-sup estimate needs at least two meshes".into()));
    }
    let mut values = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let (_, layout, basis) = discretize(mesh, kind, weighting)?;
        let beta = infsup_constant(mesh, &layout, &basis)?;
        if !(beta > 1e-10) {
            return Err(Error::StabilityFailure { beta, h: mesh.h() });
        }
        values.push((mesh.h(), beta));
    }
    Ok(InfSupReport { kind, values })
}

/// A clamped pair `(ψ, v)` on which the projectors are tested.
pub trait ClampedPair: Sync {
    fn psi(&self, p: Point) -> [f64; 2];
    fn v(&self, p: Point) -> f64;
    fn grad_v(&self, p: Point) -> [f64; 2];
}

/// `ψ = (a·q, b·q)`, `v = q` with `q = x(1−x)y(1−y)` on the unit square.
#[derive(Debug, Clone, Copy)]
pub struct PolynomialPair {
    pub a: f64,
    pub b: f64,
}

impl ClampedPair for PolynomialPair {
    fn psi(&self, p: Point) -> [f64; 2] {
        let q = self.v(p);
        [self.a * q, self.b * q]
    }

    fn v(&self, p: Point) -> f64 {
        p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1])
    }

    fn grad_v(&self, p: Point) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        [(1.0 - 2.0 * x) * y * (1.0 - y), x * (1.0 - x) * (1.0 - 2.0 * y)]
    }
}

/// `ψ = (x²(1−x)y(1−y), −x(1−x)y(1−y)²)`, `v = x(1−x)y²(1−y)`: degree five.
#[derive(Debug, Clone, Copy)]
pub struct SkewPolynomialPair;

impl ClampedPair for SkewPolynomialPair {
    fn psi(&self, p: Point) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        let q = x * (1.0 - x) * y * (1.0 - y);
        [x * q, -(1.0 - y) * q]
    }

    fn v(&self, p: Point) -> f64 {
        let (x, y) = (p[0], p[1]);
        x * (1.0 - x) * y * y * (1.0 - y)
    }

    fn grad_v(&self, p: Point) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        [(1.0 - 2.0 * x) * y * y * (1.0 - y), x * (1.0 - x) * (2.0 * y - 3.0 * y * y)]
    }
}

/// `P_h v`: L²-projection onto `S_h`.
pub fn l2_projection(mesh: &Mesh, layout: &DofLayout, v: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rule = QuadratureRule::degree5();
    solve_spd(&hat_mass(mesh, layout), &hat_load(mesh, layout, &rule, v))
}

/// `R_h v = P_h v + Z_h(v − P_h v)` as `W_h` coefficients, where `Z_h`
/// picks the bubble with the same element mean.
pub fn fortin_r(mesh: &Mesh, layout: &DofLayout, v: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rule = QuadratureRule::degree5();
    let p = l2_projection(mesh, layout, v)?;
    let mut out = vec![0.0; layout.dim_w()];
    out[..layout.m].copy_from_slice(&p);
    // ∫_T b_T = 27·2|T|/5! = 9|T|/20
    let bubble_mean = BUBBLE_SCALE * 2.0 / 120.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = ElementGeometry::new(mesh, t);
        let mut defect = 0.0;
        for qp in quad_points(&geo, &rule) {
            let ph: f64 = (0..3).filter_map(|k| layout.s_dof(tri[k]).map(|s| p[s] * qp.bary[k])).sum();
            defect += qp.weight * (v(qp.x) - ph);
        }
        out[layout.bubble_dof(t)] = defect / (bubble_mean * geo.area);
    }
    Ok(out)
}

/// `Q_h ψ` per component: the `S_h` function with `∫(Q_hψ − ψ)μ = 0` for
/// every multiplier basis function `μ`.
pub fn fortin_q(mesh: &Mesh, layout: &DofLayout, basis: &MultiplierBasis, psi: &dyn Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
    let rule = QuadratureRule::degree5();
    let lu = LuSolver::new(&multiplier_hat_gram(mesh, layout, basis, &rule))?;
    let mut out = Vec::with_capacity(layout.dim_v());
    for c in 0..2 {
        out.extend(lu.solve(&scalar_load(mesh, basis, &rule, &|p| psi(p)[c]))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FortinReport {
    /// `max |b(Q_hψ, R_hv; η_h) − b(ψ, v; η_h)|` over samples and basis `η_h`.
    pub identity_defect: f64,
    /// `max_T |∫_T (R_hv − v)|`.
    pub element_mean_defect: f64,
}

/// Checks that `(Q_h, R_h)` preserve `b(ψ, v; η) = ∫(ψ − ∇v)·η` on
/// the standard multiplier space, and that `R_h` preserves element means.
pub fn fortin_diagnostics(
    mesh: &Mesh,
    layout: &DofLayout,
    basis: &MultiplierBasis,
    samples: &[&dyn ClampedPair],
) -> Result<FortinReport> {
    if basis.kind != MultiplierKind::Standard {
        return Err(Error::UnsupportedKind { required: "standard" });
    }
    let rule = QuadratureRule::degree5();
    let gram = multiplier_hat_gram(mesh, layout, basis, &rule);
    let m = layout.m;
    let mut report = FortinReport { identity_defect: 0.0, element_mean_defect: 0.0 };

    for sample in samples {
        let q = fortin_q(mesh, layout, basis, &|p| sample.psi(p))?;
        let r = fortin_r(mesh, layout, &|p| sample.v(p))?;

        // ∫ ∂_c(R_h v) μᵢ and ∫ (R_h v − v) per element
        let mut grad_r = vec![[0.0; 2]; basis.dim()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let geo = ElementGeometry::new(mesh, t);
            let funcs = basis.local_functions(tri);
            let mut mean = 0.0;
            for qp in quad_points(&geo, &rule) {
                let mut val = r[layout.bubble_dof(t)] * qp.bubble;
                let mut grad = [r[layout.bubble_dof(t)] * qp.bubble_grad[0], r[layout.bubble_dof(t)] * qp.bubble_grad[1]];
                for k in 0..3 {
                    if let Some(s) = layout.s_dof(tri[k]) {
                        val += r[s] * qp.bary[k];
                        grad[0] += r[s] * geo.grad_bary[k][0];
                        grad[1] += r[s] * geo.grad_bary[k][1];
                    }
                }
                mean += qp.weight * (val - sample.v(qp.x));
                for (row, coeffs) in &funcs {
                    let mu = basis.local_value(coeffs, &qp.bary);
                    grad_r[*row][0] += qp.weight * grad[0] * mu;
                    grad_r[*row][1] += qp.weight * grad[1] * mu;
                }
            }
            report.element_mean_defect = report.element_mean_defect.max(mean.abs());
        }

        for c in 0..2 {
            let psi_mu = scalar_load(mesh, basis, &rule, &|p| sample.psi(p)[c]);
            let grad_v_mu = scalar_load(mesh, basis, &rule, &|p| sample.grad_v(p)[c]);
            let q_mu = gram.mul_vec(&q[c * m..(c + 1) * m]);
            for i in 0..basis.dim() {
                let defect = (q_mu[i] - grad_r[i][c]) - (psi_mu[i] - grad_v_mu[i]);
                report.identity_defect = report.identity_defect.max(defect.abs());
            }
        }
    }
    Ok(report)
}

/// `max |Σᵢ μᵢ − 1|` over all quadrature points.
pub fn partition_of_unity_defect(mesh: &Mesh, basis: &MultiplierBasis) -> f64 {
    let rule = QuadratureRule::degree5();
    let ones = vec![1.0; basis.dim()];
    let mut worst = 0.0f64;
    for tri in mesh.triangles() {
        for (bary, _) in rule.iter() {
            worst = worst.max((basis.eval_combination(tri, bary, &ones) - 1.0).abs());
        }
    }
    worst
}

/// Largest jump of any single basis function across an interior edge,
/// sampled at three Gauss points per edge.
pub fn continuity_defect(mesh: &Mesh, basis: &MultiplierBasis) -> f64 {
    let gauss = QuadratureRule::gauss_line3();
    let mut worst = 0.0f64;
    let mut a = vec![0.0; basis.dim()];
    for edge in mesh.edges().iter().filter(|e| e.shared) {
        let [t0, t1] = edge.triangles;
        let (tri0, tri1) = (&mesh.triangles()[t0], &mesh.triangles()[t1]);
        let mut rows: Vec<usize> = basis.local_functions(tri0).iter().map(|f| f.0).collect();
        rows.extend(basis.local_functions(tri1).iter().map(|f| f.0));
        rows.sort_unstable();
        rows.dedup();
        let [p, q] = edge.vertices.map(|v| mesh.vertices()[v]);
        for &(s, _) in &gauss {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let b0 = barycentric(&mesh.corners(t0), x);
            let b1 = barycentric(&mesh.corners(t1), x);
            for &row in &rows {
                a[row] = 1.0;
                let jump = basis.eval_combination(tri0, &b0, &a) - basis.eval_combination(tri1, &b1, &a);
                worst = worst.max(jump.abs());
                a[row] = 0.0;
            }
        }
    }
    worst
}

/// `(max off-diagonal, max diagonal)` magnitudes of `∫ μᵢ φⱼ` over interior
/// hats. For the dual kind the off-diagonal part vanishes.
pub fn biorthogonality_defect(mesh: &Mesh, layout: &DofLayout, basis: &MultiplierBasis) -> (f64, f64) {
    let gram = multiplier_hat_gram(mesh, layout, basis, &QuadratureRule::degree5());
    diagonal_dominance(&gram)
}

/// `(max |off-diagonal|, max |diagonal|)` of a square matrix.
pub fn diagonal_dominance(a: &SparseMatrix) -> (f64, f64) {
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for (i, j, v) in a.iter() {
        if i == j {
            diag = diag.max(v.abs());
        } else {
            off = off.max(v.abs());
        }
    }
    (off, diag)
}
