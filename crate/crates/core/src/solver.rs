//! Full and statically condensed solution of the saddle-point system.

use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::linalg::{relative_residual, LuSolver, SparseMatrix, TripletBuilder};
use crate::spaces::MultiplierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolvePath {
    Full,
    Condensed,
}

impl SolvePath {
    pub fn label(self) -> &'static str {
        match self {
            SolvePath::Full => "full",
            SolvePath::Condensed => "condensed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(SolvePath::Full),
            "condensed" => Some(SolvePath::Condensed),
            _ => None,
        }
    }
}

impl std::fmt::Display for SolvePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Coefficient vectors of `(φ_h, u_h, ζ_h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateSolution {
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    pub zeta: Vec<f64>,
    pub solver_path: SolvePath,
}

impl PlateSolution {
    pub fn stacked(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.phi.len() + self.u.len() + self.zeta.len());
        x.extend_from_slice(&self.phi);
        x.extend_from_slice(&self.u);
        x.extend_from_slice(&self.zeta);
        x
    }

    fn split(system: &SaddleSystem, x: &[f64], solver_path: SolvePath) -> Self {
        let [_, o_u, o_z] = system.layout.offsets();
        PlateSolution {
            phi: x[..o_u].to_vec(),
            u: x[o_u..o_z].to_vec(),
            zeta: x[o_z..].to_vec(),
            solver_path,
        }
    }

    /// Relative residual of this triple in the full system.
    pub fn residual(&self, system: &SaddleSystem) -> f64 {
        relative_residual(&system.full_matrix(), &self.stacked(), &system.rhs())
    }
}

/// Residual threshold of the full path, relative to the right-hand side.
pub const FULL_RESIDUAL_TOL: f64 = 1e-10;
/// Residual threshold of the condensed path measured in the full system.
pub const CONDENSED_RESIDUAL_TOL: f64 = 1e-9;

/// Sparse LU of the whole indefinite system.
pub fn solve_full(system: &SaddleSystem) -> Result<PlateSolution> {
    let k = system.full_matrix();
    let rhs = system.rhs();
    let x = LuSolver::new(&k)?.solve(&rhs)?;
    let res = relative_residual(&k, &x, &rhs);
    if !(res <= FULL_RESIDUAL_TOL) {
        return Err(Error::SingularMatrix(format!("full solve residual {res:.3e} exceeds {FULL_RESIDUAL_TOL:e}")));
    }
    Ok(PlateSolution::split(system, &x, SolvePath::Full))
}

/// Inverse of the diagonal Gram block; refuses anything but the dual kind.
fn dual_gram_inverse(system: &SaddleSystem) -> Result<Vec<f64>> {
    if system.kind != MultiplierKind::Dual {
        return Err(Error::UnsupportedKind { required: "dual" });
    }
    let diag = system.d.diagonal();
    let scale = diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if let Some(i) = diag.iter().position(|&v| !(v.abs() > 1e-14 * scale) || scale == 0.0) {
        return Err(Error::ZeroDualDiagonal(i));
    }
    Ok(diag.iter().map(|v| 1.0 / v).collect())
}

/// The condensed operator in `(φ, u)` and its right-hand side, obtained by
/// eliminating `ζ = −D⁻¹(A_φφ φ + A_φu u − f)` from the rotation rows:
///
/// ```text
/// ⎡ Dᵀ + c_t M_ζ D⁻¹ A_φφ      −Gᵀ + c_t M_ζ D⁻¹ A_φu    ⎤ ⎡φ⎤   ⎡ c_t M_ζ D⁻¹ f  ⎤
/// ⎣ A_φuᵀ + G D⁻¹ A_φφ          A_uu + G D⁻¹ A_φu        ⎦ ⎣u⎦ = ⎣ g + G D⁻¹ f    ⎦
/// ```
///
/// The first block row comes from the constraint equations, the second
/// from the deflection equations, so each diagonal block acts on its own
/// unknown. The operator is not symmetric.
pub fn condensed_system(system: &SaddleSystem) -> Result<(SparseMatrix, Vec<f64>)> {
    let dinv = dual_gram_inverse(system)?;
    let c = system.c_t;
    let nv = system.layout.dim_v();
    let nw = system.layout.dim_w();

    let dinv_app = system.a_phiphi.scale_rows(&dinv);
    let dinv_apu = system.a_phiu.scale_rows(&dinv);
    let g_dinv_app = system.g.matmul(&dinv_app);
    let g_dinv_apu = system.g.matmul(&dinv_apu);
    let mz_dinv_app = system.m_zeta.matmul(&dinv_app);
    let mz_dinv_apu = system.m_zeta.matmul(&dinv_apu);

    let mut b = TripletBuilder::new(nv + nw, nv + nw);
    b.add_block(0, 0, &system.d.transpose(), 1.0);
    b.add_block(0, 0, &mz_dinv_app, c);
    b.add_block(0, nv, &system.g.transpose(), -1.0);
    b.add_block(0, nv, &mz_dinv_apu, c);
    b.add_block(nv, 0, &system.a_phiu.transpose(), 1.0);
    b.add_block(nv, 0, &g_dinv_app, 1.0);
    b.add_block(nv, nv, &system.a_uu, 1.0);
    b.add_block(nv, nv, &g_dinv_apu, 1.0);

    let dinv_f: Vec<f64> = system.rhs_phi.iter().zip(&dinv).map(|(f, d)| f * d).collect();
    let g_dinv_f = system.g.mul_vec(&dinv_f);
    let mz_dinv_f = system.m_zeta.mul_vec(&dinv_f);
    let mut rhs = Vec::with_capacity(nv + nw);
    rhs.extend(mz_dinv_f.iter().map(|x| c * x));
    rhs.extend(system.rhs_u.iter().zip(&g_dinv_f).map(|(g, x)| g + x));
    Ok((b.build(), rhs))
}

/// Static condensation of the multiplier (dual kind only): solve the
/// reduced `(φ, u)` system, then recover `ζ` by the diagonal inversion.
pub fn solve_condensed(system: &SaddleSystem) -> Result<PlateSolution> {
    let dinv = dual_gram_inverse(system)?;
    let (reduced, rhs) = condensed_system(system)?;
    let y = LuSolver::new(&reduced)?.solve(&rhs)?;
    let nv = system.layout.dim_v();
    let (phi, u) = y.split_at(nv);

    let app_phi = system.a_phiphi.mul_vec(phi);
    let apu_u = system.a_phiu.mul_vec(u);
    let zeta: Vec<f64> = (0..nv)
        .map(|i| -dinv[i] * (app_phi[i] + apu_u[i] - system.rhs_phi[i]))
        .collect();

    let solution = PlateSolution { phi: phi.to_vec(), u: u.to_vec(), zeta, solver_path: SolvePath::Condensed };
    let res = solution.residual(system);
    if !(res <= CONDENSED_RESIDUAL_TOL) {
        return Err(Error::SingularMatrix(format!(
            "condensed solution leaves full residual {res:.3e} above {CONDENSED_RESIDUAL_TOL:e}"
        )));
    }
    Ok(solution)
}

pub fn solve(system: &SaddleSystem, path: SolvePath) -> Result<PlateSolution> {
    match path {
        SolvePath::Full => solve_full(system),
        SolvePath::Condensed => solve_condensed(system),
    }
}

/// Smallest real part among the eigenvalues of the condensed operator
/// (dense; meant for small meshes).
pub fn condensed_min_real_eigenvalue(system: &SaddleSystem) -> Result<f64> {
    let (reduced, _) = condensed_system(system)?;
    let eig = reduced
        .to_dense()
        .eigenvalues()
        .map_err(|e| Error::SingularMatrix(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// Relative difference `‖a − b‖ / ‖b‖`.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
