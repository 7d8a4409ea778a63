//! Degree-of-freedom layouts and the boundary-modified multiplier spaces.
//!
//! * `S_h`: continuous P1 functions vanishing on the boundary, one dof per
//!   interior vertex;
//! * `W_h = S_h ⊕ B_h`: `S_h` plus one cubic bubble per triangle;
//! * `V_h = [S_h]²`: rotations;
//! * `M_h`: multipliers, `dim M_h = dim S_h`.
//!
//! A multiplier basis function is a sparse combination of *unmodified*
//! functions attached to vertices: nodal hats (standard kind) or
//! element-wise dual functions `4λ − 1` (dual kind). The function attached
//! to interior vertex `i` keeps coefficient one on itself; every boundary
//! vertex `j` distributes its function onto its interior edge-neighbours
//! with nonnegative weights summing to one. Column sums of the coefficient
//! matrix are therefore one, which keeps constants in the span.

use std::collections::BTreeMap;

use crate::assembly::{multiplier_mass, scalar_load};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::mesh::{classify, validate_interior_vertex_assumption, Mesh, Point, VertexClassification};
use crate::quadrature::QuadratureRule;
use crate::reference::dual_from_bary;

/// Global numbering of the discrete spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    /// `dim S_h`: number of interior vertices.
    pub m: usize,
    /// `dim K_h`: number of vertices.
    pub n: usize,
    /// `dim B_h`: number of triangles.
    pub nb: usize,
    /// `S_h` dof → vertex.
    pub interior_vertices: Vec<usize>,
    vertex_dof: Vec<Option<usize>>,
}

impl DofLayout {
    /// `S_h` dof of vertex `v`, if interior.
    pub fn s_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    /// `W_h` dof of the bubble on triangle `t`.
    pub fn bubble_dof(&self, t: usize) -> usize {
        self.m + t
    }

    pub fn dim_s(&self) -> usize {
        self.m
    }

    pub fn dim_w(&self) -> usize {
        self.m + self.nb
    }

    pub fn dim_v(&self) -> usize {
        2 * self.m
    }

    pub fn dim_multiplier(&self) -> usize {
        2 * self.m
    }

    /// Offsets of the `(φ, u, ζ)` blocks in the saddle-point vector.
    pub fn offsets(&self) -> [usize; 3] {
        [0, self.dim_v(), self.dim_v() + self.dim_w()]
    }

    pub fn total_dofs(&self) -> usize {
        self.dim_v() + self.dim_w() + self.dim_multiplier()
    }
}

/// Builds the layout, refusing meshes with a triangle that has no interior
/// vertex.
pub fn build_layout(mesh: &Mesh, classification: &VertexClassification) -> Result<DofLayout> {
    validate_interior_vertex_assumption(mesh)?;
    let mut vertex_dof = vec![None; mesh.num_vertices()];
    for (dof, &v) in classification.interior.iter().enumerate() {
        vertex_dof[v] = Some(dof);
    }
    Ok(DofLayout {
        m: classification.interior.len(),
        n: mesh.num_vertices(),
        nb: mesh.num_triangles(),
        interior_vertices: classification.interior.clone(),
        vertex_dof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MultiplierKind {
    /// Continuous piecewise linear hats.
    Standard,
    /// Discontinuous functions biorthogonal to the hats.
    Dual,
}

impl MultiplierKind {
    pub fn label(self) -> &'static str {
        match self {
            MultiplierKind::Standard => "std",
            MultiplierKind::Dual => "dual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "std" | "standard" => Some(MultiplierKind::Standard),
            "dual" => Some(MultiplierKind::Dual),
            _ => None,
        }
    }

    /// Unmodified function of local vertex `k` at barycentric point `bary`.
    #[inline]
    pub fn local_value(self, bary: &[f64; 3], k: usize) -> f64 {
        match self {
            MultiplierKind::Standard => bary[k],
            MultiplierKind::Dual => dual_from_bary(bary, k),
        }
    }
}

impl std::fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// How a boundary vertex distributes its function among its interior
/// edge-neighbours.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Weighting {
    /// `1 / #(interior neighbours)` each.
    #[default]
    Equal,
    /// Explicit weights keyed by `(boundary vertex, interior vertex)`.
    /// Must be nonnegative and sum to one per boundary vertex.
    Custom(BTreeMap<(usize, usize), f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierBasis {
    pub kind: MultiplierKind,
    /// Row `i` (one per `S_h` dof): `(vertex, coefficient)` terms, the own
    /// vertex first.
    rows: Vec<Vec<(usize, f64)>>,
    /// Per vertex: `(row, coefficient)` of every row using it.
    columns: Vec<Vec<(usize, f64)>>,
}

impl MultiplierBasis {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn column(&self, v: usize) -> &[(usize, f64)] {
        &self.columns[v]
    }

    /// Entry `C[i, j]` of the coefficient matrix.
    pub fn coeff(&self, i: usize, vertex: usize) -> f64 {
        self.rows[i].iter().filter(|(v, _)| *v == vertex).map(|(_, c)| c).sum()
    }

    /// Basis functions nonzero on a triangle, each as coefficients of the
    /// three local unmodified functions.
    pub fn local_functions(&self, tri: &[usize; 3]) -> Vec<(usize, [f64; 3])> {
        let mut out: Vec<(usize, [f64; 3])> = Vec::with_capacity(6);
        for (k, &v) in tri.iter().enumerate() {
            for &(row, c) in &self.columns[v] {
                match out.iter_mut().find(|(r, _)| *r == row) {
                    Some((_, coeffs)) => coeffs[k] += c,
                    None => {
                        let mut coeffs = [0.0; 3];
                        coeffs[k] = c;
                        out.push((row, coeffs));
                    }
                }
            }
        }
        out
    }

    /// Value on a triangle of a function given by local coefficients.
    #[inline]
    pub fn local_value(&self, coeffs: &[f64; 3], bary: &[f64; 3]) -> f64 {
        (0..3).map(|k| coeffs[k] * self.kind.local_value(bary, k)).sum()
    }

    /// Value on triangle `tri` of `Σᵢ aᵢ·(basis i)`.
    pub fn eval_combination(&self, tri: &[usize; 3], bary: &[f64; 3], a: &[f64]) -> f64 {
        let mut value = 0.0;
        for (k, &v) in tri.iter().enumerate() {
            let coeff: f64 = self.columns[v].iter().map(|&(row, c)| c * a[row]).sum();
            value += coeff * self.kind.local_value(bary, k);
        }
        value
    }
}

/// Builds the modified multiplier basis of the given kind.
pub fn build_multiplier(
    kind: MultiplierKind,
    mesh: &Mesh,
    classification: &VertexClassification,
    weighting: &Weighting,
) -> Result<MultiplierBasis> {
    let layout = build_layout(mesh, classification)?;
    let mut rows: Vec<Vec<(usize, f64)>> = layout.interior_vertices.iter().map(|&v| vec![(v, 1.0)]).collect();

    for &j in &classification.boundary {
        let targets: Vec<usize> = classification.edge_neighbors[j]
            .iter()
            .copied()
            .filter(|&i| !mesh.is_boundary(i))
            .collect();
        if targets.is_empty() {
            return Err(Error::IsolatedBoundaryVertex(j));
        }
        let weights: Vec<f64> = match weighting {
            Weighting::Equal => vec![1.0 / targets.len() as f64; targets.len()],
            Weighting::Custom(map) => {
                let w: Vec<f64> = targets.iter().map(|&i| map.get(&(j, i)).copied().unwrap_or(0.0)).collect();
                if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidWeighting(format!("negative or non-finite weight at boundary vertex {j}")));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidWeighting(format!(
                        "weights of boundary vertex {j} sum to {sum}, expected 1"
                    )));
                }
                w
            }
        };
        for (&i, &w) in targets.iter().zip(&weights) {
            if w != 0.0 {
                let dof = layout.s_dof(i).expect("interior vertex");
                rows[dof].push((j, w));
            }
        }
    }
    if let Weighting::Custom(map) = weighting {
        for &(j, i) in map.keys() {
            let valid = j < mesh.num_vertices()
                && i < mesh.num_vertices()
                && mesh.is_boundary(j)
                && !mesh.is_boundary(i)
                && classification.edge_neighbors[j].binary_search(&i).is_ok();
            if !valid {
                return Err(Error::InvalidWeighting(format!(
                    "({j}, {i}) is not a (boundary vertex, interior edge-neighbour) pair"
                )));
            }
        }
    }

    let mut columns = vec![Vec::new(); mesh.num_vertices()];
    for (row, terms) in rows.iter().enumerate() {
        for &(v, c) in terms {
            columns[v].push((row, c));
        }
    }
    Ok(MultiplierBasis { kind, rows, columns })
}

/// Convenience: classification, layout and multiplier in one go.
pub fn discretize(mesh: &Mesh, kind: MultiplierKind, weighting: &Weighting) -> Result<(VertexClassification, DofLayout, MultiplierBasis)> {
    let classification = classify(mesh);
    let layout = build_layout(mesh, &classification)?;
    let basis = build_multiplier(kind, mesh, &classification, weighting)?;
    Ok((classification, layout, basis))
}

/// `inf_{μ_h ∈ M_h} ‖μ − μ_h‖_{L²}` by L²-projection onto the span of the
/// basis.
pub fn best_approximation_error(mesh: &Mesh, basis: &MultiplierBasis, probe: &dyn Fn(Point) -> f64) -> Result<f64> {
    let rule = QuadratureRule::degree5();
    let mass = multiplier_mass(mesh, basis, &rule);
    let rhs = scalar_load(mesh, basis, &rule, probe);
    let coeffs = solve_spd(&mass, &rhs)?;
    let mut err2 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = mesh.corners(t);
        let area = mesh.area(t);
        for (bary, w) in rule.iter() {
            let x = crate::quadrature::to_physical(&corners, bary);
            let d = probe(x) - basis.eval_combination(tri, bary, &coeffs);
            err2 += w * area * d * d;
        }
    }
    Ok(err2.sqrt())
}

/// Best-approximation errors `(h, error)` of `probe` on each mesh.
pub fn multiplier_approximation_study(
    kind: MultiplierKind,
    weighting: &Weighting,
    probe: &dyn Fn(Point) -> f64,
    meshes: &[Mesh],
) -> Result<Vec<(f64, f64)>> {
    meshes
        .iter()
        .map(|mesh| {
            let (_, _, basis) = discretize(mesh, kind, weighting)?;
            Ok((mesh.h(), best_approximation_error(mesh, &basis, probe)?))
        })
        .collect()
}

/// Experimental orders of convergence between consecutive `(h, error)`
/// pairs.
pub fn eoc(series: &[(f64, f64)]) -> Vec<f64> {
    series
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
