use std::sync::Arc;

use rmplate::mesh::validate_interior_vertex_assumption;
use rmplate::norms::error_norms;
use rmplate::solver::condensed_min_real_eigenvalue;
use rmplate::{
    apply_mms_loads, assemble, discretize, generate_crisscross, generate_uniform_diagonal, solve, DefaultCase, Error, Loads,
    Material, MultiplierKind, Rect, SolvePath, Weighting,
};

fn mms_errors(kind: MultiplierKind, n: usize, t: f64, path: SolvePath) -> rmplate::norms::ErrorNorms {
    let material = Material::default();
    let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
    let (_, layout, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
    let (loads, exact) = apply_mms_loads(Arc::new(DefaultCase), &material, t).unwrap();
    let sys = assemble(&mesh, &layout, &basis, &material, t, &loads).unwrap();
    let sol = solve(&sys, path).unwrap();
    error_norms(&sol, &exact, &mesh, &layout, &basis)
}

#[test]
fn manufactured_errors_shrink_under_refinement() {
    for (kind, path) in [(MultiplierKind::Standard, SolvePath::Full), (MultiplierKind::Dual, SolvePath::Condensed)] {
        let coarse = mms_errors(kind, 4, 0.01, path);
        let fine = mms_errors(kind, 8, 0.01, path);
        assert!(fine.phi_h1 < coarse.phi_h1, "{kind}");
        assert!(fine.u_h1 < coarse.u_h1, "{kind}");
        assert!(fine.zeta_l2 < coarse.zeta_l2, "{kind}");
    }
}

/// Records the smallest real eigenvalue part of the reduced operator. It
/// is printed rather than asserted; the operator is nonsymmetric and its
/// definiteness is an empirical observation.
#[test]
fn condensed_operator_spectrum_is_reported() {
    for n in [1, 2, 4] {
        for t in [0.1, 0.01, 1e-4] {
            let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
            let (_, layout, basis) = discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal).unwrap();
            let sys = assemble(&mesh, &layout, &basis, &Material::default(), t, &Loads::uniform(1.0)).unwrap();
            let lambda = condensed_min_real_eigenvalue(&sys).unwrap();
            assert!(lambda.is_finite());
            println!("n={n} t={t:e}: min Re(lambda) = {lambda:.6e}");
        }
    }
}

#[test]
fn diagonal_mesh_reports_the_corner_triangles() {
    let mesh = generate_uniform_diagonal(2, &Rect::UNIT_SQUARE).unwrap();
    let Err(Error::NoInteriorVertex { triangles }) = validate_interior_vertex_assumption(&mesh) else {
        panic!("expected a violation");
    };
    let corners: Vec<Vec<[f64; 2]>> = triangles
        .iter()
        .map(|&t| {
            let mut c: Vec<[f64; 2]> = mesh.triangles()[t].iter().map(|&v| mesh.vertices()[v]).collect();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            c
        })
        .collect();
    assert!(corners.contains(&vec![[0.5, 0.0], [1.0, 0.0], [1.0, 0.5]]));
    assert!(corners.contains(&vec![[0.0, 0.5], [0.0, 1.0], [0.5, 1.0]]));
    assert_eq!(triangles.len(), 2);
    assert!(discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal).is_err());
}
