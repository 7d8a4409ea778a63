use std::collections::BTreeMap;

use proptest::prelude::*;
use rmplate::linalg::SparseMatrix;
use rmplate::mesh::classify;
use rmplate::quadrature::QuadratureRule;
use rmplate::reference::barycentric_integral;
use rmplate::solver::relative_difference;
use rmplate::spaces::eoc;
use rmplate::study::format_float;
use rmplate::{
    assemble, build_multiplier, discretize, generate_crisscross, solve_condensed, solve_full, Loads, Material, Mesh,
    MultiplierKind, Rect, Weighting,
};

fn rect() -> impl Strategy<Value = Rect> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.2..3.0f64, 0.2..3.0f64).prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h).unwrap())
}

fn kind() -> impl Strategy<Value = MultiplierKind> {
    prop_oneof![Just(MultiplierKind::Standard), Just(MultiplierKind::Dual)]
}

fn bary() -> impl Strategy<Value = [f64; 3]> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        [1.0 - a - b, a, b]
    })
}

fn symmetric_defect(a: &SparseMatrix) -> f64 {
    let t = a.transpose();
    a.iter().map(|(i, j, v)| (v - t.get(i, j)).abs()).fold(0.0, f64::max) / a.max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_invariants(n in 1usize..7, domain in rect()) {
        let mesh = generate_crisscross(n, &domain).unwrap();
        prop_assert!((mesh.total_area() - domain.area()).abs() <= 1e-12 * domain.area());
        for t in 0..mesh.num_triangles() {
            prop_assert!(mesh.area(t) > 0.0);
        }
        let mut on_boundary_edge = vec![false; mesh.num_vertices()];
        for e in mesh.edges() {
            if !e.shared {
                on_boundary_edge[e.vertices[0]] = true;
                on_boundary_edge[e.vertices[1]] = true;
            }
        }
        prop_assert_eq!(&on_boundary_edge[..], mesh.boundary_flags());
        let c = classify(&mesh);
        prop_assert_eq!(c.interior.len() + c.boundary.len(), mesh.num_vertices());
        for (i, nbrs) in c.edge_neighbors.iter().enumerate() {
            for &j in nbrs {
                prop_assert!(c.edge_neighbors[j].contains(&i));
            }
        }
        for &i in &c.interior {
            let near = c.edge_neighbors[i].iter().any(|&j| mesh.is_boundary(j));
            prop_assert_eq!(near, c.near_boundary_interior.contains(&i));
        }
    }

    #[test]
    fn generation_is_deterministic(n in 1usize..6, domain in rect()) {
        let a = generate_crisscross(n, &domain).unwrap();
        let b = generate_crisscross(n, &domain).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(classify(&a), classify(&b));
    }

    #[test]
    fn quasi_uniformity_is_level_independent(n in 1usize..9) {
        let ratio = |m: &Mesh| m.h() / m.h_min();
        let a = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let b = generate_crisscross(2 * n, &Rect::UNIT_SQUARE).unwrap();
        prop_assert!((ratio(&a) - ratio(&b)).abs() < 1e-12);
    }

    #[test]
    fn quadrature_reproduces_monomials(a in 0u32..6, b in 0u32..6, c in 0u32..6,
                                       p in prop::array::uniform6(-3.0..3.0f64)) {
        prop_assume!(a + b + c <= 5);
        let corners = [[p[0], p[1]], [p[2], p[3]], [p[4], p[5]]];
        let area = rmplate::mesh::signed_area(corners[0], corners[1], corners[2]);
        prop_assume!(area.abs() > 1e-3);
        let rule = QuadratureRule::degree5();
        let q: f64 = rule.iter().map(|(l, w)| w * area.abs() * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)).sum();
        let exact = barycentric_integral(a, b, c, area.abs());
        prop_assert!((q - exact).abs() <= 1e-14 * area.abs().max(1.0));
    }

    #[test]
    fn multiplier_coefficients(n in 1usize..7, kind in kind()) {
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let (c, layout, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
        prop_assert_eq!(basis.dim(), layout.dim_s());
        for (i, &v) in layout.interior_vertices.iter().enumerate() {
            prop_assert_eq!(basis.coeff(i, v), 1.0);
            for &(j, coef) in basis.row(i) {
                prop_assert!(coef >= 0.0);
                if j != v {
                    prop_assert!(mesh.is_boundary(j));
                    prop_assert!(c.edge_neighbors[v].contains(&j));
                    prop_assert!(c.near_boundary_interior.contains(&v));
                }
            }
        }
        for &j in &c.boundary {
            let sum: f64 = basis.column(j).iter().map(|e| e.1).sum();
            prop_assert!((sum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn partition_of_unity_at_random_points(n in 1usize..6, kind in kind(), b in bary(), t_pick in 0usize..1000) {
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let (_, _, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
        let t = t_pick % mesh.num_triangles();
        let ones = vec![1.0; basis.dim()];
        prop_assert!((basis.eval_combination(&mesh.triangles()[t], &b, &ones) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn custom_weights_keep_partition_of_unity(n in 2usize..5, seeds in prop::collection::vec(0.01..1.0f64, 64)) {
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let c = classify(&mesh);
        let mut weights = BTreeMap::new();
        let mut k = 0;
        for &j in &c.boundary {
            let targets: Vec<usize> = c.edge_neighbors[j].iter().copied().filter(|&i| !mesh.is_boundary(i)).collect();
            let raw: Vec<f64> = targets.iter().map(|_| { k += 1; seeds[k % seeds.len()] }).collect();
            let total: f64 = raw.iter().sum();
            for (&i, w) in targets.iter().zip(raw) {
                weights.insert((j, i), w / total);
            }
        }
        let basis = build_multiplier(MultiplierKind::Dual, &mesh, &c, &Weighting::Custom(weights)).unwrap();
        let ones = vec![1.0; basis.dim()];
        let rule = QuadratureRule::degree5();
        for tri in mesh.triangles() {
            for (b, _) in rule.iter() {
                prop_assert!((basis.eval_combination(tri, b, &ones) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assembled_system_is_symmetric(n in 1usize..6, kind in kind(), t in 1e-4..0.9f64) {
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let (_, layout, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
        let sys = assemble(&mesh, &layout, &basis, &Material::default(), t, &Loads::uniform(1.0)).unwrap();
        prop_assert!(symmetric_defect(&sys.full_matrix()) <= 1e-13);
        prop_assert!(sys.c_t > 0.0);
    }

    #[test]
    fn solution_scales_with_load(n in 1usize..6, kind in kind(), t in 1e-4..0.5f64, s in -5.0..5.0f64) {
        prop_assume!(s.abs() > 1e-3);
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let (_, layout, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
        let mat = Material::default();
        let one = solve_full(&assemble(&mesh, &layout, &basis, &mat, t, &Loads::uniform(1.0)).unwrap()).unwrap();
        let scaled = solve_full(&assemble(&mesh, &layout, &basis, &mat, t, &Loads::uniform(s)).unwrap()).unwrap();
        let expected: Vec<f64> = one.stacked().iter().map(|v| s * v).collect();
        prop_assert!(relative_difference(&scaled.stacked(), &expected) < 1e-12);
    }

    #[test]
    fn condensation_agrees_with_full_solve(n in 1usize..7, t in 1e-4..0.5f64) {
        let mesh = generate_crisscross(n, &Rect::UNIT_SQUARE).unwrap();
        let (_, layout, basis) = discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal).unwrap();
        let sys = assemble(&mesh, &layout, &basis, &Material::default(), t, &Loads::uniform(1.0)).unwrap();
        let full = solve_full(&sys).unwrap();
        let cond = solve_condensed(&sys).unwrap();
        // blocks can vanish by symmetry, so scale by the whole solution
        let scale = full.stacked().iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in [(&cond.phi, &full.phi), (&cond.u, &full.u), (&cond.zeta, &full.zeta)] {
            let diff = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            prop_assert!(diff <= 1e-10 * scale);
        }
    }

    #[test]
    fn eoc_recovers_power_laws(p in 0.5..3.0f64, c in 0.1..10.0f64, h0 in 0.1..1.0f64) {
        let series: Vec<(f64, f64)> = (0..4).map(|k| { let h = h0 / 2f64.powi(k); (h, c * h.powf(p)) }).collect();
        for r in eoc(&series) {
            prop_assert!((r - p).abs() < 1e-12);
        }
    }

    #[test]
    fn float_format_round_trips(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
