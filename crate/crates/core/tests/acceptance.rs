//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if
//! any criterion fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rmplate::diagnostics::{
    biorthogonality_defect, diagonal_dominance, fortin_diagnostics, infsup_estimate, partition_of_unity_defect,
    ClampedPair, PolynomialPair, SkewPolynomialPair,
};
use rmplate::reference::reference_biorthogonality_check;
use rmplate::solver::relative_difference;
use rmplate::spaces::{eoc, multiplier_approximation_study};
use rmplate::study::{run_convergence_study, ConvergenceRecord, StudyConfig};
use rmplate::{
    apply_mms_loads, assemble, discretize, generate_crisscross, generate_uniform_diagonal, solve_condensed, solve_full,
    DefaultCase, Error, Loads, Material, Mesh, MultiplierKind, Rect, SolvePath, Weighting,
};

const KINDS: [MultiplierKind; 2] = [MultiplierKind::Standard, MultiplierKind::Dual];
const THICKNESSES: [f64; 3] = [0.1, 0.01, 1e-4];
const LEVELS: [usize; 4] = [4, 8, 16, 32];

type Field = (&'static str, fn(&ConvergenceRecord) -> f64);
type Probe<'a> = (&'static str, &'a dyn Fn([f64; 2]) -> f64);

struct Outcome {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>, details: Vec<String>) -> Self {
        Outcome { passed, summary: summary.into(), details }
    }
}

fn crisscross(n: usize) -> Mesh {
    generate_crisscross(n, &Rect::UNIT_SQUARE).expect("crisscross mesh")
}

fn study_records() -> (Vec<ConvergenceRecord>, f64, Vec<String>) {
    let config = StudyConfig {
        levels: LEVELS.to_vec(),
        thicknesses: THICKNESSES.to_vec(),
        kinds: KINDS.to_vec(),
        paths: vec![SolvePath::Full],
        workers: 1,
        beta_max_n: 0,
        ..StudyConfig::default()
    };
    let start = Instant::now();
    let outcome = run_convergence_study(&config).expect("study runs");
    let secs = start.elapsed().as_secs_f64();
    let failures = outcome.failures.iter().map(|f| f.to_string()).collect();
    (outcome.records, secs, failures)
}

fn finest(records: &[ConvergenceRecord], kind: MultiplierKind, t: f64) -> Option<&ConvergenceRecord> {
    records.iter().filter(|r| r.kind == kind && r.t == t).max_by_key(|r| r.n)
}

fn criterion_1(records: &[ConvergenceRecord], secs: f64, failures: &[String]) -> Outcome {
    let mut passed = failures.is_empty() && secs < 120.0;
    let mut details: Vec<String> = failures.iter().map(|f| format!("case failed: {f}")).collect();
    for kind in KINDS {
        for t in THICKNESSES {
            let Some(r) = finest(records, kind, t) else {
                passed = false;
                details.push(format!("{kind} t={t}: no record"));
                continue;
            };
            let rates = [r.eoc_phi, r.eoc_u, r.eoc_zeta_tl2].map(|e| e.unwrap_or(f64::NAN));
            let ok = rates.iter().all(|&e| e >= 0.9);
            passed &= ok;
            details.push(format!(
                "{} {kind:>4} t={t:<6} n={}->{}: eoc phi {:.3}  u {:.3}  t*zeta {:.3}",
                if ok { "ok  " } else { "FAIL" },
                r.n / 2,
                r.n,
                rates[0],
                rates[1],
                rates[2]
            ));
        }
    }
    details.push(format!("single-threaded wall time {secs:.1} s (limit 120 s)"));
    Outcome::new(passed, "convergence rates >= 0.9 on the finest transition, both kinds, all t", details)
}

fn criterion_2(records: &[ConvergenceRecord]) -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    for kind in KINDS {
        let at16: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.kind == kind && r.n == 16).collect();
        if at16.len() != THICKNESSES.len() {
            passed = false;
            details.push(format!("{kind}: missing n=16 records"));
            continue;
        }
        let fields: [Field; 2] = [("phi", |r| r.err_phi_h1), ("u", |r| r.err_u_h1)];
        for (name, f) in fields {
            let vals: Vec<f64> = at16.iter().map(|r| f(r)).collect();
            let ratio = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) / vals.iter().copied().fold(f64::INFINITY, f64::min);
            passed &= ratio < 3.0;
            details.push(format!("{kind:>4} H1 error of {name:<3} over t: max/min = {ratio:.3}"));
        }
    }
    Outcome::new(passed, "H1 errors at n=16 vary by less than a factor 3 over t", details)
}

fn criterion_3() -> Outcome {
    let reference = reference_biorthogonality_check();
    let mut passed = reference <= 1e-14;
    let mut details = vec![format!("reference deviation {reference:.2e} (tol 1e-14)")];
    for n in [1, 2, 4, 8, 16, 32] {
        let mesh = crisscross(n);
        let (_, layout, basis) = discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal).unwrap();
        let sys = assemble(&mesh, &layout, &basis, &Material::default(), 0.01, &Loads::zero()).unwrap();
        let (off, diag) = diagonal_dominance(&sys.d);
        let (goff, gdiag) = biorthogonality_defect(&mesh, &layout, &basis);
        let ok = off <= 1e-13 * diag && goff <= 1e-13 * gdiag;
        passed &= ok;
        details.push(format!("n={n:>2}: D off/diag {:.2e}, gram off/diag {:.2e}", off / diag, goff / gdiag));
    }
    Outcome::new(passed, "dual D block diagonal to 1e-13, reference biorthogonality to 1e-14", details)
}

fn criterion_4() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    let material = Material::default();
    for n in LEVELS {
        let mesh = crisscross(n);
        let (_, layout, basis) = discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal).unwrap();
        for t in THICKNESSES {
            let (loads, _) = apply_mms_loads(Arc::new(DefaultCase), &material, t).unwrap();
            let sys = assemble(&mesh, &layout, &basis, &material, t, &loads).unwrap();
            let diff = match (solve_full(&sys), solve_condensed(&sys)) {
                (Ok(f), Ok(c)) => [
                    relative_difference(&c.phi, &f.phi),
                    relative_difference(&c.u, &f.u),
                    relative_difference(&c.zeta, &f.zeta),
                ],
                (f, c) => {
                    details.push(format!("n={n} t={t}: full {:?}, condensed {:?}", f.err(), c.err()));
                    [f64::NAN; 3]
                }
            };
            let worst = diff.iter().copied().fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
            passed &= worst <= 1e-10;
            details.push(format!("n={n:>2} t={t:<6}: max relative difference {worst:.2e}"));
        }
    }
    Outcome::new(passed, "condensed and full solutions agree to 1e-10 (dual kind)", details)
}

fn criterion_5() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    let meshes: Vec<Mesh> = LEVELS.iter().map(|&n| crisscross(n)).collect();
    for kind in KINDS {
        for mesh in &meshes {
            let (_, layout, basis) = discretize(mesh, kind, &Weighting::Equal).unwrap();
            if basis.dim() != layout.dim_s() {
                passed = false;
                details.push(format!("{kind}: dim M_h {} != dim S_h {}", basis.dim(), layout.dim_s()));
            }
        }
        let constant = multiplier_approximation_study(kind, &Weighting::Equal, &|_| 1.0, &meshes).unwrap();
        let worst = constant.iter().map(|e| e.1).fold(0.0f64, f64::max);
        passed &= worst <= 1e-12;
        details.push(format!("{kind:>4} dim M_h = dim S_h on all levels; constant error {worst:.2e}"));
        let probes: [Probe; 2] = [("2+sin(x+y)", &|p| 2.0 + (p[0] + p[1]).sin()), ("x", &|p| p[0])];
        for (name, probe) in probes {
            let errs = multiplier_approximation_study(kind, &Weighting::Equal, probe, &meshes).unwrap();
            let rates = eoc(&errs);
            let last = *rates.last().unwrap();
            passed &= last >= 0.9;
            details.push(format!("{kind:>4} {name:<11} EOC {}", rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")));
        }
    }
    Outcome::new(passed, "dim M_h = dim S_h, constants to 1e-12, approximation EOC >= 0.9", details)
}

fn criterion_6() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    let meshes: Vec<Mesh> = [2, 4, 8, 16].iter().map(|&n| crisscross(n)).collect();
    for kind in KINDS {
        match infsup_estimate(&meshes, kind, &Weighting::Equal) {
            Ok(r) => {
                let ok = r.ratio() >= 0.5 && r.min() > 1e-3;
                passed &= ok;
                let betas: Vec<String> = r.values.iter().map(|v| format!("{:.4}", v.1)).collect();
                details.push(format!("{kind:>4} beta_h {} min/max {:.3}", betas.join(" "), r.ratio()));
            }
            Err(e) => {
                passed = false;
                details.push(format!("{kind}: {e}"));
            }
        }
    }
    Outcome::new(passed, "inf-sup constants over n=2..16: min/max >= 0.5, all > 1e-3", details)
}

fn criterion_7() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    let samples: [&dyn ClampedPair; 3] =
        [&PolynomialPair { a: 1.0, b: 0.0 }, &PolynomialPair { a: -0.5, b: 2.0 }, &SkewPolynomialPair];
    for n in [2, 4, 8, 16] {
        let mesh = crisscross(n);
        let (_, layout, basis) = discretize(&mesh, MultiplierKind::Standard, &Weighting::Equal).unwrap();
        match fortin_diagnostics(&mesh, &layout, &basis, &samples) {
            Ok(r) => {
                let ok = r.identity_defect <= 1e-10 && r.element_mean_defect <= 1e-12;
                passed &= ok;
                details.push(format!(
                    "n={n:>2}: identity defect {:.2e}, element-mean defect {:.2e}",
                    r.identity_defect, r.element_mean_defect
                ));
            }
            Err(e) => {
                passed = false;
                details.push(format!("n={n}: {e}"));
            }
        }
    }
    Outcome::new(passed, "Fortin identity to 1e-10 and element means to 1e-12", details)
}

fn criterion_8() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    for kind in KINDS {
        let mut worst = 0.0f64;
        for n in [1, 2, 3, 4, 8, 16, 32] {
            let mesh = crisscross(n);
            let (_, _, basis) = discretize(&mesh, kind, &Weighting::Equal).unwrap();
            worst = worst.max(partition_of_unity_defect(&mesh, &basis));
        }
        passed &= worst <= 1e-12;
        details.push(format!("{kind:>4}: max deviation {worst:.2e}"));
    }
    Outcome::new(passed, "modified multiplier bases sum to one at every quadrature point", details)
}

fn criterion_9() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    for n in [1, 2, 3, 4, 8] {
        let mesh = generate_uniform_diagonal(n, &Rect::UNIT_SQUARE).unwrap();
        // all three corners on the square's edges, decided geometrically
        let on_edge = |p: [f64; 2]| p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
        let expected: BTreeSet<usize> =
            (0..mesh.num_triangles()).filter(|&t| mesh.corners(t).iter().all(|&p| on_edge(p))).collect();
        let layout = discretize(&mesh, MultiplierKind::Dual, &Weighting::Equal);
        let ok = match layout {
            Err(Error::NoInteriorVertex { triangles }) => {
                let listed: BTreeSet<usize> = triangles.into_iter().collect();
                details.push(format!("n={n}: rejected, offending triangles {listed:?}"));
                !expected.is_empty() && listed == expected
            }
            Err(e) => {
                details.push(format!("n={n}: unexpected error {e}"));
                false
            }
            Ok(_) => {
                details.push(format!("n={n}: accepted"));
                false
            }
        };
        passed &= ok;
    }
    Outcome::new(passed, "uniform-diagonal meshes rejected, all-boundary triangles listed", details)
}

fn main() {
    faer::set_global_parallelism(faer::Par::Seq);
    let (records, secs, failures) = study_records();
    let criteria: Vec<Outcome> = vec![
        criterion_1(&records, secs, &failures),
        criterion_2(&records),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        println!("{} criterion {}: {}", if c.passed { "PASS" } else { "FAIL" }, i + 1, c.summary);
        for d in &c.details {
            println!("      {d}");
        }
        failed += usize::from(!c.passed);
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
