//! Reference-triangle basis functions and exact integration formulas.
//!
//! The reference triangle is `T̂ = {x ≥ 0, y ≥ 0, x + y ≤ 1}` with vertices
//! `(0,0)`, `(1,0)`, `(0,1)`, so the barycentric coordinates are
//! `λ₁ = 1 − x − y`, `λ₂ = x`, `λ₃ = y`.

use crate::quadrature::QuadratureRule;

/// Normalization of the cubic bubble `c_b·λ₁λ₂λ₃` so that it is one at the
/// barycenter.
pub const BUBBLE_SCALE: f64 = 27.0;

/// `∫_T λ₁^a λ₂^b λ₃^c = 2|T| a! b! c! / (a + b + c + 2)!`.
pub fn barycentric_integral(a: u32, b: u32, c: u32, area: f64) -> f64 {
    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }
    2.0 * area * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
}

/// Values and reference gradients of every local function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefBasis {
    pub hat: [f64; 3],
    pub hat_grad: [[f64; 2]; 3],
    pub dual: [f64; 3],
    pub dual_grad: [[f64; 2]; 3],
    pub bubble: f64,
    pub bubble_grad: [f64; 2],
}

const HAT_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Dual function of local vertex `k` in barycentric form: `4λₖ − 1`.
/// On `T̂` this is `3 − 4x − 4y`, `4x − 1` and `4y − 1`.
#[inline]
pub fn dual_from_bary(bary: &[f64; 3], k: usize) -> f64 {
    4.0 * bary[k] - 1.0
}

#[inline]
pub fn bubble_from_bary(bary: &[f64; 3]) -> f64 {
    BUBBLE_SCALE * bary[0] * bary[1] * bary[2]
}

pub fn eval_basis(x: f64, y: f64) -> RefBasis {
    let bary = [1.0 - x - y, x, y];
    let mut dual_grad = [[0.0; 2]; 3];
    for (k, g) in dual_grad.iter_mut().enumerate() {
        *g = [4.0 * HAT_GRAD[k][0], 4.0 * HAT_GRAD[k][1]];
    }
    let [l1, l2, l3] = bary;
    let mut bubble_grad = [0.0; 2];
    for d in 0..2 {
        bubble_grad[d] = BUBBLE_SCALE
            * (HAT_GRAD[0][d] * l2 * l3 + HAT_GRAD[1][d] * l1 * l3 + HAT_GRAD[2][d] * l1 * l2);
    }
    RefBasis {
        hat: bary,
        hat_grad: HAT_GRAD,
        dual: [0, 1, 2].map(|k| dual_from_bary(&bary, k)),
        dual_grad,
        bubble: bubble_from_bary(&bary),
        bubble_grad,
    }
}

/// Largest deviation of `∫_T̂ μ̂ᵢ φ̂ⱼ` from `δᵢⱼ/6`, computed exactly from
/// `μ̂ᵢ = 4λᵢ − 1 = 3λᵢ − Σ_{k≠i} λₖ` with [`barycentric_integral`].
pub fn reference_biorthogonality_check() -> f64 {
    let area = 0.5;
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut value = 0.0;
            for k in 0..3 {
                let coeff = if k == i { 3.0 } else { -1.0 };
                let mut exps = [0u32; 3];
                exps[k] += 1;
                exps[j] += 1;
                value += coeff * barycentric_integral(exps[0], exps[1], exps[2], area);
            }
            let expected = if i == j { 1.0 / 6.0 } else { 0.0 };
            worst = worst.max((value - expected).abs());
        }
    }
    worst
}

/// Same quantity as [`reference_biorthogonality_check`], but integrated with
/// a quadrature rule, so both routes can be compared.
pub fn quadrature_biorthogonality_check(rule: &QuadratureRule) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let value: f64 = rule
                .iter()
                .map(|(bary, w)| 0.5 * w * dual_from_bary(bary, i) * bary[j])
                .sum();
            let expected = if i == j { 1.0 / 6.0 } else { 0.0 };
            worst = worst.max((value - expected).abs());
        }
    }
    worst
}
