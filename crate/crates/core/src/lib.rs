//! Finite elements for the clamped Reissner–Mindlin plate with Lagrange
//! multipliers for the shear stress.
//!
//! Rotations are discretized by vector P1, the deflection by P1 plus cubic
//! bubbles, and the shear multiplier by either the standard hat basis or a
//! biorthogonal (dual) basis, both modified near the boundary. The dual
//! basis makes the multiplier Gram block diagonal, so the multiplier can
//! be eliminated locally.

// NaN must fail tolerance checks, hence `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod diagnostics;
pub mod element;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod norms;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod spaces;
pub mod study;

pub use assembly::{assemble, Loads, Material, SaddleSystem};
pub use error::{Error, Result};
pub use mesh::{classify, generate_crisscross, generate_uniform_diagonal, Mesh, Point, Rect, VertexClassification};
pub use mms::{apply_mms_loads, DefaultCase, ExactFields, ManufacturedSolution};
pub use solver::{solve, solve_condensed, solve_full, PlateSolution, SolvePath};
pub use spaces::{build_multiplier, discretize, DofLayout, MultiplierBasis, MultiplierKind, Weighting};
