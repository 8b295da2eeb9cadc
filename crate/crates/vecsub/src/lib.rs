//! Analysis and execution of multivariate vector subdivision schemes with dilation mI_d.
//!
//! Masks are finitely supported r×r matrix filters on Z^d. Algebraic verdicts (sum rules,
//! matching jets, symmetry, transforms) run in exact rational arithmetic; smoothness
//! estimation and scheme runs use floating point.

pub mod config;
pub mod constructions;
pub mod error;
pub mod filter;
pub mod fixtures;
pub mod format;
pub mod hermite;
pub mod lattice;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod scalar;
pub mod scheme;
pub mod smoothness;
pub mod spaces;
pub mod sumrules;
pub mod transform;

pub use error::{Error, Result};
pub use filter::{MatrixFilter, NormP};
pub use lattice::{DilationSpec, MultiIndex};
pub use scalar::{C64, Q};
