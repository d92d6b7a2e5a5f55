//! Self-adjoint extensions of `-d²/dx² + V(x)` on `[-a, a]` (units `ħ = 2m = 1`).
//!
//! The pipeline runs potential → deficiency basis → extension map
//! `U ↔ 𝒰` → classification of `𝒰` → spectrum of the chosen extension.

pub mod bcclassify;
pub mod deficiency;
pub mod error;
pub mod extmap;
pub mod io;
pub mod linalg;
pub mod odesolve;
pub mod potential;
pub mod spectrum;
pub mod verify;

pub use bcclassify::{
    apply_bc, classify, synthesize, BcFamily, BcInput, BcName, BoundaryCondition, Case,
};
pub use deficiency::{solve_even_odd, solve_orthonormal_pair, DeficiencyBasis, ParityMode};
pub use error::{Error, Result};
pub use extmap::{forward_map, forward_map_general, inverse_map, MapPair};
pub use linalg::{Mat2, Unitary2, C64};
pub use odesolve::{l2_inner, OdeSolution, Tolerances};
pub use potential::{Potential, PotentialKind};
pub use spectrum::{find_eigenvalues, SpectrumOptions, SpectrumResult};
