//! Deciding whether a set of reduced density matrices of a multipartite
//! quantum system is compatible with a single global state.
//!
//! The answer is constructive in both directions: a compatible set comes
//! back with a reconstructed global state, an incompatible set with a
//! witness certificate `(W₁,…,Wₙ)` whose pairing against the marginals is
//! negative and which any third party can verify with dense linear algebra
//! alone. Variants cover partially known marginals, bosonic/fermionic
//! systems (N-representability) and ground-state energies of two-body
//! Hamiltonians.

pub mod basis;
pub mod compat;
pub mod error;
pub mod identical;
pub mod io;
pub mod marginal;
pub mod oracle;
pub mod sdp;
pub mod tensor;
pub mod witness;

pub use error::{Error, Result};
pub use tensor::{DensityState, HermitianOperator, SystemShape};
