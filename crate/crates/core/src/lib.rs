//! Numerical toolkit for the resource theory of quantum invasiveness.
//!
//! - [`qmath`]: small dense complex linear algebra, states and observables.
//! - [`channels`]: Kraus channels, free (incoherent) channels, random sampling.
//! - [`witness`]: the two-experiment invasiveness witness with control runs.
//! - [`estimation`]: classical and quantum Fisher information of `Φ∘η_θ`.
//! - [`axioms`]: randomized certification of the quantifier axioms.

pub mod axioms;
pub mod channels;
pub mod error;
pub mod estimation;
pub mod qmath;
pub mod random;
pub mod witness;

pub use error::{Error, Result};
