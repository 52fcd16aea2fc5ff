//! Numerical toolkit for linear Poisson structures on duals of Lie algebras,
//! their Poisson transversals, and the symplectic groupoids around them.

pub mod algebra;
pub mod dirac;
pub mod error;
pub mod fields;
pub mod frobenius;
pub mod groupoid;
pub mod io;
pub mod linalg;
pub mod report;
pub mod sample;
pub mod spray;
pub mod transversal;

pub use algebra::{LieAlgebra, LinearSubspace};
pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
pub use report::VerificationReport;
