//! Variable-count invariants and sharp decoupling exponents for tuples of
//! quadratic forms.

pub mod exponent;
pub mod forms;
pub mod harness;
pub mod linalg;
pub mod numvar;
pub mod parser;
