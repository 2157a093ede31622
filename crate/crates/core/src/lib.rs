//! Quadratic twists of GL(3) L-functions, their double Dirichlet series, the
//! dihedral group of functional equations, and the residue formulas that drive
//! determination and nonvanishing statements. Everything is computed over Q, with
//! enumeration support for small quadratic fields.

pub mod dds;
pub mod error;
pub mod fegroup;
pub mod lseries;
pub mod quadchar;
pub mod residues;
pub mod ringarith;
pub mod special;
pub mod summation;

pub use error::{Error, Result};
