//! Exact construction of the graded Lie superalgebras of Cartan type
//! W, S, H, K, HO, SHO, KO, SKO over GF(p), p > 3, at finite truncation
//! parameters, and computation of their superderivation algebras by
//! exact linear algebra.

pub mod dersolve;
pub mod families;
pub mod structure;
pub mod field;
pub mod superspace;
pub mod vectorfields;
pub mod verify;
