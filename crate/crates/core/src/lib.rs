//! Modular robot evolution under a direct (tree) and an indirect (L-system +
//! CPPN) encoding, with the quantitative-genetics tooling used to compare
//! them: mid-parent heritability regression and trait-space diversity.

pub mod analysis;
pub mod controller;
pub mod cppn;
pub mod encoding;
pub mod evolution;
pub mod morphology;
pub mod sim;
pub mod traits;
pub mod trajectory;
