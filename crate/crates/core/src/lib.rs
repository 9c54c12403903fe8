//! Symbolic-numeric toolkit for nonlinear differential-algebraic control
//! systems (DACS) of the form E(x)ẋ = F(x) + G(x)u.
//!
//! The pipeline: load a system ([`model`]), reduce it to its locally maximal
//! controlled invariant submanifold ([`reduction`]), attach a driving-variable
//! explicitation ([`explicitation`]), examine the linearizability
//! distributions ([`geometry`]), decide internal/external feedback
//! linearizability and construct the linearizing transformation and canonical
//! target ([`linearize`]), and verify everything numerically ([`sim`]).

pub mod config;
pub mod expr;
pub mod model;
#[cfg(test)]
mod model_tests;
pub mod ratmat;
pub mod reduction;
#[cfg(test)]
mod reduction_tests;
pub mod symmat;
#[cfg(test)]
mod symmat_tests;
pub mod wong;

pub use config::Config;
