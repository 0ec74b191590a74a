//! Simulation and verification library for the random tree grown by
//! recursively gluing a segment of length a_n at a uniform point of the
//! existing tree.
//!
//! The crate has three layers that check each other:
//!
//! * [`glue_tree`] — the exact simulator: growth, uniform marking, depths,
//!   projections, branch points and the unit-length genealogy coupling;
//! * [`exact_laws`] — closed-form finite-n laws of the same quantities
//!   (i.i.d.-sum representation, Laplace products, splitting index pmf,
//!   joint path samplers);
//! * [`limit_laws`] — the limit objects: the Laplace exponent φ_α, the
//!   self-similar jump process ξ_α, the uniform-leaf limit, the regime
//!   classifier and the unit-length height constants.
//!
//! [`mc_stats`] runs seeded, reproducible replica experiments and measures
//! KS/TV/z-score distances; [`checks`] packages the cross-validations into
//! named pass/fail reports and [`cli`] exposes them as batch commands.

pub mod checks;
pub mod cli;
pub mod exact_laws;
pub mod fenwick;
pub mod glue_tree;
pub mod limit_laws;
pub mod mc_stats;
pub mod numeric;
pub mod sequences;
pub mod tolerances;

pub use glue_tree::{GluedTree, MarkedPoint};
pub use sequences::{LengthSequence, SequenceSpec};
