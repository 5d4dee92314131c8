//! Executable structural operational semantics for UML activity diagrams.
//!
//! The pipeline is: parse a model document ([`model::parse_model`]),
//! expand it into a [`state::Program`], pick a [`semantics::SemanticsProfile`]
//! (see [`extensions`]), explore its state space ([`explorer::explore`]) and
//! optionally compare two profiles with [`conformance::simulates`].

pub mod conformance;
pub mod explorer;
pub mod extensions;
pub mod model;
pub mod semantics;
pub mod state;
