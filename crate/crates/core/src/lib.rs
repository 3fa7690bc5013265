//! Connectedness-aware security-constrained transmission switching.
//!
//! The crate certifies and enforces network connectedness of normal,
//! post-contingency, and post-control topologies. It builds catalogs of
//! connected induced subgraphs and of minimal small-cut disconnections,
//! synthesizes balanced injection vectors whose subgraph sums separate
//! inevitable disconnections from all others, classifies switch masks through
//! an electrical-flow feasibility program with an analytic cross-check, and
//! solves desk-scale two-stage switching problems with those criteria
//! embedded.

pub mod balance;
pub mod connectedness;
pub mod contingency;
pub mod netgraph;
pub mod scots;
pub mod solver;
