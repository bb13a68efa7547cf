//! Bandwidth-aware decentralized optimization.
//!
//! The crate covers the whole planning and simulation stack:
//!
//! * [`graph`]: topologies, exact min cuts, cut trees and multigraph expansion.
//! * [`packing`]: edge-disjoint Steiner tree packings and their verifier.
//! * [`selection`]: choosing the fastest worker subset from the cut tree.
//! * [`analyzer`]: closed-form time complexities of the SGD variants.
//! * [`sim`]: a deterministic fluid-flow network and compute simulator.
//! * [`optim`]: simulated Grace, Leon, synchronous and single-worker SGD.

pub mod analyzer;
pub mod graph;
pub mod optim;
pub mod packing;
pub mod selection;
pub mod sim;
