//! Influence spread and outward influence estimation under the
//! independent cascade model.
//!
//! The crate covers the full pipeline: probabilistic graphs, an exhaustive
//! enumeration oracle for tiny instances, forward and importance cascade
//! samplers, stopping-rule mean estimators, reverse outward sketches and
//! influence maximization with sample-dependent bounds.

pub mod error;
pub mod estimators;
pub mod exact;
pub mod graph;
pub mod im;
pub mod mean;
pub mod numeric;
pub mod rng;
pub mod rois;
pub mod sampler;

pub use error::{Error, Result};
pub use graph::{load_edge_list, NodeId, ProbabilisticGraph, SeedSet, WeightingModel};
pub use mean::{EstimationResult, RunOptions, Termination};
pub use rng::RandomStream;
