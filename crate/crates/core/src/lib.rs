//! Multi-person pose association from joint candidates.
//!
//! Proposals and per-proposal joint candidates are grouped into joint nodes,
//! linked into a person-joint graph and resolved by a maximum-weight matching
//! per joint type. The crate also carries the evaluation metrics and a scene
//! simulator that stands in for the detector and pose network.

pub mod error;
pub mod geometry;
pub mod graph;
pub mod grouping;
pub mod heatmap;
pub mod joints;
pub mod metrics;
pub mod pipeline;
pub mod pose;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
