//! Reconstruction of causal, iso-prediction, iso-utility and decisional
//! states from observations of past configurations and future outcomes.

pub mod cluster;
pub mod compare;
pub mod decision;
pub mod density;
pub mod error;
pub mod graph;
pub mod pipelines;
pub mod reconstruct;
pub mod states;
pub mod types;
pub mod utility;

pub use compare::{distance, matches, MatchSpec, Metric};
pub use decision::DecisionSummary;
pub use density::{DensityModel, EstimatorMode};
pub use error::{Error, Result};
pub use graph::TransitionGraph;
pub use reconstruct::{reconstruct, Estimator, ReconstructConfig, Reconstruction};
pub use states::{CausalStateSet, DeterminismReport};
pub use types::{Distribution, ObservationSet, PartitionKind, Point, PointKey, SampleSet, StateInfo, StatePartition, Symbol};
pub use utility::{make_utility, UtilityKind, UtilitySpec};
