//! Statistical validation of community structure.
//!
//! A partition found by a community detector is compared against partitions
//! of progressively rewired copies of the network, giving a curve of
//! Variation of Information against the perturbation level. The same curve
//! is built for a configuration-model null network, and the two curve
//! families are compared with three functional significance tests:
//! a Gaussian-process Bayes factor ([`gp`]), a marginal-FPCA
//! Anderson–Darling test ([`fpca`]) and interval-wise permutation testing
//! ([`iwt`]).

pub mod community;
pub mod compare;
pub mod error;
pub mod fpca;
pub mod generator;
pub mod gp;
pub mod graph;
pub mod iwt;
pub mod partition;
pub mod permutation;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod rewire;
pub mod rng;

pub use community::{detect, modularity, DetectorChoice};
pub use compare::{entropy, mutual_information, variation_of_information};
pub use error::{Error, Result};
pub use graph::{DegreeSequence, Graph, IngestReport};
pub use partition::Partition;
pub use rng::RngStream;
