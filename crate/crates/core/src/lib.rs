//! Random regular graphs on a laptop: exact samplers, exhaustive small-`n`
//! oracles, exact counters, Monte Carlo estimators and constructive couplings
//! between uniform regular graphs and unions of matchings.

pub mod canon;
pub mod config;
pub mod counting;
pub mod coupling;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod measure;
pub mod oracle;
pub mod report;
pub mod suite;
pub mod samplers;
pub mod stats;

pub use canon::{canonical_form, canonical_graph, canonical_key, CanonicalKey};
pub use config::Caps;
pub use error::{Error, Result};
pub use graph::{DegreeSequence, EdgeSet, Graph};
pub use measure::FiniteMeasure;
pub use oracle::{ClassDistribution, Distribution, MeasureExpr};
pub use samplers::SeededStream;
