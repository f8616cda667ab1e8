//! Network-diffusion recommendation on a bipartite user-object rating graph,
//! optionally guided by a directed user-user trust graph.
//!
//! * [`graph`]: immutable sparse rating and trust graphs plus element-level
//!   similarity / transfer definitions.
//! * [`ingest`]: raw TSV parsing, rating binarization and the canonical dataset file.
//! * [`recommend`]: the GR, UCF, HC, MD, CosRA and CosRA+T scoring kernels and top-L lists.
//! * [`metrics`]: AUC, ranking score, precision, recall, F1, Hamming distance,
//!   intra-similarity and popularity.
//! * [`harness`]: k-fold cross-validation, realizations, theta/L sweeps and
//!   degree distributions of recommended objects.
//! * [`synthetic`]: seeded generators for test and benchmark graphs.

pub mod graph;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod recommend;
pub mod synthetic;

pub use graph::{GraphError, RatingGraph, ResourceVector, TrustGraph};
pub use harness::{
    make_split, run_experiment, run_fold, sweep_length, sweep_theta, ExperimentConfig, HarnessError,
    MetricsReport, SplitPlan,
};
pub use ingest::{Dataset, IngestError};
pub use metrics::{EvaluationContext, Metric, MetricError, MetricValue};
pub use recommend::{Method, MethodConfig, RecommendError, RecommendationList};
