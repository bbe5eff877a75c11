//! Ensemble node embeddings.
//!
//! DeepWalk is run at several embedding sizes; the resulting views are fused
//! with a PARAFAC2 decomposition whose shared node factor becomes the
//! ensemble embedding, which is then scored by k-means against ground truth.
//!
//! Modules follow the data flow: [`graph`] -> [`deepwalk`] -> [`tensor`] ->
//! [`clustering`] -> [`metrics`], orchestrated by [`pipeline`].

pub mod clustering;
pub mod deepwalk;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod tensor;

pub use clustering::{kmeans, KmeansParams, KmeansResult};
pub use deepwalk::{
    generate_walks, make_views, sgns_loss_and_grad, train_skipgram, EmbeddingView, SgnsParams,
    WalkParams,
};
pub use error::{Error, Result};
pub use graph::{load_edge_list, load_labels, Graph, LabelVector};
pub use metrics::{clustering_accuracy, nmi, ClusterReport};
pub use pipeline::{PipelineConfig, SweepReport};
pub use tensor::{
    economy_svd, extract_embedding, objective, parafac2_fit, FitOptions, Parafac2Fit,
    Parafac2Model, ViewSet,
};
