//! End-to-end experiment: DeepWalk views, single-view baselines, and a
//! PARAFAC2 rank sweep, all scored by k-means against ground truth.

mod config;
mod report;

use std::path::Path;

use nalgebra::DMatrix;

pub use config::{PipelineConfig, DEFAULT_DIMS};
pub use report::{
    emit_reports, read_reports, Provenance, RankRow, SweepReport, ViewRow, METHOD_COMPARISON_CSV,
    RANK_SWEEP_CSV, RUN_META,
};

use crate::clustering::{kmeans, KmeansParams};
use crate::deepwalk::{make_views, EmbeddingView, SgnsParams, WalkParams};
use crate::error::Result;
use crate::graph::{load_edge_list, load_labels, Graph, LabelVector};
use crate::metrics::ClusterReport;
use crate::seed::derive_seed;
use crate::tensor::{extract_embedding, parafac2_fit, FitOptions, ViewSet};

/// Per-view baseline result.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleViewResult {
    pub dim: usize,
    pub labels: Vec<usize>,
    pub accuracy: f64,
    pub nmi: f64,
}

/// Indices of the views wide enough to carry `rank` orthonormal columns.
pub fn feasible_views(dims: &[usize], rank: usize) -> Vec<usize> {
    (0..dims.len()).filter(|&m| dims[m] >= rank).collect()
}

/// Loaded inputs and trained views for one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: PipelineConfig,
    pub graph: Graph,
    pub truth: LabelVector,
    pub views: Vec<EmbeddingView>,
}

impl Experiment {
    pub fn prepare(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let graph = load_edge_list(&config.graph)?;
        let truth = load_labels(&config.labels, graph.num_nodes())?;
        Self::from_parts(config, graph, truth)
    }

    pub fn from_parts(config: &PipelineConfig, graph: Graph, truth: LabelVector) -> Result<Self> {
        config.validate()?;
        let walk = WalkParams {
            seed: derive_seed(config.seed, "walks", 0),
            ..config.walk_params()
        };
        let sgns = SgnsParams {
            seed: derive_seed(config.seed, "sgns", 0),
            ..config.sgns_params()
        };
        let views = make_views(&graph, &config.dims, &walk, &sgns)?;
        Ok(Experiment {
            config: config.clone(),
            graph,
            truth,
            views,
        })
    }

    fn k(&self) -> usize {
        self.config.kmeans_k.unwrap_or_else(|| self.truth.num_classes())
    }

    fn cluster(&self, points: &DMatrix<f64>, stage: &str, index: u64) -> Result<ClusterReport> {
        let params = KmeansParams {
            restarts: self.config.kmeans_restarts,
            max_iters: self.config.kmeans_max_iters,
            ..KmeansParams::new(self.k(), derive_seed(self.config.seed, stage, index))
        };
        let labels = kmeans(points, &params)?.labels;
        ClusterReport::new(labels, self.truth.as_slice().to_vec())
    }

    pub fn single_views(&self) -> Result<Vec<SingleViewResult>> {
        self.views
            .iter()
            .enumerate()
            .map(|(m, view)| {
                let r = self.cluster(&view.matrix, "kmeans-view", m as u64)?;
                Ok(SingleViewResult {
                    dim: view.dim(),
                    labels: r.predicted,
                    accuracy: r.accuracy,
                    nmi: r.nmi,
                })
            })
            .collect()
    }

    /// Fits, extracts and clusters the ensemble embedding at `rank`.
    /// `None` when no view is wide enough or the rank exceeds the node count.
    pub fn ensemble_at(&self, rank: usize) -> Result<Option<ClusterReport>> {
        let dims: Vec<usize> = self.views.iter().map(EmbeddingView::dim).collect();
        let used = feasible_views(&dims, rank);
        let dropped: Vec<usize> = (0..dims.len()).filter(|m| !used.contains(m)).map(|m| dims[m]).collect();
        if !dropped.is_empty() {
            log::info!("rank {rank}: excluding views with dims {dropped:?}");
        }
        if used.is_empty() || rank > self.graph.num_nodes() {
            log::warn!("rank {rank}: infeasible, no view has at least {rank} columns");
            return Ok(None);
        }
        let data = ViewSet::new(used.iter().map(|&m| self.views[m].matrix.clone()).collect())?;
        let opts = FitOptions {
            seed: derive_seed(self.config.seed, "parafac2", rank as u64),
            ..self.config.fit
        };
        let fit = parafac2_fit(&data, rank, &opts)?;
        let embedding = extract_embedding(&fit.model);
        self.cluster(&embedding, "kmeans-rank", rank as u64).map(Some)
    }

    pub fn sweep(&self) -> Result<SweepReport> {
        let dims: Vec<usize> = self.views.iter().map(EmbeddingView::dim).collect();
        let views = self
            .single_views()?
            .into_iter()
            .map(|r| ViewRow {
                dim: r.dim,
                accuracy: r.accuracy,
                nmi: r.nmi,
            })
            .collect();
        let ranks = self
            .config
            .ranks()
            .into_iter()
            .map(|rank| {
                let rep = self.ensemble_at(rank)?;
                Ok(RankRow {
                    rank,
                    accuracy: rep.as_ref().map(|r| r.accuracy),
                    nmi: rep.as_ref().map(|r| r.nmi),
                    views_used: feasible_views(&dims, rank).len(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(SweepReport {
            ranks,
            views,
            provenance: Provenance {
                config_hash: self.config.hash(),
                seed: self.config.seed,
            },
        })
    }
}

pub fn run_single_views(config: &PipelineConfig) -> Result<Vec<SingleViewResult>> {
    Experiment::prepare(config)?.single_views()
}

/// Runs the full experiment and writes its reports to `config.out`.
pub fn run_ensemble_sweep(config: &PipelineConfig) -> Result<SweepReport> {
    let report = Experiment::prepare(config)?.sweep()?;
    emit_reports(&report, &config.out)?;
    Ok(report)
}

/// Same as [`run_ensemble_sweep`] with the reports written to `dir`.
pub fn run_ensemble_sweep_into(config: &PipelineConfig, dir: &Path) -> Result<SweepReport> {
    let report = Experiment::prepare(config)?.sweep()?;
    emit_reports(&report, dir)?;
    Ok(report)
}
