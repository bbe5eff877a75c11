//! Flat `key = value` experiment configuration.
//!
//! Lists are comma separated, `#` starts a comment line, and relative paths
//! are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::deepwalk::{SgnsParams, WalkParams};
use crate::error::{Error, Result};
use crate::seed::fnv1a;
use crate::tensor::FitOptions;

/// The full experiment: nine DeepWalk views from d = 10 to 1000.
pub const DEFAULT_DIMS: [usize; 9] = [10, 20, 30, 40, 50, 60, 100, 200, 1000];

const KEYS: [&str; 17] = [
    "graph",
    "labels",
    "dims",
    "walks_per_node",
    "walk_length",
    "window",
    "negatives",
    "epochs",
    "lr_initial",
    "lr_final",
    "rank_min",
    "rank_max",
    "rank_step",
    "kmeans_k",
    "kmeans_restarts",
    "seed",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub graph: PathBuf,
    pub labels: PathBuf,
    pub dims: Vec<usize>,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub rank_min: usize,
    pub rank_max: usize,
    pub rank_step: usize,
    /// `None` uses the number of distinct ground-truth labels.
    pub kmeans_k: Option<usize>,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub fit: FitOptions,
}

impl PipelineConfig {
    /// Defaults for everything but the input files.
    pub fn new(graph: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        let walk = WalkParams::default();
        let sgns = SgnsParams::default();
        PipelineConfig {
            graph: graph.into(),
            labels: labels.into(),
            dims: DEFAULT_DIMS.to_vec(),
            walks_per_node: walk.walks_per_node,
            walk_length: walk.walk_length,
            window: walk.window,
            negatives: sgns.negatives,
            epochs: sgns.epochs,
            lr_initial: sgns.initial_lr,
            lr_final: sgns.final_lr,
            rank_min: 2,
            rank_max: 20,
            rank_step: 1,
            kmeans_k: None,
            kmeans_restarts: 20,
            kmeans_max_iters: 300,
            seed: 0,
            out: PathBuf::from("out"),
            fit: FitOptions::default(),
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        (self.rank_min..=self.rank_max).step_by(self.rank_step.max(1)).collect()
    }

    pub fn walk_params(&self) -> WalkParams {
        WalkParams {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            window: self.window,
            seed: 0,
        }
    }

    pub fn sgns_params(&self) -> SgnsParams {
        SgnsParams {
            dim: 1,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_lr: self.lr_initial,
            final_lr: self.lr_final,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config("dims must be a non-empty list of positive integers".into()));
        }
        if self.rank_min == 0 || self.rank_step == 0 || self.rank_max < self.rank_min {
            return Err(Error::Config(format!(
                "bad rank sweep {}..={} step {}",
                self.rank_min, self.rank_max, self.rank_step
            )));
        }
        if self.kmeans_k == Some(0) || self.kmeans_restarts == 0 {
            return Err(Error::Config("kmeans_k and kmeans_restarts must be >= 1".into()));
        }
        self.walk_params().validate()?;
        self.sgns_params().validate()
    }

    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::new("", "");
        let mut seen = [false; KEYS.len()];
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Config(format!("line {lineno}: unknown key {key:?}")))?;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::Config(format!("line {lineno}: duplicate key {key:?}")));
            }
            let bad = |what: &str| Error::Config(format!("line {lineno}: {key}: {what} {value:?}"));
            let int = || value.parse::<usize>().map_err(|_| bad("expected integer, got"));
            let real = || value.parse::<f64>().map_err(|_| bad("expected number, got"));
            let path = || {
                let p = PathBuf::from(value);
                if p.is_relative() {
                    base.join(p)
                } else {
                    p
                }
            };
            match key {
                "graph" => cfg.graph = path(),
                "labels" => cfg.labels = path(),
                "out" => cfg.out = path(),
                "dims" => {
                    cfg.dims = value
                        .split(',')
                        .map(|t| t.trim().parse::<usize>().map_err(|_| bad("bad list")))
                        .collect::<Result<_>>()?
                }
                "walks_per_node" => cfg.walks_per_node = int()?,
                "walk_length" => cfg.walk_length = int()?,
                "window" => cfg.window = int()?,
                "negatives" => cfg.negatives = int()?,
                "epochs" => cfg.epochs = int()?,
                "lr_initial" => cfg.lr_initial = real()?,
                "lr_final" => cfg.lr_final = real()?,
                "rank_min" => cfg.rank_min = int()?,
                "rank_max" => cfg.rank_max = int()?,
                "rank_step" => cfg.rank_step = int()?,
                "kmeans_k" => {
                    cfg.kmeans_k = match value {
                        "auto" | "" => None,
                        _ => Some(int()?),
                    }
                }
                "kmeans_restarts" => cfg.kmeans_restarts = int()?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("expected u64, got"))?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        for key in ["graph", "labels"] {
            let slot = KEYS.iter().position(|k| *k == key).expect("known key");
            if !seen[slot] {
                return Err(Error::Config(format!("missing required key {key:?}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Canonical `key = value` text in fixed key order.
    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(usize::to_string).collect();
        let k = self.kmeans_k.map_or("auto".to_string(), |k| k.to_string());
        let values = [
            self.graph.display().to_string(),
            self.labels.display().to_string(),
            dims.join(","),
            self.walks_per_node.to_string(),
            self.walk_length.to_string(),
            self.window.to_string(),
            self.negatives.to_string(),
            self.epochs.to_string(),
            self.lr_initial.to_string(),
            self.lr_final.to_string(),
            self.rank_min.to_string(),
            self.rank_max.to_string(),
            self.rank_step.to_string(),
            k,
            self.kmeans_restarts.to_string(),
            self.seed.to_string(),
            self.out.display().to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hash of every setting that affects results (the output dir does not).
    pub fn hash(&self) -> String {
        let text = self.to_text();
        let relevant: String = text.lines().filter(|l| !l.starts_with("out ")).collect::<Vec<_>>().join("\n");
        format!("{:016x}", fnv1a(relevant.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_all_keys() {
        let text = "\
# experiment
graph = data/k.edges
labels = /abs/k.labels
dims = 10, 20,30
walks_per_node = 4
walk_length = 12
window = 3
negatives = 2
epochs = 1
lr_initial = 0.05
lr_final = 0.001
rank_min = 2
rank_max = 6
rank_step = 2
kmeans_k = 3
kmeans_restarts = 4
seed = 99
out = results
";
        let c = PipelineConfig::parse(text, Path::new("/cfg")).unwrap();
        assert_eq!(c.graph, PathBuf::from("/cfg/data/k.edges"));
        assert_eq!(c.labels, PathBuf::from("/abs/k.labels"));
        assert_eq!(c.dims, vec![10, 20, 30]);
        assert_eq!(c.ranks(), vec![2, 4, 6]);
        assert_eq!(c.kmeans_k, Some(3));
        assert_eq!(c.seed, 99);
        assert_eq!(c.out, PathBuf::from("/cfg/results"));
        let again = PipelineConfig::parse(&c.to_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn defaults_and_errors() {
        let c = PipelineConfig::parse("graph = g\nlabels = l\n", Path::new("")).unwrap();
        assert_eq!(c.dims, DEFAULT_DIMS.to_vec());
        assert_eq!(c.ranks(), (2..=20).collect::<Vec<_>>());
        assert_eq!(c.kmeans_k, None);

        for bad in [
            "labels = l\n",
            "graph = g\nlabels = l\nbogus = 1\n",
            "graph = g\nlabels = l\ndims = 10,x\n",
            "graph = g\nlabels = l\ndims = 10,0\n",
            "graph = g\nlabels = l\nrank_min = 5\nrank_max = 2\n",
            "graph = g\nlabels = l\nseed = 1\nseed = 2\n",
            "graph = g\nlabels = l\nno equals sign\n",
        ] {
            assert!(matches!(PipelineConfig::parse(bad, Path::new("")), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = PipelineConfig::new("g", "l");
        let h = a.hash();
        a.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), h);
        a.seed = 1;
        assert_ne!(a.hash(), h);
    }
}
