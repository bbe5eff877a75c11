use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use viewfuse::deepwalk::{read_view, write_view};
use viewfuse::graph::{load_labels_any, write_labels};
use viewfuse::pipeline::{emit_reports, Experiment, PipelineConfig};
use viewfuse::tensor::{extract_embedding, parafac2_fit, write_model, FitOptions, ViewSet};
use viewfuse::{clustering_accuracy, nmi};

#[derive(Parser, Debug)]
#[command(name = "viewfuse", version, about = "Ensemble DeepWalk embeddings fused with PARAFAC2")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one DeepWalk view per configured dimension and dump them.
    Views,
    /// Fit PARAFAC2 to dumped views and write the model and fused embedding.
    Fit {
        /// View files in the `N D` dump format.
        #[arg(required = true)]
        views: Vec<PathBuf>,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 500)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the full experiment: baselines, rank sweep, CSV reports.
    Sweep,
    /// Score a predicted labels file against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth labels; defaults to the config's `labels`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

impl Common {
    fn load_config(&self) -> Result<PipelineConfig> {
        let path = self
            .config
            .as_ref()
            .context("this subcommand needs --config <path>")?;
        let mut cfg = PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        if let Some(out) = &self.out {
            return Ok(out.clone());
        }
        match &self.config {
            Some(_) => Ok(self.load_config()?.out),
            None => Ok(PathBuf::from("out")),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn views(common: &Common) -> Result<()> {
    let cfg = common.load_config()?;
    let exp = Experiment::prepare(&cfg)?;
    create_dir(&cfg.out)?;
    for (m, view) in exp.views.iter().enumerate() {
        let path = cfg.out.join(format!("view_{m}_d{}.txt", view.dim()));
        write_view(&path, &view.matrix)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn fit(common: &Common, files: &[PathBuf], rank: usize, max_sweeps: usize, tol: f64) -> Result<()> {
    let views = files
        .iter()
        .map(|p| read_view(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let data = ViewSet::new(views)?;
    let seed = match (common.seed, &common.config) {
        (Some(s), _) => s,
        (None, Some(_)) => common.load_config()?.seed,
        (None, None) => 0,
    };
    let opts = FitOptions {
        max_sweeps,
        rel_tol: tol,
        seed,
        ..FitOptions::default()
    };
    let fit = parafac2_fit(&data, rank, &opts)?;
    let out = common.out_dir()?;
    create_dir(&out)?;
    write_model(out.join("model.txt"), &fit.model)?;
    write_view(out.join("embedding.txt"), &extract_embedding(&fit.model))?;
    println!(
        "rank {rank}: {} sweeps, objective {:e}, relative {:e}, converged {}",
        fit.trace.len(),
        fit.final_objective(),
        fit.final_objective() / data.total_sq_norm(),
        fit.converged
    );
    Ok(())
}

fn sweep(common: &Common) -> Result<()> {
    let cfg = common.load_config()?;
    let exp = Experiment::prepare(&cfg)?;
    let report = exp.sweep()?;
    emit_reports(&report, &cfg.out)?;
    for (m, r) in exp.single_views()?.iter().enumerate() {
        write_labels(cfg.out.join(format!("labels_view_{m}_d{}.txt", r.dim)), &r.labels)?;
    }
    if let Some(b) = report.best_rank() {
        println!(
            "best rank {}: accuracy {:.4}, nmi {:.4}",
            b.rank,
            b.accuracy.unwrap_or(f64::NAN),
            b.nmi.unwrap_or(f64::NAN)
        );
    }
    if let Some(b) = report.best_view() {
        println!("best single view d={}: accuracy {:.4}, nmi {:.4}", b.dim, b.accuracy, b.nmi);
    }
    println!("reports written to {}", cfg.out.display());
    Ok(())
}

fn eval(common: &Common, pred: &Path, truth: Option<&Path>) -> Result<()> {
    let truth_path = match truth {
        Some(t) => t.to_path_buf(),
        None => common.load_config().context("no --truth given")?.labels,
    };
    let p = load_labels_any(pred)?;
    let t = load_labels_any(&truth_path)?;
    if p.len() != t.len() {
        bail!("{} predicted labels vs {} true labels", p.len(), t.len());
    }
    println!("accuracy {:.4}", clustering_accuracy(&p, &t)?);
    println!("nmi {:.4}", nmi(&p, &t)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Views => views(&cli.common),
        Command::Fit {
            views,
            rank,
            max_sweeps,
            tol,
        } => fit(&cli.common, views, *rank, *max_sweeps, *tol),
        Command::Sweep => sweep(&cli.common),
        Command::Eval { pred, truth } => eval(&cli.common, pred, truth.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
