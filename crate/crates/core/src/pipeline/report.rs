//! Sweep results and their CSV / provenance files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const RANK_SWEEP_CSV: &str = "rank_sweep.csv";
pub const METHOD_COMPARISON_CSV: &str = "method_comparison.csv";
pub const RUN_META: &str = "run_meta.json";

const RANK_HEADER: &str = "rank,accuracy,nmi,views_used";
const METHOD_HEADER: &str = "method,dim_or_rank,accuracy,nmi";
const METHOD_SINGLE: &str = "deepwalk";
const METHOD_ENSEMBLE: &str = "ensemble";

/// One rank of the ensemble sweep. Scores are `None` when no view is wide
/// enough for the rank (the row is infeasible).
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub rank: usize,
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub views_used: usize,
}

impl RankRow {
    pub fn is_feasible(&self) -> bool {
        self.accuracy.is_some()
    }
}

/// Single-view DeepWalk baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRow {
    pub dim: usize,
    pub accuracy: f64,
    pub nmi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub ranks: Vec<RankRow>,
    pub views: Vec<ViewRow>,
    pub provenance: Provenance,
}

/// Highest accuracy, then highest NMI, then the earliest row.
fn pick_best<'a, T>(rows: impl Iterator<Item = (&'a T, f64, f64)>) -> Option<&'a T>
where
    T: 'a,
{
    rows.fold(None, |best: Option<(&T, f64, f64)>, cand| match best {
        Some(b) if (b.1, b.2) >= (cand.1, cand.2) => Some(b),
        _ => Some(cand),
    })
    .map(|b| b.0)
}

impl SweepReport {
    pub fn best_rank(&self) -> Option<&RankRow> {
        pick_best(
            self.ranks
                .iter()
                .filter_map(|r| Some((r, r.accuracy?, r.nmi?))),
        )
    }

    pub fn best_view(&self) -> Option<&ViewRow> {
        pick_best(self.views.iter().map(|v| (v, v.accuracy, v.nmi)))
    }

    pub fn rank_sweep_csv(&self) -> String {
        let mut out = format!("{RANK_HEADER}\n");
        for r in &self.ranks {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.rank,
                fmt_opt(r.accuracy),
                fmt_opt(r.nmi),
                r.views_used
            ));
        }
        out
    }

    pub fn method_comparison_csv(&self) -> String {
        let mut out = format!("{METHOD_HEADER}\n");
        for v in &self.views {
            out.push_str(&format!("{METHOD_SINGLE},{},{},{}\n", v.dim, v.accuracy, v.nmi));
        }
        for r in &self.ranks {
            if let (Some(a), Some(n)) = (r.accuracy, r.nmi) {
                out.push_str(&format!("{METHOD_ENSEMBLE},{},{a},{n}\n", r.rank));
            }
        }
        out
    }

    pub fn run_meta(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"config_hash\": \"{}\",\n", self.provenance.config_hash));
        out.push_str(&format!("  \"seed\": {},\n", self.provenance.seed));
        if let Some(b) = self.best_rank() {
            out.push_str(&format!("  \"best_rank\": {},\n", b.rank));
        }
        if let Some(b) = self.best_view() {
            out.push_str(&format!("  \"best_view_dim\": {},\n", b.dim));
        }
        out.push_str(&format!("  \"version\": \"{}\"\n}}\n", env!("CARGO_PKG_VERSION")));
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the two CSVs and the provenance file into `dir`, creating it.
pub fn emit_reports(report: &SweepReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (RANK_SWEEP_CSV, report.rank_sweep_csv()),
        (METHOD_COMPARISON_CSV, report.method_comparison_csv()),
        (RUN_META, report.run_meta()),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

fn csv_rows<'a>(text: &'a str, header: &str, path: &Path) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected header {header:?}"),
            })
        }
    }
    Ok(lines.map(|(i, l)| (i + 1, l.split(',').collect())).collect())
}

fn field<T: std::str::FromStr>(s: &str, path: &Path, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad field {s:?}"),
    })
}

fn wrong_width(path: &Path, line: usize, found: usize) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected 4 fields, found {found}"),
    }
}

fn opt_field(s: &str, path: &Path, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, path, line).map(Some)
    }
}

fn meta_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let needle = format!("\"{key}\":");
    let line = text.lines().find(|l| l.trim_start().starts_with(&needle))?;
    let v = line.split_once(':')?.1.trim().trim_end_matches(',');
    Some(v.trim_matches('"'))
}

/// Reads back what `emit_reports` wrote.
pub fn read_reports(dir: impl AsRef<Path>) -> Result<SweepReport> {
    let dir = dir.as_ref();
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map(|t| (p.clone(), t)).map_err(|e| Error::io(p, e))
    };

    let (path, text) = read(RANK_SWEEP_CSV)?;
    let mut ranks = Vec::new();
    for (line, f) in csv_rows(&text, RANK_HEADER, &path)? {
        if f.len() != 4 {
            return Err(wrong_width(&path, line, f.len()));
        }
        ranks.push(RankRow {
            rank: field(f[0], &path, line)?,
            accuracy: opt_field(f[1], &path, line)?,
            nmi: opt_field(f[2], &path, line)?,
            views_used: field(f[3], &path, line)?,
        });
    }

    let (path, text) = read(METHOD_COMPARISON_CSV)?;
    let mut views = Vec::new();
    for (line, f) in csv_rows(&text, METHOD_HEADER, &path)? {
        if f.len() != 4 {
            return Err(wrong_width(&path, line, f.len()));
        }
        if f[0] == METHOD_SINGLE {
            views.push(ViewRow {
                dim: field(f[1], &path, line)?,
                accuracy: field(f[2], &path, line)?,
                nmi: field(f[3], &path, line)?,
            });
        }
    }

    let (path, text) = read(RUN_META)?;
    let missing = |k: &str| Error::Parse {
        path: path.clone(),
        line: 0,
        msg: format!("missing {k}"),
    };
    let config_hash = meta_value(&text, "config_hash").ok_or_else(|| missing("config_hash"))?;
    let seed = meta_value(&text, "seed").ok_or_else(|| missing("seed"))?;
    Ok(SweepReport {
        ranks,
        views,
        provenance: Provenance {
            config_hash: config_hash.to_string(),
            seed: field(seed, &path, 0)?,
        },
    })
}
