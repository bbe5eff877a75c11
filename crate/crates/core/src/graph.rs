//! Simple undirected graphs loaded from edge lists, plus ground-truth labels.
//!
//! Edge-list format: one `u v` pair of decimal node ids per line, `#` starts a
//! comment line, and an optional leading `N <count>` line fixes the node
//! count. Without it the node count is one past the largest id seen.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Undirected simple graph on nodes `0..num_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    /// Each edge once, as `(min, max)`, sorted.
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from arbitrary-orientation pairs. Duplicates collapse.
    pub fn new<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if num_nodes == 0 {
            return Err(Error::InvalidParam("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if u == v {
                return Err(Error::InvalidParam(format!("self-loop on node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adj = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph {
            num_nodes,
            edges,
            adj,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.adj[u].binary_search(&v).is_ok()
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> Result<&[usize]> {
        self.adj
            .get(u)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange {
                node: u,
                num_nodes: self.num_nodes,
            })
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj.get(u).map_or(0, Vec::len)
    }

    /// Dense binary adjacency matrix: symmetric, zero diagonal.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.num_nodes, self.num_nodes);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Parses edge-list text. `path` is only used in error messages.
    pub fn parse_edge_list(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut declared = None;
        let mut pairs = Vec::new();
        let mut max_id = None;
        let mut seen_data = false;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(
                    lineno,
                    format!("expected two fields, found {}", fields.len()),
                ));
            }
            if fields[0] == "N" {
                if seen_data {
                    return Err(parse_err(lineno, "node-count header must come first".into()));
                }
                let n: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad node count {:?}", fields[1])))?;
                declared = Some(n);
                seen_data = true;
                continue;
            }
            seen_data = true;
            let mut ids = [0usize; 2];
            for (slot, field) in ids.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad node id {field:?}")))?;
            }
            let [u, v] = ids;
            if u == v {
                return Err(Error::SelfLoop {
                    path: path.to_path_buf(),
                    line: lineno,
                    node: u,
                });
            }
            if let Some(n) = declared {
                if u.max(v) >= n {
                    return Err(parse_err(
                        lineno,
                        format!("node id {} exceeds declared count {n}", u.max(v)),
                    ));
                }
            }
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            pairs.push((u, v));
        }

        let num_nodes = match (declared, max_id) {
            (Some(n), _) => n,
            (None, Some(m)) => m + 1,
            (None, None) => 0,
        };
        if num_nodes == 0 {
            return Err(Error::EmptyGraph(path.to_path_buf()));
        }
        Graph::new(num_nodes, pairs)
    }
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Graph::parse_edge_list(&text, path)
}

/// Ground-truth community per node, ids contiguous in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParam("empty label vector".into()));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::InvalidParam(format!(
                "label ids must be contiguous from 0; {gap} is unused"
            )));
        }
        Ok(LabelVector(labels))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Reads `node_id label` pairs; every node in `0..num_nodes` must appear once.
pub fn parse_labels(text: &str, path: &Path, num_nodes: usize) -> Result<Vec<usize>> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut labels: Vec<Option<usize>> = vec![None; num_nodes];
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(
                lineno,
                format!("expected `node_id label`, found {} fields", fields.len()),
            ));
        }
        let node: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad node id {:?}", fields[0])))?;
        let label: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label {:?}", fields[1])))?;
        let slot = labels.get_mut(node).ok_or_else(|| {
            parse_err(lineno, format!("node {node} out of range (N = {num_nodes})"))
        })?;
        if slot.replace(label).is_some() {
            return Err(parse_err(lineno, format!("node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(node, l)| {
            l.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("node {node} has no label"),
            })
        })
        .collect()
}

pub fn load_labels(path: impl AsRef<Path>, num_nodes: usize) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LabelVector::new(parse_labels(&text, path, num_nodes)?)
}

/// Labels file with no fixed node count: node count is one past the largest id.
pub fn load_labels_any(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let max_node = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_whitespace().next()?.parse::<usize>().ok())
        .max()
        .ok_or_else(|| Error::EmptyGraph(PathBuf::from(path)))?;
    parse_labels(&text, path, max_node + 1)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 6);
    for (node, l) in labels.iter().enumerate() {
        out.push_str(&format!("{node} {l}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
