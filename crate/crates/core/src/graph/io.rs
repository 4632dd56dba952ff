//! Graph file set.
//!
//! All files are UTF-8 with LF line endings:
//! - `graph.edges`: one `u<TAB>v[<TAB>w]` per line, 0-indexed, undirected;
//!   the loader symmetrizes and deduplicates keeping the maximum weight and
//!   defaults the weight to 1.
//! - `features.csv`: row i holds the comma-separated features of node i; the
//!   row count defines the node count.
//! - `labels.csv`: one integer class id per line (optional file).
//! - `splits.json`: object with integer arrays `train`, `val`, `test`
//!   (optional file).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{real, Float};

use super::Graph;

/// Train/validation/test node index sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn parse_error(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

fn load_features<T: Float>(path: &Path) -> Result<DenseMatrix<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<T> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map(real::<T>)
                    .map_err(|e| parse_error(path, idx + 1, format!("bad float {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_error(
                    path,
                    idx + 1,
                    format!("row has {} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(DenseMatrix::from_rows(&rows))
}

fn load_edges<T: Float>(path: &Path) -> Result<Vec<(usize, usize, T)>> {
    let text = std::fs::read_to_string(path)?;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_error(
                path,
                idx + 1,
                format!("expected 'u<TAB>v[<TAB>w]', got {} fields", fields.len()),
            ));
        }
        let u = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_error(path, idx + 1, format!("bad node id {:?}: {e}", fields[0])))?;
        let v = fields[1]
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_error(path, idx + 1, format!("bad node id {:?}: {e}", fields[1])))?;
        let w = if fields.len() == 3 {
            let raw = fields[2].trim().parse::<f64>().map_err(|e| {
                parse_error(path, idx + 1, format!("bad weight {:?}: {e}", fields[2]))
            })?;
            if !(raw > 0.0) {
                return Err(parse_error(
                    path,
                    idx + 1,
                    format!("weight must be positive, got {raw}"),
                ));
            }
            real::<T>(raw)
        } else {
            T::one()
        };
        edges.push((u, v, w));
    }
    Ok(edges)
}

fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let label = line
            .trim()
            .parse::<usize>()
            .map_err(|e| parse_error(path, idx + 1, format!("bad label {line:?}: {e}")))?;
        labels.push(label);
    }
    Ok(labels)
}

/// Load a graph file set from `dir`. `features.csv` and `graph.edges` are
/// required; `labels.csv` and `splits.json` are optional.
pub fn load_graph_dir<T: Float>(dir: &Path) -> Result<(Graph<T>, Option<Splits>)> {
    let features = load_features::<T>(&dir.join("features.csv"))?;
    let n = features.rows();
    let edges = load_edges::<T>(&dir.join("graph.edges"))?;

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        let l = load_labels(&labels_path)?;
        if l.len() != n {
            return Err(parse_error(
                &labels_path,
                l.len() + 1,
                format!("{} labels for {} nodes", l.len(), n),
            ));
        }
        Some(l)
    } else {
        None
    };

    let splits_path = dir.join("splits.json");
    let splits = if splits_path.exists() {
        let text = std::fs::read_to_string(&splits_path)?;
        let s: Splits = serde_json::from_str(&text)?;
        for (&idx, name) in s
            .train
            .iter()
            .map(|i| (i, "train"))
            .chain(s.val.iter().map(|i| (i, "val")))
            .chain(s.test.iter().map(|i| (i, "test")))
        {
            if idx >= n {
                return Err(Error::InvalidArgument(format!(
                    "splits.json: {name} index {idx} out of bounds for {n} nodes"
                )));
            }
        }
        Some(s)
    } else {
        None
    };

    let graph = Graph::build(n, &edges, features, labels)?;
    Ok((graph, splits))
}

/// Write a graph file set into `dir` (created if absent).
pub fn save_graph_dir<T: Float>(
    dir: &Path,
    graph: &Graph<T>,
    splits: Option<&Splits>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut edges_text = String::new();
    for &(u, v, w) in graph.edges() {
        edges_text.push_str(&format!("{u}\t{v}\t{}\n", w.to_f64_lossy()));
    }
    std::fs::write(dir.join("graph.edges"), edges_text)?;

    let features = graph.features();
    let mut feat_text = String::new();
    for i in 0..features.rows() {
        let row: Vec<String> = features
            .row(i)
            .iter()
            .map(|v| format!("{}", v.to_f64_lossy()))
            .collect();
        feat_text.push_str(&row.join(","));
        feat_text.push('\n');
    }
    std::fs::write(dir.join("features.csv"), feat_text)?;

    if let Some(labels) = graph.labels() {
        let mut label_text = String::new();
        for &l in labels {
            label_text.push_str(&format!("{l}\n"));
        }
        std::fs::write(dir.join("labels.csv"), label_text)?;
    }

    if let Some(s) = splits {
        std::fs::write(dir.join("splits.json"), serde_json::to_string_pretty(s)?)?;
    }
    Ok(())
}
