//! Edge-list and label file formats.
//!
//! Edge lists hold one `src dst weight` triple per line (whitespace separated,
//! 0-based vertex ids); blank lines and lines starting with `#` are skipped
//! and repeated pairs have their weights summed. Label files hold one integer
//! per line, line index = vertex id.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use jointspec::{LayerGraph, MultiLayerGraph};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Access { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}: expected `src dst weight`, found {text:?}", path.display())]
    Parse { path: PathBuf, line: usize, text: String },

    #[error("{}:{line}: vertex {vertex} is out of range for {n} vertices", path.display())]
    Index { path: PathBuf, line: usize, vertex: usize, n: usize },

    #[error("{}:{line}: weight {weight} is not a finite non-negative number", path.display())]
    Value { path: PathBuf, line: usize, weight: f64 },

    #[error("{}:{line}: self-loop on vertex {vertex}", path.display())]
    SelfLoop { path: PathBuf, line: usize, vertex: usize },

    #[error("{}:{line}: expected a non-negative integer label, found {text:?}", path.display())]
    Label { path: PathBuf, line: usize, text: String },

    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: jointspec::Error },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Access { path: path.into(), source })
}

/// Meaningful lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses edge-list text; `path` only labels errors.
pub fn parse_layer(text: &str, n: usize, path: &Path) -> Result<LayerGraph, IoError> {
    let mut edges = Vec::new();
    for (line, content) in content_lines(text) {
        let parse_err = || IoError::Parse { path: path.into(), line, text: content.into() };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [src, dst, weight] = fields[..] else {
            return Err(parse_err());
        };
        let src: usize = src.parse().map_err(|_| parse_err())?;
        let dst: usize = dst.parse().map_err(|_| parse_err())?;
        let weight: f64 = weight.parse().map_err(|_| parse_err())?;
        for vertex in [src, dst] {
            if vertex >= n {
                return Err(IoError::Index { path: path.into(), line, vertex, n });
            }
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(IoError::Value { path: path.into(), line, weight });
        }
        if src == dst {
            return Err(IoError::SelfLoop { path: path.into(), line, vertex: src });
        }
        edges.push((src, dst, weight));
    }
    LayerGraph::from_edges(n, &edges).map_err(|source| IoError::Graph { path: path.into(), source })
}

pub fn load_layer(path: &Path, n: usize) -> Result<LayerGraph, IoError> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let layer = parse_layer(&read(path)?, n, path)?;
    Ok(match name {
        Some(name) => layer.with_name(name),
        None => layer,
    })
}

pub fn load_multilayer(paths: &[PathBuf], n: usize) -> Result<MultiLayerGraph, IoError> {
    let layers = paths.iter().map(|p| load_layer(p, n)).collect::<Result<Vec<_>, _>>()?;
    MultiLayerGraph::new(layers).map_err(|source| IoError::Graph {
        path: paths.first().cloned().unwrap_or_default(),
        source,
    })
}

/// Edge-list text listing every positive-weight pair once (`i < j`).
pub fn format_layer(g: &LayerGraph) -> String {
    let w = g.weights();
    let mut out = String::new();
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            if w[(i, j)] > 0.0 {
                writeln!(out, "{i} {j} {}", w[(i, j)]).expect("writing to a String");
            }
        }
    }
    out
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>, IoError> {
    content_lines(text)
        .map(|(line, content)| {
            content.parse().map_err(|_| IoError::Label { path: path.into(), line, text: content.into() })
        })
        .collect()
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>, IoError> {
    parse_labels(&read(path)?, path)
}

pub fn format_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Access { path: path.into(), source })
}
