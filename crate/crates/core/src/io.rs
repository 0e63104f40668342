//! Reading and writing graphs, labels, features and reports.
//!
//! Edge lists are whitespace-separated `i j w` lines with 0-based indices
//! and `#` comments. Everything else is CSV.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::construct::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::mbo::MboResult;
use crate::metrics::RunBatch;
use crate::partition::Labels;

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads an edge list. The node count is one more than the largest index.
pub fn load_edge_list(path: &Path) -> Result<SparseGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    let mut n_nodes = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(path, lineno, format!("expected `i j w`, found {} fields", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad weight `{}`", fields[2])))?;
        if !w.is_finite() || w < 0.0 {
            return Err(parse_err(path, lineno, format!("weight {w} must be finite and nonnegative")));
        }
        n_nodes = n_nodes.max(i + 1).max(j + 1);
        edges.push((i, j, w));
    }
    if n_nodes == 0 {
        return Err(Error::EmptyGraph);
    }
    SparseGraph::from_edges(n_nodes, edges)
}

/// Writes each undirected edge once as `i j w` with `i < j`.
pub fn save_edge_list(path: &Path, graph: &SparseGraph) -> Result<()> {
    let mut out = create(path)?;
    let werr = |e| Error::io(path, e);
    writeln!(out, "# {} nodes, {} edges", graph.n_nodes(), graph.n_edges()).map_err(werr)?;
    for (i, j, w) in graph.edges() {
        writeln!(out, "{i} {j} {w:?}").map_err(werr)?;
    }
    out.flush().map_err(werr)
}

/// `node,label` CSV with header.
pub fn save_labels(path: &Path, labels: &Labels) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["node", "label"]).map_err(&err)?;
    for (i, l) in labels.as_slice().iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()]).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `node,label` rows (with header), in file order.
pub fn load_node_labels(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(path, line, "expected `node,label`"));
        }
        let node = record[0]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad node `{}`", &record[0])))?;
        let label = record[1]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad label `{}`", &record[1])))?;
        out.push((node, label));
    }
    Ok(out)
}

/// Loads a complete labelling; every node `0..n` must appear exactly once.
pub fn load_labels(path: &Path) -> Result<Labels> {
    let pairs = load_node_labels(path)?;
    let map: BTreeMap<usize, usize> = pairs.iter().copied().collect();
    if map.len() != pairs.len() {
        return Err(parse_err(path, 0, "a node appears more than once"));
    }
    if map.keys().enumerate().any(|(i, &k)| i != k) {
        return Err(parse_err(path, 0, "nodes must be exactly 0..n"));
    }
    Ok(Labels::new(map.into_values().collect()))
}

/// Headerless numeric CSV, one row per point.
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let rows = read_numeric_rows(path)?;
    FeatureMatrix::from_rows(&rows)
}

pub fn save_features(path: &Path, features: &FeatureMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    for row in features.rows() {
        w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(parse_err(path, line, format!("expected {first} columns, found {}", row.len())));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Dense matrix as headerless CSV, one row per node.
pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format!("{x:?}"))).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_numeric_rows(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// `iteration,balanced_tv_I,modularity` per MBO iteration.
pub fn save_trace(path: &Path, result: &MboResult, graph: &SparseGraph) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["iteration", "balanced_tv_I", "modularity"]).map_err(&err)?;
    for (it, e, q) in result.trace_rows(graph.total_weight()) {
        w.write_record([it.to_string(), format!("{e:?}"), format!("{q:?}")]).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `seed,modularity,classification,wall_time_ms`; a missing
/// classification is written as an empty field.
pub fn save_batch(path: &Path, batch: &RunBatch) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["seed", "modularity", "classification", "wall_time_ms"]).map_err(&err)?;
    for r in &batch.runs {
        w.write_record([
            r.seed.to_string(),
            format!("{:?}", r.modularity),
            r.classification.map(|c| format!("{c:?}")).unwrap_or_default(),
            format!("{:.3}", r.wall_time_ms),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
