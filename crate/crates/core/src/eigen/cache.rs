//! Eigenbasis cache keyed by `(graph hash, γ, n_eig)`.
//!
//! On-disk layout, all fields little-endian:
//!
//! ```text
//! magic        8 bytes  b"BTVEIG01"
//! n_nodes      u64
//! n_eig        u64
//! gamma        f64
//! lambda_1     f64
//! m_inf_bound  f64
//! eigenvalues  n_eig × f64
//! residuals    n_eig × f64
//! eigenvectors n_nodes × n_eig × f64, column-major
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use super::{smallest_eigenpairs, EigenBasis, EigenOptions, OperatorM};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

pub const CACHE_MAGIC: &[u8; 8] = b"BTVEIG01";

type Key = (String, u64, usize);

/// In-memory (and optionally on-disk) store of computed bases.
///
/// `computations()` counts actual eigensolves, which makes basis reuse
/// observable.
#[derive(Debug, Default)]
pub struct EigenCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<Key, Arc<EigenBasis>>>,
    computations: AtomicUsize,
}

impl EigenCache {
    pub fn in_memory() -> Self {
        EigenCache::default()
    }

    /// Also persists bases under `dir`, one file per key.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        EigenCache {
            dir: Some(dir.into()),
            ..EigenCache::default()
        }
    }

    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::SeqCst)
    }

    fn file_for(&self, key: &Key) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| {
            d.join(format!(
                "{}-g{:016x}-n{}.eig",
                key.0, key.1, key.2
            ))
        })
    }

    pub fn get_or_compute(
        &self,
        graph: &SparseGraph,
        gamma: f64,
        n_eig: usize,
        opts: &EigenOptions,
    ) -> Result<Arc<EigenBasis>> {
        let key = (graph.content_hash(), gamma.to_bits(), n_eig);
        if let Some(hit) = self.memory.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        if let Some(path) = self.file_for(&key) {
            if path.exists() {
                let basis = read_basis(&path)?;
                if basis.n_nodes() == graph.n_nodes() && basis.n_eig() == n_eig && basis.gamma == gamma {
                    let basis = Arc::new(basis);
                    self.memory.lock().unwrap().insert(key, Arc::clone(&basis));
                    return Ok(basis);
                }
                log::warn!("ignoring stale eigenbasis cache file {}", path.display());
            }
        }
        let op = OperatorM::new(graph, gamma)?;
        let basis = Arc::new(smallest_eigenpairs(&op, n_eig, opts)?);
        self.computations.fetch_add(1, Ordering::SeqCst);
        if let Some(path) = self.file_for(&key) {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            write_basis(&path, &basis)?;
        }
        self.memory.lock().unwrap().insert(key, Arc::clone(&basis));
        Ok(basis)
    }
}

pub fn write_basis(path: &Path, basis: &EigenBasis) -> Result<()> {
    let n = basis.n_nodes();
    let k = basis.n_eig();
    let mut buf = Vec::with_capacity(48 + 8 * (2 * k + n * k));
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(k as u64).to_le_bytes());
    for x in [basis.gamma, basis.lambda_1, basis.m_inf_bound] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for &x in basis.eigenvalues.iter().chain(&basis.residuals) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for &x in basis.eigenvectors.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    // Write to a sibling temp file first so readers never see a partial file.
    let tmp = path.with_extension("eig.tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_basis(path: &Path) -> Result<EigenBasis> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Cache {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 48 || &bytes[..8] != CACHE_MAGIC {
        return Err(bad("missing magic header"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().unwrap() };
    let n = u64::from_le_bytes(word(1)) as usize;
    let k = u64::from_le_bytes(word(2)) as usize;
    let expected = 48 + 8 * (2 * k + n * k);
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let f = |i: usize| f64::from_le_bytes(word(i));
    let gamma = f(3);
    let lambda_1 = f(4);
    let m_inf_bound = f(5);
    let eigenvalues = (0..k).map(|i| f(6 + i)).collect();
    let residuals = (0..k).map(|i| f(6 + k + i)).collect();
    let vecs: Vec<f64> = (0..n * k).map(|i| f(6 + 2 * k + i)).collect();
    Ok(EigenBasis {
        eigenvalues,
        eigenvectors: DMatrix::from_vec(n, k, vecs),
        lambda_1,
        m_inf_bound,
        gamma,
        residuals,
    })
}
