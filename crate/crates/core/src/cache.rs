//! On-disk cache of bases and coboundary matrices.
//!
//! Entries are JSON files keyed by `(k, l)`, the sign rule and a hash of the
//! code version. They are advisory: every load is spot-checked and a failing
//! entry is recomputed and overwritten.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohomology::{delta_matrix_between, enumerate_basis, BasisSource, BasisTable, CohomologyError};
use crate::differential::{delta, delta_vec, delta_with, SignRule};
use crate::graph::{canonicalize, parse_graph, Coeff};
use crate::linalg::SparseRationalMatrix;

pub const CACHE_ENV: &str = "GC_CACHE_DIR";

/// Bumped whenever enumeration order, canonical forms or signs change.
const LAYOUT: &str = "graphcomplex-cache/1;ord=e-vf;canonical-by-encoding";

/// Basis graphs and matrix columns re-derived on every load.
const SPOT_CHECKS: usize = 8;

pub fn code_version() -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION"));
    h.update(LAYOUT);
    hex::encode(&h.finalize()[..8])
}

/// Default cache directory: `$GC_CACHE_DIR`, else `$XDG_CACHE_HOME/graphcomplex`,
/// else `$HOME/.cache/graphcomplex`, else a directory under the system temp dir.
pub fn default_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("graphcomplex");
    }
    if let Some(d) = std::env::var_os("HOME") {
        return PathBuf::from(d).join(".cache").join("graphcomplex");
    }
    std::env::temp_dir().join("graphcomplex-cache")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStat {
    pub dir: String,
    pub version: String,
    pub bases: usize,
    pub matrices: usize,
    /// entries written by other code versions
    pub stale: usize,
    pub bytes: u64,
}

#[derive(Serialize, Deserialize)]
struct BasisFile {
    version: String,
    k: i64,
    l: i64,
    graphs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    version: String,
    k: i64,
    l: i64,
    rule: String,
    rows: usize,
    cols: usize,
    /// `(row, col, "p/q")`
    entries: Vec<(usize, usize, String)>,
}

/// Counters for one session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheCounters {
    pub hits: usize,
    pub misses: usize,
    pub rejected: usize,
}

/// A [`BasisSource`] backed by a directory.
#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
    version: String,
    pub counters: CacheCounters,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into(), version: code_version(), counters: CacheCounters::default() }
    }

    pub fn from_env() -> Self {
        DiskCache::new(default_dir())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn basis_path(&self, k: i64, l: i64) -> PathBuf {
        self.dir.join(format!("basis-k{k}-l{l}-{}.json", self.version))
    }

    fn matrix_path(&self, k: i64, l: i64, rule: SignRule) -> PathBuf {
        self.dir.join(format!("delta-k{k}-l{l}-{}-{}.json", rule_tag(rule), self.version))
    }

    fn write(&self, path: &Path, text: &str) {
        // a failed write only costs a recomputation next time
        if fs::create_dir_all(&self.dir).is_ok() {
            let tmp = path.with_extension("tmp");
            if fs::write(&tmp, text).is_ok() {
                let _ = fs::rename(&tmp, path);
            }
        }
    }

    fn load_basis(&self, k: i64, l: i64) -> Option<BasisTable> {
        let text = fs::read_to_string(self.basis_path(k, l)).ok()?;
        let file: BasisFile = serde_json::from_str(&text).ok()?;
        if file.version != self.version || file.k != k || file.l != l {
            return None;
        }
        let graphs = file.graphs.iter().map(|s| parse_graph(s)).collect::<Result<Vec<_>, _>>().ok()?;
        let table = BasisTable::from_graphs(k, l, graphs);
        if table.len() != file.graphs.len() {
            return None;
        }
        for g in spread(table.graphs(), SPOT_CHECKS) {
            let gr = g.grading();
            let sg = canonicalize(g);
            if gr.ord != k || gr.deg != l || sg.sign != 1 || &sg.graph != g {
                return None;
            }
            if !delta_vec(&delta(g)).map(|d| d.is_zero()).unwrap_or(false) {
                return None;
            }
        }
        Some(table)
    }

    fn load_matrix(&self, k: i64, l: i64, source: &BasisTable, target: &BasisTable, rule: SignRule) -> Option<SparseRationalMatrix> {
        let text = fs::read_to_string(self.matrix_path(k, l, rule)).ok()?;
        let file: MatrixFile = serde_json::from_str(&text).ok()?;
        if file.version != self.version || file.rule != rule_tag(rule) || file.rows != target.len() || file.cols != source.len() {
            return None;
        }
        let mut trip = Vec::with_capacity(file.entries.len());
        for (r, c, v) in &file.entries {
            if *r >= file.rows || *c >= file.cols {
                return None;
            }
            trip.push((*r, *c, v.parse::<Coeff>().ok()?));
        }
        let m = SparseRationalMatrix::from_triplets(file.rows, file.cols, trip);
        let picks: Vec<usize> = spread(&(0..source.len()).collect::<Vec<_>>(), SPOT_CHECKS).into_iter().copied().collect();
        for j in picks {
            let d = delta_with(&source.graphs()[j], rule);
            let expected: Option<Vec<(usize, Coeff)>> = d.iter().map(|(t, c)| target.index_of(t).map(|r| (r, c.clone()))).collect();
            let mut expected = expected?;
            expected.sort_by_key(|e| e.0);
            if m.column(j) != expected.as_slice() {
                return None;
            }
        }
        Some(m)
    }

    pub fn stat(&self) -> io::Result<CacheStat> {
        let mut stat = CacheStat { dir: self.dir.display().to_string(), version: self.version.clone(), bases: 0, matrices: 0, stale: 0, bytes: 0 };
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(stat),
            Err(e) => return Err(e),
        };
        for entry in entries {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.ends_with(".json") {
                continue;
            }
            stat.bytes += entry.metadata()?.len();
            if !name.contains(&self.version) {
                stat.stale += 1;
            } else if name.starts_with("basis-") {
                stat.bases += 1;
            } else if name.starts_with("delta-") {
                stat.matrices += 1;
            }
        }
        Ok(stat)
    }

    /// Removes every cache file; returns how many were removed.
    pub fn clear(&self) -> io::Result<usize> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let mut removed = 0;
        for entry in entries {
            let path = entry?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if (name.starts_with("basis-") || name.starts_with("delta-")) && (name.ends_with(".json") || name.ends_with(".tmp")) {
                fs::remove_file(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

impl BasisSource for DiskCache {
    fn basis(&mut self, k: i64, l: i64) -> BasisTable {
        let path = self.basis_path(k, l);
        let existed = path.exists();
        if let Some(t) = self.load_basis(k, l) {
            self.counters.hits += 1;
            return t;
        }
        if existed {
            self.counters.rejected += 1;
        }
        self.counters.misses += 1;
        let table = enumerate_basis(k, l);
        let file = BasisFile { version: self.version.clone(), k, l, graphs: table.graphs().iter().map(ToString::to_string).collect() };
        self.write(&path, &serde_json::to_string(&file).expect("basis serializes"));
        table
    }

    fn delta_matrix(
        &mut self,
        k: i64,
        l: i64,
        source: &BasisTable,
        target: &BasisTable,
        rule: SignRule,
    ) -> Result<SparseRationalMatrix, CohomologyError> {
        let path = self.matrix_path(k, l, rule);
        let existed = path.exists();
        if let Some(m) = self.load_matrix(k, l, source, target, rule) {
            self.counters.hits += 1;
            return Ok(m);
        }
        if existed {
            self.counters.rejected += 1;
        }
        self.counters.misses += 1;
        let m = delta_matrix_between(source, target, rule)?;
        let file = MatrixFile {
            version: self.version.clone(),
            k,
            l,
            rule: rule_tag(rule),
            rows: m.rows(),
            cols: m.cols(),
            entries: m.triplets().map(|(r, c, v)| (r, c, v.to_string())).collect(),
        };
        self.write(&path, &serde_json::to_string(&file).expect("matrix serializes"));
        Ok(m)
    }
}

fn rule_tag(rule: SignRule) -> String {
    format!("{:?}{}", rule.exponent, rule.arc_factor).to_lowercase()
}

/// Up to `count` evenly spaced items, always including the ends.
fn spread<T>(items: &[T], count: usize) -> Vec<&T> {
    if items.len() <= count {
        return items.iter().collect();
    }
    (0..count).map(|i| &items[i * (items.len() - 1) / (count - 1)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_picks_ends() {
        let v: Vec<usize> = (0..100).collect();
        let s: Vec<usize> = spread(&v, 5).into_iter().copied().collect();
        assert_eq!(s, vec![0, 24, 49, 74, 99]);
        assert_eq!(spread(&v[..3], 5).len(), 3);
    }

    #[test]
    fn version_is_stable() {
        assert_eq!(code_version(), code_version());
        assert_eq!(code_version().len(), 16);
    }
}
