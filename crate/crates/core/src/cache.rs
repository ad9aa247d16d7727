//! Branch values on a quantized `eta` lattice, with cubic interpolation and
//! an optional JSON-lines backing file.
//!
//! Interpolated values are for integrands only. Anything that locates a
//! crossing must refine it on fresh eigensolves.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::oscillator::{self, OscillatorGrid};
use crate::params::BoundaryCondition;

/// Lattice spacing in `eta`.
pub const LATTICE: f64 = 1e-3;

/// `eta` of lattice node `index`, correctly rounded (`index / 1000`, not
/// `index * 1e-3`).
pub fn lattice_eta(index: i64) -> f64 {
    index as f64 / 1000.0
}

/// Record format version written to cache files.
pub const CACHE_VERSION: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchValue {
    pub lambda: f64,
    pub boundary_value: f64,
    pub boundary_derivative: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    version: u32,
    bc: String,
    n: usize,
    /// Fixed 17-significant-digit decimal.
    eta: String,
    grid: String,
    lambda: f64,
    u: f64,
    du: f64,
}

type Key = (String, usize, i64);

/// Shared, read-mostly branch cache for one oscillator grid.
pub struct BranchCache {
    grid: OscillatorGrid,
    fingerprint: String,
    values: RwLock<HashMap<Key, BranchValue>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for BranchCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BranchCache")
            .field("grid", &self.grid)
            .field("entries", &self.len())
            .field("path", &self.path)
            .finish()
    }
}

impl BranchCache {
    /// In-memory cache.
    pub fn new(grid: OscillatorGrid) -> Self {
        Self {
            fingerprint: grid.fingerprint(),
            grid,
            values: RwLock::new(HashMap::new()),
            writer: None,
            path: None,
        }
    }

    /// Cache backed by `dir/branches.jsonl`. Records for other grids or other
    /// versions are skipped on load.
    pub fn open(grid: OscillatorGrid, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Cache(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("branches.jsonl");
        let mut cache = Self::new(grid);
        if path.exists() {
            let file = File::open(&path)
                .map_err(|e| Error::Cache(format!("cannot read {}: {e}", path.display())))?;
            let mut map = HashMap::new();
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line =
                    line.map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: Record = serde_json::from_str(&line).map_err(|e| {
                    Error::Cache(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?;
                if rec.version != CACHE_VERSION || rec.grid != cache.fingerprint {
                    continue;
                }
                let eta: f64 = rec.eta.parse().map_err(|e| {
                    Error::Cache(format!("{}:{}: bad eta: {e}", path.display(), lineno + 1))
                })?;
                map.insert(
                    (rec.bc, rec.n, lattice_index(eta)),
                    BranchValue {
                        lambda: rec.lambda,
                        boundary_value: rec.u,
                        boundary_derivative: rec.du,
                    },
                );
            }
            cache.values = RwLock::new(map);
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::Cache(format!("cannot open {}: {e}", path.display())))?;
        cache.writer = Some(Mutex::new(BufWriter::new(file)));
        cache.path = Some(path);
        Ok(cache)
    }

    pub fn grid(&self) -> &OscillatorGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Branch value at lattice node `index` (see [`lattice_eta`]).
    pub fn node(&self, bc: BoundaryCondition, n: usize, index: i64) -> Result<BranchValue> {
        let key = (bc.tag(), n, index);
        if let Some(v) = self.values.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let eta = lattice_eta(index);
        let pair = oscillator::eigenpair(eta, bc, n, &self.grid)?;
        let value = BranchValue {
            lambda: pair.lambda,
            boundary_value: pair.boundary_value,
            boundary_derivative: pair.boundary_derivative,
        };
        let inserted = {
            let mut map = self.values.write().expect("cache lock");
            map.insert(key, value).is_none()
        };
        if inserted {
            self.append(bc, n, eta, &value)?;
        }
        Ok(value)
    }

    fn append(&self, bc: BoundaryCondition, n: usize, eta: f64, v: &BranchValue) -> Result<()> {
        let Some(writer) = &self.writer else {
            return Ok(());
        };
        let rec = Record {
            version: CACHE_VERSION,
            bc: bc.tag(),
            n,
            eta: format!("{eta:.16e}"),
            grid: self.fingerprint.clone(),
            lambda: v.lambda,
            u: v.boundary_value,
            du: v.boundary_derivative,
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Cache(e.to_string()))?;
        let mut w = writer.lock().expect("cache writer");
        writeln!(w, "{line}").map_err(|e| Error::Cache(e.to_string()))
    }

    /// Flushes pending appends to disk.
    pub fn flush(&self) -> Result<()> {
        if let Some(w) = &self.writer {
            w.lock()
                .expect("cache writer")
                .flush()
                .map_err(|e| Error::Cache(e.to_string()))?;
        }
        Ok(())
    }

    /// Fills every lattice node in `[lo, hi]` (plus interpolation margins) in parallel.
    pub fn prefetch(&self, bc: BoundaryCondition, n: usize, lo: f64, hi: f64) -> Result<()> {
        let a = (lo / LATTICE).floor() as i64 - 1;
        let b = (hi / LATTICE).ceil() as i64 + 2;
        (a..=b)
            .into_par_iter()
            .try_for_each(|i| self.node(bc, n, i).map(|_| ()))
    }

    /// Four-point Lagrange interpolation of `lambda_n` at `eta`.
    pub fn lambda(&self, bc: BoundaryCondition, n: usize, eta: f64) -> Result<f64> {
        ensure_finite("eta", eta)?;
        let t = eta / LATTICE;
        let i0 = t.floor() as i64;
        let f = t - i0 as f64;
        if f == 0.0 {
            return Ok(self.node(bc, n, i0)?.lambda);
        }
        let y: Vec<f64> = (i0 - 1..=i0 + 2)
            .map(|i| self.node(bc, n, i).map(|v| v.lambda))
            .collect::<Result<_>>()?;
        let (a, b, c, d) = (f + 1.0, f, f - 1.0, f - 2.0);
        Ok(-y[0] * b * c * d / 6.0 + y[1] * a * c * d / 2.0 - y[2] * a * b * d / 2.0
            + y[3] * a * b * c / 6.0)
    }
}

impl Drop for BranchCache {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

fn lattice_index(eta: f64) -> i64 {
    (eta / LATTICE).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_close_to_fresh_solve() {
        let cache = BranchCache::new(OscillatorGrid::default());
        let bc = BoundaryCondition::Neumann;
        for &eta in &[0.1234, -0.5677, 1.9999] {
            let fresh = oscillator::eigenvalue(eta, bc, 0, cache.grid()).unwrap().0;
            let interp = cache.lambda(bc, 0, eta).unwrap();
            assert!((fresh - interp).abs() < 1e-9, "eta={eta}: {fresh} vs {interp}");
        }
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = OscillatorGrid::default();
        let bc = BoundaryCondition::Dirichlet;
        let first = {
            let cache = BranchCache::open(grid, dir.path()).unwrap();
            cache.lambda(bc, 1, 0.4321).unwrap()
        };
        let cache = BranchCache::open(grid, dir.path()).unwrap();
        assert_eq!(cache.len(), 4);
        assert_eq!(cache.lambda(bc, 1, 0.4321).unwrap().to_bits(), first.to_bits());
        // A different grid ignores the stored records.
        let other = BranchCache::open(OscillatorGrid::new(4e-3, 12.0, 2).unwrap(), dir.path()).unwrap();
        assert!(other.is_empty());
    }
}
