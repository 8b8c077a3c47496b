//! Grid scans with ordered, resumable CSV output.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, Family, Method, MethodSettings, ScanCell, Status};
use crate::error::{Error, Result};

/// Uniform samples `lo, ..., hi` of one amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let a = Self { lo, hi, n };
        a.validate()?;
        Ok(a)
    }

    /// A single value.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x, n: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::Config(format!("empty or invalid range [{}, {}]", self.lo, self.hi)));
        }
        match self.n {
            0 => Err(Error::Config("resolution must be positive".into())),
            1 if self.hi != self.lo => Err(Error::Config(format!("resolution 1 needs lo = hi (got [{}, {}])", self.lo, self.hi))),
            n if n >= 2 && self.hi == self.lo => Err(Error::Config(format!("resolution {n} needs lo < hi"))),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64).collect()
    }
}

/// Everything that determines the content of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub family: Family,
    pub method: Method,
    pub mu1: Axis,
    pub mu2: Axis,
    /// Fixed third amplitude (three-dimensional family only).
    pub mu3: f64,
    pub settings: MethodSettings,
}

impl ScanConfig {
    pub fn new(family: Family, method: Method, mu1: Axis, mu2: Axis) -> Self {
        let mu3 = if family == Family::Spiral3d { super::DEFAULT_MU3 } else { 0.0 };
        Self { family, method, mu1, mu2, mu3, settings: MethodSettings::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.mu1.validate()?;
        self.mu2.validate()?;
        if !self.mu3.is_finite() {
            return Err(Error::Config("mu3 must be finite".into()));
        }
        if self.family == Family::Golden2d && self.mu3 != 0.0 {
            return Err(Error::Config("the two-dimensional family has no mu3".into()));
        }
        Ok(())
    }

    /// Parameter points, row-major over `mu2` then `mu1`.
    pub fn cells(&self) -> Vec<[f64; 3]> {
        let mu1 = self.mu1.values();
        self.mu2.values().into_iter().flat_map(|m2| mu1.iter().map(move |&m1| [m1, m2, self.mu3])).collect()
    }
}

/// One line of the scan CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub method: Method,
    pub status: Status,
    pub iterations: usize,
    pub wall_time_s: f64,
}

impl CellRow {
    fn new(cell: &ScanCell, method: Method) -> Self {
        Self { mu1: cell.mu[0], mu2: cell.mu[1], mu3: cell.mu[2], method, status: cell.status, iterations: cell.iterations, wall_time_s: cell.wall_time }
    }

    fn cell(&self) -> ScanCell {
        ScanCell { mu: [self.mu1, self.mu2, self.mu3], status: self.status, iterations: self.iterations, wall_time: self.wall_time_s, message: None }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates `todo` on `workers` threads (0: one per core) and hands the
/// results to `sink` in index order.
fn run_ordered(cfg: &ScanConfig, todo: Vec<(usize, [f64; 3])>, workers: usize, mut sink: impl FnMut(ScanCell) -> Result<()>) -> Result<()> {
    let pool = pool(workers)?;
    let Some(mut next) = todo.first().map(|t| t.0) else {
        return Ok(());
    };
    let total = todo.len();
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        s.spawn(|| {
            pool.install(|| {
                todo.into_iter().par_bridge().for_each_with(tx, |tx, (idx, mu)| {
                    let _ = tx.send((idx, evaluate(cfg.family, cfg.method, &cfg.settings, mu)));
                })
            })
        });
        let mut pending = BTreeMap::new();
        let mut done = 0;
        for (idx, cell) in rx {
            pending.insert(idx, cell);
            while let Some(cell) = pending.remove(&next) {
                sink(cell)?;
                next += 1;
                done += 1;
                if done % 50 == 0 || done == total {
                    log::info!("{done}/{total} cells");
                }
            }
        }
        Ok(())
    })
}

/// Evaluates every cell of the grid; results in cell order.
pub fn run_grid(cfg: &ScanConfig, workers: usize) -> Result<Vec<ScanCell>> {
    cfg.validate()?;
    let todo: Vec<_> = cfg.cells().into_iter().enumerate().collect();
    let mut out = Vec::with_capacity(todo.len());
    run_ordered(cfg, todo, workers, |c| {
        out.push(c);
        Ok(())
    })?;
    Ok(out)
}

/// JSON provenance file next to a scan CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Reads the complete rows of a scan CSV; a trailing partial row is dropped.
pub fn read_cells(path: &Path) -> Result<Vec<CellRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize::<CellRow>() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("ignoring unreadable row in {}: {e}", path.display());
                break;
            }
        }
    }
    Ok(rows)
}

/// As [`run_grid`], streaming rows to `path` in cell order. Cells already
/// present in `path` (from an interrupted run of the same configuration)
/// are not recomputed. Writes the configuration to [`sidecar_path`].
pub fn run_grid_to(cfg: &ScanConfig, workers: usize, path: &Path) -> Result<Vec<ScanCell>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let sidecar = sidecar_path(path);
    let existing = if path.exists() { read_cells(path)? } else { Vec::new() };
    if !existing.is_empty() {
        let previous: Option<ScanConfig> = fs::read_to_string(&sidecar).ok().and_then(|s| serde_json::from_str(&s).ok());
        if previous.as_ref() != Some(cfg) {
            return Err(Error::Config(format!("{} holds a scan with a different configuration", path.display())));
        }
        if existing.len() > cells.len() {
            return Err(Error::Config(format!("{} has more rows than the grid has cells", path.display())));
        }
        for (row, mu) in existing.iter().zip(&cells) {
            if row.mu1 != mu[0] || row.mu2 != mu[1] || row.mu3 != mu[2] || row.method != cfg.method {
                return Err(Error::Config(format!("{} does not match the grid at mu = {mu:?}", path.display())));
            }
        }
        log::info!("resuming: {} of {} cells already done", existing.len(), cells.len());
    }
    fs::write(&sidecar, serde_json::to_string_pretty(cfg)? + "\n")?;

    // rewrite the clean prefix so a partial trailing line cannot survive
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for row in &existing {
        w.serialize(row)?;
    }
    if existing.is_empty() {
        w.write_record(["mu1", "mu2", "mu3", "method", "status", "iterations", "wall_time_s"])?;
    }
    w.flush()?;
    drop(w);

    let mut out: Vec<ScanCell> = existing.iter().map(CellRow::cell).collect();
    let todo: Vec<_> = cells.into_iter().enumerate().skip(existing.len()).collect();
    let file = OpenOptions::new().append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    run_ordered(cfg, todo, workers, |cell| {
        let row = CellRow::new(&cell, cfg.method);
        w.serialize(&row)?;
        w.flush()?;
        out.push(cell);
        Ok(())
    })?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(out)
}
