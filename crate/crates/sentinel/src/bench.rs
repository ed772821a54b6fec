//! Timing sweeps over synthetic models of controlled size.
//!
//! Each cell of the sweep (tree count, depth, feature count) gets its own
//! seeded model and property, so a sweep is reproducible apart from the
//! timings themselves.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tree_sentinel_core::detector::DetectError;
use tree_sentinel_core::model::{Aggregation, FeatureKind};
use tree_sentinel_core::synthetic::{random_ensemble, random_property, SyntheticSpec};
use tree_sentinel_core::{detect_violation_ranges, Parameters};

use crate::config::BenchSweep;
use crate::solver::ProcessRunner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub n_est: usize,
    pub max_d: usize,
    pub s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_est: usize,
    pub max_d: usize,
    pub s: usize,
    pub total_time_s: f64,
    pub solver_time_s: f64,
    pub solver_calls: u64,
    pub avg_call_s: f64,
    pub status: &'static str,
    pub ranges: usize,
    pub property: String,
}

/// Cartesian product, tree count varying slowest.
pub fn cells(sweep: &BenchSweep) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n_est in &sweep.n_est {
        for &max_d in &sweep.max_d {
            for &s in &sweep.s {
                out.push(Cell { n_est, max_d, s });
            }
        }
    }
    out
}

pub fn cell_spec(cell: Cell) -> SyntheticSpec {
    SyntheticSpec {
        n_trees: cell.n_est,
        max_depth: cell.max_d,
        features: cell.s,
        kind: FeatureKind::Integer,
        lo: 0,
        hi: 1000,
        leaf_lo: -100,
        leaf_hi: 100,
        aggregation: Aggregation::Sum,
        complete: true,
    }
}

pub fn run_cell(cell: Cell, index: usize, params: &Parameters, solver_cmd: &str) -> Result<BenchRow, DetectError> {
    let spec = cell_spec(cell);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(index as u64));
    let model = random_ensemble(&spec, &mut rng);
    let phi = random_property(&model, &spec, &mut rng);
    let mut runner = ProcessRunner::new(solver_cmd, params.per_call_timeout, params.total_budget)
        .map_err(|e| DetectError::Smt(tree_sentinel_core::smt::SmtError::SolverNotFound(e.to_string())))?;
    let started = Instant::now();
    let report = detect_violation_ranges(&model, &phi, &spec.domain(), params, &mut runner)?;
    let t = report.totals;
    Ok(BenchRow {
        n_est: cell.n_est,
        max_d: cell.max_d,
        s: cell.s,
        total_time_s: started.elapsed().as_secs_f64(),
        solver_time_s: t.solver_time.as_secs_f64(),
        solver_calls: t.solver_calls,
        avg_call_s: t.avg_solver_call_time.as_secs_f64(),
        status: report.status.as_str(),
        ranges: report.vranges.len(),
        property: phi.to_string(),
    })
}

/// Runs every cell on `jobs` worker threads; rows come back in cell order.
pub fn run_sweep(
    sweep: &BenchSweep,
    params: &Parameters,
    solver_cmd: &str,
    jobs: usize,
) -> Result<Vec<BenchRow>, DetectError> {
    let cells = cells(sweep);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<BenchRow, DetectError>>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&cell) = cells.get(i) else { break };
                let row = run_cell(cell, i, params, solver_cmd);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

pub fn write_csv(rows: &[BenchRow], out: impl std::io::Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_a_product() {
        let sweep = BenchSweep { n_est: vec![1, 2], max_d: vec![3], s: vec![2, 4] };
        let c = cells(&sweep);
        assert_eq!(c.len(), 4);
        assert_eq!(c[1], Cell { n_est: 1, max_d: 3, s: 4 });
    }

    #[test]
    fn csv_header() {
        let row = BenchRow {
            n_est: 1,
            max_d: 2,
            s: 3,
            total_time_s: 0.5,
            solver_time_s: 0.25,
            solver_calls: 2,
            avg_call_s: 0.125,
            status: "complete",
            ranges: 0,
            property: String::from("(y > 0)"),
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_est,max_d,s,total_time_s,solver_time_s,solver_calls,avg_call_s,status,ranges,property\n"));
    }
}
