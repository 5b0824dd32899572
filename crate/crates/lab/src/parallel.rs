//! Sweep execution on a rayon pool.
//!
//! Each magnitude level is one parallel batch; results come back in run
//! order and are folded into the grid on the calling thread, so the output
//! does not depend on the number of workers.

use cascade_core::sweep::{HeatmapGrid, RunRecord, SweepPlan};
use rayon::prelude::*;

use crate::error::LabResult;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub grid: HeatmapGrid,
    pub runs: Vec<RunRecord>,
}

/// Runs every index of `plan` on `threads` workers (0 picks rayon's
/// default). `progress(level, grid)` is called after each magnitude level.
pub fn run_sweep_parallel<F>(
    plan: &SweepPlan<'_>,
    threads: usize,
    mut progress: F,
) -> LabResult<SweepOutput>
where
    F: FnMut(usize, &HeatmapGrid),
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let cfg = plan.config;
    let mut grid = HeatmapGrid::new(cfg.magnitudes.clone(), cfg.alignment_bins);
    let mut runs = Vec::with_capacity(plan.total_runs());
    for level in 0..cfg.magnitudes.len() {
        let first = level * cfg.runs_per_magnitude;
        let batch: Vec<RunRecord> = pool.install(|| {
            (first..first + cfg.runs_per_magnitude)
                .into_par_iter()
                .map(|k| plan.run(k))
                .collect::<cascade_core::Result<_>>()
        })?;
        for r in &batch {
            grid.record(r);
        }
        runs.extend(batch);
        progress(level, &grid);
    }
    Ok(SweepOutput { grid, runs })
}
