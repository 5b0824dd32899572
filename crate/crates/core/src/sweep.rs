//! Seeded Monte Carlo sweeps over input magnitude, binned by alignment with
//! the critical eigenvector.
//!
//! Run `k` draws its input from `ChaCha8Rng::seed_from_u64(seed ^ k)`, so a
//! run's outcome depends only on the configuration and its index. Runs are
//! numbered magnitude-major: run `k` uses magnitude `k / runs_per_magnitude`.

use alloc::vec::Vec;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cascade::{random_input, simulate_cascade, CascadeCriteria, Classification};
use crate::dynamics::{AttentionParams, ModelParams, SystemState};
use crate::error::{Error, Regime, Result};
use crate::graph::Graph;
use crate::integrate::IntegratorConfig;
use crate::math::{abs, floor};
use crate::reduction::critical_attention;
use crate::spectra::{compute_spectrum, DEFAULT_GAP_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub magnitudes: Vec<f64>,
    pub runs_per_magnitude: usize,
    pub alignment_bins: usize,
    pub rng_seed: u64,
    pub regime: Regime,
}

impl SweepConfig {
    /// Eight magnitudes evenly spaced on `[0, 0.1]`, 50 runs each, five
    /// alignment bins.
    pub fn desk_scale(rng_seed: u64, regime: Regime) -> Self {
        Self {
            magnitudes: linspace(0.0, 0.1, 8),
            runs_per_magnitude: 50,
            alignment_bins: 5,
            rng_seed,
            regime,
        }
    }

    pub fn total_runs(&self) -> usize {
        self.magnitudes.len() * self.runs_per_magnitude
    }

    pub fn validate(&self) -> Result<()> {
        if self.magnitudes.is_empty() || self.runs_per_magnitude == 0 || self.alignment_bins == 0 {
            return Err(Error::InvalidParameter(
                "sweep grids must be non-empty".into(),
            ));
        }
        if self
            .magnitudes
            .iter()
            .any(|m| !(*m >= 0.0) || !m.is_finite())
        {
            return Err(Error::InvalidParameter(
                "magnitudes must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Alignment bin of `|alignment|` among `bins` equal bins of `[0, 1]`.
pub fn alignment_bin(alignment: f64, bins: usize) -> usize {
    let k = floor(abs(alignment) * bins as f64);
    if k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub magnitude_index: usize,
    pub alignment: f64,
    pub alignment_bin: usize,
    pub cascaded: bool,
    pub classification: Classification,
    pub sign_pattern: Vec<i8>,
}

/// Everything a run needs, validated once; [`SweepPlan::run`] can be called
/// from any thread in any order.
#[derive(Debug, Clone)]
pub struct SweepPlan<'a> {
    pub graph: &'a Graph,
    pub params: ModelParams,
    pub attention: &'a AttentionParams,
    pub criteria: &'a CascadeCriteria,
    pub config: &'a SweepConfig,
    pub integrator: IntegratorConfig,
    pub critical: DVector<f64>,
    pub u_critical: f64,
}

impl<'a> SweepPlan<'a> {
    pub fn new(
        graph: &'a Graph,
        params: &ModelParams,
        attention: &'a AttentionParams,
        criteria: &'a CascadeCriteria,
        config: &'a SweepConfig,
    ) -> Result<Self> {
        config.validate()?;
        criteria.validate()?;
        params.check_dimension(graph)?;
        if params.regime() != config.regime {
            return Err(Error::InvalidParameter(alloc::format!(
                "sweep regime {} does not match the sign of gamma",
                config.regime
            )));
        }
        let s = compute_spectrum(graph, DEFAULT_GAP_TOLERANCE)?;
        let cp = critical_attention(&s, params)?;
        if !(attention.u_low < cp.u_star) {
            return Err(Error::NoBistability {
                u_low: attention.u_low,
                u_critical: cp.u_star,
            });
        }
        Ok(Self {
            graph,
            params: params.with_input(DVector::zeros(graph.num_vertices())),
            attention,
            criteria,
            config,
            integrator: IntegratorConfig::rk45(criteria.t_end),
            critical: s.critical_vector(config.regime)?,
            u_critical: cp.u_star,
        })
    }

    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn total_runs(&self) -> usize {
        self.config.total_runs()
    }

    pub fn run(&self, index: usize) -> Result<RunRecord> {
        if index >= self.total_runs() {
            return Err(Error::InvalidParameter(alloc::format!(
                "run index {index} out of range"
            )));
        }
        let magnitude_index = index / self.config.runs_per_magnitude;
        let magnitude = self.config.magnitudes[magnitude_index];
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed ^ index as u64);
        let n = self.graph.num_vertices();
        let b = random_input(&mut rng, magnitude, n)?;
        let p = self.params.with_input(b);
        let out = simulate_cascade(
            self.graph,
            &p,
            self.attention,
            self.criteria,
            &SystemState::neutral(n, 0.0),
            &self.integrator,
            &self.critical,
        )?;
        Ok(RunRecord {
            index,
            magnitude_index,
            alignment: out.input_alignment,
            alignment_bin: alignment_bin(out.input_alignment, self.config.alignment_bins),
            cascaded: out.cascaded,
            classification: out.classification,
            sign_pattern: out.sign_pattern,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapCell {
    pub count: usize,
    pub no_cascade: usize,
}

/// Counts over (alignment bin, magnitude).
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub magnitudes: Vec<f64>,
    pub alignment_bins: usize,
    /// `cells[bin][magnitude_index]`.
    pub cells: Vec<Vec<HeatmapCell>>,
}

impl HeatmapGrid {
    pub fn new(magnitudes: Vec<f64>, alignment_bins: usize) -> Self {
        let row = (0..magnitudes.len())
            .map(|_| HeatmapCell {
                count: 0,
                no_cascade: 0,
            })
            .collect::<Vec<_>>();
        Self {
            cells: (0..alignment_bins).map(|_| row.clone()).collect(),
            magnitudes,
            alignment_bins,
        }
    }

    pub fn record(&mut self, r: &RunRecord) {
        let cell = &mut self.cells[r.alignment_bin][r.magnitude_index];
        cell.count += 1;
        if !r.cascaded {
            cell.no_cascade += 1;
        }
    }

    /// Lower and upper edge of an alignment bin.
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let w = 1.0 / self.alignment_bins as f64;
        (bin as f64 * w, (bin + 1) as f64 * w)
    }

    /// Fraction of runs in a cell that did not cascade; `None` when empty.
    pub fn no_cascade_fraction(&self, bin: usize, magnitude_index: usize) -> Option<f64> {
        let c = &self.cells[bin][magnitude_index];
        (c.count > 0).then(|| c.no_cascade as f64 / c.count as f64)
    }

    pub fn total_count(&self) -> usize {
        self.cells.iter().flatten().map(|c| c.count).sum()
    }

    pub fn bin_count(&self, bin: usize) -> usize {
        self.cells[bin].iter().map(|c| c.count).sum()
    }

    /// Increases of the no-cascade fraction along the magnitude axis of one
    /// bin, skipping empty cells.
    pub fn magnitude_inversions(&self, bin: usize) -> usize {
        let fr: Vec<f64> = (0..self.magnitudes.len())
            .filter_map(|j| self.no_cascade_fraction(bin, j))
            .collect();
        fr.windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Smallest magnitude whose no-cascade fraction is at most `level`;
    /// `None` for an empty bin, `inf` if the level is never reached.
    pub fn threshold_magnitude(&self, bin: usize, level: f64) -> Option<f64> {
        if self.bin_count(bin) == 0 {
            return None;
        }
        Some(
            (0..self.magnitudes.len())
                .find(|&j| matches!(self.no_cascade_fraction(bin, j), Some(f) if f <= level))
                .map_or(f64::INFINITY, |j| self.magnitudes[j]),
        )
    }

    /// Increases of the threshold magnitude from one non-empty alignment bin
    /// to the next.
    pub fn alignment_inversions(&self, level: f64) -> usize {
        let th: Vec<f64> = (0..self.alignment_bins)
            .filter_map(|b| self.threshold_magnitude(b, level))
            .collect();
        th.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

/// All runs of a plan in index order on the calling thread.
pub fn run_sweep(
    g: &Graph,
    p: &ModelParams,
    ap: &AttentionParams,
    crit: &CascadeCriteria,
    cfg: &SweepConfig,
) -> Result<HeatmapGrid> {
    let plan = SweepPlan::new(g, p, ap, crit, cfg)?;
    let mut grid = HeatmapGrid::new(cfg.magnitudes.clone(), cfg.alignment_bins);
    for k in 0..plan.total_runs() {
        grid.record(&plan.run(k)?);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const U_A: f64 = 0.41421356237309503;

    fn setup() -> (Graph, ModelParams, AttentionParams) {
        let g = Graph::path(3).unwrap();
        let p = ModelParams::unforced(1.0, 1.0, 1.0, 3).unwrap();
        let ap = AttentionParams::around_critical(U_A, -0.01, 0.6, 0.2, 3, 10.0).unwrap();
        (g, p, ap)
    }

    #[test]
    fn binning() {
        assert_eq!(alignment_bin(0.0, 5), 0);
        assert_eq!(alignment_bin(-0.39, 5), 1);
        assert_eq!(alignment_bin(1.0, 5), 4);
        assert_eq!(alignment_bin(0.999, 5), 4);
        assert_eq!(linspace(0.0, 0.1, 3), alloc::vec![0.0, 0.05, 0.1]);
    }

    #[test]
    fn zero_magnitude_never_cascades() {
        let (g, p, ap) = setup();
        let cfg = SweepConfig {
            magnitudes: alloc::vec![0.0],
            runs_per_magnitude: 6,
            alignment_bins: 4,
            rng_seed: 9,
            regime: Regime::Agreement,
        };
        let grid = run_sweep(&g, &p, &ap, &CascadeCriteria::default(), &cfg).unwrap();
        assert_eq!(grid.total_count(), 6);
        // zero input has alignment zero
        assert_eq!(grid.bin_count(0), 6);
        assert_eq!(grid.no_cascade_fraction(0, 0), Some(1.0));
        assert_eq!(grid.no_cascade_fraction(1, 0), None);
    }

    #[test]
    fn large_inputs_always_cascade_and_runs_are_reproducible() {
        let (g, p, ap) = setup();
        let crit = CascadeCriteria::default();
        let cfg = SweepConfig {
            magnitudes: alloc::vec![0.5],
            runs_per_magnitude: 8,
            alignment_bins: 5,
            rng_seed: 1234,
            regime: Regime::Agreement,
        };
        let grid = run_sweep(&g, &p, &ap, &crit, &cfg).unwrap();
        assert_eq!(grid.total_count(), 8);
        for b in 0..5 {
            if let Some(f) = grid.no_cascade_fraction(b, 0) {
                assert_eq!(f, 0.0);
            }
        }
        let plan = SweepPlan::new(&g, &p, &ap, &crit, &cfg).unwrap();
        assert_eq!(plan.run(5).unwrap(), plan.run(5).unwrap());
        assert!(plan.run(8).is_err());
    }

    #[test]
    fn rejects_inconsistent_plans() {
        let (g, p, ap) = setup();
        let crit = CascadeCriteria::default();
        let mut cfg = SweepConfig::desk_scale(1, Regime::Disagreement);
        assert!(SweepPlan::new(&g, &p, &ap, &crit, &cfg).is_err());
        cfg.regime = Regime::Agreement;
        let high = AttentionParams::new(0.5, 1.0, 0.2, 3, 10.0).unwrap();
        assert!(matches!(
            SweepPlan::new(&g, &p, &high, &crit, &cfg),
            Err(Error::NoBistability { .. })
        ));
        cfg.magnitudes.clear();
        assert!(SweepPlan::new(&g, &p, &ap, &crit, &cfg).is_err());
    }

    #[test]
    fn grid_statistics() {
        let mut grid = HeatmapGrid::new(alloc::vec![0.0, 0.1, 0.2], 2);
        let rec = |bin, m, cascaded| RunRecord {
            index: 0,
            magnitude_index: m,
            alignment: 0.0,
            alignment_bin: bin,
            cascaded,
            classification: Classification::None,
            sign_pattern: Vec::new(),
        };
        for (bin, m, c) in [
            (0, 0, false),
            (0, 1, false),
            (0, 2, true),
            (1, 0, false),
            (1, 1, true),
            (1, 2, false),
        ] {
            grid.record(&rec(bin, m, c));
        }
        assert_eq!(grid.magnitude_inversions(0), 0);
        assert_eq!(grid.magnitude_inversions(1), 1);
        assert_eq!(grid.threshold_magnitude(0, 0.5), Some(0.2));
        assert_eq!(grid.threshold_magnitude(1, 0.5), Some(0.1));
        assert_eq!(grid.alignment_inversions(0.5), 0);
        assert_eq!(grid.bin_edges(1), (0.5, 1.0));
    }
}
