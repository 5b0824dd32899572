//! The subcommands as library functions. Each writes its files into the
//! output directory and returns a serialisable report.

use std::fs;
use std::path::{Path, PathBuf};

use cascade_core::cascade::{detect_cascade, input_alignment, CascadeOutcome};
use cascade_core::continuation::{
    continue_branch, seed_branches, Branch, ContinuationSettings, CoupledInputProblem,
    FixedAttentionProblem,
};
use cascade_core::dynamics::{rhs_coupled, AttentionParams, ModelParams, SystemState};
use cascade_core::integrate::integrate;
use cascade_core::reduction::critical_attention;
use cascade_core::spectra::{centrality, compute_spectrum, Spectrum, DEFAULT_GAP_TOLERANCE};
use cascade_core::sweep::SweepPlan;
use cascade_core::threshold::{aligned_direction, find_cascade_threshold, fold_threshold};
use cascade_core::{DVector, Graph, Regime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{BifurcationMode, DirectionSpec, RunConfig};
use crate::error::{LabError, LabResult};
use crate::parallel::{run_sweep_parallel, SweepOutput};
use crate::tables::{
    branch_rows, branch_summary, write_branch, write_heatmap, write_runs, write_trajectory,
};

pub const SPECTRUM_JSON: &str = "spectrum.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const VERDICT_JSON: &str = "verdict.json";
pub const BRANCH_SUMMARY: &str = "branches.txt";
pub const BIFURCATE_JSON: &str = "bifurcate.json";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const RUNS_CSV: &str = "runs.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const THRESHOLD_JSON: &str = "threshold.json";

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> LabResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> LabResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(dir, name, text.as_bytes())
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Quantities every dynamic command derives from the graph and the model
/// section.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spectrum: Spectrum,
    pub params: ModelParams,
    pub u_critical: f64,
    pub attention: AttentionParams,
    pub critical: DVector<f64>,
}

impl Setup {
    /// `params` carries the configured input.
    pub fn new(g: &Graph, cfg: &RunConfig) -> LabResult<Self> {
        let n = g.num_vertices();
        let base = cfg.model.unforced(n)?;
        let spectrum = compute_spectrum(g, DEFAULT_GAP_TOLERANCE)?;
        let cp = critical_attention(&spectrum, &base)?;
        if !(cp.u_star > 0.0) {
            return Err(LabError::Config(format!(
                "critical attention {} is not positive for these weights",
                cp.u_star
            )));
        }
        let a = &cfg.attention;
        let attention = AttentionParams::around_critical(
            cp.u_star,
            a.low_offset,
            a.high_offset,
            a.threshold,
            a.hill_exponent,
            a.tau,
        )?;
        let critical = spectrum.critical_vector(base.regime())?;
        let mut b = match &cfg.model.input {
            Some(v) if v.len() != n => {
                return Err(LabError::Config(format!(
                    "[model] input has {} entries for {n} agents",
                    v.len()
                )))
            }
            Some(v) => DVector::from_column_slice(v),
            None => DVector::zeros(n),
        };
        b += &critical * cfg.model.input_centrality;
        Ok(Setup {
            params: base.with_input(b),
            spectrum,
            u_critical: cp.u_star,
            attention,
            critical,
        })
    }

    pub fn direction(&self, spec: &DirectionSpec) -> LabResult<DVector<f64>> {
        let n = self.critical.len();
        match spec {
            DirectionSpec::Centrality => Ok(self.critical.clone()),
            DirectionSpec::Explicit(v) => {
                if v.len() != n {
                    return Err(LabError::Config(format!(
                        "direction has {} entries for {n} agents",
                        v.len()
                    )));
                }
                let v = DVector::from_column_slice(v);
                Ok(&v / v.norm())
            }
            DirectionSpec::Aligned {
                alignment,
                completion,
            } => {
                let other = match completion {
                    Some(c) if c.len() != n => {
                        return Err(LabError::Config(format!(
                            "completion has {} entries for {n} agents",
                            c.len()
                        )))
                    }
                    Some(c) => DVector::from_column_slice(c),
                    None => least_aligned_basis_vector(&self.critical),
                };
                Ok(aligned_direction(&self.critical, *alignment, &other)?)
            }
        }
    }
}

/// Basis vector `e_k` with the smallest `|v_k|`, first on ties.
pub fn least_aligned_basis_vector(v: &DVector<f64>) -> DVector<f64> {
    let k = (0..v.len())
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    DVector::from_fn(v.len(), |i, _| if i == k { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeReport {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub simple: bool,
    /// Left eigenvector, unit length, largest entry positive.
    pub centrality: Option<Vec<f64>>,
    /// `d / (alpha + gamma lambda)` with `gamma = +|gamma|` for agreement and
    /// `-|gamma|` for disagreement.
    pub critical_attention: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub num_vertices: usize,
    pub directed: bool,
    /// `[re, im]`, sorted by decreasing real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub agreement: ExtremeReport,
    pub disagreement: ExtremeReport,
    pub warnings: Vec<String>,
}

fn extreme_report(
    s: &Spectrum,
    regime: Regime,
    cfg: &RunConfig,
    n: usize,
    warnings: &mut Vec<String>,
) -> ExtremeReport {
    let pair = s.pair(s.extreme_index(regime));
    let lambda = pair.eigenvalue.re;
    let tol = 1e-6 * lambda.abs().max(1.0);
    let multiplicity = s
        .eigenvalues()
        .iter()
        .filter(|z| (z.re - lambda).abs() <= tol && z.im.abs() <= tol)
        .count();
    let centrality = match centrality(s, regime) {
        Ok(cv) => Some(to_vec(&cv.entries)),
        Err(e) => {
            warnings.push(format!(
                "{regime} centrality refused: eigenvalue {lambda} has multiplicity {multiplicity} ({e})"
            ));
            None
        }
    };
    let gamma = match regime {
        Regime::Agreement => cfg.model.edge_weight.abs(),
        Regime::Disagreement => -cfg.model.edge_weight.abs(),
    };
    let critical = if gamma == 0.0 {
        warnings.push("edge_weight is zero; no critical attention".into());
        None
    } else {
        ModelParams::unforced(cfg.model.damping, cfg.model.self_weight, gamma, n)
            .map_err(LabError::from)
            .and_then(|p| Ok(critical_attention(s, &p)?.u_star))
            .map_err(|e| warnings.push(format!("{regime} critical attention unavailable: {e}")))
            .ok()
    };
    ExtremeReport {
        eigenvalue: lambda,
        multiplicity,
        simple: pair.simple,
        centrality,
        critical_attention: critical,
    }
}

pub fn cmd_spectrum(g: &Graph, cfg: &RunConfig) -> LabResult<SpectrumReport> {
    let s = compute_spectrum(g, DEFAULT_GAP_TOLERANCE)?;
    let n = g.num_vertices();
    let mut warnings = Vec::new();
    let agreement = extreme_report(&s, Regime::Agreement, cfg, n, &mut warnings);
    let disagreement = extreme_report(&s, Regime::Disagreement, cfg, n, &mut warnings);
    let report = SpectrumReport {
        num_vertices: n,
        directed: g.is_directed(),
        eigenvalues: s.eigenvalues().iter().map(|z| [z.re, z.im]).collect(),
        agreement,
        disagreement,
        warnings,
    };
    write_json(&cfg.output_dir, SPECTRUM_JSON, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl From<&SystemState> for StateReport {
    fn from(s: &SystemState) -> Self {
        StateReport {
            x: to_vec(&s.x),
            u: to_vec(&s.u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub cascaded: bool,
    pub classification: String,
    pub final_time: f64,
    pub final_state: StateReport,
    pub sign_pattern: Vec<i8>,
    pub input: Vec<f64>,
    pub input_magnitude: f64,
    pub input_alignment: f64,
}

impl Verdict {
    fn new(out: &CascadeOutcome, input: &DVector<f64>) -> Self {
        Verdict {
            cascaded: out.cascaded,
            classification: out.classification.as_str().to_string(),
            final_time: out.final_time,
            final_state: (&out.final_state).into(),
            sign_pattern: out.sign_pattern.clone(),
            input: to_vec(input),
            input_magnitude: out.input_magnitude,
            input_alignment: out.input_alignment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub regime: String,
    pub u_critical: f64,
    pub u_low: f64,
    pub u_high: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

fn normal_vector(rng: &mut ChaCha8Rng, sigma: f64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    })
}

pub fn cmd_simulate(g: &Graph, cfg: &RunConfig) -> LabResult<SimulateReport> {
    let n = g.num_vertices();
    let setup = Setup::new(g, cfg)?;
    let sim = &cfg.simulate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = match sim.input_sigma {
        Some(sigma) => setup.params.with_input(normal_vector(&mut rng, sigma, n)),
        None => setup.params.clone(),
    };
    let x0 = match (&sim.initial_x, sim.initial_x_sigma) {
        (Some(v), _) if v.len() != n => {
            return Err(LabError::Config(format!(
                "[simulate] initial_x has {} entries for {n} agents",
                v.len()
            )))
        }
        (Some(v), _) => DVector::from_column_slice(v),
        (None, Some(sigma)) => normal_vector(&mut rng, sigma, n),
        (None, None) => DVector::zeros(n),
    };
    let u0 = match sim.initial_u.len() {
        1 => DVector::from_element(n, sim.initial_u[0]),
        k if k == n => DVector::from_column_slice(&sim.initial_u),
        k => {
            return Err(LabError::Config(format!(
                "[simulate] initial_u has {k} entries for {n} agents"
            )))
        }
    };
    let start = SystemState::new(x0, u0)?;
    let crit = cfg.criteria()?;
    let ap = &setup.attention;
    let traj = integrate(|s| rhs_coupled(s, &params, ap, g), &start, &cfg.integrator)?;
    let mut csv = Vec::new();
    write_trajectory(&mut csv, &traj)?;
    write_bytes(&cfg.output_dir, TRAJECTORY_CSV, &csv)?;
    let out = detect_cascade(&traj, &crit, ap, &params.input, &setup.critical)?;
    let report = SimulateReport {
        regime: params.regime().to_string(),
        u_critical: setup.u_critical,
        u_low: ap.u_low,
        u_high: ap.u_high,
        samples: traj.len(),
        verdict: Verdict::new(&out, &params.input),
    };
    write_json(&cfg.output_dir, VERDICT_JSON, &report.verdict)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialReport {
    pub kind: String,
    pub parameter: f64,
    pub projection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub name: String,
    pub file: String,
    pub points: usize,
    pub termination: String,
    pub parameter_range: [f64; 2],
    pub special: Vec<SpecialReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub mode: String,
    pub u_critical: f64,
    pub input: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub branches: Vec<BranchReport>,
    pub notes: Vec<String>,
}

fn branch_report(name: &str, file: &str, b: &Branch) -> BranchReport {
    let (lo, hi) = b
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.parameter), hi.max(p.parameter))
        });
    BranchReport {
        name: name.to_string(),
        file: file.to_string(),
        points: b.points.len(),
        termination: format!("{:?}", b.termination),
        parameter_range: [lo, hi],
        special: b
            .special
            .iter()
            .map(|s| SpecialReport {
                kind: s.kind.as_str().to_string(),
                parameter: s.parameter,
                projection: s.projection,
            })
            .collect(),
    }
}

/// Continuation branches of the configured system.
///
/// `fixed_u` continues the opinion equilibria in a uniform attention from
/// `x = 0`, follows both branches leaving every branch point, and for a
/// nonzero input also searches for a disconnected branch from the mirrored
/// end state. `coupled_input` continues the coupled equilibria from rest in
/// the input magnitude along the configured direction.
pub fn cmd_bifurcate(
    g: &Graph,
    cfg: &RunConfig,
    mode: BifurcationMode,
) -> LabResult<BifurcationReport> {
    let n = g.num_vertices();
    let setup = Setup::new(g, cfg)?;
    let bc = &cfg.bifurcate;
    let uc = setup.u_critical;
    let (lo, hi) = match mode {
        BifurcationMode::FixedU => (
            bc.param_min.unwrap_or(0.5 * uc),
            bc.param_max.unwrap_or(2.0 * uc),
        ),
        BifurcationMode::CoupledInput => (
            bc.param_min.unwrap_or(0.0),
            bc.param_max.unwrap_or(cfg.threshold.bracket_hi),
        ),
    };
    if !(hi > lo) {
        return Err(LabError::Config(format!(
            "[bifurcate] empty parameter range [{lo}, {hi}]"
        )));
    }
    let settings = ContinuationSettings::new(lo, hi).with_max_step(bc.max_step);
    settings.validate()?;
    let mut branches: Vec<(String, Branch)> = Vec::new();
    let mut notes = Vec::new();
    let mut direction = None;
    let with_attention = mode == BifurcationMode::CoupledInput;
    match mode {
        BifurcationMode::FixedU => {
            let problem = FixedAttentionProblem {
                graph: g,
                params: &setup.params,
                critical: setup.critical.clone(),
            };
            let primary =
                continue_branch(&problem, &SystemState::neutral(n, lo), lo, 1.0, &settings)?;
            let bps: Vec<_> = primary.branch_points().cloned().collect();
            let end = primary.points.last().map(|p| p.state.clone());
            branches.push(("primary".into(), primary));
            for (k, bp) in bps.iter().enumerate() {
                let [plus, minus] = seed_branches(&problem, bp, &settings)?;
                branches.push((format!("bp{k}_plus"), plus));
                branches.push((format!("bp{k}_minus"), minus));
            }
            if bps.is_empty() && setup.params.input.amax() > 0.0 {
                if let Some(end) = end {
                    let mut guess = end.clone();
                    guess.x = -guess.x;
                    match continue_branch(&problem, &guess, hi, -1.0, &settings) {
                        Ok(b)
                            if b.points
                                .first()
                                .is_some_and(|p| (&p.state.x - &end.x).amax() > 1e-6) =>
                        {
                            branches.push(("mirrored".into(), b));
                        }
                        Ok(_) => notes
                            .push("mirrored start converged back onto the primary branch".into()),
                        Err(e) => notes.push(format!(
                            "no disconnected branch found from the mirrored state: {e}"
                        )),
                    }
                }
            }
        }
        BifurcationMode::CoupledInput => {
            let dir = setup.direction(&bc.direction)?;
            let base = setup.params.with_input(DVector::zeros(n));
            let problem = CoupledInputProblem {
                graph: g,
                params: &base,
                attention: &setup.attention,
                direction: dir.clone(),
                critical: setup.critical.clone(),
            };
            if setup.params.input.amax() > 0.0 {
                notes.push("the [model] input is replaced by p * direction".into());
            }
            let start = SystemState::neutral(n, setup.attention.u_low);
            branches.push((
                "input".into(),
                continue_branch(&problem, &start, lo, 1.0, &settings)?,
            ));
            direction = Some(to_vec(&dir));
        }
    }
    let mut reports = Vec::new();
    for (name, b) in &branches {
        let file = format!("branch_{name}.csv");
        let mut csv = Vec::new();
        write_branch(&mut csv, &branch_rows(b, with_attention), n, with_attention)?;
        write_bytes(&cfg.output_dir, &file, &csv)?;
        reports.push(branch_report(name, &file, b));
    }
    let refs: Vec<(String, &Branch)> = branches.iter().map(|(k, b)| (k.clone(), b)).collect();
    write_bytes(
        &cfg.output_dir,
        BRANCH_SUMMARY,
        branch_summary(&refs).as_bytes(),
    )?;
    let report = BifurcationReport {
        mode: mode.as_str().to_string(),
        u_critical: uc,
        input: to_vec(&setup.params.input),
        direction,
        branches: reports,
        notes,
    };
    write_json(&cfg.output_dir, BIFURCATE_JSON, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub u_critical: f64,
    pub direction: Vec<f64>,
    pub alignment: f64,
    pub threshold: f64,
    pub bracket: [f64; 2],
    pub trials: usize,
    pub below: Verdict,
    pub above: Verdict,
    /// Fold of the weak branch continued in the magnitude, if requested and
    /// found inside the bracket.
    pub fold: Option<f64>,
}

pub fn cmd_threshold(g: &Graph, cfg: &RunConfig) -> LabResult<ThresholdReport> {
    let setup = Setup::new(g, cfg)?;
    let tc = &cfg.threshold;
    let dir = setup.direction(&tc.direction)?;
    let base = setup.params.with_input(DVector::zeros(g.num_vertices()));
    let crit = cfg.criteria()?;
    let r = find_cascade_threshold(
        g,
        &base,
        &setup.attention,
        &crit,
        &dir,
        tc.bracket_hi,
        tc.rel_width,
        &cfg.integrator,
    )?;
    let fold = if tc.fold_check {
        fold_threshold(g, &base, &setup.attention, &dir, tc.bracket_hi)?.map(|(p, _)| p)
    } else {
        None
    };
    let report = ThresholdReport {
        u_critical: setup.u_critical,
        alignment: input_alignment(&dir, &setup.critical),
        direction: to_vec(&dir),
        threshold: r.threshold_p,
        bracket: [r.bracket.0, r.bracket.1],
        trials: r.trials,
        below: Verdict::new(&r.below, &(&dir * r.bracket.0)),
        above: Verdict::new(&r.above, &(&dir * r.bracket.1)),
        fold,
    };
    write_json(&cfg.output_dir, THRESHOLD_JSON, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub regime: String,
    pub u_critical: f64,
    pub u_low: f64,
    pub u_high: f64,
    pub magnitudes: Vec<f64>,
    pub runs_per_magnitude: usize,
    pub alignment_bins: usize,
    pub total_runs: usize,
    pub cascaded_runs: usize,
    pub magnitude_inversions: Vec<usize>,
    /// Smallest magnitude where at most half of a bin's runs fail to
    /// cascade; `None` for empty bins or when no magnitude gets there.
    pub threshold_magnitudes: Vec<Option<f64>>,
    pub alignment_inversions: usize,
}

pub fn cmd_sweep<F>(
    g: &Graph,
    cfg: &RunConfig,
    threads: usize,
    progress: F,
) -> LabResult<(SweepReport, SweepOutput)>
where
    F: FnMut(usize, &cascade_core::sweep::HeatmapGrid),
{
    let setup = Setup::new(g, cfg)?;
    let sweep = cfg.sweep_config()?;
    let crit = cfg.criteria()?;
    let base = setup.params.with_input(DVector::zeros(g.num_vertices()));
    let plan = SweepPlan::new(g, &base, &setup.attention, &crit, &sweep)?
        .with_integrator(cfg.integrator.clone());
    let out = run_sweep_parallel(&plan, threads, progress)?;
    let mut csv = Vec::new();
    write_heatmap(&mut csv, &out.grid)?;
    write_bytes(&cfg.output_dir, HEATMAP_CSV, &csv)?;
    let mut runs = Vec::new();
    write_runs(&mut runs, &out.runs, &sweep.magnitudes)?;
    write_bytes(&cfg.output_dir, RUNS_CSV, &runs)?;
    let grid = &out.grid;
    let report = SweepReport {
        seed: sweep.rng_seed,
        regime: sweep.regime.to_string(),
        u_critical: setup.u_critical,
        u_low: setup.attention.u_low,
        u_high: setup.attention.u_high,
        magnitudes: sweep.magnitudes.clone(),
        runs_per_magnitude: sweep.runs_per_magnitude,
        alignment_bins: sweep.alignment_bins,
        total_runs: grid.total_count(),
        cascaded_runs: out.runs.iter().filter(|r| r.cascaded).count(),
        magnitude_inversions: (0..grid.alignment_bins)
            .map(|b| grid.magnitude_inversions(b))
            .collect(),
        threshold_magnitudes: (0..grid.alignment_bins)
            .map(|b| grid.threshold_magnitude(b, 0.5).filter(|m| m.is_finite()))
            .collect(),
        alignment_inversions: grid.alignment_inversions(0.5),
    };
    write_json(&cfg.output_dir, SWEEP_JSON, &report)?;
    Ok((report, out))
}
