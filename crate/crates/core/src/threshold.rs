//! Input magnitude at which a cascade ignites along a fixed input direction.
//!
//! The default method bisects on the magnitude, integrating the coupled
//! system from rest for each trial. Continuation of the weakly opinionated
//! branch to its fold gives an independent estimate.

use nalgebra::DVector;

use crate::cascade::{simulate_cascade, CascadeCriteria, CascadeOutcome};
use crate::continuation::{continue_branch, ContinuationSettings, CoupledInputProblem};
use crate::dynamics::{AttentionParams, ModelParams, SystemState};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::integrate::IntegratorConfig;
use crate::math::{abs, sqrt};
use crate::reduction::critical_attention;
use crate::spectra::{compute_spectrum, DEFAULT_GAP_TOLERANCE};

/// Default relative bracket width of the bisection.
pub const DEFAULT_RELATIVE_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleNodeResult {
    pub direction: DVector<f64>,
    /// Smallest magnitude known to cascade, the upper end of the bracket.
    pub threshold_p: f64,
    pub bracket: (f64, f64),
    /// Final state of the last run below threshold; it sits close to the
    /// fold of the weakly opinionated branch.
    pub equilibrium_at_fold: SystemState,
    /// Outcomes at the two bracket ends.
    pub below: CascadeOutcome,
    pub above: CascadeOutcome,
    pub trials: usize,
}

/// Unit vector with `<v_c, b> = alignment`, completed inside the plane of
/// `v_c` and `other`.
pub fn aligned_direction(
    critical: &DVector<f64>,
    alignment: f64,
    other: &DVector<f64>,
) -> Result<DVector<f64>> {
    if !(alignment.abs() <= 1.0) {
        return Err(Error::InvalidParameter(
            "alignment must lie in [-1, 1]".into(),
        ));
    }
    let vc = critical / critical.norm();
    let mut e = other - &vc * vc.dot(other);
    let nrm = e.norm();
    if !(nrm > 1e-12 * other.norm()) || nrm == 0.0 {
        return Err(Error::InvalidParameter(
            "completion vector is parallel to v_c".into(),
        ));
    }
    e /= nrm;
    Ok(&vc * alignment + e * sqrt((1.0 - alignment * alignment).max(0.0)))
}

/// Bisection on the input magnitude `m` with `b = m * direction`; every trial
/// starts from `x = 0`, `u = 0` and is judged at `crit.t_end`.
#[allow(clippy::too_many_arguments)]
pub fn find_cascade_threshold(
    g: &Graph,
    p: &ModelParams,
    ap: &AttentionParams,
    crit: &CascadeCriteria,
    direction: &DVector<f64>,
    bracket_hi: f64,
    rel_width: f64,
    integrator: &IntegratorConfig,
) -> Result<SaddleNodeResult> {
    crit.validate()?;
    p.check_dimension(g)?;
    if direction.len() != g.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: g.num_vertices(),
            found: direction.len(),
        });
    }
    if abs(direction.norm() - 1.0) > 1e-9 {
        return Err(Error::InvalidParameter(
            "direction must have unit norm".into(),
        ));
    }
    if !(bracket_hi > 0.0) || !(rel_width > 0.0 && rel_width < 1.0) {
        return Err(Error::InvalidParameter("bad bracket or width".into()));
    }
    let s = compute_spectrum(g, DEFAULT_GAP_TOLERANCE)?;
    let cp = critical_attention(&s, p)?;
    if !(ap.u_low < cp.u_star) {
        return Err(Error::NoBistability {
            u_low: ap.u_low,
            u_critical: cp.u_star,
        });
    }
    let vc = s.critical_vector(p.regime())?;
    let n = g.num_vertices();
    let rest = SystemState::neutral(n, 0.0);
    let mut trials = 0;
    let mut run = |m: f64| {
        trials += 1;
        simulate_cascade(
            g,
            &p.with_input(direction * m),
            ap,
            crit,
            &rest,
            integrator,
            &vc,
        )
    };
    let above_hi = run(bracket_hi)?;
    if !above_hi.cascaded {
        return Err(Error::NoThresholdInBracket { bracket_hi });
    }
    let mut below = run(0.0)?;
    if below.cascaded {
        return Err(Error::NoBistability {
            u_low: ap.u_low,
            u_critical: cp.u_star,
        });
    }
    let (mut lo, mut hi) = (0.0, bracket_hi);
    let mut above = above_hi;
    while hi - lo > rel_width * hi {
        let mid = 0.5 * (lo + hi);
        let out = run(mid)?;
        if out.cascaded {
            hi = mid;
            above = out;
        } else {
            lo = mid;
            below = out;
        }
    }
    Ok(SaddleNodeResult {
        direction: direction.clone(),
        threshold_p: hi,
        bracket: (lo, hi),
        equilibrium_at_fold: below.final_state.clone(),
        below,
        above,
        trials,
    })
}

/// First fold of the coupled equilibrium branch continued in the input
/// magnitude from rest, if it occurs below `p_max`.
pub fn fold_threshold(
    g: &Graph,
    p: &ModelParams,
    ap: &AttentionParams,
    direction: &DVector<f64>,
    p_max: f64,
) -> Result<Option<(f64, SystemState)>> {
    let s = compute_spectrum(g, DEFAULT_GAP_TOLERANCE)?;
    let vc = s.critical_vector(p.regime())?;
    let base = p.with_input(DVector::zeros(g.num_vertices()));
    let problem = CoupledInputProblem {
        graph: g,
        params: &base,
        attention: ap,
        direction: direction.clone(),
        critical: vc,
    };
    let settings = ContinuationSettings::new(0.0, p_max);
    let start = SystemState::neutral(g.num_vertices(), ap.u_low);
    let branch = continue_branch(&problem, &start, 0.0, 1.0, &settings)?;
    let fold = branch
        .folds()
        .next()
        .map(|f| (f.parameter, f.state.clone()));
    Ok(fold)
}
