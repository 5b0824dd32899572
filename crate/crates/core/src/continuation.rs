//! Pseudo-arclength continuation of equilibrium branches.
//!
//! Points are pairs `(y, p)` of a state and a scalar parameter. Each step
//! predicts along the secant of the last two points and corrects with Newton
//! on the residual augmented by the condition that the correction stay
//! orthogonal to the predictor direction. Folds show up as a sign change of
//! the parameter component of the tangent, branch points as a real eigenvalue
//! crossing zero without a fold.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    coupling_argument, jacobian_coupled, jacobian_fixed, rhs_coupled, rhs_fixed, Attention,
    AttentionParams, ModelParams, SystemState,
};
use crate::equilibrium::{newton_solve, Stability, DEFAULT_STABILITY_MARGIN};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{general_eigenvalues, lu_solve, null_vector, C64};
use crate::math::{abs, norm_inf, tanh};

/// A parametrised family `F(y, p) = 0` of equilibrium problems.
pub trait ContinuationProblem {
    fn dim(&self) -> usize;
    fn residual(&self, y: &DVector<f64>, p: f64) -> Result<DVector<f64>>;
    /// Jacobian with respect to `y`.
    fn jacobian(&self, y: &DVector<f64>, p: f64) -> Result<DMatrix<f64>>;
    /// Derivative of the residual with respect to `p`.
    fn param_derivative(&self, y: &DVector<f64>, p: f64) -> Result<DVector<f64>>;
    fn state(&self, y: &DVector<f64>, p: f64) -> SystemState;
    fn pack(&self, s: &SystemState) -> Result<DVector<f64>>;
    /// Scalar summary of a point, `<v_c, x>`.
    fn projection(&self, y: &DVector<f64>) -> f64;
}

/// Fixed uniform attention as the parameter.
#[derive(Debug, Clone)]
pub struct FixedAttentionProblem<'a> {
    pub graph: &'a Graph,
    pub params: &'a ModelParams,
    pub critical: DVector<f64>,
}

impl ContinuationProblem for FixedAttentionProblem<'_> {
    fn dim(&self) -> usize {
        self.graph.num_vertices()
    }

    fn residual(&self, y: &DVector<f64>, p: f64) -> Result<DVector<f64>> {
        rhs_fixed(y, Attention::Uniform(p), self.params, self.graph)
    }

    fn jacobian(&self, y: &DVector<f64>, p: f64) -> Result<DMatrix<f64>> {
        jacobian_fixed(y, Attention::Uniform(p), self.params, self.graph)
    }

    fn param_derivative(&self, y: &DVector<f64>, _p: f64) -> Result<DVector<f64>> {
        Ok(coupling_argument(y, self.params, self.graph).map(tanh))
    }

    fn state(&self, y: &DVector<f64>, p: f64) -> SystemState {
        SystemState {
            x: y.clone(),
            u: DVector::from_element(y.len(), p),
        }
    }

    fn pack(&self, s: &SystemState) -> Result<DVector<f64>> {
        if s.x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.x.len(),
            });
        }
        Ok(s.x.clone())
    }

    fn projection(&self, y: &DVector<f64>) -> f64 {
        self.critical.dot(y)
    }
}

/// Coupled opinions and attention; the parameter scales the input
/// `b = p * direction`.
#[derive(Debug, Clone)]
pub struct CoupledInputProblem<'a> {
    pub graph: &'a Graph,
    pub params: &'a ModelParams,
    pub attention: &'a AttentionParams,
    pub direction: DVector<f64>,
    pub critical: DVector<f64>,
}

impl ContinuationProblem for CoupledInputProblem<'_> {
    fn dim(&self) -> usize {
        2 * self.graph.num_vertices()
    }

    fn residual(&self, y: &DVector<f64>, p: f64) -> Result<DVector<f64>> {
        let params = self.params.with_input(&self.direction * p);
        let s = self.state(y, p);
        Ok(rhs_coupled(&s, &params, self.attention, self.graph)?.to_flat())
    }

    fn jacobian(&self, y: &DVector<f64>, p: f64) -> Result<DMatrix<f64>> {
        jacobian_coupled(&self.state(y, p), self.params, self.attention, self.graph)
    }

    fn param_derivative(&self, _y: &DVector<f64>, _p: f64) -> Result<DVector<f64>> {
        let n = self.graph.num_vertices();
        Ok(DVector::from_fn(2 * n, |i, _| {
            if i < n {
                self.direction[i]
            } else {
                0.0
            }
        }))
    }

    fn state(&self, y: &DVector<f64>, _p: f64) -> SystemState {
        SystemState::from_flat(y, self.graph.num_vertices())
    }

    fn pack(&self, s: &SystemState) -> Result<DVector<f64>> {
        let n = self.graph.num_vertices();
        if s.x.len() != n || s.u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.x.len(),
            });
        }
        Ok(s.to_flat())
    }

    fn projection(&self, y: &DVector<f64>) -> f64 {
        let n = self.graph.num_vertices();
        self.critical.dot(&y.rows(0, n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// The corrector gives up once a failing step has been halved below this.
    pub failure_step: f64,
    pub tol: f64,
    pub max_corrector_iter: usize,
    pub param_min: f64,
    pub param_max: f64,
    pub max_points: usize,
    /// Stop once the state sup norm exceeds this.
    pub state_bound: f64,
}

impl ContinuationSettings {
    pub fn new(param_min: f64, param_max: f64) -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-6,
            max_step: 5e-2,
            failure_step: 1e-10,
            tol: 1e-10,
            max_corrector_iter: 10,
            param_min,
            param_max,
            max_points: 20_000,
            state_bound: 1e3,
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.initial_step >= self.min_step
            && self.max_step >= self.initial_step
            && self.failure_step > 0.0
            && self.failure_step <= self.min_step
            && self.tol > 0.0
            && self.max_corrector_iter > 0
            && self.param_min < self.param_max
            && self.max_points > 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "inconsistent continuation settings".into(),
            ))
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub parameter: f64,
    pub state: SystemState,
    pub stability: Stability,
    /// Unit tangent in `(y, p)` space.
    pub tangent: DVector<f64>,
    pub leading_eigenvalue: C64,
    pub projection: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecialKind {
    Fold,
    BranchPoint,
    /// Stability change through a complex pair.
    StabilityChange,
}

impl SpecialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecialKind::Fold => "fold",
            SpecialKind::BranchPoint => "branch_point",
            SpecialKind::StabilityChange => "stability_change",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecialPoint {
    pub kind: SpecialKind,
    pub parameter: f64,
    pub state: SystemState,
    pub projection: f64,
    /// Located between `points[after]` and `points[after + 1]`.
    pub after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    ParameterBound,
    MaxPoints,
    StateBound,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub special: Vec<SpecialPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn folds(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special.iter().filter(|s| s.kind == SpecialKind::Fold)
    }

    pub fn branch_points(&self) -> impl Iterator<Item = &SpecialPoint> {
        self.special
            .iter()
            .filter(|s| s.kind == SpecialKind::BranchPoint)
    }

    /// Linear interpolation of the first segment whose parameter range
    /// contains `p`.
    pub fn interpolate(&self, p: f64) -> Option<(SystemState, f64)> {
        self.points.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (lo, hi) = (a.parameter.min(b.parameter), a.parameter.max(b.parameter));
            if p < lo || p > hi || lo == hi {
                return None;
            }
            let t = (p - a.parameter) / (b.parameter - a.parameter);
            let x = &a.state.x + (&b.state.x - &a.state.x) * t;
            let u = &a.state.u + (&b.state.u - &a.state.u) * t;
            Some((
                SystemState { x, u },
                a.projection + t * (b.projection - a.projection),
            ))
        })
    }
}

fn augment(y: &DVector<f64>, p: f64) -> DVector<f64> {
    let n = y.len();
    DVector::from_fn(n + 1, |i, _| if i < n { y[i] } else { p })
}

fn split(z: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = z.len() - 1;
    (z.rows(0, n).into_owned(), z[n])
}

/// `[F_y F_p; r^T]`.
fn bordered<P: ContinuationProblem>(
    problem: &P,
    y: &DVector<f64>,
    p: f64,
    row: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = y.len();
    let jy = problem.jacobian(y, p)?;
    let jp = problem.param_derivative(y, p)?;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&jy);
    m.view_mut((0, n), (n, 1)).copy_from(&jp);
    m.view_mut((n, 0), (1, n + 1)).copy_from(&row.transpose());
    Ok(m)
}

/// Unit tangent with `<t, reference> = 1` before normalisation, so the
/// orientation follows `reference`.
fn tangent<P: ContinuationProblem>(
    problem: &P,
    y: &DVector<f64>,
    p: f64,
    reference: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = bordered(problem, y, p, reference)?;
    let mut rhs = DVector::zeros(y.len() + 1);
    rhs[y.len()] = 1.0;
    let t = lu_solve(&m, &rhs)?;
    let nrm = t.norm();
    Ok(t / nrm)
}

/// Newton on `F(y, p) = 0`, `<dir, z - pred> = 0`.
fn correct<P: ContinuationProblem>(
    problem: &P,
    pred: &DVector<f64>,
    dir: &DVector<f64>,
    settings: &ContinuationSettings,
) -> Result<(DVector<f64>, usize)> {
    let report = newton_solve(
        |z| {
            let (y, p) = split(z);
            let f = problem.residual(&y, p)?;
            let mut g = augment(&f, 0.0);
            g[y.len()] = dir.dot(&(z - pred));
            Ok(g)
        },
        |z| {
            let (y, p) = split(z);
            bordered(problem, &y, p, dir)
        },
        pred.clone(),
        settings.tol,
        settings.max_corrector_iter,
    )?;
    Ok((report.point, report.iterations))
}

/// Equilibrium at a fixed parameter value, Newton from `guess`.
pub fn correct_at_parameter<P: ContinuationProblem>(
    problem: &P,
    guess: &DVector<f64>,
    p: f64,
    settings: &ContinuationSettings,
) -> Result<DVector<f64>> {
    let report = newton_solve(
        |y| problem.residual(y, p),
        |y| problem.jacobian(y, p),
        guess.clone(),
        settings.tol,
        4 * settings.max_corrector_iter,
    )?;
    Ok(report.point)
}

fn leading_eigenvalue<P: ContinuationProblem>(
    problem: &P,
    y: &DVector<f64>,
    p: f64,
) -> Result<C64> {
    let eigs = general_eigenvalues(&problem.jacobian(y, p)?)?;
    Ok(eigs[0])
}

fn classify(lead: C64) -> Stability {
    crate::equilibrium::classify_eigenvalues(&[lead], DEFAULT_STABILITY_MARGIN)
}

fn make_point<P: ContinuationProblem>(
    problem: &P,
    y: &DVector<f64>,
    p: f64,
    tangent: DVector<f64>,
) -> Result<BranchPoint> {
    let lead = leading_eigenvalue(problem, y, p)?;
    Ok(BranchPoint {
        parameter: p,
        state: problem.state(y, p),
        stability: classify(lead),
        tangent,
        leading_eigenvalue: lead,
        projection: problem.projection(y),
        residual_norm: norm_inf(&problem.residual(y, p)?),
    })
}

/// Traces the branch through the equilibrium `start` at parameter `p0`,
/// initially moving in the direction of `sign(direction)` in the parameter.
pub fn continue_branch<P: ContinuationProblem>(
    problem: &P,
    start: &SystemState,
    p0: f64,
    direction: f64,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    settings.validate()?;
    let guess = problem.pack(start)?;
    let y0 = correct_at_parameter(problem, &guess, p0, settings)?;
    let mut reference = DVector::zeros(problem.dim() + 1);
    reference[problem.dim()] = if direction < 0.0 { -1.0 } else { 1.0 };
    trace(problem, y0, p0, &reference, settings)
}

fn trace<P: ContinuationProblem>(
    problem: &P,
    y0: DVector<f64>,
    p0: f64,
    reference: &DVector<f64>,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    let failed = |p: f64, count: usize| Error::ContinuationFailed {
        last_parameter: p,
        points: count,
    };
    let t0 = tangent(problem, &y0, p0, reference)?;
    let mut points = alloc::vec![make_point(problem, &y0, p0, t0)?];
    let mut special = Vec::new();
    let mut current = augment(&y0, p0);
    let mut previous: Option<DVector<f64>> = None;
    let mut h = settings.initial_step;
    // stability of the latest point outside the marginal band
    let mut definite = Some(points[0].stability).filter(|s| *s != Stability::Marginal);
    let termination;
    loop {
        if points.len() >= settings.max_points {
            termination = Termination::MaxPoints;
            break;
        }
        let last = points.last().expect("branch is never empty");
        let dir = match &previous {
            Some(prev) => {
                let s = &current - prev;
                let nrm = s.norm();
                s / nrm
            }
            None => last.tangent.clone(),
        };
        let (next, iterations, t_next) = loop {
            let pred = &current + &dir * h;
            let attempt = correct(problem, &pred, &dir, settings).and_then(|(z, it)| {
                let (y, p) = split(&z);
                let t = tangent(problem, &y, p, &last.tangent)?;
                Ok((z, it, t))
            });
            match attempt {
                // reject steps that turn sharply, they tend to jump branches
                Ok((z, it, t)) if t.dot(&last.tangent) > 0.8 || h <= settings.min_step => {
                    break (z, it, t);
                }
                _ => {
                    h *= 0.5;
                    if h < settings.failure_step {
                        return Err(failed(last.parameter, points.len()));
                    }
                }
            }
        };
        let (y, p) = split(&next);
        let prev_p = last.parameter;
        let prev_t = last.tangent.clone();
        let prev_y = problem.pack(&last.state)?;

        if p < settings.param_min || p > settings.param_max {
            let bound = if p < settings.param_min {
                settings.param_min
            } else {
                settings.param_max
            };
            let t = (bound - prev_p) / (p - prev_p);
            let guess = &prev_y + (&y - &prev_y) * t;
            let yb = correct_at_parameter(problem, &guess, bound, settings)
                .map_err(|_| failed(prev_p, points.len()))?;
            let tb = tangent(problem, &yb, bound, &prev_t)?;
            let point = make_point(problem, &yb, bound, tb)?;
            let at = points.len() - 1;
            note_special(
                problem,
                &mut special,
                at,
                &prev_y,
                prev_p,
                &prev_t,
                &mut definite,
                &point,
                settings,
            );
            points.push(point);
            termination = Termination::ParameterBound;
            break;
        }

        let point = make_point(problem, &y, p, t_next)?;
        let at = points.len() - 1;
        note_special(
            problem,
            &mut special,
            at,
            &prev_y,
            prev_p,
            &prev_t,
            &mut definite,
            &point,
            settings,
        );
        let out_of_bounds = norm_inf(&y) > settings.state_bound;
        points.push(point);
        previous = Some(current);
        current = next;
        if out_of_bounds {
            termination = Termination::StateBound;
            break;
        }
        h = if iterations <= 2 {
            (h * 2.0).min(settings.max_step)
        } else if iterations >= 6 {
            (h * 0.5).max(settings.min_step)
        } else {
            h.clamp(settings.min_step, settings.max_step)
        };
    }
    Ok(Branch {
        points,
        special,
        termination,
    })
}

#[allow(clippy::too_many_arguments)]
fn note_special<P: ContinuationProblem>(
    problem: &P,
    special: &mut Vec<SpecialPoint>,
    at: usize,
    prev_y: &DVector<f64>,
    prev_p: f64,
    prev_t: &DVector<f64>,
    definite: &mut Option<Stability>,
    point: &BranchPoint,
    settings: &ContinuationSettings,
) {
    let n = problem.dim();
    let fold = prev_t[n] * point.tangent[n] < 0.0;
    if fold {
        if point.stability != Stability::Marginal {
            *definite = Some(point.stability);
        }
        if let Ok((y, p)) = refine_fold(problem, prev_y, prev_p, prev_t, point, settings) {
            special.push(SpecialPoint {
                kind: SpecialKind::Fold,
                parameter: p,
                state: problem.state(&y, p),
                projection: problem.projection(&y),
                after: at,
            });
        }
        return;
    }
    if point.stability == Stability::Marginal {
        return;
    }
    let before = definite.replace(point.stability);
    if before.is_none_or(|s| s == point.stability) {
        return;
    }
    let y1 = problem
        .pack(&point.state)
        .expect("state produced by the problem");
    let kind = if point.leading_eigenvalue.im == 0.0 {
        SpecialKind::BranchPoint
    } else {
        SpecialKind::StabilityChange
    };
    let (y, p) = locate_bifurcation(problem, prev_y, prev_p, &y1, point.parameter, settings)
        .unwrap_or((y1.clone(), point.parameter));
    special.push(SpecialPoint {
        kind,
        parameter: p,
        state: problem.state(&y, p),
        projection: problem.projection(&y),
        after: at,
    });
}

/// Bisection in the parameter for the crossing of the leading real part
/// through zero between two points of a branch without a fold.
pub fn locate_bifurcation<P: ContinuationProblem>(
    problem: &P,
    y_a: &DVector<f64>,
    p_a: f64,
    y_b: &DVector<f64>,
    p_b: f64,
    settings: &ContinuationSettings,
) -> Result<(DVector<f64>, f64)> {
    let sign_a = leading_eigenvalue(problem, y_a, p_a)?.re > 0.0;
    let (mut lo, mut hi) = (p_a, p_b);
    let (mut ylo, mut yhi) = (y_a.clone(), y_b.clone());
    for _ in 0..200 {
        if abs(hi - lo) <= 1e-13 * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let guess = (&ylo + &yhi) * 0.5;
        let y = match correct_at_parameter(problem, &guess, mid, settings) {
            Ok(y) => y,
            Err(_) => break,
        };
        if (leading_eigenvalue(problem, &y, mid)?.re > 0.0) == sign_a {
            lo = mid;
            ylo = y;
        } else {
            hi = mid;
            yhi = y;
        }
    }
    let mid = 0.5 * (lo + hi);
    let y = correct_at_parameter(problem, &((&ylo + &yhi) * 0.5), mid, settings).unwrap_or(ylo);
    Ok((y, mid))
}

/// Bisection in arclength for the zero of the parameter component of the
/// tangent.
fn refine_fold<P: ContinuationProblem>(
    problem: &P,
    y_a: &DVector<f64>,
    p_a: f64,
    t_a: &DVector<f64>,
    b: &BranchPoint,
    settings: &ContinuationSettings,
) -> Result<(DVector<f64>, f64)> {
    let n = problem.dim();
    let za = augment(y_a, p_a);
    let zb = augment(&problem.pack(&b.state)?, b.parameter);
    let chord = &zb - &za;
    let len = chord.norm();
    let dir = chord / len;
    let (mut lo, mut hi) = (0.0, len);
    let mut best = zb.clone();
    for _ in 0..60 {
        if hi - lo <= 1e-14 * len.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pred = &za + &dir * mid;
        let (z, _) = correct(problem, &pred, &dir, settings)?;
        let (y, p) = split(&z);
        let t = tangent(problem, &y, p, t_a)?;
        if t[n] * t_a[n] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        best = z;
    }
    Ok(split(&best))
}

/// The two branches leaving a branch point along `+-` the kernel of the
/// Jacobian there, seeded at offset `1e-4`.
pub fn seed_branches<P: ContinuationProblem>(
    problem: &P,
    bp: &SpecialPoint,
    settings: &ContinuationSettings,
) -> Result<[Branch; 2]> {
    const OFFSET: f64 = 1e-4;
    let n = problem.dim();
    let y_bp = problem.pack(&bp.state)?;
    let phi = null_vector(&problem.jacobian(&y_bp, bp.parameter)?)?;
    let row = augment(&phi, 0.0);
    let mut out = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let target = sign * OFFSET;
        let guess = augment(&(&y_bp + &phi * target), bp.parameter);
        let report = newton_solve(
            |z| {
                let (y, p) = split(z);
                let f = problem.residual(&y, p)?;
                let mut g = augment(&f, 0.0);
                g[n] = phi.dot(&(&y - &y_bp)) - target;
                Ok(g)
            },
            |z| {
                let (y, p) = split(z);
                bordered(problem, &y, p, &row)
            },
            guess,
            settings.tol,
            4 * settings.max_corrector_iter,
        )?;
        let (y, p) = split(&report.point);
        out.push(trace(problem, y, p, &(&row * sign), settings)?);
    }
    let second = out.pop().expect("two seeds");
    let first = out.pop().expect("two seeds");
    Ok([first, second])
}

/// Equilibrium of a branch at parameter `p`, corrected from the
/// interpolated guess.
pub fn point_at_parameter<P: ContinuationProblem>(
    problem: &P,
    branch: &Branch,
    p: f64,
    settings: &ContinuationSettings,
) -> Result<BranchPoint> {
    let (guess, _) = branch
        .interpolate(p)
        .ok_or(Error::InvalidParameter(alloc::format!(
            "parameter {p} is not covered by the branch"
        )))?;
    let y = correct_at_parameter(problem, &problem.pack(&guess)?, p, settings)?;
    let mut reference = DVector::zeros(problem.dim() + 1);
    reference[problem.dim()] = 1.0;
    let t = tangent(problem, &y, p, &reference).unwrap_or(reference);
    make_point(problem, &y, p, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Regime;
    use crate::spectra::{compute_spectrum, DEFAULT_GAP_TOLERANCE};
    use core::f64::consts::SQRT_2;

    const U_A: f64 = 0.41421356237309503;

    fn setup(b: [f64; 3]) -> (Graph, ModelParams, DVector<f64>) {
        let g = Graph::path(3).unwrap();
        let p = ModelParams::new(1.0, 1.0, 1.0, DVector::from_vec(b.to_vec())).unwrap();
        let s = compute_spectrum(&g, DEFAULT_GAP_TOLERANCE).unwrap();
        let vc = s.critical_vector(Regime::Agreement).unwrap();
        (g, p, vc)
    }

    #[test]
    fn neutral_branch_loses_stability_at_critical_attention() {
        let (g, p, vc) = setup([0.0; 3]);
        let problem = FixedAttentionProblem {
            graph: &g,
            params: &p,
            critical: vc,
        };
        let settings = ContinuationSettings::new(0.2, 0.8);
        let branch =
            continue_branch(&problem, &SystemState::neutral(3, 0.2), 0.2, 1.0, &settings).unwrap();
        assert_eq!(branch.termination, Termination::ParameterBound);
        assert!((branch.points.last().unwrap().parameter - 0.8).abs() < 1e-15);
        let bps: Vec<_> = branch.branch_points().collect();
        assert_eq!(bps.len(), 1);
        assert!(
            (bps[0].parameter - 1.0 / (1.0 + SQRT_2)).abs() < 1e-8,
            "{}",
            bps[0].parameter
        );

        let [up, down] = seed_branches(&problem, bps[0], &settings).unwrap();
        for (branch, sign) in [(&up, 1.0), (&down, -1.0)] {
            assert_eq!(branch.termination, Termination::ParameterBound);
            assert!(branch.special.is_empty());
            for pt in &branch.points {
                assert!(pt.residual_norm <= 1e-8);
                assert!(pt.parameter > U_A);
                // right at the seed the leading eigenvalue is within the margin
                if pt.parameter > U_A + 1e-6 {
                    assert_eq!(pt.stability, Stability::Stable);
                }
                assert!(pt.projection * sign > 0.0);
            }
        }
        // odd symmetry of the two branches
        let a = point_at_parameter(&problem, &up, 0.5, &settings).unwrap();
        let b = point_at_parameter(&problem, &down, 0.5, &settings).unwrap();
        assert!((a.state.x + b.state.x).amax() < 1e-9);
    }

    #[test]
    fn unfolded_branch_is_connected_and_lower_one_folds() {
        let (g, _, vc) = setup([0.0; 3]);
        let b = &vc * 0.1 + DVector::from_vec(alloc::vec![0.05, 0.0, -0.05]);
        let p = ModelParams::new(1.0, 1.0, 1.0, b).unwrap();
        let problem = FixedAttentionProblem {
            graph: &g,
            params: &p,
            critical: vc.clone(),
        };
        let settings = ContinuationSettings::new(0.2, 0.8);
        let upper =
            continue_branch(&problem, &SystemState::neutral(3, 0.2), 0.2, 1.0, &settings).unwrap();
        assert_eq!(upper.termination, Termination::ParameterBound);
        assert!(upper.special.is_empty());
        assert!(upper.points.iter().all(|pt| pt.projection > 0.0));

        // the disconnected branch, reached from the mirrored upper state
        let end = upper.points.last().unwrap();
        let mut guess = end.state.clone();
        guess.x = -guess.x;
        let lower = continue_branch(&problem, &guess, 0.8, -1.0, &settings).unwrap();
        let folds: Vec<_> = lower.folds().collect();
        assert_eq!(folds.len(), 1);
        let fold = folds[0];
        assert!(fold.parameter > U_A && fold.parameter < 0.8);
        // the Jacobian is singular at the fold
        let y = problem.pack(&fold.state).unwrap();
        let lead = leading_eigenvalue(&problem, &y, fold.parameter).unwrap();
        assert!(lead.re.abs() < 1e-6, "{lead}");
    }

    #[test]
    fn coupled_branch_in_input_scale_folds() {
        let g = Graph::path(3).unwrap();
        let p = ModelParams::unforced(1.0, 1.0, 1.0, 3).unwrap();
        let s = compute_spectrum(&g, DEFAULT_GAP_TOLERANCE).unwrap();
        let vc = s.critical_vector(Regime::Agreement).unwrap();
        let ap = AttentionParams::new(U_A - 0.01, U_A + 0.6, 0.1, 3, 10.0).unwrap();
        let problem = CoupledInputProblem {
            graph: &g,
            params: &p,
            attention: &ap,
            direction: vc.clone(),
            critical: vc,
        };
        let settings = ContinuationSettings::new(0.0, 0.1);
        let branch = continue_branch(
            &problem,
            &SystemState::neutral(3, ap.u_low),
            0.0,
            1.0,
            &settings,
        )
        .unwrap();
        let fold = branch.folds().next().expect("fold in range");
        assert!(fold.parameter > 0.0 && fold.parameter < 0.1);
        assert_eq!(branch.points[0].stability, Stability::Stable);
        // past the fold, Newton from the fold state does not stay nearby
        let y = problem.pack(&fold.state).unwrap();
        let beyond = correct_at_parameter(&problem, &y, fold.parameter * 1.02, &settings);
        if let Ok(z) = beyond {
            assert!((z - y).amax() > 0.05);
        }
    }
}
