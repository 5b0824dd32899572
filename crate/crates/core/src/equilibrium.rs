//! Damped Newton iteration for equilibria and linear stability
//! classification.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::dynamics::{SystemState, VectorField};
use crate::error::{Error, Result};
use crate::linalg::{general_eigenvalues, lu_solve, C64};
use crate::math::norm_inf;

pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;
/// Eigenvalues within this distance of the imaginary axis count as critical.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-7;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

/// Result of a converged Newton solve on a flat vector.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub point: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Sup norm of the residual before each iteration and at the end.
    pub residual_history: Vec<f64>,
}

/// Solves `f(y) = 0` with Newton steps, halving a step (up to 20 times)
/// while it fails to reduce the residual.
pub fn newton_solve<F, J>(
    f: F,
    jac: J,
    guess: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "Newton tolerance must be positive".into(),
        ));
    }
    let mut y = guess;
    let mut r = f(&y)?;
    let mut res = norm_inf(&r);
    let mut history = alloc::vec![res];
    let mut iterations = 0;
    while !(res <= tol) {
        if iterations == max_iter || !res.is_finite() {
            return Err(Error::NewtonMaxIter {
                iterations,
                residual: res,
            });
        }
        let step = lu_solve(&jac(&y)?, &(-&r))?;
        let mut scale = 1.0;
        let mut accepted = None;
        for h in 0..=MAX_HALVINGS {
            let trial = &y + &step * scale;
            let r_trial = f(&trial)?;
            let res_trial = norm_inf(&r_trial);
            if res_trial < res || h == MAX_HALVINGS {
                accepted = Some((trial, r_trial, res_trial));
                break;
            }
            scale *= 0.5;
        }
        let (y_new, r_new, res_new) = accepted.expect("halving loop always accepts");
        y = y_new;
        r = r_new;
        res = res_new;
        iterations += 1;
        history.push(res);
    }
    Ok(NewtonReport {
        point: y,
        residual_norm: res,
        iterations,
        residual_history: history,
    })
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: SystemState,
    pub residual_norm: f64,
    pub jacobian_eigenvalues: Vec<C64>,
    pub stability: Stability,
    /// Eigenvalue with the largest real part.
    pub leading_eigenvalue: C64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Stable iff every real part is below `-margin`, unstable iff one exceeds
/// `+margin`, marginal otherwise.
pub fn classify_eigenvalues(eigs: &[C64], margin: f64) -> Stability {
    let lead = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if lead < -margin {
        Stability::Stable
    } else if lead > margin {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

pub fn classify_stability(eq: &Equilibrium, margin: f64) -> Stability {
    classify_eigenvalues(&eq.jacobian_eigenvalues, margin)
}

fn leading(eigs: &[C64]) -> C64 {
    // eigenvalues arrive sorted by decreasing real part
    eigs.first()
        .copied()
        .unwrap_or(C64::new(f64::NEG_INFINITY, 0.0))
}

/// Linearization of `field` at `y`, packaged as an [`Equilibrium`] record.
pub fn assess<V: VectorField>(field: &V, y: &DVector<f64>, margin: f64) -> Result<Equilibrium> {
    let residual_norm = norm_inf(&field.eval(y)?);
    let eigs = general_eigenvalues(&field.jacobian(y)?)?;
    Ok(Equilibrium {
        state: field.unpack(y),
        residual_norm,
        stability: classify_eigenvalues(&eigs, margin),
        leading_eigenvalue: leading(&eigs),
        jacobian_eigenvalues: eigs,
        iterations: 0,
        residual_history: Vec::new(),
    })
}

/// Newton equilibrium of `field` started from `guess`, with eigenvalues of
/// the Jacobian and a stability verdict at the default margin.
pub fn newton_equilibrium<V: VectorField>(
    field: &V,
    guess: &SystemState,
    tol: f64,
    max_iter: usize,
) -> Result<Equilibrium> {
    let report = newton_solve(
        |y| field.eval(y),
        |y| field.jacobian(y),
        field.pack(guess)?,
        tol,
        max_iter,
    )?;
    let mut eq = assess(field, &report.point, DEFAULT_STABILITY_MARGIN)?;
    eq.iterations = report.iterations;
    eq.residual_history = report.residual_history;
    Ok(eq)
}
