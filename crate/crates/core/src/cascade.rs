//! Cascade detection on simulated trajectories and random input vectors.

use alloc::vec::Vec;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{rhs_coupled, AttentionParams, ModelParams, SystemState, Trajectory};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::integrate::{integrate_final, IntegratorConfig};
use crate::math::{abs, sign_with_band};
use crate::spectra::CentralityVector;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeCriteria {
    /// Opinion magnitude every agent must exceed.
    pub theta_x: f64,
    /// Attention must exceed `u_low + attention_fraction * (u_high - u_low)`.
    pub attention_fraction: f64,
    pub t_end: f64,
}

impl Default for CascadeCriteria {
    fn default() -> Self {
        Self {
            theta_x: 0.1,
            attention_fraction: 0.5,
            t_end: 500.0,
        }
    }
}

impl CascadeCriteria {
    pub fn new(theta_x: f64, attention_fraction: f64, t_end: f64) -> Result<Self> {
        let c = Self {
            theta_x,
            attention_fraction,
            t_end,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_x > 0.0) || !self.theta_x.is_finite() {
            return Err(Error::InvalidParameter("theta_x must be positive".into()));
        }
        if !(self.attention_fraction > 0.0 && self.attention_fraction < 1.0) {
            return Err(Error::InvalidParameter(
                "attention_fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter("t_end must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Agreement,
    Disagreement,
    None,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Agreement => "agreement",
            Classification::Disagreement => "disagreement",
            Classification::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    pub cascaded: bool,
    pub final_time: f64,
    pub final_state: SystemState,
    /// Sign of each opinion, zero inside `[-theta_x, theta_x]`.
    pub sign_pattern: Vec<i8>,
    pub classification: Classification,
    pub input_magnitude: f64,
    /// `<v_c, b> / |b|`, zero for a zero input.
    pub input_alignment: f64,
}

/// `<v_c, b> / |b|` clamped to `[-1, 1]`; zero for `b = 0`.
pub fn input_alignment(b: &DVector<f64>, critical: &DVector<f64>) -> f64 {
    let nrm = b.norm();
    if nrm == 0.0 {
        0.0
    } else {
        (critical.dot(b) / nrm).clamp(-1.0, 1.0)
    }
}

/// Verdict on a final state alone.
pub fn classify_final_state(
    t: f64,
    state: &SystemState,
    crit: &CascadeCriteria,
    ap: &AttentionParams,
    input: &DVector<f64>,
    critical: &DVector<f64>,
) -> Result<CascadeOutcome> {
    if !state.is_finite() {
        return Err(Error::Diverged {
            t,
            norm: f64::INFINITY,
        });
    }
    if t < crit.t_end * (1.0 - 1e-12) {
        return Err(Error::TrajectoryIncomplete {
            reached: t,
            t_end: crit.t_end,
        });
    }
    let u_bar = ap.u_low + crit.attention_fraction * (ap.u_high - ap.u_low);
    let opinionated = state.x.iter().all(|x| abs(*x) > crit.theta_x);
    let attentive = state.u.iter().all(|u| *u > u_bar);
    let cascaded = !state.x.is_empty() && opinionated && attentive;
    let sign_pattern: Vec<i8> = state
        .x
        .iter()
        .map(|x| sign_with_band(*x, crit.theta_x))
        .collect();
    let classification = if !cascaded {
        Classification::None
    } else if sign_pattern.iter().all(|s| *s == sign_pattern[0]) {
        Classification::Agreement
    } else {
        Classification::Disagreement
    };
    Ok(CascadeOutcome {
        cascaded,
        final_time: t,
        final_state: state.clone(),
        sign_pattern,
        classification,
        input_magnitude: input.norm(),
        input_alignment: input_alignment(input, critical),
    })
}

/// Cascade verdict at the last sample of `traj`, which must reach
/// `crit.t_end`.
pub fn detect_cascade(
    traj: &Trajectory,
    crit: &CascadeCriteria,
    ap: &AttentionParams,
    input: &DVector<f64>,
    critical: &DVector<f64>,
) -> Result<CascadeOutcome> {
    let (t, state) = traj.last().ok_or(Error::TrajectoryIncomplete {
        reached: 0.0,
        t_end: crit.t_end,
    })?;
    classify_final_state(t, state, crit, ap, input, critical)
}

/// Integrates the coupled system from `start` up to `crit.t_end` and tests
/// the final state.
pub fn simulate_cascade(
    g: &Graph,
    p: &ModelParams,
    ap: &AttentionParams,
    crit: &CascadeCriteria,
    start: &SystemState,
    integrator: &IntegratorConfig,
    critical: &DVector<f64>,
) -> Result<CascadeOutcome> {
    let mut cfg = integrator.clone();
    cfg.t_end = crit.t_end;
    let (t, end) = integrate_final(|s| rhs_coupled(s, p, ap, g), start, &cfg)?;
    classify_final_state(t, &end, crit, ap, &p.input, critical)
}

/// Standard normal entries rescaled to Euclidean norm `magnitude`.
pub fn random_input<R: Rng + ?Sized>(
    rng: &mut R,
    magnitude: f64,
    n: usize,
) -> Result<DVector<f64>> {
    if !(magnitude >= 0.0) || !magnitude.is_finite() {
        return Err(Error::InvalidParameter(
            "input magnitude must be nonnegative".into(),
        ));
    }
    if magnitude == 0.0 || n == 0 {
        return Ok(DVector::zeros(n));
    }
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let nrm = v.norm();
        if nrm > 0.0 {
            return Ok(v * (magnitude / nrm));
        }
    }
}

/// Fraction of agents whose opinion sign matches the centrality sign, taking
/// the better of the two global orientations.
pub fn sign_pattern_match(outcome: &CascadeOutcome, cv: &CentralityVector) -> Result<f64> {
    if !outcome.cascaded {
        return Err(Error::NotCascaded);
    }
    let n = outcome.sign_pattern.len();
    if cv.entries.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cv.entries.len(),
        });
    }
    let (mut same, mut flipped) = (0usize, 0usize);
    for (s, c) in outcome.sign_pattern.iter().zip(cv.entries.iter()) {
        let cs = sign_with_band(*c, 0.0);
        if *s == cs {
            same += 1;
        }
        if *s == -cs {
            flipped += 1;
        }
    }
    Ok(same.max(flipped) as f64 / n as f64)
}
