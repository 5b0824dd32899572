//! Explicit time integration: classical RK4 with a fixed step and the
//! Dormand-Prince 5(4) pair with local error control.

use alloc::vec::Vec;
use nalgebra::DVector;

use crate::dynamics::{SystemState, Trajectory};
use crate::error::{Error, Result};
use crate::math::{norm_inf, sqrt};

/// States whose sup norm exceeds this are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for the adaptive pair.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    /// Keep every `record_stride`-th step (first and last are always kept).
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn rk45(t_end: f64) -> Self {
        Self {
            method: Method::Rk45Adaptive,
            step: 1e-2,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            t_end,
            record_stride: 1,
        }
    }

    pub fn rk4(step: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            step,
            ..Self::rk45(t_end)
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("integrator step must be positive");
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad("integration horizon must be positive");
        }
        if self.record_stride == 0 {
            return bad("record stride must be positive");
        }
        if self.method == Method::Rk45Adaptive && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }
}

/// Integrates the autonomous field `rhs` from `s0` over `[0, cfg.t_end]`.
pub fn integrate<F>(mut rhs: F, s0: &SystemState, cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: FnMut(&SystemState) -> Result<SystemState>,
{
    let nx = s0.x.len();
    let mut traj = Trajectory::new();
    let mut err = None;
    drive(
        |y| Ok(rhs(&SystemState::from_flat(y, nx))?.to_flat()),
        s0.to_flat(),
        cfg,
        |t, y| {
            if let Err(e) = traj.push(t, SystemState::from_flat(y, nx)) {
                err.get_or_insert(e);
            }
        },
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Like [`integrate`] but keeps only the state at `t_end`.
pub fn integrate_final<F>(
    mut rhs: F,
    s0: &SystemState,
    cfg: &IntegratorConfig,
) -> Result<(f64, SystemState)>
where
    F: FnMut(&SystemState) -> Result<SystemState>,
{
    let nx = s0.x.len();
    let cfg = IntegratorConfig {
        record_stride: usize::MAX,
        ..cfg.clone()
    };
    let mut last = (0.0, s0.to_flat());
    drive(
        |y| Ok(rhs(&SystemState::from_flat(y, nx))?.to_flat()),
        s0.to_flat(),
        &cfg,
        |t, y| last = (t, y.clone()),
    )?;
    Ok((last.0, SystemState::from_flat(&last.1, nx)))
}

/// Integrates a flat vector field, reporting recorded samples through
/// `record(t, y)`.
pub fn drive<F, R>(mut f: F, y0: DVector<f64>, cfg: &IntegratorConfig, mut record: R) -> Result<()>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    R: FnMut(f64, &DVector<f64>),
{
    cfg.validate()?;
    guard(0.0, &y0)?;
    record(0.0, &y0);
    match cfg.method {
        Method::Rk4Fixed => rk4(&mut f, y0, cfg, &mut record),
        Method::Rk45Adaptive => dopri5(&mut f, y0, cfg, &mut record),
    }
}

fn guard(t: f64, y: &DVector<f64>) -> Result<()> {
    let norm = norm_inf(y);
    if !(norm <= DIVERGENCE_LIMIT) || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged { t, norm });
    }
    Ok(())
}

fn rk4<F, R>(f: &mut F, mut y: DVector<f64>, cfg: &IntegratorConfig, record: &mut R) -> Result<()>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    R: FnMut(f64, &DVector<f64>),
{
    let steps = libm::ceil(cfg.t_end / cfg.step - 1e-9).max(1.0) as usize;
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps {
            cfg.t_end
        } else {
            k as f64 * cfg.step
        };
        let h = t_next - t;
        let k1 = f(&y)?;
        let k2 = f(&(&y + &k1 * (h / 2.0)))?;
        let k3 = f(&(&y + &k2 * (h / 2.0)))?;
        let k4 = f(&(&y + &k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t = t_next;
        guard(t, &y)?;
        if k == steps || k % cfg.record_stride == 0 {
            record(t, &y);
        }
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine(y: &DVector<f64>, h: f64, coeffs: &[f64], ks: &[DVector<f64>]) -> DVector<f64> {
    let mut out = y.clone();
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out.axpy(h * c, k, 1.0);
        }
    }
    out
}

fn dopri5<F, R>(
    f: &mut F,
    mut y: DVector<f64>,
    cfg: &IntegratorConfig,
    record: &mut R,
) -> Result<()>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    R: FnMut(f64, &DVector<f64>),
{
    debug_assert_eq!(C.len(), 7);
    let n = y.len();
    let mut t = 0.0;
    let mut h = cfg.step.min(cfg.t_end);
    let mut k1 = f(&y)?;
    let mut accepted = 0usize;
    loop {
        let last = t + h >= cfg.t_end * (1.0 - 1e-14);
        if last {
            h = cfg.t_end - t;
        }
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        ks.push(f(&combine(&y, h, &A2, &ks))?);
        ks.push(f(&combine(&y, h, &A3, &ks))?);
        ks.push(f(&combine(&y, h, &A4, &ks))?);
        ks.push(f(&combine(&y, h, &A5, &ks))?);
        ks.push(f(&combine(&y, h, &A6, &ks))?);
        let y_new = combine(&y, h, &B, &ks);
        let k7 = f(&y_new)?;
        ks.push(k7);

        let mut acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (c, k) in E.iter().zip(&ks) {
                e += c * k[i];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = h * e / scale;
            acc += r * r;
        }
        let err = if n == 0 { 0.0 } else { sqrt(acc / n as f64) };
        if !err.is_finite() {
            h *= 0.2;
        } else if err <= 1.0 {
            t = if last { cfg.t_end } else { t + h };
            y = y_new;
            k1 = ks.pop().unwrap();
            accepted += 1;
            guard(t, &y)?;
            if last {
                record(t, &y);
                return Ok(());
            }
            if accepted.is_multiple_of(cfg.record_stride) {
                record(t, &y);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * libm::pow(err, -0.2)).clamp(0.2, 1.0);
        }
        if h < 1e-12 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, step: h });
        }
    }
}
