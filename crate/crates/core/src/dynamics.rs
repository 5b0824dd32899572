//! Vector fields of the opinion dynamics.
//!
//! With fixed attention each agent evolves as
//!
//! ```text
//! dx_i/dt = -d x_i + u_i tanh(alpha x_i + gamma sum_k a_ik x_k) + b_i
//! ```
//!
//! and with attention feedback every `u_i` additionally relaxes (timescale
//! `tau_u`) towards a Hill activation of `x_i^2 + sum_k a_ik x_k^2`.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Regime, Result};
use crate::graph::Graph;
use crate::math::{powi, tanh};

/// Hill exponent used when none is configured.
pub const DEFAULT_HILL_EXPONENT: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Damping `d > 0`.
    pub damping: f64,
    /// Self-reinforcement `alpha >= 0`.
    pub self_weight: f64,
    /// Homogeneous edge weight `gamma != 0`.
    pub edge_weight: f64,
    /// Constant distributed input `b`.
    pub input: DVector<f64>,
}

impl ModelParams {
    pub fn new(
        damping: f64,
        self_weight: f64,
        edge_weight: f64,
        input: DVector<f64>,
    ) -> Result<Self> {
        if !(damping > 0.0) || !damping.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "damping must be positive, got {damping}"
            )));
        }
        if !(self_weight >= 0.0) || !self_weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "self weight must be nonnegative, got {self_weight}"
            )));
        }
        if edge_weight == 0.0 || !edge_weight.is_finite() {
            return Err(Error::InvalidParameter(
                "edge weight must be finite and nonzero".into(),
            ));
        }
        if !input.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidParameter("input must be finite".into()));
        }
        Ok(Self {
            damping,
            self_weight,
            edge_weight,
            input,
        })
    }

    /// Parameters with a zero input on `n` agents.
    pub fn unforced(damping: f64, self_weight: f64, edge_weight: f64, n: usize) -> Result<Self> {
        Self::new(damping, self_weight, edge_weight, DVector::zeros(n))
    }

    pub fn with_input(&self, input: DVector<f64>) -> Self {
        Self {
            input,
            ..self.clone()
        }
    }

    pub fn regime(&self) -> Regime {
        Regime::from_edge_weight(self.edge_weight)
    }

    pub fn check_dimension(&self, g: &Graph) -> Result<()> {
        expect_len(g.num_vertices(), self.input.len())
    }

    /// `alpha + lambda * gamma`.
    pub fn effective_gain(&self, lambda: f64) -> f64 {
        self.self_weight + lambda * self.edge_weight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Baseline attention `u_low`.
    pub u_low: f64,
    /// Saturated attention `u_high`.
    pub u_high: f64,
    /// Half-activation threshold `y_th`.
    pub threshold: f64,
    pub hill_exponent: u32,
    /// Attention timescale `tau_u`.
    pub tau: f64,
}

impl AttentionParams {
    pub fn new(
        u_low: f64,
        u_high: f64,
        threshold: f64,
        hill_exponent: u32,
        tau: f64,
    ) -> Result<Self> {
        if !(u_low > 0.0) || !(u_high > u_low) || !u_high.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "attention bounds need u_high > u_low > 0, got u_low = {u_low}, u_high = {u_high}"
            )));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidParameter(
                "attention threshold must be positive".into(),
            ));
        }
        if hill_exponent == 0 {
            return Err(Error::InvalidParameter(
                "Hill exponent must be positive".into(),
            ));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(
                "attention timescale must be positive".into(),
            ));
        }
        Ok(Self {
            u_low,
            u_high,
            threshold,
            hill_exponent,
            tau,
        })
    }

    /// Bounds placed at `u_c + low_offset` and `u_c + high_offset`, then
    /// checked against `u_c`.
    pub fn around_critical(
        u_critical: f64,
        low_offset: f64,
        high_offset: f64,
        threshold: f64,
        hill_exponent: u32,
        tau: f64,
    ) -> Result<Self> {
        let ap = Self::new(
            u_critical + low_offset,
            u_critical + high_offset,
            threshold,
            hill_exponent,
            tau,
        )?;
        ap.check_critical(u_critical)?;
        Ok(ap)
    }

    /// Checks `u_high > u_c >= u_low`.
    pub fn check_critical(&self, u_critical: f64) -> Result<()> {
        if !(self.u_high > u_critical) {
            return Err(Error::InvalidParameter(format!(
                "u_high = {} must exceed the critical attention {u_critical}",
                self.u_high
            )));
        }
        if !(u_critical >= self.u_low) {
            return Err(Error::NoBistability {
                u_low: self.u_low,
                u_critical,
            });
        }
        Ok(())
    }
}

/// Opinions `x` and attentions `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
}

impl SystemState {
    pub fn new(x: DVector<f64>, u: DVector<f64>) -> Result<Self> {
        let s = Self { x, u };
        if !s.is_finite() {
            return Err(Error::InvalidParameter(
                "state entries must be finite".into(),
            ));
        }
        Ok(s)
    }

    /// `x = 0`, `u = u0 * 1` on `n` agents.
    pub fn neutral(n: usize, u0: f64) -> Self {
        Self {
            x: DVector::zeros(n),
            u: DVector::from_element(n, u0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.u.iter()).all(|v| v.is_finite())
    }

    pub fn dim(&self) -> usize {
        self.x.len() + self.u.len()
    }

    /// `(x, u)` stacked into one vector.
    pub fn to_flat(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        y.rows_mut(0, self.x.len()).copy_from(&self.x);
        y.rows_mut(self.x.len(), self.u.len()).copy_from(&self.u);
        y
    }

    pub fn from_flat(y: &DVector<f64>, x_len: usize) -> Self {
        Self {
            x: y.rows(0, x_len).into_owned(),
            u: y.rows(x_len, y.len() - x_len).into_owned(),
        }
    }

    pub fn negated_opinions(&self) -> Self {
        Self {
            x: -&self.x,
            u: self.u.clone(),
        }
    }
}

/// Time-stamped sequence of states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SystemState>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample; times must increase strictly and shapes must agree.
    pub fn push(&mut self, t: f64, s: SystemState) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidParameter(format!(
                    "trajectory times must increase ({t} after {last})"
                )));
            }
            let prev = &self.states[0];
            expect_len(prev.x.len(), s.x.len())?;
            expect_len(prev.u.len(), s.u.len())?;
        }
        self.times.push(t);
        self.states.push(s);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &SystemState)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }
}

/// Attention entering the fixed-attention vector field.
#[derive(Debug, Clone, Copy)]
pub enum Attention<'a> {
    /// Same gain `u` for all agents.
    Uniform(f64),
    PerAgent(&'a DVector<f64>),
}

impl Attention<'_> {
    fn get(&self, i: usize) -> f64 {
        match self {
            Attention::Uniform(u) => *u,
            Attention::PerAgent(u) => u[i],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            Attention::Uniform(_) => Ok(()),
            Attention::PerAgent(u) => expect_len(n, u.len()),
        }
    }
}

fn expect_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Saturation `S = tanh`.
#[inline]
pub fn saturation(z: f64) -> f64 {
    tanh(z)
}

/// `S'(z) = 1 - tanh^2 z`.
#[inline]
pub fn saturation_d1(z: f64) -> f64 {
    let t = tanh(z);
    1.0 - t * t
}

/// `S''(z) = -2 tanh z (1 - tanh^2 z)`.
#[inline]
pub fn saturation_d2(z: f64) -> f64 {
    let t = tanh(z);
    -2.0 * t * (1.0 - t * t)
}

/// Hill activation `u_low + (u_high - u_low) y^n / (y_th^n + y^n)`.
pub fn hill(y: f64, ap: &AttentionParams) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::NegativeHillInput(y));
    }
    Ok(hill_unchecked(y, ap))
}

fn hill_unchecked(y: f64, ap: &AttentionParams) -> f64 {
    let r = powi(y / ap.threshold, ap.hill_exponent);
    let frac = if r.is_infinite() { 1.0 } else { r / (1.0 + r) };
    ap.u_low + (ap.u_high - ap.u_low) * frac
}

/// Derivative of [`hill`] with respect to `y` (for `y >= 0`).
pub fn hill_derivative(y: f64, ap: &AttentionParams) -> f64 {
    let n = ap.hill_exponent;
    let q = y / ap.threshold;
    if q > 1e100 {
        return 0.0;
    }
    let qn = powi(q, n);
    let lead = if n == 1 { 1.0 } else { powi(q, n - 1) };
    (ap.u_high - ap.u_low) * n as f64 / ap.threshold * lead / ((1.0 + qn) * (1.0 + qn))
}

/// `(alpha I + gamma A) x`.
pub fn coupling_argument(x: &DVector<f64>, p: &ModelParams, g: &Graph) -> DVector<f64> {
    x * p.self_weight + (g.adjacency_matrix() * x) * p.edge_weight
}

/// `(I + A) x^2`, the opinion magnitude observed by each agent.
pub fn observed_magnitude(x: &DVector<f64>, g: &Graph) -> DVector<f64> {
    let sq = x.map(|v| v * v);
    &sq + g.adjacency_matrix() * &sq
}

/// `alpha I + gamma A`.
pub fn coupling_matrix(p: &ModelParams, g: &Graph) -> DMatrix<f64> {
    let n = g.num_vertices();
    DMatrix::identity(n, n) * p.self_weight + g.adjacency_matrix() * p.edge_weight
}

fn check_shapes(x: &DVector<f64>, p: &ModelParams, g: &Graph) -> Result<()> {
    expect_len(g.num_vertices(), x.len())?;
    expect_len(g.num_vertices(), p.input.len())
}

/// Fixed-attention vector field.
pub fn rhs_fixed(
    x: &DVector<f64>,
    u: Attention<'_>,
    p: &ModelParams,
    g: &Graph,
) -> Result<DVector<f64>> {
    check_shapes(x, p, g)?;
    u.check(x.len())?;
    let arg = coupling_argument(x, p, g);
    Ok(DVector::from_fn(x.len(), |i, _| {
        -p.damping * x[i] + u.get(i) * saturation(arg[i]) + p.input[i]
    }))
}

/// Coupled opinion-attention vector field; the derivative is returned as a
/// state `(dx/dt, du/dt)`.
pub fn rhs_coupled(
    s: &SystemState,
    p: &ModelParams,
    ap: &AttentionParams,
    g: &Graph,
) -> Result<SystemState> {
    check_shapes(&s.x, p, g)?;
    expect_len(s.x.len(), s.u.len())?;
    let dx = rhs_fixed(&s.x, Attention::PerAgent(&s.u), p, g)?;
    let y = observed_magnitude(&s.x, g);
    let du = DVector::from_fn(s.u.len(), |i, _| {
        (-s.u[i] + hill_unchecked(y[i], ap)) / ap.tau
    });
    Ok(SystemState { x: dx, u: du })
}

/// Jacobian of [`rhs_fixed`] with respect to `x`:
/// `-d I + diag(u * S'((alpha I + gamma A) x)) (alpha I + gamma A)`.
pub fn jacobian_fixed(
    x: &DVector<f64>,
    u: Attention<'_>,
    p: &ModelParams,
    g: &Graph,
) -> Result<DMatrix<f64>> {
    check_shapes(x, p, g)?;
    u.check(x.len())?;
    let n = x.len();
    let m = coupling_matrix(p, g);
    let arg = &m * x;
    let mut j = m;
    for i in 0..n {
        let scale = u.get(i) * saturation_d1(arg[i]);
        for k in 0..n {
            j[(i, k)] *= scale;
        }
        j[(i, i)] -= p.damping;
    }
    Ok(j)
}

/// Jacobian of [`rhs_coupled`] with respect to `(x, u)`, a `2N x 2N` matrix.
pub fn jacobian_coupled(
    s: &SystemState,
    p: &ModelParams,
    ap: &AttentionParams,
    g: &Graph,
) -> Result<DMatrix<f64>> {
    check_shapes(&s.x, p, g)?;
    expect_len(s.x.len(), s.u.len())?;
    let n = s.x.len();
    let a = g.adjacency_matrix();
    let arg = coupling_argument(&s.x, p, g);
    let y = observed_magnitude(&s.x, g);
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    j.view_mut((0, 0), (n, n))
        .copy_from(&jacobian_fixed(&s.x, Attention::PerAgent(&s.u), p, g)?);
    for i in 0..n {
        j[(i, n + i)] = saturation(arg[i]);
        let gain = hill_derivative(y[i], ap) / ap.tau;
        for k in 0..n {
            let link = if i == k { 1.0 } else { a[(i, k)] };
            j[(n + i, k)] = gain * link * 2.0 * s.x[k];
        }
        j[(n + i, n + i)] = -1.0 / ap.tau;
    }
    Ok(j)
}

/// An autonomous vector field on flat state vectors, with its Jacobian and a
/// mapping to and from [`SystemState`].
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn pack(&self, s: &SystemState) -> Result<DVector<f64>>;
    fn unpack(&self, y: &DVector<f64>) -> SystemState;

    /// Derivative expressed as a state, for the integrators.
    fn rhs_state(&self, s: &SystemState) -> Result<SystemState> {
        let dy = self.eval(&self.pack(s)?)?;
        Ok(self.unpack(&dy))
    }
}

/// Opinions only, with one uniform attention `u`.
#[derive(Debug, Clone, Copy)]
pub struct FixedAttentionField<'a> {
    pub graph: &'a Graph,
    pub params: &'a ModelParams,
    pub attention: f64,
}

impl VectorField for FixedAttentionField<'_> {
    fn dim(&self) -> usize {
        self.graph.num_vertices()
    }

    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        rhs_fixed(
            y,
            Attention::Uniform(self.attention),
            self.params,
            self.graph,
        )
    }

    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        jacobian_fixed(
            y,
            Attention::Uniform(self.attention),
            self.params,
            self.graph,
        )
    }

    fn pack(&self, s: &SystemState) -> Result<DVector<f64>> {
        expect_len(self.dim(), s.x.len())?;
        Ok(s.x.clone())
    }

    fn unpack(&self, y: &DVector<f64>) -> SystemState {
        SystemState {
            x: y.clone(),
            u: DVector::from_element(y.len(), self.attention),
        }
    }

    fn rhs_state(&self, s: &SystemState) -> Result<SystemState> {
        Ok(SystemState {
            x: self.eval(&self.pack(s)?)?,
            u: DVector::zeros(s.u.len()),
        })
    }
}

/// Opinions and attentions together.
#[derive(Debug, Clone, Copy)]
pub struct CoupledField<'a> {
    pub graph: &'a Graph,
    pub params: &'a ModelParams,
    pub attention: &'a AttentionParams,
}

impl VectorField for CoupledField<'_> {
    fn dim(&self) -> usize {
        2 * self.graph.num_vertices()
    }

    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.unpack(y);
        Ok(rhs_coupled(&s, self.params, self.attention, self.graph)?.to_flat())
    }

    fn jacobian(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        jacobian_coupled(&self.unpack(y), self.params, self.attention, self.graph)
    }

    fn pack(&self, s: &SystemState) -> Result<DVector<f64>> {
        expect_len(self.graph.num_vertices(), s.x.len())?;
        expect_len(self.graph.num_vertices(), s.u.len())?;
        Ok(s.to_flat())
    }

    fn unpack(&self, y: &DVector<f64>) -> SystemState {
        SystemState::from_flat(y, self.graph.num_vertices())
    }
}
