use alloc::string::String;

/// Which extreme of the adjacency spectrum a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Largest real part, cooperative coupling (`gamma > 0`).
    Agreement,
    /// Smallest real part, competitive coupling (`gamma < 0`).
    Disagreement,
}

impl Regime {
    /// Regime selected by the sign of the edge weight.
    pub fn from_edge_weight(gamma: f64) -> Self {
        if gamma > 0.0 {
            Regime::Agreement
        } else {
            Regime::Disagreement
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Agreement => "agreement",
            Regime::Disagreement => "disagreement",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for graph with {num_vertices} vertices")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenNonConvergence { iterations: usize },
    #[error("{regime} eigenvalue {eigenvalue} is not simple (nearest real-part gap {gap:e})")]
    NotSimple {
        regime: Regime,
        eigenvalue: f64,
        gap: f64,
    },
    #[error("eigenvalue {index} is complex")]
    ComplexEigenvalue { index: usize },
    #[error("alpha + lambda * gamma vanishes for lambda = {eigenvalue}")]
    DegenerateCriticalValue { eigenvalue: f64 },
    #[error("Hill activation needs a nonnegative argument, got {0}")]
    NegativeHillInput(f64),
    #[error("state diverged at t = {t} (sup norm {norm:e})")]
    Diverged { t: f64, norm: f64 },
    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },
    #[error(
        "Newton iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    NewtonMaxIter { iterations: usize, residual: f64 },
    #[error("singular Jacobian (pivot ratio {pivot_ratio:e})")]
    SingularJacobian { pivot_ratio: f64 },
    #[error(
        "continuation corrector failed after parameter {last_parameter} ({points} points traced)"
    )]
    ContinuationFailed { last_parameter: f64, points: usize },
    #[error("no cascade up to input magnitude {bracket_hi}")]
    NoThresholdInBracket { bracket_hi: f64 },
    #[error("lower attention {u_low} must lie below the critical value {u_critical}")]
    NoBistability { u_low: f64, u_critical: f64 },
    #[error("index {0} refers to the critical eigenvalue itself")]
    CriticalIndex(usize),
    #[error("outcome did not cascade")]
    NotCascaded,
    #[error("trajectory ends at t = {reached}, before the horizon {t_end}")]
    TrajectoryIncomplete { reached: f64, t_end: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
