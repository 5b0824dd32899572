//! Networked nonlinear opinion dynamics with distributed inputs and
//! feedback-modulated attention.
//!
//! The crate is `no_std` (it needs `alloc`). It covers adjacency spectra and
//! centrality, the opinion and attention vector fields with their Jacobians,
//! time integration, Newton equilibria, reduced-model coefficients of the
//! agreement and disagreement pitchforks, pseudo-arclength continuation,
//! cascade thresholds and seeded Monte Carlo sweeps.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cascade;
pub mod continuation;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod integrate;
pub mod linalg;
pub mod math;
pub mod reduction;
pub mod spectra;
pub mod sweep;
pub mod threshold;

pub use dynamics::{AttentionParams, ModelParams, SystemState, Trajectory};
pub use error::{Error, Regime, Result};
pub use graph::{adjacency_matrix, build_graph, Graph};
pub use spectra::{centrality, compute_spectrum, extreme_eigenpairs, CentralityVector, Spectrum};

pub use nalgebra::{DMatrix, DVector};
