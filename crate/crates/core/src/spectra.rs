//! Adjacency spectra and agreement/disagreement centrality.
//!
//! Undirected graphs go through the symmetric eigensolver (real eigenvalues,
//! left and right eigenvectors identical). Digraphs go through a real Schur
//! decomposition for the eigenvalues followed by inverse iteration on `A` and
//! `A^T` for right and left eigenvectors.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Regime, Result};
use crate::graph::Graph;
use crate::linalg::{
    eigen_residual, general_eigenvalues, inverse_iteration_complex, inverse_iteration_real,
    matrix_norm_inf, merge_eigenvalue_clusters, normalize_phase, normalize_sign, symmetric_eigen,
    C64,
};
use crate::math::abs;

/// Default tolerance for deciding whether an eigenvalue is simple.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<C64>,
    right: Vec<DVector<C64>>,
    left: Vec<DVector<C64>>,
    gap_tolerance: f64,
    symmetric: bool,
    adjacency_norm: f64,
}

/// One eigenvalue with its unit right and left eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub index: usize,
    pub eigenvalue: C64,
    pub right: DVector<C64>,
    pub left: DVector<C64>,
    pub simple: bool,
}

impl Eigenpair {
    pub fn is_real(&self) -> bool {
        self.eigenvalue.im == 0.0
    }

    pub fn right_real(&self) -> Option<DVector<f64>> {
        self.is_real().then(|| self.right.map(|z| z.re))
    }

    pub fn left_real(&self) -> Option<DVector<f64>> {
        self.is_real().then(|| self.left.map(|z| z.re))
    }
}

#[derive(Debug, Clone)]
pub struct ExtremePairs {
    pub agreement: Eigenpair,
    pub disagreement: Eigenpair,
}

impl ExtremePairs {
    pub fn get(&self, regime: Regime) -> &Eigenpair {
        match regime {
            Regime::Agreement => &self.agreement,
            Regime::Disagreement => &self.disagreement,
        }
    }
}

/// Unit left eigenvector of an extreme eigenvalue, largest-magnitude entry
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub regime: Regime,
    pub entries: DVector<f64>,
    pub eigenvalue: f64,
}

/// Full eigendecomposition of the adjacency matrix of `g`.
pub fn compute_spectrum(g: &Graph, gap_tolerance: f64) -> Result<Spectrum> {
    if !(gap_tolerance >= 0.0) {
        return Err(Error::InvalidParameter(
            "gap tolerance must be nonnegative".into(),
        ));
    }
    let a = g.adjacency_matrix();
    let adjacency_norm = matrix_norm_inf(a);
    if !g.is_directed() {
        let (values, vectors) = symmetric_eigen(a)?;
        let mut right = Vec::with_capacity(values.len());
        for i in 0..values.len() {
            let mut v: DVector<f64> = vectors.column(i).into_owned();
            normalize_sign(&mut v);
            right.push(v.map(|x| C64::new(x, 0.0)));
        }
        return Ok(Spectrum {
            eigenvalues: values.into_iter().map(|x| C64::new(x, 0.0)).collect(),
            left: right.clone(),
            right,
            gap_tolerance,
            symmetric: true,
            adjacency_norm,
        });
    }

    let mut eigenvalues = general_eigenvalues(a)?;
    merge_eigenvalue_clusters(&mut eigenvalues, adjacency_norm);
    let snap = 1e-12 * adjacency_norm.max(1.0);
    for z in eigenvalues.iter_mut() {
        if abs(z.im) <= snap {
            z.im = 0.0;
        }
    }
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));

    let at = a.transpose();
    let mut right = Vec::with_capacity(eigenvalues.len());
    let mut left = Vec::with_capacity(eigenvalues.len());
    for &lambda in &eigenvalues {
        if lambda.im == 0.0 {
            let mut v = inverse_iteration_real(a, lambda.re)?;
            normalize_sign(&mut v);
            let mut w = inverse_iteration_real(&at, lambda.re)?;
            let overlap = w.dot(&v);
            if abs(overlap) > 1e-12 {
                if overlap < 0.0 {
                    w.neg_mut();
                }
            } else {
                normalize_sign(&mut w);
            }
            right.push(v.map(|x| C64::new(x, 0.0)));
            left.push(w.map(|x| C64::new(x, 0.0)));
        } else {
            let mut v = inverse_iteration_complex(a, lambda)?;
            normalize_phase(&mut v);
            let mut w = inverse_iteration_complex(&at, lambda)?;
            normalize_phase(&mut w);
            right.push(v);
            left.push(w);
        }
    }
    Ok(Spectrum {
        eigenvalues,
        right,
        left,
        gap_tolerance,
        symmetric: false,
        adjacency_norm,
    })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues sorted by decreasing real part.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// All eigenvalues if they are real.
    pub fn real_eigenvalues(&self) -> Option<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|z| (z.im == 0.0).then_some(z.re))
            .collect()
    }

    pub fn right_eigenvectors(&self) -> &[DVector<C64>] {
        &self.right
    }

    pub fn left_eigenvectors(&self) -> &[DVector<C64>] {
        &self.left
    }

    pub fn gap_tolerance(&self) -> f64 {
        self.gap_tolerance
    }

    /// True when computed by the symmetric (undirected) path.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn adjacency_norm(&self) -> f64 {
        self.adjacency_norm
    }

    /// Smallest distance from `Re(lambda_i)` to the real part of any other
    /// eigenvalue (`inf` for a single eigenvalue).
    pub fn real_part_gap(&self, i: usize) -> f64 {
        let re = self.eigenvalues[i].re;
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, z)| abs(z.re - re))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_simple(&self, i: usize) -> bool {
        self.real_part_gap(i) > self.gap_tolerance
    }

    pub fn pair(&self, i: usize) -> Eigenpair {
        Eigenpair {
            index: i,
            eigenvalue: self.eigenvalues[i],
            right: self.right[i].clone(),
            left: self.left[i].clone(),
            simple: self.is_simple(i),
        }
    }

    /// Largest `|A v - lambda v|_inf` over right and left eigenpairs.
    pub fn max_residual(&self, a: &DMatrix<f64>) -> f64 {
        let at = a.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            worst = worst.max(eigen_residual(a, self.eigenvalues[i], &self.right[i]));
            worst = worst.max(eigen_residual(&at, self.eigenvalues[i], &self.left[i]));
        }
        worst
    }

    /// Index of the eigenvalue used by a regime.
    pub fn extreme_index(&self, regime: Regime) -> usize {
        match regime {
            Regime::Agreement => 0,
            Regime::Disagreement => self.len() - 1,
        }
    }

    /// Real right eigenvector of a simple real extreme eigenvalue; the
    /// critical direction `v_c` of a regime.
    pub fn critical_vector(&self, regime: Regime) -> Result<DVector<f64>> {
        let pair = self.pair(self.extreme_index(regime));
        if !pair.simple {
            return Err(Error::NotSimple {
                regime,
                eigenvalue: pair.eigenvalue.re,
                gap: self.real_part_gap(pair.index),
            });
        }
        pair.right_real()
            .ok_or(Error::ComplexEigenvalue { index: pair.index })
    }
}

/// Eigenpairs with the largest and the smallest real part.
pub fn extreme_eigenpairs(s: &Spectrum) -> ExtremePairs {
    ExtremePairs {
        agreement: s.pair(s.extreme_index(Regime::Agreement)),
        disagreement: s.pair(s.extreme_index(Regime::Disagreement)),
    }
}

/// Agreement or disagreement centrality; refuses non-simple extremes.
pub fn centrality(s: &Spectrum, regime: Regime) -> Result<CentralityVector> {
    let pair = s.pair(s.extreme_index(regime));
    if !pair.simple {
        return Err(Error::NotSimple {
            regime,
            eigenvalue: pair.eigenvalue.re,
            gap: s.real_part_gap(pair.index),
        });
    }
    let mut entries = pair
        .left_real()
        .ok_or(Error::ComplexEigenvalue { index: pair.index })?;
    let nrm = entries.norm();
    entries /= nrm;
    normalize_sign(&mut entries);
    Ok(CentralityVector {
        regime,
        entries,
        eigenvalue: pair.eigenvalue.re,
    })
}

/// Real part of every eigenvalue; convenient for undirected graphs.
pub fn real_parts(s: &Spectrum) -> Vec<f64> {
    s.eigenvalues().iter().map(|z| z.re).collect()
}
