//! Dense linear algebra used across the crate: guarded LU solves, eigenvalues
//! of general and symmetric matrices, and inverse iteration for eigenvectors.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::math::abs;

pub type C64 = Complex<f64>;

/// Iteration budget handed to the QR-based eigensolvers.
pub const EIGEN_MAX_ITER: usize = 10_000;

/// LU pivots smaller than this fraction of the largest pivot are treated as
/// exact zeros.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Solves `m * x = rhs`, refusing numerically singular systems.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: rhs.len(),
        });
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let p = abs(u[(i, i)]);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(ratio > SINGULAR_PIVOT_RATIO) {
        return Err(Error::SingularJacobian { pivot_ratio: ratio });
    }
    lu.solve(rhs)
        .ok_or(Error::SingularJacobian { pivot_ratio: ratio })
}

/// Sup norm of a matrix (max absolute row sum).
pub fn matrix_norm_inf(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| abs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Modulus of a complex number.
#[inline]
pub fn cabs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

fn cmp_desc(a: &C64, b: &C64) -> core::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Eigenvalues of a general real matrix, sorted by decreasing real part
/// (ties by decreasing imaginary part).
///
/// Symmetric input goes through the symmetric solver. The real Schur
/// iteration can stall on some matrices with a zero diagonal (the path
/// graph is one); those are retried on `m + sigma I` for a few irregular
/// shifts `sigma`.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m == &m.transpose() {
        let (values, _) = symmetric_eigen(m)?;
        return Ok(values.into_iter().map(|v| C64::new(v, 0.0)).collect());
    }
    let scale = matrix_norm_inf(m).max(f64::MIN_POSITIVE);
    for sigma in [0.0, 0.1234567, -0.3141593, 0.5772157, -1.2718282] {
        let shift = sigma * scale;
        let shifted = m + DMatrix::identity(n, n) * shift;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, EIGEN_MAX_ITER) {
            let mut eigs: Vec<C64> = schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z - C64::new(shift, 0.0))
                .collect();
            eigs.sort_by(cmp_desc);
            return Ok(eigs);
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: EIGEN_MAX_ITER,
    })
}

/// Largest real part among `eigs` (`-inf` for an empty list).
pub fn max_real_part(eigs: &[C64]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Symmetric eigendecomposition with eigenvalues sorted in decreasing order;
/// column `i` of the returned matrix is the unit eigenvector of value `i`.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        Error::EigenNonConvergence {
            iterations: EIGEN_MAX_ITER,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Merges eigenvalues that are numerically one multiple eigenvalue.
///
/// A cluster of `k` computed eigenvalues belonging to one defective
/// eigenvalue spreads like `(eps * |A|)^(1/k)` around its mean, while the
/// mean stays accurate to roundoff. Candidate clusters are the connected
/// components of the "closer than twice the allowed radius" relation, tried
/// from the largest possible size down; a candidate is accepted when its own
/// radius fits its own size, and is then replaced by its mean.
pub fn merge_eigenvalue_clusters(eigs: &mut [C64], scale: f64) {
    let n = eigs.len();
    if n < 2 {
        return;
    }
    let scale = scale.max(1.0);
    let radius = |k: usize| 10.0 * libm::pow(f64::EPSILON, 1.0 / k as f64) * scale;
    let mut done = alloc::vec![false; n];
    for level in (2..=n).rev() {
        let link = 2.0 * radius(level);
        let mut label: Vec<usize> = (0..n).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if done[i] || done[j] || label[i] == label[j] || cabs(eigs[i] - eigs[j]) > link
                    {
                        continue;
                    }
                    let (keep, drop) = (label[i].min(label[j]), label[i].max(label[j]));
                    for l in label.iter_mut() {
                        if *l == drop {
                            *l = keep;
                        }
                    }
                    changed = true;
                }
            }
        }
        for l in 0..n {
            let members: Vec<usize> = (0..n).filter(|&i| !done[i] && label[i] == l).collect();
            let k = members.len();
            if k < 2 || k > level {
                continue;
            }
            let mean = members
                .iter()
                .fold(C64::new(0.0, 0.0), |acc, &i| acc + eigs[i])
                / k as f64;
            if members.iter().all(|&i| cabs(eigs[i] - mean) <= radius(k)) {
                for &i in &members {
                    eigs[i] = mean;
                    done[i] = true;
                }
            }
        }
    }
}

fn starting_vector(n: usize) -> DVector<f64> {
    // Irregular entries avoid accidental orthogonality to the target vector.
    DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64)
}

/// Right eigenvector of `m` for the real eigenvalue nearest to `shift`.
pub fn inverse_iteration_real(m: &DMatrix<f64>, shift: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let scale = matrix_norm_inf(m).max(1.0);
    let mut delta = 1e-10 * scale;
    for _ in 0..8 {
        let shifted = m - DMatrix::identity(n, n) * (shift + delta);
        let lu = shifted.lu();
        let mut x = starting_vector(n);
        x /= x.norm();
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => {
                    x = &y / y.norm();
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        delta *= 10.0;
    }
    Err(Error::EigenNonConvergence { iterations: 8 })
}

/// Right eigenvector of `m` for the (possibly complex) eigenvalue nearest to
/// `shift`.
pub fn inverse_iteration_complex(m: &DMatrix<f64>, shift: C64) -> Result<DVector<C64>> {
    let n = m.nrows();
    let scale = matrix_norm_inf(m).max(1.0);
    let mc: DMatrix<C64> = m.map(|v| C64::new(v, 0.0));
    let mut delta = 1e-10 * scale;
    for _ in 0..8 {
        let sigma = shift + C64::new(delta, delta);
        let shifted = &mc - DMatrix::<C64>::identity(n, n) * sigma;
        let lu = shifted.lu();
        let mut x: DVector<C64> = starting_vector(n).map(|v| C64::new(v, 0.0));
        x /= C64::new(x.norm(), 0.0);
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => {
                    let nrm = y.norm();
                    if nrm == 0.0 {
                        ok = false;
                        break;
                    }
                    x = y / C64::new(nrm, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        delta *= 10.0;
    }
    Err(Error::EigenNonConvergence { iterations: 8 })
}

/// Unit vector spanning the numerical kernel of `m` (right singular vector of
/// the smallest singular value).
pub fn null_vector(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.ncols();
    let svd = SVD::try_new(m.clone(), false, true, f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        Error::EigenNonConvergence {
            iterations: EIGEN_MAX_ITER,
        },
    )?;
    let v_t = svd.v_t.as_ref().ok_or(Error::EigenNonConvergence {
        iterations: EIGEN_MAX_ITER,
    })?;
    let (mut k, mut smallest) = (0, f64::INFINITY);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < smallest {
            smallest = *s;
            k = i;
        }
    }
    let mut v = DVector::from_fn(n, |j, _| v_t[(k, j)]);
    let nrm = v.norm();
    v /= nrm;
    Ok(v)
}

/// Flips `v` so that its largest-magnitude entry is positive. Ties are broken
/// towards the lowest index.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(abs(*x)));
    if peak == 0.0 {
        return;
    }
    let tol = 1e-12 * peak;
    if let Some(first) = v.iter().copied().find(|x| abs(*x) >= peak - tol) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Rotates a complex vector by a global phase so that its largest-magnitude
/// entry is real and positive, then rescales it to unit norm.
pub fn normalize_phase(v: &mut DVector<C64>) {
    let mut best = 0;
    let mut peak = 0.0;
    for (i, z) in v.iter().enumerate() {
        let m = cabs(*z);
        if m > peak + 1e-12 * peak {
            peak = m;
            best = i;
        }
    }
    if peak == 0.0 {
        return;
    }
    let phase = v[best].conj() / C64::new(peak, 0.0);
    for z in v.iter_mut() {
        *z *= phase;
    }
    let nrm = v.norm();
    *v /= C64::new(nrm, 0.0);
}

/// Residual `|m v - lambda v|_inf` of a complex eigenpair.
pub fn eigen_residual(m: &DMatrix<f64>, lambda: C64, v: &DVector<C64>) -> f64 {
    let mc: DMatrix<C64> = m.map(|x| C64::new(x, 0.0));
    let r = mc * v - v * lambda;
    r.iter().fold(0.0, |acc, z| acc.max(cabs(*z)))
}
