//! Critical attention values and the cubic reduced model of the pitchfork at
//! a simple adjacency eigenvalue.
//!
//! Near `u = u*` the equilibria of the fixed-attention model are governed by
//!
//! ```text
//! 0 = k1 (alpha + lambda gamma) u_hat z - 2 k2 d (alpha + lambda gamma)^2 z^3 + <w, b>
//! ```
//!
//! with `v`, `w` the unit right and left eigenvectors of `lambda`,
//! `k1 = <w, v>` and `k2 = <w, v^3>`.

use alloc::vec::Vec;
use nalgebra::DVector;

use crate::dynamics::{coupling_argument, saturation_d2, ModelParams};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Regime, Result};
use crate::graph::Graph;
use crate::linalg::lu_solve;
use crate::math::{abs, sqrt};
use crate::spectra::Spectrum;

/// `<w, b>` below this magnitude leaves the pitchfork symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// `k2` below this magnitude makes the cubic term degenerate.
pub const DEGENERATE_CUBIC: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalKind {
    Agreement,
    Disagreement,
    Other,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriticalKind::Agreement => "agreement",
            CriticalKind::Disagreement => "disagreement",
            CriticalKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub index: usize,
    pub eigenvalue: f64,
    pub u_star: f64,
    pub regime: CriticalKind,
    pub simple: bool,
}

/// `u* = d / (alpha + lambda gamma)`; may be negative.
pub fn critical_attention_any(lambda: f64, p: &ModelParams) -> Result<f64> {
    let gain = p.effective_gain(lambda);
    let scale = abs(p.self_weight) + abs(lambda * p.edge_weight);
    if !(abs(gain) > 1e-12 * scale.max(1.0)) {
        return Err(Error::DegenerateCriticalValue { eigenvalue: lambda });
    }
    Ok(p.damping / gain)
}

fn kind_of(s: &Spectrum, index: usize, p: &ModelParams) -> CriticalKind {
    if p.edge_weight > 0.0 && index == s.extreme_index(Regime::Agreement) {
        CriticalKind::Agreement
    } else if p.edge_weight < 0.0 && index == s.extreme_index(Regime::Disagreement) {
        CriticalKind::Disagreement
    } else {
        CriticalKind::Other
    }
}

/// Critical point attached to eigenvalue `index`; the eigenvalue must be real.
pub fn critical_point(s: &Spectrum, index: usize, p: &ModelParams) -> Result<CriticalPoint> {
    let pair = s.pair(index);
    if !pair.is_real() {
        return Err(Error::ComplexEigenvalue { index });
    }
    let lambda = pair.eigenvalue.re;
    Ok(CriticalPoint {
        index,
        eigenvalue: lambda,
        u_star: critical_attention_any(lambda, p)?,
        regime: kind_of(s, index, p),
        simple: pair.simple,
    })
}

/// `u_a` (for `gamma > 0`, from `lambda_max`) or `u_d` (for `gamma < 0`, from
/// `lambda_min`). The extreme eigenvalue has to be simple.
pub fn critical_attention(s: &Spectrum, p: &ModelParams) -> Result<CriticalPoint> {
    let regime = p.regime();
    let index = s.extreme_index(regime);
    let cp = critical_point(s, index, p)?;
    if !cp.simple {
        return Err(Error::NotSimple {
            regime,
            eigenvalue: cp.eigenvalue,
            gap: s.real_part_gap(index),
        });
    }
    Ok(cp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Degenerate,
}

impl Criticality {
    pub fn as_str(self) -> &'static str {
        match self {
            Criticality::Supercritical => "supercritical",
            Criticality::Subcritical => "subcritical",
            Criticality::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub eigenvalue: f64,
    pub u_star: f64,
    pub k1: f64,
    pub k2: f64,
    /// Coefficient of `u_hat * z`.
    pub linear_gain: f64,
    /// Coefficient of `z^3`.
    pub cubic_coef: f64,
    /// Gain of each `b_i`, the left eigenvector `w`.
    pub input_gains: DVector<f64>,
    /// Right eigenvector `v`; the reduced coordinate is `z` along it.
    pub direction: DVector<f64>,
    pub criticality: Criticality,
}

/// Reduced-model coefficients at the simple real eigenvalue `index`.
pub fn ls_coefficients(s: &Spectrum, index: usize, p: &ModelParams) -> Result<ReducedModel> {
    let pair = s.pair(index);
    if !pair.simple {
        return Err(Error::NotSimple {
            regime: p.regime(),
            eigenvalue: pair.eigenvalue.re,
            gap: s.real_part_gap(index),
        });
    }
    let (v, w) = match (pair.right_real(), pair.left_real()) {
        (Some(v), Some(w)) => (v, w),
        _ => return Err(Error::ComplexEigenvalue { index }),
    };
    let lambda = pair.eigenvalue.re;
    let u_star = critical_attention_any(lambda, p)?;
    let gain = p.effective_gain(lambda);
    let k1 = w.dot(&v);
    let k2 = w.dot(&v.map(|x| x * x * x));
    let criticality = if abs(k2) <= DEGENERATE_CUBIC {
        Criticality::Degenerate
    } else if (k2 / k1).signum() * gain > 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    };
    Ok(ReducedModel {
        eigenvalue: lambda,
        u_star,
        k1,
        k2,
        linear_gain: k1 * gain,
        cubic_coef: -2.0 * k2 * p.damping * gain * gain,
        input_gains: w,
        direction: v,
        criticality,
    })
}

/// Right-hand side of the reduced equation, truncated at cubic order.
pub fn reduced_rhs(z: f64, u_hat: f64, b: &DVector<f64>, rm: &ReducedModel) -> f64 {
    rm.linear_gain * u_hat * z + rm.cubic_coef * z * z * z + rm.input_gains.dot(b)
}

/// Positive amplitude of the symmetric nontrivial roots `+-z` of the reduced
/// equation with `b = 0`, when they exist.
pub fn pitchfork_amplitude(u_hat: f64, rm: &ReducedModel) -> Option<f64> {
    if rm.cubic_coef == 0.0 {
        return None;
    }
    let sq = -rm.linear_gain * u_hat / rm.cubic_coef;
    (sq > 0.0).then(|| sqrt(sq))
}

/// Real roots of the reduced equation in increasing order.
pub fn reduced_roots(u_hat: f64, b: &DVector<f64>, rm: &ReducedModel) -> Vec<f64> {
    let c = rm.cubic_coef;
    let a = rm.linear_gain * u_hat;
    let e = rm.input_gains.dot(b);
    if c == 0.0 {
        return if a != 0.0 {
            alloc::vec![-e / a]
        } else {
            Vec::new()
        };
    }
    // z^3 + P z + Q = 0
    let pp = a / c;
    let qq = e / c;
    let mut roots = Vec::new();
    let disc = qq * qq / 4.0 + pp * pp * pp / 27.0;
    if disc > 0.0 {
        let sd = sqrt(disc);
        roots.push(libm::cbrt(-qq / 2.0 + sd) + libm::cbrt(-qq / 2.0 - sd));
    } else if pp == 0.0 {
        roots.push(0.0);
    } else {
        let r = sqrt(-pp / 3.0);
        let arg = (3.0 * qq / (2.0 * pp) * sqrt(-3.0 / pp)).clamp(-1.0, 1.0);
        let phi = libm::acos(arg) / 3.0;
        for k in 0..3 {
            let t = phi - 2.0 * core::f64::consts::PI * k as f64 / 3.0;
            roots.push(2.0 * r * libm::cos(t));
        }
    }
    // one Newton polish per root
    for z in roots.iter_mut() {
        let f = c * *z * *z * *z + a * *z + e;
        let df = 3.0 * c * *z * *z + a;
        if df != 0.0 {
            *z -= f / df;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unfolding {
    Symmetric,
    UpperBranch,
    LowerBranch,
}

impl Unfolding {
    pub fn as_str(self) -> &'static str {
        match self {
            Unfolding::Symmetric => "symmetric",
            Unfolding::UpperBranch => "upper_branch",
            Unfolding::LowerBranch => "lower_branch",
        }
    }
}

/// Which branch an input favours, from the sign of `<w, b>`.
pub fn unfolding_direction(b: &DVector<f64>, rm: &ReducedModel) -> Unfolding {
    let e = rm.input_gains.dot(b);
    if abs(e) <= SYMMETRY_TOLERANCE {
        Unfolding::Symmetric
    } else if e > 0.0 {
        Unfolding::UpperBranch
    } else {
        Unfolding::LowerBranch
    }
}

/// Linear prediction `x_s = -J_x^{-1} b` of the equilibrium opinions at
/// baseline attention `u_low`, where `J_x = -d I + u_low (alpha I + gamma A)`.
///
/// Undirected graphs use the eigen-expansion
/// `sum_i <v_i, b> v_i / (d - u_low (alpha + lambda_i gamma))`, digraphs a
/// direct solve.
pub fn predict_small_input_equilibrium(
    s: &Spectrum,
    g: &Graph,
    p: &ModelParams,
    u_low: f64,
) -> Result<DVector<f64>> {
    p.check_dimension(g)?;
    let n = g.num_vertices();
    if s.is_symmetric() {
        let mut x = DVector::zeros(n);
        let scale = abs(p.damping)
            + abs(u_low) * (abs(p.self_weight) + abs(p.edge_weight) * s.adjacency_norm());
        for i in 0..s.len() {
            let lambda = s.eigenvalues()[i].re;
            let den = p.damping - u_low * p.effective_gain(lambda);
            if !(abs(den) > 1e-13 * scale) {
                return Err(Error::SingularJacobian {
                    pivot_ratio: abs(den) / scale,
                });
            }
            let v = s.right_eigenvectors()[i].map(|z| z.re);
            x += &v * (v.dot(&p.input) / den);
        }
        Ok(x)
    } else {
        let j = crate::dynamics::jacobian_fixed(
            &DVector::zeros(n),
            crate::dynamics::Attention::Uniform(u_low),
            p,
            g,
        )?;
        lu_solve(&j, &(-&p.input))
    }
}

/// `sum_k u_k v_c,k^2 v_i,k S''((alpha x + gamma A x)_k)` at an equilibrium,
/// for a non-critical eigenvalue index `i`.
pub fn ip_condition_diagnostic(
    eq: &Equilibrium,
    s: &Spectrum,
    i: usize,
    p: &ModelParams,
    g: &Graph,
) -> Result<f64> {
    let c = s.extreme_index(p.regime());
    if i == c {
        return Err(Error::CriticalIndex(i));
    }
    if i >= s.len() {
        return Err(Error::VertexOutOfRange {
            vertex: i,
            num_vertices: s.len(),
        });
    }
    let vc = s
        .pair(c)
        .right_real()
        .ok_or(Error::ComplexEigenvalue { index: c })?;
    let vi = s
        .pair(i)
        .right_real()
        .ok_or(Error::ComplexEigenvalue { index: i })?;
    let x = &eq.state.x;
    p.check_dimension(g)?;
    if x.len() != g.num_vertices() || eq.state.u.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: g.num_vertices(),
            found: x.len(),
        });
    }
    let arg = coupling_argument(x, p, g);
    Ok((0..x.len())
        .map(|k| eq.state.u[k] * vc[k] * vc[k] * vi[k] * saturation_d2(arg[k]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SystemState;
    use crate::dynamics::{AttentionParams, CoupledField};
    use crate::equilibrium::{newton_equilibrium, Stability};
    use crate::spectra::{compute_spectrum, DEFAULT_GAP_TOLERANCE};
    use core::f64::consts::SQRT_2;

    fn p3() -> (Graph, Spectrum) {
        let g = Graph::path(3).unwrap();
        let s = compute_spectrum(&g, DEFAULT_GAP_TOLERANCE).unwrap();
        (g, s)
    }

    fn params(d: f64, a: f64, gamma: f64) -> ModelParams {
        ModelParams::unforced(d, a, gamma, 3).unwrap()
    }

    #[test]
    fn closed_form_critical_values() {
        let (_, s) = p3();
        let ua = critical_attention(&s, &params(1.0, 1.0, 1.0)).unwrap();
        assert!((ua.u_star - 1.0 / (1.0 + SQRT_2)).abs() < 1e-12);
        assert_eq!(ua.regime, CriticalKind::Agreement);
        let ud = critical_attention(&s, &params(1.0, 1.0, -1.0)).unwrap();
        assert!((ud.u_star - 1.0 / (1.0 + SQRT_2)).abs() < 1e-12);
        assert_eq!(ud.regime, CriticalKind::Disagreement);

        let k4 = Graph::complete(4).unwrap();
        let sk = compute_spectrum(&k4, DEFAULT_GAP_TOLERANCE).unwrap();
        let p4 = ModelParams::unforced(1.0, 1.0, 1.0, 4).unwrap();
        assert!((critical_attention(&sk, &p4).unwrap().u_star - 0.25).abs() < 1e-12);
        let p4d = ModelParams::unforced(1.0, 1.0, -1.0, 4).unwrap();
        assert!(matches!(
            critical_attention(&sk, &p4d),
            Err(Error::NotSimple { .. })
        ));
    }

    #[test]
    fn critical_attention_for_arbitrary_eigenvalues() {
        assert_eq!(
            critical_attention_any(0.0, &params(1.0, 1.0, 1.0)).unwrap(),
            1.0
        );
        assert_eq!(
            critical_attention_any(0.0, &params(2.0, 1.0, 1.0)).unwrap(),
            2.0
        );
        let neg = critical_attention_any(-SQRT_2, &params(1.0, 1.0, 1.0)).unwrap();
        assert!((neg - 1.0 / (1.0 - SQRT_2)).abs() < 1e-12 && neg < 0.0);
        assert!(matches!(
            critical_attention_any(1.0, &params(1.0, 1.0, -1.0)),
            Err(Error::DegenerateCriticalValue { .. })
        ));
        let (_, s) = p3();
        let mid = critical_point(&s, 1, &params(2.0, 1.0, 1.0)).unwrap();
        assert_eq!(mid.regime, CriticalKind::Other);
        assert!((mid.u_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path3_reduced_model() {
        let (_, s) = p3();
        let rm = ls_coefficients(&s, 0, &params(1.0, 1.0, 1.0)).unwrap();
        // v = (1/2, 1/sqrt2, 1/2)
        let v = [0.5, 1.0 / SQRT_2, 0.5];
        let k2: f64 = v.iter().map(|x| x * x * x * x).sum();
        assert!((rm.k1 - 1.0).abs() < 1e-12);
        assert!((rm.k2 - k2).abs() < 1e-12 && (k2 - 0.375).abs() < 1e-15);
        let gain = 1.0 + SQRT_2;
        assert!((rm.linear_gain - gain).abs() < 1e-12);
        assert!((rm.cubic_coef + 2.0 * 0.375 * gain * gain).abs() < 1e-12);
        assert!((rm.cubic_coef + 4.37132).abs() < 1e-5);
        assert_eq!(rm.criticality, Criticality::Supercritical);
        for (a, b) in rm.input_gains.iter().zip(v) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = pitchfork_amplitude(0.01, &rm).unwrap();
        assert!((z - 0.074317).abs() < 2e-6);
        let roots = reduced_roots(0.01, &DVector::zeros(3), &rm);
        assert_eq!(roots.len(), 3);
        assert!(
            (roots[2] - z).abs() < 1e-12 && (roots[0] + z).abs() < 1e-12 && roots[1].abs() < 1e-12
        );
        for r in roots {
            assert!(reduced_rhs(r, 0.01, &DVector::zeros(3), &rm).abs() < 1e-14);
        }
    }

    #[test]
    fn undirected_criticality_follows_gain_sign() {
        let (_, s) = p3();
        for i in 0..3 {
            for gamma in [1.0, -1.0, 0.3] {
                let p = params(1.0, 0.2, gamma);
                let rm = ls_coefficients(&s, i, &p).unwrap();
                let expect = if p.effective_gain(rm.eigenvalue) > 0.0 {
                    Criticality::Supercritical
                } else {
                    Criticality::Subcritical
                };
                assert_eq!(rm.criticality, expect);
            }
        }
    }

    #[test]
    fn reduced_rhs_and_unfolding() {
        let (_, s) = p3();
        let rm = ls_coefficients(&s, 0, &params(1.0, 1.0, 1.0)).unwrap();
        let zero = DVector::zeros(3);
        assert_eq!(reduced_rhs(0.0, 0.3, &zero, &rm), 0.0);
        let sym = DVector::from_vec(alloc::vec![0.05, 0.0, -0.05]);
        assert!(rm.input_gains.dot(&sym).abs() < 1e-15);
        assert_eq!(unfolding_direction(&sym, &rm), Unfolding::Symmetric);
        let tilted = &rm.direction * 0.1 + &sym;
        assert!((rm.input_gains.dot(&tilted) - 0.1).abs() < 1e-12);
        assert_eq!(unfolding_direction(&tilted, &rm), Unfolding::UpperBranch);
        let neg = -rm.input_gains.clone();
        assert_eq!(unfolding_direction(&neg, &rm), Unfolding::LowerBranch);
        // the cubic with an input term has a root matching direct evaluation
        for r in reduced_roots(0.02, &tilted, &rm) {
            assert!(reduced_rhs(r, 0.02, &tilted, &rm).abs() < 1e-13);
        }
    }

    #[test]
    fn small_input_prediction() {
        let (g, s) = p3();
        let p = params(1.0, 1.0, 1.0);
        assert_eq!(
            predict_small_input_equilibrium(&s, &g, &p, 0.4).unwrap(),
            DVector::zeros(3)
        );
        let vmax = s.critical_vector(Regime::Agreement).unwrap();
        let eps = 1e-3;
        let pe = p.with_input(&vmax * eps);
        let x = predict_small_input_equilibrium(&s, &g, &pe, 0.4).unwrap();
        let expect = &vmax * (eps / (1.0 - 0.4 * (1.0 + SQRT_2)));
        assert!((x - expect).amax() < 1e-15);

        // direct solve on a digraph agrees with the expansion on its symmetrization
        let pb = p.with_input(DVector::from_vec(alloc::vec![0.01, 0.0, 0.0]));
        let xe = predict_small_input_equilibrium(&s, &g, &pb, 0.4).unwrap();
        let gd = crate::graph::build_graph(3, &[(0, 1), (1, 0), (1, 2), (2, 1)], true).unwrap();
        let sd = compute_spectrum(&gd, DEFAULT_GAP_TOLERANCE).unwrap();
        let xd = predict_small_input_equilibrium(&sd, &gd, &pb, 0.4).unwrap();
        assert!((xe - xd).amax() < 1e-14);

        let at_crit = predict_small_input_equilibrium(&s, &g, &pb, 1.0 / (1.0 + SQRT_2));
        assert!(matches!(at_crit, Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn small_input_prediction_near_newton_equilibrium() {
        let (g, s) = p3();
        let ap = AttentionParams::new(0.4, 1.0, 0.4, 3, 10.0).unwrap();
        let mut rel = Vec::new();
        for m in [1e-3, 1e-4] {
            let p = params(1.0, 1.0, 1.0).with_input(DVector::from_vec(alloc::vec![m, 0.0, 0.0]));
            let field = CoupledField {
                graph: &g,
                params: &p,
                attention: &ap,
            };
            let eq = newton_equilibrium(&field, &SystemState::neutral(3, 0.4), 1e-14, 50).unwrap();
            assert_eq!(eq.stability, Stability::Stable);
            let lin = predict_small_input_equilibrium(&s, &g, &p, 0.4).unwrap();
            rel.push((&eq.state.x - &lin).norm() / lin.norm());
        }
        // the linear prediction is first-order accurate
        assert!(rel[0] < 1e-2 && rel[1] < 0.1 * rel[0], "{rel:?}");
    }

    #[test]
    fn ip_diagnostic() {
        let (g, s) = p3();
        let p = params(1.0, 1.0, 1.0);
        let vmax = s.critical_vector(Regime::Agreement).unwrap();
        let make = |x: DVector<f64>| Equilibrium {
            state: SystemState {
                x,
                u: DVector::from_element(3, 0.5),
            },
            residual_norm: 0.0,
            jacobian_eigenvalues: Vec::new(),
            stability: Stability::Stable,
            leading_eigenvalue: crate::linalg::C64::new(0.0, 0.0),
            iterations: 0,
            residual_history: Vec::new(),
        };
        assert_eq!(
            ip_condition_diagnostic(&make(DVector::zeros(3)), &s, 1, &p, &g).unwrap(),
            0.0
        );
        assert!(matches!(
            ip_condition_diagnostic(&make(DVector::zeros(3)), &s, 0, &p, &g),
            Err(Error::CriticalIndex(0))
        ));
        let xp = &vmax * 0.1;
        let plus = ip_condition_diagnostic(&make(xp.clone()), &s, 2, &p, &g).unwrap();
        let minus = ip_condition_diagnostic(&make(-xp.clone()), &s, 2, &p, &g).unwrap();
        assert!(plus != 0.0);
        assert_eq!(plus, -minus);
        // direct elementwise evaluation
        let v2 = s.pair(2).right_real().unwrap();
        let arg = coupling_argument(&xp, &p, &g);
        let expect: f64 = (0..3)
            .map(|k| {
                let t = libm::tanh(arg[k]);
                0.5 * vmax[k] * vmax[k] * v2[k] * (-2.0 * t * (1.0 - t * t))
            })
            .sum();
        assert!((plus - expect).abs() < 1e-15);
    }
}
