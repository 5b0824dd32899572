//! Eigenvalues from the exact characteristic polynomial: Faddeev-LeVerrier
//! in integers, square-free factorisation over the rationals, then
//! Durand-Kerner on each factor.

#![allow(dead_code)]

use cascade_core::linalg::{cabs, C64};
use cascade_core::{build_graph, DMatrix, Graph};
use num_rational::Ratio;

pub type Q = Ratio<i128>;
/// Coefficients, lowest degree first.
pub type Poly = Vec<Q>;

/// Characteristic polynomial `det(x I - A)` by Faddeev-LeVerrier in exact
/// integer arithmetic.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<i128> {
    let n = a.nrows();
    let ai: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] as i128).collect())
        .collect();
    let mut c = vec![0i128; n + 1];
    c[n] = 1;
    let mut m = vec![vec![0i128; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0i128; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0;
                for l in 0..n {
                    s += ai[i][l] * m[l][j];
                }
                next[i][j] = s + if i == j { c[n - k + 1] } else { 0 };
            }
        }
        m = next;
        let mut tr = 0;
        for i in 0..n {
            for l in 0..n {
                tr += ai[i][l] * m[l][i];
            }
        }
        assert_eq!(tr % k as i128, 0);
        c[n - k] = -tr / k as i128;
    }
    c
}

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && *p.last().unwrap() == Q::from_integer(0) {
        p.pop();
    }
    p
}

fn is_zero(p: &Poly) -> bool {
    p.iter().all(|c| *c == Q::from_integer(0))
}

fn monic(p: Poly) -> Poly {
    let lead = *p.last().unwrap();
    p.into_iter().map(|c| c / lead).collect()
}

fn derivative(p: &Poly) -> Poly {
    if p.len() <= 1 {
        return vec![Q::from_integer(0)];
    }
    (1..p.len())
        .map(|i| p[i] * Q::from_integer(i as i128))
        .collect()
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let z = Q::from_integer(0);
    trim(
        (0..n)
            .map(|i| *a.get(i).unwrap_or(&z) - *b.get(i).unwrap_or(&z))
            .collect(),
    )
}

fn divrem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let b = trim(b.clone());
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (vec![Q::from_integer(0)], r);
    }
    let mut q = vec![Q::from_integer(0); r.len() - db];
    while r.len() >= b.len() && !is_zero(&r) {
        let shift = r.len() - b.len();
        let coef = *r.last().unwrap() / *b.last().unwrap();
        q[shift] = coef;
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] -= coef * *bc;
        }
        r.pop();
        r = trim(r);
    }
    (trim(q), r)
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (trim(a.clone()), trim(b.clone()));
    while !is_zero(&b) {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(a)
}

/// Square-free factors `a_1, a_2, ...` with `p = prod a_i^i`.
pub fn yun(p: &Poly) -> Vec<Poly> {
    let dp = derivative(p);
    let a0 = gcd(p, &dp);
    let mut b = divrem(p, &a0).0;
    let c = divrem(&dp, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    while b.len() > 1 {
        let a = gcd(&b, &d);
        let nb = divrem(&b, &a).0;
        let nc = divrem(&d, &a).0;
        d = sub(&nc, &derivative(&nb));
        b = nb;
        out.push(a);
    }
    out
}

fn to_f64(c: &Q) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

fn eval(p: &[f64], z: C64) -> C64 {
    p.iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, c| acc * z + C64::new(*c, 0.0))
}

/// Roots of a square-free polynomial by Durand-Kerner, polished by Newton.
fn roots(p: &Poly) -> Vec<C64> {
    let p = monic(p.clone());
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let coef: Vec<f64> = p.iter().map(to_f64).collect();
    let dcoef: Vec<f64> = (1..coef.len()).map(|i| coef[i] * i as f64).collect();
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32) * 1.5).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(&coef, z[i]) / den;
            z[i] -= step;
            delta = delta.max(cabs(step));
        }
        if delta < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = eval(&dcoef, *zi);
            if cabs(d) > 0.0 {
                *zi -= eval(&coef, *zi) / d;
            }
        }
    }
    z
}

pub fn oracle_eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    let c = char_poly(a);
    let p: Poly = c.iter().map(|v| Q::from_integer(*v)).collect();
    let mut out = Vec::new();
    for (i, factor) in yun(&p).iter().enumerate() {
        for r in roots(factor) {
            for _ in 0..=i {
                out.push(r);
            }
        }
    }
    out
}

/// Graph whose edge set is the bit pattern `mask` over the ordered pairs
/// `i != j` (directed) or `i < j` (undirected).
pub fn from_mask(n: usize, mask: u64, directed: bool) -> Graph {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| if directed { i != j } else { i < j })
        .collect();
    let edges: Vec<(usize, usize)> = pairs
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, e)| *e)
        .collect();
    build_graph(n, &edges, directed).unwrap()
}
