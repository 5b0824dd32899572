//! Adjacency eigenvalues against roots of the exact characteristic
//! polynomial, for every undirected graph on at most five vertices and for
//! digraphs (exhaustive up to four vertices, sampled at five).

#[path = "support/charpoly.rs"]
mod charpoly;

use cascade_core::linalg::{cabs, eigen_residual, C64};
use cascade_core::spectra::{compute_spectrum, DEFAULT_GAP_TOLERANCE};
use cascade_core::Graph;
use charpoly::{char_poly, from_mask, oracle_eigenvalues, yun, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(g: &Graph) -> f64 {
    let a = g.adjacency_matrix().clone();
    let s = compute_spectrum(g, DEFAULT_GAP_TOLERANCE).unwrap();
    let want = oracle_eigenvalues(&a);
    assert_eq!(want.len(), g.num_vertices());
    let mut got: Vec<Option<C64>> = s.eigenvalues().iter().copied().map(Some).collect();
    let mut worst = 0.0f64;
    for w in &want {
        let (k, dist) = got
            .iter()
            .enumerate()
            .filter_map(|(k, z)| z.map(|z| (k, cabs(z - w))))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        got[k] = None;
        worst = worst.max(dist);
    }
    assert!(
        worst < 1e-6,
        "{:?}: oracle {want:?} vs {:?}",
        g.edges(),
        s.eigenvalues()
    );
    // eigenvectors of simple eigenvalues
    for i in 0..s.len() {
        if s.is_simple(i) {
            let pair = s.pair(i);
            assert!(eigen_residual(&a, pair.eigenvalue, &pair.right) < 1e-8);
            assert!(eigen_residual(&a.transpose(), pair.eigenvalue, &pair.left) < 1e-8);
        }
    }
    worst
}

#[test]
fn oracle_polynomials() {
    let p3 = Graph::path(3).unwrap();
    assert_eq!(char_poly(p3.adjacency_matrix()), vec![0, -2, 0, 1]);
    let k4 = Graph::complete(4).unwrap();
    // (x - 3)(x + 1)^3
    assert_eq!(char_poly(k4.adjacency_matrix()), vec![-3, -8, -6, 0, 1]);
    let f = yun(&char_poly(k4.adjacency_matrix())
        .into_iter()
        .map(Q::from_integer)
        .collect());
    assert_eq!(f.len(), 3);
    assert_eq!(f[0], vec![Q::from_integer(-3), Q::from_integer(1)]);
    assert_eq!(f[1], vec![Q::from_integer(1)]);
    assert_eq!(f[2], vec![Q::from_integer(1), Q::from_integer(1)]);
}

#[test]
fn all_undirected_graphs_up_to_five_vertices() {
    let mut count = 0;
    for n in 1..=5usize {
        let m = n * (n - 1) / 2;
        for mask in 0..(1u64 << m) {
            check(&from_mask(n, mask, false));
            count += 1;
        }
    }
    assert_eq!(count, 1 + 2 + 8 + 64 + 1024);
}

#[test]
fn all_digraphs_up_to_four_vertices() {
    for n in 1..=4usize {
        let m = n * (n - 1);
        for mask in 0..(1u64 << m) {
            check(&from_mask(n, mask, true));
        }
    }
}

#[test]
fn sampled_digraphs_on_five_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20_000 {
        let mask = rng.random::<u64>() & ((1 << 20) - 1);
        check(&from_mask(5, mask, true));
    }
}
