//! Gauss-Hermite rules for the standard Gaussian measure, built by
//! Golub-Welsch from the three-term recurrence He_{n+1} = x He_n - n He_{n-1},
//! plus a tensor-grid iterator for multidimensional rules.

use crate::linalg::{jacobi_eigen, Matrix};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule integrating polynomials of degree <= 2n-1 exactly against
    /// the standard Gaussian measure (weights sum to 1).
    ///
    /// Golub-Welsch eigenvalues only seed the nodes; Newton steps on the
    /// orthonormal recurrence push them to machine precision, and the
    /// weights come from the closed form 1/(n he_{n-1}(x)^2).
    fn build(n: usize) -> Self {
        assert!(n >= 1);
        let mut j = Matrix::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            j.set(k - 1, k, b);
            j.set(k, k - 1, b);
        }
        let (mut nodes, _) = jacobi_eigen(&j);
        let sqrt_n = (n as f64).sqrt();
        let mut weights = vec![0.0; n];
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            for _ in 0..4 {
                let (hn, hnm1) = he_orthonormal_pair(n, *x);
                *x -= hn / (sqrt_n * hnm1);
            }
            let (_, hnm1) = he_orthonormal_pair(n, *x);
            *w = 1.0 / (n as f64 * hnm1 * hnm1);
        }
        // Pair up mirrored nodes so odd moments vanish identically.
        for i in 0..n / 2 {
            let m = n - 1 - i;
            let x = 0.5 * (nodes[m] - nodes[i]);
            nodes[i] = -x;
            nodes[m] = x;
            let w = 0.5 * (weights[i] + weights[m]);
            weights[i] = w;
            weights[m] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        GaussHermite { nodes, weights }
    }
}

/// Values (he_n(x), he_{n-1}(x)) of the orthonormalized probabilists'
/// Hermite polynomials he_k = He_k / sqrt(k!), kept O(1) by the scaled
/// three-term recurrence.
fn he_orthonormal_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0f64;
    let mut cur = x;
    if n == 1 {
        return (cur, prev);
    }
    for k in 1..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

static RULE_CACHE: Lazy<Mutex<HashMap<usize, Arc<GaussHermite>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

pub fn gauss_hermite(n: usize) -> Arc<GaussHermite> {
    let mut cache = RULE_CACHE.lock().unwrap();
    cache.entry(n).or_insert_with(|| Arc::new(GaussHermite::build(n))).clone()
}

/// Iterate a K-dimensional tensor grid of per-axis indices, yielding
/// (indices, weight-product) through a callback. Axis counts may differ.
pub fn tensor_visit(counts: &[usize], rules: &[Arc<GaussHermite>], mut f: impl FnMut(&[f64], f64)) {
    let k = counts.len();
    assert_eq!(rules.len(), k);
    if k == 0 {
        f(&[], 1.0);
        return;
    }
    let mut idx = vec![0usize; k];
    let mut point = vec![0.0f64; k];
    loop {
        let mut w = 1.0;
        for d in 0..k {
            point[d] = rules[d].nodes[idx[d]];
            w *= rules[d].weights[idx[d]];
        }
        f(&point, w);
        // Odometer increment.
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == k {
                return;
            }
        }
    }
}

/// Default per-axis node count keeping the tensor grid around or below 1e6
/// points while staying dense in low dimension.
pub fn default_nodes_per_dim(k: usize) -> usize {
    match k {
        0 | 1 => 120,
        2 => 48,
        3 => 24,
        4 => 16,
        5 => 12,
        _ => 10,
    }
}

pub const TENSOR_POINT_CAP: usize = 10_000_000;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_rule() {
        let r = gauss_hermite(2);
        assert_relative_eq!(r.nodes[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(r.nodes[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.weights[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.weights[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn three_point_rule() {
        let r = gauss_hermite(3);
        assert_relative_eq!(r.nodes[0], -(3.0f64.sqrt()), epsilon = 1e-10);
        assert_relative_eq!(r.nodes[1], 0.0, epsilon = 1e-10);
        assert_relative_eq!(r.weights[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_moments_exact() {
        // E x^2 = 1, E x^4 = 3, E x^6 = 15 with enough nodes.
        let r = gauss_hermite(6);
        for (p, expect) in [(2u32, 1.0), (4, 3.0), (6, 15.0)] {
            let v: f64 =
                r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
            assert_relative_eq!(v, expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn exponential_integral() {
        // E e^X = sqrt(e).
        let r = gauss_hermite(40);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.exp()).sum();
        assert_relative_eq!(v, 1.0f64.exp().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn weights_sum_to_one_large() {
        let r = gauss_hermite(120);
        let s: f64 = r.weights.iter().sum();
        assert_relative_eq!(s, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn tensor_visit_covers_grid() {
        let r2 = gauss_hermite(2);
        let r3 = gauss_hermite(3);
        let mut total = 0.0;
        let mut count = 0;
        tensor_visit(&[2, 3], &[r2, r3], |pt, w| {
            assert_eq!(pt.len(), 2);
            total += w;
            count += 1;
        });
        assert_eq!(count, 6);
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }
}
