//! Correlated Gaussian vectors split into blocks, and three expectation
//! engines over them: exact moments by Wick pairing, tensor Gauss-Hermite
//! quadrature, and deterministic counter-seeded Monte Carlo.
//!
//! The model throughout: X ~ N(0, Sigma) in R^K with K = k_1 + ... + k_n,
//! each diagonal block Sigma_jj = Id (block marginals are standard), and
//! lambda_min(Sigma) > 0. With L the Cholesky factor, X = L g for standard g.

use crate::error::{CoreError, Result};
use crate::hermite::{Basis, HermitePoly, MultiIndex, DEFAULT_DEGREE_CAP};
use crate::linalg::{jacobi_eigen, Matrix};
use crate::quadrature::{gauss_hermite, tensor_visit, TENSOR_POINT_CAP};
use crate::rng::CounterRng;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const UNIT_BLOCK_TOL: f64 = 1e-12;
pub const MIN_EIGENVALUE: f64 = 1e-10;
pub const WICK_DEGREE_CAP: u32 = 16;

#[derive(Clone, Debug)]
pub struct BlockCovariance {
    block_sizes: Vec<usize>,
    matrix: Matrix,
    chol: Matrix,
    lambda_min: f64,
    lambda_max: f64,
}

impl BlockCovariance {
    /// Validates symmetry, identity diagonal blocks, and strict positivity
    /// before accepting the matrix.
    pub fn new(block_sizes: Vec<usize>, matrix: Matrix) -> Result<Self> {
        let k: usize = block_sizes.iter().sum();
        if block_sizes.is_empty() || block_sizes.iter().any(|&s| s == 0) {
            return Err(CoreError::Malformed("block sizes must be positive".into()));
        }
        if matrix.n_rows() != k || matrix.n_cols() != k {
            return Err(CoreError::DimensionMismatch { expected: k, got: matrix.n_rows() });
        }
        if !matrix.is_symmetric(SYMMETRY_TOL) {
            return Err(CoreError::Malformed("covariance is not symmetric".into()));
        }
        let offsets = offsets_of(&block_sizes);
        for (j, &kj) in block_sizes.iter().enumerate() {
            for a in 0..kj {
                for b in 0..kj {
                    let want = if a == b { 1.0 } else { 0.0 };
                    let got = matrix.get(offsets[j] + a, offsets[j] + b);
                    if (got - want).abs() > UNIT_BLOCK_TOL {
                        return Err(CoreError::Malformed(format!(
                            "diagonal block {j} is not the identity (entry ({a},{b}) = {got})"
                        )));
                    }
                }
            }
        }
        let (eigs, _) = jacobi_eigen(&matrix);
        let lambda_min = eigs[0];
        let lambda_max = eigs[eigs.len() - 1];
        if lambda_min <= MIN_EIGENVALUE {
            return Err(CoreError::NotPositiveDefinite { pivot: lambda_min, index: 0 });
        }
        let chol = crate::linalg::cholesky(&matrix)?;
        Ok(BlockCovariance { block_sizes, matrix, chol, lambda_min, lambda_max })
    }

    /// Two blocks of size `n` with off-diagonal correlation `rho * Id`.
    pub fn pair_correlation(rho: f64, n: usize) -> Result<Self> {
        let mut m = Matrix::identity(2 * n);
        for i in 0..n {
            m.set(i, n + i, rho);
            m.set(n + i, i, rho);
        }
        BlockCovariance::new(vec![n, n], m)
    }

    pub fn identity(block_sizes: Vec<usize>) -> Result<Self> {
        let k = block_sizes.iter().sum();
        BlockCovariance::new(block_sizes, Matrix::identity(k))
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn n_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn offsets(&self) -> Vec<usize> {
        offsets_of(&self.block_sizes)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn cholesky_factor(&self) -> &Matrix {
        &self.chol
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// Scalar cross-correlation for blocks of size 1.
    pub fn scalar_correlation(&self, bi: usize, bj: usize) -> f64 {
        let off = self.offsets();
        self.matrix.get(off[bi], off[bj])
    }

    /// E prod_i X_i^{e_i} by recursive Wick pairing over the counts vector,
    /// memoized; exactly zero for odd total degree.
    pub fn wick_moment(&self, exps: &[u32]) -> Result<f64> {
        if exps.len() != self.total_dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.total_dim(),
                got: exps.len(),
            });
        }
        let degree: u32 = exps.iter().sum();
        if degree > WICK_DEGREE_CAP {
            return Err(CoreError::DegreeCap { degree: degree as usize, cap: WICK_DEGREE_CAP as usize });
        }
        if degree % 2 == 1 {
            return Ok(0.0);
        }
        let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
        Ok(self.wick_rec(exps.to_vec(), &mut memo))
    }

    fn wick_rec(&self, counts: Vec<u32>, memo: &mut HashMap<Vec<u32>, f64>) -> f64 {
        let first = match counts.iter().position(|&c| c > 0) {
            None => return 1.0,
            Some(i) => i,
        };
        if let Some(&v) = memo.get(&counts) {
            return v;
        }
        // Pair one copy of coordinate `first` with each available partner.
        let mut rest = counts.clone();
        rest[first] -= 1;
        let mut total = 0.0;
        for j in 0..rest.len() {
            if rest[j] == 0 {
                continue;
            }
            let cov = self.matrix.get(first, j);
            if cov == 0.0 {
                continue;
            }
            let mult = rest[j] as f64;
            let mut sub = rest.clone();
            sub[j] -= 1;
            total += mult * cov * self.wick_rec(sub, memo);
        }
        memo.insert(counts, total);
        total
    }

    /// Exact E prod_j f_j(X^(j)) for per-block polynomials, via monomial
    /// expansion and Wick moments.
    pub fn expect_product_exact(&self, polys: &[HermitePoly]) -> Result<Complex64> {
        if polys.len() != self.n_blocks() {
            return Err(CoreError::DimensionMismatch {
                expected: self.n_blocks(),
                got: polys.len(),
            });
        }
        let mut prod = HermitePoly::constant(
            self.total_dim(),
            Basis::Monomial,
            Complex64::new(1.0, 0.0),
        );
        for (j, f) in polys.iter().enumerate() {
            let embedded = embed_block(f, &self.block_sizes, j)?;
            prod = prod.multiply(&embedded, WICK_DEGREE_CAP as usize)?;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
        for (idx, c) in prod.terms() {
            if idx.degree() % 2 == 1 {
                continue;
            }
            acc += c * self.wick_rec(idx.exps().to_vec(), &mut memo);
        }
        Ok(acc)
    }

    /// Tensor Gauss-Hermite estimate of E f(X): integrates f(L g) over
    /// standard g with `nodes_per_dim` nodes in each of the K dimensions.
    /// Exact for polynomial integrands of total degree <= 2*nodes - 1.
    pub fn expect_quadrature<F>(&self, f: F, nodes_per_dim: usize) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let k = self.total_dim();
        let points = (nodes_per_dim as f64).powi(k as i32);
        if points > TENSOR_POINT_CAP as f64 {
            return Err(CoreError::BudgetExhausted {
                cap: TENSOR_POINT_CAP,
                what: "tensor quadrature points",
            });
        }
        let rule = gauss_hermite(nodes_per_dim);
        let rules: Vec<_> = (0..k).map(|_| rule.clone()).collect();
        let counts = vec![nodes_per_dim; k];
        let mut acc = 0.0;
        let mut g = vec![0.0; k];
        let mut x = vec![0.0; k];
        tensor_visit(&counts, &rules, |point, weight| {
            g.copy_from_slice(point);
            self.chol.matvec_into(&g, &mut x);
            acc += weight * f(&x);
        });
        Ok(acc)
    }

    /// Monte Carlo estimate of E f(X). Sample i draws its K normals from
    /// counter positions i*K..(i+1)*K, so the result is independent of
    /// thread scheduling; chunks are combined in index order.
    pub fn expect_mc<F>(&self, f: F, n_samples: usize, seed: u64) -> McEstimate
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let k = self.total_dim();
        let rng = CounterRng::new(seed);
        let chunk = 4096usize;
        let n_chunks = n_samples.div_ceil(chunk);
        let partials: Vec<(f64, f64, usize, bool)> = (0..n_chunks)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * chunk;
                let hi = ((ci + 1) * chunk).min(n_samples);
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                let mut tainted = false;
                let mut g = vec![0.0; k];
                let mut x = vec![0.0; k];
                for i in lo..hi {
                    for (d, gd) in g.iter_mut().enumerate() {
                        *gd = rng.normal((i * k + d) as u64);
                    }
                    self.chol.matvec_into(&g, &mut x);
                    let v = f(&x);
                    if !v.is_finite() {
                        tainted = true;
                        continue;
                    }
                    sum += v;
                    sumsq += v * v;
                }
                (sum, sumsq, hi - lo, tainted)
            })
            .collect();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut n = 0usize;
        let mut tainted = false;
        for (s, s2, m, t) in partials {
            sum += s;
            sumsq += s2;
            n += m;
            tainted |= t;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        McEstimate { mean, stderr: (var / n as f64).sqrt(), n_samples: n, tainted }
    }

    /// Text form: `blocks=k1 k2 ...` header then K rows of K entries.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let sizes: Vec<String> = self.block_sizes.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "blocks={}", sizes.join(" "));
        let k = self.total_dim();
        for i in 0..k {
            let row: Vec<String> = (0..k).map(|j| self.matrix.get(i, j).to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| CoreError::Parse("empty covariance".into()))?;
        let body = header
            .trim()
            .strip_prefix("blocks=")
            .ok_or_else(|| CoreError::Parse("expected 'blocks=' header".into()))?;
        let sizes: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| CoreError::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        let k: usize = sizes.iter().sum();
        let mut m = Matrix::zeros(k, k);
        for i in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| CoreError::Parse(format!("expected {k} matrix rows")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| CoreError::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(CoreError::Parse(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        if lines.next().is_some() {
            return Err(CoreError::Parse("trailing content after matrix rows".into()));
        }
        BlockCovariance::new(sizes, m)
    }
}

/// Monte Carlo estimate with sampling error; `tainted` records non-finite
/// integrand values that were skipped.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub tainted: bool,
}

pub fn offsets_of(block_sizes: &[usize]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(block_sizes.len());
    let mut acc = 0;
    for &s in block_sizes {
        offs.push(acc);
        acc += s;
    }
    offs
}

/// Lift a polynomial on block `j` to the full K coordinates.
pub fn embed_block(
    f: &HermitePoly,
    block_sizes: &[usize],
    j: usize,
) -> Result<HermitePoly> {
    if j >= block_sizes.len() {
        return Err(CoreError::Malformed(format!("block index {j} out of range")));
    }
    if f.dim() != block_sizes[j] {
        return Err(CoreError::DimensionMismatch { expected: block_sizes[j], got: f.dim() });
    }
    let k: usize = block_sizes.iter().sum();
    let off = offsets_of(block_sizes)[j];
    let mono = f.to_monomial(DEFAULT_DEGREE_CAP)?;
    let terms = mono
        .terms()
        .map(|(idx, c)| {
            let mut e = vec![0u32; k];
            e[off..off + f.dim()].copy_from_slice(idx.exps());
            (MultiIndex::new(e), *c)
        })
        .collect();
    HermitePoly::new(k, Basis::Monomial, terms)
}

/// Random admissible block covariance: G G^T + 0.1 Id, block-normalized by
/// the inverse square roots of its diagonal blocks so block marginals are
/// exactly standard.
pub fn random_block_covariance(block_sizes: &[usize], seed: u64) -> Result<BlockCovariance> {
    let k: usize = block_sizes.iter().sum();
    let rng = CounterRng::new(seed);
    let mut g = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g.set(i, j, rng.normal((i * k + j) as u64));
        }
    }
    let mut sigma = g.matmul(&g.transpose());
    for i in 0..k {
        sigma.set(i, i, sigma.get(i, i) + 0.1);
    }
    let offs = offsets_of(block_sizes);
    let mut d = Matrix::zeros(k, k);
    for (j, &kj) in block_sizes.iter().enumerate() {
        let block = sigma.principal_submatrix(&(offs[j]..offs[j] + kj).collect::<Vec<_>>());
        let inv_sqrt = crate::linalg::inv_sqrt_spd(&block)?;
        for a in 0..kj {
            for b in 0..kj {
                d.set(offs[j] + a, offs[j] + b, inv_sqrt.get(a, b));
            }
        }
    }
    let mut normalized = d.matmul(&sigma).matmul(&d);
    // Exact symmetry and exact identity blocks, clearing roundoff.
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (normalized.get(i, j) + normalized.get(j, i));
            normalized.set(i, j, avg);
            normalized.set(j, i, avg);
        }
    }
    for (j, &kj) in block_sizes.iter().enumerate() {
        for a in 0..kj {
            for b in 0..kj {
                normalized.set(offs[j] + a, offs[j] + b, if a == b { 1.0 } else { 0.0 });
            }
        }
    }
    BlockCovariance::new(block_sizes.to_vec(), normalized)
}
