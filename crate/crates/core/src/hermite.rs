//! Sparse multivariate polynomials over complex coefficients with exact
//! conversion between the monomial basis and the probabilists' Hermite basis
//! H_beta(x) = prod_i He_{beta_i}(x_i), where He_n is monic:
//! He_0 = 1, He_1 = x, He_{n+1} = x He_n - n He_{n-1}.

use crate::error::{CoreError, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const DEFAULT_DEGREE_CAP: usize = 16;

/// Multi-index of exponents; ordering is lexicographic on the exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    exps: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex { exps }
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex { exps: vec![0; dim] }
    }

    pub fn unit(dim: usize, coord: usize) -> Self {
        let mut e = vec![0; dim];
        e[coord] = 1;
        MultiIndex { exps: e }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    Hermite,
    Monomial,
}

/// Coefficients of the monic univariate He_n in the monomial basis, exact in
/// f64 (integer values; the largest, at n = 16, is far below 2^53).
fn he_univariate(n: usize) -> Vec<f64> {
    // Table: row n holds coefficients c_0..c_n with He_n = sum c_k x^k.
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for m in 1..n {
        // He_{m+1} = x He_m - m He_{m-1}
        let mut next = vec![0.0; m + 2];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += c;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= (m as f64) * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Sparse polynomial tagged with its basis. Canonical form: terms sorted by
/// multi-index, no exactly-zero coefficients stored.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitePoly {
    dim: usize,
    basis: Basis,
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl HermitePoly {
    pub fn new(dim: usize, basis: Basis, terms: Vec<(MultiIndex, Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, c) in terms {
            if idx.dim() != dim {
                return Err(CoreError::DimensionMismatch { expected: dim, got: idx.dim() });
            }
            let entry = map.entry(idx).or_insert(Complex64::new(0.0, 0.0));
            *entry += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(HermitePoly { dim, basis, terms: map })
    }

    pub fn zero(dim: usize, basis: Basis) -> Self {
        HermitePoly { dim, basis, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, basis: Basis, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(MultiIndex::zeros(dim), c);
        }
        HermitePoly { dim, basis, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> Complex64 {
        self.terms.get(idx).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, s: Complex64) -> HermitePoly {
        let mut out = self.clone();
        out.terms = out
            .terms
            .into_iter()
            .map(|(k, c)| (k, c * s))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        out
    }

    pub fn add(&self, other: &HermitePoly) -> Result<HermitePoly> {
        if self.dim != other.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.basis != other.basis {
            return Err(CoreError::BasisMismatch {
                expected: match self.basis {
                    Basis::Hermite => "hermite",
                    Basis::Monomial => "monomial",
                },
            });
        }
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let e = terms.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0));
            *e += c;
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(HermitePoly { dim: self.dim, basis: self.basis, terms })
    }

    /// Coefficient-conjugated polynomial; on real arguments this evaluates to
    /// the complex conjugate of `self`.
    pub fn conjugate(&self) -> HermitePoly {
        let mut out = self.clone();
        out.terms = out.terms.into_iter().map(|(k, c)| (k, c.conj())).collect();
        out
    }

    /// H_beta expanded in the monomial basis via the tensor product of the
    /// univariate expansions from E(x + i xi)^n.
    pub fn hermite_basis(beta: &MultiIndex, cap: usize) -> Result<HermitePoly> {
        let deg = beta.degree() as usize;
        if deg > cap {
            return Err(CoreError::DegreeCap { degree: deg, cap });
        }
        let dim = beta.dim();
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        acc.insert(MultiIndex::zeros(dim), 1.0);
        for (coord, &e) in beta.exps().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let uni = he_univariate(e as usize);
            let mut next: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            for (idx, c) in &acc {
                for (k, hc) in uni.iter().enumerate() {
                    if *hc == 0.0 {
                        continue;
                    }
                    let mut ne = idx.exps().to_vec();
                    ne[coord] += k as u32;
                    *next.entry(MultiIndex::new(ne)).or_insert(0.0) += c * hc;
                }
            }
            acc = next;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(k, c)| (k, Complex64::new(c, 0.0)))
            .collect();
        Ok(HermitePoly { dim, basis: Basis::Monomial, terms })
    }

    /// Rewrite a Hermite-basis polynomial in the monomial basis (exact).
    pub fn to_monomial(&self, cap: usize) -> Result<HermitePoly> {
        match self.basis {
            Basis::Monomial => Ok(self.clone()),
            Basis::Hermite => {
                let mut out = HermitePoly::zero(self.dim, Basis::Monomial);
                for (beta, c) in &self.terms {
                    let h = HermitePoly::hermite_basis(beta, cap)?;
                    out = out.add(&h.scaled(*c))?;
                }
                Ok(out)
            }
        }
    }

    /// Rewrite a monomial-basis polynomial in the Hermite basis by
    /// leading-term elimination (He_n is monic, so the map is triangular).
    pub fn to_hermite(&self, cap: usize) -> Result<HermitePoly> {
        match self.basis {
            Basis::Hermite => Ok(self.clone()),
            Basis::Monomial => {
                if self.degree() as usize > cap {
                    return Err(CoreError::DegreeCap { degree: self.degree() as usize, cap });
                }
                let mut work = self.terms.clone();
                let mut out: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
                while let Some((beta, c)) = work
                    .iter()
                    .max_by(|(a, _), (b, _)| a.degree().cmp(&b.degree()).then(a.cmp(b)))
                    .map(|(k, v)| (k.clone(), *v))
                {
                    out.insert(beta.clone(), c);
                    let expansion = HermitePoly::hermite_basis(&beta, cap)?;
                    for (idx, hc) in &expansion.terms {
                        let e = work.entry(idx.clone()).or_insert(Complex64::new(0.0, 0.0));
                        *e -= c * hc;
                    }
                    work.retain(|_, v| *v != Complex64::new(0.0, 0.0));
                }
                out.retain(|_, v| *v != Complex64::new(0.0, 0.0));
                Ok(HermitePoly { dim: self.dim, basis: Basis::Hermite, terms: out })
            }
        }
    }

    /// Evaluate at a complex point. Per-coordinate power (or He-value) tables
    /// are filled once, then terms accumulate in canonical order.
    pub fn evaluate(&self, x: &[Complex64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut max_exp = vec![0u32; self.dim];
        for idx in self.terms.keys() {
            for (d, &e) in idx.exps().iter().enumerate() {
                max_exp[d] = max_exp[d].max(e);
            }
        }
        // tables[d][k] = x_d^k (monomial) or He_k(x_d) (Hermite).
        let tables: Vec<Vec<Complex64>> = (0..self.dim)
            .map(|d| {
                let m = max_exp[d] as usize;
                let mut t = Vec::with_capacity(m + 1);
                t.push(Complex64::new(1.0, 0.0));
                if m >= 1 {
                    t.push(x[d]);
                }
                match self.basis {
                    Basis::Monomial => {
                        for k in 2..=m {
                            let prev = t[k - 1];
                            t.push(prev * x[d]);
                        }
                    }
                    Basis::Hermite => {
                        for k in 2..=m {
                            let a = t[k - 1];
                            let b = t[k - 2];
                            t.push(x[d] * a - ((k - 1) as f64) * b);
                        }
                    }
                }
                t
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in &self.terms {
            let mut term = *c;
            for (d, &e) in idx.exps().iter().enumerate() {
                if e > 0 {
                    term *= tables[d][e as usize];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    pub fn evaluate_real(&self, x: &[f64]) -> Result<Complex64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.evaluate(&z)
    }

    /// Product, returned in the monomial basis.
    pub fn multiply(&self, other: &HermitePoly, cap: usize) -> Result<HermitePoly> {
        if self.dim != other.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let a = self.to_monomial(cap)?;
        let b = other.to_monomial(cap)?;
        let deg = (a.degree() + b.degree()) as usize;
        if !a.is_zero() && !b.is_zero() && deg > cap {
            return Err(CoreError::DegreeCap { degree: deg, cap });
        }
        let mut terms: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (ia, ca) in &a.terms {
            for (ib, cb) in &b.terms {
                let exps: Vec<u32> =
                    ia.exps().iter().zip(ib.exps()).map(|(x, y)| x + y).collect();
                let e = terms.entry(MultiIndex::new(exps)).or_insert(Complex64::new(0.0, 0.0));
                *e += ca * cb;
            }
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(HermitePoly { dim: self.dim, basis: Basis::Monomial, terms })
    }

    /// Ornstein-Uhlenbeck generator L = Laplacian - x . grad, acting on the
    /// Hermite basis as c_beta -> -|beta| c_beta.
    pub fn ou_generator(&self) -> Result<HermitePoly> {
        if self.basis != Basis::Hermite {
            return Err(CoreError::BasisMismatch { expected: "hermite" });
        }
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| k.degree() > 0)
            .map(|(k, c)| (k.clone(), -Complex64::new(k.degree() as f64, 0.0) * c))
            .collect();
        Ok(HermitePoly { dim: self.dim, basis: self.basis, terms })
    }

    /// Text form: header `dim=<k> basis=<hermite|monomial>`, then one term per
    /// line as `re im : e1 e2 ... ek`. Round-trips exactly (shortest f64).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let basis = match self.basis {
            Basis::Hermite => "hermite",
            Basis::Monomial => "monomial",
        };
        let _ = writeln!(s, "dim={} basis={}", self.dim, basis);
        for (idx, c) in &self.terms {
            let exps: Vec<String> = idx.exps().iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "{} {} : {}", c.re, c.im, exps.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<HermitePoly> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| CoreError::Parse("empty polynomial".into()))?;
        let mut dim = None;
        let mut basis = None;
        for part in header.split_whitespace() {
            if let Some(v) = part.strip_prefix("dim=") {
                dim = Some(
                    v.parse::<usize>().map_err(|e| CoreError::Parse(format!("dim: {e}")))?,
                );
            } else if let Some(v) = part.strip_prefix("basis=") {
                basis = Some(match v {
                    "hermite" => Basis::Hermite,
                    "monomial" => Basis::Monomial,
                    other => return Err(CoreError::Parse(format!("unknown basis {other}"))),
                });
            } else {
                return Err(CoreError::Parse(format!("unexpected header token {part}")));
            }
        }
        let dim = dim.ok_or_else(|| CoreError::Parse("missing dim".into()))?;
        let basis = basis.ok_or_else(|| CoreError::Parse("missing basis".into()))?;
        let mut terms = Vec::new();
        for line in lines {
            let (coef, exps) = line
                .split_once(':')
                .ok_or_else(|| CoreError::Parse(format!("missing ':' in {line}")))?;
            let cs: Vec<&str> = coef.split_whitespace().collect();
            if cs.len() != 2 {
                return Err(CoreError::Parse(format!("expected 're im' in {line}")));
            }
            let re = cs[0].parse::<f64>().map_err(|e| CoreError::Parse(e.to_string()))?;
            let im = cs[1].parse::<f64>().map_err(|e| CoreError::Parse(e.to_string()))?;
            let es: Vec<u32> = exps
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|e| CoreError::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            if es.len() != dim {
                return Err(CoreError::Parse(format!(
                    "exponent count {} does not match dim {dim}",
                    es.len()
                )));
            }
            terms.push((MultiIndex::new(es), Complex64::new(re, im)));
        }
        HermitePoly::new(dim, basis, terms)
    }
}

/// Gaussian smoothing of a monomial-basis polynomial with a (possibly
/// complex) per-coordinate second moment tau: returns the polynomial
/// q(b) = E l(b + W) where the W_i are independent, symmetric, with
/// E W_i^2 = tau. On monomials this is the exact coefficient map
/// b^d -> sum_m C(d,2m) (2m-1)!! tau^m b^(d-2m).
pub fn gaussian_shift_poly(l: &HermitePoly, tau: Complex64, cap: usize) -> Result<HermitePoly> {
    let mono = l.to_monomial(cap)?;
    let dim = mono.dim();
    let max_d = mono.degree() as usize;
    // binom[d][k]
    let mut binom = vec![vec![0.0f64; max_d + 1]; max_d + 1];
    for d in 0..=max_d {
        binom[d][0] = 1.0;
        for k in 1..=d {
            binom[d][k] = binom[d - 1][k - 1] + if k <= d - 1 { binom[d - 1][k] } else { 0.0 };
        }
    }
    let dfact = |m: usize| -> f64 {
        // (2m-1)!!
        let mut v = 1.0;
        let mut k = 2 * m as i64 - 1;
        while k > 1 {
            v *= k as f64;
            k -= 2;
        }
        v
    };
    let mut out = HermitePoly::zero(dim, Basis::Monomial);
    for (idx, c) in mono.terms() {
        // Expand each coordinate independently, accumulating the tensor product.
        let mut partial: Vec<(Vec<u32>, Complex64)> = vec![(vec![0u32; dim], *c)];
        for (coord, &e) in idx.exps().iter().enumerate() {
            let d = e as usize;
            let mut next = Vec::with_capacity(partial.len() * (d / 2 + 1));
            for (exps, pc) in &partial {
                for m in 0..=(d / 2) {
                    let w = binom[d][2 * m] * dfact(m);
                    let coeff = *pc * tau.powu(m as u32) * w;
                    let mut ne = exps.clone();
                    ne[coord] = (d - 2 * m) as u32;
                    next.push((ne, coeff));
                }
            }
            partial = next;
        }
        let add = HermitePoly::new(
            dim,
            Basis::Monomial,
            partial.into_iter().map(|(e, c)| (MultiIndex::new(e), c)).collect(),
        )?;
        out = out.add(&add)?;
    }
    Ok(out)
}
