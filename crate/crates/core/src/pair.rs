//! Outer/inner function pairs `(F, B)` for the two-function certificates.
//!
//! `B` maps the positive orthant (or the unit square, for the Gaussian
//! interpolation profile) to the reals, `F` post-composes. Analytic first
//! and second derivatives are part of the contract: they enter the local
//! matrices directly, so every pair is cross-checked against central finite
//! differences on a seeded point cloud before use.

use std::fmt;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg::Matrix;
use crate::rng::CounterRng;
use crate::special::{norm_cdf, norm_pdf, norm_quantile, binorm_cdf};

/// Central-difference step for derivative validation.
const FD_STEP: f64 = 1e-5;

/// Relative tolerance for analytic-vs-finite-difference agreement.
const FD_REL_TOL: f64 = 1e-6;

/// Points sampled per validation run.
const FD_POINTS: usize = 50;

/// Outer scalar function `F` applied to the inner value.
#[derive(Clone, Debug)]
pub enum OuterFn {
    /// `t^alpha` on `(0, inf)`.
    Power { alpha: f64 },
    /// `t` itself.
    Identity,
    /// `scale * t + shift`, `scale != 0`.
    ScaledAffine { scale: f64, shift: f64 },
}

impl OuterFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            OuterFn::Power { alpha } => {
                if !alpha.is_finite() {
                    return Err(CoreError::Domain("power exponent must be finite".into()));
                }
                Ok(())
            }
            OuterFn::Identity => Ok(()),
            OuterFn::ScaledAffine { scale, shift } => {
                if !scale.is_finite() || !shift.is_finite() || *scale == 0.0 {
                    return Err(CoreError::Domain("affine outer needs finite shift and nonzero scale".into()));
                }
                Ok(())
            }
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => t.powf(*alpha),
            OuterFn::Identity => t,
            OuterFn::ScaledAffine { scale, shift } => scale * t + shift,
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => alpha * t.powf(alpha - 1.0),
            OuterFn::Identity => 1.0,
            OuterFn::ScaledAffine { scale, .. } => *scale,
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => alpha * (alpha - 1.0) * t.powf(alpha - 2.0),
            OuterFn::Identity => 0.0,
            OuterFn::ScaledAffine { .. } => 0.0,
        }
    }

    /// `F''/F'` at `t`.
    pub fn ratio(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => (alpha - 1.0) / t,
            OuterFn::Identity => 0.0,
            OuterFn::ScaledAffine { .. } => 0.0,
        }
    }

    /// `d/dt (F''/F')` at `t`.
    pub fn ratio_d1(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => -(alpha - 1.0) / (t * t),
            OuterFn::Identity => 0.0,
            OuterFn::ScaledAffine { .. } => 0.0,
        }
    }

    /// `d^2/dt^2 (F''/F')` at `t`.
    pub fn ratio_d2(&self, t: f64) -> f64 {
        match self {
            OuterFn::Power { alpha } => 2.0 * (alpha - 1.0) / (t * t * t),
            OuterFn::Identity => 0.0,
            OuterFn::ScaledAffine { .. } => 0.0,
        }
    }
}

/// Analytic callbacks for a user-supplied inner function.
#[derive(Clone)]
pub struct CustomInner {
    pub dim: usize,
    pub b: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>,
    pub hess: Arc<dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomInner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomInner").field("dim", &self.dim).finish()
    }
}

/// Inner multivariate function `B`.
#[derive(Clone, Debug)]
pub enum InnerFn {
    /// `prod_j c_j^{p_j}` on the positive orthant.
    ProductPowers { powers: Vec<f64> },
    /// The Gaussian interpolation profile `M(u, v; s)` on `(0, 1)^2`.
    BorellM { s: f64 },
    /// `c^T Q c / 2 + lin . c + cst`.
    Quadratic { q: Matrix, lin: Vec<f64>, cst: f64 },
    /// Arbitrary analytic data supplied by the caller.
    Custom(CustomInner),
}

impl InnerFn {
    pub fn dim(&self) -> usize {
        match self {
            InnerFn::ProductPowers { powers } => powers.len(),
            InnerFn::BorellM { .. } => 2,
            InnerFn::Quadratic { lin, .. } => lin.len(),
            InnerFn::Custom(c) => c.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InnerFn::ProductPowers { powers } => {
                if powers.is_empty() || powers.iter().any(|p| !p.is_finite() || *p == 0.0) {
                    return Err(CoreError::Domain("product powers must be finite and nonzero".into()));
                }
                Ok(())
            }
            InnerFn::BorellM { s } => {
                if !(-1.0..=1.0).contains(s) {
                    return Err(CoreError::Domain(format!("profile parameter s = {s} outside [-1, 1]")));
                }
                Ok(())
            }
            InnerFn::Quadratic { q, lin, cst } => {
                if q.n_rows() != lin.len() || q.n_cols() != lin.len() {
                    return Err(CoreError::DimensionMismatch { expected: lin.len(), got: q.n_rows() });
                }
                if !q.is_symmetric(1e-12) {
                    return Err(CoreError::Malformed("quadratic inner matrix must be symmetric".into()));
                }
                if !cst.is_finite() || lin.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::Domain("quadratic inner coefficients must be finite".into()));
                }
                Ok(())
            }
            InnerFn::Custom(c) => {
                if c.dim == 0 {
                    return Err(CoreError::Domain("custom inner must have positive dimension".into()));
                }
                Ok(())
            }
        }
    }

    pub fn b(&self, c: &[f64]) -> Result<f64> {
        self.check_point(c)?;
        Ok(match self {
            InnerFn::ProductPowers { powers } => {
                let mut acc = 0.0;
                for (ci, pi) in c.iter().zip(powers) {
                    acc += pi * ci.ln();
                }
                acc.exp()
            }
            InnerFn::BorellM { s } => borell_m(c[0], c[1], *s)?,
            InnerFn::Quadratic { q, lin, cst } => {
                let mut acc = *cst;
                for (i, ci) in c.iter().enumerate() {
                    acc += lin[i] * ci;
                    for (j, cj) in c.iter().enumerate() {
                        acc += 0.5 * q.get(i, j) * ci * cj;
                    }
                }
                acc
            }
            InnerFn::Custom(cb) => (cb.b)(c),
        })
    }

    pub fn grad(&self, c: &[f64], p: usize) -> Result<f64> {
        self.check_point(c)?;
        Ok(match self {
            InnerFn::ProductPowers { powers } => self.b(c)? * powers[p] / c[p],
            InnerFn::BorellM { s } => {
                let d = borell_m_derivatives(c[0], c[1], *s)?;
                if p == 0 { d.m_u } else { d.m_v }
            }
            InnerFn::Quadratic { q, lin, .. } => {
                let mut acc = lin[p];
                for (j, cj) in c.iter().enumerate() {
                    acc += q.get(p, j) * cj;
                }
                acc
            }
            InnerFn::Custom(cb) => (cb.grad)(c, p),
        })
    }

    pub fn hess(&self, c: &[f64], p: usize, q_idx: usize) -> Result<f64> {
        self.check_point(c)?;
        Ok(match self {
            InnerFn::ProductPowers { powers } => {
                let base = self.b(c)?;
                if p == q_idx {
                    base * powers[p] * (powers[p] - 1.0) / (c[p] * c[p])
                } else {
                    base * powers[p] * powers[q_idx] / (c[p] * c[q_idx])
                }
            }
            InnerFn::BorellM { s } => {
                let d = borell_m_derivatives(c[0], c[1], *s)?;
                match (p, q_idx) {
                    (0, 0) => d.m_uu,
                    (1, 1) => d.m_vv,
                    _ => d.m_uv,
                }
            }
            InnerFn::Quadratic { q, .. } => q.get(p, q_idx),
            InnerFn::Custom(cb) => (cb.hess)(c, p, q_idx),
        })
    }

    fn check_point(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: c.len() });
        }
        match self {
            InnerFn::ProductPowers { .. } => {
                if c.iter().any(|v| *v <= 0.0) {
                    return Err(CoreError::Domain("product-powers inner needs strictly positive arguments".into()));
                }
            }
            InnerFn::BorellM { .. } => {
                if c.iter().any(|v| *v <= 0.0 || *v >= 1.0) {
                    return Err(CoreError::Domain("profile inner needs arguments strictly inside (0, 1)".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Representative interior point cloud for finite-difference validation.
    fn sample_points(&self, rng: &CounterRng, count: usize) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut pts = Vec::with_capacity(count);
        for i in 0..count {
            let mut p = Vec::with_capacity(dim);
            for j in 0..dim {
                let pos = (i * dim + j) as u64;
                let v = match self {
                    InnerFn::BorellM { .. } => rng.uniform_in(pos, 0.05, 0.95),
                    InnerFn::ProductPowers { .. } => {
                        // Log-uniform over [0.1, 10]; keeps FD steps interior.
                        (rng.uniform_in(pos, -1.0, 1.0) * std::f64::consts::LN_10).exp()
                    }
                    _ => rng.uniform_in(pos, -2.0, 2.0),
                };
                p.push(v);
            }
            pts.push(p);
        }
        pts
    }
}

/// A validated pair `(F, B)`.
#[derive(Clone, Debug)]
pub struct FunctionPair {
    outer: OuterFn,
    inner: InnerFn,
}

impl FunctionPair {
    /// Validates structure and cross-checks all analytic derivatives of `B`
    /// (and of `F`) against central finite differences at seeded interior
    /// points before handing the pair out.
    pub fn new(outer: OuterFn, inner: InnerFn) -> Result<Self> {
        outer.validate()?;
        inner.validate()?;
        let pair = FunctionPair { outer, inner };
        pair.check_derivatives()?;
        Ok(pair)
    }

    pub fn outer(&self) -> &OuterFn {
        &self.outer
    }

    pub fn inner(&self) -> &InnerFn {
        &self.inner
    }

    fn check_derivatives(&self) -> Result<()> {
        let rng = CounterRng::new(0x4644_5645);
        let pts = self.inner.sample_points(&rng, FD_POINTS);
        let dim = self.inner.dim();
        let mut shifted = vec![0.0; dim];
        for c in &pts {
            for p in 0..dim {
                let analytic = self.inner.grad(c, p)?;
                let fd = {
                    shifted.copy_from_slice(c);
                    shifted[p] = c[p] + FD_STEP;
                    let hi = self.inner.b(&shifted)?;
                    shifted[p] = c[p] - FD_STEP;
                    let lo = self.inner.b(&shifted)?;
                    (hi - lo) / (2.0 * FD_STEP)
                };
                if (analytic - fd).abs() > FD_REL_TOL * (1.0 + analytic.abs().max(fd.abs())) {
                    return Err(CoreError::Hypothesis(format!(
                        "inner gradient component {p} disagrees with finite differences at {c:?}: {analytic} vs {fd}"
                    )));
                }
                for q in p..dim {
                    let analytic2 = self.inner.hess(c, p, q)?;
                    let sym = self.inner.hess(c, q, p)?;
                    if (analytic2 - sym).abs() > 1e-9 * (1.0 + analytic2.abs()) {
                        return Err(CoreError::Hypothesis(format!(
                            "inner Hessian asymmetric at ({p}, {q}): {analytic2} vs {sym}"
                        )));
                    }
                    let fd2 = {
                        shifted.copy_from_slice(c);
                        shifted[q] = c[q] + FD_STEP;
                        let hi = self.inner.grad(&shifted, p)?;
                        shifted[q] = c[q] - FD_STEP;
                        let lo = self.inner.grad(&shifted, p)?;
                        (hi - lo) / (2.0 * FD_STEP)
                    };
                    if (analytic2 - fd2).abs() > FD_REL_TOL * (1.0 + analytic2.abs().max(fd2.abs())) {
                        return Err(CoreError::Hypothesis(format!(
                            "inner Hessian entry ({p}, {q}) disagrees with finite differences at {c:?}: {analytic2} vs {fd2}"
                        )));
                    }
                }
            }
        }
        // Outer derivatives on a fixed positive grid.
        for i in 0..FD_POINTS {
            let t = (rng.uniform_in(1_000_000 + i as u64, -1.0, 1.0) * std::f64::consts::LN_10).exp();
            let d1 = self.outer.d1(t);
            let fd1 = (self.outer.f(t + FD_STEP) - self.outer.f(t - FD_STEP)) / (2.0 * FD_STEP);
            if (d1 - fd1).abs() > FD_REL_TOL * (1.0 + d1.abs().max(fd1.abs())) {
                return Err(CoreError::Hypothesis(format!(
                    "outer first derivative disagrees with finite differences at t = {t}: {d1} vs {fd1}"
                )));
            }
            let d2 = self.outer.d2(t);
            let fd2 = (self.outer.d1(t + FD_STEP) - self.outer.d1(t - FD_STEP)) / (2.0 * FD_STEP);
            if (d2 - fd2).abs() > FD_REL_TOL * (1.0 + d2.abs().max(fd2.abs())) {
                return Err(CoreError::Hypothesis(format!(
                    "outer second derivative disagrees with finite differences at t = {t}: {d2} vs {fd2}"
                )));
            }
        }
        Ok(())
    }
}

/// Analytic first and second derivatives of the interpolation profile.
#[derive(Clone, Copy, Debug)]
pub struct BorellDerivatives {
    pub m_u: f64,
    pub m_v: f64,
    pub m_uu: f64,
    pub m_vv: f64,
    pub m_uv: f64,
}

/// `M(u, v; s) = P(X < Phi^{-1}(u), Y < Phi^{-1}(v))` for standard bivariate
/// normal `(X, Y)` with correlation `s`. Defined on the open unit square;
/// `s` in `[-1, 1]` with the degenerate values handled in closed form:
/// `M(u, v; 0) = u v`, `M(u, v; 1) = min(u, v)`, `M(u, v; -1) = max(u+v-1, 0)`.
pub fn borell_m(u: f64, v: f64, s: f64) -> Result<f64> {
    check_unit_interval(u, v)?;
    if !(-1.0..=1.0).contains(&s) {
        return Err(CoreError::Domain(format!("profile correlation s = {s} outside [-1, 1]")));
    }
    if s == 0.0 {
        return Ok(u * v);
    }
    if s == 1.0 {
        return Ok(u.min(v));
    }
    if s == -1.0 {
        return Ok((u + v - 1.0).max(0.0));
    }
    let a = norm_quantile(u);
    let b = norm_quantile(v);
    Ok(binorm_cdf(a, b, s))
}

/// Closed-form derivative set; requires nondegenerate `s` in `(-1, 1)`.
///
/// With `a = Phi^{-1}(u)`, `b = Phi^{-1}(v)`, `w = sqrt(1 - s^2)`:
/// `M_u = Phi((b - s a)/w)`, `M_uu = -(s/w) phi((b - s a)/w) / phi(a)`,
/// `M_uv = phi((b - s a)/w) / (w phi(b))`, symmetrically in `(u, v)`.
/// These satisfy `M_uu M_vv = s^2 M_uv^2` identically.
pub fn borell_m_derivatives(u: f64, v: f64, s: f64) -> Result<BorellDerivatives> {
    check_unit_interval(u, v)?;
    if !(-1.0..1.0).contains(&s) || s == -1.0 {
        return Err(CoreError::Domain(format!(
            "profile derivatives need s strictly inside (-1, 1), got {s}"
        )));
    }
    let a = norm_quantile(u);
    let b = norm_quantile(v);
    let w = (1.0 - s * s).sqrt();
    let z1 = (b - s * a) / w;
    let z2 = (a - s * b) / w;
    Ok(BorellDerivatives {
        m_u: norm_cdf(z1),
        m_v: norm_cdf(z2),
        m_uu: -(s / w) * norm_pdf(z1) / norm_pdf(a),
        m_vv: -(s / w) * norm_pdf(z2) / norm_pdf(b),
        m_uv: norm_pdf(z1) / (w * norm_pdf(b)),
    })
}

fn check_unit_interval(u: f64, v: f64) -> Result<()> {
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(CoreError::Domain(format!(
            "profile arguments must lie strictly inside (0, 1), got ({u}, {v})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_power_derivatives() {
        let f = OuterFn::Power { alpha: 2.5 };
        let t = 1.7;
        assert!((f.f(t) - t.powf(2.5)).abs() < 1e-14);
        assert!((f.d1(t) - 2.5 * t.powf(1.5)).abs() < 1e-13);
        assert!((f.d2(t) - 2.5 * 1.5 * t.powf(0.5)).abs() < 1e-13);
        assert!((f.ratio(t) - 1.5 / t).abs() < 1e-14);
        let h = 1e-6;
        let fd_ratio_d1 = (f.ratio(t + h) - f.ratio(t - h)) / (2.0 * h);
        assert!((f.ratio_d1(t) - fd_ratio_d1).abs() < 1e-7);
        let fd_ratio_d2 = (f.ratio_d1(t + h) - f.ratio_d1(t - h)) / (2.0 * h);
        assert!((f.ratio_d2(t) - fd_ratio_d2).abs() < 1e-7);
    }

    #[test]
    fn product_powers_pair_validates() {
        let pair = FunctionPair::new(
            OuterFn::Power { alpha: 1.5 },
            InnerFn::ProductPowers { powers: vec![2.0, 3.0, 0.5] },
        )
        .unwrap();
        let c = [1.2, 0.7, 2.0];
        let b = pair.inner().b(&c).unwrap();
        assert!((b - 1.2f64.powf(2.0) * 0.7f64.powf(3.0) * 2.0f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn borell_pair_validates_derivatives() {
        for &s in &[0.25, -0.5, 0.75] {
            FunctionPair::new(OuterFn::Identity, InnerFn::BorellM { s }).unwrap();
        }
    }

    #[test]
    fn quadratic_pair_validates() {
        let q = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, -1.0]]).unwrap();
        let pair = FunctionPair::new(
            OuterFn::ScaledAffine { scale: -2.0, shift: 1.0 },
            InnerFn::Quadratic { q, lin: vec![0.5, -0.25], cst: 3.0 },
        )
        .unwrap();
        let c = [1.0, 2.0];
        let expect = 0.5 * (2.0 * 1.0 + 2.0 * 0.3 * 2.0 - 4.0) + 0.5 - 0.5 + 3.0;
        assert!((pair.inner().b(&c).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn custom_inner_with_wrong_gradient_is_rejected() {
        let custom = CustomInner {
            dim: 2,
            b: Arc::new(|c: &[f64]| c[0] * c[0] + c[1]),
            grad: Arc::new(|c: &[f64], p| if p == 0 { 2.0 * c[0] + 0.1 } else { 1.0 }),
            hess: Arc::new(|_: &[f64], p, q| if p == 0 && q == 0 { 2.0 } else { 0.0 }),
        };
        let err = FunctionPair::new(OuterFn::Identity, InnerFn::Custom(custom)).unwrap_err();
        assert!(matches!(err, CoreError::Hypothesis(_)));
    }

    #[test]
    fn borell_closed_forms() {
        let us = [0.1, 0.3, 0.5, 0.7, 0.9];
        for &u in &us {
            for &v in &us {
                assert!((borell_m(u, v, 0.0).unwrap() - u * v).abs() < 1e-15);
                assert!((borell_m(u, v, 1.0).unwrap() - u.min(v)).abs() < 1e-15);
                assert!((borell_m(u, v, -1.0).unwrap() - (u + v - 1.0f64).max(0.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn borell_limits_match_closed_forms() {
        for &u in &[0.2, 0.6] {
            for &v in &[0.35, 0.8] {
                assert!((borell_m(u, v, 1e-9).unwrap() - u * v).abs() < 1e-8);
                assert!((borell_m(u, v, 0.999999).unwrap() - u.min(v)).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn borell_domain_errors() {
        assert!(borell_m(0.0, 0.5, 0.5).is_err());
        assert!(borell_m(0.5, 1.0, 0.5).is_err());
        assert!(borell_m(0.5, 0.5, 1.5).is_err());
        assert!(borell_m_derivatives(0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn borell_monge_ampere_identity() {
        // M_uu M_vv - s^2 M_uv^2 = 0 holds exactly for the analytic formulas.
        for &s in &[0.25, -0.25, 0.5, -0.5, 0.75, -0.75] {
            for &u in &[0.1, 0.4, 0.62, 0.9] {
                for &v in &[0.15, 0.5, 0.88] {
                    let d = borell_m_derivatives(u, v, s).unwrap();
                    let residual = d.m_uu * d.m_vv - s * s * d.m_uv * d.m_uv;
                    let scale = d.m_uv * d.m_uv * s * s;
                    assert!(
                        residual.abs() <= 1e-13 * (1.0 + scale),
                        "s={s} u={u} v={v}: residual {residual}"
                    );
                }
            }
        }
    }

    #[test]
    fn borell_hessian_block_nsd_for_positive_s() {
        // [[M_uu, s M_uv], [s M_uv, M_vv]] is negative semidefinite on
        // (0,1)^2 for s in [0, 1]; follows from M_uu, M_vv <= 0 and the
        // determinant identity. Check eigenvalue signs on a grid.
        for &s in &[0.3, 0.6, 0.9] {
            for &u in &[0.2, 0.5, 0.8] {
                for &v in &[0.25, 0.55, 0.85] {
                    let d = borell_m_derivatives(u, v, s).unwrap();
                    let trace = d.m_uu + d.m_vv;
                    let det = d.m_uu * d.m_vv - s * s * d.m_uv * d.m_uv;
                    assert!(trace <= 0.0, "s={s} u={u} v={v}");
                    assert!(det >= -1e-13 * (1.0 + d.m_uv * d.m_uv), "s={s} u={u} v={v}");
                }
            }
        }
        // Reversed sign parameter flips the inequality.
        let d = borell_m_derivatives(0.4, 0.6, -0.5).unwrap();
        assert!(d.m_uu + d.m_vv >= 0.0);
    }

    #[test]
    fn borell_derivative_symmetry() {
        // M_uv computed via phi(z1)/ (w phi(b)) equals phi(z2)/(w phi(a)).
        for &s in &[0.35, -0.7] {
            for &(u, v) in &[(0.3, 0.8), (0.55, 0.2)] {
                let a = norm_quantile(u);
                let b = norm_quantile(v);
                let w = (1.0 - s * s as f64).sqrt();
                let z1 = (b - s * a) / w;
                let z2 = (a - s * b) / w;
                let lhs = norm_pdf(z1) / (w * norm_pdf(b));
                let rhs = norm_pdf(z2) / (w * norm_pdf(a));
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
                let d = borell_m_derivatives(u, v, s).unwrap();
                assert!((d.m_uv - lhs).abs() < 1e-13 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn borell_symmetry_in_arguments() {
        for &s in &[0.4, -0.6] {
            let m1 = borell_m(0.3, 0.7, s).unwrap();
            let m2 = borell_m(0.7, 0.3, s).unwrap();
            assert!((m1 - m2).abs() < 1e-13);
        }
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert!(FunctionPair::new(
            OuterFn::ScaledAffine { scale: 0.0, shift: 1.0 },
            InnerFn::ProductPowers { powers: vec![1.0] }
        )
        .is_err());
        assert!(FunctionPair::new(
            OuterFn::Identity,
            InnerFn::ProductPowers { powers: vec![1.0, 0.0] }
        )
        .is_err());
        assert!(FunctionPair::new(OuterFn::Identity, InnerFn::BorellM { s: 1.2 }).is_err());
        let q = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]).unwrap();
        assert!(FunctionPair::new(
            OuterFn::Identity,
            InnerFn::Quadratic { q, lin: vec![0.0, 0.0], cst: 0.0 }
        )
        .is_err());
    }
}
