//! Local matrix certificates for the multi-function hypercontractivity
//! inequalities.
//!
//! Every checker reduces to positive semidefiniteness of a symmetric matrix
//! built from the block covariance, the per-block noise parameters, and
//! (for the two-function forms) derivatives of the inner function on a grid.
//! Margins are smallest eigenvalues; a condition "holds" when its worst
//! margin clears `-PSD_TOL` relative to the matrix scale. Witnesses are the
//! corresponding unit eigenvectors with a canonical sign.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::gaussian::BlockCovariance;
use crate::linalg::{jacobi_eigen, Matrix};
use crate::pair::{FunctionPair, InnerFn, OuterFn};
use crate::rng::CounterRng;

/// Semidefiniteness slack, relative to `1 + scale` of the tested matrix.
pub const PSD_TOL: f64 = 1e-9;

/// Noise parameters: one scalar per block.
#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    /// General complex multipliers.
    Complex { z: Vec<Complex64> },
    /// Purely imaginary multipliers `z_j = i s_j`, kept as the real `s_j`.
    Imaginary { s: Vec<f64> },
    /// Real multipliers `r_j` in `[-1, 1]`.
    Real { r: Vec<f64> },
}

impl Mode {
    pub fn n(&self) -> usize {
        match self {
            Mode::Complex { z } => z.len(),
            Mode::Imaginary { s } => s.len(),
            Mode::Real { r } => r.len(),
        }
    }

    /// The complex multipliers, whatever the representation.
    pub fn as_complex(&self) -> Vec<Complex64> {
        match self {
            Mode::Complex { z } => z.clone(),
            Mode::Imaginary { s } => s.iter().map(|&v| Complex64::new(0.0, v)).collect(),
            Mode::Real { r } => r.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// Exponents and outer power for one inequality instance.
#[derive(Clone, Debug)]
pub struct HyperParams {
    pub mode: Mode,
    pub p: Vec<f64>,
    pub alpha: f64,
    pub degrees: Option<Vec<u32>>,
}

impl HyperParams {
    pub fn new(mode: Mode, p: Vec<f64>, alpha: f64) -> Result<Self> {
        if mode.n() != p.len() {
            return Err(CoreError::DimensionMismatch { expected: p.len(), got: mode.n() });
        }
        if p.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(CoreError::Domain("exponents p_j must be finite and nonzero".into()));
        }
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(CoreError::Domain(format!("outer exponent alpha = {alpha} must be finite and nonzero")));
        }
        if let Mode::Real { r } = &mode {
            if r.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(CoreError::Domain("real multipliers must lie in [-1, 1]".into()));
            }
        }
        Ok(HyperParams { mode, p, alpha, degrees: None })
    }

    /// Single-function `L^p -> L^q` instance: exponent vector `[p]`,
    /// `alpha = q / p`. Forward means `p <= q`.
    pub fn single_pq(mode: Mode, p: f64, q: f64) -> Result<Self> {
        if p <= 0.0 || q <= 0.0 || !p.is_finite() || !q.is_finite() {
            return Err(CoreError::Domain(format!("norm exponents must be positive, got ({p}, {q})")));
        }
        Self::new(mode, vec![p], q / p)
    }

    pub fn with_degrees(mut self, degrees: Vec<u32>) -> Result<Self> {
        if degrees.len() != self.p.len() {
            return Err(CoreError::DimensionMismatch { expected: self.p.len(), got: degrees.len() });
        }
        self.degrees = Some(degrees);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }
}

/// Orientation of a semidefiniteness condition. `Forward` tests `>= 0`,
/// `Reverse` tests `<= 0` (reported as the margin of the negated matrix).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Grid over the inner-function domain for the two-function conditions:
/// a full per-axis product (log-spaced on the positive orthant) plus
/// seeded random interior points.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub per_axis: usize,
    pub random: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { per_axis: 9, random: 200, seed: 0x4752_4944, lo: 1e-2, hi: 1e2 }
    }
}

/// Outcome of one local condition check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    /// Smallest eigenvalue in the tested orientation (worst over the grid
    /// for grid-based checks).
    pub margin: f64,
    /// Unit eigenvector attaining the margin; sign fixed so the first
    /// component above 1e-12 in magnitude is positive. For complex-variable
    /// conditions the layout is `[Re w, Im w]`.
    pub witness: Vec<f64>,
    /// Grid point attaining the margin, for grid-based checks.
    pub witness_point: Option<Vec<f64>>,
    /// Whether the outer-function ratio convexity hypothesis holds
    /// (convex for forward checks, concave for reverse).
    pub convexity_ok: Option<bool>,
    /// Largest matrix entry magnitude seen; the `holds` threshold is
    /// `-PSD_TOL * (1 + scale)`.
    pub scale: f64,
    /// Margin of the literal published matrix where it differs from the
    /// normalized form used for `margin`.
    pub raw_margin: Option<f64>,
    pub note: Option<String>,
}

fn finish_report(
    margin: f64,
    witness: Vec<f64>,
    witness_point: Option<Vec<f64>>,
    convexity_ok: Option<bool>,
    scale: f64,
    raw_margin: Option<f64>,
    note: Option<String>,
) -> ConditionReport {
    ConditionReport {
        holds: margin >= -PSD_TOL * (1.0 + scale),
        margin,
        witness,
        witness_point,
        convexity_ok,
        scale,
        raw_margin,
        note,
    }
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    for &x in &v {
        if x.abs() > 1e-12 {
            if x < 0.0 {
                for y in &mut v {
                    *y = -*y;
                }
            }
            break;
        }
    }
    v
}

fn min_eig_with_vector(m: &Matrix) -> (f64, Vec<f64>) {
    let (vals, vecs) = jacobi_eigen(m);
    let v: Vec<f64> = (0..m.n_rows()).map(|i| vecs.get(i, 0)).collect();
    (vals[0], canonical_sign(v))
}

/// Symmetric matrix of a homogeneous quadratic form, by polarization.
fn polarize<Q: Fn(&[f64]) -> f64>(dim: usize, q: Q) -> Matrix {
    let mut m = Matrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut diag = vec![0.0; dim];
    for a in 0..dim {
        e[a] = 1.0;
        diag[a] = q(&e);
        m.set(a, a, diag[a]);
        e[a] = 0.0;
    }
    for a in 0..dim {
        e[a] = 1.0;
        for b in (a + 1)..dim {
            e[b] = 1.0;
            let off = (q(&e) - diag[a] - diag[b]) / 2.0;
            e[b] = 0.0;
            m.set(a, b, off);
            m.set(b, a, off);
        }
        e[a] = 0.0;
    }
    m
}

fn block_of(cov: &BlockCovariance) -> Vec<usize> {
    let mut blk = Vec::with_capacity(cov.total_dim());
    for (j, &sz) in cov.block_sizes().iter().enumerate() {
        blk.extend(std::iter::repeat(j).take(sz));
    }
    blk
}

fn check_block_count(params_n: usize, cov: &BlockCovariance) -> Result<()> {
    if params_n != cov.n_blocks() {
        return Err(CoreError::DimensionMismatch { expected: params_n, got: cov.n_blocks() });
    }
    Ok(())
}

/// Quadratic form of the complex local condition in the realified
/// variables `u = [Re w, Im w]`:
/// `sum_{ij} (Re w_i)^T C_ij (Re w_j) - alpha (Re z_i w_i)^T C_ij (Re z_j w_j)
///  - Re sum_j (1 - z_j^2) (w_j . w_j) / p_j`
/// with the unconjugated square `w . w`.
fn complex_local_form(
    cov: &BlockCovariance,
    z: &[Complex64],
    p: &[f64],
    alpha: f64,
    u: &[f64],
) -> f64 {
    let k = cov.total_dim();
    let (re, im) = u.split_at(k);
    let t1 = cov.matrix().quad_form(re);
    let offsets = cov.offsets();
    let mut zw = vec![0.0; k];
    for (j, (&off, &sz)) in offsets.iter().zip(cov.block_sizes()).enumerate() {
        for m in 0..sz {
            zw[off + m] = z[j].re * re[off + m] - z[j].im * im[off + m];
        }
    }
    let t2 = cov.matrix().quad_form(&zw);
    let mut t3 = 0.0;
    for (j, (&off, &sz)) in offsets.iter().zip(cov.block_sizes()).enumerate() {
        let omz2 = Complex64::new(1.0, 0.0) - z[j] * z[j];
        let mut sq_re = 0.0;
        let mut sq_im = 0.0;
        for m in 0..sz {
            let (a, b) = (re[off + m], im[off + m]);
            sq_re += a * a - b * b;
            sq_im += 2.0 * a * b;
        }
        t3 += (omz2.re * sq_re - omz2.im * sq_im) / p[j];
    }
    t1 - alpha * t2 - t3
}

/// Checks the complex local condition directly: builds the realified
/// `2K x 2K` matrix of [`complex_local_form`] and reports its smallest
/// eigenvalue. Accepts complex or purely imaginary modes.
pub fn check_complex_local(params: &HyperParams, cov: &BlockCovariance) -> Result<ConditionReport> {
    check_block_count(params.n(), cov)?;
    if matches!(params.mode, Mode::Real { .. }) {
        return Err(CoreError::Hypothesis(
            "real multipliers belong to check_real_local; the complex form is degenerate there".into(),
        ));
    }
    let z = params.mode.as_complex();
    let k = cov.total_dim();
    let m = polarize(2 * k, |u| complex_local_form(cov, &z, &params.p, params.alpha, u));
    let scale = m.max_abs();
    let (margin, witness) = min_eig_with_vector(&m);
    Ok(finish_report(margin, witness, None, None, scale, None, None))
}

/// Checks the diagonal sandwich equivalent to the purely imaginary local
/// condition: `(1/alpha) diag{(1+s_j^2)/(s_j^2 p_j)} >= cov >= diag{(1+s_j^2)/p_j}`.
/// Blocks with `s_j = 0` drop out of the left comparison; when any do, the
/// left side is tested on the remaining principal block and noted.
///
/// For purely imaginary multipliers the realified complex form splits into
/// two `K x K` blocks congruent to the sandwich sides, so the reported
/// margin and witness come from those blocks: the witness keeps the
/// `[Re w, Im w]` layout and the margin sits on the scale the perturbation
/// expansion sees. The literal left-comparison eigenvalue, where it differs,
/// lands in `raw_margin`.
pub fn check_imaginary_sandwich(params: &HyperParams, cov: &BlockCovariance) -> Result<ConditionReport> {
    check_block_count(params.n(), cov)?;
    let s = match &params.mode {
        Mode::Imaginary { s } => s.clone(),
        _ => {
            return Err(CoreError::Hypothesis(
                "sandwich form requires purely imaginary multipliers".into(),
            ))
        }
    };
    let k = cov.total_dim();
    let blk = block_of(cov);

    // Right comparison; also the real-part block of the complex form.
    let mut lower = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            lower.set(a, b, cov.entry(a, b));
        }
        let j = blk[a];
        lower.add_to(a, a, -(1.0 + s[j] * s[j]) / params.p[j]);
    }
    let scale_lower = lower.max_abs();
    let (margin_lower, witness_lower) = min_eig_with_vector(&lower);

    let active: Vec<usize> = (0..k).filter(|&a| s[blk[a]] != 0.0).collect();
    let mut note = None;
    let mut published: Option<f64> = None;
    if active.is_empty() {
        note = Some("all multipliers vanish; only the lower comparison applies".to_string());
    } else {
        if active.len() < k {
            note = Some(format!(
                "left comparison restricted to the {} coordinates with nonzero multiplier",
                active.len()
            ));
        }
        let sub = cov.matrix().principal_submatrix(&active);
        let mut upper = Matrix::zeros(active.len(), active.len());
        for (ia, &a) in active.iter().enumerate() {
            for ib in 0..active.len() {
                upper.set(ia, ib, -sub.get(ia, ib));
            }
            let j = blk[a];
            upper.add_to(ia, ia, (1.0 + s[j] * s[j]) / (s[j] * s[j] * params.p[j] * params.alpha));
        }
        published = Some(jacobi_eigen(&upper).0[0]);
    }

    // Imaginary-part block of the complex form: `diag((1+s^2)/p) - alpha S C S`
    // with `S = diag(s)`, congruent to the left comparison on the active
    // coordinates and positive on the rest.
    let mut imag_block = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            imag_block.set(a, b, -params.alpha * s[blk[a]] * s[blk[b]] * cov.entry(a, b));
        }
        let j = blk[a];
        imag_block.add_to(a, a, (1.0 + s[j] * s[j]) / params.p[j]);
    }
    let scale_imag = imag_block.max_abs();
    let (margin_imag, witness_imag) = min_eig_with_vector(&imag_block);

    let mut witness = vec![0.0; 2 * k];
    let margin = if margin_lower <= margin_imag {
        witness[..k].copy_from_slice(&witness_lower);
        margin_lower
    } else {
        witness[k..].copy_from_slice(&witness_imag);
        margin_imag
    };
    let raw_margin = published.map(|mu| mu.min(margin_lower));
    Ok(finish_report(
        margin,
        witness,
        None,
        None,
        scale_lower.max(scale_imag),
        raw_margin,
        note,
    ))
}

/// Checks the real local condition
/// `{(1 - alpha r_u r_v) C_uv} >= diag{(1 - r_j^2)/p_j}`
/// in the requested orientation. Forward requires `alpha >= 1` or
/// `alpha < 0`; reverse requires `alpha` in `(0, 1]`.
pub fn check_real_local(
    params: &HyperParams,
    cov: &BlockCovariance,
    direction: Direction,
) -> Result<ConditionReport> {
    check_block_count(params.n(), cov)?;
    let r = match &params.mode {
        Mode::Real { r } => r.clone(),
        _ => return Err(CoreError::Hypothesis("real local condition requires real multipliers".into())),
    };
    let admissible = match direction {
        Direction::Forward => params.alpha >= 1.0 || params.alpha < 0.0,
        Direction::Reverse => params.alpha > 0.0 && params.alpha <= 1.0,
    };
    if !admissible {
        return Err(CoreError::Hypothesis(format!(
            "alpha = {} is outside the {:?} range (forward: alpha >= 1 or alpha < 0; reverse: 0 < alpha <= 1)",
            params.alpha, direction
        )));
    }
    let m = real_local_matrix(params, cov, &r);
    let scale = m.max_abs();
    let tested = match direction {
        Direction::Forward => m,
        Direction::Reverse => m.scaled(-1.0),
    };
    let (margin, witness) = min_eig_with_vector(&tested);
    Ok(finish_report(margin, witness, None, None, scale, None, None))
}

fn real_local_matrix(params: &HyperParams, cov: &BlockCovariance, r: &[f64]) -> Matrix {
    let k = cov.total_dim();
    let blk = block_of(cov);
    let mut m = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            m.set(a, b, (1.0 - params.alpha * r[blk[a]] * r[blk[b]]) * cov.entry(a, b));
        }
        let j = blk[a];
        m.add_to(a, a, -(1.0 - r[j] * r[j]) / params.p[j]);
    }
    m
}

/// Largest `|r|` for which the equal-exponent-scaled pair `(p, q)` stays
/// admissible over this covariance: `sqrt((p lambda_min - 1)/(q lambda_min - 1))`,
/// reported as `margin = bound - |r|`. Requires `q >= p >= 1/lambda_min`.
pub fn check_correlated_r_bound(
    p: f64,
    q: f64,
    r: f64,
    cov: &BlockCovariance,
) -> Result<ConditionReport> {
    if !(p.is_finite() && q.is_finite()) || p <= 0.0 || q < p {
        return Err(CoreError::Hypothesis(format!("need finite 0 < p <= q, got ({p}, {q})")));
    }
    let lambda = cov.lambda_min();
    if p * lambda < 1.0 - 1e-12 {
        return Err(CoreError::Hypothesis(format!(
            "need p >= 1/lambda_min = {}, got p = {p}",
            1.0 / lambda
        )));
    }
    let bound = if q == p {
        1.0
    } else if p * lambda - 1.0 <= 0.0 {
        0.0
    } else {
        ((p * lambda - 1.0) / (q * lambda - 1.0)).sqrt()
    };
    let margin = bound - r.abs();
    Ok(ConditionReport {
        holds: margin >= -PSD_TOL,
        margin,
        witness: Vec::new(),
        witness_point: None,
        convexity_ok: None,
        scale: 1.0,
        raw_margin: None,
        note: Some(format!("admissible correlation bound {bound}")),
    })
}

enum GridDomain {
    LogPositive,
    UnitSquare,
    SymBox(f64),
}

fn domain_for(inner: &InnerFn) -> GridDomain {
    match inner {
        InnerFn::ProductPowers { .. } => GridDomain::LogPositive,
        InnerFn::BorellM { .. } => GridDomain::UnitSquare,
        _ => GridDomain::SymBox(3.0),
    }
}

fn build_grid(spec: &GridSpec, n: usize, domain: &GridDomain) -> Vec<Vec<f64>> {
    let mut points = Vec::new();
    let axis: Vec<f64> = (0..spec.per_axis)
        .map(|i| {
            let t = if spec.per_axis > 1 { i as f64 / (spec.per_axis - 1) as f64 } else { 0.5 };
            match domain {
                GridDomain::LogPositive => spec.lo * (spec.hi / spec.lo).powf(t),
                GridDomain::UnitSquare => (i + 1) as f64 / (spec.per_axis + 1) as f64,
                GridDomain::SymBox(h) => -h + 2.0 * h * t,
            }
        })
        .collect();
    // Full axis product while tractable, otherwise an axis sweep around the
    // domain center; random points cover the interior either way.
    let product_size = (spec.per_axis as f64).powi(n as i32);
    if product_size <= 20_000.0 {
        let mut idx = vec![0usize; n];
        loop {
            points.push(idx.iter().map(|&i| axis[i]).collect());
            let mut carry = n;
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < spec.per_axis {
                    carry = d;
                    break;
                }
                idx[d] = 0;
            }
            if carry == n {
                break;
            }
        }
    } else {
        let center = match domain {
            GridDomain::LogPositive => 1.0,
            GridDomain::UnitSquare => 0.5,
            GridDomain::SymBox(_) => 0.0,
        };
        for d in 0..n {
            for &v in &axis {
                let mut p = vec![center; n];
                p[d] = v;
                points.push(p);
            }
        }
    }
    let rng = CounterRng::new(spec.seed);
    for i in 0..spec.random {
        let mut p = Vec::with_capacity(n);
        for j in 0..n {
            let pos = (i * n + j) as u64;
            let v = match domain {
                GridDomain::LogPositive => rng.uniform_in(pos, spec.lo.ln(), spec.hi.ln()).exp(),
                GridDomain::UnitSquare => rng.uniform_in(pos, 0.0, 1.0).clamp(1e-9, 1.0 - 1e-9),
                GridDomain::SymBox(h) => rng.uniform_in(pos, -h, *h),
            };
            p.push(v);
        }
        points.push(p);
    }
    points
}

/// Checks the ratio convexity hypothesis on the outer function by sampling
/// the 2x2 Hessian of `(t, y) -> (F''/F')(t) y^2`; `Forward` asks for
/// convexity, `Reverse` for concavity.
fn ratio_convexity_scan(outer: &OuterFn, direction: Direction) -> bool {
    let rng = CounterRng::new(0x434F_4E56);
    for i in 0..50u64 {
        let t = rng.uniform_in(2 * i, (1e-2f64).ln(), (1e2f64).ln()).exp();
        let y = rng.uniform_in(2 * i + 1, -3.0, 3.0);
        let a = outer.ratio_d2(t) * y * y;
        let b = 2.0 * outer.ratio_d1(t) * y;
        let d = 2.0 * outer.ratio(t);
        let scale = a.abs().max(b.abs()).max(d.abs());
        let tol = 1e-9 * (1.0 + scale);
        let det = a * d - b * b;
        let ok = match direction {
            Direction::Forward => a >= -tol && d >= -tol && det >= -tol * (1.0 + scale),
            Direction::Reverse => a <= tol && d <= tol && det >= -tol * (1.0 + scale),
        };
        if !ok {
            return false;
        }
    }
    true
}

struct PointEval {
    margin: f64,
    raw_margin: f64,
    max_abs: f64,
    witness: Vec<f64>,
    normalized: bool,
}

fn worst_point(evals: &[Option<PointEval>]) -> Result<(usize, f64, f64, f64, bool)> {
    let mut best: Option<(usize, f64)> = None;
    let mut raw_min = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut all_normalized = true;
    let mut seen = 0usize;
    for (i, e) in evals.iter().enumerate() {
        if let Some(e) = e {
            seen += 1;
            raw_min = raw_min.min(e.raw_margin);
            max_abs = max_abs.max(e.max_abs);
            all_normalized &= e.normalized;
            match best {
                Some((_, m)) if e.margin >= m => {}
                _ => best = Some((i, e.margin)),
            }
        }
    }
    if seen == 0 {
        return Err(CoreError::Domain(
            "inner/outer domain excluded every grid point; nothing to check".into(),
        ));
    }
    let (idx, margin) = best.unwrap();
    Ok((idx, margin, raw_min, max_abs, all_normalized))
}

/// Checks the two-function complex local condition on a grid of inner
/// points `c`:
/// `-sum_{pq} (B_pq + (F''/F')(B) B_p B_q) (Re z_p w_p)^T C_pq (Re z_q w_q)
///  + sum_{pq} B_pq (Re w_p)^T C_pq (Re w_q)
///  + sum_p (B_p / c_p) (|Im w_p|^2 - |Im z_p w_p|^2) >= 0`.
///
/// The reported `margin` is taken after the block rescaling
/// `w_p -> (sqrt(B)/B_p) w_p`, which for power outer and product-of-powers
/// inner turns the matrix into the single-function complex form exactly;
/// `raw_margin` is the smallest eigenvalue of the unscaled matrix.
pub fn check_fb_complex_local(
    pair: &FunctionPair,
    params: &HyperParams,
    cov: &BlockCovariance,
    grid: &GridSpec,
) -> Result<ConditionReport> {
    check_block_count(params.n(), cov)?;
    let n = params.n();
    if pair.inner().dim() != n {
        return Err(CoreError::DimensionMismatch { expected: n, got: pair.inner().dim() });
    }
    if matches!(params.mode, Mode::Real { .. }) {
        return Err(CoreError::Hypothesis(
            "real multipliers belong to check_fb_real_local".into(),
        ));
    }
    let z = params.mode.as_complex();
    let k = cov.total_dim();
    let blk = block_of(cov);
    let offsets = cov.offsets();
    let sizes = cov.block_sizes().to_vec();
    let points = build_grid(grid, n, &domain_for(pair.inner()));

    let evals: Vec<Option<PointEval>> = points
        .par_iter()
        .map(|c| -> Result<Option<PointEval>> {
            let b = match pair.inner().b(c) {
                Ok(v) => v,
                Err(CoreError::Domain(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            if matches!(pair.outer(), OuterFn::Power { .. }) && b <= 0.0 {
                return Ok(None);
            }
            let mut grad = vec![0.0; n];
            let mut hess = Matrix::zeros(n, n);
            for p in 0..n {
                grad[p] = pair.inner().grad(c, p)?;
                for q in p..n {
                    let h = pair.inner().hess(c, p, q)?;
                    hess.set(p, q, h);
                    hess.set(q, p, h);
                }
            }
            let ratio = pair.outer().ratio(b);
            // G_pq = B_pq + (F''/F') B_p B_q scales the noisy term.
            let form = |u: &[f64]| -> f64 {
                let (re, im) = u.split_at(k);
                let mut zw_re = vec![0.0; k];
                let mut zw_im = vec![0.0; k];
                for a in 0..k {
                    let j = blk[a];
                    zw_re[a] = z[j].re * re[a] - z[j].im * im[a];
                    zw_im[a] = z[j].im * re[a] + z[j].re * im[a];
                }
                let mut t_noise = 0.0;
                let mut t_plain = 0.0;
                for a in 0..k {
                    for bb in 0..k {
                        let cab = cov.entry(a, bb);
                        if cab == 0.0 {
                            continue;
                        }
                        let (p, q) = (blk[a], blk[bb]);
                        let g = hess.get(p, q) + ratio * grad[p] * grad[q];
                        t_noise += g * zw_re[a] * cab * zw_re[bb];
                        t_plain += hess.get(p, q) * re[a] * cab * re[bb];
                    }
                }
                let mut tail = 0.0;
                for (j, (&off, &sz)) in offsets.iter().zip(&sizes).enumerate() {
                    let mut im2 = 0.0;
                    let mut zw_im2 = 0.0;
                    for m in 0..sz {
                        im2 += im[off + m] * im[off + m];
                        zw_im2 += zw_im[off + m] * zw_im[off + m];
                    }
                    tail += grad[j] / c[j] * (im2 - zw_im2);
                }
                -t_noise + t_plain + tail
            };
            let m_raw = polarize(2 * k, form);
            let (raw_margin, _) = min_eig_with_vector(&m_raw);
            // Block rescaling d_p = sqrt(B)/B_p when defined.
            let mut d = vec![1.0; n];
            let mut normalized = true;
            if b > 0.0 && grad.iter().all(|g| *g != 0.0) {
                for p in 0..n {
                    d[p] = b.sqrt() / grad[p];
                }
            } else {
                normalized = false;
            }
            let mut m_norm = Matrix::zeros(2 * k, 2 * k);
            for a in 0..2 * k {
                let da = d[blk[a % k]];
                for bb in 0..2 * k {
                    m_norm.set(a, bb, da * m_raw.get(a, bb) * d[blk[bb % k]]);
                }
            }
            let (margin, witness) = min_eig_with_vector(&m_norm);
            Ok(Some(PointEval {
                margin,
                raw_margin,
                max_abs: m_norm.max_abs(),
                witness,
                normalized,
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let (idx, margin, raw_min, max_abs, all_normalized) = worst_point(&evals)?;
    let witness = evals[idx].as_ref().unwrap().witness.clone();
    let note = if all_normalized {
        None
    } else {
        Some("block rescaling unavailable at some grid points; unscaled margins used there".to_string())
    };
    Ok(finish_report(
        margin,
        witness,
        Some(points[idx].clone()),
        Some(ratio_convexity_scan(pair.outer(), Direction::Forward)),
        max_abs,
        Some(raw_min),
        note,
    ))
}

/// Checks the two-function real local condition on a grid. The published
/// matrix is `{F'(B) ((1 - r_p r_q) B_pq - r_p r_q F''(B) B_p B_q) C_pq}`;
/// its smallest eigenvalue (in the requested orientation) is `raw_margin`.
/// The reported `margin` uses the `F'`-normalized coefficient
/// `L_pq = (1 - r_p r_q) B_pq - r_p r_q (F''/F')(B) B_p B_q`
/// after the same `sqrt(B)/B_p` block rescaling as the complex form, which
/// reproduces the single-function real matrix exactly for power outer with
/// product-of-powers inner.
pub fn check_fb_real_local(
    pair: &FunctionPair,
    params: &HyperParams,
    cov: &BlockCovariance,
    grid: &GridSpec,
    direction: Direction,
) -> Result<ConditionReport> {
    check_block_count(params.n(), cov)?;
    let n = params.n();
    if pair.inner().dim() != n {
        return Err(CoreError::DimensionMismatch { expected: n, got: pair.inner().dim() });
    }
    let r = match &params.mode {
        Mode::Real { r } => r.clone(),
        _ => return Err(CoreError::Hypothesis("two-function real condition requires real multipliers".into())),
    };
    let k = cov.total_dim();
    let blk = block_of(cov);
    let points = build_grid(grid, n, &domain_for(pair.inner()));
    let orient = match direction {
        Direction::Forward => 1.0,
        Direction::Reverse => -1.0,
    };

    let evals: Vec<Option<PointEval>> = points
        .par_iter()
        .map(|c| -> Result<Option<PointEval>> {
            let b = match pair.inner().b(c) {
                Ok(v) => v,
                Err(CoreError::Domain(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            if matches!(pair.outer(), OuterFn::Power { .. }) && b <= 0.0 {
                return Ok(None);
            }
            let fp = pair.outer().d1(b);
            let fpp = pair.outer().d2(b);
            if fp == 0.0 {
                return Ok(None);
            }
            let ratio = fpp / fp;
            let mut grad = vec![0.0; n];
            let mut hess = Matrix::zeros(n, n);
            for p in 0..n {
                grad[p] = pair.inner().grad(c, p)?;
                for q in p..n {
                    let h = pair.inner().hess(c, p, q)?;
                    hess.set(p, q, h);
                    hess.set(q, p, h);
                }
            }
            let mut d = vec![1.0; n];
            let mut normalized = true;
            if b > 0.0 && grad.iter().all(|g| *g != 0.0) {
                for p in 0..n {
                    d[p] = b.sqrt() / grad[p];
                }
            } else {
                normalized = false;
            }
            let mut m_norm = Matrix::zeros(k, k);
            let mut m_raw = Matrix::zeros(k, k);
            for a in 0..k {
                for bb in 0..k {
                    let (p, q) = (blk[a], blk[bb]);
                    let l = (1.0 - r[p] * r[q]) * hess.get(p, q) - r[p] * r[q] * ratio * grad[p] * grad[q];
                    let raw = fp * (1.0 - r[p] * r[q]) * hess.get(p, q)
                        - r[p] * r[q] * fp * fpp * grad[p] * grad[q];
                    let cab = cov.entry(a, bb);
                    m_norm.set(a, bb, orient * d[p] * l * cab * d[q]);
                    m_raw.set(a, bb, orient * raw * cab);
                }
            }
            let (margin, witness) = min_eig_with_vector(&m_norm);
            let (raw_margin, _) = min_eig_with_vector(&m_raw);
            Ok(Some(PointEval { margin, raw_margin, max_abs: m_norm.max_abs(), witness, normalized }))
        })
        .collect::<Result<Vec<_>>>()?;

    let (idx, margin, raw_min, max_abs, all_normalized) = worst_point(&evals)?;
    let witness = evals[idx].as_ref().unwrap().witness.clone();
    let note = if all_normalized {
        None
    } else {
        Some("block rescaling unavailable at some grid points; unscaled margins used there".to_string())
    };
    Ok(finish_report(
        margin,
        witness,
        Some(points[idx].clone()),
        Some(ratio_convexity_scan(pair.outer(), direction)),
        max_abs,
        Some(raw_min),
        note,
    ))
}

/// Checks the smoothing-invariance condition `{(1 - r_p r_q) B_pq(c) C_pq}`
/// over a grid of inner points, oriented by `direction`: forward certifies
/// `E B(T_{r_1} f_1, ..., T_{r_n} f_n) <= E B(f_1, ..., f_n)`, reverse the
/// opposite inequality.
pub fn check_gaussian_jensen(
    inner: &InnerFn,
    cov: &BlockCovariance,
    r: &[f64],
    grid: &GridSpec,
    direction: Direction,
) -> Result<ConditionReport> {
    inner.validate()?;
    let n = inner.dim();
    check_block_count(n, cov)?;
    if r.len() != n {
        return Err(CoreError::DimensionMismatch { expected: n, got: r.len() });
    }
    if r.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(CoreError::Domain("smoothing parameters must lie in [-1, 1]".into()));
    }
    let k = cov.total_dim();
    let blk = block_of(cov);
    let points = build_grid(grid, n, &domain_for(inner));
    let orient = match direction {
        Direction::Forward => 1.0,
        Direction::Reverse => -1.0,
    };

    let evals: Vec<Option<PointEval>> = points
        .par_iter()
        .map(|c| -> Result<Option<PointEval>> {
            let mut hess = Matrix::zeros(n, n);
            for p in 0..n {
                for q in p..n {
                    let h = match inner.hess(c, p, q) {
                        Ok(v) => v,
                        Err(CoreError::Domain(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    hess.set(p, q, h);
                    hess.set(q, p, h);
                }
            }
            let mut g = Matrix::zeros(k, k);
            for a in 0..k {
                for bb in 0..k {
                    let (p, q) = (blk[a], blk[bb]);
                    g.set(a, bb, orient * (1.0 - r[p] * r[q]) * hess.get(p, q) * cov.entry(a, bb));
                }
            }
            let (margin, witness) = min_eig_with_vector(&g);
            Ok(Some(PointEval { margin, raw_margin: margin, max_abs: g.max_abs(), witness, normalized: true }))
        })
        .collect::<Result<Vec<_>>>()?;

    let (idx, margin, _, max_abs, _) = worst_point(&evals)?;
    let witness = evals[idx].as_ref().unwrap().witness.clone();
    Ok(finish_report(margin, witness, Some(points[idx].clone()), None, max_abs, None, None))
}
