//! Interpolation-flow certificates. Each hypercontractive comparison has a
//! bridging functional C(s) with C(0) and C(1) equal to the two sides (raised
//! to the outer power); the inequality follows from monotonicity of C. This
//! module evaluates C on an s-grid with common random numbers across grid
//! points and certifies the monotone direction, cross-checking the endpoints
//! against the global verifiers.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::gaussian::BlockCovariance;
use crate::global::{verify_complex_hc, Budget, Method, Verdict};
use crate::hermite::{gaussian_shift_poly, Basis, HermitePoly, DEFAULT_DEGREE_CAP};
use crate::local::{HyperParams, Mode};
use crate::quadrature::{default_nodes_per_dim, gauss_hermite, tensor_visit, TENSOR_POINT_CAP};
use crate::rng::CounterRng;
use crate::special::norm_cdf;

/// Tensor nodes per dimension for the paired double integral.
pub const FLOW_NODES: usize = 40;
/// Outer Monte Carlo budget when the tensor grid does not fit.
pub const FLOW_MC_SAMPLES: usize = 200_000;
/// Sampled points in the range law check for real flow functions.
pub const RANGE_SAMPLES: usize = 10_000;
/// Per-pair direction tolerance for quadrature curves, relative to scale.
const GRID_TOL: f64 = 2e-6;
/// Endpoint identity tolerance against the global verifier (quadrature).
const ENDPOINT_TOL: f64 = 1e-6;
/// Total inner-times-outer evaluation cap for the Monte Carlo path.
const MC_EVAL_CAP: f64 = 2e8;

/// One-dimensional test functions for the real flow, chosen so the
/// Gaussian smoothing `E f(a + sigma Y)` has a closed form.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RealFlowFn {
    Constant { value: f64 },
    /// `lo + (hi - lo) Phi(scale (y - theta))`: bounded, smooth, strictly
    /// positive when `lo > 0`.
    GaussCdf { lo: f64, hi: f64, theta: f64, scale: f64 },
    /// Indicator of `y <= threshold`.
    Halfspace { threshold: f64 },
    /// `c exp(a y)`.
    ExpLinear { a: f64, c: f64 },
}

impl RealFlowFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            RealFlowFn::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "constant flow function must be positive, got {value}"
                    )));
                }
            }
            RealFlowFn::GaussCdf { lo, hi, theta, scale } => {
                if !(lo.is_finite() && hi.is_finite() && theta.is_finite() && scale.is_finite()) {
                    return Err(CoreError::Domain("gauss_cdf parameters must be finite".into()));
                }
                if !(*lo >= 0.0 && lo < hi && *scale > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "gauss_cdf needs 0 <= lo < hi and scale > 0, got lo={lo}, hi={hi}, scale={scale}"
                    )));
                }
            }
            RealFlowFn::Halfspace { threshold } => {
                if !threshold.is_finite() {
                    return Err(CoreError::Domain("halfspace threshold must be finite".into()));
                }
            }
            RealFlowFn::ExpLinear { a, c } => {
                if !(a.is_finite() && c.is_finite() && *c > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "exp_linear needs finite slope and c > 0, got a={a}, c={c}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Declared range of the function and all its smoothings.
    pub fn range(&self) -> (f64, f64) {
        match self {
            RealFlowFn::Constant { value } => (*value, *value),
            RealFlowFn::GaussCdf { lo, hi, .. } => (*lo, *hi),
            RealFlowFn::Halfspace { .. } => (0.0, 1.0),
            RealFlowFn::ExpLinear { .. } => (0.0, f64::INFINITY),
        }
    }

    /// `E f(a + sigma Y)` for standard `Y`, in closed form.
    pub fn smoothed(&self, a: f64, sigma: f64) -> f64 {
        match self {
            RealFlowFn::Constant { value } => *value,
            RealFlowFn::GaussCdf { lo, hi, theta, scale } => {
                let denom = (1.0 + scale * scale * sigma * sigma).sqrt();
                lo + (hi - lo) * norm_cdf(scale * (a - theta) / denom)
            }
            RealFlowFn::Halfspace { threshold } => {
                if sigma > 0.0 {
                    norm_cdf((threshold - a) / sigma)
                } else if a <= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            RealFlowFn::ExpLinear { a: slope, c } => {
                c * (slope * a + slope * slope * sigma * sigma / 2.0).exp()
            }
        }
    }

    /// Sampled law: every smoothing stays inside the declared range.
    pub fn check_range(&self, seed: u64) -> Result<()> {
        let (lo, hi) = self.range();
        let rng = CounterRng::new(seed);
        for i in 0..RANGE_SAMPLES as u64 {
            let a = 3.0 * rng.normal(2 * i);
            let sigma = rng.uniform_in(2 * i + 1, 0.0, 1.0);
            let v = self.smoothed(a, sigma);
            if !(v >= lo - 1e-9 && v <= hi + 1e-9) {
                return Err(CoreError::Domain(format!(
                    "smoothed value {v} escapes declared range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Grid and integration budget for one flow certificate.
#[derive(Clone, Debug)]
pub struct FlowSpec {
    pub s_grid: Vec<f64>,
    pub nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            s_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            nodes: 0,
            mc_samples: FLOW_MC_SAMPLES,
            seed: 0x464C_4F57,
        }
    }
}

impl FlowSpec {
    /// Per-dimension default: enough nodes that the paired tensor grid
    /// resolves near-kinks of fractional absolute powers, while the double
    /// integral stays inside the tensor point cap.
    fn nodes_for(&self, k: usize) -> usize {
        if self.nodes > 0 {
            self.nodes
        } else {
            match k {
                0 | 1 => 120,
                2 => 56,
                _ => FLOW_NODES,
            }
        }
    }

    fn validate_grid(&self) -> Result<()> {
        if self.s_grid.is_empty() {
            return Err(CoreError::Domain("flow grid is empty".into()));
        }
        for w in self.s_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(CoreError::Domain("flow grid must be strictly increasing".into()));
            }
        }
        if self.s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(CoreError::Domain("flow grid points must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Nondecreasing,
    Nonincreasing,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct FlowCertificate {
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<Option<f64>>,
    pub diff_stderrs: Vec<Option<f64>>,
    pub method: Method,
    pub trend: Trend,
    pub monotone: Verdict,
    /// Relative deviation of C(0) and C(1) from the global verifier sides.
    pub endpoint_dev: (f64, f64),
    pub endpoints_ok: bool,
    pub tainted: bool,
    pub note: Option<String>,
}

impl FlowCertificate {
    pub fn passes(&self) -> bool {
        self.monotone == Verdict::Holds && self.endpoints_ok && !self.tainted
    }
}

/// Block test functions for one flow problem.
pub enum FlowProblem<'a> {
    Complex { fs: &'a [HermitePoly] },
    Real { fs: &'a [RealFlowFn] },
}

struct Curve {
    values: Vec<f64>,
    stderrs: Vec<Option<f64>>,
    diff_stderrs: Vec<Option<f64>>,
    method: Method,
    tainted: bool,
}

/// Standard tensor nodes pushed through the covariance factor: returns the
/// transformed coordinates (flattened, stride k) and the weights.
fn node_cache(cov: &BlockCovariance, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let k = cov.total_dim();
    let chol = cov.cholesky_factor();
    let rule = gauss_hermite(nodes);
    let rules: Vec<_> = (0..k).map(|_| rule.clone()).collect();
    let counts = vec![nodes; k];
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut out = vec![0.0; k];
    tensor_visit(&counts, &rules, |pt, w| {
        chol.matvec_into(pt, &mut out);
        coords.extend_from_slice(&out);
        weights.push(w);
    });
    (coords, weights)
}

/// Evaluates C(s) over the whole grid with one shared point set. `product`
/// maps (transformed outer point, transformed inner point, grid index,
/// scratch) to the inner integrand value.
fn flow_curve<P>(cov: &BlockCovariance, alpha: f64, n_s: usize, spec: &FlowSpec, product: P) -> Result<Curve>
where
    P: Fn(&[f64], &[f64], usize, &mut Vec<Complex64>) -> f64 + Sync,
{
    let k = cov.total_dim();
    if k > 6 {
        return Err(CoreError::BudgetExhausted { cap: 6, what: "flow dimension" });
    }
    let nodes = spec.nodes_for(k);
    let tensor_pts = (nodes as f64).powi(2 * k as i32);
    let taint = AtomicBool::new(false);
    if tensor_pts <= TENSOR_POINT_CAP as f64 {
        let (coords, weights) = node_cache(cov, nodes);
        let n_outer = weights.len();
        // Fixed chunks combined in index order: the curve is bit-identical
        // no matter how many workers run it.
        const QCHUNK: usize = 64;
        let n_chunks = n_outer.div_ceil(QCHUNK);
        let partials: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|ci| {
                let mut outer = vec![0.0; n_s];
                let mut inner = vec![0.0; n_s];
                let mut scratch = Vec::with_capacity(k);
                let lo = ci * QCHUNK;
                let hi = ((ci + 1) * QCHUNK).min(n_outer);
                for ix in lo..hi {
                    let ax = &coords[ix * k..(ix + 1) * k];
                    inner.iter_mut().for_each(|v| *v = 0.0);
                    for iu in 0..n_outer {
                        let au = &coords[iu * k..(iu + 1) * k];
                        for (si, acc) in inner.iter_mut().enumerate() {
                            let v = product(ax, au, si, &mut scratch);
                            if v.is_finite() {
                                *acc += weights[iu] * v;
                            } else {
                                taint.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                    for (si, acc) in outer.iter_mut().enumerate() {
                        *acc += weights[ix] * inner[si].max(0.0).powf(alpha);
                    }
                }
                outer
            })
            .collect();
        let mut values = vec![0.0; n_s];
        for part in &partials {
            for (x, y) in values.iter_mut().zip(part) {
                *x += y;
            }
        }
        return Ok(Curve {
            values,
            stderrs: vec![None; n_s],
            diff_stderrs: vec![None; n_s.saturating_sub(1)],
            method: Method::Quadrature,
            tainted: taint.load(Ordering::Relaxed),
        });
    }

    // Outer Monte Carlo over x, inner tensor quadrature over u. The inner
    // node set is shared by every sample and every grid point, so curves
    // are paired across s.
    let inner_nodes = default_nodes_per_dim(k).min(nodes);
    let (icoords, iweights) = node_cache(cov, inner_nodes);
    let inner_pts = iweights.len();
    let cap = (MC_EVAL_CAP / (inner_pts as f64 * n_s as f64)).floor() as usize;
    let n_outer = spec.mc_samples.min(cap.max(1000));
    let chol = cov.cholesky_factor();
    const CHUNK: usize = 256;
    let n_chunks = n_outer.div_ceil(CHUNK);
    // Accumulate sums and squared sums of F_i(s) and of adjacent diffs.
    let zero = || (vec![0.0; n_s], vec![0.0; n_s], vec![0.0; n_s - 1], vec![0.0; n_s - 1]);
    let chunked: Vec<_> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let rng = CounterRng::new(spec.seed);
            let mut acc = zero();
            let mut g = vec![0.0; k];
            let mut x = vec![0.0; k];
            let mut f = vec![0.0; n_s];
            let mut scratch = Vec::with_capacity(k);
            let lo = ci * CHUNK;
            let hi = ((ci + 1) * CHUNK).min(n_outer);
            for i in lo..hi {
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc = rng.normal((i * k + c) as u64);
                }
                chol.matvec_into(&g, &mut x);
                for (si, fv) in f.iter_mut().enumerate() {
                    let mut inner = 0.0;
                    for iu in 0..inner_pts {
                        let au = &icoords[iu * k..(iu + 1) * k];
                        let v = product(&x, au, si, &mut scratch);
                        if v.is_finite() {
                            inner += iweights[iu] * v;
                        } else {
                            taint.store(true, Ordering::Relaxed);
                        }
                    }
                    *fv = inner.max(0.0).powf(alpha);
                }
                for si in 0..n_s {
                    acc.0[si] += f[si];
                    acc.1[si] += f[si] * f[si];
                }
                for si in 0..n_s - 1 {
                    let d = f[si + 1] - f[si];
                    acc.2[si] += d;
                    acc.3[si] += d * d;
                }
            }
            acc
        })
        .collect();
    // Same deal as the quadrature path: combine per-chunk sums in index
    // order so the estimate does not depend on the worker count.
    let (mut sum, mut sumsq, mut dsum, mut dsumsq) = zero();
    for b in chunked {
        for (x, y) in sum.iter_mut().zip(b.0) {
            *x += y;
        }
        for (x, y) in sumsq.iter_mut().zip(b.1) {
            *x += y;
        }
        for (x, y) in dsum.iter_mut().zip(b.2) {
            *x += y;
        }
        for (x, y) in dsumsq.iter_mut().zip(b.3) {
            *x += y;
        }
    }
    let nf = n_outer as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderrs: Vec<Option<f64>> = sum
        .iter()
        .zip(&sumsq)
        .map(|(s, s2)| {
            let var = ((s2 - s * s / nf) / (nf - 1.0)).max(0.0);
            Some((var / nf).sqrt())
        })
        .collect();
    let diff_stderrs: Vec<Option<f64>> = dsum
        .iter()
        .zip(&dsumsq)
        .map(|(s, s2)| {
            let var = ((s2 - s * s / nf) / (nf - 1.0)).max(0.0);
            Some((var / nf).sqrt())
        })
        .collect();
    Ok(Curve {
        values,
        stderrs,
        diff_stderrs,
        method: Method::Mc,
        tainted: taint.load(Ordering::Relaxed),
    })
}

/// C(s) for the complex flow at a single grid point.
pub fn complex_flow_value(
    fs: &[HermitePoly],
    params: &HyperParams,
    cov: &BlockCovariance,
    s: f64,
    spec: &FlowSpec,
) -> Result<(f64, Option<f64>)> {
    let mut single = spec.clone();
    single.s_grid = vec![s];
    let curve = complex_curve(fs, params, cov, &single)?;
    Ok((curve.values[0], curve.stderrs[0]))
}

/// C(s) for the real flow at a single grid point.
pub fn real_flow_value(
    fs: &[RealFlowFn],
    params: &HyperParams,
    cov: &BlockCovariance,
    s: f64,
    spec: &FlowSpec,
) -> Result<(f64, Option<f64>)> {
    let mut single = spec.clone();
    single.s_grid = vec![s];
    let curve = real_curve(fs, params, cov, &single)?;
    Ok((curve.values[0], curve.stderrs[0]))
}

fn complex_curve(
    fs: &[HermitePoly],
    params: &HyperParams,
    cov: &BlockCovariance,
    spec: &FlowSpec,
) -> Result<Curve> {
    spec.validate_grid()?;
    let n = fs.len();
    if n != cov.n_blocks() || n != params.n() {
        return Err(CoreError::DimensionMismatch { expected: cov.n_blocks(), got: n });
    }
    if matches!(params.mode, Mode::Real { .. }) {
        return Err(CoreError::Hypothesis("complex flow needs complex multipliers".into()));
    }
    if params.alpha < 1.0 {
        return Err(CoreError::Hypothesis(format!(
            "complex flow needs alpha >= 1, got {}",
            params.alpha
        )));
    }
    let z = params.mode.as_complex();
    let sizes = cov.block_sizes().to_vec();
    let offs = cov.offsets();
    for (j, f) in fs.iter().enumerate() {
        if f.dim() != sizes[j] {
            return Err(CoreError::DimensionMismatch { expected: sizes[j], got: f.dim() });
        }
    }
    // Monomial carrier of the Hermite coefficients: l(b) = sum c_beta b^beta.
    let mut carriers = Vec::with_capacity(n);
    for f in fs {
        let h = match f.basis() {
            Basis::Hermite => f.clone(),
            Basis::Monomial => f.to_hermite(DEFAULT_DEGREE_CAP)?,
        };
        let terms: Vec<_> = h.terms().map(|(idx, c)| (idx.clone(), *c)).collect();
        carriers.push(HermitePoly::new(h.dim(), Basis::Monomial, terms)?);
    }
    // Per grid point: interpolated shift tau_j(s) = -(s + z_j^2 (1 - s)) and
    // the x-side multiplier z_j sqrt(1 - s).
    let n_s = spec.s_grid.len();
    let mut shifted = Vec::with_capacity(n_s);
    let mut xmul = Vec::with_capacity(n_s);
    let mut rs = Vec::with_capacity(n_s);
    for &s in &spec.s_grid {
        let mut row = Vec::with_capacity(n);
        let mut zrow = Vec::with_capacity(n);
        for (j, c) in carriers.iter().enumerate() {
            let tau = -(Complex64::new(s, 0.0) + z[j] * z[j] * (1.0 - s));
            row.push(gaussian_shift_poly(c, tau, DEFAULT_DEGREE_CAP)?);
            zrow.push(z[j] * (1.0 - s).sqrt());
        }
        shifted.push(row);
        xmul.push(zrow);
        rs.push(s.sqrt());
    }
    let pw = params.p.clone();
    let product = move |ax: &[f64], au: &[f64], si: usize, scratch: &mut Vec<Complex64>| -> f64 {
        let mut prod = 1.0;
        for j in 0..n {
            scratch.clear();
            for m in 0..sizes[j] {
                let idx = offs[j] + m;
                scratch.push(Complex64::new(rs[si] * au[idx], 0.0) + xmul[si][j] * ax[idx]);
            }
            let q = match shifted[si][j].evaluate(scratch) {
                Ok(v) => v.norm(),
                Err(_) => return f64::NAN,
            };
            prod *= q.powf(pw[j]);
        }
        prod
    };
    flow_curve(cov, params.alpha, n_s, spec, product)
}

fn real_curve(
    fs: &[RealFlowFn],
    params: &HyperParams,
    cov: &BlockCovariance,
    spec: &FlowSpec,
) -> Result<Curve> {
    spec.validate_grid()?;
    let n = fs.len();
    if n != cov.n_blocks() || n != params.n() {
        return Err(CoreError::DimensionMismatch { expected: cov.n_blocks(), got: n });
    }
    if cov.block_sizes().iter().any(|&k| k != 1) {
        return Err(CoreError::Domain("real flow supports scalar blocks only".into()));
    }
    let r = match &params.mode {
        Mode::Real { r } => r.clone(),
        _ => return Err(CoreError::Hypothesis("real flow needs real multipliers".into())),
    };
    if !(params.alpha > 0.0 && params.alpha <= 1.0) {
        return Err(CoreError::Hypothesis(format!(
            "real flow certifies the reverse direction: alpha in (0, 1], got {}",
            params.alpha
        )));
    }
    if params.p.iter().any(|&p| p <= 0.0) {
        return Err(CoreError::Hypothesis("real flow needs p_j > 0".into()));
    }
    for (j, f) in fs.iter().enumerate() {
        f.validate()?;
        f.check_range(CounterRng::derive(spec.seed, 0x5247 + j as u64))?;
    }
    let n_s = spec.s_grid.len();
    let mut rs = Vec::with_capacity(n_s);
    let mut r1s = Vec::with_capacity(n_s);
    let mut sig = Vec::with_capacity(n_s);
    for &s in &spec.s_grid {
        rs.push(s.sqrt());
        r1s.push((1.0 - s).sqrt());
        sig.push(r.iter().map(|&rj| ((1.0 - rj * rj) * (1.0 - s)).sqrt()).collect::<Vec<f64>>());
    }
    let pw = params.p.clone();
    let fsv = fs.to_vec();
    let rv = r.clone();
    let product = move |ax: &[f64], au: &[f64], si: usize, _scratch: &mut Vec<Complex64>| -> f64 {
        let mut prod = 1.0;
        for j in 0..n {
            let a = rs[si] * au[j] + rv[j] * r1s[si] * ax[j];
            let v = fsv[j].smoothed(a, sig[si][j]);
            prod *= v.powf(pw[j]);
        }
        prod
    };
    flow_curve(cov, params.alpha, n_s, spec, product)
}

/// Reference values of C(0) and C(1) for the real flow, through the
/// engine's own covariance quadrature (an independent integration route).
fn real_endpoint_refs(
    fs: &[RealFlowFn],
    params: &HyperParams,
    cov: &BlockCovariance,
) -> Result<(f64, f64)> {
    let r = match &params.mode {
        Mode::Real { r } => r.clone(),
        _ => unreachable!("checked by caller"),
    };
    let alpha = params.alpha;
    let pw = params.p.clone();
    let n = fs.len();
    let nodes = default_nodes_per_dim(cov.total_dim()).max(48).min(96);
    let lhs_pow = cov.expect_quadrature(
        |x| {
            let mut v = 1.0;
            for j in 0..n {
                let t = fs[j].smoothed(r[j] * x[j], (1.0 - r[j] * r[j]).sqrt());
                v *= t.powf(pw[j] * alpha);
            }
            v
        },
        nodes,
    )?;
    let rhs_mean = cov.expect_quadrature(
        |x| {
            let mut v = 1.0;
            for j in 0..n {
                v *= fs[j].smoothed(x[j], 0.0).powf(pw[j]);
            }
            v
        },
        nodes,
    )?;
    Ok((lhs_pow, rhs_mean.max(0.0).powf(alpha)))
}

/// Evaluates the flow over the grid and certifies its monotone direction:
/// nondecreasing for the complex (forward) flow, nonincreasing for the real
/// (reverse) flow. Endpoints are compared against the global verifier. A
/// dimension over the tensor/MC budget yields an inconclusive certificate.
pub fn certify_monotone(
    problem: FlowProblem<'_>,
    params: &HyperParams,
    cov: &BlockCovariance,
    spec: &FlowSpec,
) -> Result<FlowCertificate> {
    let (curve, trend, endpoint_refs) = match &problem {
        FlowProblem::Complex { fs } => {
            let curve = match complex_curve(fs, params, cov, spec) {
                Ok(c) => c,
                Err(CoreError::BudgetExhausted { cap, what }) => {
                    return Ok(inconclusive_cert(spec, Trend::Nondecreasing, cap, what));
                }
                Err(e) => return Err(e),
            };
            let refs = if spec.s_grid.first() == Some(&0.0) && spec.s_grid.last() == Some(&1.0) {
                // Same rule as the flow so the identity check isolates the
                // interpolation algebra from quadrature resolution.
                let budget = Budget {
                    nodes: spec.nodes_for(cov.total_dim()),
                    mc_samples: spec.mc_samples,
                    seed: spec.seed ^ 0x5245_46,
                };
                let comp = verify_complex_hc(fs, params, cov, &budget)?;
                Some((comp.lhs.powf(params.alpha), comp.rhs.powf(params.alpha)))
            } else {
                None
            };
            (curve, Trend::Nondecreasing, refs)
        }
        FlowProblem::Real { fs } => {
            let curve = match real_curve(fs, params, cov, spec) {
                Ok(c) => c,
                Err(CoreError::BudgetExhausted { cap, what }) => {
                    return Ok(inconclusive_cert(spec, Trend::Nonincreasing, cap, what));
                }
                Err(e) => return Err(e),
            };
            let refs = if spec.s_grid.first() == Some(&0.0) && spec.s_grid.last() == Some(&1.0) {
                Some(real_endpoint_refs(fs, params, cov)?)
            } else {
                None
            };
            (curve, Trend::Nonincreasing, refs)
        }
    };

    let n_s = spec.s_grid.len();
    let scale = curve.values.iter().fold(1e-300f64, |m, v| m.max(v.abs())).max(1.0);
    let mut monotone = Verdict::Holds;
    for k in 0..n_s.saturating_sub(1) {
        let d = curve.values[k + 1] - curve.values[k];
        let oriented = match trend {
            Trend::Nondecreasing => d,
            Trend::Nonincreasing => -d,
        };
        let ok = match curve.method {
            Method::Quadrature | Method::Exact => oriented >= -GRID_TOL * scale,
            Method::Mc => {
                let se = curve.diff_stderrs[k].unwrap_or(0.0);
                oriented >= -3.0 * se.max(1e-300)
            }
        };
        if !ok {
            monotone = Verdict::Violated;
        }
    }

    let (endpoint_dev, endpoints_ok, note) = match endpoint_refs {
        Some((ref0, ref1)) => {
            let c0 = curve.values[0];
            let c1 = curve.values[n_s - 1];
            let d0 = (c0 - ref0).abs() / ref0.abs().max(1e-300);
            let d1 = (c1 - ref1).abs() / ref1.abs().max(1e-300);
            let tol0 = match curve.method {
                Method::Quadrature | Method::Exact => ENDPOINT_TOL,
                Method::Mc => {
                    let se = curve.stderrs[0].unwrap_or(0.0);
                    (6.0 * se / ref0.abs().max(1e-300)).max(1e-4)
                }
            };
            let tol1 = match curve.method {
                Method::Quadrature | Method::Exact => ENDPOINT_TOL,
                Method::Mc => {
                    let se = curve.stderrs[n_s - 1].unwrap_or(0.0);
                    (6.0 * se / ref1.abs().max(1e-300)).max(1e-4)
                }
            };
            let ok = d0 <= tol0 && d1 <= tol1;
            (
                (d0, d1),
                ok,
                Some(format!(
                    "endpoint references {ref0:.12e} and {ref1:.12e}; deviations {d0:.3e}, {d1:.3e}"
                )),
            )
        }
        None => ((0.0, 0.0), true, Some("grid omits an endpoint; identity check skipped".into())),
    };

    Ok(FlowCertificate {
        s_grid: spec.s_grid.clone(),
        values: curve.values,
        stderrs: curve.stderrs,
        diff_stderrs: curve.diff_stderrs,
        method: curve.method,
        trend,
        monotone,
        endpoint_dev,
        endpoints_ok,
        tainted: curve.tainted,
        note,
    })
}

fn inconclusive_cert(spec: &FlowSpec, trend: Trend, cap: usize, what: &str) -> FlowCertificate {
    FlowCertificate {
        s_grid: spec.s_grid.clone(),
        values: Vec::new(),
        stderrs: Vec::new(),
        diff_stderrs: Vec::new(),
        method: Method::Mc,
        trend,
        monotone: Verdict::Inconclusive,
        endpoint_dev: (f64::NAN, f64::NAN),
        endpoints_ok: false,
        tainted: false,
        note: Some(format!("budget exhausted: {what} over cap {cap}")),
    }
}
