//! Mehler transform, noise smoothing, kernel integrals, and Fourier ratios.
//!
//! `T_z` scales the degree-`m` Hermite component of an expansion by `z^m`.
//! For real `z` in `[-1, 1]` this is the Ornstein-Uhlenbeck noise operator
//! `T_r f(x) = E f(r x + sqrt(1-r^2) Y)`; for complex `z` it is the analytic
//! continuation used by the sharp Hausdorff-Young reformulations. Closed
//! forms are used wherever the function family admits them; everything else
//! goes through Gauss-Hermite ladders with an explicit point budget.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::hermite::{Basis, HermitePoly, DEFAULT_DEGREE_CAP};
use crate::quadrature::{gauss_hermite, tensor_visit};
use crate::special::norm_cdf;

/// Successive quadrature refinements must agree to this relative tolerance.
const REFINE_TOL: f64 = 1e-11;

/// Node counts tried per dimension by the kernel and Fourier ladders.
const NODE_LADDER: [usize; 4] = [40, 80, 160, 320];

/// Nodes used for the pointwise noise smoothing of `shifted_positive`.
const SMOOTH_NODES: usize = 80;

/// Test-function families covering every global inequality's test class.
#[derive(Clone, Debug)]
pub enum TestFunction {
    /// Complex-coefficient polynomial, any dimension.
    Polynomial(HermitePoly),
    /// `h(x) * exp(-|x|^2/(2t))` with `t > 0`.
    GaussPoly { h: HermitePoly, t: f64 },
    /// `c * exp(a . x)` with `c > 0`.
    ExpLinear { a: Vec<f64>, c: f64 },
    /// `1_{(-inf, threshold)}` in dimension 1.
    HalfspaceIndicator { threshold: f64 },
    /// Union of disjoint open intervals in dimension 1, endpoints ascending.
    /// Infinite endpoints are allowed.
    IntervalUnion { intervals: Vec<(f64, f64)> },
    /// `|h(x)|^2 + delta` with `delta > 0`; strictly positive everywhere.
    ShiftedPositive { h: HermitePoly, delta: f64 },
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Polynomial(p) => p.dim(),
            TestFunction::GaussPoly { h, .. } => h.dim(),
            TestFunction::ExpLinear { a, .. } => a.len(),
            TestFunction::HalfspaceIndicator { .. } => 1,
            TestFunction::IntervalUnion { .. } => 1,
            TestFunction::ShiftedPositive { h, .. } => h.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Polynomial(_) => Ok(()),
            TestFunction::GaussPoly { t, .. } => {
                if !t.is_finite() || *t <= 0.0 {
                    return Err(CoreError::Domain(format!("gauss_poly scale t = {t} must be positive")));
                }
                Ok(())
            }
            TestFunction::ExpLinear { a, c } => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(CoreError::Domain(format!("exp_linear prefactor c = {c} must be positive")));
                }
                if a.iter().any(|x| !x.is_finite()) {
                    return Err(CoreError::Domain("exp_linear direction must be finite".into()));
                }
                Ok(())
            }
            TestFunction::HalfspaceIndicator { threshold } => {
                if threshold.is_nan() {
                    return Err(CoreError::Domain("halfspace threshold must not be NaN".into()));
                }
                Ok(())
            }
            TestFunction::IntervalUnion { intervals } => {
                if intervals.is_empty() {
                    return Err(CoreError::Domain("interval union must be nonempty".into()));
                }
                let mut prev_end: Option<f64> = None;
                for &(a, b) in intervals {
                    if a.is_nan() || b.is_nan() || a >= b {
                        return Err(CoreError::Domain(format!("bad interval ({a}, {b})")));
                    }
                    if let Some(pe) = prev_end {
                        if a <= pe {
                            return Err(CoreError::Domain(
                                "intervals must be disjoint with strictly increasing endpoints".into(),
                            ));
                        }
                    }
                    prev_end = Some(b);
                }
                Ok(())
            }
            TestFunction::ShiftedPositive { delta, .. } => {
                if !delta.is_finite() || *delta <= 0.0 {
                    return Err(CoreError::Domain(format!("shift delta = {delta} must be positive")));
                }
                Ok(())
            }
        }
    }

    /// True for the strictly positive families admissible in the real
    /// (measurable, `(0, inf)`-valued) hypercontractivity theorems.
    pub fn is_positive_family(&self) -> bool {
        matches!(
            self,
            TestFunction::ExpLinear { .. } | TestFunction::ShiftedPositive { .. }
        )
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        match self {
            TestFunction::Polynomial(p) => p.evaluate_real(x),
            TestFunction::GaussPoly { h, t } => {
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                Ok(h.evaluate_real(x)? * (-norm2 / (2.0 * t)).exp())
            }
            TestFunction::ExpLinear { a, c } => {
                let dot: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                Ok(Complex64::new(c * dot.exp(), 0.0))
            }
            TestFunction::HalfspaceIndicator { threshold } => {
                Ok(Complex64::new(if x[0] < *threshold { 1.0 } else { 0.0 }, 0.0))
            }
            TestFunction::IntervalUnion { intervals } => {
                let inside = intervals.iter().any(|&(a, b)| x[0] > a && x[0] < b);
                Ok(Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0))
            }
            TestFunction::ShiftedPositive { h, delta } => {
                let hv = h.evaluate_real(x)?;
                Ok(Complex64::new(hv.norm_sqr() + delta, 0.0))
            }
        }
    }

    /// Hermite-basis polynomial representation where one exists exactly:
    /// `Polynomial` as-is, `ShiftedPositive` as `h conj(h) + delta`.
    pub fn as_polynomial(&self, cap: usize) -> Result<HermitePoly> {
        match self {
            TestFunction::Polynomial(p) => match p.basis() {
                Basis::Hermite => Ok(p.clone()),
                Basis::Monomial => p.to_hermite(cap),
            },
            TestFunction::ShiftedPositive { h, delta } => {
                let hm = match h.basis() {
                    Basis::Monomial => h.clone(),
                    Basis::Hermite => h.to_monomial(cap)?,
                };
                let sq = hm.multiply(&hm.conjugate(), cap)?;
                let shift = HermitePoly::constant(h.dim(), Basis::Monomial, Complex64::new(*delta, 0.0));
                sq.add(&shift)?.to_hermite(cap)
            }
            _ => Err(CoreError::Domain("no exact polynomial representation for this variant".into())),
        }
    }
}

/// Scales the Hermite coefficient of multidegree `beta` by `z^{|beta|}`.
/// Defined for every complex `z`; theorem hypotheses on `z` are the
/// responsibility of the condition checkers.
pub fn mehler_transform(f: &HermitePoly, z: Complex64) -> Result<HermitePoly> {
    if f.basis() != Basis::Hermite {
        return Err(CoreError::BasisMismatch { expected: "hermite" });
    }
    // Integer powers by repeated multiplication; no branch cuts arise.
    let max_deg = f.degree() as usize;
    let mut pow = Vec::with_capacity(max_deg + 1);
    pow.push(Complex64::new(1.0, 0.0));
    for m in 0..max_deg {
        let prev = pow[m];
        pow.push(prev * z);
    }
    let terms = f
        .terms()
        .map(|(idx, coeff)| (idx.clone(), coeff * pow[idx.degree() as usize]))
        .collect();
    HermitePoly::new(f.dim(), Basis::Hermite, terms)
}

/// Result of applying the noise operator `T_r` to a [`TestFunction`]:
/// either another closed form or a pointwise evaluator.
#[derive(Clone, Debug)]
pub enum NoisyFunction {
    /// Hermite-basis polynomial (polynomial input).
    Poly(HermitePoly),
    /// `c * exp(a . x)` (exp_linear input).
    ExpLinear { a: Vec<f64>, c: f64 },
    /// Smoothed indicator in dimension 1 for `|r| < 1`:
    /// `x -> sum_i Phi((b_i - r x)/sqrt(1-r^2)) - Phi((a_i - r x)/sqrt(1-r^2))`.
    PhiMix { intervals: Vec<(f64, f64)>, r: f64 },
    /// `r = +-1` leaves indicators sharp (reflected when `r = -1`).
    Sharp(TestFunction),
    /// Gauss-Hermite smoothing in the noise variable (shifted_positive input).
    Smoothed { f: TestFunction, r: f64 },
}

impl NoisyFunction {
    pub fn dim(&self) -> usize {
        match self {
            NoisyFunction::Poly(p) => p.dim(),
            NoisyFunction::ExpLinear { a, .. } => a.len(),
            NoisyFunction::PhiMix { .. } => 1,
            NoisyFunction::Sharp(f) => f.dim(),
            NoisyFunction::Smoothed { f, .. } => f.dim(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        match self {
            NoisyFunction::Poly(p) => p.evaluate_real(x),
            NoisyFunction::ExpLinear { a, c } => {
                let dot: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                Ok(Complex64::new(c * dot.exp(), 0.0))
            }
            NoisyFunction::PhiMix { intervals, r } => {
                let sdev = (1.0 - r * r).sqrt();
                let mut acc = 0.0;
                for &(a, b) in intervals {
                    acc += norm_cdf((b - r * x[0]) / sdev) - norm_cdf((a - r * x[0]) / sdev);
                }
                Ok(Complex64::new(acc, 0.0))
            }
            NoisyFunction::Sharp(f) => f.evaluate(x),
            NoisyFunction::Smoothed { f, r } => {
                let dim = f.dim();
                let sdev = (1.0 - r * r).sqrt();
                let rule = gauss_hermite(SMOOTH_NODES);
                let rules = vec![rule; dim];
                let counts = vec![SMOOTH_NODES; dim];
                let mut acc = Complex64::new(0.0, 0.0);
                let mut shifted = vec![0.0; dim];
                let mut err = None;
                tensor_visit(&counts, &rules, |y, w| {
                    if err.is_some() {
                        return;
                    }
                    for i in 0..dim {
                        shifted[i] = r * x[i] + sdev * y[i];
                    }
                    match f.evaluate(&shifted) {
                        Ok(v) => acc += w * v,
                        Err(e) => err = Some(e),
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }
        }
    }

    pub fn evaluate_real(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x)?.re)
    }
}

/// Noise operator `T_r` on the closed function families.
pub fn noise_operator(f: &TestFunction, r: f64) -> Result<NoisyFunction> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(CoreError::Domain(format!("noise parameter r = {r} outside [-1, 1]")));
    }
    f.validate()?;
    match f {
        TestFunction::Polynomial(p) => {
            let hermite = match p.basis() {
                Basis::Hermite => p.clone(),
                Basis::Monomial => p.to_hermite(DEFAULT_DEGREE_CAP)?,
            };
            Ok(NoisyFunction::Poly(mehler_transform(&hermite, Complex64::new(r, 0.0))?))
        }
        TestFunction::ExpLinear { a, c } => {
            let norm2: f64 = a.iter().map(|v| v * v).sum();
            Ok(NoisyFunction::ExpLinear {
                a: a.iter().map(|v| r * v).collect(),
                c: c * (norm2 * (1.0 - r * r) / 2.0).exp(),
            })
        }
        TestFunction::HalfspaceIndicator { threshold } => {
            indicator_noise(&[(f64::NEG_INFINITY, *threshold)], r)
        }
        TestFunction::IntervalUnion { intervals } => indicator_noise(intervals, r),
        TestFunction::ShiftedPositive { h, delta } => {
            if r == 1.0 {
                Ok(NoisyFunction::Sharp(f.clone()))
            } else if r == -1.0 {
                let reflected = reflect_poly(h)?;
                Ok(NoisyFunction::Sharp(TestFunction::ShiftedPositive { h: reflected, delta: *delta }))
            } else {
                Ok(NoisyFunction::Smoothed { f: f.clone(), r })
            }
        }
        TestFunction::GaussPoly { .. } => Err(CoreError::Domain(
            "noise operator on gauss_poly is not part of any verified inequality; use the polynomial factor".into(),
        )),
    }
}

fn indicator_noise(intervals: &[(f64, f64)], r: f64) -> Result<NoisyFunction> {
    if r == 1.0 {
        return Ok(NoisyFunction::Sharp(TestFunction::IntervalUnion { intervals: intervals.to_vec() }));
    }
    if r == -1.0 {
        let mut reflected: Vec<(f64, f64)> = intervals.iter().map(|&(a, b)| (-b, -a)).collect();
        reflected.reverse();
        return Ok(NoisyFunction::Sharp(TestFunction::IntervalUnion { intervals: reflected }));
    }
    Ok(NoisyFunction::PhiMix { intervals: intervals.to_vec(), r })
}

/// `h(-x)` for a Hermite-basis polynomial: flips the sign of odd components.
fn reflect_poly(h: &HermitePoly) -> Result<HermitePoly> {
    match h.basis() {
        Basis::Hermite => mehler_transform(h, Complex64::new(-1.0, 0.0)),
        Basis::Monomial => mehler_transform(&h.to_hermite(DEFAULT_DEGREE_CAP)?, Complex64::new(-1.0, 0.0)),
    }
}

/// Direct Mehler kernel integral
/// `T_z f(x) = (1-z^2)^{-n/2} Int f(y) exp(-(|x|^2+|y|^2)/2 * z^2/(1-z^2) + x.y * z/(1-z^2)) dgamma(y)`,
/// evaluated on a Gauss-Hermite ladder that refines until two successive node
/// counts agree; exceeding `budget` tensor points raises `BudgetExhausted`.
pub fn mehler_kernel_apply(
    f: &TestFunction,
    z: Complex64,
    x: &[f64],
    budget: usize,
) -> Result<Complex64> {
    f.validate()?;
    let n = f.dim();
    if x.len() != n {
        return Err(CoreError::DimensionMismatch { expected: n, got: x.len() });
    }
    let one_minus_z2 = Complex64::new(1.0, 0.0) - z * z;
    if one_minus_z2.norm() < 1e-12 {
        return Err(CoreError::Domain(format!("kernel undefined at z = {z} (z^2 = 1)")));
    }
    if z.norm() >= 1.0 && z.re.abs() > 1e-14 {
        return Err(CoreError::Domain(format!(
            "kernel integral requires |z| < 1 or purely imaginary z, got {z}"
        )));
    }
    let a = z * z / one_minus_z2;
    let b = z / one_minus_z2;
    // (1-z^2)^{-n/2}, principal branch; Re(1-z^2) > 0 on the admissible set.
    let prefactor = (-(n as f64) / 2.0 * one_minus_z2.ln()).exp();
    let x_norm2: f64 = x.iter().map(|v| v * v).sum();
    // Re(a) < 0 makes the raw integrand grow like exp(|Re a| |y|^2 / 2),
    // which amplifies tail-weight noise. Substituting y = sigma u with
    // sigma^2 (1 + Re a) = 1 cancels the real quadratic growth exactly,
    // leaving bounded oscillation times an exp-linear factor.
    let one_plus_re_a = 1.0 + a.re;
    if one_plus_re_a <= 0.0 {
        return Err(CoreError::Domain(format!("kernel Gaussian degenerate at z = {z}")));
    }
    let sigma = one_plus_re_a.sqrt().recip();
    let quad_coeff = Complex64::new((1.0 - sigma * sigma) / 2.0, 0.0) - sigma * sigma / 2.0 * a;
    let scale = sigma.powi(n as i32);

    let mut prev: Option<Complex64> = None;
    for &nodes in &NODE_LADDER {
        let points = (nodes as f64).powi(n as i32);
        if points > budget as f64 {
            break;
        }
        let rule = gauss_hermite(nodes);
        let rules = vec![rule; n];
        let counts = vec![nodes; n];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = None;
        let mut y = vec![0.0; n];
        tensor_visit(&counts, &rules, |u, w| {
            if err.is_some() {
                return;
            }
            let u_norm2: f64 = u.iter().map(|v| v * v).sum();
            let mut xy = 0.0;
            for i in 0..n {
                y[i] = sigma * u[i];
                xy += x[i] * y[i];
            }
            let exponent = u_norm2 * quad_coeff - x_norm2 / 2.0 * a + xy * b;
            match f.evaluate(&y) {
                Ok(v) => acc += w * v * exponent.exp(),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let value = prefactor * scale * acc;
        if let Some(p) = prev {
            if (value - p).norm() <= REFINE_TOL * (1.0 + value.norm()) {
                return Ok(value);
            }
        }
        prev = Some(value);
    }
    Err(CoreError::BudgetExhausted { cap: budget, what: "mehler kernel quadrature" })
}

/// Fourier-side ratio `(g^ / e_t^)(omega)` at `omega = -sqrt(t-1)/t * x` for
/// `g = f * e_t`, computed by direct numeric Fourier integration:
/// `g^(omega) = t^{n/2} E[f(sqrt(t) V) exp(-i sqrt(t) V . omega)]` over standard `V`.
/// Cross-checks the identity `ratio = T_{i sqrt(t-1)} f (x)`.
pub fn fourier_ratio(g: &TestFunction, x: &[f64], budget: usize) -> Result<Complex64> {
    let (h, t) = match g {
        TestFunction::GaussPoly { h, t } => (h, *t),
        _ => return Err(CoreError::Domain("fourier_ratio expects a gauss_poly".into())),
    };
    if t < 1.0 {
        return Err(CoreError::Domain(format!("fourier_ratio requires scale t >= 1, got {t}")));
    }
    let n = h.dim();
    if x.len() != n {
        return Err(CoreError::DimensionMismatch { expected: n, got: x.len() });
    }
    let omega: Vec<f64> = x.iter().map(|v| -v * (t - 1.0).sqrt() / t).collect();
    let sqrt_t = t.sqrt();

    let mut prev: Option<Complex64> = None;
    for &nodes in &NODE_LADDER {
        let points = (nodes as f64).powi(n as i32);
        if points > budget as f64 {
            break;
        }
        let rule = gauss_hermite(nodes);
        let rules = vec![rule; n];
        let counts = vec![nodes; n];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = None;
        let mut scaled = vec![Complex64::new(0.0, 0.0); n];
        tensor_visit(&counts, &rules, |v, w| {
            if err.is_some() {
                return;
            }
            let mut phase = 0.0;
            for i in 0..n {
                scaled[i] = Complex64::new(sqrt_t * v[i], 0.0);
                phase -= sqrt_t * v[i] * omega[i];
            }
            match h.evaluate(&scaled) {
                Ok(val) => acc += w * val * Complex64::new(0.0, phase).exp(),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        // g^ / e_t^ with e_t^(omega) = t^{n/2} exp(-|omega|^2 t / 2); the
        // t^{n/2} factors cancel.
        let omega_norm2: f64 = omega.iter().map(|v| v * v).sum();
        let value = acc * (omega_norm2 * t / 2.0).exp();
        if let Some(p) = prev {
            if (value - p).norm() <= REFINE_TOL * (1.0 + value.norm()) {
                return Ok(value);
            }
        }
        prev = Some(value);
    }
    Err(CoreError::BudgetExhausted { cap: budget, what: "fourier quadrature" })
}
