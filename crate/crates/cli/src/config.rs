//! Flat JSON experiment configuration shared by every subcommand.
//!
//! One format for all commands keeps suites diffable: a config names its
//! command, the model (mode, exponents, covariance), test functions, and
//! budget knobs. Unknown fields are rejected so typos surface as usage
//! errors instead of silently ignored options.

use std::fmt;
use std::fs;
use std::path::Path;

use hypergauss_core::{
    BlockCovariance, Direction, HermitePoly, HyperParams, Matrix, Mode, RealFlowFn, TestFunction,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Invalid invocation or config; maps to exit code 64.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type UResult<T> = Result<T, Usage>;

pub fn usage<T>(msg: impl Into<String>) -> UResult<T> {
    Err(Usage(msg.into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must agree with the invoked subcommand.
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeSpec>,
    /// One exponent per covariance block; scalar consumers read entry 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovSource>,
    /// check-local: complex | sandwich | real | pair-complex | pair-real |
    /// jensen | r-bound
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    /// verify-global: complex-hc | real-hc | weighted-hy | rho-hy |
    /// log-sobolev | chaos-complex | chaos-real | noisy-borell |
    /// hausdorff-young | norm-monotonicity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<String>,
    /// Tuples of test functions, one function per covariance block; each
    /// tuple yields one record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<Vec<FunctionSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// flow: real | complex
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    /// constants: beckner-babenko | pq-hy | rho-hy | chaos-complex |
    /// chaos-real | log-sobolev
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> UResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())))
    }

    /// Blank config for programmatic suite entries.
    pub fn empty(command: &str) -> Self {
        ExperimentConfig {
            command: command.to_string(),
            label: None,
            mode: None,
            p: None,
            q: None,
            alpha: None,
            direction: None,
            covariance: None,
            check: None,
            verify: None,
            functions: None,
            rho: None,
            r1: None,
            r2: None,
            s: None,
            flow_kind: None,
            s_grid: None,
            constant: None,
            n: None,
            sum_k: None,
            sum_d: None,
            lambda_min: None,
            lambda_max: None,
            suite: None,
            seed: None,
            samples: None,
            nodes: None,
            tolerance: None,
        }
    }

    pub fn mode(&self) -> UResult<Mode> {
        Ok(self.mode.as_ref().ok_or(Usage("mode: required".into()))?.to_mode())
    }

    pub fn exponents(&self) -> UResult<Vec<f64>> {
        Ok(self.p.clone().ok_or(Usage("p: required".into()))?)
    }

    pub fn scalar_p(&self) -> UResult<f64> {
        match self.p.as_deref() {
            Some([first, ..]) => Ok(*first),
            _ => usage("p: at least one exponent required"),
        }
    }

    pub fn scalar_q(&self) -> UResult<f64> {
        self.q.ok_or(Usage("q: required".into()))
    }

    pub fn scalar_alpha(&self) -> UResult<f64> {
        self.alpha.ok_or(Usage("alpha: required".into()))
    }

    pub fn hyper_params(&self) -> UResult<HyperParams> {
        HyperParams::new(self.mode()?, self.exponents()?, self.scalar_alpha()?)
            .map_err(|e| Usage(format!("mode/p/alpha: {e}")))
    }

    pub fn direction(&self) -> UResult<Direction> {
        self.direction.ok_or(Usage("direction: required".into()))
    }

    pub fn covariance(&self, base: &Path) -> UResult<BlockCovariance> {
        self.covariance
            .as_ref()
            .ok_or(Usage("covariance: required".into()))?
            .load(base)
    }

    pub fn function_tuples(&self) -> UResult<&[Vec<FunctionSpec>]> {
        match self.functions.as_deref() {
            Some(tuples) if !tuples.is_empty() => Ok(tuples),
            _ => usage("functions: at least one tuple required"),
        }
    }
}

/// Noise multipliers in JSON form; complex entries are `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModeSpec {
    Complex { z: Vec<[f64; 2]> },
    Imaginary { s: Vec<f64> },
    Real { r: Vec<f64> },
}

impl ModeSpec {
    pub fn to_mode(&self) -> Mode {
        match self {
            ModeSpec::Complex { z } => {
                Mode::Complex { z: z.iter().map(|c| Complex64::new(c[0], c[1])).collect() }
            }
            ModeSpec::Imaginary { s } => Mode::Imaginary { s: s.clone() },
            ModeSpec::Real { r } => Mode::Real { r: r.clone() },
        }
    }
}

/// Covariance inline or by file path (relative to the config file).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovSource {
    Path(String),
    Inline { blocks: Vec<usize>, matrix: Vec<Vec<f64>> },
}

impl CovSource {
    pub fn load(&self, base: &Path) -> UResult<BlockCovariance> {
        match self {
            CovSource::Path(rel) => {
                let full = base.join(rel);
                let text = fs::read_to_string(&full)
                    .map_err(|e| Usage(format!("covariance {}: {e}", full.display())))?;
                BlockCovariance::from_text(&text)
                    .map_err(|e| Usage(format!("covariance {}: {e}", full.display())))
            }
            CovSource::Inline { blocks, matrix } => {
                let m = Matrix::from_rows(matrix)
                    .map_err(|e| Usage(format!("covariance.matrix: {e}")))?;
                BlockCovariance::new(blocks.clone(), m)
                    .map_err(|e| Usage(format!("covariance: {e}")))
            }
        }
    }
}

/// Test functions in JSON form. Polynomials travel in the library text
/// format so configs stay plain strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Polynomial { text: String },
    GaussPoly { text: String, t: f64 },
    ExpLinear { a: Vec<f64>, c: f64 },
    Halfspace { threshold: f64 },
    IntervalUnion { intervals: Vec<(f64, f64)> },
    ShiftedPositive { text: String, delta: f64 },
    Constant { value: f64 },
    GaussCdf { lo: f64, hi: f64, theta: f64, scale: f64 },
}

fn parse_poly(text: &str, path: &str) -> UResult<HermitePoly> {
    HermitePoly::from_text(text).map_err(|e| Usage(format!("{path}: {e}")))
}

impl FunctionSpec {
    pub fn polynomial(&self, path: &str) -> UResult<HermitePoly> {
        match self {
            FunctionSpec::Polynomial { text } => parse_poly(text, path),
            _ => usage(format!("{path}: this check takes polynomial functions")),
        }
    }

    pub fn test_function(&self, path: &str) -> UResult<TestFunction> {
        let f = match self {
            FunctionSpec::Polynomial { text } => TestFunction::Polynomial(parse_poly(text, path)?),
            FunctionSpec::GaussPoly { text, t } => {
                TestFunction::GaussPoly { h: parse_poly(text, path)?, t: *t }
            }
            FunctionSpec::ExpLinear { a, c } => TestFunction::ExpLinear { a: a.clone(), c: *c },
            FunctionSpec::Halfspace { threshold } => {
                TestFunction::HalfspaceIndicator { threshold: *threshold }
            }
            FunctionSpec::IntervalUnion { intervals } => {
                TestFunction::IntervalUnion { intervals: intervals.clone() }
            }
            FunctionSpec::ShiftedPositive { text, delta } => {
                TestFunction::ShiftedPositive { h: parse_poly(text, path)?, delta: *delta }
            }
            _ => return usage(format!("{path}: flow-only function in a verifier config")),
        };
        f.validate().map_err(|e| Usage(format!("{path}: {e}")))?;
        Ok(f)
    }

    pub fn real_flow(&self, path: &str) -> UResult<RealFlowFn> {
        let f = match self {
            FunctionSpec::Constant { value } => RealFlowFn::Constant { value: *value },
            FunctionSpec::GaussCdf { lo, hi, theta, scale } => {
                RealFlowFn::GaussCdf { lo: *lo, hi: *hi, theta: *theta, scale: *scale }
            }
            FunctionSpec::Halfspace { threshold } => {
                RealFlowFn::Halfspace { threshold: *threshold }
            }
            FunctionSpec::ExpLinear { a, c } => {
                if a.len() != 1 {
                    return usage(format!("{path}: real flows take one slope per coordinate"));
                }
                RealFlowFn::ExpLinear { a: a[0], c: *c }
            }
            _ => return usage(format!("{path}: not in the real flow family")),
        };
        Ok(f)
    }
}
