//! Gaussian hypercontractivity toolkit.
//!
//! Modules build bottom-up: dense symmetric linear algebra, scalar special
//! functions, counter-based RNG, Gauss-Hermite quadrature, sparse Hermite
//! polynomials, correlated Gaussian expectation engines, Mehler/noise
//! operators, two-point function pairs, local matrix certificates, sharp
//! constants, global inequality verifiers, and interpolation flows.

pub mod error;
pub mod linalg;
pub mod rng;
pub mod special;

pub mod flow;
pub mod gaussian;
pub mod global;
pub mod hermite;
pub mod local;
pub mod mehler;
pub mod pair;
pub mod quadrature;
pub mod sharp;

pub use error::{CoreError, Result};
pub use flow::{
    certify_monotone, complex_flow_value, real_flow_value, FlowCertificate, FlowProblem,
    FlowSpec, RealFlowFn, Trend,
};
pub use gaussian::{random_block_covariance, BlockCovariance, McEstimate};
pub use global::{
    perturbation_witness, random_exp_linear, random_falsification_config, random_hermite_poly,
    verify_chaos_moments, verify_complex_hc, verify_hausdorff_young, verify_log_sobolev,
    verify_noisy_borell, verify_norm_monotonicity, verify_real_hc, verify_rho_hy,
    verify_weighted_hy, Budget, ChaosVariant, Comparison, FalsConfig, Method, Orientation,
    Verdict, WitnessCheck,
};
pub use hermite::{gaussian_shift_poly, Basis, HermitePoly, MultiIndex, DEFAULT_DEGREE_CAP};
pub use local::{check_complex_local, check_correlated_r_bound, check_fb_complex_local, check_fb_real_local, check_gaussian_jensen, check_imaginary_sandwich, check_real_local, ConditionReport, Direction, GridSpec, HyperParams, Mode, PSD_TOL};
pub use linalg::{jacobi_eigen, Matrix};
pub use mehler::{fourier_ratio, mehler_kernel_apply, mehler_transform, noise_operator, NoisyFunction, TestFunction};
pub use pair::{borell_m, borell_m_derivatives, BorellDerivatives, CustomInner, FunctionPair, InnerFn, OuterFn};
pub use rng::CounterRng;
