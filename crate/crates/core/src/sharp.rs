//! Closed-form sharp constants for the verified inequalities.
//!
//! Every function here is a pure formula; domain violations surface as
//! non-finite values and are validated by the callers that embed these
//! constants into comparisons.

use std::f64::consts::PI;

/// Babenko-Beckner constant for the n-dimensional Hausdorff-Young
/// inequality `||f^||_q <= C ||f||_p` under the symmetric Fourier
/// normalization `f^(w) = (2 pi)^(-n/2) integral f(x) e^(-i x.w) dx`:
/// `C = p^(n/2p) / q^(n/2q) * (2 pi)^(n/2q - n/2p)`.
pub fn beckner_babenko(p: f64, q: f64, n: usize) -> f64 {
    let nf = n as f64;
    p.powf(nf / (2.0 * p)) / q.powf(nf / (2.0 * q))
        * (2.0 * PI).powf(nf / (2.0 * q) - nf / (2.0 * p))
}

/// Sharp constant `(p lambda_min)^(sum_k/2)` of the weighted L^p -> L^q
/// Hausdorff-Young inequality over a correlated block Gaussian.
pub fn pq_hy(p: f64, lambda_min: f64, sum_k: usize) -> f64 {
    (p * lambda_min).powf(sum_k as f64 / 2.0)
}

/// Best constant of the rho-correlated Hausdorff-Young inequality over
/// R^n x R^n:
/// `C = (p(1-rho))^(n - n/q) / (q(1+rho))^(n/q) / (2 pi sqrt(1-rho^2))^(n/p - n/q)`.
pub fn rho_hy(p: f64, q: f64, rho: f64, n: usize) -> f64 {
    let nf = n as f64;
    (p * (1.0 - rho)).powf(nf - nf / q)
        / (q * (1.0 + rho)).powf(nf / q)
        / (2.0 * PI * (1.0 - rho * rho).sqrt()).powf(nf / p - nf / q)
}

/// Moment-comparison constant for products of homogeneous chaoses proved
/// through complex hypercontractivity:
/// `max{1/(p lambda_min - 1), q lambda_max - 1}^(sum_d/2)`.
pub fn chaos_complex(p: f64, q: f64, lambda_min: f64, lambda_max: f64, sum_d: u32) -> f64 {
    let base = (1.0 / (p * lambda_min - 1.0)).max(q * lambda_max - 1.0);
    base.powf(sum_d as f64 / 2.0)
}

/// Moment-comparison constant from real hypercontractivity:
/// `((q lambda_min - 1)/(p lambda_min - 1))^(sum_d/2)`.
pub fn chaos_real(p: f64, q: f64, lambda_min: f64, sum_d: u32) -> f64 {
    ((q * lambda_min - 1.0) / (p * lambda_min - 1.0)).powf(sum_d as f64 / 2.0)
}

/// Constant of the correlated log-Sobolev inequality,
/// `p^2 lambda_min / (2 (p lambda_min - 1))`.
///
/// At p = 2 on a standard Gaussian this is the classical constant 2 of
/// `Ent(f^2) <= 2 E|grad f|^2`, which also forces the denominator to be
/// `p lambda_min - 1` rather than its square root: the two expressions
/// agree only at p lambda_min = 2, and the derivative computation behind
/// the inequality (d/dr of 1/sqrt(r lambda - 1) against the norm exponent)
/// produces `r^2 lambda / (2 (r lambda - 1))` at r = p.
pub fn log_sobolev(p: f64, lambda_min: f64) -> f64 {
    p * p * lambda_min / (2.0 * (p * lambda_min - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beckner_babenko_is_one_on_the_diagonal() {
        for n in [1usize, 2, 5] {
            assert_relative_eq!(beckner_babenko(2.0, 2.0, n), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn beckner_babenko_matches_the_printed_form() {
        // p = 1.5, q = 3, n = 1: 1.5^(1/3) / 3^(1/6) * (2 pi)^(1/6 - 1/3).
        let direct = 1.5f64.powf(1.0 / 3.0) / 3.0f64.powf(1.0 / 6.0)
            * (2.0 * PI).powf(1.0 / 6.0 - 1.0 / 3.0);
        assert_relative_eq!(beckner_babenko(1.5, 3.0, 1), direct, epsilon = 1e-15);
    }

    #[test]
    fn rho_constant_at_zero_is_the_two_function_babenko_constant() {
        // At rho = 0 the admissibility constraint becomes 1/p + 1/q = 1 and
        // the pair (f, g) lives on R^(2n), so the constant must equal the
        // Babenko-Beckner constant in doubled dimension (the square of the
        // one-function constant), not the n-dimensional constant itself.
        for (p, n) in [(1.5f64, 1usize), (2.0, 1), (1.25, 2), (4.0, 3)] {
            let q = p / (p - 1.0);
            if q < p {
                continue;
            }
            let c = rho_hy(p, q, 0.0, n);
            assert_relative_eq!(c, beckner_babenko(p, q, 2 * n), epsilon = 1e-12);
            assert_relative_eq!(c, beckner_babenko(p, q, n).powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn log_sobolev_recovers_the_classical_constant() {
        assert_relative_eq!(log_sobolev(2.0, 1.0), 2.0, epsilon = 1e-15);
        // Scaling check: doubling lambda_min at fixed p lambda_min = 2 halves p.
        assert_relative_eq!(log_sobolev(1.0, 2.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn chaos_constants_spot_values() {
        // p = 2, q = 4, lambda = 1: max{1, 3}^(d/2).
        assert_relative_eq!(chaos_complex(2.0, 4.0, 1.0, 1.0, 2), 3.0, epsilon = 1e-15);
        assert_relative_eq!(chaos_real(2.0, 4.0, 1.0, 2), 3.0, epsilon = 1e-15);
        // Equal exponents: both bounds collapse to ratio-1 comparisons.
        assert_relative_eq!(chaos_real(3.0, 3.0, 0.7, 6), 1.0, epsilon = 1e-15);
        // Complex variant keeps the larger of the two branches.
        let c = chaos_complex(1.25, 2.0, 1.0, 1.0, 4);
        assert_relative_eq!(c, 4.0f64.powf(2.0), epsilon = 1e-12);
    }

    #[test]
    fn pq_constant_is_the_gaussian_equality_value() {
        assert_relative_eq!(pq_hy(2.0, 0.7, 2), 1.4, epsilon = 1e-15);
        assert_relative_eq!(pq_hy(3.0, 1.0, 0), 1.0, epsilon = 1e-15);
    }
}
