//! Randomized laws: algebraic identities hold for every drawn input, and
//! the statistical contracts (Monte Carlo agreement) run over a fixed
//! seeded corpus so failures reproduce bit-for-bit.

use hypergauss_core::quadrature::gauss_hermite;
use hypergauss_core::{
    certify_monotone, check_complex_local, check_fb_complex_local, check_fb_real_local,
    check_imaginary_sandwich, check_real_local, mehler_kernel_apply, mehler_transform,
    noise_operator, random_block_covariance, random_exp_linear, random_falsification_config,
    random_hermite_poly, verify_complex_hc, verify_norm_monotonicity, verify_real_hc, Basis,
    BlockCovariance, Budget, CounterRng, Direction, FlowProblem, FlowSpec, FunctionPair,
    GridSpec, HermitePoly, HyperParams, InnerFn, Matrix, Method, Mode, MultiIndex, OuterFn,
    RealFlowFn, TestFunction, Verdict, DEFAULT_DEGREE_CAP,
};
use num_complex::Complex64;
use proptest::prelude::*;

const COEFF_TOL: f64 = 1e-12;
const EVAL_TOL: f64 = 1e-10;
const KERNEL_TOL: f64 = 1e-8;
const DIFF_TOL: f64 = 1e-5;
const MARGIN_TOL: f64 = 1e-9;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random real-coefficient polynomial in the monomial basis, constant term
/// bounded away from zero so products and powers stay well conditioned.
fn random_real_poly(dim: usize, max_degree: u32, seed: u64) -> HermitePoly {
    let rng = CounterRng::new(seed);
    let mut terms = vec![(
        MultiIndex::new(vec![0; dim]),
        c64(rng.uniform_in(0, 0.5, 1.5), 0.0),
    )];
    let extra = 2 + (rng.bits(1) % 4) as usize;
    for t in 0..extra {
        let mut exps = vec![0u32; dim];
        let mut left = max_degree;
        for i in 0..dim {
            let d = (rng.bits(100 + 7 * t as u64 + i as u64) % (left as u64 + 1)) as u32;
            exps[i] = d;
            left -= d;
        }
        let coeff = c64(rng.uniform_in(200 + t as u64, -1.0, 1.0), 0.0);
        terms.push((MultiIndex::new(exps), coeff));
    }
    HermitePoly::new(dim, Basis::Monomial, terms).unwrap()
}

fn max_coeff_diff(a: &HermitePoly, b: &HermitePoly) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (idx, ca) in a.terms() {
        scale = scale.max(ca.norm());
        worst = worst.max((ca - b.coeff(idx)).norm());
    }
    for (idx, cb) in b.terms() {
        scale = scale.max(cb.norm());
        worst = worst.max((cb - a.coeff(idx)).norm());
    }
    worst / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn basis_conversion_round_trips(seed in any::<u64>(), dim in 1usize..=3) {
        let f = random_hermite_poly(dim, 6, seed).unwrap();
        let back = f
            .to_monomial(DEFAULT_DEGREE_CAP)
            .unwrap()
            .to_hermite(DEFAULT_DEGREE_CAP)
            .unwrap();
        prop_assert!(max_coeff_diff(&f, &back) < COEFF_TOL);
    }

    #[test]
    fn text_form_round_trips_polynomials(seed in any::<u64>(), dim in 1usize..=3) {
        let f = random_hermite_poly(dim, 6, seed).unwrap();
        let back = HermitePoly::from_text(&f.to_text()).unwrap();
        prop_assert_eq!(f.dim(), back.dim());
        prop_assert_eq!(f.basis(), back.basis());
        prop_assert!(max_coeff_diff(&f, &back) == 0.0);
    }

    #[test]
    fn text_form_round_trips_covariances(seed in any::<u64>(), two in any::<bool>()) {
        let sizes: &[usize] = if two { &[1, 2] } else { &[2, 1, 1] };
        let cov = random_block_covariance(sizes, seed).unwrap();
        let back = BlockCovariance::from_text(&cov.to_text()).unwrap();
        prop_assert_eq!(cov.block_sizes(), back.block_sizes());
        let (a, b) = (cov.matrix(), back.matrix());
        for i in 0..a.n_rows() {
            for j in 0..a.n_cols() {
                prop_assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_evaluate_pointwise(fs in any::<u64>(), gs in any::<u64>(), xs in any::<u64>()) {
        let dim = 1 + (xs % 2) as usize;
        let f = random_hermite_poly(dim, 4, fs).unwrap();
        let g = random_hermite_poly(dim, 4, gs).unwrap();
        let fg = f.multiply(&g, DEFAULT_DEGREE_CAP).unwrap();
        let rng = CounterRng::new(xs);
        let x: Vec<Complex64> = (0..dim)
            .map(|i| c64(rng.uniform_in(2 * i as u64, -2.0, 2.0), rng.uniform_in(2 * i as u64 + 1, -1.0, 1.0)))
            .collect();
        let lhs = fg.evaluate(&x).unwrap();
        let rhs = f.evaluate(&x).unwrap() * g.evaluate(&x).unwrap();
        prop_assert!((lhs - rhs).norm() <= EVAL_TOL * (1.0 + rhs.norm()));
    }

    #[test]
    fn generator_has_hermite_eigenvectors(seed in any::<u64>(), dim in 1usize..=3) {
        let rng = CounterRng::new(seed);
        let mut exps = vec![0u32; dim];
        let mut left = 8u32;
        for i in 0..dim {
            let d = (rng.bits(i as u64) % (left as u64 + 1)) as u32;
            exps[i] = d;
            left -= d;
        }
        let beta = MultiIndex::new(exps);
        let order: u32 = beta.exps().iter().sum();
        // hermite_basis expands into monomials; fold back before applying
        // the generator, which acts diagonally on Hermite coefficients.
        let h = HermitePoly::hermite_basis(&beta, 16)
            .unwrap()
            .to_hermite(DEFAULT_DEGREE_CAP)
            .unwrap();
        let lh = h.ou_generator().unwrap();
        let expected = h.scaled(c64(-(order as f64), 0.0));
        prop_assert!(max_coeff_diff(&lh, &expected) < COEFF_TOL);
    }

    #[test]
    fn generator_matches_finite_differences(seed in any::<u64>()) {
        // (Laplacian - x . grad) f by central differences against the
        // exact coefficient-level generator.
        let dim = 1 + (seed % 2) as usize;
        let f = random_real_poly(dim, 4, seed);
        let lf = f.to_hermite(DEFAULT_DEGREE_CAP).unwrap().ou_generator().unwrap();
        let rng = CounterRng::new(seed ^ 0xD1FF);
        let x: Vec<f64> = (0..dim).map(|i| rng.uniform_in(i as u64, -2.0, 2.0)).collect();
        let h = 1e-4;
        let at = |y: &[f64]| f.evaluate_real(y).unwrap().re;
        let mut num = 0.0;
        for i in 0..dim {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            num += (at(&up) - 2.0 * at(&x) + at(&dn)) / (h * h);
            num -= x[i] * (at(&up) - at(&dn)) / (2.0 * h);
        }
        let exact = lf.evaluate_real(&x).unwrap().re;
        prop_assert!((num - exact).abs() <= DIFF_TOL * (1.0 + exact.abs()));
    }

    #[test]
    fn mehler_transform_is_a_semigroup(seed in any::<u64>()) {
        let rng = CounterRng::new(seed);
        let z = c64(rng.uniform_in(0, -1.1, 1.1), rng.uniform_in(1, -1.1, 1.1));
        let w = c64(rng.uniform_in(2, -1.1, 1.1), rng.uniform_in(3, -1.1, 1.1));
        let f = random_hermite_poly(1 + (seed % 2) as usize, 5, seed).unwrap();
        let two_step = mehler_transform(&mehler_transform(&f, w).unwrap(), z).unwrap();
        let one_step = mehler_transform(&f, z * w).unwrap();
        prop_assert!(max_coeff_diff(&two_step, &one_step) < COEFF_TOL);
    }

    #[test]
    fn factor_reproduces_the_covariance(seed in any::<u64>(), pick in 0usize..3) {
        let sizes: &[usize] = [&[1usize, 1][..], &[2, 1][..], &[1, 1, 2][..]][pick];
        let cov = random_block_covariance(sizes, seed).unwrap();
        let a = cov.cholesky_factor();
        let prod = a.matmul(&a.transpose());
        let m = cov.matrix();
        let mut worst: f64 = 0.0;
        for i in 0..prod.n_rows() {
            for j in 0..prod.n_cols() {
                worst = worst.max((prod.get(i, j) - m.get(i, j)).abs());
            }
        }
        prop_assert!(worst < 1e-10);
    }

    #[test]
    fn moments_are_relabeling_invariant(seed in any::<u64>(), swap in 0usize..3) {
        // Permuting the blocks together with the covariance leaves every
        // mixed moment unchanged.
        let cov = random_block_covariance(&[1, 1, 1], seed).unwrap();
        let perm: [usize; 3] = [[1, 0, 2], [2, 1, 0], [0, 2, 1]][swap];
        let m = cov.matrix();
        let mut pm = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                pm.set(i, j, m.get(perm[i], perm[j]));
            }
        }
        let pcov = BlockCovariance::new(vec![1, 1, 1], pm).unwrap();
        let rng = CounterRng::new(seed ^ 0x5EED);
        let exps: Vec<u32> = (0..3).map(|i| (rng.bits(i) % 3) as u32).collect();
        let pexps: Vec<u32> = perm.iter().map(|&i| exps[i]).collect();
        let direct = cov.wick_moment(&exps).unwrap();
        let relabeled = pcov.wick_moment(&pexps).unwrap();
        prop_assert!((direct - relabeled).abs() <= COEFF_TOL * (1.0 + direct.abs()));

        let polys: Vec<HermitePoly> =
            (0..3).map(|i| random_real_poly(1, 3, seed.wrapping_add(i))).collect();
        let ppolys: Vec<HermitePoly> = perm.iter().map(|&i| polys[i].clone()).collect();
        let ev = cov.expect_product_exact(&polys).unwrap();
        let pev = pcov.expect_product_exact(&ppolys).unwrap();
        prop_assert!((ev - pev).norm() <= COEFF_TOL * (1.0 + ev.norm()));
    }

    #[test]
    fn low_node_quadrature_is_exact_on_low_degree(seed in any::<u64>(), d in 2usize..=7) {
        // d+1 Gauss-Hermite nodes integrate polynomials up to degree 2d+1.
        let f = random_real_poly(1, (2 * d + 1) as u32, seed);
        let cov = random_block_covariance(&[1], seed).unwrap();
        let exact = cov.expect_product_exact(std::slice::from_ref(&f)).unwrap().re;
        let quad = cov
            .expect_quadrature(|x| f.evaluate_real(x).unwrap().re, d + 1)
            .unwrap();
        prop_assert!((exact - quad).abs() <= 1e-10 * (1.0 + exact.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn kernel_integral_matches_the_coefficient_transform(seed in any::<u64>(), pick in 0usize..3) {
        let z = [c64(0.3, 0.0), c64(0.0, 0.7), c64(0.4, 0.4)][pick];
        let f = random_hermite_poly(1, 4, seed).unwrap();
        let rng = CounterRng::new(seed ^ 0xFACE);
        let x = [rng.uniform_in(0, -2.0, 2.0)];
        let by_kernel =
            mehler_kernel_apply(&TestFunction::Polynomial(f.clone()), z, &x, 400_000).unwrap();
        let by_coeffs = mehler_transform(&f, z)
            .unwrap()
            .evaluate(&[c64(x[0], 0.0)])
            .unwrap();
        prop_assert!((by_kernel - by_coeffs).norm() < KERNEL_TOL * (1.0 + by_coeffs.norm()));
    }

    #[test]
    fn noise_smoothing_contracts_every_lp_norm(seed in any::<u64>()) {
        // T_r is an average over a probability kernel, so Jensen gives
        // |T_r f|_p <= |f|_p for p >= 1; checked by matched quadrature.
        let rng = CounterRng::new(seed);
        let r = rng.uniform_in(0, -0.95, 0.95);
        let p = rng.uniform_in(1, 1.0, 4.0);
        let f = TestFunction::ShiftedPositive {
            h: random_hermite_poly(1, 3, seed ^ 0xA11).unwrap(),
            delta: rng.uniform_in(2, 0.1, 2.0),
        };
        let tf = noise_operator(&f, r).unwrap();
        let rule = gauss_hermite(96);
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            lhs += w * tf.evaluate_real(&[x]).unwrap().powf(p);
            rhs += w * f.evaluate(&[x]).unwrap().re.powf(p);
        }
        prop_assert!(lhs <= rhs * (1.0 + 1e-8), "|T_r f|_p^p = {lhs} vs |f|_p^p = {rhs}");
    }

    #[test]
    fn sandwich_check_agrees_with_the_complex_form(seed in any::<u64>()) {
        let rng = CounterRng::new(seed);
        let n = 1 + (rng.bits(0) % 2) as usize;
        let cov = random_block_covariance(&vec![1; n], seed).unwrap();
        let s: Vec<f64> = (0..n).map(|j| rng.uniform_in(10 + j as u64, -0.95, 0.95)).collect();
        let p: Vec<f64> = (0..n).map(|j| rng.uniform_in(20 + j as u64, 0.5, 3.0)).collect();
        let alpha = rng.uniform_in(30, 1.0, 2.5);
        let z = s.iter().map(|&sj| c64(0.0, sj)).collect();
        let via_sandwich = check_imaginary_sandwich(
            &HyperParams::new(Mode::Imaginary { s }, p.clone(), alpha).unwrap(),
            &cov,
        )
        .unwrap();
        let via_complex = check_complex_local(
            &HyperParams::new(Mode::Complex { z }, p, alpha).unwrap(),
            &cov,
        )
        .unwrap();
        if via_sandwich.margin.abs() > 1e-10 && via_complex.margin.abs() > 1e-10 {
            prop_assert_eq!(via_sandwich.holds, via_complex.holds);
            prop_assert_eq!(via_sandwich.margin > 0.0, via_complex.margin > 0.0);
        }
    }

    #[test]
    fn pair_checkers_specialize_to_the_single_function_forms(seed in any::<u64>(), forward in any::<bool>()) {
        let rng = CounterRng::new(seed);
        let cov = random_block_covariance(&[1, 1], seed).unwrap();
        let p = vec![rng.uniform_in(0, 0.6, 3.0), rng.uniform_in(1, 0.6, 3.0)];
        let alpha = if forward { rng.uniform_in(2, 1.0, 2.5) } else { rng.uniform_in(2, 0.3, 1.0) };
        let pair = FunctionPair::new(
            OuterFn::Power { alpha },
            InnerFn::ProductPowers { powers: p.clone() },
        )
        .unwrap();
        let grid = GridSpec { random: 40, ..GridSpec::default() };
        if forward {
            let z = vec![
                c64(rng.uniform_in(4, -0.6, 0.6), rng.uniform_in(5, -0.6, 0.6)),
                c64(rng.uniform_in(6, -0.6, 0.6), rng.uniform_in(7, -0.6, 0.6)),
            ];
            let params = HyperParams::new(Mode::Complex { z }, p, alpha).unwrap();
            let direct = check_complex_local(&params, &cov).unwrap();
            let via_pair = check_fb_complex_local(&pair, &params, &cov, &grid).unwrap();
            prop_assert!((direct.margin - via_pair.margin).abs() <= MARGIN_TOL * (1.0 + direct.margin.abs()));
            prop_assert_eq!(direct.holds, via_pair.holds);
        } else {
            let r = vec![rng.uniform_in(4, -0.9, 0.9), rng.uniform_in(5, -0.9, 0.9)];
            let params = HyperParams::new(Mode::Real { r }, p, alpha).unwrap();
            let direct = check_real_local(&params, &cov, Direction::Reverse).unwrap();
            let via_pair =
                check_fb_real_local(&pair, &params, &cov, &grid, Direction::Reverse).unwrap();
            prop_assert!((direct.margin - via_pair.margin).abs() <= MARGIN_TOL * (1.0 + direct.margin.abs()));
            prop_assert_eq!(direct.holds, via_pair.holds);
        }
    }

    #[test]
    fn forward_margin_never_grows_with_alpha(seed in any::<u64>()) {
        let rng = CounterRng::new(seed);
        let cov = random_block_covariance(&[1, 1], seed).unwrap();
        let p = vec![rng.uniform_in(0, 0.5, 3.0), rng.uniform_in(1, 0.5, 3.0)];
        let z = vec![
            c64(rng.uniform_in(2, -0.8, 0.8), rng.uniform_in(3, -0.8, 0.8)),
            c64(rng.uniform_in(4, -0.8, 0.8), rng.uniform_in(5, -0.8, 0.8)),
        ];
        let alpha = rng.uniform_in(6, 1.0, 2.0);
        let step = rng.uniform_in(7, 0.1, 1.5);
        let lo = check_complex_local(
            &HyperParams::new(Mode::Complex { z: z.clone() }, p.clone(), alpha).unwrap(),
            &cov,
        )
        .unwrap();
        let hi = check_complex_local(
            &HyperParams::new(Mode::Complex { z }, p, alpha + step).unwrap(),
            &cov,
        )
        .unwrap();
        prop_assert!(hi.margin <= lo.margin + MARGIN_TOL * (1.0 + lo.margin.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdicts_follow_the_stderr_rule(seed in any::<u64>(), degree in 3u32..=5) {
        // Inconclusive exactly when the method is Monte Carlo and the
        // margin is inside the three-sigma band; exact and quadrature
        // verdicts are always definite.
        let cfg = random_falsification_config(seed).unwrap();
        let budget = Budget { mc_samples: 40_000, ..Budget::default() };
        let cmp = match cfg.params.mode {
            Mode::Real { .. } => {
                let fs: Vec<TestFunction> = cfg
                    .cov
                    .block_sizes()
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| random_exp_linear(k, seed.wrapping_add(j as u64)))
                    .collect();
                verify_real_hc(&fs, &cfg.params, &cfg.cov, cfg.direction, &budget).unwrap()
            }
            _ => {
                let fs: Vec<HermitePoly> = cfg
                    .cov
                    .block_sizes()
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| {
                        random_hermite_poly(k, degree, seed.wrapping_add(j as u64)).unwrap()
                    })
                    .collect();
                verify_complex_hc(&fs, &cfg.params, &cfg.cov, &budget).unwrap()
            }
        };
        match cmp.method {
            Method::Mc => {
                let se = cmp.stderr.expect("mc carries a stderr");
                prop_assert_eq!(cmp.verdict == Verdict::Inconclusive, cmp.margin.abs() < 3.0 * se);
            }
            _ => {
                prop_assert!(cmp.stderr.is_none());
                prop_assert!(cmp.verdict != Verdict::Inconclusive);
            }
        }
        let scale = cmp.lhs.abs().max(cmp.rhs.abs()).max(1.0);
        if cmp.verdict == Verdict::Holds && cmp.method != Method::Mc {
            prop_assert!(cmp.margin >= -MARGIN_TOL * scale);
        }
        if cmp.verdict == Verdict::Violated && cmp.method != Method::Mc {
            prop_assert!(cmp.margin < 0.0);
        }
    }

    #[test]
    fn real_verifier_is_degree_one_homogeneous(seed in any::<u64>()) {
        // Scaling every prefactor by t multiplies both sides by
        // t^(sum p_j), so the margin scales and the verdict is unchanged.
        let rng = CounterRng::new(seed);
        let n = 1 + (rng.bits(0) % 2) as usize;
        let cov = random_block_covariance(&vec![1; n], seed).unwrap();
        let r: Vec<f64> = (0..n).map(|j| rng.uniform_in(10 + j as u64, -0.8, 0.8)).collect();
        let p: Vec<f64> = (0..n).map(|j| rng.uniform_in(20 + j as u64, 0.5, 2.0)).collect();
        let alpha = rng.uniform_in(30, 1.0, 2.0);
        let t = rng.uniform_in(31, 0.2, 5.0);
        let params = HyperParams::new(Mode::Real { r }, p.clone(), alpha).unwrap();
        let fs: Vec<TestFunction> =
            (0..n).map(|j| random_exp_linear(1, seed.wrapping_add(j as u64))).collect();
        let scaled: Vec<TestFunction> = fs
            .iter()
            .map(|f| match f {
                TestFunction::ExpLinear { a, c } => {
                    TestFunction::ExpLinear { a: a.clone(), c: c * t }
                }
                _ => unreachable!(),
            })
            .collect();
        let budget = Budget::default();
        let base = verify_real_hc(&fs, &params, &cov, Direction::Forward, &budget).unwrap();
        let bumped = verify_real_hc(&scaled, &params, &cov, Direction::Forward, &budget).unwrap();
        let factor = t.powf(p.iter().sum::<f64>());
        prop_assert!(
            (bumped.margin - base.margin * factor).abs()
                <= MARGIN_TOL * (1.0 + (base.margin * factor).abs())
        );
        prop_assert_eq!(base.verdict, bumped.verdict);
    }

    #[test]
    fn norms_grow_with_the_outer_exponent(seed in any::<u64>()) {
        let rng = CounterRng::new(seed);
        let n = 1 + (rng.bits(0) % 2) as usize;
        let cov = random_block_covariance(&vec![1; n], seed).unwrap();
        let z: Vec<Complex64> = (0..n)
            .map(|j| c64(rng.uniform_in(10 + j as u64, -0.7, 0.7), rng.uniform_in(40 + j as u64, -0.7, 0.7)))
            .collect();
        let p: Vec<f64> = (0..n).map(|j| rng.uniform_in(20 + j as u64, 0.5, 2.5)).collect();
        let alpha = rng.uniform_in(30, 1.0, 2.5);
        let params = HyperParams::new(Mode::Complex { z }, p, alpha).unwrap();
        let fs: Vec<HermitePoly> =
            (0..n).map(|j| random_hermite_poly(1, 3, seed.wrapping_add(j as u64)).unwrap()).collect();
        let cmp = verify_norm_monotonicity(&fs, &params, &cov, &Budget::default()).unwrap();
        prop_assert!(cmp.verdict == Verdict::Holds, "margin {} note {:?}", cmp.margin, cmp.note);
    }

    #[test]
    fn constant_inputs_flow_flat(seed in any::<u64>()) {
        let rng = CounterRng::new(seed);
        let cov = BlockCovariance::identity(vec![1]).unwrap();
        let p = vec![rng.uniform_in(0, 0.3, 0.9)];
        let r = vec![rng.uniform_in(1, -0.5, 0.5)];
        let alpha = rng.uniform_in(2, 0.5, 1.0);
        let params = HyperParams::new(Mode::Real { r }, p, alpha).unwrap();
        let fs = vec![RealFlowFn::Constant { value: rng.uniform_in(3, 0.4, 2.0) }];
        let spec = FlowSpec { nodes: 32, ..FlowSpec::default() };
        let cert = certify_monotone(FlowProblem::Real { fs: &fs }, &params, &cov, &spec).unwrap();
        let first = cert.values[0];
        for &v in &cert.values {
            prop_assert!((v - first).abs() <= 1e-12 * (1.0 + first.abs()));
        }
        prop_assert_eq!(cert.monotone, Verdict::Holds);
        prop_assert!(cert.endpoints_ok);
    }
}

/// Fixed-corpus statistical contract: the pairing-free Wick evaluation and
/// the seeded Monte Carlo estimator agree within three standard errors on
/// fifty monomials of total degree at most six.
#[test]
fn wick_moments_match_monte_carlo_on_a_seeded_corpus() {
    let mut checked = 0;
    for seed in 0..50u64 {
        let rng = CounterRng::new(0xBEEF_0000 + seed);
        let dim = 2 + (rng.bits(0) % 2) as usize;
        let cov = random_block_covariance(&vec![1; dim], 0xC0_0000 + seed).unwrap();
        let mut exps = vec![0u32; dim];
        let mut left = 6u32;
        for (i, e) in exps.iter_mut().enumerate() {
            *e = (rng.bits(10 + i as u64) % (left as u64 + 1)) as u32;
            left -= *e;
        }
        let wick = cov.wick_moment(&exps).unwrap();
        let est = cov.expect_mc(
            |x| x.iter().zip(&exps).map(|(&v, &e)| v.powi(e as i32)).product(),
            200_000,
            0x4D43_0000 + seed,
        );
        assert!(
            (wick - est.mean).abs() <= 3.0 * est.stderr + 1e-12,
            "seed {seed}: wick {wick} vs mc {} +- {}",
            est.mean,
            est.stderr
        );
        checked += 1;
    }
    assert_eq!(checked, 50);
}
