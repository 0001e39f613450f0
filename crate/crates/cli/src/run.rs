//! Subcommand execution: validate the config, dispatch to the library,
//! and assemble the report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hypergauss_core::sharp;
use hypergauss_core::{
    certify_monotone, check_complex_local, check_correlated_r_bound, check_fb_complex_local,
    check_fb_real_local, check_gaussian_jensen, check_imaginary_sandwich, check_real_local,
    verify_chaos_moments, verify_complex_hc, verify_hausdorff_young, verify_log_sobolev,
    verify_noisy_borell, verify_norm_monotonicity, verify_real_hc, verify_rho_hy,
    verify_weighted_hy, BlockCovariance, Budget, ChaosVariant, Comparison, FlowProblem, FlowSpec,
    FunctionPair, GridSpec, InnerFn, OuterFn, TestFunction,
};
use rayon::prelude::*;

use crate::config::{usage, CovSource, ExperimentConfig, FunctionSpec, ModeSpec, UResult, Usage};
use crate::digest;
use crate::report::{summarize, Record, Report, VERSION};

pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub nodes: Option<usize>,
    pub jobs: Option<usize>,
    pub tolerance: Option<f64>,
}

pub fn execute(subcommand: &str, config_path: &Path, ov: &Overrides) -> UResult<(Report, i32)> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if cfg.command != subcommand {
        return usage(format!(
            "command: config says '{}' but the '{subcommand}' subcommand was invoked",
            cfg.command
        ));
    }
    // Flags and HYPERGAUSS_SEED override the file; the digest keys the
    // effective config, not the file as written.
    if ov.seed.is_some() {
        cfg.seed = ov.seed;
    }
    if ov.samples.is_some() {
        cfg.samples = ov.samples;
    }
    if ov.nodes.is_some() {
        cfg.nodes = ov.nodes;
    }
    if ov.tolerance.is_some() {
        cfg.tolerance = ov.tolerance;
    }

    let value = serde_json::to_value(&cfg).map_err(|e| Usage(format!("config: {e}")))?;
    let digest = digest::digest_value(&value);
    let base: PathBuf = config_path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();

    let started = Instant::now();
    let records = in_pool(ov.jobs, || dispatch(&cfg, &base))?;
    let wall_ms = started.elapsed().as_millis() as u64;

    let (verdict, code) = summarize(&records, cfg.tolerance);
    let report = Report {
        digest,
        version: VERSION.to_string(),
        command: cfg.command.clone(),
        records,
        wall_ms,
        verdict,
    };
    Ok((report, code))
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

fn dispatch(cfg: &ExperimentConfig, base: &Path) -> UResult<Vec<Record>> {
    match cfg.command.as_str() {
        "check-local" => check_local(cfg, base).map(|r| vec![r]),
        "verify-global" => verify_global(cfg, base),
        "flow" => flow(cfg, base).map(|r| vec![r]),
        "constants" => constants(cfg, base).map(|r| vec![r]),
        "suite" => suite(cfg, base),
        other => usage(format!("command: unknown command '{other}'")),
    }
}

fn core_err(context: &str) -> impl Fn(hypergauss_core::CoreError) -> Usage + '_ {
    move |e| Usage(format!("{context}: {e}"))
}

fn budget_of(cfg: &ExperimentConfig) -> Budget {
    let d = Budget::default();
    Budget {
        nodes: cfg.nodes.unwrap_or(d.nodes),
        mc_samples: cfg.samples.unwrap_or(d.mc_samples),
        seed: cfg.seed.unwrap_or(d.seed),
    }
}

// ---------------------------------------------------------------------------
// check-local
// ---------------------------------------------------------------------------

fn check_local(cfg: &ExperimentConfig, base: &Path) -> UResult<Record> {
    let kind = cfg.check.as_deref().ok_or(Usage("check: required".into()))?;
    let cov = cfg.covariance(base)?;
    let grid = GridSpec {
        seed: cfg.seed.unwrap_or(GridSpec::default().seed),
        ..GridSpec::default()
    };
    let report = match kind {
        "complex" => check_complex_local(&cfg.hyper_params()?, &cov),
        "sandwich" => check_imaginary_sandwich(&cfg.hyper_params()?, &cov),
        "real" => check_real_local(&cfg.hyper_params()?, &cov, cfg.direction()?),
        "pair-complex" => {
            let pair = product_power_pair(cfg)?;
            check_fb_complex_local(&pair, &cfg.hyper_params()?, &cov, &grid)
        }
        "pair-real" => {
            let pair = product_power_pair(cfg)?;
            check_fb_real_local(&pair, &cfg.hyper_params()?, &cov, &grid, cfg.direction()?)
        }
        "jensen" => {
            let inner = InnerFn::ProductPowers { powers: cfg.exponents()? };
            let r = match cfg.mode()? {
                hypergauss_core::Mode::Real { r } => r,
                _ => return usage("mode: jensen takes real multipliers"),
            };
            check_gaussian_jensen(&inner, &cov, &r, &grid, cfg.direction()?)
        }
        "r-bound" => check_correlated_r_bound(
            cfg.scalar_p()?,
            cfg.scalar_q()?,
            cfg.rho.ok_or(Usage("rho: required for r-bound".into()))?,
            &cov,
        ),
        other => return usage(format!("check: unknown kind '{other}'")),
    }
    .map_err(core_err("check"))?;
    let label = cfg.label.clone().unwrap_or_else(|| kind.to_string());
    Ok(Record::Condition { label, report })
}

fn product_power_pair(cfg: &ExperimentConfig) -> UResult<FunctionPair> {
    FunctionPair::new(
        OuterFn::Power { alpha: cfg.scalar_alpha()? },
        InnerFn::ProductPowers { powers: cfg.exponents()? },
    )
    .map_err(core_err("pair"))
}

// ---------------------------------------------------------------------------
// verify-global
// ---------------------------------------------------------------------------

fn verify_global(cfg: &ExperimentConfig, base: &Path) -> UResult<Vec<Record>> {
    let kind = cfg.verify.as_deref().ok_or(Usage("verify: required".into()))?;
    let cov = match &cfg.covariance {
        Some(src) => Some(src.load(base)?),
        None => None,
    };
    let tuples = cfg.function_tuples()?;
    let budget = budget_of(cfg);
    // Tuples run concurrently; the indexed collect keeps config order.
    let comparisons: Vec<UResult<Comparison>> = tuples
        .par_iter()
        .enumerate()
        .map(|(i, tuple)| verify_one(kind, cfg, cov.as_ref(), i, tuple, &budget))
        .collect();
    comparisons
        .into_iter()
        .map(|c| c.map(|comparison| Record::Comparison { comparison }))
        .collect()
}

fn want_cov<'c>(cov: Option<&'c BlockCovariance>) -> UResult<&'c BlockCovariance> {
    cov.ok_or(Usage("covariance: required".into()))
}

fn tuple_polys(i: usize, tuple: &[FunctionSpec]) -> UResult<Vec<hypergauss_core::HermitePoly>> {
    tuple
        .iter()
        .enumerate()
        .map(|(j, f)| f.polynomial(&format!("functions[{i}][{j}]")))
        .collect()
}

fn tuple_tfs(i: usize, tuple: &[FunctionSpec]) -> UResult<Vec<TestFunction>> {
    tuple
        .iter()
        .enumerate()
        .map(|(j, f)| f.test_function(&format!("functions[{i}][{j}]")))
        .collect()
}

fn tuple_ab(i: usize, tuple: &[FunctionSpec]) -> UResult<(TestFunction, TestFunction)> {
    if tuple.len() != 2 {
        return usage(format!("functions[{i}]: exactly two functions expected"));
    }
    Ok((
        tuple[0].test_function(&format!("functions[{i}][0]"))?,
        tuple[1].test_function(&format!("functions[{i}][1]"))?,
    ))
}

fn verify_one(
    kind: &str,
    cfg: &ExperimentConfig,
    cov: Option<&BlockCovariance>,
    i: usize,
    tuple: &[FunctionSpec],
    budget: &Budget,
) -> UResult<Comparison> {
    let ctx = "verify";
    match kind {
        "complex-hc" => {
            let fs = tuple_polys(i, tuple)?;
            verify_complex_hc(&fs, &cfg.hyper_params()?, want_cov(cov)?, budget)
        }
        "real-hc" => {
            let fs = tuple_tfs(i, tuple)?;
            verify_real_hc(&fs, &cfg.hyper_params()?, want_cov(cov)?, cfg.direction()?, budget)
        }
        "weighted-hy" => {
            let gs = tuple_tfs(i, tuple)?;
            verify_weighted_hy(&gs, cfg.scalar_p()?, cfg.scalar_q()?, want_cov(cov)?, budget)
        }
        "rho-hy" => {
            let (f, g) = tuple_ab(i, tuple)?;
            let rho = cfg.rho.ok_or(Usage("rho: required for rho-hy".into()))?;
            verify_rho_hy(&f, &g, rho, cfg.scalar_p()?, cfg.scalar_q()?, budget)
        }
        "log-sobolev" => {
            let fs = tuple_tfs(i, tuple)?;
            verify_log_sobolev(&fs, cfg.scalar_p()?, want_cov(cov)?, budget)
        }
        "chaos-complex" | "chaos-real" => {
            let fs = tuple_polys(i, tuple)?;
            let variant = if kind == "chaos-complex" {
                ChaosVariant::Complex
            } else {
                ChaosVariant::Real
            };
            verify_chaos_moments(
                &fs,
                cfg.scalar_p()?,
                cfg.scalar_q()?,
                want_cov(cov)?,
                variant,
                budget,
            )
        }
        "noisy-borell" => {
            let (a, b) = tuple_ab(i, tuple)?;
            let r1 = cfg.r1.ok_or(Usage("r1: required for noisy-borell".into()))?;
            let r2 = cfg.r2.ok_or(Usage("r2: required for noisy-borell".into()))?;
            let s = cfg.s.ok_or(Usage("s: required for noisy-borell".into()))?;
            verify_noisy_borell(&a, &b, r1, r2, s, budget)
        }
        "hausdorff-young" => {
            let gs = tuple_tfs(i, tuple)?;
            verify_hausdorff_young(&gs, &cfg.exponents()?, cfg.scalar_alpha()?, want_cov(cov)?, budget)
        }
        "norm-monotonicity" => {
            let fs = tuple_polys(i, tuple)?;
            verify_norm_monotonicity(&fs, &cfg.hyper_params()?, want_cov(cov)?, budget)
        }
        other => return usage(format!("verify: unknown kind '{other}'")),
    }
    .map_err(core_err(ctx))
}

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

fn flow(cfg: &ExperimentConfig, base: &Path) -> UResult<Record> {
    let kind = cfg.flow_kind.as_deref().ok_or(Usage("flow_kind: required".into()))?;
    let cov = cfg.covariance(base)?;
    let params = cfg.hyper_params()?;
    let tuples = cfg.function_tuples()?;
    if tuples.len() != 1 {
        return usage("functions: flow takes exactly one tuple");
    }
    let defaults = FlowSpec::default();
    let spec = FlowSpec {
        s_grid: cfg.s_grid.clone().unwrap_or(defaults.s_grid),
        nodes: cfg.nodes.unwrap_or(defaults.nodes),
        mc_samples: cfg.samples.unwrap_or(defaults.mc_samples),
        seed: cfg.seed.unwrap_or(defaults.seed),
    };
    let certificate = match kind {
        "real" => {
            let fs: Vec<_> = tuples[0]
                .iter()
                .enumerate()
                .map(|(j, f)| f.real_flow(&format!("functions[0][{j}]")))
                .collect::<UResult<_>>()?;
            certify_monotone(FlowProblem::Real { fs: &fs }, &params, &cov, &spec)
        }
        "complex" => {
            let fs = tuple_polys(0, &tuples[0])?;
            certify_monotone(FlowProblem::Complex { fs: &fs }, &params, &cov, &spec)
        }
        other => return usage(format!("flow_kind: unknown kind '{other}'")),
    }
    .map_err(core_err("flow"))?;
    let label = cfg.label.clone().unwrap_or_else(|| format!("{kind}-flow"));
    Ok(Record::Flow { label, certificate })
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

fn constants(cfg: &ExperimentConfig, base: &Path) -> UResult<Record> {
    let name = cfg.constant.as_deref().ok_or(Usage("constant: required".into()))?;
    // The spectrum can come from an explicit covariance or raw bounds.
    let (lmin, lmax) = match &cfg.covariance {
        Some(src) => {
            let cov = src.load(base)?;
            (Some(cov.lambda_min()), Some(cov.lambda_max()))
        }
        None => (cfg.lambda_min, cfg.lambda_max),
    };
    let need_lmin = || lmin.ok_or(Usage("lambda_min: required (or provide covariance)".into()));
    let need_n = || cfg.n.ok_or(Usage("n: required".into()));
    let value = match name {
        "beckner-babenko" => {
            sharp::beckner_babenko(cfg.scalar_p()?, cfg.scalar_q()?, need_n()?)
        }
        "pq-hy" => sharp::pq_hy(
            cfg.scalar_p()?,
            need_lmin()?,
            cfg.sum_k.ok_or(Usage("sum_k: required".into()))?,
        ),
        "rho-hy" => sharp::rho_hy(
            cfg.scalar_p()?,
            cfg.scalar_q()?,
            cfg.rho.ok_or(Usage("rho: required".into()))?,
            need_n()?,
        ),
        "chaos-complex" => sharp::chaos_complex(
            cfg.scalar_p()?,
            cfg.scalar_q()?,
            need_lmin()?,
            lmax.ok_or(Usage("lambda_max: required (or provide covariance)".into()))?,
            cfg.sum_d.ok_or(Usage("sum_d: required".into()))?,
        ),
        "chaos-real" => sharp::chaos_real(
            cfg.scalar_p()?,
            cfg.scalar_q()?,
            need_lmin()?,
            cfg.sum_d.ok_or(Usage("sum_d: required".into()))?,
        ),
        "log-sobolev" => sharp::log_sobolev(cfg.scalar_p()?, need_lmin()?),
        other => return usage(format!("constant: unknown constant '{other}'")),
    };
    let label = cfg.label.clone().unwrap_or_else(|| name.to_string());
    Ok(Record::Constant { label, name: name.to_string(), value })
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

fn suite(cfg: &ExperimentConfig, base: &Path) -> UResult<Vec<Record>> {
    let name = cfg.suite.as_deref().ok_or(Usage("suite: required".into()))?;
    if name != "paper-theorems" {
        return usage(format!("suite: unknown suite '{name}'"));
    }
    let entries = paper_theorem_entries(cfg);
    let nested: Vec<UResult<Vec<Record>>> = entries
        .par_iter()
        .map(|(label, entry)| {
            let mut records = dispatch(entry, base)
                .map_err(|e| Usage(format!("suite entry {label}: {e}")))?;
            for r in &mut records {
                r.prefix_label(label);
            }
            Ok(records)
        })
        .collect();
    let mut out = Vec::new();
    for records in nested {
        out.extend(records?);
    }
    Ok(out)
}

fn poly_text(terms: &[(&[u32], f64)]) -> String {
    let dim = terms[0].0.len();
    let mut s = format!("dim={dim} basis=hermite\n");
    for (exps, c) in terms {
        let e: Vec<String> = exps.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("{c} 0 : {}\n", e.join(" ")));
    }
    s
}

fn pair_cov(rho: f64) -> CovSource {
    CovSource::Inline {
        blocks: vec![1, 1],
        matrix: vec![vec![1.0, rho], vec![rho, 1.0]],
    }
}

fn poly_fn(terms: &[(&[u32], f64)]) -> FunctionSpec {
    FunctionSpec::Polynomial { text: poly_text(terms) }
}

fn gauss_one(t: f64) -> FunctionSpec {
    FunctionSpec::GaussPoly { text: poly_text(&[(&[0], 1.0)]), t }
}

/// The curated battery: one entry per headline theorem family, all of
/// which must hold.
fn paper_theorem_entries(parent: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let mut entries: Vec<(String, ExperimentConfig)> = Vec::new();
    let mut push = |label: &str, mut e: ExperimentConfig| {
        // Budget knobs flow down from the suite config.
        e.seed = parent.seed.or(e.seed);
        e.samples = parent.samples.or(e.samples);
        e.tolerance = parent.tolerance.or(e.tolerance);
        entries.push((label.to_string(), e));
    };

    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("complex-hc".into());
        e.covariance = Some(CovSource::Inline { blocks: vec![1], matrix: vec![vec![1.0]] });
        e.mode = Some(ModeSpec::Complex { z: vec![[0.0, 0.5f64.sqrt()]] });
        e.p = Some(vec![1.5]);
        e.alpha = Some(2.0);
        e.functions = Some(vec![vec![poly_fn(&[
            (&[0], 1.0),
            (&[1], 0.6),
            (&[2], 0.25),
            (&[3], -0.1),
        ])]]);
        push("beckner-point", e);
    }
    {
        // q solves 1/(p lambda_min) + 1/(q lambda_max) = 1 at rho = 0.3.
        let t = 2.0 * 0.7;
        let q = 1.0 / (1.3 * (1.0 - 1.0 / t));
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("weighted-hy".into());
        e.covariance = Some(pair_cov(0.3));
        e.p = Some(vec![2.0]);
        e.q = Some(q);
        e.functions = Some(vec![vec![gauss_one(t), gauss_one(t)]]);
        push("weighted-sharp", e);
    }
    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("rho-hy".into());
        e.rho = Some(0.0);
        e.p = Some(vec![1.5]);
        e.q = Some(3.0);
        e.functions = Some(vec![vec![gauss_one(1.5), gauss_one(1.5)]]);
        push("zero-correlation", e);
    }
    {
        let rho = 0.4;
        let s = 2.0 * (1.0 - rho);
        let q = 1.0 / ((1.0 + rho) * (1.0 - 1.0 / s));
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("rho-hy".into());
        e.rho = Some(rho);
        e.p = Some(vec![2.0]);
        e.q = Some(q);
        e.functions = Some(vec![vec![gauss_one(s), gauss_one(s)]]);
        push("correlated-two-function", e);
    }
    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("real-hc".into());
        e.direction = Some(hypergauss_core::Direction::Forward);
        e.covariance = Some(pair_cov(0.3));
        e.mode = Some(ModeSpec::Real { r: vec![0.2, -0.1] });
        e.p = Some(vec![2.0, 2.0]);
        e.alpha = Some(1.5);
        e.functions = Some(vec![vec![
            FunctionSpec::ExpLinear { a: vec![0.4], c: 1.0 },
            FunctionSpec::ExpLinear { a: vec![-0.2], c: 1.2 },
        ]]);
        push("forward-real", e);
    }
    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("real-hc".into());
        e.direction = Some(hypergauss_core::Direction::Reverse);
        e.covariance = Some(pair_cov(0.3));
        e.mode = Some(ModeSpec::Real { r: vec![0.0, 0.0] });
        e.p = Some(vec![0.5, 0.5]);
        e.alpha = Some(0.7);
        e.functions = Some(vec![vec![
            FunctionSpec::ExpLinear { a: vec![0.3], c: 1.0 },
            FunctionSpec::ExpLinear { a: vec![-0.4], c: 0.9 },
        ]]);
        push("reverse-real", e);
    }
    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("log-sobolev".into());
        e.covariance = Some(pair_cov(0.3));
        e.p = Some(vec![2.0]);
        e.functions = Some(vec![vec![
            FunctionSpec::ExpLinear { a: vec![0.3], c: 1.0 },
            FunctionSpec::ExpLinear { a: vec![-0.5], c: 0.8 },
        ]]);
        push("log-sobolev", e);
    }
    for variant in ["chaos-complex", "chaos-real"] {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some(variant.into());
        e.covariance = Some(pair_cov(0.5));
        e.p = Some(vec![2.5]);
        e.q = Some(4.0);
        e.functions = Some(vec![vec![poly_fn(&[(&[1], 1.0)]), poly_fn(&[(&[2], 1.0)])]]);
        push(variant, e.clone());
    }
    {
        let mut e = ExperimentConfig::empty("verify-global");
        e.verify = Some("noisy-borell".into());
        e.r1 = Some(0.4);
        e.r2 = Some(-0.3);
        e.s = Some(0.6);
        e.functions = Some(vec![vec![
            FunctionSpec::Halfspace { threshold: 0.3 },
            FunctionSpec::Halfspace { threshold: -0.5 },
        ]]);
        push("noisy-borell-halflines", e);
    }
    {
        let mut e = ExperimentConfig::empty("flow");
        e.flow_kind = Some("real".into());
        e.covariance = Some(CovSource::Inline {
            blocks: vec![1, 1],
            matrix: vec![vec![1.0, 0.25], vec![0.25, 1.0]],
        });
        e.mode = Some(ModeSpec::Real { r: vec![0.1, -0.2] });
        e.p = Some(vec![0.6, 0.7]);
        e.alpha = Some(0.8);
        e.nodes = Some(24);
        e.functions = Some(vec![vec![
            FunctionSpec::GaussCdf { lo: 0.2, hi: 0.9, theta: 0.3, scale: 1.0 },
            FunctionSpec::GaussCdf { lo: 0.3, hi: 1.0, theta: -0.2, scale: 0.8 },
        ]]);
        push("flow-real", e);
    }
    {
        let mut e = ExperimentConfig::empty("flow");
        e.flow_kind = Some("complex".into());
        e.covariance = Some(CovSource::Inline { blocks: vec![1], matrix: vec![vec![1.0]] });
        // 85% of the sharp noise radius for p = 1.5, alpha = 2.
        let sharp_s = (0.5f64 / 2.0).sqrt();
        e.mode = Some(ModeSpec::Complex { z: vec![[0.0, 0.85 * sharp_s]] });
        e.p = Some(vec![1.5]);
        e.alpha = Some(2.0);
        e.functions = Some(vec![vec![poly_fn(&[(&[0], 1.0), (&[1], 0.5), (&[2], 0.2)])]]);
        push("flow-complex", e);
    }
    {
        // Sharp correlated point: flat sandwich margins.
        let p: f64 = 2.0;
        let rho = 0.3;
        let s = (p * (1.0 - rho) - 1.0).sqrt();
        let q = p * (1.0 - rho) / ((1.0 + rho) * (p * (1.0 - rho) - 1.0));
        let mut e = ExperimentConfig::empty("check-local");
        e.check = Some("sandwich".into());
        e.covariance = Some(CovSource::Inline {
            blocks: vec![2, 2],
            matrix: vec![
                vec![1.0, 0.0, rho, 0.0],
                vec![0.0, 1.0, 0.0, rho],
                vec![rho, 0.0, 1.0, 0.0],
                vec![0.0, rho, 0.0, 1.0],
            ],
        });
        e.mode = Some(ModeSpec::Imaginary { s: vec![s, s] });
        e.p = Some(vec![p, p]);
        e.alpha = Some(q / p);
        push("sandwich-sharp-point", e);
    }
    {
        let mut e = ExperimentConfig::empty("constants");
        e.constant = Some("beckner-babenko".into());
        e.p = Some(vec![1.5]);
        e.q = Some(3.0);
        e.n = Some(1);
        push("babenko-constant", e);
    }
    entries
}
