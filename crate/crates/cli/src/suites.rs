// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use qouhc::fock::{FockOperator, GibbsSpec};
use qouhc::hypercontractivity::{
    contraction_constant, optimal_time_estimate_with, sup_ratio_engine, theory_bounds,
    witness_bound, RatioEngine, SupConfig, TimeKind,
};
use qouhc::linalg::{diag_sandwich, CMat};
use qouhc::meixner::{
    eval_l, ln_binomial, orthogonality_sum, verify_bounds, BoundParams, BoundReport, PrecisionMode,
};
use qouhc::schatten::{
    band_element, bcl_check, power_mean_norm, real_schatten_norm, sandwich_check,
    schatten_norm_matrix, BCL_SLACK, SANDWICH_ROUNDOFF,
};
use qouhc::semigroup::{
    ccr_residual, eigen_residual, solve_params, EigenBasis, OuParams, ParamBranch,
};
use qouhc::sequences::{
    induction_bound_check, j1_auxiliary_check, main_lemma_check, poly_lemma_check,
    structure_residual, OffDiagonalCoeffs, PolyMode, TransformMode, LEMMA_REL_TOL,
};
use qouhc::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Suite, SuiteConfig};
use crate::inputs;
use crate::report::{timed, Check};

/// Largest family degree exercised by the sequence suites.
const SEQUENCE_DEGREE: usize = 10;
/// Random families per `(k, m)` in the sequence suites.
const FAMILIES: usize = 4;
/// Random sequences per exponent in the sandwich suite.
const SANDWICH_SAMPLES: usize = 100;
/// Random Hermitian operators per grid point in the convexity suite.
const BCL_SAMPLES: usize = 20;

/// Maps `f` over `items` on up to `jobs` threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("threads joined")
        .into_iter()
        .map(|r| r.expect("every item mapped"))
        .collect()
}

/// Deterministic generator for one named stream under the run seed.
fn rng_for(seed: u64, stream: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in stream {
        h = (h ^ s).wrapping_mul(0x0000_0100_0000_01b3);
    }
    rng.set_stream(h);
    rng
}

fn params_for(beta: f64) -> Result<OuParams, qouhc::Error> {
    solve_params(beta, ParamBranch::CanonicalCfl)
}

/// Work units of a suite: one per grid point plus an optional grid-free unit.
#[derive(Debug, Clone, Copy)]
enum Unit {
    Global,
    Beta(usize),
    BetaP(usize, usize),
}

fn units(suite: Suite, cfg: &SuiteConfig) -> Vec<Unit> {
    let nb = cfg.beta_grid.len();
    let np = cfg.p_grid.len();
    let betas = (0..nb).map(Unit::Beta);
    let pairs = (0..nb).flat_map(move |b| (0..np).map(move |p| Unit::BetaP(b, p)));
    match suite {
        Suite::Meixner | Suite::Semigroup => betas.collect(),
        Suite::Bounds => std::iter::once(Unit::Global).chain(betas).collect(),
        Suite::Sequences | Suite::Schatten => std::iter::once(Unit::Global).chain(pairs).collect(),
        Suite::Hypercontractivity => pairs.collect(),
        Suite::All => unreachable!("expanded before dispatch"),
    }
}

pub fn run_verify(suite: Suite, cfg: &SuiteConfig, jobs: usize) -> Vec<Check> {
    let work: Vec<(Suite, Unit)> = suite
        .expand()
        .into_iter()
        .flat_map(|s| units(s, cfg).into_iter().map(move |u| (s, u)))
        .collect();
    par_map(&work, jobs, |(s, u)| run_unit(*s, *u, cfg))
        .into_iter()
        .flatten()
        .collect()
}

fn run_unit(suite: Suite, unit: Unit, cfg: &SuiteConfig) -> Vec<Check> {
    match (suite, unit) {
        (Suite::Meixner, Unit::Beta(b)) => meixner(cfg.beta_grid[b], cfg),
        (Suite::Bounds, Unit::Global) => {
            timed(|| vec![bound_check("bounds.gamma", inputs! {}, gamma_params())])
        }
        (Suite::Bounds, Unit::Beta(b)) => bounds(cfg.beta_grid[b]),
        (Suite::Sequences, Unit::Global) => structure(cfg),
        (Suite::Sequences, Unit::BetaP(b, p)) => lemmas(cfg.beta_grid[b], cfg.p_grid[p], cfg),
        (Suite::Schatten, Unit::Global) => sandwich(cfg),
        (Suite::Schatten, Unit::BetaP(b, p)) => schatten(cfg.beta_grid[b], cfg.p_grid[p], cfg),
        (Suite::Semigroup, Unit::Beta(b)) => semigroup(cfg.beta_grid[b], cfg),
        (Suite::Hypercontractivity, Unit::BetaP(b, p)) => {
            hypercontractivity(cfg.beta_grid[b], cfg.p_grid[p], cfg)
        }
        _ => unreachable!("unit does not belong to suite"),
    }
}

fn meixner(beta: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let tol = cfg.tol("orthogonality");
    let mut out = Vec::new();
    let log_h = |k: usize| -(k as f64) * beta - (-(-beta).exp()).ln_1p();
    for m in 0..=10usize {
        for l in m..=10usize {
            let inp = inputs! {"beta" => beta, "m" => m, "l" => l};
            out.extend(timed(|| {
                vec![match orthogonality_sum(m, l, beta, 1e-13) {
                    Ok(sum) => {
                        let target = if m == l { log_h(m).exp() } else { 0.0 };
                        let rel = (sum - target).abs() / log_h(m.max(l)).exp();
                        Check::at_most("meixner.orthogonality", inp, rel, tol, tol)
                    }
                    Err(e) => Check::error("meixner.orthogonality", inp, e),
                }]
            }));
        }
    }
    let tol = cfg.tol("precision");
    for k in [4usize, 8, 12] {
        for n in [0u64, 7, 30, 59, 61, 100, 200] {
            let inp = inputs! {"beta" => beta, "k" => k, "n" => n};
            out.extend(timed(|| {
                let pair = eval_l(k, n, beta, PrecisionMode::Double)
                    .and_then(|d| Ok((d, eval_l(k, n, beta, PrecisionMode::Extended)?)));
                vec![match pair {
                    Ok((d, e)) => {
                        let rel = (d - e).abs() / meixner_scale(k, n, beta);
                        Check::at_most("meixner.precision", inp, rel, tol, tol)
                    }
                    Err(e) => Check::error("meixner.precision", inp, e),
                }]
            }));
        }
    }
    out
}

/// `e^{-k beta} sum_j C(k,j) C(n,j) (e^beta - 1)^j`, the size of the terms of `L_k(n)`.
fn meixner_scale(k: usize, n: u64, beta: f64) -> f64 {
    let log_r = beta.exp_m1().ln();
    (0..=k.min(n as usize))
        .map(|j| {
            (ln_binomial(k as u64, j as u64) + ln_binomial(n, j as u64) + j as f64 * log_r
                - k as f64 * beta)
                .exp()
        })
        .sum()
}

fn gamma_params() -> BoundParams {
    let s = (0..200)
        .map(|i| (1.0 + 1e-6) * (50.0f64 / (1.0 + 1e-6)).powf(i as f64 / 199.0))
        .collect();
    BoundParams::Gamma { s }
}

fn bound_check(id: &str, inp: crate::report::Inputs, params: BoundParams) -> Check {
    match verify_bounds(&params) {
        Ok(r) => summarize_bounds(id, inp, &r),
        Err(e) => Check::error(id, inp, e),
    }
}

fn summarize_bounds(id: &str, inp: crate::report::Inputs, r: &BoundReport) -> Check {
    let mut c = if r.kind.is_strict() {
        Check::above(id, inp, r.worst_slack, 0.0)
    } else {
        Check::at_least(id, inp, r.worst_slack, 0.0, 0.0)
    };
    c.passed = r.passed;
    c.with_detail(json!({
        "points": r.grid.len(),
        "violations": r.violations(),
        "boundary_points": r.boundary_points().count(),
    }))
}

fn bounds(beta: f64) -> Vec<Check> {
    let s: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
    let mut out = timed(|| {
        vec![bound_check(
            "bounds.power_sum",
            inputs! {"beta" => beta, "s_min" => 1.0, "s_max" => 50.0},
            BoundParams::PowerSum {
                s,
                betas: vec![beta],
            },
        )]
    });
    out.extend(timed(|| {
        vec![bound_check(
            "bounds.pointwise",
            inputs! {"beta" => beta, "k_max" => 10, "n_max" => 200},
            BoundParams::Pointwise {
                ks: (0..=10).collect(),
                ns: (0..=200).collect(),
                betas: vec![beta],
            },
        )]
    }));
    out
}

fn modes_for(m: i64) -> &'static [TransformMode] {
    if m >= 1 {
        &[TransformMode::FactorOut, TransformMode::ShiftUp]
    } else if m < 0 {
        &[TransformMode::NegativeMirror]
    } else {
        &[]
    }
}

fn structure(cfg: &SuiteConfig) -> Vec<Check> {
    let tol = cfg.tol("structure");
    let mut out = Vec::new();
    for k in 1..=SEQUENCE_DEGREE {
        for mode in [
            TransformMode::FactorOut,
            TransformMode::ShiftUp,
            TransformMode::NegativeMirror,
        ] {
            let inp = inputs! {"k" => k, "mode" => format!("{mode:?}"), "n_max" => 200, "families_per_m" => FAMILIES};
            out.extend(timed(|| {
                let mut rng = rng_for(cfg.seed, &[1, k as u64, mode as u64]);
                let mut worst: f64 = 0.0;
                for m in -(k as i64)..=(k as i64) {
                    if !modes_for(m).contains(&mode) {
                        continue;
                    }
                    for _ in 0..FAMILIES {
                        let r = OffDiagonalCoeffs::random(k, m, &mut rng)
                            .and_then(|c| structure_residual(&c, mode, 200));
                        match r {
                            Ok(r) => worst = worst.max(r),
                            Err(e) => {
                                return vec![Check::error("sequences.structure", inp.clone(), e)]
                            }
                        }
                    }
                }
                vec![Check::at_most(
                    "sequences.structure",
                    inp.clone(),
                    worst,
                    tol,
                    tol,
                )]
            }));
        }
    }
    out
}

/// Largest `lhs / rhs` over the checks, and whether all passed.
fn fold_lemma(
    results: impl IntoIterator<Item = qouhc::Result<qouhc::sequences::LemmaCheck>>,
) -> qouhc::Result<(f64, bool)> {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for r in results {
        let r = r?;
        worst = worst.max(r.lhs / r.rhs);
        all &= r.passed;
    }
    Ok((worst, all))
}

fn lemma_record(id: &str, inp: crate::report::Inputs, r: qouhc::Result<(f64, bool)>) -> Check {
    match r {
        Ok((worst, all)) => {
            let mut c = Check::at_most(id, inp, worst, 1.0, LEMMA_REL_TOL);
            c.passed = all;
            c
        }
        Err(e) => Check::error(id, inp, e),
    }
}

fn lemmas(beta: f64, p: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let seed_of =
        |tag: u64, k: usize| rng_for(cfg.seed, &[2, tag, beta.to_bits(), p.to_bits(), k as u64]);
    for k in 1..=SEQUENCE_DEGREE {
        let inp = inputs! {"beta" => beta, "p" => p, "k" => k, "families_per_m" => FAMILIES};
        out.extend(timed(|| {
            let mut rng = seed_of(0, k);
            let checks: Vec<_> = (-(k as i64)..=(k as i64))
                .flat_map(|m| (0..FAMILIES).map(move |_| m))
                .map(|m| {
                    OffDiagonalCoeffs::random(k, m, &mut rng)
                        .and_then(|c| main_lemma_check(&c, p, beta))
                })
                .collect();
            vec![lemma_record(
                "sequences.main_lemma",
                inp.clone(),
                fold_lemma(checks),
            )]
        }));
        out.extend(timed(|| {
            let mut rng = seed_of(1, k);
            let checks: Vec<_> = (0..=(k as i64))
                .flat_map(|m| (0..FAMILIES).map(move |_| m))
                .map(|m| {
                    OffDiagonalCoeffs::random(k, m, &mut rng)
                        .and_then(|c| induction_bound_check(&c, p, beta))
                })
                .collect();
            vec![lemma_record(
                "sequences.induction_bound",
                inp.clone(),
                fold_lemma(checks),
            )]
        }));
        for mode in [PolyMode::Plain, PolyMode::SqrtWeighted] {
            let inp = inputs! {"beta" => beta, "p" => p, "k" => k, "mode" => format!("{mode:?}")};
            out.extend(timed(|| {
                let mut rng = seed_of(2 + mode as u64, k);
                let checks: Vec<_> = (0..FAMILIES)
                    .map(|_| {
                        let poly: Vec<Complex64> = (0..=k)
                            .map(|_| {
                                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                            })
                            .collect();
                        poly_lemma_check(&poly, p, beta, mode)
                    })
                    .collect();
                vec![lemma_record(
                    "sequences.poly_lemma",
                    inp.clone(),
                    fold_lemma(checks),
                )]
            }));
        }
    }
    let inp = inputs! {"beta" => beta, "p" => p, "m_max" => 10, "l_max" => 10};
    out.extend(timed(|| {
        let checks: Vec<_> = (1..=10usize)
            .flat_map(|m| (0..=10usize).map(move |l| (m, l)))
            .map(|(m, l)| j1_auxiliary_check(m, l, p, beta))
            .collect();
        vec![lemma_record(
            "sequences.j1_auxiliary",
            inp.clone(),
            fold_lemma(checks),
        )]
    }));
    out
}

fn sandwich(cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = Vec::new();
    for p in [1.0, 1.5, 2.0, 3.0, 8.0] {
        let inp = inputs! {"p" => p, "samples" => SANDWICH_SAMPLES, "max_len" => 200};
        out.extend(timed(|| {
            let mut rng = rng_for(cfg.seed, &[3, (p * 2.0) as u64]);
            let mut upper: f64 = 0.0;
            let mut lower = f64::INFINITY;
            let mut all = true;
            for _ in 0..SANDWICH_SAMPLES {
                let len = rng.gen_range(1..=200usize);
                let a: Vec<f64> = (0..len)
                    .map(|_| rng.gen::<f64>() * (4.0 * rng.gen::<f64>() - 2.0).exp())
                    .collect();
                match sandwich_check(&a, p) {
                    Ok(s) => {
                        if s.upper > 0.0 {
                            upper = upper.max(s.mid / s.upper);
                            lower = lower.min(s.mid / s.lower);
                        }
                        all &= s.passed;
                    }
                    Err(e) => return vec![Check::error("schatten.sandwich", inp.clone(), e)],
                }
            }
            let mut hi = Check::at_most(
                "schatten.sandwich_upper",
                inp.clone(),
                upper,
                1.0 + SANDWICH_ROUNDOFF,
                SANDWICH_ROUNDOFF,
            );
            let mut lo = Check::at_least(
                "schatten.sandwich_lower",
                inp.clone(),
                lower,
                1.0 / (1.0 + SANDWICH_ROUNDOFF),
                SANDWICH_ROUNDOFF,
            );
            hi.passed &= all;
            lo.passed &= all;
            vec![hi, lo]
        }));
    }
    out
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

fn schatten(beta: f64, p: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let spec = match GibbsSpec::new(beta, cfg.dim) {
        Ok(s) => s,
        Err(e) => {
            return vec![Check::error(
                "schatten.band_oracle",
                inputs! {"beta" => beta, "p" => p},
                e,
            )]
        }
    };
    let tol = cfg.tol("oracle");
    let kmax = 6.min(cfg.dim / 8);
    let inp = inputs! {"beta" => beta, "p" => p, "dim" => cfg.dim, "k_max" => kmax};
    out.extend(timed(|| {
        let mut rng = rng_for(cfg.seed, &[4, beta.to_bits(), p.to_bits()]);
        let s = 0.5 / p - 0.25;
        let r = spec.rho_power_diag(s);
        let mut worst: f64 = 0.0;
        for k in 1..=kmax {
            for m in -(k as i64)..=(k as i64) {
                let c = match OffDiagonalCoeffs::random(k, m, &mut rng) {
                    Ok(c) => c,
                    Err(e) => return vec![Check::error("schatten.band_oracle", inp.clone(), e)],
                };
                let x = band_element(&c, &spec);
                let direct = match schatten_norm_matrix(&diag_sandwich(&r, &x, &r), p) {
                    Ok(v) => v,
                    Err(e) => return vec![Check::error("schatten.band_oracle", inp.clone(), e)],
                };
                let closed = truncated_band_formula(&c, p, beta, cfg.dim);
                worst = worst.max((direct - closed).abs() / closed);
            }
        }
        vec![Check::at_most(
            "schatten.band_oracle",
            inp.clone(),
            worst,
            tol,
            tol,
        )]
    }));
    let inp = inputs! {"beta" => beta, "p" => p, "dim" => cfg.dim, "samples" => BCL_SAMPLES};
    out.extend(timed(|| {
        let spec = spec.renormalized();
        let mut rng = rng_for(cfg.seed, &[5, beta.to_bits(), p.to_bits()]);
        let mut worst: f64 = 0.0;
        let mut all = true;
        for _ in 0..BCL_SAMPLES {
            let y = FockOperator::general(random_hermitian(cfg.dim, &mut rng))
                .and_then(|y| bcl_check(&y, p, &spec));
            match y {
                Ok(c) => {
                    worst = worst.max(c.lhs - c.rhs);
                    all &= c.passed;
                }
                Err(e) => return vec![Check::error("schatten.convexity", inp.clone(), e)],
            }
        }
        let mut c = Check::at_most(
            "schatten.convexity",
            inp.clone(),
            worst,
            BCL_SLACK,
            BCL_SLACK,
        );
        c.passed &= all;
        vec![c]
    }));
    out
}

/// The weighted closed form restricted to the indices kept by the truncation:
/// `(1 - e^{-beta})^{1/p} e^{-m beta (1/(2p) + 1/4)} (sum_n e^{-n beta} |f(n)|^p)^{1/p}`.
fn truncated_band_formula(c: &OffDiagonalCoeffs, p: f64, beta: f64, dim: usize) -> f64 {
    let m = c.m();
    let terms: Vec<f64> = (0..dim)
        .filter(|&n| {
            let col = n as i64 + m;
            col >= 0 && col < dim as i64
        })
        .map(|n| (-(n as f64) * beta / p).exp() * c.eval(n).norm())
        .collect();
    let pref = (-(-beta).exp_m1()).powf(1.0 / p) * (-(m as f64) * beta * (0.5 / p + 0.25)).exp();
    pref * power_mean_norm(&terms, p)
}

fn semigroup(beta: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let base = inputs! {"beta" => beta, "dim" => cfg.dim, "degree_cap" => cfg.degree_cap};
    let (spec, params) =
        match GibbsSpec::new(beta, cfg.dim).and_then(|s| Ok((s, params_for(beta)?))) {
            Ok(v) => v,
            Err(e) => return vec![Check::error("semigroup.setup", base, e)],
        };
    let mut out = Vec::new();
    out.extend(timed(|| {
        let tol = cfg.tol("gap");
        let (r1, r2) = params.constraint_residuals();
        let ctol = cfg.tol("constraint");
        vec![
            Check::at_most(
                "semigroup.gap",
                inputs! {"beta" => beta},
                (params.tau - (beta / 2.0).tanh()).abs(),
                tol,
                tol,
            ),
            Check::at_most(
                "semigroup.constraints",
                inputs! {"beta" => beta},
                r1.max(r2),
                ctol,
                ctol,
            ),
        ]
    }));
    out.extend(timed(|| {
        let tol = cfg.tol("gram");
        vec![match EigenBasis::build(&spec, &params, cfg.degree_cap) {
            Ok(b) => Check::at_most(
                "semigroup.gram_defect",
                base.clone(),
                b.gram_defect,
                tol,
                tol,
            ),
            Err(e) => Check::error("semigroup.gram_defect", base.clone(), e),
        }]
    }));
    let tol = cfg.tol("eigen");
    for d in 0..=cfg.degree_cap {
        for m in (0..=d).rev() {
            let n = d - m;
            let inp = inputs! {"beta" => beta, "dim" => cfg.dim, "m" => m, "n" => n};
            out.extend(timed(|| {
                vec![match eigen_residual(m, n, &spec, &params) {
                    Ok(r) => Check::at_most("semigroup.eigen_residual", inp.clone(), r, tol, tol),
                    Err(e) => Check::error("semigroup.eigen_residual", inp.clone(), e),
                }]
            }));
        }
    }
    let buffer = 8.min(cfg.dim / 2 - 1);
    let inp = inputs! {"beta" => beta, "dim" => cfg.dim, "buffer" => buffer};
    out.extend(timed(|| {
        let tol = cfg.tol("ccr");
        vec![match ccr_residual(&spec, &params, buffer) {
            Ok(r) => Check::at_most("semigroup.ccr", inp.clone(), r, tol, tol),
            Err(e) => Check::error("semigroup.ccr", inp.clone(), e),
        }]
    }));
    out
}

fn hc_setup(beta: f64, cfg: &SuiteConfig) -> qouhc::Result<(GibbsSpec, EigenBasis)> {
    let spec = GibbsSpec::new(beta, cfg.dim)?;
    let basis = EigenBasis::build(&spec, &params_for(beta)?, cfg.degree_cap)?;
    Ok((spec, basis))
}

fn hypercontractivity(beta: f64, p: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let base = inputs! {"beta" => beta, "p" => p, "dim" => cfg.dim, "degree_cap" => cfg.degree_cap};
    let (_, basis) = match hc_setup(beta, cfg) {
        Ok(v) => v,
        Err(e) => return vec![Check::error("hc.setup", base, e)],
    };
    let engine = match RatioEngine::new(p, &basis, TimeKind::ZeroMean) {
        Ok(e) => e,
        Err(e) => return vec![Check::error("hc.setup", base, e)],
    };
    let tau = basis.params.tau;
    let level = 1.0 + cfg.tol("ratio");
    let sup_cfg = SupConfig::new(cfg.budget, cfg.seed).with_steps(cfg.ascent_steps);
    let mut out = Vec::new();
    let sample_inputs = |t: f64| {
        let mut i = base.clone();
        i.insert("t".into(), json!(t));
        i.insert("budget".into(), json!(cfg.budget));
        i.insert("ascent_steps".into(), json!(cfg.ascent_steps));
        i.insert("seed".into(), json!(cfg.seed));
        i
    };
    if p == 2.0 {
        out.extend(timed(|| {
            let r = sup_ratio_engine(&engine, 0.0, &sup_cfg, f64::INFINITY);
            vec![Check::at_most(
                "hc.isometry",
                sample_inputs(0.0),
                r.worst_ratio,
                level,
                level - 1.0,
            )]
        }));
        return out;
    }
    out.extend(timed(|| {
        vec![match contraction_constant(p, beta) {
            Ok(c2) => {
                let t_star = c2.ln() / (2.0 * tau);
                let r = sup_ratio_engine(&engine, t_star, &sup_cfg, f64::INFINITY);
                Check::at_most(
                    "hc.contraction",
                    sample_inputs(t_star),
                    r.worst_ratio,
                    level,
                    level - 1.0,
                )
                .with_detail(json!({"samples": r.sample_size}))
            }
            Err(e) => Check::error("hc.contraction", base.clone(), e),
        }]
    }));
    out.extend(timed(|| {
        let w = match witness_bound(p, beta, &basis.params) {
            Ok(w) => w,
            Err(e) => return vec![Check::error("hc.witness", base.clone(), e)],
        };
        let floor =
            (1.0 / beta).min(1.0 / beta.sqrt()) * p.sqrt() / (6.0 * std::f64::consts::E.sqrt());
        let mut checks = vec![Check::at_least(
            "hc.witness_norm",
            base.clone(),
            (tau * w.t_w).exp(),
            floor,
            0.0,
        )
        .with_detail(
            json!({"norm": w.norm, "entries": w.entries, "truncation_error": w.truncation_error}),
        )];
        let t = w.t_w - 0.05 / tau;
        if t >= 0.0 {
            let r = sup_ratio_engine(&engine, t, &sup_cfg, 1.0);
            checks.push(Check::above(
                "hc.failure",
                sample_inputs(t),
                r.worst_ratio,
                1.0,
            ));
        }
        checks
    }));
    out.extend(timed(|| {
        let r = theory_bounds(p, beta, TimeKind::ZeroMean)
            .and_then(|(_, up)| Ok((contraction_constant(p, beta)?, up)));
        vec![match r {
            Ok((c2, up)) => Check::at_most("hc.theory_consistency", base.clone(), c2, up, 0.0),
            Err(e) => Check::error("hc.theory_consistency", base.clone(), e),
        }]
    }));
    out
}

/// `L_p(rho)` norms of the basis elements through the complex SVD and the real
/// fast path, and the witness norm.
pub fn run_norms(cfg: &SuiteConfig, jobs: usize) -> Vec<Check> {
    let grid: Vec<(f64, f64)> = cfg
        .beta_grid
        .iter()
        .flat_map(|&b| cfg.p_grid.iter().map(move |&p| (b, p)))
        .collect();
    par_map(&grid, jobs, |&(beta, p)| norms_at(beta, p, cfg))
        .into_iter()
        .flatten()
        .collect()
}

fn norms_at(beta: f64, p: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let base = inputs! {"beta" => beta, "p" => p, "dim" => cfg.dim};
    let (spec, basis) = match hc_setup(beta, cfg) {
        Ok(v) => v,
        Err(e) => return vec![Check::error("norms.setup", base, e)],
    };
    let tol = cfg.tol("norms");
    let r = spec.rho_power_diag(0.5 / p - 0.25);
    let real = basis.real_vectors();
    let mut out = Vec::new();
    for (j, &(m, n)) in basis.labels().iter().enumerate() {
        let inp = inputs! {"beta" => beta, "p" => p, "dim" => cfg.dim, "m" => m, "n" => n};
        out.extend(timed(|| {
            let x = diag_sandwich(&r, &basis.vectors()[j].mat, &r);
            let complex = match schatten_norm_matrix(&x, p) {
                Ok(v) => v,
                Err(e) => return vec![Check::error("norms.basis", inp.clone(), e)],
            };
            let fast = match &real {
                Some(rv) => real_schatten_norm(&rv[j].component_mul(&outer(&r)), p),
                None => Ok(complex),
            };
            vec![match fast {
                Ok(f) => Check::at_most(
                    "norms.basis",
                    inp.clone(),
                    (complex - f).abs() / complex,
                    tol,
                    tol,
                )
                .with_detail(json!({"norm": complex})),
                Err(e) => Check::error("norms.basis", inp.clone(), e),
            }]
        }));
    }
    out.extend(timed(|| {
        vec![match witness_bound(p, beta, &basis.params) {
            Ok(w) => {
                let floor = (1.0 / beta).min(1.0 / beta.sqrt()) * p.sqrt()
                    / (6.0 * std::f64::consts::E.sqrt());
                Check::at_least(
                    "norms.witness",
                    base.clone(),
                    w.norm,
                    floor,
                    w.truncation_error,
                )
                .with_detail(json!({"t_w": w.t_w, "entries": w.entries}))
            }
            Err(e) => Check::error("norms.witness", base.clone(), e),
        }]
    }));
    out
}

fn outer(r: &[f64]) -> qouhc::linalg::RMat {
    qouhc::linalg::RMat::from_fn(r.len(), r.len(), |a, b| r[a] * r[b])
}

/// Optimal-time estimates with their brackets on every grid point.
pub fn run_optimal_time(cfg: &SuiteConfig, jobs: usize) -> Vec<Check> {
    let grid: Vec<(f64, f64)> = cfg
        .beta_grid
        .iter()
        .flat_map(|&b| cfg.p_grid.iter().map(move |&p| (b, p)))
        .collect();
    par_map(&grid, jobs, |&(beta, p)| optimal_time_at(beta, p, cfg))
        .into_iter()
        .flatten()
        .collect()
}

fn optimal_time_at(beta: f64, p: f64, cfg: &SuiteConfig) -> Vec<Check> {
    let kind: TimeKind = cfg.kind.into();
    let base = inputs! {
        "beta" => beta, "p" => p, "dim" => cfg.dim, "degree_cap" => cfg.degree_cap,
        "kind" => kind, "budget" => cfg.budget, "ascent_steps" => cfg.ascent_steps, "seed" => cfg.seed,
    };
    timed(|| {
        let (spec, basis) = match hc_setup(beta, cfg) {
            Ok(v) => v,
            Err(e) => return vec![Check::error("optimal_time", base.clone(), e)],
        };
        let sup_cfg = SupConfig::new(cfg.budget, cfg.seed)
            .with_steps(cfg.ascent_steps)
            .with_kind(kind);
        let tol = cfg.tol("time");
        match optimal_time_estimate_with(p, &spec, &basis, &sup_cfg, tol) {
            Ok(est) => {
                let detail = json!({
                    "estimate": est,
                    "label": "restricted-class lower estimate",
                });
                vec![
                    Check::at_least(
                        "optimal_time.lower",
                        base.clone(),
                        est.t_hat,
                        est.witness_lower,
                        0.0,
                    )
                    .with_detail(detail.clone()),
                    Check::at_most(
                        "optimal_time.upper",
                        base.clone(),
                        est.t_hat,
                        est.theory_upper + tol,
                        tol,
                    )
                    .with_detail(detail),
                ]
            }
            Err(e) => vec![Check::error("optimal_time", base.clone(), e)],
        }
    })
}
