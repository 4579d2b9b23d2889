// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria. Each test prints one PASS/FAIL line to stdout
//! (bypassing the test harness capture) and asserts the same verdict.
//! Tests run one at a time so the runtime limits measure a single workload.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use qouhc::fock::{FockOperator, GibbsSpec};
use qouhc::hypercontractivity::{
    contraction_constant, optimal_time_estimate_with, sup_ratio_engine, witness_bound, RatioEngine,
    SupConfig, TimeKind,
};
use qouhc::linalg::{diag_sandwich, CMat};
use qouhc::meixner::{orthogonality_sum, verify_bounds, BoundParams};
use qouhc::schatten::{
    band_element, band_element_norm, bcl_check, sandwich_check, schatten_norm_matrix,
    SANDWICH_ROUNDOFF,
};
use qouhc::semigroup::{ccr_residual, eigen_residual, solve_params, EigenBasis, ParamBranch};
use qouhc::sequences::{
    main_lemma_check, main_lemma_ratio, structure_residual, OffDiagonalCoeffs, TransformMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

const BETAS: [f64; 3] = [0.5, 1.0, 2.0];

fn line(criterion: &str, name: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "[acceptance] {verdict} criterion {criterion} ({name}): {detail}"
    )
    .unwrap();
    out.flush().unwrap();
}

fn finish(criterion: &str, name: &str, parts: &[(bool, String)], start: Instant, limit_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    let in_time = elapsed < limit_s;
    let mut detail: Vec<String> = parts.iter().map(|(_, d)| d.clone()).collect();
    detail.push(format!("runtime {elapsed:.2} s < {limit_s} s"));
    let passed = in_time && parts.iter().all(|(p, _)| *p);
    line(criterion, name, passed, &detail.join("; "));
    assert!(
        passed,
        "criterion {criterion} failed: {}",
        detail.join("; ")
    );
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_1_meixner_orthogonality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const TOL: f64 = 1e-8;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for beta in BETAS {
        let h = |k: usize| (-(k as f64) * beta).exp() / -(-beta).exp_m1();
        for m in 0..=10 {
            for l in 0..=10 {
                let s = orthogonality_sum(m, l, beta, 1e-13).unwrap();
                let target = if m == l { h(m) } else { 0.0 };
                worst = worst.max((s - target).abs() / h(m.max(l)));
            }
        }
    }
    let parts = [(
        worst <= TOL,
        format!("worst relative residual {worst:.3e} <= {TOL:e}"),
    )];
    finish("1", "Meixner orthogonality", &parts, start, 5.0);
}

#[test]
fn criterion_2_pointwise_and_stirling_bounds() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let s_gamma: Vec<f64> = (0..500)
        .map(|i| (1.0 + 1e-6) * (50.0f64 / (1.0 + 1e-6)).powf(i as f64 / 499.0))
        .collect();
    let s_sum: Vec<f64> = (0..500).map(|i| 1.0 + 49.0 * i as f64 / 499.0).collect();
    let reports = [
        verify_bounds(&BoundParams::Pointwise {
            ks: (0..=10).collect(),
            ns: (0..=200).collect(),
            betas: BETAS.to_vec(),
        })
        .unwrap(),
        verify_bounds(&BoundParams::Gamma { s: s_gamma }).unwrap(),
        verify_bounds(&BoundParams::PowerSum {
            s: s_sum,
            betas: BETAS.to_vec(),
        })
        .unwrap(),
    ];
    let parts: Vec<(bool, String)> = reports
        .iter()
        .map(|r| {
            (
                r.passed && r.violations() == 0,
                format!(
                    "{:?}: {} violations over {} points, worst log slack {:.3e}, {} boundary points",
                    r.kind,
                    r.violations(),
                    r.grid.len(),
                    r.worst_slack,
                    r.boundary_points().count()
                ),
            )
        })
        .collect();
    finish("2", "pointwise and Stirling bounds", &parts, start, 5.0);
}

fn modes_for(m: i64) -> Vec<TransformMode> {
    if m >= 1 {
        vec![TransformMode::FactorOut, TransformMode::ShiftUp]
    } else if m < 0 {
        vec![TransformMode::NegativeMirror]
    } else {
        vec![]
    }
}

#[test]
fn criterion_3_structure_identities() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const TOL: f64 = 1e-11;
    const FAMILIES: usize = 1000;
    let start = Instant::now();
    let pairs: Vec<(usize, i64)> = (1..=10usize)
        .flat_map(|k| (-(k as i64)..=(k as i64)).map(move |m| (k, m)))
        .filter(|&(_, m)| m != 0)
        .collect();
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for j in 0..FAMILIES {
        let (k, m) = pairs[j % pairs.len()];
        let c = OffDiagonalCoeffs::random(k, m, &mut r).unwrap();
        for mode in modes_for(m) {
            worst = worst.max(structure_residual(&c, mode, 200).unwrap());
            checked += 1;
        }
    }
    let parts = [(
        worst <= TOL,
        format!("{FAMILIES} families, {checked} identities, worst relative residual {worst:.3e} <= {TOL:e}"),
    )];
    finish("3", "structure identities", &parts, start, 10.0);
}

#[test]
fn criterion_4_main_estimate() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const FAMILIES: usize = 10_000;
    const PS: [f64; 5] = [2.0, 3.0, 4.0, 8.0, 16.0];
    let start = Instant::now();
    let mut r = rng(4);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for j in 0..FAMILIES {
        let k = 1 + j % 10;
        let m = r.gen_range(-(k as i64)..=(k as i64));
        let p = PS[(j / 10) % PS.len()];
        let beta = BETAS[(j / 50) % BETAS.len()];
        let c = OffDiagonalCoeffs::random(k, m, &mut r).unwrap();
        let chk = main_lemma_check(&c, p, beta).unwrap();
        if !chk.passed {
            violations += 1;
        }
        worst = worst.max(chk.lhs / chk.rhs);
    }
    let parts = [(
        violations == 0,
        format!("{violations} violations over {FAMILIES} families, largest lhs/rhs {worst:.3e}"),
    )];
    finish(
        "4a",
        "weighted-norm estimate with explicit constants",
        &parts,
        start,
        60.0,
    );
}

#[test]
fn criterion_4_sharpness_slope() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const FAMILIES: usize = 1000;
    const PS: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];
    const BETA: f64 = 1.0;
    const WINDOW: f64 = 0.3;
    let start = Instant::now();
    let x: Vec<f64> = PS.iter().map(|p| p.ln()).collect();
    let mut parts = Vec::new();
    for k in 1..=3usize {
        for m in 0..=1i64 {
            let mut r = rng(40 + 2 * k as u64 + m as u64);
            let fams: Vec<_> = (0..FAMILIES)
                .map(|_| OffDiagonalCoeffs::random(k, m, &mut r).unwrap())
                .collect();
            let y: Vec<f64> = PS
                .iter()
                .map(|&p| {
                    fams.iter()
                        .map(|c| main_lemma_ratio(c, p, BETA).unwrap())
                        .fold(0.0, f64::max)
                        .ln()
                })
                .collect();
            let s = slope(&x, &y);
            let target = k as f64 / 2.0;
            parts.push((
                (s - target).abs() <= WINDOW,
                format!(
                    "k={k} m={m} slope {s:.3} vs [{:.1}, {:.1}]",
                    target - WINDOW,
                    target + WINDOW
                ),
            ));
        }
    }
    finish("4b", "sharpness slope", &parts, start, 60.0);
}

#[test]
fn criterion_5_band_norm_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const TOL: f64 = 1e-9;
    const DIM: usize = 128;
    let start = Instant::now();
    let mut parts = Vec::new();
    // At beta = 1/2 the truncated tail e^{-128 beta} 128^{kp/2} is not below TOL for
    // k = 6, p = 4, so the infinite-series comparison is made where D = 128 resolves it.
    for beta in [1.0, 2.0] {
        let spec = GibbsSpec::new(beta, DIM).unwrap();
        let mut r = rng(5 + beta as u64);
        let mut worst: f64 = 0.0;
        for k in 1..=6usize {
            for m in -(k as i64)..=(k as i64) {
                let c = OffDiagonalCoeffs::random(k, m, &mut r).unwrap();
                let x = band_element(&c, &spec);
                for p in [2.0, 3.0, 4.0] {
                    let rp = spec.rho_power_diag(0.5 / p - 0.25);
                    let direct = schatten_norm_matrix(&diag_sandwich(&rp, &x, &rp), p).unwrap();
                    let closed = band_element_norm(&c, p, beta, 1e-15).unwrap();
                    worst = worst.max((direct - closed).abs() / closed);
                }
            }
        }
        parts.push((
            worst <= TOL,
            format!("beta={beta}: worst relative gap {worst:.3e} <= {TOL:e}"),
        ));
    }
    finish("5", "band norm oracle", &parts, start, 30.0);
}

#[test]
fn criterion_6_schatten_sandwich() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const SEQUENCES: usize = 1000;
    let start = Instant::now();
    let mut r = rng(6);
    let mut failures = 0;
    let mut checks = 0;
    for _ in 0..SEQUENCES {
        let len = r.gen_range(1..=200usize);
        let scale = (4.0 * r.gen::<f64>() - 2.0).exp();
        let a: Vec<f64> = (0..len).map(|_| r.gen::<f64>() * scale).collect();
        for p in [1.0, 1.5, 2.0, 3.0, 8.0] {
            let s = sandwich_check(&a, p).unwrap();
            checks += 1;
            if !s.passed {
                failures += 1;
            }
        }
    }
    let parts = [(
        failures == 0,
        format!("{failures} failures over {checks} sequence/exponent pairs, relative roundoff allowance {SANDWICH_ROUNDOFF:e}"),
    )];
    finish("6", "Schatten sandwich", &parts, start, 30.0);
}

#[test]
fn criterion_7_semigroup_structure() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const GRAM_TOL: f64 = 1e-8;
    const CCR_TOL: f64 = 1e-10;
    const EIGEN_TOL: f64 = 1e-6;
    const GAP_TOL: f64 = 1e-12;
    // Residuals already at roundoff on both sizes count as non-increasing.
    const ROUNDOFF_FLOOR: f64 = 1e-13;
    const CAP: usize = 6;
    let start = Instant::now();
    let mut parts = Vec::new();
    for beta in BETAS {
        let params = solve_params(beta, ParamBranch::CanonicalCfl).unwrap();
        let gap = (params.tau - (beta / 2.0).tanh()).abs();
        parts.push((
            gap <= GAP_TOL,
            format!("beta={beta}: |tau - tanh(beta/2)| {gap:.1e}"),
        ));
    }
    // beta = 1/2 needs D well above 128 for degree 6 (Gram defect 5e-4 at D = 64,
    // eigen residual 1.4e-5 at D = 128); the structural checks use beta in {1, 2}.
    for beta in [1.0, 2.0] {
        let params = solve_params(beta, ParamBranch::CanonicalCfl).unwrap();
        let s64 = GibbsSpec::new(beta, 64).unwrap();
        let s128 = GibbsSpec::new(beta, 128).unwrap();
        let basis = EigenBasis::build(&s64, &params, CAP).unwrap();
        parts.push((
            basis.gram_defect <= GRAM_TOL,
            format!("beta={beta}: Gram defect {:.1e} at D=64", basis.gram_defect),
        ));
        let ccr = ccr_residual(&s64, &params, 8).unwrap();
        parts.push((
            ccr <= CCR_TOL,
            format!("beta={beta}: CCR residual {ccr:.1e}"),
        ));
        let mut worst128: f64 = 0.0;
        let mut monotone = true;
        for d in 0..=CAP {
            for m in 0..=d {
                let r64 = eigen_residual(m, d - m, &s64, &params).unwrap();
                let r128 = eigen_residual(m, d - m, &s128, &params).unwrap();
                worst128 = worst128.max(r128);
                monotone &= r128 <= r64 || r64.max(r128) <= ROUNDOFF_FLOOR;
            }
        }
        parts.push((
            worst128 <= EIGEN_TOL && monotone,
            format!("beta={beta}: eigen residual {worst128:.1e} at D=128, non-increasing from D=64: {monotone}"),
        ));
    }
    finish("7", "semigroup structure", &parts, start, 120.0);
}

/// Truncation per temperature for the hypercontractivity checks.
fn hc_dim(beta: f64) -> usize {
    if beta < 1.0 {
        96
    } else if beta < 2.0 {
        64
    } else {
        40
    }
}

#[test]
fn criterion_8_hypercontractivity_certificates() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const CAP: usize = 3;
    const CONTRACTION_BUDGET: usize = 1000;
    const CONTRACTION_STEPS: usize = 10;
    const FAILURE_BUDGET: usize = 16;
    const BISECTION_BUDGET: usize = 16;
    const BISECTION_STEPS: usize = 20;
    const TIME_TOL: f64 = 1e-4;
    const RATIO_TOL: f64 = 1e-10;
    // The bisection accepts ratios up to 1 + RATIO_TOL; this converts that slack to time.
    const BRACKET_SLACK: f64 = 1e-9;
    const SEED: u64 = 8;
    let start = Instant::now();
    let mut parts = Vec::new();
    for beta in BETAS {
        let spec = GibbsSpec::new(beta, hc_dim(beta)).unwrap();
        let params = solve_params(beta, ParamBranch::CanonicalCfl).unwrap();
        let basis = EigenBasis::build(&spec, &params, CAP).unwrap();
        let tau = params.tau;
        for p in [3.0, 4.0, 8.0] {
            let engine = RatioEngine::new(p, &basis, TimeKind::ZeroMean).unwrap();
            let t_star = contraction_constant(p, beta).unwrap().ln() / (2.0 * tau);
            let cfg = SupConfig::new(CONTRACTION_BUDGET, SEED).with_steps(CONTRACTION_STEPS);
            let at_star = sup_ratio_engine(&engine, t_star, &cfg, f64::INFINITY).worst_ratio;
            parts.push((
                at_star <= 1.0 + RATIO_TOL,
                format!("beta={beta} p={p}: sup at t*={t_star:.3} is {at_star:.3e}"),
            ));

            let w = witness_bound(p, beta, &params).unwrap();
            let t_fail = w.t_w - 0.05 / tau;
            let cfg = SupConfig::new(FAILURE_BUDGET, SEED).with_steps(BISECTION_STEPS);
            let below = sup_ratio_engine(&engine, t_fail, &cfg, 1.0).worst_ratio;
            parts.push((
                t_fail >= 0.0 && below > 1.0,
                format!("sup at t_w-0.05/tau={t_fail:.3} is {below:.4}"),
            ));

            let floor =
                (1.0 / beta).min(1.0 / beta.sqrt()) * p.sqrt() / (6.0 * std::f64::consts::E.sqrt());
            let grown = (tau * w.t_w).exp();
            parts.push((
                grown >= floor,
                format!("e^(tau t_w)={grown:.4} >= {floor:.4}"),
            ));

            let cfg = SupConfig::new(BISECTION_BUDGET, SEED).with_steps(BISECTION_STEPS);
            let est = optimal_time_estimate_with(p, &spec, &basis, &cfg, TIME_TOL).unwrap();
            let ok = est.witness_lower <= est.t_hat + BRACKET_SLACK
                && est.t_hat <= est.theory_upper + TIME_TOL;
            parts.push((
                ok,
                format!(
                    "bracket {:.4} <= t_hat {:.4} <= {:.2}",
                    est.witness_lower, est.t_hat, est.theory_upper
                ),
            ));
        }
        let ps = [4.0, 8.0, 16.0, 32.0];
        let x: Vec<f64> = ps.iter().map(|p: &f64| (p - 1.0).ln()).collect();
        let y: Vec<f64> = ps
            .iter()
            .map(|&p| 2.0 * tau * witness_bound(p, beta, &params).unwrap().t_w)
            .collect();
        let s = slope(&x, &y);
        parts.push((
            (0.8..=1.2).contains(&s),
            format!("beta={beta}: witness growth slope {s:.3} in [0.8, 1.2]"),
        ));
    }
    finish("8", "hypercontractivity certificates", &parts, start, 300.0);
}

#[test]
fn criterion_9_convexity_inequality() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    const SAMPLES: usize = 1000;
    const DIM: usize = 64;
    let start = Instant::now();
    let mut r = rng(9);
    let specs: Vec<GibbsSpec> = BETAS
        .iter()
        .map(|&b| GibbsSpec::new(b, DIM).unwrap().renormalized())
        .collect();
    let mut violations = 0;
    let mut checks = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for j in 0..SAMPLES {
        let spec = &specs[j % specs.len()];
        let g = CMat::from_fn(DIM, DIM, |_, _| {
            Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
        });
        let shift = Complex64::new(r.gen_range(-3.0..3.0), 0.0);
        let mut h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        for i in 0..DIM {
            h[(i, i)] += shift;
        }
        let y = FockOperator::general(h).unwrap();
        let p = [2.0, 3.0, 4.0][j % 3];
        let c = bcl_check(&y, p, spec).unwrap();
        checks += 1;
        worst = worst.max(c.lhs / c.rhs);
        if !c.passed {
            violations += 1;
        }
    }
    let parts = [(
        violations == 0,
        format!(
            "{violations} violations over {checks} Hermitian samples, largest lhs/rhs {worst:.6}"
        ),
    )];
    finish("9", "Ball-Carlen-Lieb convexity", &parts, start, 60.0);
}
