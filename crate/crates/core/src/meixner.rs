// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Meixner polynomials for the geometric weight `e^{-n beta}` and the analytic
//! bounds (pointwise, Gamma, weighted power sums) built on them.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_beta, domain, Error, Result};
use crate::linalg::{log_power_tail, log_sum_exp, CompensatedSum};

/// Largest degree evaluated in plain double precision.
pub const DOUBLE_DEGREE_LIMIT: usize = 12;

/// Working precision of the extended mode in bits (about 77 decimal digits).
const EXT_BITS: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// Hard cap on the number of terms of any certified series.
const MAX_TERMS: usize = 10_000_000;

/// Arithmetic used for the alternating binomial sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecisionMode {
    Double,
    Extended,
}

impl PrecisionMode {
    /// Double up to the cancellation guard, extended above it.
    pub fn auto(k: usize) -> Self {
        if k <= DOUBLE_DEGREE_LIMIT {
            PrecisionMode::Double
        } else {
            PrecisionMode::Extended
        }
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, j: u64) -> BigUint {
    if j > n {
        return BigUint::from(0u32);
    }
    let j = j.min(n - j);
    let mut acc = BigUint::from(1u32);
    for i in 0..j {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `ln C(n, j)`: exact integer arithmetic for `n <= 60`, log-Gamma above.
pub fn ln_binomial(n: u64, j: u64) -> f64 {
    if j > n {
        return f64::NEG_INFINITY;
    }
    if n <= 60 {
        let v: u128 = binomial(n, j).try_into().expect("C(60, j) fits in u128");
        (v as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0)
    }
}

fn big_from_uint(v: &BigUint) -> BigFloat {
    let radix = BigFloat::from_f64(18446744073709551616.0, EXT_BITS);
    let mut acc = BigFloat::from_u64(0, EXT_BITS);
    for d in v.iter_u64_digits().rev() {
        acc = acc
            .mul(&radix, EXT_BITS, RM)
            .add(&BigFloat::from_u64(d, EXT_BITS), EXT_BITS, RM);
    }
    acc
}

fn big_to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let s = x
        .format(Radix::Dec, RM, cc)
        .expect("finite extended value formats");
    s.parse::<f64>().expect("decimal rendering parses as f64")
}

#[derive(Debug, Clone)]
enum Kernel {
    Double { em1: f64, log_em1: f64 },
    Extended { em1: BigFloat, ekb: BigFloat },
}

/// Evaluator for `L_k(n) = e^{-k beta} sum_j (-1)^j (e^beta - 1)^j C(k,j) C(n,j)`.
#[derive(Debug, Clone)]
pub struct PolyEval {
    k: usize,
    beta: f64,
    mode: PrecisionMode,
    kernel: Kernel,
}

impl PolyEval {
    pub fn new(k: usize, beta: f64, mode: PrecisionMode) -> Result<Self> {
        check_beta(beta)?;
        let kernel = match mode {
            PrecisionMode::Double => {
                if k > DOUBLE_DEGREE_LIMIT {
                    return Err(Error::PrecisionMode(k));
                }
                Kernel::Double {
                    em1: beta.exp_m1(),
                    log_em1: beta.exp_m1().ln(),
                }
            }
            PrecisionMode::Extended => {
                let mut cc = Consts::new().expect("astro-float constants cache");
                let b = BigFloat::from_f64(beta, EXT_BITS);
                let one = BigFloat::from_u64(1, EXT_BITS);
                let eb = b.exp(EXT_BITS, RM, &mut cc);
                let em1 = eb.sub(&one, EXT_BITS, RM);
                let kb = b.mul(&BigFloat::from_u64(k as u64, EXT_BITS), EXT_BITS, RM);
                let ekb = kb.neg().exp(EXT_BITS, RM, &mut cc);
                Kernel::Extended { em1, ekb }
            }
        };
        Ok(Self {
            k,
            beta,
            mode,
            kernel,
        })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }

    pub fn eval(&self, n: u64) -> f64 {
        let k = self.k as u64;
        let jmax = k.min(n);
        match &self.kernel {
            Kernel::Double { em1, log_em1 } => {
                let mut acc = CompensatedSum::new();
                let lead = -(self.k as f64) * self.beta;
                if n <= 60 {
                    let mut pw = 1.0;
                    for j in 0..=jmax {
                        let ck: u128 = binomial(k, j).try_into().expect("small binomial");
                        let cn: u128 = binomial(n, j).try_into().expect("small binomial");
                        let mag = (ck as f64) * (cn as f64) * pw;
                        acc.add(if j % 2 == 0 { mag } else { -mag });
                        pw *= em1;
                    }
                    acc.value() * lead.exp()
                } else {
                    for j in 0..=jmax {
                        let l = lead + j as f64 * log_em1 + ln_binomial(k, j) + ln_binomial(n, j);
                        let mag = l.exp();
                        acc.add(if j % 2 == 0 { mag } else { -mag });
                    }
                    acc.value()
                }
            }
            Kernel::Extended { em1, ekb } => {
                let mut cc = Consts::new().expect("astro-float constants cache");
                let mut acc = BigFloat::from_u64(0, EXT_BITS);
                let mut pw = BigFloat::from_u64(1, EXT_BITS);
                for j in 0..=jmax {
                    let c = binomial(k, j) * binomial(n, j);
                    let term = big_from_uint(&c).mul(&pw, EXT_BITS, RM);
                    acc = if j % 2 == 0 {
                        acc.add(&term, EXT_BITS, RM)
                    } else {
                        acc.sub(&term, EXT_BITS, RM)
                    };
                    pw = pw.mul(em1, EXT_BITS, RM);
                }
                big_to_f64(&acc.mul(ekb, EXT_BITS, RM), &mut cc)
            }
        }
    }
}

/// `L_k(n)` in the requested precision mode.
pub fn eval_l(k: usize, n: u64, beta: f64, mode: PrecisionMode) -> Result<f64> {
    Ok(PolyEval::new(k, beta, mode)?.eval(n))
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol.is_finite() && rel_tol > 0.0 {
        Ok(())
    } else {
        domain(format!(
            "relative tolerance must be positive, got {rel_tol}"
        ))
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `sum_n e^{-n beta} L_m(n) L_l(n)` truncated where the certified tail
/// falls below `rel_tol` times the diagonal scale.
///
/// For `m != l` the stop criterion is relative to `min(h_m, h_l)` with
/// `h_k = e^{-k beta}/(1 - e^{-beta})`, since the sum itself vanishes.
pub fn orthogonality_sum(m: usize, l: usize, beta: f64, rel_tol: f64) -> Result<f64> {
    check_beta(beta)?;
    check_tol(rel_tol)?;
    let lm = PolyEval::new(m, beta, PrecisionMode::auto(m))?;
    let ll = PolyEval::new(l, beta, PrecisionMode::auto(l))?;
    let log_h = |k: usize| -(k as f64) * beta - (-(-beta).exp()).ln_1p();
    let log_floor = rel_tol.ln() + log_h(m.max(l));
    let log_amp = -ln_factorial(m) - ln_factorial(l);
    let power = (m + l) as f64;
    let first_certifiable = m.max(l) + 1;
    let mut acc = CompensatedSum::new();
    for n in 0..MAX_TERMS {
        let lmv = lm.eval(n as u64);
        let llv = if m == l { lmv } else { ll.eval(n as u64) };
        acc.add((-beta * n as f64).exp() * lmv * llv);
        let next = n + 1;
        if next < first_certifiable {
            continue;
        }
        if let Some(tail) = log_power_tail(log_amp, beta, 0.0, power, next) {
            let target = if m == l {
                rel_tol.ln() + acc.value().abs().ln()
            } else {
                log_floor
            };
            if tail <= target {
                return Ok(acc.value());
            }
        }
    }
    Err(Error::NonConvergent(MAX_TERMS))
}

/// `ln sum_{n>=0} e^{-n beta} n^s` with a certified relative tail below `rel_tol`.
pub fn log_weighted_power_sum(s: f64, beta: f64, rel_tol: f64) -> Result<f64> {
    check_beta(beta)?;
    check_tol(rel_tol)?;
    if !(s.is_finite() && s >= 0.0) {
        return domain(format!("power must be nonnegative, got {s}"));
    }
    let mut logs = Vec::new();
    // 0^0 = 1; 0^s = 0 otherwise.
    if s == 0.0 {
        logs.push(0.0);
    }
    let mut running = if s == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    for n in 1..MAX_TERMS {
        let l = -beta * n as f64 + s * (n as f64).ln();
        logs.push(l);
        running = log_add(running, l);
        if let Some(tail) = log_power_tail(0.0, beta, 0.0, s, n + 1) {
            if tail <= rel_tol.ln() + running {
                return Ok(log_sum_exp(&logs));
            }
        }
    }
    Err(Error::NonConvergent(MAX_TERMS))
}

/// `sum_{n>=0} e^{-n beta} n^s` with a certified relative tail below `rel_tol`.
pub fn weighted_power_sum(s: f64, beta: f64, rel_tol: f64) -> Result<f64> {
    Ok(log_weighted_power_sum(s, beta, rel_tol)?.exp())
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Which analytic bound a [`BoundReport`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// `sqrt(2 pi s)(s/e)^s < Gamma(1+s) < e sqrt(s) (s/e)^s`.
    GammaSandwich,
    /// `e^{-beta} beta^{-(s+1)} sqrt(pi s/2)(s/e)^s <= sum e^{-n beta} n^s
    /// <= e(1+beta) beta^{-(s+1)} sqrt(s) (s/e)^s`.
    PowerSumSandwich,
    /// `|L_k(n)| <= max(n^k/k!, k^k/k!)`.
    MeixnerPointwise,
}

impl BoundKind {
    /// Whether the bound is stated with strict inequalities.
    pub fn is_strict(self) -> bool {
        matches!(self, BoundKind::GammaSandwich)
    }
}

/// Parameter grid for [`verify_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundParams {
    Gamma {
        s: Vec<f64>,
    },
    PowerSum {
        s: Vec<f64>,
        betas: Vec<f64>,
    },
    Pointwise {
        ks: Vec<usize>,
        ns: Vec<u64>,
        betas: Vec<f64>,
    },
}

impl BoundParams {
    pub fn kind(&self) -> BoundKind {
        match self {
            BoundParams::Gamma { .. } => BoundKind::GammaSandwich,
            BoundParams::PowerSum { .. } => BoundKind::PowerSumSandwich,
            BoundParams::Pointwise { .. } => BoundKind::MeixnerPointwise,
        }
    }
}

/// Coordinates of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridPoint {
    Gamma { s: f64 },
    PowerSum { s: f64, beta: f64 },
    Pointwise { k: usize, n: u64, beta: f64 },
}

/// One evaluated grid point. Bounds and the value are natural logarithms, so
/// slacks are relative: `slack = min(ln upper - ln value, ln value - ln lower)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub point: GridPoint,
    pub log_value: f64,
    pub log_lower: Option<f64>,
    pub log_upper: f64,
    pub slack: f64,
    /// The point sits on the boundary of the bound (|slack| below 1e-12).
    pub boundary: bool,
}

/// Outcome of [`verify_bounds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub grid: Vec<BoundPoint>,
    pub worst_slack: f64,
    pub passed: bool,
}

impl BoundReport {
    /// Grid points flagged as lying on the boundary.
    pub fn boundary_points(&self) -> impl Iterator<Item = &BoundPoint> {
        self.grid.iter().filter(|p| p.boundary)
    }

    pub fn violations(&self) -> usize {
        let strict = self.kind.is_strict();
        self.grid
            .iter()
            .filter(|p| {
                if strict {
                    p.slack <= 0.0
                } else {
                    p.slack < 0.0
                }
            })
            .count()
    }
}

const BOUNDARY_EPS: f64 = 1e-12;

fn point(point: GridPoint, log_value: f64, log_lower: Option<f64>, log_upper: f64) -> BoundPoint {
    let mut slack = log_upper - log_value;
    if let Some(lo) = log_lower {
        slack = slack.min(log_value - lo);
    }
    let boundary = slack.abs() <= BOUNDARY_EPS;
    if boundary {
        slack = 0.0;
    }
    BoundPoint {
        point,
        log_value,
        log_lower,
        log_upper,
        slack,
        boundary,
    }
}

fn stirling_core(s: f64) -> f64 {
    s * (s.ln() - 1.0)
}

/// Evaluates the chosen bound on every grid point.
///
/// Strict bounds pass when every slack is positive; the pointwise Meixner
/// bound is an inequality that is attained at `k = 0`, so it passes when no
/// slack is negative.
pub fn verify_bounds(params: &BoundParams) -> Result<BoundReport> {
    let kind = params.kind();
    let mut grid = Vec::new();
    match params {
        BoundParams::Gamma { s } => {
            check_grid_s(s)?;
            for &s in s {
                let lower = 0.5 * (2.0 * std::f64::consts::PI * s).ln() + stirling_core(s);
                let upper = 1.0 + 0.5 * s.ln() + stirling_core(s);
                grid.push(point(
                    GridPoint::Gamma { s },
                    ln_gamma(1.0 + s),
                    Some(lower),
                    upper,
                ));
            }
        }
        BoundParams::PowerSum { s, betas } => {
            check_grid_s(s)?;
            nonempty(betas.len())?;
            for &beta in betas {
                check_beta(beta)?;
                for &s in s {
                    let value = log_weighted_power_sum(s, beta, 1e-14)?;
                    let common = -(s + 1.0) * beta.ln() + stirling_core(s);
                    let lower = -beta + 0.5 * (std::f64::consts::PI * s / 2.0).ln() + common;
                    let upper = 1.0 + beta.ln_1p() + 0.5 * s.ln() + common;
                    grid.push(point(
                        GridPoint::PowerSum { s, beta },
                        value,
                        Some(lower),
                        upper,
                    ));
                }
            }
        }
        BoundParams::Pointwise { ks, ns, betas } => {
            nonempty(ks.len() * ns.len() * betas.len())?;
            for &beta in betas {
                for &k in ks {
                    let ev = PolyEval::new(k, beta, PrecisionMode::auto(k))?;
                    let lkf = ln_factorial(k);
                    let kk = if k == 0 {
                        0.0
                    } else {
                        k as f64 * (k as f64).ln()
                    };
                    for &n in ns {
                        let nk = if k == 0 {
                            0.0
                        } else {
                            k as f64 * (n as f64).ln()
                        };
                        let upper = nk.max(kk) - lkf;
                        let value = ev.eval(n).abs().ln();
                        grid.push(point(
                            GridPoint::Pointwise { k, n, beta },
                            value,
                            None,
                            upper,
                        ));
                    }
                }
            }
        }
    }
    let worst_slack = grid.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    let passed = if kind.is_strict() {
        worst_slack > 0.0
    } else {
        worst_slack >= 0.0
    };
    Ok(BoundReport {
        kind,
        grid,
        worst_slack,
        passed,
    })
}

fn nonempty(len: usize) -> Result<()> {
    if len == 0 {
        domain("bound grid is empty")
    } else {
        Ok(())
    }
}

fn check_grid_s(s: &[f64]) -> Result<()> {
    nonempty(s.len())?;
    match s.iter().find(|&&x| !(x.is_finite() && x >= 1.0)) {
        Some(bad) => domain(format!("bound grid requires s >= 1, got {bad}")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn degree_zero_is_one() {
        for n in [0, 1, 7, 500] {
            assert_eq!(eval_l(0, n, 0.8, PrecisionMode::Double).unwrap(), 1.0);
            assert!((eval_l(0, n, 0.8, PrecisionMode::Extended).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_one_at_ln2() {
        assert!((eval_l(1, 0, LN2, PrecisionMode::Double).unwrap() - 0.5).abs() < 1e-15);
        assert!((eval_l(1, 3, LN2, PrecisionMode::Double).unwrap() + 1.0).abs() < 1e-15);
        assert!((eval_l(1, 3, LN2, PrecisionMode::Extended).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_zero() {
        for k in 0..16 {
            let mode = PrecisionMode::auto(k);
            let v = eval_l(k, 0, 1.3, mode).unwrap();
            let want = (-(k as f64) * 1.3).exp();
            assert!((v - want).abs() <= 4e-15 * want, "k={k}: {v} vs {want}");
        }
    }

    #[test]
    fn double_mode_guard() {
        assert_eq!(
            PolyEval::new(13, 1.0, PrecisionMode::Double).unwrap_err(),
            Error::PrecisionMode(13)
        );
        assert!(PolyEval::new(13, 1.0, PrecisionMode::Extended).is_ok());
    }

    #[test]
    fn double_and_extended_agree() {
        for k in 0..=12 {
            let d = PolyEval::new(k, 0.5, PrecisionMode::Double).unwrap();
            let e = PolyEval::new(k, 0.5, PrecisionMode::Extended).unwrap();
            for n in [0u64, 1, 5, 20, 59, 60, 61, 100, 200] {
                let (a, b) = (d.eval(n), e.eval(n));
                let scale = (n as f64 + k as f64).powi(k as i32) / ln_factorial(k).exp();
                assert!(
                    (a - b).abs() <= 1e-11 * scale.max(1.0),
                    "k={k} n={n}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn orthogonality_closed_forms() {
        assert!((orthogonality_sum(0, 0, LN2, 1e-12).unwrap() - 2.0).abs() < 1e-11);
        assert!(orthogonality_sum(1, 0, LN2, 1e-12).unwrap().abs() < 1e-10);
        assert!((orthogonality_sum(1, 1, LN2, 1e-12).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn power_sum_closed_forms() {
        assert!((weighted_power_sum(0.0, LN2, 1e-14).unwrap() - 2.0).abs() < 1e-13);
        assert!((weighted_power_sum(1.0, LN2, 1e-14).unwrap() - 2.0).abs() < 1e-13);
        let q = (-1f64).exp();
        let s1 = q / (1.0 - q).powi(2);
        assert!((weighted_power_sum(1.0, 1.0, 1e-14).unwrap() - s1).abs() < 1e-12 * s1);
        assert!((s1 - 0.92067).abs() < 1e-5);
        for beta in [0.5f64, 1.0, 2.0] {
            let q = (-beta).exp();
            let s2 = q * (1.0 + q) / (1.0 - q).powi(3);
            assert!((weighted_power_sum(2.0, beta, 1e-14).unwrap() - s2).abs() < 1e-12 * s2);
        }
        assert!(weighted_power_sum(-1.0, 1.0, 1e-8).is_err());
        assert!(weighted_power_sum(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gamma_boundary_is_flagged() {
        let r = verify_bounds(&BoundParams::Gamma { s: vec![1.0] }).unwrap();
        assert_eq!(r.grid[0].slack, 0.0);
        assert!(r.grid[0].boundary);
        assert!(!r.passed);
        let lower = (2.0 * std::f64::consts::PI).sqrt() / std::f64::consts::E;
        assert!((r.grid[0].log_lower.unwrap().exp() - lower).abs() < 1e-12);
        assert!((lower - 0.9221).abs() < 1e-4);
    }

    #[test]
    fn gamma_just_above_one_passes() {
        let r = verify_bounds(&BoundParams::Gamma {
            s: vec![1.0 + 1e-6, 2.0, 10.0, 50.0],
        })
        .unwrap();
        assert!(r.passed, "worst {}", r.worst_slack);
        assert_eq!(r.boundary_points().count(), 0);
    }

    #[test]
    fn power_sum_example_values() {
        let r = verify_bounds(&BoundParams::PowerSum {
            s: vec![1.0],
            betas: vec![1.0],
        })
        .unwrap();
        let p = &r.grid[0];
        assert!((p.log_lower.unwrap().exp() - 0.1696).abs() < 1e-4);
        assert!((p.log_upper.exp() - 2.0).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn pointwise_example() {
        let r = verify_bounds(&BoundParams::Pointwise {
            ks: vec![1],
            ns: vec![5],
            betas: vec![LN2],
        })
        .unwrap();
        assert!((r.grid[0].log_value.exp() - 2.0).abs() < 1e-12);
        assert!((r.grid[0].log_upper.exp() - 5.0).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn pointwise_degree_zero_is_tight_but_passes() {
        let r = verify_bounds(&BoundParams::Pointwise {
            ks: vec![0],
            ns: vec![0, 3],
            betas: vec![1.0],
        })
        .unwrap();
        assert_eq!(r.worst_slack, 0.0);
        assert!(r.passed);
        assert_eq!(r.violations(), 0);
    }

    #[test]
    fn grid_domain_errors() {
        assert!(verify_bounds(&BoundParams::Gamma { s: vec![0.5] }).is_err());
        assert!(verify_bounds(&BoundParams::Gamma { s: vec![] }).is_err());
        assert!(verify_bounds(&BoundParams::PowerSum {
            s: vec![0.9],
            betas: vec![1.0]
        })
        .is_err());
    }

    #[test]
    fn leading_coefficient_limit() {
        let n = 10_000u64;
        for k in 1..=6 {
            let beta: f64 = 1.0;
            let v = eval_l(k, n, beta, PrecisionMode::Double).unwrap();
            let lead =
                (-1f64).powi(k as i32) * beta.exp_m1().powi(k as i32) * (-(k as f64) * beta).exp()
                    / ln_factorial(k).exp();
            let ratio = v / (n as f64).powi(k as i32);
            assert!((ratio / lead - 1.0).abs() < 0.01, "k={k}");
        }
    }

    #[test]
    fn ln_binomial_paths_agree() {
        for n in [61u64, 100, 150] {
            for j in [0u64, 1, 3, 10] {
                let exact =
                    big_to_f64(&big_from_uint(&binomial(n, j)), &mut Consts::new().unwrap()).ln();
                assert!((ln_binomial(n, j) - exact).abs() < 1e-12 * exact.max(1.0));
            }
        }
    }
}
