// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Off-diagonal coefficient families, the sequences
//! `f_{k,n,m} = sum_i c_{i,i+m} d_{n,i} d_{n+m,i+m}`, their structure maps,
//! weighted `l_p` norms and the explicit constant chain `C_1 ... C_5, C(beta)`.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_beta, domain, Error, Result};
use crate::linalg::{log_power_tail, log_sum_exp};

const MAX_TERMS: usize = 10_000_000;
/// Relative tail tolerance used by the lemma checks.
pub const LEMMA_REL_TOL: f64 = 1e-13;

/// `d_{n,i} = sqrt(n!/(n-i)!)`: exact integers for `n <= 60`, log domain above.
pub fn d_coeff(n: u64, i: u64) -> Result<f64> {
    if i > n {
        return domain(format!("d_{{n,i}} needs i <= n, got n={n}, i={i}"));
    }
    if n <= 60 {
        let mut acc = BigUint::from(1u32);
        for j in 0..i {
            acc *= n - j;
        }
        let digits = acc.to_u64_digits();
        let mut v = 0.0f64;
        for d in digits.iter().rev() {
            v = v * 18446744073709551616.0 + *d as f64;
        }
        Ok(v.sqrt())
    } else {
        let l: f64 = (0..i).map(|j| ((n - j) as f64).ln()).sum();
        Ok((0.5 * l).exp())
    }
}

/// `d_{n,i} d_{n+m,i+m}` as a product of square roots; zero outside the support.
fn d_pair(n: i64, i: i64, m: i64) -> f64 {
    if i < 0 || i > n || i + m < 0 || n + m < 0 {
        return 0.0;
    }
    let mut v = 1.0;
    for j in 0..i {
        v *= ((n - j) as f64).sqrt();
    }
    for j in 0..i + m {
        v *= ((n + m - j) as f64).sqrt();
    }
    v
}

/// Coefficients `c_{i,i+m}` of an element of `F_{k,m}`, indexed by `i` over
/// `{ i >= 0, i + m >= 0, 2i + m <= k }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalCoeffs {
    k: usize,
    m: i64,
    c: Vec<Complex64>,
}

impl OffDiagonalCoeffs {
    /// Admissible index range for `(k, m)`; `None` when `|m| > k`.
    pub fn admissible_range(k: usize, m: i64) -> Option<RangeInclusive<usize>> {
        let k = k as i64;
        if m.abs() > k {
            return None;
        }
        let lo = (-m).max(0);
        let hi = (k - m).div_euclid(2);
        Some(lo as usize..=hi as usize)
    }

    fn range_or_err(k: usize, m: i64) -> Result<RangeInclusive<usize>> {
        Self::admissible_range(k, m)
            .ok_or_else(|| Error::Domain(format!("m={m} outside [-{k}, {k}]")))
    }

    pub fn zeros(k: usize, m: i64) -> Result<Self> {
        let r = Self::range_or_err(k, m)?;
        Ok(Self {
            k,
            m,
            c: vec![Complex64::new(0.0, 0.0); r.count()],
        })
    }

    /// Builds from `(i, c_{i,i+m})` pairs; unlisted admissible indices are zero.
    pub fn new(
        k: usize,
        m: i64,
        entries: impl IntoIterator<Item = (usize, Complex64)>,
    ) -> Result<Self> {
        let mut out = Self::zeros(k, m)?;
        for (i, v) in entries {
            out.set(i, v)?;
        }
        Ok(out)
    }

    /// Independent standard complex Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(k: usize, m: i64, rng: &mut R) -> Result<Self> {
        let mut out = Self::zeros(k, m)?;
        for v in out.c.iter_mut() {
            *v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn range(&self) -> RangeInclusive<usize> {
        Self::admissible_range(self.k, self.m).expect("validated at construction")
    }

    fn offset(&self) -> usize {
        *self.range().start()
    }

    pub fn set(&mut self, i: usize, v: Complex64) -> Result<()> {
        if !self.range().contains(&i) {
            return domain(format!(
                "index {i} not admissible for k={}, m={}",
                self.k, self.m
            ));
        }
        let off = self.offset();
        self.c[i - off] = v;
        Ok(())
    }

    /// `c_{i,i+m}`; zero for inadmissible `i`.
    pub fn get(&self, i: usize) -> Complex64 {
        if self.range().contains(&i) {
            self.c[i - self.offset()]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `(i, c_{i,i+m})` over the admissible range.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let off = self.offset();
        self.c.iter().enumerate().map(move |(j, v)| (j + off, *v))
    }

    pub fn abs_sum(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|z| z.norm() == 0.0)
    }

    /// `f_{k,n,m}`.
    pub fn eval(&self, n: usize) -> Complex64 {
        let n = n as i64;
        if n + self.m < 0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.iter() {
            if i as i64 > n {
                break;
            }
            acc += c * d_pair(n, i as i64, self.m);
        }
        acc
    }
}

/// A nonnegative-integer-indexed sequence with a certified polynomial majorant
/// `|f(n)| <= exp(log_amp) (n + shift)^power`.
pub trait WeightedSequence {
    fn value(&self, n: usize) -> Complex64;
    fn growth(&self) -> GrowthBound;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub log_amp: f64,
    pub shift: f64,
    pub power: f64,
}

impl WeightedSequence for OffDiagonalCoeffs {
    fn value(&self, n: usize) -> Complex64 {
        self.eval(n)
    }

    /// `|d_{n,i} d_{n+m,i+m}| <= (n + k)^{(2i+m)/2} <= (n + k)^{k/2}`.
    fn growth(&self) -> GrowthBound {
        GrowthBound {
            log_amp: self.abs_sum().ln(),
            shift: self.k.max(1) as f64,
            power: self.k as f64 / 2.0,
        }
    }
}

/// Evaluated `f_{k,n,m}` for `n = 0 .. len`, extendable through its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceF {
    pub coeffs: OffDiagonalCoeffs,
    pub values: Vec<Complex64>,
}

impl SequenceF {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl WeightedSequence for SequenceF {
    fn value(&self, n: usize) -> Complex64 {
        self.values
            .get(n)
            .copied()
            .unwrap_or_else(|| self.coeffs.eval(n))
    }

    fn growth(&self) -> GrowthBound {
        self.coeffs.growth()
    }
}

/// `f_{k,n,m}` for `n = 0 ..= n_max`.
pub fn eval_f(coeffs: &OffDiagonalCoeffs, n_max: usize) -> SequenceF {
    SequenceF {
        coeffs: coeffs.clone(),
        values: (0..=n_max).map(|n| coeffs.eval(n)).collect(),
    }
}

/// Structure maps between the spaces `F_{k,m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformMode {
    /// `m >= 1`: `f in F_{k,m}` gives `g in F_{k-1,m-1}` with `f(n) = sqrt(n+m) g(n)`.
    FactorOut,
    /// `m >= 1`: `f in F_{k,m}` gives `g in F_{k+1,m-1}` with
    /// `sqrt(n+1) f(n) = g(n+1)` and `g(0) = 0`.
    ShiftUp,
    /// `m < 0`: `f in F_{k,m}` gives `g in F_{k,-m}` with `f(n) = g(n+m)` for
    /// `n >= -m` and `f(n) = 0` below.
    NegativeMirror,
}

pub fn transform(coeffs: &OffDiagonalCoeffs, mode: TransformMode) -> Result<OffDiagonalCoeffs> {
    let (k, m) = (coeffs.k, coeffs.m);
    match mode {
        TransformMode::FactorOut => {
            if m < 1 {
                return domain(format!("FactorOut needs m >= 1, got {m}"));
            }
            OffDiagonalCoeffs::new(k - 1, m - 1, coeffs.iter())
        }
        TransformMode::ShiftUp => {
            if m < 1 {
                return domain(format!("ShiftUp needs m >= 1, got {m}"));
            }
            OffDiagonalCoeffs::new(k + 1, m - 1, coeffs.iter().map(|(i, c)| (i + 1, c)))
        }
        TransformMode::NegativeMirror => {
            if m >= 0 {
                return domain(format!("NegativeMirror needs m < 0, got {m}"));
            }
            let shift = (-m) as usize;
            OffDiagonalCoeffs::new(k, -m, coeffs.iter().map(|(i, c)| (i - shift, c)))
        }
    }
}

/// `sum_i |c_i| d_{n,i} d_{n+m,i+m}`, the magnitude scale of `f_{k,n,m}`.
pub fn term_scale(coeffs: &OffDiagonalCoeffs, n: usize) -> f64 {
    let n = n as i64;
    if n + coeffs.m < 0 {
        return 0.0;
    }
    coeffs
        .iter()
        .take_while(|(i, _)| *i as i64 <= n)
        .map(|(i, c)| c.norm() * d_pair(n, i as i64, coeffs.m))
        .sum()
}

/// Largest pointwise residual, for `n <= n_max`, of the identity that links
/// `coeffs` to `transform(coeffs, mode)`, relative to the term scale.
pub fn structure_residual(
    coeffs: &OffDiagonalCoeffs,
    mode: TransformMode,
    n_max: usize,
) -> Result<f64> {
    let g = transform(coeffs, mode)?;
    let m = coeffs.m;
    let mut worst: f64 = 0.0;
    let mut record = |diff: f64, scale: f64| {
        if diff > 0.0 {
            worst = worst.max(if scale > 0.0 {
                diff / scale
            } else {
                f64::INFINITY
            });
        }
    };
    match mode {
        TransformMode::FactorOut => {
            for n in 0..=n_max {
                let lhs = coeffs.eval(n);
                let rhs = g.eval(n) * ((n as i64 + m) as f64).sqrt();
                record((lhs - rhs).norm(), term_scale(coeffs, n));
            }
        }
        TransformMode::ShiftUp => {
            record(g.eval(0).norm(), term_scale(&g, 0));
            for n in 0..=n_max {
                let w = ((n + 1) as f64).sqrt();
                let lhs = coeffs.eval(n) * w;
                record((lhs - g.eval(n + 1)).norm(), w * term_scale(coeffs, n));
            }
        }
        TransformMode::NegativeMirror => {
            let shift = (-m) as usize;
            for n in 0..=n_max {
                let lhs = coeffs.eval(n);
                let rhs = if n >= shift {
                    g.eval(n - shift)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                record((lhs - rhs).norm(), term_scale(coeffs, n));
            }
        }
    }
    Ok(worst)
}

fn check_p(p: f64, min: f64) -> Result<()> {
    if p.is_finite() && p >= min {
        Ok(())
    } else {
        domain(format!("exponent p must be at least {min}, got {p}"))
    }
}

/// `ln (sum_n e^{-n beta} |f(n)|^p)^{1/p}` with a certified relative tail below `rel_tol`.
pub fn log_weighted_lp_norm<S: WeightedSequence + ?Sized>(
    seq: &S,
    p: f64,
    beta: f64,
    rel_tol: f64,
) -> Result<f64> {
    check_p(p, 1.0)?;
    check_beta(beta)?;
    if !(rel_tol > 0.0) {
        return domain("relative tolerance must be positive");
    }
    let g = seq.growth();
    if g.log_amp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut logs = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for n in 0..MAX_TERMS {
        let v = seq.value(n).norm();
        if v > 0.0 {
            let l = -beta * n as f64 + p * v.ln();
            logs.push(l);
            running = if running == f64::NEG_INFINITY {
                l
            } else {
                let (hi, lo) = if running > l {
                    (running, l)
                } else {
                    (l, running)
                };
                hi + (lo - hi).exp().ln_1p()
            };
        }
        if let Some(tail) = log_power_tail(p * g.log_amp, beta, g.shift, p * g.power, n + 1) {
            if running > f64::NEG_INFINITY && tail <= rel_tol.ln() + running {
                return Ok(log_sum_exp(&logs) / p);
            }
        }
    }
    Err(Error::NonConvergent(MAX_TERMS))
}

/// `(sum_n e^{-n beta} |f(n)|^p)^{1/p}` with a certified relative tail below `rel_tol`.
pub fn weighted_lp_norm<S: WeightedSequence + ?Sized>(
    seq: &S,
    p: f64,
    beta: f64,
    rel_tol: f64,
) -> Result<f64> {
    Ok(log_weighted_lp_norm(seq, p, beta, rel_tol)?.exp())
}

/// The explicit constants of the weighted-norm estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantChain {
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c_of_beta: f64,
    pub c_tilde: f64,
    pub big_c_tilde: f64,
}

impl ConstantChain {
    /// `C_p = (C(beta) p)^{1/2}`.
    pub fn big_c_p(&self, p: f64) -> f64 {
        (self.c_of_beta * p).sqrt()
    }

    /// `c_p = sqrt(3) (1 - e^{-beta})^{-1/2} C_p`.
    pub fn c_p(&self, p: f64) -> f64 {
        3f64.sqrt() / one_minus_q(self.beta).sqrt() * self.big_c_p(p)
    }
}

fn one_minus_q(beta: f64) -> f64 {
    -(-beta).exp_m1()
}

/// Constant chain at inverse temperature `beta`.
pub fn constants(beta: f64) -> Result<ConstantChain> {
    check_beta(beta)?;
    let e = std::f64::consts::E;
    let omq = one_minus_q(beta);
    let c2 = (1.0 / omq + e * (1.0 + 1.0 / beta)) * (e + 1.0 / beta);
    let c1 = (beta / 2.0).exp() * c2;
    let e2b2 = (2.0 * beta + 2.0).exp();
    let c4 =
        2.0 * e2b2 / omq + 16.0 * e2b2 * (beta.powi(-3) + beta.powi(-2)) * beta.powi(-2).max(1.0);
    let c5 = (4.0 * c1).powi(2) * (c4 + 3.0);
    let c3 = c1 * c5;
    let c_of_beta = 4.0 * (1.5 * beta).exp() * c3;
    let c_tilde = beta.powi(-2).min(1.0 / beta) / (36.0 * e);
    let big_c_tilde = 24.0 / omq * c_of_beta;
    Ok(ConstantChain {
        beta,
        c1,
        c2,
        c3,
        c4,
        c5,
        c_of_beta,
        c_tilde,
        big_c_tilde,
    })
}

/// One side-by-side evaluation of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl LemmaCheck {
    fn from_logs(log_lhs: f64, log_rhs: f64) -> Self {
        Self {
            lhs: log_lhs.exp(),
            rhs: log_rhs.exp(),
            passed: log_lhs <= log_rhs,
        }
    }

    /// `rhs / lhs`.
    pub fn slack_ratio(&self) -> f64 {
        self.rhs / self.lhs
    }
}

/// Weighted `l_p` norm against
/// `e^{m beta (1/(2p) - 1/4)} (C(beta) p)^{k/2}` times the weighted `l_2` norm.
pub fn main_lemma_check(coeffs: &OffDiagonalCoeffs, p: f64, beta: f64) -> Result<LemmaCheck> {
    check_p(p, 2.0)?;
    let chain = constants(beta)?;
    let lhs = log_weighted_lp_norm(coeffs, p, beta, LEMMA_REL_TOL)?;
    let l2 = log_weighted_lp_norm(coeffs, 2.0, beta, LEMMA_REL_TOL)?;
    let m = coeffs.m() as f64;
    let k = coeffs.k() as f64;
    let rhs = m * beta * (0.5 / p - 0.25) + 0.5 * k * (chain.c_of_beta * p).ln() + l2;
    Ok(LemmaCheck::from_logs(lhs, rhs))
}

/// `lhs / (l_2 norm * e^{m beta (1/(2p) - 1/4)})`, the quantity the main estimate
/// bounds by `(C(beta) p)^{k/2}`.
pub fn main_lemma_ratio(coeffs: &OffDiagonalCoeffs, p: f64, beta: f64) -> Result<f64> {
    check_p(p, 1.0)?;
    let lhs = log_weighted_lp_norm(coeffs, p, beta, LEMMA_REL_TOL)?;
    let l2 = log_weighted_lp_norm(coeffs, 2.0, beta, LEMMA_REL_TOL)?;
    Ok((lhs - l2 - coeffs.m() as f64 * beta * (0.5 / p - 0.25)).exp())
}

/// Which polynomial estimate [`poly_lemma_check`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolyMode {
    /// `p_k(n)` against `(C_1 p)^k`.
    Plain,
    /// `sqrt(n+1) p_k(n)` against `(C_3 p)^{(2k+1)/2}`.
    SqrtWeighted,
}

/// `p(n) = sum_j a_j n^j`, optionally multiplied by `sqrt(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySequence {
    pub coeffs: Vec<Complex64>,
    pub sqrt_weighted: bool,
}

impl WeightedSequence for PolySequence {
    fn value(&self, n: usize) -> Complex64 {
        let x = n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * x + a;
        }
        if self.sqrt_weighted {
            acc * (x + 1.0).sqrt()
        } else {
            acc
        }
    }

    /// `|p(n)| <= (sum |a_j|) (n+1)^deg`.
    fn growth(&self) -> GrowthBound {
        let deg = self.coeffs.len().saturating_sub(1) as f64;
        GrowthBound {
            log_amp: self.coeffs.iter().map(|z| z.norm()).sum::<f64>().ln(),
            shift: 1.0,
            power: deg + if self.sqrt_weighted { 0.5 } else { 0.0 },
        }
    }
}

/// Polynomial estimates: `Plain` uses `(C_1 p)^k`, `SqrtWeighted` uses
/// `(C_3 p)^{(2k+1)/2}`, where `k = len - 1`.
pub fn poly_lemma_check(
    poly_coeffs: &[Complex64],
    p: f64,
    beta: f64,
    mode: PolyMode,
) -> Result<LemmaCheck> {
    check_p(p, 2.0)?;
    if poly_coeffs.is_empty() {
        return domain("polynomial needs at least one coefficient");
    }
    let chain = constants(beta)?;
    let k = (poly_coeffs.len() - 1) as f64;
    let seq = PolySequence {
        coeffs: poly_coeffs.to_vec(),
        sqrt_weighted: mode == PolyMode::SqrtWeighted,
    };
    let lhs = log_weighted_lp_norm(&seq, p, beta, LEMMA_REL_TOL)?;
    let l2 = log_weighted_lp_norm(&seq, 2.0, beta, LEMMA_REL_TOL)?;
    let factor = match mode {
        PolyMode::Plain => k * (chain.c1 * p).ln(),
        PolyMode::SqrtWeighted => (2.0 * k + 1.0) / 2.0 * (chain.c3 * p).ln(),
    };
    Ok(LemmaCheck::from_logs(lhs, factor + l2))
}

/// Induction bound `(2 e^{beta/2})^m (C_3 p)^{k/2}` for `0 <= m <= k`.
pub fn induction_bound_check(coeffs: &OffDiagonalCoeffs, p: f64, beta: f64) -> Result<LemmaCheck> {
    check_p(p, 2.0)?;
    if coeffs.m() < 0 {
        return domain("induction bound needs m >= 0");
    }
    let chain = constants(beta)?;
    let lhs = log_weighted_lp_norm(coeffs, p, beta, LEMMA_REL_TOL)?;
    let l2 = log_weighted_lp_norm(coeffs, 2.0, beta, LEMMA_REL_TOL)?;
    let m = coeffs.m() as f64;
    let rhs = m * (2f64.ln() + beta / 2.0) + 0.5 * coeffs.k() as f64 * (chain.c3 * p).ln() + l2;
    Ok(LemmaCheck::from_logs(lhs, rhs))
}

/// The auxiliary estimate used when splitting off the first `m` terms:
/// `sqrt(m) e^{(m-1) beta (1/2 - 1/p)} <= (2 e^{beta/2})^m (C_3 p)^{l/2}`.
pub fn j1_auxiliary_check(m: usize, l: usize, p: f64, beta: f64) -> Result<LemmaCheck> {
    check_p(p, 2.0)?;
    let chain = constants(beta)?;
    let mf = m as f64;
    let lhs = 0.5 * mf.ln() + (mf - 1.0) * beta * (0.5 - 1.0 / p);
    let rhs = mf * (2f64.ln() + beta / 2.0) + 0.5 * l as f64 * (chain.c3 * p).ln();
    Ok(LemmaCheck::from_logs(lhs, rhs))
}
