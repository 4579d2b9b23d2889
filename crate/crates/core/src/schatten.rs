// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Schatten norms, symmetric-embedding `L_p(rho)` norms, the two-band
//! sandwich estimate and the Ball-Carlen-Lieb convexity check.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fock::{expect_matrix, FockOperator, GibbsSpec};
use crate::linalg::{diag_sandwich, symmetric_tridiagonal_eigenvalues, CMat};
use crate::sequences::{log_weighted_lp_norm, OffDiagonalCoeffs};

/// Slack allowed in the Ball-Carlen-Lieb comparison.
pub const BCL_SLACK: f64 = 1e-10;

/// Singular values of a square matrix in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub source_dim: usize,
}

impl SingularSpectrum {
    pub fn of(x: &CMat) -> Self {
        let sv = x.clone().svd(false, false).singular_values;
        Self::from_unsorted(sv.iter().copied().collect(), x.nrows())
    }

    pub fn of_real(x: &DMatrix<f64>) -> Self {
        let sv = x.clone().svd(false, false).singular_values;
        Self::from_unsorted(sv.iter().copied().collect(), x.nrows())
    }

    /// Spectrum of [`symmetric_two_band`] without forming the dense matrix.
    pub fn of_symmetric_two_band(a_seq: &[f64]) -> Result<Self> {
        let diag = vec![0.0; a_seq.len() + 1];
        let eig = symmetric_tridiagonal_eigenvalues(&diag, a_seq)
            .ok_or(Error::NonConvergent(a_seq.len() + 1))?;
        Ok(Self::from_unsorted(
            eig.iter().map(|l| l.abs()).collect(),
            a_seq.len() + 1,
        ))
    }

    fn from_unsorted(mut values: Vec<f64>, source_dim: usize) -> Self {
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        Self { values, source_dim }
    }

    /// `(sum sigma_i^p)^{1/p}`; `p = inf` gives the largest singular value.
    pub fn schatten(&self, p: f64) -> f64 {
        power_mean_norm(&self.values, p)
    }
}

/// `(sum |v_i|^p)^{1/p}` scaled by the largest entry to avoid overflow.
pub fn power_mean_norm(v: &[f64], p: f64) -> f64 {
    let top = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return top;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / top).powf(p)).sum();
    top * s.powf(1.0 / p)
}

pub(crate) fn check_schatten_p(p: f64) -> Result<()> {
    if p == f64::INFINITY || (p.is_finite() && p >= 1.0) {
        Ok(())
    } else {
        domain(format!("Schatten exponent must lie in [1, inf], got {p}"))
    }
}

/// Schatten `p`-norm from the singular values.
pub fn schatten_norm(x: &FockOperator, p: f64) -> Result<f64> {
    schatten_norm_matrix(x.entries(), p)
}

pub fn schatten_norm_matrix(x: &CMat, p: f64) -> Result<f64> {
    check_schatten_p(p)?;
    Ok(SingularSpectrum::of(x).schatten(p))
}

/// Schatten `p`-norm of a real matrix. Even integer `p` uses
/// `Tr((X^T X)^{p/2})`; other `p` use the eigenvalues of `X^T X`.
pub fn real_schatten_norm(x: &DMatrix<f64>, p: f64) -> Result<f64> {
    check_schatten_p(p)?;
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if p.is_infinite() {
        return Ok(SingularSpectrum::of_real(x).schatten(p));
    }
    let xs = x / scale;
    let gram = xs.tr_mul(&xs);
    let half = p / 2.0;
    if half.fract() == 0.0 && (1.0..=64.0).contains(&half) {
        let j = half as u32;
        let tr = trace_power_sym(&gram, j);
        return Ok(scale * tr.max(0.0).powf(1.0 / p));
    }
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let s: f64 = eig.iter().map(|l| l.max(0.0).powf(half)).sum();
    Ok(scale * s.powf(1.0 / p))
}

/// `Tr(M^j)` for symmetric `M`, by splitting `j = a + b` and pairing powers.
fn trace_power_sym(m: &DMatrix<f64>, j: u32) -> f64 {
    if j == 1 {
        return m.trace();
    }
    let a = j / 2;
    let b = j - a;
    let pa = mat_pow(m, a);
    let pb = if b == a { pa.clone() } else { &pa * m };
    // Tr(A B) = sum_ij A_ij B_ji, and powers of a symmetric matrix are symmetric.
    pa.iter().zip(pb.iter()).map(|(x, y)| x * y).sum()
}

fn mat_pow(m: &DMatrix<f64>, mut e: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result: Option<DMatrix<f64>> = None;
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => &r * &base,
            });
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result.unwrap_or_else(|| DMatrix::identity(n, n))
}

fn check_dim(x: &FockOperator, spec: &GibbsSpec) -> Result<()> {
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// `||rho^{1/(2p)} x rho^{1/(2p)}||_p`.
pub fn kosaki_norm(x: &FockOperator, p: f64, spec: &GibbsSpec) -> Result<f64> {
    check_dim(x, spec)?;
    kosaki_norm_matrix(x.entries(), p, spec)
}

pub(crate) fn kosaki_norm_matrix(x: &CMat, p: f64, spec: &GibbsSpec) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return domain(format!(
            "L_p(rho) exponent must be finite and at least 1, got {p}"
        ));
    }
    let r = spec.rho_power_diag(0.5 / p);
    schatten_norm_matrix(&diag_sandwich(&r, x, &r), p)
}

/// Singular values of a matrix whose only nonzero entries lie on one band
/// (`offset` above the diagonal, or below for negative offsets): the moduli of
/// the band entries, padded with zeros.
pub fn single_band_spectrum(band: &[Complex64], offset: i64) -> SingularSpectrum {
    let dim = band.len() + offset.unsigned_abs() as usize;
    let mut values: Vec<f64> = band.iter().map(|z| z.norm()).collect();
    values.resize(dim, 0.0);
    SingularSpectrum::from_unsorted(values, dim)
}

/// The two sides of the two-band sandwich estimate
/// `(2^{1/p}/3) ||a||_p <= ||A||_p <= 2 ||a||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub lower: f64,
    pub mid: f64,
    pub upper: f64,
    pub passed: bool,
}

/// `A = sum a_n (e_n e_{n+1}^T + e_{n+1} e_n^T)` on dimension `len + 1`.
pub fn symmetric_two_band(a_seq: &[f64]) -> DMatrix<f64> {
    let d = a_seq.len() + 1;
    let mut m = DMatrix::zeros(d, d);
    for (n, a) in a_seq.iter().enumerate() {
        m[(n, n + 1)] = *a;
        m[(n + 1, n)] = *a;
    }
    m
}

/// Relative allowance for the equality case `len = 1`, `p = 1`, where the upper bound is attained.
pub const SANDWICH_ROUNDOFF: f64 = 1e-13;

pub fn sandwich_check(a_seq: &[f64], p: f64) -> Result<SandwichCheck> {
    if !(p.is_finite() && p >= 1.0) {
        return domain(format!(
            "sandwich exponent must be finite and at least 1, got {p}"
        ));
    }
    if a_seq.iter().any(|a| !a.is_finite()) {
        return domain("sequence has non-finite entries");
    }
    let mid = SingularSpectrum::of_symmetric_two_band(a_seq)?.schatten(p);
    let lp = power_mean_norm(a_seq, p);
    let lower = 2f64.powf(1.0 / p) / 3.0 * lp;
    let upper = 2.0 * lp;
    Ok(SandwichCheck {
        lower,
        mid,
        upper,
        passed: lower <= mid * (1.0 + SANDWICH_ROUNDOFF)
            && mid <= upper * (1.0 + SANDWICH_ROUNDOFF),
    })
}

/// The degree-`k` band element `x_m = sum c_{i,i+m} (a*)^i a^j rho^{1/2}` on the
/// truncated space: entries `(1 - e^{-beta})^{1/2} e^{-(n+m) beta/2} f_{k,n,m}`
/// at `(n, n+m)`.
pub fn band_element(coeffs: &OffDiagonalCoeffs, spec: &GibbsSpec) -> CMat {
    let d = spec.dim();
    let beta = spec.beta();
    let m = coeffs.m();
    let log_pref = 0.5 * (-(-beta).exp_m1()).ln();
    let mut x = CMat::zeros(d, d);
    for n in 0..d {
        let col = n as i64 + m;
        if col < 0 || col >= d as i64 {
            continue;
        }
        let w = (log_pref - col as f64 * beta / 2.0).exp();
        x[(n, col as usize)] = coeffs.eval(n) * w;
    }
    x
}

/// Closed form of `||rho^{1/(2p)-1/4} x_m rho^{1/(2p)-1/4}||_p` on the full space:
/// `(1 - e^{-beta})^{1/p} e^{-m beta (1/(2p) + 1/4)} (sum_n e^{-n beta} |f_{k,n,m}|^p)^{1/p}`.
pub fn band_element_norm(
    coeffs: &OffDiagonalCoeffs,
    p: f64,
    beta: f64,
    rel_tol: f64,
) -> Result<f64> {
    let log_l = log_weighted_lp_norm(coeffs, p, beta, rel_tol)?;
    let m = coeffs.m() as f64;
    let log_pref = (-(-beta).exp_m1()).ln() / p - m * beta * (0.5 / p + 0.25);
    Ok((log_pref + log_l).exp())
}

/// Both sides of `||y||^2 <= |omega(y)|^2 + (p - 1) ||y - omega(y)||^2` in `L_p(rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BclCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

pub fn bcl_check(y: &FockOperator, p: f64, spec: &GibbsSpec) -> Result<BclCheck> {
    check_dim(y, spec)?;
    if !(p.is_finite() && p >= 2.0) {
        return domain(format!("convexity check needs p >= 2, got {p}"));
    }
    if !spec.is_renormalized() {
        return domain("convexity check needs a renormalized Gibbs state");
    }
    let w = expect_matrix(y.entries(), spec);
    let lhs = kosaki_norm_matrix(y.entries(), p, spec)?.powi(2);
    let mut centered = y.entries().clone();
    for i in 0..centered.nrows() {
        centered[(i, i)] -= w;
    }
    let rhs = w.norm_sqr() + (p - 1.0) * kosaki_norm_matrix(&centered, p, spec)?.powi(2);
    Ok(BclCheck {
        lhs,
        rhs,
        passed: lhs <= rhs + BCL_SLACK,
    })
}
