// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantum Ornstein-Uhlenbeck semigroup on the truncated Hilbert-Schmidt
//! space: parameters, the ladder superoperators `D_i`, `A_i`, the eigenbasis
//! `xi_{m,n}`, the generator and the spectral action of `T_t`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_beta, domain, Error, Result};
use crate::fock::GibbsSpec;
use crate::linalg::{self, hs_inner, CMat};

/// Absolute tolerance on the two parameter constraints.
pub const CONSTRAINT_TOL: f64 = 1e-12;
/// Gram defect above which expansions solve the Gram system.
pub const GRAM_CORRECTION_THRESHOLD: f64 = 1e-10;
/// Default relative expansion residual accepted by [`semigroup_apply`].
pub const DEFAULT_SPAN_TOL: f64 = 1e-8;

/// Choice of solution of the parameter constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamBranch {
    /// `alpha_3 = 1`, `alpha_1 = -alpha_2`, `alpha_2 = tanh(beta/4)`.
    CanonicalCfl,
    /// Given `(alpha_2, alpha_3)`; `alpha_1` follows from the first constraint.
    General { alpha2: f64, alpha3: f64 },
}

/// Semigroup parameters satisfying
/// `(1/2)(1 + a2^2) sinh(beta/2) = -a1 cosh(beta/2)` and
/// `(1/2)(a1^2 + a3^2) sinh(beta/2) = a2 a3 cosh(beta/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub gamma: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau: f64,
    pub beta: f64,
}

impl OuParams {
    /// Absolute residuals of the two constraints.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        constraint_residuals(self.beta, self.alpha1, self.alpha2, self.alpha3)
    }

    /// Eigenvalue `m tau_1 + n tau_2` of `xi_{m,n}`.
    pub fn eigenvalue(&self, m: usize, n: usize) -> f64 {
        m as f64 * self.tau1 + n as f64 * self.tau2
    }
}

fn constraint_residuals(beta: f64, a1: f64, a2: f64, a3: f64) -> (f64, f64) {
    let (s, c) = ((beta / 2.0).sinh(), (beta / 2.0).cosh());
    (
        (0.5 * (1.0 + a2 * a2) * s + a1 * c).abs(),
        (0.5 * (a1 * a1 + a3 * a3) * s - a2 * a3 * c).abs(),
    )
}

pub fn solve_params(beta: f64, branch: ParamBranch) -> Result<OuParams> {
    check_beta(beta)?;
    let (a1, a2, a3) = match branch {
        ParamBranch::CanonicalCfl => {
            let a2 = (beta / 4.0).tanh();
            (-a2, a2, 1.0)
        }
        ParamBranch::General { alpha2, alpha3 } => {
            if !(alpha2.is_finite() && alpha3.is_finite()) {
                return Err(Error::InfeasibleParameters("non-finite alpha".into()));
            }
            (
                -0.5 * (1.0 + alpha2 * alpha2) * (beta / 2.0).tanh(),
                alpha2,
                alpha3,
            )
        }
    };
    let (r1, r2) = constraint_residuals(beta, a1, a2, a3);
    let scale = (beta / 2.0).cosh() * (1.0 + a1 * a1 + a2 * a2 + a3 * a3);
    if r1 > CONSTRAINT_TOL * scale || r2 > CONSTRAINT_TOL * scale {
        return Err(Error::InfeasibleParameters(format!(
            "constraint residuals ({r1:.3e}, {r2:.3e}) for alpha = ({a1}, {a2}, {a3})"
        )));
    }
    let gamma = 1.0 / (1.0 + a2 * a2);
    let tau1 = -2.0 * gamma * a1;
    let tau2 = 2.0 * gamma * a2 * a3;
    let tau = tau1.min(tau2);
    if !(tau > 0.0) {
        return Err(Error::InfeasibleParameters(format!(
            "spectral gap {tau} is not positive"
        )));
    }
    Ok(OuParams {
        alpha1: a1,
        alpha2: a2,
        alpha3: a3,
        gamma,
        tau1,
        tau2,
        tau,
        beta,
    })
}

/// Values of `alpha_3` compatible with `alpha_2` (and the induced `alpha_1`),
/// i.e. the real roots of the second constraint, in descending order.
pub fn general_alpha3_roots(beta: f64, alpha2: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let (s, c) = ((beta / 2.0).sinh(), (beta / 2.0).cosh());
    let a1 = -0.5 * (1.0 + alpha2 * alpha2) * (beta / 2.0).tanh();
    let disc = alpha2 * alpha2 * c * c - a1 * a1 * s * s;
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    let r = disc.sqrt();
    let mut roots = vec![(alpha2 * c + r) / s, (alpha2 * c - r) / s];
    roots.dedup();
    Ok(roots)
}

/// A `D x D` matrix regarded as a vector of the Hilbert-Schmidt space.
#[derive(Debug, Clone, PartialEq)]
pub struct HsVector {
    pub mat: CMat,
}

impl HsVector {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `Tr(self* other)`.
    pub fn inner(&self, other: &HsVector) -> Complex64 {
        hs_inner(&self.mat, &other.mat)
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scale(&self, s: Complex64) -> HsVector {
        HsVector { mat: &self.mat * s }
    }

    pub fn add(&self, other: &HsVector) -> HsVector {
        HsVector {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &HsVector) -> HsVector {
        HsVector {
            mat: &self.mat - &other.mat,
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &HsVector) {
        self.mat.zip_apply(&other.mat, |a, b| *a += s * b);
    }

    /// The modular conjugation `y -> y*`.
    pub fn conj_transpose(&self) -> HsVector {
        HsVector {
            mat: self.mat.adjoint(),
        }
    }
}

/// Superoperators built from the ladder operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Superop {
    D1,
    D2,
    D1Adj,
    D2Adj,
    A1,
    A2,
    A1Adj,
    A2Adj,
}

/// `(lower_left, raise_left, lower_right, raise_right)` weights of `y -> c1 a y + c2 a* y + c3 y a + c4 y a*`.
type ShiftWeights = [f64; 4];

fn superop_weights(which: Superop, beta: f64) -> ShiftWeights {
    let s0 = (2.0 * (beta / 2.0).sinh()).powf(-0.5);
    let e = (beta / 4.0).exp();
    let ei = 1.0 / e;
    let d1 = [s0 * e, 0.0, -s0 * ei, 0.0];
    let d2 = [0.0, s0 * ei, 0.0, -s0 * e];
    let d1a = [0.0, s0 * e, 0.0, -s0 * ei];
    let d2a = [s0 * ei, 0.0, -s0 * e, 0.0];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let comb = |x: ShiftWeights, y: ShiftWeights, sign: f64| -> ShiftWeights {
        [0, 1, 2, 3].map(|i| h * (x[i] + sign * y[i]))
    };
    match which {
        Superop::D1 => d1,
        Superop::D2 => d2,
        Superop::D1Adj => d1a,
        Superop::D2Adj => d2a,
        Superop::A1 => comb(d1, d2, -1.0),
        Superop::A2 => comb(d1, d2, 1.0),
        Superop::A1Adj => comb(d1a, d2a, -1.0),
        Superop::A2Adj => comb(d1a, d2a, 1.0),
    }
}

fn apply_weights(w: ShiftWeights, y: &CMat) -> CMat {
    let d = y.nrows();
    let mut out = CMat::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            if w[0] != 0.0 && r + 1 < d {
                acc += y[(r + 1, c)] * (w[0] * ((r + 1) as f64).sqrt());
            }
            if w[1] != 0.0 && r >= 1 {
                acc += y[(r - 1, c)] * (w[1] * (r as f64).sqrt());
            }
            if w[2] != 0.0 && c >= 1 {
                acc += y[(r, c - 1)] * (w[2] * (c as f64).sqrt());
            }
            if w[3] != 0.0 && c + 1 < d {
                acc += y[(r, c + 1)] * (w[3] * ((c + 1) as f64).sqrt());
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Applies a ladder superoperator. `j(x)` is right multiplication by `x*`;
/// adjoints are taken in the Hilbert-Schmidt inner product.
pub fn apply_superop(which: Superop, v: &HsVector, params: &OuParams) -> HsVector {
    HsVector {
        mat: apply_weights(superop_weights(which, params.beta), &v.mat),
    }
}

fn support_fits(degree: usize, dim: usize) -> bool {
    2 * degree + (degree + 1).max(4) < dim
}

/// `xi_{m,n}` normalized, with the norm it had before normalization.
#[derive(Debug, Clone)]
pub struct XiVector {
    pub m: usize,
    pub n: usize,
    pub vector: HsVector,
    pub raw_norm: f64,
}

/// `(A_1*)^m (A_2*)^n rho^{1/2}`, normalized.
pub fn build_xi(m: usize, n: usize, spec: &GibbsSpec, params: &OuParams) -> Result<XiVector> {
    let dim = spec.dim();
    if !support_fits(m + n, dim) {
        return Err(Error::TruncationTooSmall { degree: m + n, dim });
    }
    check_same_beta(spec, params)?;
    let r = spec.rho_power_diag(0.5);
    let mut y = CMat::from_diagonal(&DVector::from_iterator(
        dim,
        r.iter().map(|x| Complex64::new(*x, 0.0)),
    ));
    let w1 = superop_weights(Superop::A1Adj, params.beta);
    let w2 = superop_weights(Superop::A2Adj, params.beta);
    for _ in 0..n {
        y = apply_weights(w2, &y);
    }
    for _ in 0..m {
        y = apply_weights(w1, &y);
    }
    let raw_norm = y.norm();
    Ok(XiVector {
        m,
        n,
        vector: HsVector {
            mat: y / Complex64::new(raw_norm, 0.0),
        },
        raw_norm,
    })
}

fn check_same_beta(spec: &GibbsSpec, params: &OuParams) -> Result<()> {
    if (spec.beta() - params.beta).abs() > 1e-15 * spec.beta() {
        return domain(format!(
            "Gibbs state beta {} differs from semigroup beta {}",
            spec.beta(),
            params.beta
        ));
    }
    Ok(())
}

/// Coefficients of the generator `G`.
struct GenCoeffs {
    pp: f64,
    qq: f64,
    qp: f64,
    pq: f64,
}

impl GenCoeffs {
    fn of(p: &OuParams) -> Self {
        Self {
            pp: 0.5 * p.gamma * (1.0 + p.alpha2 * p.alpha2),
            qq: 0.5 * p.gamma * (p.alpha1 * p.alpha1 + p.alpha3 * p.alpha3),
            qp: p.gamma * p.alpha1,
            pq: p.gamma * p.alpha2 * p.alpha3,
        }
    }
}

/// Left/right actions of `x -> c_a a x + c_ad a* x` (or `x c_a a + x c_ad a*`).
#[derive(Clone, Copy)]
struct Ladder {
    ca: Complex64,
    cad: Complex64,
}

impl Ladder {
    fn left(&self, y: &CMat) -> CMat {
        linalg::lower_left(y) * self.ca + linalg::raise_left(y) * self.cad
    }

    fn right(&self, y: &CMat) -> CMat {
        linalg::lower_right(y) * self.ca + linalg::raise_right(y) * self.cad
    }
}

/// Evaluates `G(A)` where `Q` and `P` act on the left through `lq`, `lp` and
/// on the right through `rq`, `rp`.
fn generator_core(v: &CMat, c: &GenCoeffs, lq: Ladder, lp: Ladder, rq: Ladder, rp: Ladder) -> CMat {
    let i = Complex64::new(0.0, 1.0);
    let lp_v = lp.left(v);
    let lq_v = lq.left(v);
    let v_rp = rp.right(v);
    let v_rq = rq.right(v);
    let lp_v_rp = rp.right(&lp_v);
    let lq_v_rq = rq.right(&lq_v);
    let lq_v_rp = rp.right(&lq_v);
    let lp_v_rq = rq.right(&lp_v);
    // [P,[P,A]] = PPA - 2PAP + APP
    let ppa = lp.left(&lp_v) - lp_v_rp.clone() * Complex64::new(2.0, 0.0) + rp.right(&v_rp);
    let qqa = lq.left(&lq_v) - lq_v_rq.clone() * Complex64::new(2.0, 0.0) + rq.right(&v_rq);
    // Q[P,A] + [P,A]Q = QPA - QAP + PAQ - APQ
    let qpa = lq.left(&lp_v) - &lq_v_rp + &lp_v_rq - rq.right(&v_rp);
    // P[Q,A] + [Q,A]P = PQA - PAQ + QAP - AQP
    let pqa = lp.left(&lq_v) - lp_v_rq + lq_v_rp - rp.right(&v_rq);
    ppa * Complex64::new(c.pp, 0.0) + qqa * Complex64::new(c.qq, 0.0)
        - qpa * (i * c.qp)
        - pqa * (i * c.pq)
}

fn q_ladder(ea: f64, ead: f64) -> Ladder {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ladder {
        ca: Complex64::new(h * ea, 0.0),
        cad: Complex64::new(h * ead, 0.0),
    }
}

/// `P = (a - a*)/(sqrt 2 i) = -i (a - a*)/sqrt 2`.
fn p_ladder(ea: f64, ead: f64) -> Ladder {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ladder {
        ca: Complex64::new(0.0, -h * ea),
        cad: Complex64::new(0.0, h * ead),
    }
}

/// The generator `G` on bounded operators, with the truncated `Q`, `P`:
/// `G(A) = (g/2)(1+a2^2)[P,[P,A]] + (g/2)(a1^2+a3^2)[Q,[Q,A]]
///   - i g a1 (Q[P,A] + [P,A]Q) - i g a2 a3 (P[Q,A] + [Q,A]P)`.
pub fn generator_apply_bounded(x: &CMat, params: &OuParams) -> CMat {
    let c = GenCoeffs::of(params);
    let q = q_ladder(1.0, 1.0);
    let p = p_ladder(1.0, 1.0);
    generator_core(x, &c, q, p, q, p)
}

/// The generator in the Hilbert-Schmidt picture,
/// `v -> rho^{1/4} G(rho^{-1/4} v rho^{-1/4}) rho^{1/4}`, whose eigenvectors
/// are the `xi_{m,n}`. Conjugating by `rho^{1/4}` rescales `a` on the left by
/// `e^{beta/4}` and on the right by `e^{-beta/4}`, so no inverse powers of
/// `rho` are formed.
pub fn generator_apply(v: &HsVector, spec: &GibbsSpec, params: &OuParams) -> Result<HsVector> {
    if v.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: v.dim(),
        });
    }
    check_same_beta(spec, params)?;
    let e = (params.beta / 4.0).exp();
    let c = GenCoeffs::of(params);
    let lq = q_ladder(e, 1.0 / e);
    let lp = p_ladder(e, 1.0 / e);
    let rq = q_ladder(1.0 / e, e);
    let rp = p_ladder(1.0 / e, e);
    Ok(HsVector {
        mat: generator_core(&v.mat, &c, lq, lp, rq, rp),
    })
}

/// `||G xi_{m,n} - (m tau_1 + n tau_2) xi_{m,n}|| / max(1, m tau_1 + n tau_2)`.
pub fn eigen_residual(m: usize, n: usize, spec: &GibbsSpec, params: &OuParams) -> Result<f64> {
    let xi = build_xi(m, n, spec, params)?;
    let g = generator_apply(&xi.vector, spec, params)?;
    let lambda = params.eigenvalue(m, n);
    let r = g.sub(&xi.vector.scale(Complex64::new(lambda, 0.0)));
    Ok(r.norm() / lambda.max(1.0))
}

/// Normalized `xi_{m,n}` for `m + n <= K` with their Gram matrix.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub spec: GibbsSpec,
    pub params: OuParams,
    pub degree_cap: usize,
    labels: Vec<(usize, usize)>,
    vectors: Vec<HsVector>,
    raw_norms: Vec<f64>,
    gram: DMatrix<Complex64>,
    pub gram_defect: f64,
    span_tol: f64,
}

impl EigenBasis {
    pub fn build(spec: &GibbsSpec, params: &OuParams, degree_cap: usize) -> Result<Self> {
        let mut labels = Vec::new();
        let mut vectors = Vec::new();
        let mut raw_norms = Vec::new();
        for d in 0..=degree_cap {
            for m in (0..=d).rev() {
                let xi = build_xi(m, d - m, spec, params)?;
                labels.push((m, d - m));
                raw_norms.push(xi.raw_norm);
                vectors.push(xi.vector);
            }
        }
        let k = vectors.len();
        let gram = DMatrix::from_fn(k, k, |i, j| vectors[i].inner(&vectors[j]));
        let gram_defect = (&gram - DMatrix::identity(k, k))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Ok(Self {
            spec: *spec,
            params: *params,
            degree_cap,
            labels,
            vectors,
            raw_norms,
            gram,
            gram_defect,
            span_tol: DEFAULT_SPAN_TOL,
        })
    }

    /// Relative expansion residual accepted by [`semigroup_apply`].
    pub fn with_span_tol(mut self, tol: f64) -> Self {
        self.span_tol = tol;
        self
    }

    pub fn span_tol(&self) -> f64 {
        self.span_tol
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `(m, n)` labels in storage order; index 0 is `(0, 0)`.
    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    pub fn vectors(&self) -> &[HsVector] {
        &self.vectors
    }

    pub fn raw_norms(&self) -> &[f64] {
        &self.raw_norms
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    pub fn index_of(&self, m: usize, n: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == (m, n))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&(m, n)| self.params.eigenvalue(m, n))
            .collect()
    }

    /// Coefficients of the best approximation of `x` in the span and the
    /// norm of what is left over.
    pub fn expand(&self, x: &HsVector) -> Result<(DVector<Complex64>, f64)> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let b = DVector::from_iterator(self.len(), self.vectors.iter().map(|v| v.inner(x)));
        let coeffs = if self.gram_defect > GRAM_CORRECTION_THRESHOLD {
            self.gram
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Domain("Gram matrix is not positive definite".into()))?
                .solve(&b)
        } else {
            b
        };
        let residual = x.sub(&self.reassemble(coeffs.as_slice())).norm();
        Ok((coeffs, residual))
    }

    /// `sum_j c_j xi_j`.
    pub fn reassemble(&self, coeffs: &[Complex64]) -> HsVector {
        let mut out = HsVector::zeros(self.dim());
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            if c.norm() != 0.0 {
                out.axpy(*c, v);
            }
        }
        out
    }

    /// Real parts of the basis matrices when every entry is real.
    pub fn real_vectors(&self) -> Option<Vec<DMatrix<f64>>> {
        if self
            .vectors
            .iter()
            .all(|v| v.mat.iter().all(|z| z.im == 0.0))
        {
            Some(self.vectors.iter().map(|v| v.mat.map(|z| z.re)).collect())
        } else {
            None
        }
    }
}

/// Output of [`semigroup_apply`] with the norm of the part of the input the
/// basis did not represent.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub vector: HsVector,
    pub residual: f64,
}

/// `T_t x`: expand in the eigenbasis, damp coefficient `(m, n)` by
/// `e^{-t(m tau_1 + n tau_2)}`, reassemble.
pub fn semigroup_apply(t: f64, x: &HsVector, basis: &EigenBasis) -> Result<Evolved> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    let (coeffs, residual) = basis.expand(x)?;
    let xn = x.norm();
    if xn > 0.0 && residual > basis.span_tol * xn {
        return Err(Error::SpanInsufficient {
            residual: residual / xn,
        });
    }
    let damped: Vec<Complex64> = coeffs
        .iter()
        .zip(basis.eigenvalues())
        .map(|(c, l)| c * (-t * l).exp())
        .collect();
    Ok(Evolved {
        vector: basis.reassemble(&damped),
        residual,
    })
}

/// Which pair of superoperators [`ccr_residual_for`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderPair {
    D,
    A,
}

/// Canonical commutation relations of `D_1, D_2` on interior-supported probes.
pub fn ccr_residual(spec: &GibbsSpec, params: &OuParams, buffer: usize) -> Result<f64> {
    ccr_residual_for(LadderPair::D, spec, params, buffer)
}

/// Largest `||([X_i, X_j*] - delta_ij) v||` and `||[X_i, X_j] v||` over the matrix
/// units `v = e_r e_s^T` with `r, s < D - buffer`.
pub fn ccr_residual_for(
    pair: LadderPair,
    spec: &GibbsSpec,
    params: &OuParams,
    buffer: usize,
) -> Result<f64> {
    let dim = spec.dim();
    if buffer == 0 || 2 * buffer >= dim {
        return domain(format!(
            "buffer must lie in [1, D/2), got {buffer} for D = {dim}"
        ));
    }
    check_same_beta(spec, params)?;
    let (x1, x2, x1a, x2a) = match pair {
        LadderPair::D => (Superop::D1, Superop::D2, Superop::D1Adj, Superop::D2Adj),
        LadderPair::A => (Superop::A1, Superop::A2, Superop::A1Adj, Superop::A2Adj),
    };
    let ops = [x1, x2];
    let adj = [x1a, x2a];
    let w = |s: Superop| superop_weights(s, params.beta);
    let apply = |s: Superop, y: &CMat| apply_weights(w(s), y);
    let keep = dim - buffer;
    let mut worst = 0.0f64;
    let mut probe = CMat::zeros(dim, dim);
    for r in 0..keep {
        for s in 0..keep {
            probe[(r, s)] = Complex64::new(1.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    let comm_adj = apply(ops[i], &apply(adj[j], &probe))
                        - apply(adj[j], &apply(ops[i], &probe));
                    let expected = if i == j {
                        probe.clone()
                    } else {
                        CMat::zeros(dim, dim)
                    };
                    worst = worst.max((comm_adj - expected).norm());
                    if i < j {
                        let comm = apply(ops[i], &apply(ops[j], &probe))
                            - apply(ops[j], &apply(ops[i], &probe));
                        worst = worst.max(comm.norm());
                    }
                }
            }
            probe[(r, s)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{momentum, position};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn canonical_branch_values() {
        let p = solve_params(2.0, ParamBranch::CanonicalCfl).unwrap();
        assert!((p.alpha2 - 0.4621171573).abs() < 1e-10);
        assert!((p.tau - 1f64.tanh()).abs() < 1e-12);
        assert!((p.tau - 0.7615941560).abs() < 1e-10);
        for beta in [0.5, 1.0, 2.0, 4.0] {
            let p = solve_params(beta, ParamBranch::CanonicalCfl).unwrap();
            assert!((p.tau1 - p.tau2).abs() < 1e-15);
            assert!((p.tau - (beta / 2.0).tanh()).abs() < 1e-12);
            let (r1, r2) = p.constraint_residuals();
            assert!(r1 <= 1e-12 && r2 <= 1e-12);
            let sech = 1.0 / (beta / 2.0).cosh();
            assert!((p.alpha2 - (1.0 - sech) / (beta / 2.0).tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn general_branch() {
        let roots = general_alpha3_roots(1.0, 0.3).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 1.24753).abs() < 1e-5);
        assert!((roots[1] - 0.05084).abs() < 1e-5);
        let p = solve_params(
            1.0,
            ParamBranch::General {
                alpha2: 0.3,
                alpha3: roots[0],
            },
        )
        .unwrap();
        assert!((p.tau1 - 0.5f64.tanh()).abs() < 1e-14);
        assert!((p.tau2 - 0.68671).abs() < 1e-5);
        let p2 = solve_params(
            1.0,
            ParamBranch::General {
                alpha2: 0.3,
                alpha3: roots[1],
            },
        )
        .unwrap();
        assert!((p2.tau2 - 0.02799).abs() < 1e-5);
        assert_eq!(p2.tau, p2.tau2);
        assert!(matches!(
            solve_params(
                1.0,
                ParamBranch::General {
                    alpha2: 0.3,
                    alpha3: 0.7
                }
            ),
            Err(Error::InfeasibleParameters(_))
        ));
        assert!(general_alpha3_roots(1.0, 0.01).unwrap().is_empty());
    }

    #[test]
    fn vacuum_is_annihilated() {
        let spec = GibbsSpec::new(1.0, 32).unwrap();
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        let xi0 = build_xi(0, 0, &spec, &params).unwrap();
        assert!((xi0.raw_norm.powi(2) - (1.0 - spec.trace_deficit())).abs() < 1e-15);
        for op in [Superop::D1, Superop::D2, Superop::A1, Superop::A2] {
            assert!(apply_superop(op, &xi0.vector, &params).norm() < 1e-14);
        }
    }

    #[test]
    fn superop_linearity_and_adjointness() {
        let spec = GibbsSpec::new(0.7, 12).unwrap();
        let params = solve_params(0.7, ParamBranch::CanonicalCfl).unwrap();
        let u = HsVector::new(CMat::from_fn(12, 12, |i, j| {
            Complex64::new((i * 3 + j) as f64 % 5.0, i as f64 - j as f64)
        }))
        .unwrap();
        let v = HsVector::new(CMat::from_fn(12, 12, |i, j| {
            Complex64::new((i + 2 * j) as f64 % 7.0, 0.3)
        }))
        .unwrap();
        let d1 = apply_superop(Superop::D1, &u, &params);
        let d2 = apply_superop(Superop::D2, &u, &params);
        let a1 = apply_superop(Superop::A1, &u, &params);
        let want = d1.sub(&d2).scale(c(std::f64::consts::FRAC_1_SQRT_2));
        assert!(a1.sub(&want).norm() < 1e-13 * want.norm());
        for (op, adj) in [
            (Superop::D1, Superop::D1Adj),
            (Superop::D2, Superop::D2Adj),
            (Superop::A1, Superop::A1Adj),
            (Superop::A2, Superop::A2Adj),
        ] {
            let lhs = apply_superop(op, &u, &params).inner(&v);
            let rhs = u.inner(&apply_superop(adj, &v, &params));
            assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0));
        }
        let _ = spec;
    }

    #[test]
    fn xi_norms_match_factorials() {
        let spec = GibbsSpec::new(1.0, 64).unwrap();
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        for (m, n) in [(1, 0), (0, 1), (2, 1), (3, 3), (0, 6)] {
            let xi = build_xi(m, n, &spec, &params).unwrap();
            let f = (1..=m).product::<usize>() as f64 * (1..=n).product::<usize>() as f64;
            assert!((xi.raw_norm / f.sqrt() - 1.0).abs() < 1e-8, "({m},{n})");
        }
        assert!(matches!(
            build_xi(5, 5, &GibbsSpec::new(1.0, 16).unwrap(), &params),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn generator_kills_identity_and_vacuum() {
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        let d = 64;
        let g = generator_apply_bounded(&CMat::identity(d, d), &params);
        assert!(linalg::max_abs(&g.view((0, 0), (d - 1, d - 1)).into_owned()) < 1e-13);
        let spec = GibbsSpec::new(1.0, d).unwrap();
        let xi0 = build_xi(0, 0, &spec, &params).unwrap();
        let r = generator_apply(&xi0.vector, &spec, &params).unwrap();
        assert!(r.norm() < 1e-8);
    }

    #[test]
    fn bounded_generator_matches_dense_commutators() {
        let d = 10;
        let params = solve_params(
            1.3,
            ParamBranch::General {
                alpha2: 0.5,
                alpha3: general_alpha3_roots(1.3, 0.5).unwrap()[0],
            },
        )
        .unwrap();
        let q = position(d).unwrap().into_entries();
        let p = momentum(d).unwrap().into_entries();
        let x = CMat::from_fn(d, d, |i, j| {
            Complex64::new((i * j) as f64 % 3.0, (i + j) as f64 % 2.0)
        });
        let cm = linalg::commutator;
        let i = Complex64::new(0.0, 1.0);
        let g = params.gamma;
        let want = cm(&p, &cm(&p, &x)) * c(0.5 * g * (1.0 + params.alpha2.powi(2)))
            + cm(&q, &cm(&q, &x)) * c(0.5 * g * (params.alpha1.powi(2) + params.alpha3.powi(2)))
            - (&q * cm(&p, &x) + cm(&p, &x) * &q) * (i * g * params.alpha1)
            - (&p * cm(&q, &x) + cm(&q, &x) * &p) * (i * g * params.alpha2 * params.alpha3);
        let got = generator_apply_bounded(&x, &params);
        assert!(linalg::max_abs(&(got - want)) < 1e-12);
    }

    #[test]
    fn hs_generator_is_conjugated_bounded_generator() {
        let d = 12;
        let beta = 0.9;
        let spec = GibbsSpec::new(beta, d).unwrap();
        let params = solve_params(beta, ParamBranch::CanonicalCfl).unwrap();
        let v = HsVector::new(CMat::from_fn(d, d, |i, j| {
            Complex64::new(((i + 3 * j) % 5) as f64 - 2.0, (i % 3) as f64)
        }))
        .unwrap();
        let up = spec.rho_power_diag(0.25);
        let down = spec.rho_power_diag(-0.25);
        let inner = linalg::diag_sandwich(&down, &v.mat, &down);
        let want = linalg::diag_sandwich(&up, &generator_apply_bounded(&inner, &params), &up);
        let got = generator_apply(&v, &spec, &params).unwrap();
        // The truncated P^2 and the product of truncated conjugated ladders differ
        // only in the last row and column.
        let k = d - 1;
        let diff = (got.mat - want)
            .view((0, 0), (k, k))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn eigen_relation_small() {
        let spec = GibbsSpec::new(1.0, 64).unwrap();
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        assert!(eigen_residual(0, 0, &spec, &params).unwrap() < 1e-8);
        assert!(eigen_residual(1, 0, &spec, &params).unwrap() < 1e-6);
        let roots = general_alpha3_roots(1.0, 0.3).unwrap();
        let gp = solve_params(
            1.0,
            ParamBranch::General {
                alpha2: 0.3,
                alpha3: roots[0],
            },
        )
        .unwrap();
        for (m, n) in [(1, 0), (0, 1), (1, 2)] {
            assert!(
                eigen_residual(m, n, &spec, &gp).unwrap() < 1e-6,
                "({m},{n})"
            );
        }
    }

    #[test]
    fn ccr_interior() {
        let spec = GibbsSpec::new(1.0, 24).unwrap();
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        assert!(ccr_residual(&spec, &params, 4).unwrap() < 1e-12);
        assert!(ccr_residual_for(LadderPair::A, &spec, &params, 4).unwrap() < 1e-12);
        assert!(ccr_residual(&spec, &params, 12).is_err());
    }

    #[test]
    fn semigroup_basics() {
        let spec = GibbsSpec::new(1.0, 48).unwrap();
        let params = solve_params(1.0, ParamBranch::CanonicalCfl).unwrap();
        let basis = EigenBasis::build(&spec, &params, 3).unwrap();
        assert_eq!(basis.labels()[0], (0, 0));
        let coeffs: Vec<Complex64> = (0..basis.len())
            .map(|j| Complex64::new(1.0 / (j + 1) as f64, 0.1 * j as f64))
            .collect();
        let x = basis.reassemble(&coeffs);
        let t0 = semigroup_apply(0.0, &x, &basis).unwrap();
        assert!(t0.vector.sub(&x).norm() < 1e-12);
        let a = semigroup_apply(
            0.4,
            &semigroup_apply(0.3, &x, &basis).unwrap().vector,
            &basis,
        )
        .unwrap();
        let b = semigroup_apply(0.7, &x, &basis).unwrap();
        assert!(a.vector.sub(&b.vector).norm() < 1e-10);
        let (c0, _) = basis.expand(&x).unwrap();
        let (c1, _) = basis.expand(&b.vector).unwrap();
        assert!((c0[0] - c1[0]).norm() < 1e-12);
        let off = HsVector::new(CMat::from_fn(48, 48, |i, j| {
            c(if i == 40 && j == 2 { 1.0 } else { 0.0 })
        }))
        .unwrap();
        assert!(matches!(
            semigroup_apply(1.0, &off, &basis),
            Err(Error::SpanInsufficient { .. })
        ));
        assert!(basis.real_vectors().is_some());
    }
}
