// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Hypercontractivity of the semigroup: contraction ratios
//! `||T_t x||_{L_p} / ||x||_{L_2}`, their supremum over a sampled class,
//! optimal-time bisection, the explicit witness and the theoretical brackets.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_beta, domain, Error, Result};
use crate::fock::GibbsSpec;
use crate::linalg::{diag_sandwich, log_power_tail};
use crate::schatten::{real_schatten_norm, schatten_norm_matrix, SingularSpectrum};
use crate::semigroup::{semigroup_apply, EigenBasis, HsVector, OuParams};
use crate::sequences::constants;

/// Ratios up to `1 + RATIO_SLACK` count as contractive.
pub const RATIO_SLACK: f64 = 1e-10;
/// Coordinate-ascent steps per sample.
pub const DEFAULT_ASCENT_STEPS: usize = 50;
/// Default sample budget of [`sup_ratio`].
pub const DEFAULT_BUDGET: usize = 1000;
/// Default bisection tolerance in `t`.
pub const DEFAULT_TIME_TOL: f64 = 1e-4;
/// Relative accuracy of the certified witness norm.
const WITNESS_REL_TOL: f64 = 1e-13;
/// Relative roundoff allowance of the dense singular-value computation.
const SPECTRUM_ROUNDOFF: f64 = 1e-12;

/// Class of elements over which the optimal time is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeKind {
    /// Zero-mean elements (`omega(x) = 0`).
    ZeroMean,
    /// All elements.
    General,
}

/// `s = 1/(2p) - 1/4`: the exponent turning `x = rho^{1/4} y rho^{1/4}` into
/// `rho^{1/(2p)} y rho^{1/(2p)}`.
pub fn sandwich_exponent(p: f64) -> f64 {
    0.5 / p - 0.25
}

fn check_p2(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        domain(format!(
            "hypercontractivity exponent must be finite and at least 2, got {p}"
        ))
    }
}

/// Removes the `xi_{0,0}` component of `x`.
pub fn zero_mean_project(x: &HsVector, basis: &EigenBasis) -> Result<HsVector> {
    let (coeffs, residual) = basis.expand(x)?;
    let xn = x.norm();
    if xn > 0.0 && residual > basis.span_tol() * xn {
        return Err(Error::SpanInsufficient {
            residual: residual / xn,
        });
    }
    let mut out = x.clone();
    out.axpy(-coeffs[0], &basis.vectors()[0]);
    Ok(out)
}

/// `||rho^s (T_t x) rho^s||_p / ||x||_2` with `s = 1/(2p) - 1/4`.
pub fn contraction_ratio(
    t: f64,
    p: f64,
    x: &HsVector,
    spec: &GibbsSpec,
    basis: &EigenBasis,
) -> Result<f64> {
    check_p2(p)?;
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.dim(),
        });
    }
    let xn = x.norm();
    if xn == 0.0 {
        return Err(Error::ZeroInput);
    }
    let evolved = semigroup_apply(t, x, basis)?;
    let r = spec.rho_power_diag(sandwich_exponent(p));
    let num = schatten_norm_matrix(&diag_sandwich(&r, &evolved.vector.mat, &r), p)?;
    Ok(num / xn)
}

/// Precomputed real data for repeated ratio evaluations on one basis.
///
/// The basis vectors are real matrices, so the sampled class uses real
/// coefficients.
pub struct RatioEngine {
    p: f64,
    members: Vec<usize>,
    lambdas: Vec<f64>,
    sandwiched: Vec<DMatrix<f64>>,
    gram: DMatrix<f64>,
}

impl RatioEngine {
    pub fn new(p: f64, basis: &EigenBasis, kind: TimeKind) -> Result<Self> {
        check_p2(p)?;
        let real = basis
            .real_vectors()
            .ok_or_else(|| Error::Domain("basis has complex entries".into()))?;
        let members: Vec<usize> = match kind {
            TimeKind::ZeroMean => (1..basis.len()).collect(),
            TimeKind::General => (0..basis.len()).collect(),
        };
        if members.is_empty() {
            return domain("sampled class is empty; raise the degree cap");
        }
        let r = basis.spec.rho_power_diag(sandwich_exponent(p));
        let all_l = basis.eigenvalues();
        let lambdas = members.iter().map(|&j| all_l[j]).collect();
        let sandwiched = members
            .iter()
            .map(|&j| {
                DMatrix::from_fn(basis.dim(), basis.dim(), |a, b| {
                    real[j][(a, b)] * r[a] * r[b]
                })
            })
            .collect();
        let g = basis.gram();
        let gram = DMatrix::from_fn(members.len(), members.len(), |a, b| {
            g[(members[a], members[b])].re
        });
        Ok(Self {
            p,
            members,
            lambdas,
            sandwiched,
            gram,
        })
    }

    /// Number of coefficients in the sampled class.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Basis indices of the class members.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Contraction ratio of `x = sum_j c_j xi_{members[j]}` at time `t`.
    pub fn ratio(&self, t: f64, c: &[f64]) -> f64 {
        let d = self.sandwiched[0].nrows();
        let mut x = DMatrix::<f64>::zeros(d, d);
        for ((cj, y), l) in c.iter().zip(&self.sandwiched).zip(&self.lambdas) {
            if *cj != 0.0 {
                let k = cj * (-t * l).exp();
                x.zip_apply(y, |a, b| *a += k * b);
            }
        }
        let cv = nalgebra::DVector::from_column_slice(c);
        let den = (cv.transpose() * &self.gram * &cv)[(0, 0)].max(0.0).sqrt();
        if den == 0.0 {
            return 0.0;
        }
        real_schatten_norm(&x, self.p).expect("validated exponent") / den
    }
}

/// Settings of the sampled supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupConfig {
    pub budget: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    pub kind: TimeKind,
}

impl SupConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            ascent_steps: DEFAULT_ASCENT_STEPS,
            seed,
            kind: TimeKind::ZeroMean,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.ascent_steps = steps;
        self
    }

    pub fn with_kind(mut self, kind: TimeKind) -> Self {
        self.kind = kind;
        self
    }
}

/// Best ratio found and the coefficients attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub worst_ratio: f64,
    pub coeffs: Vec<f64>,
    pub sample_size: usize,
}

/// Stream offset separating the deterministic unit-vector starts from the
/// random samples, so the random sample `i` is the same for every budget.
const UNIT_STREAM_BASE: u64 = 1 << 40;

fn ascend(
    engine: &RatioEngine,
    t: f64,
    mut c: Vec<f64>,
    steps: usize,
    rng: &mut ChaCha8Rng,
    stop_above: f64,
) -> (f64, Vec<f64>) {
    let mut best = engine.ratio(t, &c);
    let len = c.len();
    let mut scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for step in 0..steps {
        if best > stop_above {
            break;
        }
        let j = step % len;
        let delta: f64 = rng.sample::<f64, _>(StandardNormal) * scale * 0.5;
        let old = c[j];
        c[j] = old + delta;
        let r = engine.ratio(t, &c);
        if r > best {
            best = r;
        } else {
            c[j] = old;
        }
        if j + 1 == len {
            scale *= 0.8;
        }
    }
    (best, c)
}

/// Supremum of the ratio over the unit vectors of the class (which include the
/// witness `xi_{1,0}`) and `budget` random Gaussian coefficient vectors, each
/// refined by coordinate ascent. Stops early once a ratio exceeds `stop_above`.
pub fn sup_ratio_engine(
    engine: &RatioEngine,
    t: f64,
    cfg: &SupConfig,
    stop_above: f64,
) -> SupResult {
    let len = engine.len();
    let mut best = SupResult {
        worst_ratio: f64::NEG_INFINITY,
        coeffs: vec![0.0; len],
        sample_size: 0,
    };
    let starts = (0..len)
        .map(|j| (UNIT_STREAM_BASE + j as u64, Some(j)))
        .chain((0..cfg.budget).map(|i| (i as u64, None)));
    for (stream, unit) in starts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        let c0: Vec<f64> = match unit {
            Some(j) => (0..len).map(|i| if i == j { 1.0 } else { 0.0 }).collect(),
            None => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
        };
        let (r, c) = ascend(engine, t, c0, cfg.ascent_steps, &mut rng, stop_above);
        best.sample_size += 1;
        if r > best.worst_ratio {
            best.worst_ratio = r;
            best.coeffs = c;
        }
        if best.worst_ratio > stop_above {
            break;
        }
    }
    best
}

/// Sampled supremum of the zero-mean contraction ratio at time `t`.
pub fn sup_ratio(
    t: f64,
    p: f64,
    spec: &GibbsSpec,
    basis: &EigenBasis,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    Ok(sup_ratio_with(t, p, spec, basis, &SupConfig::new(budget, seed))?.worst_ratio)
}

pub fn sup_ratio_with(
    t: f64,
    p: f64,
    spec: &GibbsSpec,
    basis: &EigenBasis,
    cfg: &SupConfig,
) -> Result<SupResult> {
    if cfg.budget == 0 {
        return domain("sample budget must be at least 1");
    }
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    check_basis(spec, basis)?;
    let engine = RatioEngine::new(p, basis, cfg.kind)?;
    Ok(sup_ratio_engine(&engine, t, cfg, f64::INFINITY))
}

fn check_basis(spec: &GibbsSpec, basis: &EigenBasis) -> Result<()> {
    if basis.spec != *spec {
        return domain("basis was built for a different Gibbs state");
    }
    Ok(())
}

/// Outcome of one hypercontractivity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcReport {
    pub p: f64,
    pub beta: f64,
    pub t: f64,
    pub worst_ratio: f64,
    pub sample_size: usize,
    pub seed: u64,
    pub passed: bool,
}

pub fn check_hypercontractivity(
    t: f64,
    p: f64,
    spec: &GibbsSpec,
    basis: &EigenBasis,
    cfg: &SupConfig,
) -> Result<HcReport> {
    let r = sup_ratio_with(t, p, spec, basis, cfg)?;
    Ok(HcReport {
        p,
        beta: spec.beta(),
        t,
        worst_ratio: r.worst_ratio,
        sample_size: r.sample_size,
        seed: cfg.seed,
        passed: r.worst_ratio <= 1.0 + RATIO_SLACK,
    })
}

/// Norm of the explicit witness and the time it certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessBound {
    /// `ln(||Z||_p) / tau` evaluated at the lower end of the certified norm
    /// interval, clamped at zero.
    pub t_w: f64,
    /// `||Z||_p` of the infinite witness matrix, up to `truncation_error`.
    pub norm: f64,
    /// Number of band entries kept.
    pub entries: usize,
    /// Certified bound on `| ||Z||_p - ||Z_N||_p |`.
    pub truncation_error: f64,
}

/// Prefactor of the witness band entries,
/// `(2 sinh(beta/2))^{1/2 + 1/p} e^{-beta/p} / sqrt 2`.
pub fn witness_prefactor(p: f64, beta: f64) -> f64 {
    (2.0 * (beta / 2.0).sinh()).powf(0.5 + 1.0 / p)
        * (-beta / p).exp()
        * std::f64::consts::FRAC_1_SQRT_2
}

/// First `n` band entries `a_j = prefactor * sqrt(j+1) e^{-j beta/p}` of
/// `rho^s (A_1* xi_0) rho^s`.
pub fn witness_entries(p: f64, beta: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| witness_entries_at(p, beta, j)).collect()
}

/// Certified Schatten norm of the witness and the corresponding lower bound on
/// the optimal time.
pub fn witness_bound(p: f64, beta: f64, params: &OuParams) -> Result<WitnessBound> {
    check_p2(p)?;
    check_beta(beta)?;
    let log_amp = p * witness_prefactor(p, beta).ln();
    // Largest entry, a lower bound on any truncated norm.
    let peak = (0..)
        .map(|j| witness_entries_at(p, beta, j))
        .scan(0.0f64, |m, a| {
            let prev = *m;
            *m = m.max(a);
            (a >= prev).then_some(*m)
        })
        .last()
        .unwrap_or(0.0);
    // Tail of ||a||_p^p: sum_{n>=N} pref^p (n+1)^{p/2} e^{-n beta}.
    let mut n = 16usize;
    let err = loop {
        if let Some(tail) = log_power_tail(log_amp, beta, 1.0, p / 2.0, n) {
            let err = 2.0 * (tail / p).exp();
            if err <= WITNESS_REL_TOL * peak {
                break err;
            }
        }
        n += n / 4;
        if n > 1 << 20 {
            return Err(Error::NonConvergent(n));
        }
    };
    let norm = SingularSpectrum::of_symmetric_two_band(&witness_entries(p, beta, n))?.schatten(p);
    // Lower end of the certified interval, so t_w stays a lower bound.
    let lower = norm * (1.0 - SPECTRUM_ROUNDOFF) - err;
    Ok(WitnessBound {
        t_w: (lower.ln() / params.tau).max(0.0),
        norm,
        entries: n,
        truncation_error: err,
    })
}

fn witness_entries_at(p: f64, beta: f64, j: usize) -> f64 {
    witness_prefactor(p, beta) * ((j + 1) as f64).sqrt() * (-(j as f64) * beta / p).exp()
}

/// Least `t` with `e^{-tau t} ||Z||_p <= 1`.
pub fn witness_lower_bound(p: f64, beta: f64, params: &OuParams) -> Result<f64> {
    Ok(witness_bound(p, beta, params)?.t_w)
}

/// Bounds on `e^{2 tau t_p}` (zero mean) or `e^{2 tau t'_p}` (general).
pub fn theory_bounds(p: f64, beta: f64, kind: TimeKind) -> Result<(f64, f64)> {
    if kind == TimeKind::ZeroMean && !(p > 2.0) {
        return domain(format!("zero-mean bounds need p > 2, got {p}"));
    }
    check_p2(p)?;
    theory_bounds_unchecked(p, beta, kind)
}

fn theory_bounds_unchecked(p: f64, beta: f64, kind: TimeKind) -> Result<(f64, f64)> {
    let ch = constants(beta)?;
    Ok(match kind {
        TimeKind::ZeroMean => (ch.c_tilde * (p - 1.0), ch.big_c_tilde * (p - 1.0)),
        TimeKind::General => (ch.c_tilde * (p - 1.0), p * ch.c_p(p).powi(2)),
    })
}

/// `2 c_p^2 = 6 (1 - e^{-beta})^{-1} C(beta) p`, the intermediate zero-mean bound.
pub fn contraction_constant(p: f64, beta: f64) -> Result<f64> {
    Ok(2.0 * constants(beta)?.c_p(p).powi(2))
}

/// Empirical optimal time with its brackets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeEstimate {
    pub p: f64,
    pub beta: f64,
    /// Least contractive time over the sampled class; a lower estimate of the
    /// true optimal time.
    pub t_hat: f64,
    pub theory_lower: f64,
    pub theory_upper: f64,
    pub witness_lower: f64,
    pub kind: TimeKind,
    pub tol: f64,
    pub budget: usize,
    pub seed: u64,
    pub bisection_steps: usize,
}

/// Zero-mean optimal-time estimate with default ascent settings.
pub fn optimal_time_estimate(
    p: f64,
    spec: &GibbsSpec,
    basis: &EigenBasis,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<TimeEstimate> {
    optimal_time_estimate_with(p, spec, basis, &SupConfig::new(budget, seed), tol)
}

/// Bisection for the least `t` in `[0, ln(ceiling)/(2 tau) + 1/tau]` at which
/// the sampled supremum is at most one. The ceiling is `2 c_p^2` for the
/// zero-mean class and `p c_p^2` for the general class. Returns the upper end
/// of the final bracket.
pub fn optimal_time_estimate_with(
    p: f64,
    spec: &GibbsSpec,
    basis: &EigenBasis,
    cfg: &SupConfig,
    tol: f64,
) -> Result<TimeEstimate> {
    check_p2(p)?;
    if !(tol.is_finite() && tol > 0.0) {
        return domain(format!("bisection tolerance must be positive, got {tol}"));
    }
    if cfg.budget == 0 {
        return domain("sample budget must be at least 1");
    }
    check_basis(spec, basis)?;
    let params = basis.params;
    let beta = spec.beta();
    let tau = params.tau;
    let to_time = |v: f64| (v.ln() / (2.0 * tau)).max(0.0);
    let (lo_b, up_b) = theory_bounds_unchecked(p, beta, cfg.kind)?;
    let ceiling = match cfg.kind {
        TimeKind::ZeroMean => contraction_constant(p, beta)?,
        TimeKind::General => up_b,
    };
    let witness_lower = witness_lower_bound(p, beta, &params)?;
    let engine = RatioEngine::new(p, basis, cfg.kind)?;
    let level = 1.0 + RATIO_SLACK;
    let exceeds = |t: f64| sup_ratio_engine(&engine, t, cfg, level).worst_ratio > level;

    let mut steps = 0usize;
    let t_hat = if !exceeds(0.0) {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = to_time(ceiling) + 1.0 / tau;
        if exceeds(hi) {
            return Err(Error::Bracket(format!(
                "sampled ratio still exceeds 1 at t = {hi} (p = {p}, beta = {beta})"
            )));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if exceeds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
        hi
    };
    Ok(TimeEstimate {
        p,
        beta,
        t_hat,
        theory_lower: to_time(lo_b),
        theory_upper: to_time(up_b),
        witness_lower,
        kind: cfg.kind,
        tol,
        budget: cfg.budget,
        seed: cfg.seed,
        bisection_steps: steps,
    })
}

/// Coefficient vector of a single basis element, for use with [`RatioEngine`].
pub fn unit_coeffs(engine: &RatioEngine, basis_index: usize) -> Option<Vec<f64>> {
    let pos = engine.members().iter().position(|&j| j == basis_index)?;
    Some(
        (0..engine.len())
            .map(|i| if i == pos { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// `x = sum_j c_j xi_{members[j]}` as a Hilbert-Schmidt vector.
pub fn assemble(engine: &RatioEngine, basis: &EigenBasis, c: &[f64]) -> HsVector {
    let mut full = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (j, v) in engine.members().iter().zip(c) {
        full[*j] = Complex64::new(*v, 0.0);
    }
    basis.reassemble(&full)
}
