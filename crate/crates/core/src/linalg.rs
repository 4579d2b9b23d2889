// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense linear-algebra helpers shared by the operator modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Maximum absolute column sum.
pub fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Pade approximation with scaling and squaring.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| Complex64::new(PADE13[i], 0.0);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `a y` for the truncated annihilation operator `a`.
pub fn lower_left(y: &CMat) -> CMat {
    let d = y.nrows();
    let mut out = CMat::zeros(d, y.ncols());
    for r in 0..d.saturating_sub(1) {
        let w = ((r + 1) as f64).sqrt();
        for c in 0..y.ncols() {
            out[(r, c)] = y[(r + 1, c)] * w;
        }
    }
    out
}

/// `a* y` for the truncated creation operator.
pub fn raise_left(y: &CMat) -> CMat {
    let d = y.nrows();
    let mut out = CMat::zeros(d, y.ncols());
    for r in 1..d {
        let w = (r as f64).sqrt();
        for c in 0..y.ncols() {
            out[(r, c)] = y[(r - 1, c)] * w;
        }
    }
    out
}

/// `y a` for the truncated annihilation operator.
pub fn lower_right(y: &CMat) -> CMat {
    let d = y.ncols();
    let mut out = CMat::zeros(y.nrows(), d);
    for c in 1..d {
        let w = (c as f64).sqrt();
        for r in 0..y.nrows() {
            out[(r, c)] = y[(r, c - 1)] * w;
        }
    }
    out
}

/// `y a*` for the truncated creation operator.
pub fn raise_right(y: &CMat) -> CMat {
    let d = y.ncols();
    let mut out = CMat::zeros(y.nrows(), d);
    for c in 0..d.saturating_sub(1) {
        let w = ((c + 1) as f64).sqrt();
        for r in 0..y.nrows() {
            out[(r, c)] = y[(r, c + 1)] * w;
        }
    }
    out
}

/// Hilbert-Schmidt inner product `Tr(x* y)`.
pub fn hs_inner(x: &CMat, y: &CMat) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `diag(l) x diag(r)`.
pub fn diag_sandwich(l: &[f64], x: &CMat, r: &[f64]) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * (l[i] * r[j]))
}

/// Commutator `xy - yx`.
pub fn commutator(x: &CMat, y: &CMat) -> CMat {
    x * y - y * x
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(sum exp(l_i))`, summing in descending magnitude with compensation.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let mut v: Vec<f64> = logs
        .iter()
        .copied()
        .filter(|l| *l > f64::NEG_INFINITY)
        .collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite logs"));
    let top = v[0];
    let mut acc = CompensatedSum::new();
    for l in &v {
        acc.add((l - top).exp());
    }
    top + acc.value().ln()
}

/// Natural log of a geometric-ratio bound on
/// `sum_{n >= start} exp(log_amp) e^{-n beta} (n + shift)^power`.
///
/// Returns `None` when the ratio bound `e^{-beta}(1 + 1/(start+shift))^power`
/// is not below one yet, i.e. `start` has to grow.
pub fn log_power_tail(
    log_amp: f64,
    beta: f64,
    shift: f64,
    power: f64,
    start: usize,
) -> Option<f64> {
    let base = start as f64 + shift;
    if base < 1.0 {
        return None;
    }
    let log_ratio = -beta + power * (1.0 / base).ln_1p();
    if log_ratio >= 0.0 {
        return None;
    }
    let log_first = log_amp - beta * start as f64 + power * base.ln();
    Some(log_first - (-log_ratio.exp_m1()).ln())
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() + 1 == diag.len()`), by implicit QL with
/// Wilkinson shifts, to absolute accuracy `eps * ||T||`. Returns `None` if some eigenvalue fails to converge.
pub fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(
        n == 0 || off.len() + 1 == n,
        "off-diagonal length must be one less than the diagonal"
    );
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let scale = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::zeros(5, 5);
        assert_eq!(expm(&z), CMat::identity(5, 5));
    }

    #[test]
    fn expm_diagonal() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-2.0, 0.5),
            c(0.0, 3.0),
        ]));
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[(i, i)] - a[(i, i)].exp()).norm() < 1e-13 * a[(i, i)].exp().norm().max(1.0));
        }
    }

    #[test]
    fn expm_matches_eigendecomposition_for_hermitian_generator() {
        // exp(iH) through the eigenbasis of a real symmetric H.
        let n = 12;
        let h = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            ((i * 7 + j * 7 + i * j) % 11) as f64 / 3.0 - 1.5
        });
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h.clone());
        let v = eig.eigenvectors.map(|x| c(x, 0.0));
        let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| c(0.0, l).exp()));
        let oracle = &v * d * v.adjoint();
        let got = expm(&h.map(|x| c(0.0, x)));
        assert!(max_abs(&(got - oracle)) < 1e-12);
    }

    #[test]
    fn shifts_match_dense_products() {
        let d = 7;
        let mut a = CMat::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let y = CMat::from_fn(d, d, |i, j| {
            c(i as f64 - 0.3 * j as f64, (i * j) as f64 * 0.1)
        });
        assert!(max_abs(&(lower_left(&y) - &a * &y)) < 1e-14);
        assert!(max_abs(&(raise_left(&y) - &ad * &y)) < 1e-14);
        assert!(max_abs(&(lower_right(&y) - &y * &a)) < 1e-14);
        assert!(max_abs(&(raise_right(&y) - &y * &ad)) < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn log_sum_exp_large_terms() {
        let l = log_sum_exp(&[1000.0, 1000.0]);
        assert!((l - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn power_tail_bounds_actual_tail() {
        let beta = 0.5;
        let r = 3.0;
        let start = 40;
        let bound = log_power_tail(0.0, beta, 0.0, r, start).unwrap().exp();
        let actual: f64 = (start..5000)
            .map(|n| (-beta * n as f64).exp() * (n as f64).powf(r))
            .sum();
        assert!(actual <= bound);
        assert!(bound < 2.0 * actual);
        assert!(log_power_tail(0.0, beta, 0.0, r, 2).is_none());
    }

    #[test]
    fn tridiagonal_eigenvalues_match_dense() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let off: Vec<f64> = (0..n - 1)
            .map(|i| 1.0 + ((i * 13) % 7) as f64 * 0.3)
            .collect();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j || j + 1 == i {
                off[i.min(j)]
            } else {
                0.0
            }
        });
        let mut want: Vec<f64> = SymmetricEigen::new(dense)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        let mut got = symmetric_tridiagonal_eigenvalues(&diag, &off).unwrap();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
