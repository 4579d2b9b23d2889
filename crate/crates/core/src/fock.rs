// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock space: ladder operators, the Gibbs density and Weyl operators.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_beta, Error, Result};
use crate::linalg::{self, CMat};

/// Inverse temperature and truncation of the Gibbs state `rho ∝ e^{-beta N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    beta: f64,
    dim: usize,
    q: f64,
    renormalize: bool,
}

impl GibbsSpec {
    /// Unrenormalized spec: `rho = diag((1-q) q^n)` with trace `1 - q^D`.
    pub fn new(beta: f64, dim: usize) -> Result<Self> {
        check_beta(beta)?;
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            beta,
            dim,
            q: (-beta).exp(),
            renormalize: false,
        })
    }

    /// Same spec with `rho` rescaled to unit trace.
    pub fn renormalized(self) -> Self {
        self.with_renormalize(true)
    }

    pub fn with_renormalize(mut self, renormalize: bool) -> Self {
        self.renormalize = renormalize;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalize
    }

    /// `q^D`, the trace lost by truncation before any renormalization.
    pub fn trace_deficit(&self) -> f64 {
        (-self.beta * self.dim as f64).exp()
    }

    fn log_rho(&self, n: usize) -> f64 {
        let mut l = (-self.q).ln_1p() - self.beta * n as f64;
        if self.renormalize {
            l -= (-self.trace_deficit()).ln_1p();
        }
        l
    }

    /// Diagonal of `rho`.
    pub fn rho_diag(&self) -> Vec<f64> {
        self.rho_power_diag(1.0)
    }

    /// Diagonal of `rho^s`, computed entrywise in the log domain.
    pub fn rho_power_diag(&self, s: f64) -> Vec<f64> {
        (0..self.dim).map(|n| (s * self.log_rho(n)).exp()).collect()
    }
}

/// Role of a [`FockOperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorLabel {
    Annihilation,
    Creation,
    Number,
    Position,
    Momentum,
    Density,
    Weyl,
    General,
}

/// Dense operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: CMat,
    label: OperatorLabel,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl FockOperator {
    /// Wraps a matrix after checking the invariants implied by `label`.
    pub fn new(entries: CMat, label: OperatorLabel) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Domain("operator has non-finite entries".into()));
        }
        let op = Self { entries, label };
        match label {
            OperatorLabel::Position | OperatorLabel::Momentum => {
                if op.hermitian_defect() > HERMITIAN_TOL {
                    return Err(Error::Domain(format!(
                        "{label:?} operator is not Hermitian"
                    )));
                }
            }
            OperatorLabel::Density => op.check_density()?,
            _ => {}
        }
        Ok(op)
    }

    /// Unlabelled operator.
    pub fn general(entries: CMat) -> Result<Self> {
        Self::new(entries, OperatorLabel::General)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMat::identity(dim, dim),
            label: OperatorLabel::General,
        }
    }

    fn check_density(&self) -> Result<()> {
        let scale = linalg::max_abs(&self.entries).max(1.0);
        if self.hermitian_defect() > HERMITIAN_TOL * scale {
            return Err(Error::Domain("density is not Hermitian".into()));
        }
        let tr = self.trace();
        if tr.re > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("density has trace {} > 1", tr.re)));
        }
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = if herm.iter().all(|z| z.im == 0.0) {
            let real = herm.map(|z| z.re);
            let e = SymmetricEigen::new(real).eigenvalues;
            e.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            herm.symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        };
        if min_eig < -1e-12 {
            return Err(Error::Domain(format!(
                "density has negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn label(&self) -> OperatorLabel {
        self.label
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn adjoint(&self) -> Self {
        let label = match self.label {
            OperatorLabel::Annihilation => OperatorLabel::Creation,
            OperatorLabel::Creation => OperatorLabel::Annihilation,
            OperatorLabel::Weyl => OperatorLabel::Weyl,
            l @ (OperatorLabel::Number
            | OperatorLabel::Position
            | OperatorLabel::Momentum
            | OperatorLabel::Density) => l,
            OperatorLabel::General => OperatorLabel::General,
        };
        Self {
            entries: self.entries.adjoint(),
            label,
        }
    }

    /// Largest entrywise modulus of `x - x*`.
    pub fn hermitian_defect(&self) -> f64 {
        linalg::max_abs(&(&self.entries - self.entries.adjoint()))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

/// Truncated annihilation and creation operators `(a, a*)`.
pub fn build_ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    check_dim(dim)?;
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    Ok((
        FockOperator {
            entries: a,
            label: OperatorLabel::Annihilation,
        },
        FockOperator {
            entries: ad,
            label: OperatorLabel::Creation,
        },
    ))
}

/// `N = a* a`.
pub fn number_operator(dim: usize) -> Result<FockOperator> {
    let (a, ad) = build_ladder(dim)?;
    Ok(FockOperator {
        entries: ad.entries() * a.entries(),
        label: OperatorLabel::Number,
    })
}

/// `Q = (a + a*)/sqrt 2`.
pub fn position(dim: usize) -> Result<FockOperator> {
    let (a, ad) = build_ladder(dim)?;
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(FockOperator {
        entries: (a.entries() + ad.entries()) * s,
        label: OperatorLabel::Position,
    })
}

/// `P = (a - a*)/(sqrt 2 i)`.
pub fn momentum(dim: usize) -> Result<FockOperator> {
    let (a, ad) = build_ladder(dim)?;
    let s = Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
    Ok(FockOperator {
        entries: (a.entries() - ad.entries()) * s,
        label: OperatorLabel::Momentum,
    })
}

/// Gibbs density `diag((1-q) q^n)`, rescaled to unit trace if requested.
pub fn build_rho(spec: &GibbsSpec) -> FockOperator {
    let d = spec.rho_diag();
    FockOperator {
        entries: CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d.len(),
            d.iter().map(|&x| Complex64::new(x, 0.0)),
        )),
        label: OperatorLabel::Density,
    }
}

/// A Weyl operator together with its Frobenius unitarity defect `||W*W - I||_F`.
#[derive(Debug, Clone)]
pub struct WeylOperator {
    pub op: FockOperator,
    pub unitarity_defect: f64,
}

/// `W(z) = exp((i/sqrt 2)(z a* + conj(z) a))` on the truncated space.
pub fn weyl(z: Complex64, spec: &GibbsSpec) -> WeylOperator {
    let (a, ad) = build_ladder(spec.dim()).expect("spec dimension is validated");
    let i_over = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let gen = (ad.entries() * z + a.entries() * z.conj()) * i_over;
    let w = linalg::expm(&gen);
    let defect = (w.adjoint() * &w - CMat::identity(spec.dim(), spec.dim())).norm();
    WeylOperator {
        op: FockOperator {
            entries: w,
            label: OperatorLabel::Weyl,
        },
        unitarity_defect: defect,
    }
}

/// Largest entrywise modulus of `W(z)W(w) - e^{-(i/2) Im(conj(z) w)} W(z+w)` on the
/// leading `dim - buffer` block.
pub fn weyl_relation_defect(z: Complex64, w: Complex64, spec: &GibbsSpec, buffer: usize) -> f64 {
    let wz = weyl(z, spec).op.into_entries();
    let ww = weyl(w, spec).op.into_entries();
    let wzw = weyl(z + w, spec).op.into_entries();
    let phase = Complex64::new(0.0, -0.5 * (z.conj() * w).im).exp();
    let diff = &wz * &ww - wzw * phase;
    let keep = spec.dim().saturating_sub(buffer);
    diff.view((0, 0), (keep, keep))
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max)
}

/// `omega(x) = Tr(rho x)`.
pub fn expect(x: &FockOperator, spec: &GibbsSpec) -> Result<Complex64> {
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.dim(),
        });
    }
    Ok(expect_matrix(x.entries(), spec))
}

pub(crate) fn expect_matrix(x: &CMat, spec: &GibbsSpec) -> Complex64 {
    let rho = spec.rho_diag();
    let mut re = linalg::CompensatedSum::new();
    let mut im = linalg::CompensatedSum::new();
    for (n, r) in rho.iter().enumerate() {
        re.add(r * x[(n, n)].re);
        im.add(r * x[(n, n)].im);
    }
    Complex64::new(re.value(), im.value())
}
