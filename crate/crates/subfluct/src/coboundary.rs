//! Coboundary equations, limiting CLT variances and the bounded-discrepancy
//! classification.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::measures::{drift, limit_kernels, LimitKernels};
use crate::path_space::{build_state_space, BirkhoffLift, PathError, StateSpace};
use crate::scalar::{Exactness, Scalar};
use crate::spectral::{analyze, EigenClass, SpectralError, SpectralReport};
use crate::substitution::{theta_matrix, Substitution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoboundaryError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("|lambda_f| = {0} is not 1")]
    NotUnitModulus(f64),
    #[error("resolvent system is singular or inconsistent")]
    SingularResolvent,
}

/// Outcome of the coboundary test
/// `S_f(theta(a)_{<j}) = drift + h(a) - lambda_f^{-1} h(theta(a)_j)`.
#[derive(Clone, Debug, Serialize)]
pub struct CoboundaryCertificate {
    pub is_coboundary: bool,
    /// Transfer function; `h(first letter) = 0` when `lambda_f = 1`.
    pub h: Option<Vec<Scalar>>,
    pub drift: Scalar,
    /// Max residual of the linear system (0 for exact solutions).
    pub residual: f64,
    /// For `lambda_f = 1` the drift must vanish; `None` otherwise.
    pub drift_vanishes: Option<bool>,
    pub exactness: Exactness,
}

fn is_one(x: &Scalar, tol: f64) -> bool {
    x.approx_eq(&Scalar::one(), tol)
}

fn letter_equations(s: &Substitution, space: &StateSpace, lambda_f: &Scalar) -> Matrix {
    let n = s.size();
    let inv = lambda_f.recip();
    space
        .states()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut row = vec![Scalar::zero(); n];
            row[x.letter.index()] = &row[x.letter.index()] + &Scalar::one();
            let c = space.emitted(i).index();
            row[c] = &row[c] - &inv;
            row
        })
        .collect()
}

pub fn solve_coboundary(
    s: &Substitution,
    f: &[Scalar],
    lambda_f: &Scalar,
    drift_value: &Scalar,
    tol: f64,
) -> Result<CoboundaryCertificate, CoboundaryError> {
    let space = build_state_space(s);
    let lift = BirkhoffLift::new(s, &space, f, lambda_f)?;
    let a = letter_equations(s, &space, lambda_f);
    let b: Vec<Scalar> = lift.fcheck.iter().map(|v| v - drift_value).collect();
    let exactness = linalg::exactness(&a).and(Exactness::of(&b));
    let unit = is_one(lambda_f, tol);
    let drift_vanishes = unit.then(|| drift_value.is_zero_within(tol));
    let Some(sol) = linalg::solve(&a, &b, tol) else {
        return Ok(CoboundaryCertificate {
            is_coboundary: false,
            h: None,
            drift: drift_value.clone(),
            residual: f64::INFINITY,
            drift_vanishes,
            exactness,
        });
    };
    let mut h = sol.x;
    if unit {
        let h0 = h[0].clone();
        h = h.iter().map(|x| x - &h0).collect();
    }
    let residual = linalg::residual(&a, &h, &b);
    Ok(CoboundaryCertificate {
        is_coboundary: drift_vanishes.unwrap_or(true),
        h: Some(h),
        drift: drift_value.clone(),
        residual,
        drift_vanishes,
        exactness,
    })
}

impl CoboundaryCertificate {
    /// A priori bound on `sup_N |S_f(u_{<N})|` implied by the certificate:
    /// the telescoping part is at most `2 |h|_inf` and the drift part at most
    /// `2 |drift| / |1 - lambda_f|` (absent when `lambda_f = 1`).
    pub fn birkhoff_bound(&self, lambda_f: &Scalar) -> Option<f64> {
        let h = self.h.as_ref()?;
        let hmax = h.iter().map(Scalar::abs).fold(0.0, f64::max);
        let gap = (lambda_f.to_c64() - Complex64::new(1.0, 0.0)).norm();
        let drift_part = if gap < 1e-12 { 0.0 } else { 2.0 * self.drift.abs() / gap };
        Some(2.0 * hmax + drift_part)
    }
}

/// Residual of the split form: `f(theta(a)_j) = lambda^{-1}(h(theta(a)_j) -
/// h(theta(a)_{j+1}))` for `j < |theta(a)|` and `drift + h(a) -
/// lambda^{-1} h(theta(a)_1) = 0`.
pub fn split_form_residual(s: &Substitution, f: &[Scalar], lambda_f: &Scalar, drift_value: &Scalar, h: &[Scalar]) -> f64 {
    let inv = lambda_f.recip();
    let mut worst = 0.0f64;
    for a in s.letters() {
        let img = s.rule(a);
        for j in 0..img.len().saturating_sub(1) {
            let lhs = &f[img[j].index()];
            let rhs = &inv * &(&h[img[j].index()] - &h[img[j + 1].index()]);
            worst = worst.max((lhs - &rhs).abs());
        }
        let first = drift_value + &h[a.index()] - &inv * &h[img[0].index()];
        worst = worst.max(first.abs());
    }
    worst
}

/// Solves the split form directly (used to check both forms agree).
pub fn solve_split_form(s: &Substitution, f: &[Scalar], lambda_f: &Scalar, drift_value: &Scalar, tol: f64) -> Option<Vec<Scalar>> {
    let n = s.size();
    let inv = lambda_f.recip();
    let mut rows: Matrix = Vec::new();
    let mut rhs = Vec::new();
    for a in s.letters() {
        let img = s.rule(a);
        for j in 0..img.len().saturating_sub(1) {
            let mut row = vec![Scalar::zero(); n];
            row[img[j].index()] = &row[img[j].index()] + &inv;
            row[img[j + 1].index()] = &row[img[j + 1].index()] - &inv;
            rows.push(row);
            rhs.push(f[img[j].index()].clone());
        }
        let mut row = vec![Scalar::zero(); n];
        row[a.index()] = &row[a.index()] + &Scalar::one();
        row[img[0].index()] = &row[img[0].index()] - &inv;
        rows.push(row);
        rhs.push(-drift_value);
    }
    linalg::solve(&rows, &rhs, tol).map(|sol| sol.x)
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceReport {
    /// `E|Z|^2 = (h,h)_m - (Ph,Ph)_m`.
    pub e_abs_z2: Scalar,
    /// `E Z^2` from squared martingale increments; 0 for non-real `lambda_f`.
    pub e_z2: Scalar,
    /// Covariance of `(Re Z, Im Z)`.
    pub gamma: [[f64; 2]; 2],
    pub h: Vec<Scalar>,
    pub drift: Scalar,
    /// Truncated correlation series, summed until a term drops below 1e-13.
    pub series: f64,
    pub series_terms: usize,
    /// The series with `lambda^{k-1}` in place of its conjugate.
    pub series_unconjugated: f64,
    pub exactness: Exactness,
}

/// Limiting variance of the normalised Birkhoff sums for `|lambda_f| = 1`.
///
/// With `g = f_check - int f_check dm`, solve `(I - lambda_f P) h = g` with
/// `int h dm = 0`; the martingale increments `h(X_2) - Ph(X_1)` carry the
/// whole variance.
pub fn clt_variance(kernels: &LimitKernels, fcheck: &[Scalar], lambda_f: &Scalar, tol: f64) -> Result<VarianceReport, CoboundaryError> {
    if (lambda_f.abs() - 1.0).abs() > tol {
        return Err(CoboundaryError::NotUnitModulus(lambda_f.abs()));
    }
    let n = fcheck.len();
    let p = &kernels.p.rows;
    let m = &kernels.m;
    let mean = drift(kernels, fcheck);
    let g: Vec<Scalar> = fcheck.iter().map(|x| x - &mean).collect();
    let mut a: Matrix = linalg::identity(n);
    for i in 0..n {
        for j in 0..n {
            a[i][j] = &a[i][j] - &(lambda_f * &p[i][j]);
        }
    }
    a.push(m.clone());
    let mut b = g.clone();
    b.push(Scalar::zero());
    let sol = linalg::solve(&a, &b, tol).ok_or(CoboundaryError::SingularResolvent)?;
    let h = sol.x;
    let ph = kernels.p.apply(&h);
    let weighted = |v: &[Scalar]| -> Scalar { v.iter().zip(m).map(|(x, w)| &x.norm_sqr() * w).sum() };
    let e_abs_z2 = weighted(&h) - weighted(&ph);
    let e_z2 = if lambda_f.is_real_within(tol) {
        let mut acc = Scalar::zero();
        for x in 0..n {
            for y in 0..n {
                if !p[x][y].is_exact_zero() {
                    let d = &h[y] - &ph[x];
                    acc = acc + &m[x] * &p[x][y] * &d * &d;
                }
            }
        }
        acc
    } else {
        Scalar::zero()
    };
    let (abs2, z2) = (e_abs_z2.re(), e_z2.to_c64());
    let gamma = [[(abs2 + z2.re) / 2.0, z2.im / 2.0], [z2.im / 2.0, (abs2 - z2.re) / 2.0]];
    let (series, series_terms) = correlation_series(kernels, &g, lambda_f, true);
    let (series_unconjugated, _) = correlation_series(kernels, &g, lambda_f, false);
    let exactness = sol.exactness.and(e_abs_z2.exactness());
    Ok(VarianceReport { e_abs_z2, e_z2, gamma, h, drift: mean, series, series_terms, series_unconjugated, exactness })
}

/// `E|g(X_1)|^2 + sum_{k>=2} 2 Re[c_k E g(X_1) conj(g(X_k))]` for the
/// stationary chain, with `c_k = conj(lambda^{k-1})` (or `lambda^{k-1}` when
/// `conjugate` is false).
fn correlation_series(kernels: &LimitKernels, g: &[Scalar], lambda_f: &Scalar, conjugate: bool) -> (f64, usize) {
    let p: Vec<Vec<f64>> = kernels.p.to_f64();
    let m: Vec<f64> = kernels.m.iter().map(Scalar::re).collect();
    let g: Vec<Complex64> = g.iter().map(Scalar::to_c64).collect();
    let lam = lambda_f.to_c64();
    let n = g.len();
    let mut total: f64 = (0..n).map(|x| m[x] * g[x].norm_sqr()).sum();
    let mut v: Vec<Complex64> = g.iter().map(|z| z.conj()).collect();
    let mut pow = Complex64::new(1.0, 0.0);
    let mut k = 1;
    let mut small = 0;
    while k < 1_000_000 {
        v = (0..n).map(|x| (0..n).map(|y| v[y] * p[x][y]).sum()).collect();
        pow *= lam;
        k += 1;
        let c = if conjugate { pow.conj() } else { pow };
        let corr: Complex64 = (0..n).map(|x| g[x] * v[x] * m[x]).sum();
        let term = 2.0 * (c * corr).re;
        total += term;
        // require a few consecutive small terms so oscillating tails are not cut early
        if corr.norm() < 1e-13 {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (total, k)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenVerdict {
    pub value: Scalar,
    pub class: EigenClass,
    pub alg_mult: usize,
    pub geo_mult: usize,
    /// For modulus-one eigenvalues: coboundary certificates of the basis.
    pub certificates: Vec<CoboundaryCertificate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyVerdict {
    /// Condition 3 applied to every modulus-one eigenvalue.
    pub bounded: bool,
    /// Condition 3 applied only to the eigenvalue 1.
    pub bounded_literal: bool,
    pub no_large_eigenvalues: bool,
    pub unit_blocks_diagonal: bool,
    pub unit_eigenfunctions_coboundaries: bool,
    pub unit_one_eigenfunctions_coboundaries: bool,
    pub eigenvalues: Vec<EigenVerdict>,
}

/// Everything needed to run the coboundary machinery on one substitution.
pub struct Analysis {
    pub spectral: SpectralReport,
    pub space: StateSpace,
    pub kernels: LimitKernels,
}

impl Analysis {
    pub fn new(s: &Substitution, tol: f64) -> Result<Self, CoboundaryError> {
        let spectral = analyze(&theta_matrix(s), tol)?;
        let space = build_state_space(s);
        let kernels = limit_kernels(&space, &spectral.pf);
        Ok(Analysis { spectral, space, kernels })
    }

    pub fn drift_of(&self, s: &Substitution, f: &[Scalar], lambda_f: &Scalar) -> Result<Scalar, CoboundaryError> {
        let lift = BirkhoffLift::new(s, &self.space, f, lambda_f)?;
        Ok(drift(&self.kernels, &lift.fcheck))
    }

    pub fn certificate(&self, s: &Substitution, f: &[Scalar], lambda_f: &Scalar, tol: f64) -> Result<CoboundaryCertificate, CoboundaryError> {
        let d = self.drift_of(s, f, lambda_f)?;
        solve_coboundary(s, f, lambda_f, &d, tol)
    }

    pub fn variance(&self, s: &Substitution, f: &[Scalar], lambda_f: &Scalar, tol: f64) -> Result<VarianceReport, CoboundaryError> {
        let lift = BirkhoffLift::new(s, &self.space, f, lambda_f)?;
        clt_variance(&self.kernels, &lift.fcheck, lambda_f, tol)
    }
}

pub fn classify_discrepancy(s: &Substitution, tol: f64) -> Result<DiscrepancyVerdict, CoboundaryError> {
    let an = Analysis::new(s, tol)?;
    let mut eigenvalues = Vec::new();
    let (mut large, mut defective, mut unit_ok, mut one_ok) = (false, false, true, true);
    for (pair, &class) in an.spectral.decomposition.pairs.iter().zip(&an.spectral.classes) {
        let mut certificates = Vec::new();
        if class == EigenClass::ModulusGt1 {
            large = true;
        }
        if class.modulus_one() {
            if pair.geo_mult != pair.alg_mult {
                defective = true;
            }
            for f in &pair.left {
                let cert = an.certificate(s, f, &pair.value, tol)?;
                if !cert.is_coboundary {
                    unit_ok = false;
                    if class == EigenClass::ModulusEq1Real1 {
                        one_ok = false;
                    }
                }
                certificates.push(cert);
            }
        }
        eigenvalues.push(EigenVerdict {
            value: pair.value.clone(),
            class,
            alg_mult: pair.alg_mult,
            geo_mult: pair.geo_mult,
            certificates,
        });
    }
    Ok(DiscrepancyVerdict {
        bounded: !large && !defective && unit_ok,
        bounded_literal: !large && !defective && one_ok,
        no_large_eigenvalues: !large,
        unit_blocks_diagonal: !defective,
        unit_eigenfunctions_coboundaries: unit_ok,
        unit_one_eigenfunctions_coboundaries: one_ok,
        eigenvalues,
    })
}
