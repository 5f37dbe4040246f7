//! Spectrum of the incidence matrix.
//!
//! Rational eigenvalues (always integers here, since the characteristic
//! polynomial is monic over Z) are found and handled exactly. The remaining
//! roots come from a square-free split plus Aberth iteration, and their
//! eigenvectors from an SVD nullspace.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::poly;
use crate::scalar::{Exactness, Scalar};
use crate::substitution::ThetaMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("root finder did not converge (residual {residual:e} at {root})")]
    Convergence { root: String, residual: f64 },
    #[error("no simple positive dominant eigenvalue")]
    NoPerronFrobenius,
    #[error("eigenvalue {0} is within tolerance of both 1 and the dominant eigenvalue")]
    Degenerate(String),
    #[error("eigenspace for {value} has dimension {got}, expected {expected}")]
    Eigenspace { value: String, expected: usize, got: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    pub value: Scalar,
    pub alg_mult: usize,
    pub geo_mult: usize,
    /// Basis of row vectors `v` with `v M = value v`.
    pub left: Vec<Vec<Scalar>>,
    /// Basis of column vectors `w` with `M w = value w`.
    pub right: Vec<Vec<Scalar>>,
    pub exactness: Exactness,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenDecomposition {
    /// Coefficients of `det(tI - M)`, lowest degree first, as decimal strings.
    pub charpoly: Vec<String>,
    pub pairs: Vec<EigenPair>,
    /// Largest relative residual `|p(z)|` over the float roots.
    pub max_root_residual: f64,
}

pub fn characteristic_polynomial(m: &ThetaMatrix) -> Vec<BigInt> {
    poly::charpoly(&m.to_bigint())
}

fn order_key(z: &Complex64) -> (f64, f64, f64) {
    (-z.norm(), -z.re, -z.im)
}

pub fn eigen_decompose(m: &ThetaMatrix, tol: f64) -> Result<EigenDecomposition, SpectralError> {
    let cp = characteristic_polynomial(m);
    let (int_roots, rest) = poly::integer_roots(&cp);
    let mut values: Vec<(Scalar, usize)> = int_roots
        .into_iter()
        .map(|(r, k)| (Scalar::Exact(BigRational::from_integer(r)), k))
        .collect();

    let cpc: Vec<Complex64> = cp.iter().map(|c| Complex64::new(crate::scalar::rat_to_f64(&BigRational::from_integer(c.clone())), 0.0)).collect();
    let mut max_res = 0.0f64;
    for (factor, mult) in poly::squarefree(&rest) {
        for z in poly::aberth_roots(&factor) {
            let scale: f64 = cpc.iter().enumerate().map(|(i, c)| c.norm() * z.norm().powi(i as i32)).sum();
            let res = poly::eval_c(&cpc, z).norm() / scale.max(1.0);
            max_res = max_res.max(res);
            if res > 1e-8 {
                return Err(SpectralError::Convergence { root: format!("{z}"), residual: res });
            }
            values.push((Scalar::Float(z), mult));
        }
    }
    values.sort_by(|a, b| order_key(&a.0.to_c64()).partial_cmp(&order_key(&b.0.to_c64())).unwrap());

    let mm = m.to_scalar();
    let mt = linalg::transpose(&mm);
    let pairs = values
        .into_iter()
        .map(|(value, alg_mult)| {
            let left = linalg::nullspace(&linalg::shift(&mt, &value), tol);
            let right = linalg::nullspace(&linalg::shift(&mm, &value), tol);
            let exactness = value.exactness();
            EigenPair { geo_mult: left.len(), value, alg_mult, left, right, exactness }
        })
        .collect();
    Ok(EigenDecomposition { charpoly: cp.iter().map(ToString::to_string).collect(), pairs, max_root_residual: max_res })
}

#[derive(Clone, Debug, Serialize)]
pub struct PfData {
    pub lambda: Scalar,
    /// Left eigenvector (row), positive.
    pub sigma: Vec<Scalar>,
    /// Right eigenvector (column), positive, with `sum sigma_i rho_i = 1`.
    pub rho: Vec<Scalar>,
    pub exactness: Exactness,
}

/// Perron–Frobenius data. With an exact eigenvalue `sigma` has first
/// coordinate 1; otherwise `|sigma|_1 = 1`. In both cases `rho` is scaled so
/// that the pairing `sigma . rho` equals 1.
pub fn pf_data(eig: &EigenDecomposition) -> Result<PfData, SpectralError> {
    let top = eig.pairs.first().ok_or(SpectralError::NoPerronFrobenius)?;
    let lam = top.value.to_c64();
    let dominant = top.alg_mult == 1
        && lam.im == 0.0
        && lam.re > 0.0
        && eig.pairs.iter().skip(1).all(|p| p.value.abs() < lam.re * (1.0 - 1e-12));
    if !dominant || top.left.len() != 1 || top.right.len() != 1 {
        return Err(SpectralError::NoPerronFrobenius);
    }
    let mut sigma: Vec<Scalar> = top.left[0].iter().map(real_part).collect();
    let mut rho: Vec<Scalar> = top.right[0].iter().map(real_part).collect();
    if !top.value.is_exact() {
        let l1: f64 = sigma.iter().map(Scalar::abs).sum();
        let sign = if sigma.iter().map(Scalar::re).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        sigma = sigma.iter().map(|x| x * &Scalar::float(sign / l1)).collect();
    } else if sigma[0].re() < 0.0 {
        sigma = sigma.iter().map(|x| -x).collect();
    }
    let pairing = crate::scalar::dot(&sigma, &rho);
    rho = rho.iter().map(|x| x / &pairing).collect();
    Ok(PfData { lambda: real_part(&top.value), sigma, rho, exactness: top.exactness })
}

fn real_part(x: &Scalar) -> Scalar {
    match x {
        Scalar::Exact(_) => x.clone(),
        Scalar::Float(z) => Scalar::float(z.re),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenClass {
    Pf,
    ModulusLt1,
    ModulusEq1Real1,
    ModulusEq1Other,
    ModulusGt1,
}

impl EigenClass {
    pub fn modulus_one(self) -> bool {
        matches!(self, EigenClass::ModulusEq1Real1 | EigenClass::ModulusEq1Other)
    }
}

/// Classifies an eigenvalue relative to 1 and to the dominant eigenvalue.
/// Exact values are compared exactly; float values within `tol`.
pub fn classify_eigenvalue(value: &Scalar, lambda: &Scalar, tol: f64) -> Result<EigenClass, SpectralError> {
    let one = Scalar::one();
    let is_pf = value.approx_eq(lambda, tol);
    let is_one = value.approx_eq(&one, tol);
    if is_pf && is_one {
        return Err(SpectralError::Degenerate(value.to_string()));
    }
    if is_pf {
        return Ok(EigenClass::Pf);
    }
    let modulus_one = match value {
        Scalar::Exact(q) => q == &BigRational::from_integer(1.into()) || q == &BigRational::from_integer((-1).into()),
        Scalar::Float(z) => (z.norm() - 1.0).abs() <= tol,
    };
    Ok(if modulus_one {
        if is_one {
            EigenClass::ModulusEq1Real1
        } else {
            EigenClass::ModulusEq1Other
        }
    } else if value.abs() < 1.0 {
        EigenClass::ModulusLt1
    } else {
        EigenClass::ModulusGt1
    })
}

/// The `lambda` with `f M = lambda f`, read off the largest entry of `f`;
/// `None` if `f` vanishes. Whether `f` really is an eigenvector is left to
/// the caller.
pub fn left_eigenvalue(m: &ThetaMatrix, f: &[Scalar]) -> Option<Scalar> {
    if f.len() != m.size() {
        return None;
    }
    let fm = linalg::vec_mat(f, &m.to_scalar());
    let i = (0..f.len()).max_by(|&i, &j| f[i].abs().total_cmp(&f[j].abs()))?;
    if f[i].is_zero_within(0.0) {
        return None;
    }
    Some(&fm[i] / &f[i])
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub matrix: ThetaMatrix,
    pub decomposition: EigenDecomposition,
    pub pf: PfData,
    pub classes: Vec<EigenClass>,
    pub tolerance: f64,
}

pub fn analyze(m: &ThetaMatrix, tol: f64) -> Result<SpectralReport, SpectralError> {
    let decomposition = eigen_decompose(m, tol)?;
    let pf = pf_data(&decomposition)?;
    let classes = decomposition
        .pairs
        .iter()
        .map(|p| classify_eigenvalue(&p.value, &pf.lambda, tol))
        .collect::<Result<_, _>>()?;
    Ok(SpectralReport { matrix: m.clone(), decomposition, pf, classes, tolerance: tol })
}

/// Residual `max |v M - mu v|` of a left eigenvector.
pub fn left_residual(m: &Matrix, v: &[Scalar], mu: &Scalar) -> f64 {
    let vm = linalg::vec_mat(v, m);
    vm.iter().zip(v).map(|(a, b)| (a - &(mu * b)).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::{theta_matrix, Substitution};

    fn decompose(rules: &str) -> EigenDecomposition {
        let s = Substitution::parse(rules).unwrap();
        eigen_decompose(&theta_matrix(&s), linalg::RANK_TOL).unwrap()
    }

    #[test]
    fn repeated_eigenvalue_multiplicities() {
        // Thue-Morse: eigenvalues 2 and 0
        let e = decompose("a=ab;b=ba");
        let vals: Vec<String> = e.pairs.iter().map(|p| p.value.to_string()).collect();
        assert_eq!(vals, vec!["2", "0"]);
    }

    #[test]
    fn defective_eigenvalue_has_smaller_geometric_multiplicity() {
        // M = [[2,1,1],[0,1,1],[1,1,1]]: check alg >= geo everywhere
        let e = decompose("a=aac;b=abc;c=abc");
        for p in &e.pairs {
            assert!(p.geo_mult >= 1 && p.geo_mult <= p.alg_mult);
        }
        let total: usize = e.pairs.iter().map(|p| p.alg_mult).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn classification_of_unit_values() {
        let lam = Scalar::int(3);
        assert_eq!(classify_eigenvalue(&Scalar::int(1), &lam, 1e-9).unwrap(), EigenClass::ModulusEq1Real1);
        assert_eq!(classify_eigenvalue(&Scalar::int(-1), &lam, 1e-9).unwrap(), EigenClass::ModulusEq1Other);
        assert_eq!(classify_eigenvalue(&Scalar::int(0), &lam, 1e-9).unwrap(), EigenClass::ModulusLt1);
        assert_eq!(classify_eigenvalue(&Scalar::int(2), &lam, 1e-9).unwrap(), EigenClass::ModulusGt1);
        assert_eq!(classify_eigenvalue(&Scalar::int(3), &lam, 1e-9).unwrap(), EigenClass::Pf);
        assert!(classify_eigenvalue(&Scalar::int(1), &Scalar::int(1), 1e-9).is_err());
    }
}
