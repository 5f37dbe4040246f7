//! Dense linear algebra over [`Scalar`].
//!
//! All-exact inputs go through plain Gaussian elimination on
//! `BigRational`; anything else is handed to nalgebra's complex SVD with a
//! relative rank tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::{Exactness, Scalar};

pub type Matrix = Vec<Vec<Scalar>>;

/// Default relative tolerance for float rank decisions.
pub const RANK_TOL: f64 = 1e-9;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
        .collect()
}

pub fn transpose(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|row| crate::scalar::dot(row, v)).collect()
}

pub fn vec_mat(v: &[Scalar], a: &Matrix) -> Vec<Scalar> {
    let cols = if a.is_empty() { 0 } else { a[0].len() };
    (0..cols).map(|j| v.iter().zip(a).map(|(x, row)| x * &row[j]).sum()).collect()
}

/// `a - mu * I` for a square matrix.
pub fn shift(a: &Matrix, mu: &Scalar) -> Matrix {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = &row[i] - mu;
    }
    out
}

pub fn exactness(m: &Matrix) -> Exactness {
    if m.iter().all(|r| r.iter().all(Scalar::is_exact)) {
        Exactness::Exact
    } else {
        Exactness::Float
    }
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().flatten().map(Scalar::abs).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- rational

/// Reduces `m` in place to reduced row echelon form; returns pivot columns.
pub fn rref_q(m: &mut [Vec<BigRational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] = &m[i][j] - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_q(m: &[Vec<BigRational>]) -> usize {
    let mut work = m.to_vec();
    rref_q(&mut work).len()
}

/// Basis of the right nullspace, in canonical (row-reduced) form.
pub fn nullspace_q(m: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
    let mut work = m.to_vec();
    let pivots = rref_q(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<BigRational>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -work[r][f].clone();
            }
            v
        })
        .collect();
    canonical_basis_q(&mut basis);
    basis
}

/// Row-reduces a list of basis vectors so the result is unique for the span.
pub fn canonical_basis_q(basis: &mut Vec<Vec<BigRational>>) {
    let k = rref_q(basis).len();
    basis.truncate(k);
}

/// Some solution of `a x = b`, free variables set to zero, or `None`.
pub fn solve_q(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let cols = if a.is_empty() { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref_q(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![BigRational::zero(); cols];
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[r][cols].clone();
    }
    Some(x)
}

// ---------------------------------------------------------------- complex

fn to_dmatrix(m: &Matrix, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        if i < m.len() && j < m[i].len() {
            m[i][j].to_c64()
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn dims(m: &Matrix) -> (usize, usize) {
    (m.len(), if m.is_empty() { 0 } else { m[0].len() })
}

fn svd_tol(sv: &nalgebra::DVector<f64>, tol: f64) -> f64 {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    tol * top.max(1.0)
}

pub fn rank_c(m: &Matrix, tol: f64) -> usize {
    let (r, c) = dims(m);
    if r == 0 || c == 0 {
        return 0;
    }
    let svd = to_dmatrix(m, r, c).svd(false, false);
    let t = svd_tol(&svd.singular_values, tol);
    svd.singular_values.iter().filter(|&&s| s > t).count()
}

pub fn nullspace_c(m: &Matrix, tol: f64) -> Vec<Vec<Complex64>> {
    let (r, c) = dims(m);
    if c == 0 {
        return vec![];
    }
    let n = r.max(c);
    let svd = to_dmatrix(m, n, c).svd(false, true);
    let t = svd_tol(&svd.singular_values, tol);
    let v_t = svd.v_t.expect("requested V^T");
    let mut basis: Vec<Vec<Complex64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= t)
        .map(|(i, _)| (0..c).map(|j| v_t[(i, j)].conj()).collect())
        .collect();
    canonical_basis_c(&mut basis, 1e-9);
    basis
}

/// Row reduction with partial pivoting; leading coordinates become 1.
pub fn canonical_basis_c(basis: &mut Vec<Vec<Complex64>>, tol: f64) {
    let rows = basis.len();
    if rows == 0 {
        return;
    }
    let cols = basis[0].len();
    let scale = basis.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows)
            .map(|i| (i, basis[i][c].norm()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol * scale {
            continue;
        }
        basis.swap(r, p);
        let inv = basis[r][c].inv();
        for x in basis[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..rows {
            if i != r {
                let factor = basis[i][c];
                if factor.norm() > 0.0 {
                    for j in 0..cols {
                        let delta = factor * basis[r][j];
                        basis[i][j] -= delta;
                    }
                }
            }
        }
        r += 1;
    }
    basis.truncate(r);
    for v in basis.iter_mut() {
        for z in v.iter_mut() {
            if z.norm() <= 1e-14 {
                *z = Complex64::new(0.0, 0.0);
            }
            if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
                z.im = 0.0;
            }
        }
    }
}

/// Least-squares solution of `a x = b` and its residual norm.
pub fn lstsq_c(a: &Matrix, b: &[Complex64]) -> (Vec<Complex64>, f64) {
    let (r, c) = dims(a);
    let n = r.max(c);
    let am = to_dmatrix(a, n, c);
    let bm = nalgebra::DVector::from_fn(n, |i, _| if i < b.len() { b[i] } else { Complex64::new(0.0, 0.0) });
    let svd = am.clone().svd(true, true);
    let t = svd_tol(&svd.singular_values, 1e-13);
    let x = svd.solve(&bm, t).expect("svd has U and V");
    let res = (&am * &x - &bm).norm();
    (x.iter().cloned().collect(), res)
}

// ---------------------------------------------------------------- generic

fn to_q(m: &Matrix) -> Vec<Vec<BigRational>> {
    m.iter()
        .map(|r| r.iter().map(|x| x.as_rational().expect("exact matrix").clone()).collect())
        .collect()
}

pub fn rank(m: &Matrix, tol: f64) -> usize {
    match exactness(m) {
        Exactness::Exact => rank_q(&to_q(m)),
        Exactness::Float => rank_c(m, tol),
    }
}

pub fn nullspace(m: &Matrix, tol: f64) -> Vec<Vec<Scalar>> {
    let (_, c) = dims(m);
    match exactness(m) {
        Exactness::Exact => nullspace_q(&to_q(m), c)
            .into_iter()
            .map(|v| v.into_iter().map(Scalar::Exact).collect())
            .collect(),
        Exactness::Float => nullspace_c(m, tol)
            .into_iter()
            .map(|v| v.into_iter().map(Scalar::Float).collect())
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<Scalar>,
    pub residual: f64,
    pub exactness: Exactness,
}

/// Solves `a x = b`. Exact systems either solve exactly or return `None`;
/// float systems return the least-squares solution when its residual is
/// within `tol` relative to the data.
pub fn solve(a: &Matrix, b: &[Scalar], tol: f64) -> Option<Solution> {
    if exactness(a) == Exactness::Exact && Exactness::of(b) == Exactness::Exact {
        let bq: Vec<BigRational> = b.iter().map(|x| x.as_rational().unwrap().clone()).collect();
        return solve_q(&to_q(a), &bq).map(|x| Solution {
            x: x.into_iter().map(Scalar::Exact).collect(),
            residual: 0.0,
            exactness: Exactness::Exact,
        });
    }
    let bc: Vec<Complex64> = b.iter().map(Scalar::to_c64).collect();
    let (x, residual) = lstsq_c(a, &bc);
    let scale = max_abs(a).max(1.0) * (1.0 + bc.iter().map(|z| z.norm()).fold(0.0, f64::max));
    if residual <= tol * scale {
        Some(Solution {
            x: x.into_iter().map(Scalar::Float).collect(),
            residual,
            exactness: Exactness::Float,
        })
    } else {
        None
    }
}

/// Residual of `a x - b` in the max norm.
pub fn residual(a: &Matrix, x: &[Scalar], b: &[Scalar]) -> f64 {
    mat_vec(a, x)
        .iter()
        .zip(b)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max)
}
