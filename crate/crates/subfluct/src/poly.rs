//! Univariate polynomials: exact characteristic polynomials, rational root
//! extraction, square-free splitting and a simultaneous root finder for what
//! is left over.
//!
//! Coefficient vectors are stored lowest degree first.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::rat_to_f64;

/// Characteristic polynomial `det(tI - A)` of an integer matrix by the
/// Faddeev–LeVerrier recursion. Every division is exact over the integers.
pub fn charpoly(a: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = a.len();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mul_int(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        let am = mul_int(a, &next);
        let trace: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        let (q, r) = (-trace).div_rem(&BigInt::from(k));
        debug_assert!(r.is_zero(), "Faddeev-LeVerrier division must be exact");
        coeffs[n - k] = q;
        m = next;
    }
    coeffs
}

fn mul_int(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum()).collect())
        .collect()
}

pub fn eval_int(p: &[BigInt], x: &BigInt) -> BigInt {
    p.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

pub fn eval_c(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Divides a monic integer polynomial by `(t - r)`; the caller guarantees `r`
/// is a root.
fn deflate_int(p: &[BigInt], r: &BigInt) -> Vec<BigInt> {
    let n = p.len() - 1;
    let mut q = vec![BigInt::zero(); n];
    let mut carry = BigInt::zero();
    for i in (0..n).rev() {
        carry = &p[i + 1] + carry * r;
        q[i] = carry.clone();
    }
    q
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let Some(v) = n.to_u64() else {
        return vec![];
    };
    let mut out = Vec::new();
    let mut d = 1u64;
    while d.saturating_mul(d) <= v && d < 10_000_000 {
        if v % d == 0 {
            out.push(BigInt::from(d));
            if d != v / d {
                out.push(BigInt::from(v / d));
            }
        }
        d += 1;
    }
    out
}

/// Splits off all integer roots (with multiplicity) of a monic integer
/// polynomial. Returns the roots and the remaining cofactor.
pub fn integer_roots(p: &[BigInt]) -> (Vec<(BigInt, usize)>, Vec<BigInt>) {
    let mut rest = p.to_vec();
    let mut roots: Vec<(BigInt, usize)> = Vec::new();
    let mut zeros = 0;
    while rest.len() > 1 && rest[0].is_zero() {
        rest.remove(0);
        zeros += 1;
    }
    if zeros > 0 {
        roots.push((BigInt::zero(), zeros));
    }
    if rest.len() > 1 {
        let mut cands: Vec<BigInt> = divisors(&rest[0]).into_iter().flat_map(|d| [d.clone(), -d]).collect();
        cands.sort_by(|a, b| b.abs().cmp(&a.abs()).then(b.cmp(a)));
        for c in cands {
            let mut mult = 0;
            while rest.len() > 1 && eval_int(&rest, &c).is_zero() {
                rest = deflate_int(&rest, &c);
                mult += 1;
            }
            if mult > 0 {
                roots.push((c, mult));
            }
        }
    }
    (roots, rest)
}

// ---------------------------------------------------------------- rational polys

pub type QPoly = Vec<BigRational>;

fn trim(p: &mut QPoly) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn is_zero_poly(p: &QPoly) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn degree(p: &QPoly) -> usize {
    p.len().saturating_sub(1)
}

fn monic(p: &QPoly) -> QPoly {
    let lead = p.last().unwrap().clone();
    p.iter().map(|c| c / &lead).collect()
}

fn derivative(p: &QPoly) -> QPoly {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

fn sub(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    let mut out: QPoly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

fn divmod(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let mut r = a.clone();
    trim(&mut r);
    let db = degree(b);
    if degree(&r) < db || is_zero_poly(&r) {
        return (vec![BigRational::zero()], r);
    }
    let lead = b.last().unwrap().clone();
    let mut q = vec![BigRational::zero(); degree(&r) - db + 1];
    while !is_zero_poly(&r) && degree(&r) >= db {
        let shift = degree(&r) - db;
        let coef = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            let delta = &coef * c;
            r[i + shift] = &r[i + shift] - delta;
        }
        q[shift] = coef;
        r.pop();
        trim(&mut r);
        if r.is_empty() {
            r.push(BigRational::zero());
        }
    }
    (q, r)
}

fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
    let (mut x, mut y) = (a.clone(), b.clone());
    trim(&mut x);
    trim(&mut y);
    while !is_zero_poly(&y) {
        let (_, r) = divmod(&x, &y);
        x = y;
        y = r;
    }
    monic(&x)
}

/// Yun's square-free decomposition of a monic polynomial: factors `a_i`
/// (each square-free, pairwise coprime) with `p = prod a_i^i`.
pub fn squarefree(p: &[BigInt]) -> Vec<(QPoly, usize)> {
    let f: QPoly = p.iter().map(|c| BigRational::from_integer(c.clone())).collect();
    if degree(&f) == 0 {
        return vec![];
    }
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = divmod(&f, &a0).0;
    let mut c = divmod(&df, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    loop {
        let a = gcd(&b, &d);
        if degree(&a) > 0 {
            out.push((a.clone(), i));
        }
        b = divmod(&b, &a).0;
        if degree(&b) == 0 {
            break;
        }
        c = divmod(&d, &a).0;
        d = sub(&c, &derivative(&b));
        i += 1;
    }
    out
}

/// All complex roots of a square-free rational polynomial by Aberth–Ehrlich
/// iteration followed by Newton polishing. Conjugate pairs are symmetrised.
pub fn aberth_roots(p: &QPoly) -> Vec<Complex64> {
    let pc: Vec<Complex64> = monic(p).iter().map(|c| Complex64::new(rat_to_f64(c), 0.0)).collect();
    let n = pc.len() - 1;
    if n == 0 {
        return vec![];
    }
    let dp: Vec<Complex64> = pc.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    let bound = 1.0 + pc[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let ratio = eval_c(&pc, z[k]) / eval_c(&dp, z[k]);
            let repulse: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            if w.is_finite() {
                z[k] -= w;
                moved = moved.max(w.norm() / z[k].norm().max(1.0));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let d = eval_c(&dp, *r);
            if d.norm() > 0.0 {
                let step = eval_c(&pc, *r) / d;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    symmetrise(z)
}

fn symmetrise(mut z: Vec<Complex64>) -> Vec<Complex64> {
    let tol = 1e-10;
    let mut out = Vec::with_capacity(z.len());
    z.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap());
    let mut used = vec![false; z.len()];
    for i in 0..z.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let r = z[i];
        if r.im.abs() <= tol * r.norm().max(1.0) {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        // find the partner closest to conj(r)
        let partner = (0..z.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (z[a] - r.conj()).norm().partial_cmp(&(z[b] - r.conj()).norm()).unwrap());
        if let Some(j) = partner {
            used[j] = true;
            let avg = (r + z[j].conj()) * 0.5;
            out.push(avg);
            out.push(avg.conj());
        } else {
            out.push(r);
        }
    }
    out
}
