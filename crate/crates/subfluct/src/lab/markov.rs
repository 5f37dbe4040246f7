use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{ks_against, KsResult};
use super::{rng_for, LabError};
use crate::coboundary::CoboundaryError;
use crate::linalg::{self, Matrix};
use crate::measures::{drift, LimitKernels, Sampler};
use crate::scalar::Scalar;

/// A finite stationary chain with a weight function: `Y_N = sum lambda^i g(X_i)`.
#[derive(Clone, Debug, Serialize)]
pub struct MarkovSetup {
    pub p: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub g: Vec<Complex64>,
    pub lambda: Complex64,
}

impl MarkovSetup {
    /// The upward chain of a substitution with `g = f_check - int f_check dm`.
    pub fn from_kernels(kernels: &LimitKernels, fcheck: &[Scalar], lambda_f: &Scalar) -> Self {
        let mean = drift(kernels, fcheck);
        MarkovSetup {
            p: kernels.p.to_f64(),
            pi: kernels.m.iter().map(Scalar::re).collect(),
            g: fcheck.iter().map(|x| (x - &mean).to_c64()).collect(),
            lambda: lambda_f.to_c64(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovCltReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub h: Vec<[f64; 2]>,
    pub h_sup: f64,
    /// `E|h(X_2) - Ph(X_1)|^2`.
    pub increment_variance: f64,
    /// `(N-1)/N` times the increment variance.
    pub predicted: f64,
    /// Sample `Var(Z_N) / N` over trials.
    pub var_z_over_n: f64,
    pub variance_ratio: f64,
    /// Largest `|Y_n - Z_n - lambda h(X_1) + lambda^{n+1} Ph(X_n)|` over all
    /// paths and all `n <= N`.
    pub identity_max_residual: f64,
    /// KS of `Y_N / sqrt(N)` against the predicted normal.
    pub ks: KsResult,
    /// `max sup_n |Y_n| / (2 |h|_inf)` over trials.
    pub sup_y_over_2h: f64,
    /// `Y_N / sqrt(N)` per trial.
    #[serde(skip)]
    pub samples: Vec<Complex64>,
}

struct Trial {
    y: Complex64,
    z: Complex64,
    residual: f64,
    sup_y: f64,
}

/// Simulates the martingale decomposition
/// `Y_N = Z_N + lambda h(X_1) - lambda^{N+1} Ph(X_N)` where
/// `(I - lambda P) h = g` (with `int h dpi = 0` when `lambda = 1`) and
/// `Z_N = sum_{i<N} lambda^{i+1} (h(X_{i+1}) - Ph(X_i))`.
pub fn markov_clt_harness(setup: &MarkovSetup, n: usize, trials: usize, seed: u64, tol: f64) -> Result<MarkovCltReport, LabError> {
    let k = setup.g.len();
    if setup.p.len() != k || setup.pi.len() != k || n < 2 || trials < 2 {
        return Err(LabError::Precondition("inconsistent chain dimensions or too few steps".into()));
    }
    if (setup.lambda.norm() - 1.0).abs() > tol {
        return Err(LabError::Precondition(format!("|lambda| = {} is not 1", setup.lambda.norm())));
    }
    let lam = setup.lambda;
    let mut a: Matrix = (0..k)
        .map(|i| (0..k).map(|j| Scalar::complex(if i == j { 1.0 } else { 0.0 }, 0.0) - Scalar::complex(lam.re, lam.im) * Scalar::float(setup.p[i][j])).collect())
        .collect();
    let mut b: Vec<Scalar> = setup.g.iter().map(|z| Scalar::complex(z.re, z.im)).collect();
    // only lambda = 1 leaves the constants free; otherwise h is already unique
    if (lam - 1.0).norm() <= tol {
        a.push(setup.pi.iter().map(|&w| Scalar::float(w)).collect());
        b.push(Scalar::zero());
    }
    let sol = linalg::solve(&a, &b, tol).ok_or(LabError::Coboundary(CoboundaryError::SingularResolvent))?;
    let h: Vec<Complex64> = sol.x.iter().map(Scalar::to_c64).collect();
    let ph: Vec<Complex64> = (0..k).map(|x| (0..k).map(|y| h[y] * setup.p[x][y]).sum()).collect();
    let h_sup = h.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let (mut inc_abs, mut inc_sq) = (0.0, Complex64::new(0.0, 0.0));
    for x in 0..k {
        for y in 0..k {
            let d = h[y] - ph[x];
            inc_abs += setup.pi[x] * setup.p[x][y] * d.norm_sqr();
            inc_sq += setup.pi[x] * setup.p[x][y] * d * d;
        }
    }
    if lam.im.abs() > tol {
        inc_sq = Complex64::new(0.0, 0.0);
    }

    let start = Sampler::from_distribution(&setup.pi);
    let step = Sampler::from_rows(&setup.p);
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t);
            let mut x = start.step(0, &mut rng);
            let first = x;
            let mut pow = lam;
            let mut y = pow * setup.g[x];
            let mut z = Complex64::new(0.0, 0.0);
            let mut residual = (y - lam * h[first] + pow * lam * ph[x]).norm();
            let mut sup_y = y.norm();
            for _ in 1..n {
                let nx = step.step(x, &mut rng);
                z += pow * lam * (h[nx] - ph[x]);
                pow *= lam;
                y += pow * setup.g[nx];
                x = nx;
                residual = residual.max((y - z - lam * h[first] + pow * lam * ph[x]).norm());
                sup_y = sup_y.max(y.norm());
            }
            Trial { y, z, residual, sup_y }
        })
        .collect();

    let nf = n as f64;
    let tf = trials as f64;
    let mean_z: Complex64 = results.iter().map(|r| r.z).sum::<Complex64>() / tf;
    let var_z = results.iter().map(|r| (r.z - mean_z).norm_sqr()).sum::<f64>() / (tf - 1.0);
    let predicted = (nf - 1.0) / nf * inc_abs;
    let ys: Vec<Complex64> = results.iter().map(|r| r.y / nf.sqrt()).collect();
    let gamma = [[(inc_abs + inc_sq.re) / 2.0, inc_sq.im / 2.0], [inc_sq.im / 2.0, (inc_abs - inc_sq.re) / 2.0]];
    let var_z_over_n = var_z / nf;
    Ok(MarkovCltReport {
        n,
        trials,
        seed,
        h: h.iter().map(|z| [z.re, z.im]).collect(),
        h_sup,
        increment_variance: inc_abs,
        predicted,
        var_z_over_n,
        variance_ratio: if predicted > 0.0 { var_z_over_n / predicted } else { f64::NAN },
        identity_max_residual: results.iter().map(|r| r.residual).fold(0.0, f64::max),
        ks: ks_against(&ys, gamma),
        sup_y_over_2h: if h_sup > 0.0 { results.iter().map(|r| r.sup_y).fold(0.0, f64::max) / (2.0 * h_sup) } else { 0.0 },
        samples: ys,
    })
}
