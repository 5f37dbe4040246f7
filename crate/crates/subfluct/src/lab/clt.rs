use num_complex::Complex64;
use serde::Serialize;

use super::stats::{ks_against, EmpiricalDistribution, KsResult, Summary};
use super::{fixed_point_sums, log_base, LabError};
use crate::coboundary::{Analysis, VarianceReport};
use crate::scalar::Scalar;
use crate::substitution::Substitution;

#[derive(Clone, Debug, Serialize)]
pub struct CltReport {
    pub substitution: String,
    pub f: Vec<Scalar>,
    pub lambda_f: Scalar,
    pub n: usize,
    pub log_lambda_n: f64,
    pub drift: Scalar,
    pub variance: VarianceReport,
    /// Law of the raw sums `S_f(u_{<=K})`, `K` uniform on `1..=n`.
    pub raw: Summary,
    /// Law of `(S - drift L) / sqrt(E|Z|^2 L)` (drift only for `lambda_f = 1`).
    pub normalised: EmpiricalDistribution,
    pub ks: KsResult,
    /// KS after removing the empirical mean: a shape-only diagnostic.
    pub ks_centered: f64,
    /// `|E(S - drift L)| / sqrt(L)`.
    pub mean_over_sqrt_log: f64,
    /// `Var(S) / (E|Z|^2 L)`.
    pub variance_ratio: f64,
    pub tolerance: f64,
}

/// Exhaustive CLT experiment on the fixed point for `|lambda_f| = 1`.
/// Refuses coboundaries, whose sums stay bounded.
pub fn clt_experiment(s: &Substitution, f: &[Scalar], lambda_f: &Scalar, n: usize, tol: f64) -> Result<CltReport, LabError> {
    if (lambda_f.abs() - 1.0).abs() > tol {
        return Err(LabError::Precondition(format!("|lambda_f| = {} is not 1", lambda_f.abs())));
    }
    if n < 2 {
        return Err(LabError::Precondition("n must be at least 2".into()));
    }
    let an = Analysis::new(s, tol)?;
    let cert = an.certificate(s, f, lambda_f, tol)?;
    if cert.is_coboundary {
        return Err(LabError::Refused("f is a coboundary; Birkhoff sums stay bounded".into()));
    }
    let variance = an.variance(s, f, lambda_f, tol)?;
    let drift = variance.drift.clone();
    let sigma2 = variance.e_abs_z2.re();
    let lambda = an.spectral.pf.lambda.re();
    let l = log_base(lambda, n as f64);
    let shift = if lambda_f.approx_eq(&Scalar::one(), tol) { drift.to_c64() * l } else { Complex64::new(0.0, 0.0) };
    let sums = fixed_point_sums(s, f, n)?;
    let raw = Summary::of(&sums);
    let scale = (sigma2 * l).sqrt();
    let normalised: Vec<Complex64> = sums.iter().map(|z| (z - shift) / scale).collect();
    let g = variance.gamma;
    let reference = [[g[0][0] / sigma2, g[0][1] / sigma2], [g[1][0] / sigma2, g[1][1] / sigma2]];
    let ks = ks_against(&normalised, reference);
    let centred_mean = raw.mean_c() - shift;
    let m = centred_mean / scale;
    let centred: Vec<Complex64> = normalised.iter().map(|z| z - m).collect();
    let ks_centered = ks_against(&centred, reference).statistic;
    Ok(CltReport {
        substitution: s.to_string(),
        f: f.to_vec(),
        lambda_f: lambda_f.clone(),
        n,
        log_lambda_n: l,
        drift,
        mean_over_sqrt_log: centred_mean.norm() / l.sqrt(),
        variance_ratio: raw.variance / (sigma2 * l),
        raw,
        normalised: EmpiricalDistribution::new(normalised),
        ks,
        ks_centered,
        variance,
        tolerance: tol,
    })
}
