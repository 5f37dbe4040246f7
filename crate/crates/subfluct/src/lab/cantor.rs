use num_complex::Complex64;
use serde::Serialize;

use super::stats::{bl_gap, EmpiricalDistribution};
use super::{fixed_point_sums, par_draws, LabError};
use crate::measures::{limit_kernels, to_f64, Sampler};
use crate::path_space::{build_state_space, BirkhoffLift};
use crate::scalar::{to_c64_vec, Scalar};
use crate::spectral::analyze;
use crate::substitution::{theta_matrix, Substitution};

#[derive(Clone, Debug, Serialize)]
pub struct CantorReport {
    pub substitution: String,
    pub f: Vec<Scalar>,
    pub lambda_f: Scalar,
    pub n: usize,
    pub n_mc: usize,
    pub seed: u64,
    /// Depth `D` of the truncated series, with `|lambda_f|^D < 1e-12`.
    pub truncation_depth: usize,
    pub empirical: EmpiricalDistribution,
    pub monte_carlo: EmpiricalDistribution,
    pub mean_gap: f64,
    pub second_moment_gap: f64,
    pub bl_gap: f64,
    /// `(n, max_{m <= n} |S_f(u_{<=m})|)` at powers of ten and at `n`.
    pub sup_checkpoints: Vec<(usize, f64)>,
}

/// Depth needed for a geometric tail `r^D` to drop below `eps`.
pub(crate) fn tail_depth(r: f64, eps: f64) -> usize {
    if r <= 0.0 {
        return 1;
    }
    let mut d = 1;
    while r.powi(d as i32) >= eps {
        d += 1;
    }
    d
}

/// Compares the law of `S_f(u_{<=K})`, `K` uniform on `1..=n`, with Monte
/// Carlo draws of `W_f = sum_i lambda_f^{i-1} f_check(x_i)` along the
/// stationary upward chain, for `|lambda_f| < 1`.
pub fn cantor_limit_experiment(
    s: &Substitution,
    f: &[Scalar],
    lambda_f: &Scalar,
    n: usize,
    n_mc: usize,
    seed: u64,
    tol: f64,
) -> Result<CantorReport, LabError> {
    if lambda_f.abs() >= 1.0 {
        return Err(LabError::Precondition(format!("|lambda_f| = {} is not below 1", lambda_f.abs())));
    }
    let spectral = analyze(&theta_matrix(s), tol).map_err(crate::coboundary::CoboundaryError::from)?;
    let space = build_state_space(s);
    let kernels = limit_kernels(&space, &spectral.pf);
    let lift = BirkhoffLift::new(s, &space, f, lambda_f)?;
    let fcheck = to_c64_vec(&lift.fcheck);
    let lam = lambda_f.to_c64();
    let depth = tail_depth(lambda_f.abs(), 1e-12);

    let sums = fixed_point_sums(s, f, n)?;
    let mut sup_checkpoints = Vec::new();
    let mut sup = 0.0f64;
    let mut next = 10usize;
    for (i, z) in sums.iter().enumerate() {
        sup = sup.max(z.norm());
        if i + 1 == next || i + 1 == n {
            sup_checkpoints.push((i + 1, sup));
            next = next.saturating_mul(10);
        }
    }

    let start = Sampler::from_distribution(&to_f64(&kernels.w));
    let step = Sampler::from_rows(&kernels.p.to_f64());
    let draws = par_draws(n_mc, seed, |rng| {
        let mut x = start.step(0, rng);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..depth {
            if i > 0 {
                x = step.step(x, rng);
            }
            acc += pow * fcheck[x];
            pow *= lam;
        }
        acc
    });

    let empirical = EmpiricalDistribution::new(sums);
    let monte_carlo = EmpiricalDistribution::new(draws);
    let (a, b) = (&empirical.summary, &monte_carlo.summary);
    Ok(CantorReport {
        substitution: s.to_string(),
        f: f.to_vec(),
        lambda_f: lambda_f.clone(),
        n,
        n_mc,
        seed,
        truncation_depth: depth,
        mean_gap: (a.mean_c() - b.mean_c()).norm(),
        second_moment_gap: (a.second_moment - b.second_moment).abs(),
        bl_gap: bl_gap(&empirical.samples, &monte_carlo.samples),
        empirical,
        monte_carlo,
        sup_checkpoints,
    })
}
