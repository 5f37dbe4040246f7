use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::cantor::tail_depth;
use super::stats::{bl_gap, EmpiricalDistribution, Summary};
use super::{fixed_point_sums, par_draws, LabError};
use crate::measures::{depth_for, entrance_law_a, limit_kernels, scalar_to_f64, to_f64, Sampler};
use crate::path_space::{build_state_space, BirkhoffLift, Coder};
use crate::scalar::{rat_to_f64, to_c64_vec, Scalar};
use crate::spectral::analyze;
use crate::substitution::{find_seed, theta_matrix, Substitution};

#[derive(Clone, Debug, Serialize)]
pub struct BlowupLevel {
    pub ell: usize,
    /// `N_ell = |theta^ell(a)|`.
    pub n_ell: String,
    /// Depth of the coding of `N_ell`.
    pub p: usize,
    /// `N_ell / lambda^p`.
    pub ratio: f64,
    /// Number of leading reversed digits of `N_ell` agreeing with the limit.
    pub stable_prefix: usize,
    /// Law of `S_f(u_{<=K}) / lambda_f^p` for `K` uniform on `1..=N_ell`.
    pub exhaustive: EmpiricalDistribution,
    pub mean_gap: f64,
    pub second_moment_gap: f64,
    pub bl_gap: f64,
    /// Mean gap against the literal chain (first digit from the entrance
    /// law, then the downward kernel); diagnostic only.
    pub literal_mean_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub substitution: String,
    pub f: Vec<Scalar>,
    pub lambda_f: Scalar,
    pub seed_letter: char,
    pub n_mc: usize,
    pub seed: u64,
    /// Depth of the `U_f` series, with `|lambda_f|^{-D} < 1e-12`.
    pub truncation_depth: usize,
    /// Level used for the limiting reversed coding.
    pub limit_level: usize,
    pub limit_coding: String,
    pub r: Scalar,
    /// `N_L / lambda^{p(L)}` at the limit level.
    pub limit_ratio: f64,
    pub r_gap: f64,
    pub levels: Vec<BlowupLevel>,
    pub monte_carlo: EmpiricalDistribution,
    pub literal: Summary,
}

/// Blow-up limits for `1 < |lambda_f| < lambda` along `N_ell = |theta^ell(a)|`.
///
/// The Monte Carlo side draws the top `q - 1` digits from the limiting
/// reversed coding `z`, digit `q` from the mixture weights
/// `lambda^{-q} sigma_hat(z_q, j) / R` (`j < k_q`), and the rest from the
/// downward kernel, then evaluates `U_f = sum_i lambda_f^{-i} f_check(x_i)`.
pub fn blowup_experiment(
    s: &Substitution,
    f: &[Scalar],
    lambda_f: &Scalar,
    ells: &[usize],
    n_mc: usize,
    seed: u64,
    tol: f64,
) -> Result<BlowupReport, LabError> {
    let spectral = analyze(&theta_matrix(s), tol).map_err(crate::coboundary::CoboundaryError::from)?;
    let lambda = spectral.pf.lambda.re();
    let mf = lambda_f.abs();
    if !(mf > 1.0 + tol && mf < lambda - tol) {
        return Err(LabError::Precondition(format!("|lambda_f| = {mf} is not in (1, {lambda})")));
    }
    if ells.is_empty() {
        return Err(LabError::Precondition("empty level range".into()));
    }
    let space = build_state_space(s);
    let kernels = limit_kernels(&space, &spectral.pf);
    let lift = BirkhoffLift::new(s, &space, f, lambda_f)?;
    let fcheck = to_c64_vec(&lift.fcheck);
    let lam_f = lambda_f.to_c64();
    let a = find_seed(s)?.letter;

    // deep enough that the entrance series is cut by its own tolerance
    let mut q = 1;
    while lambda.powi(1 - q as i32) >= 1e-15 {
        q += 1;
    }
    let ell_max = *ells.iter().max().unwrap();
    let limit_level = (q + 2).max(ell_max + 1);
    let mut coder = Coder::new(s, limit_level);
    let n_of = |coder: &mut Coder, l: usize| coder.len(l, a).clone();
    let n_limit = n_of(&mut coder, limit_level);
    let z = coder.encode_reversed(a, &n_limit)?;
    let law = entrance_law_a(&space, &kernels.lifted, &z)?;
    let ratio_of = |n: &BigUint, p: usize| -> f64 {
        let nf = n.to_f64().unwrap_or(f64::INFINITY);
        if nf.is_finite() {
            nf / lambda.powi(p as i32)
        } else {
            rat_to_f64(&num_rational::BigRational::from_integer(n.clone().into())) / lambda.powi(p as i32)
        }
    };
    let limit_ratio = ratio_of(&n_limit, depth_for(s, a, &n_limit));
    let r = law.r.clone();

    let depth = tail_depth(1.0 / mf, 1e-12);
    let weights: Vec<f64> = law.mixture.iter().map(|(_, _, w)| scalar_to_f64(w)).collect();
    let pick = Sampler::from_distribution(&weights);
    let down = Sampler::from_rows(&kernels.p_star.to_f64());
    let zdigits: Vec<usize> = (1..=depth).map(|i| space.index(z.digit(i))).collect();
    let inv = 1.0 / lam_f;
    let mixture = &law.mixture;
    let draws = par_draws(n_mc, seed, |rng| {
        let (q, y, _) = mixture[pick.step(0, rng)];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = inv;
        let mut x = y;
        for i in 1..=depth {
            if i < q {
                acc += pow * fcheck[zdigits[i - 1]];
            } else {
                if i > q {
                    x = down.step(x, rng);
                }
                acc += pow * fcheck[x];
            }
            pow *= inv;
        }
        acc
    });
    let entrance = Sampler::from_distribution(&to_f64(&law.a));
    let literal_draws = par_draws(n_mc, seed ^ 0x5eed_0f1a_7e00, |rng| {
        let mut x = entrance.step(0, rng);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = inv;
        for i in 1..=depth {
            if i > 1 {
                x = down.step(x, rng);
            }
            acc += pow * fcheck[x];
            pow *= inv;
        }
        acc
    });
    let monte_carlo = EmpiricalDistribution::new(draws);
    let literal = Summary::of(&literal_draws);

    let n_max = n_of(&mut coder, ell_max).to_usize().ok_or_else(|| LabError::Precondition("N_ell too large to enumerate".into()))?;
    let all_sums = fixed_point_sums(s, f, n_max)?;
    let mut levels = Vec::new();
    for &ell in ells {
        let n_ell = n_of(&mut coder, ell);
        let p = depth_for(s, a, &n_ell);
        let zl = coder.encode_reversed(a, &n_ell)?;
        let stable_prefix = (1..=zl.digits.len()).take_while(|&i| zl.digit(i) == z.digit(i)).count();
        let scale = lam_f.powi(p as i32);
        let n_usize = n_ell.to_usize().unwrap();
        let samples: Vec<Complex64> = all_sums[..n_usize].iter().map(|v| v / scale).collect();
        let exhaustive = EmpiricalDistribution::new(samples);
        let (e, m) = (&exhaustive.summary, &monte_carlo.summary);
        levels.push(BlowupLevel {
            ell,
            n_ell: n_ell.to_string(),
            p,
            ratio: ratio_of(&n_ell, p),
            stable_prefix,
            mean_gap: (e.mean_c() - m.mean_c()).norm(),
            second_moment_gap: (e.second_moment - m.second_moment).abs(),
            bl_gap: bl_gap(&exhaustive.samples, &monte_carlo.samples),
            literal_mean_gap: (e.mean_c() - literal.mean_c()).norm(),
            exhaustive,
        });
    }
    Ok(BlowupReport {
        substitution: s.to_string(),
        f: f.to_vec(),
        lambda_f: lambda_f.clone(),
        seed_letter: s.symbol(a),
        n_mc,
        seed,
        truncation_depth: depth,
        limit_level,
        limit_coding: z.prefix(q.min(z.digits.len())).iter().map(|x| space.render(space.index(*x))).collect::<Vec<_>>().join(""),
        r_gap: (r.re() - limit_ratio).abs(),
        r,
        limit_ratio,
        levels,
        monte_carlo,
        literal,
    })
}
