use num_complex::Complex64;
use serde::Serialize;

use super::stats::{ks_against, EmpiricalDistribution, KsResult};
use super::{log_base, rng_for, LabError};
use crate::coboundary::{Analysis, VarianceReport};
use crate::measures::{to_f64, Sampler};
use crate::path_space::State;
use crate::scalar::Scalar;
use crate::substitution::{Letter, Substitution};

/// Where the prefix-suffix digits `x_1, x_2, ...` of `v` come from.
#[derive(Clone, Debug, Serialize)]
pub enum DigitSource {
    /// Stationary upward chain: `x_1 ~ w`, `x_{i+1} ~ P(x_i, .)`.
    Random { seed: u64 },
    /// The given states repeated cyclically (must be consistent).
    Periodic(Vec<State>),
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalReport {
    pub substitution: String,
    pub f: Vec<Scalar>,
    pub lambda_f: Scalar,
    pub n: usize,
    pub source: DigitSource,
    /// Random draws rejected because the suffixes ran out before `n` letters.
    pub case_one_resamples: usize,
    pub levels: usize,
    /// `N_ell <= n < N_{ell+1}` used for the centring.
    pub n_ell: u64,
    pub a_vn: [f64; 2],
    pub drift: Scalar,
    pub variance: VarianceReport,
    pub log_lambda_n: f64,
    pub normalised: EmpiricalDistribution,
    /// KS of `(S - a_{v,N} - drift L) / sqrt(E|Z|^2 L)`.
    pub ks: KsResult,
    /// The same without subtracting `a_{v,N}`.
    pub ks_uncentered: f64,
    /// `|a_{v,N} - drift L| / sqrt(ln N ln ln ln N)`; logged, never judged.
    pub lil_ratio: Option<f64>,
}

fn expand(s: &Substitution, word: &[Letter], depth: usize, out: &mut Vec<Letter>, limit: usize) {
    let mut stack: Vec<(Letter, usize)> = word.iter().rev().map(|&c| (c, depth)).collect();
    while let Some((c, d)) = stack.pop() {
        if out.len() >= limit {
            return;
        }
        if d == 0 {
            out.push(c);
        } else {
            for &e in s.rule(c).iter().rev() {
                stack.push((e, d - 1));
            }
        }
    }
}

struct Orbit {
    letters: Vec<Letter>,
    /// `N_0 = 1 + |s_0|, N_1, ...` (capped by the requested length).
    marks: Vec<u64>,
}

/// Builds `v = c_0 s_0 theta(s_1) theta^2(s_2) ...` up to `n` letters, or
/// `None` if the suffixes are exhausted first (Case I within `max_levels`).
fn build_orbit(s: &Substitution, digits: &mut dyn FnMut() -> State, n: usize, max_levels: usize) -> Option<Orbit> {
    let first = digits();
    let c0 = s.rule(first.letter)[first.pos - 1];
    let mut letters = vec![c0];
    let mut marks = Vec::new();
    let mut total: u64 = 1;
    let mut lens: Vec<u64> = vec![1; s.size()];
    let mut x = first;
    for i in 0..max_levels {
        if i > 0 {
            x = digits();
        }
        let suffix = &s.rule(x.letter)[x.pos..];
        let add: u64 = suffix.iter().map(|c| lens[c.index()]).fold(0u64, |a, b| a.saturating_add(b));
        expand(s, suffix, i, &mut letters, n);
        total = total.saturating_add(add);
        marks.push(total);
        if letters.len() >= n {
            return Some(Orbit { letters, marks });
        }
        lens = s.letters().map(|b| s.rule(b).iter().map(|c| lens[c.index()]).fold(0u64, |a, v| a.saturating_add(v))).collect();
    }
    None
}

/// CLT along a typical one-sided point `v`, centred by
/// `a_{v,N} = S_f(v_{[1,N_ell]})`, for `|lambda_f| = 1`.
pub fn typical_orbit_experiment(
    s: &Substitution,
    f: &[Scalar],
    lambda_f: &Scalar,
    n: usize,
    source: DigitSource,
    tol: f64,
) -> Result<TypicalReport, LabError> {
    if (lambda_f.abs() - 1.0).abs() > tol {
        return Err(LabError::Precondition(format!("|lambda_f| = {} is not 1", lambda_f.abs())));
    }
    if n < 16 {
        return Err(LabError::Precondition("n must be at least 16".into()));
    }
    let an = Analysis::new(s, tol)?;
    if an.certificate(s, f, lambda_f, tol)?.is_coboundary {
        return Err(LabError::Refused("f is a coboundary; Birkhoff sums stay bounded".into()));
    }
    let variance = an.variance(s, f, lambda_f, tol)?;
    let lambda = an.spectral.pf.lambda.re();
    let max_levels = 4 * (log_base(lambda, n as f64).ceil() as usize) + 64;

    let mut case_one_resamples = 0;
    let orbit = match &source {
        DigitSource::Periodic(states) => {
            if states.is_empty() {
                return Err(LabError::Precondition("empty digit pattern".into()));
            }
            for (i, x) in states.iter().enumerate() {
                let next = states[(i + 1) % states.len()];
                if x.pos == 0 || next.pos > s.rule(next.letter).len() || s.rule(next.letter)[next.pos - 1] != x.letter {
                    return Err(LabError::Precondition(format!("digit pattern is inconsistent at {i}")));
                }
            }
            let mut i = 0;
            let mut next = || {
                let x = states[i % states.len()];
                i += 1;
                x
            };
            build_orbit(s, &mut next, n, max_levels).ok_or_else(|| LabError::Refused("all suffixes empty (Case I)".into()))?
        }
        DigitSource::Random { seed } => {
            let start = Sampler::from_distribution(&to_f64(&an.kernels.w));
            let step = Sampler::from_rows(&an.kernels.p.to_f64());
            loop {
                let mut rng = rng_for(*seed, case_one_resamples as u64);
                let mut cur: Option<usize> = None;
                let mut next = || {
                    let x = match cur {
                        None => start.step(0, &mut rng),
                        Some(y) => step.step(y, &mut rng),
                    };
                    cur = Some(x);
                    an.space.state(x)
                };
                if let Some(o) = build_orbit(s, &mut next, n, max_levels) {
                    break o;
                }
                case_one_resamples += 1;
                if case_one_resamples > 1000 {
                    return Err(LabError::Refused("digit chain keeps producing Case I points".into()));
                }
            }
        }
    };

    let fc: Vec<Complex64> = f.iter().map(Scalar::to_c64).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let sums: Vec<Complex64> = orbit.letters[..n]
        .iter()
        .map(|c| {
            acc += fc[c.index()];
            acc
        })
        .collect();
    let n_ell = orbit.marks.iter().copied().filter(|&m| m <= n as u64).max().unwrap_or(1);
    let a_vn = sums[n_ell as usize - 1];
    let l = log_base(lambda, n as f64);
    let sigma2 = variance.e_abs_z2.re();
    let drift = variance.drift.clone();
    let shift = if lambda_f.approx_eq(&Scalar::one(), tol) { drift.to_c64() * l } else { Complex64::new(0.0, 0.0) };
    let scale = (sigma2 * l).sqrt();
    let g = variance.gamma;
    let reference = [[g[0][0] / sigma2, g[0][1] / sigma2], [g[1][0] / sigma2, g[1][1] / sigma2]];
    let normalised: Vec<Complex64> = sums.iter().map(|z| (z - a_vn - shift) / scale).collect();
    let uncentred: Vec<Complex64> = sums.iter().map(|z| (z - shift) / scale).collect();
    let ks = ks_against(&normalised, reference);
    let ks_uncentered = ks_against(&uncentred, reference).statistic;
    let ln = (n as f64).ln();
    let lll = ln.ln().ln();
    let lil_ratio = (lll > 0.0).then(|| (a_vn - shift).norm() / (ln * lll).sqrt());
    Ok(TypicalReport {
        substitution: s.to_string(),
        f: f.to_vec(),
        lambda_f: lambda_f.clone(),
        n,
        source,
        case_one_resamples,
        levels: orbit.marks.len(),
        n_ell,
        a_vn: [a_vn.re, a_vn.im],
        drift,
        variance,
        log_lambda_n: l,
        normalised: EmpiricalDistribution::new(normalised),
        ks,
        ks_uncentered,
        lil_ratio,
    })
}
