//! Numerical experiments for the limit theorems: CLT on the fixed point,
//! Cantor and blow-up limits, typical orbits, a Markov CLT harness and
//! coupling decay of the path measures.
//!
//! Monte Carlo draws use one `ChaCha8Rng` per sample seeded with
//! `seed + index`, so results do not depend on the number of threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coboundary::CoboundaryError;
use crate::measures::MeasureError;
use crate::path_space::PathError;
use crate::scalar::Scalar;
use crate::substitution::{find_seed, BirkhoffStream, FixedPoint, Substitution, SubstitutionError};

mod blowup;
mod cantor;
mod clt;
mod coupling;
mod markov;
pub mod stats;
mod typical;

pub use blowup::{blowup_experiment, BlowupLevel, BlowupReport};
pub use cantor::{cantor_limit_experiment, CantorReport};
pub use clt::{clt_experiment, CltReport};
pub use coupling::{coupling_decay_experiment, CouplingReport, CouplingRow};
pub use markov::{markov_clt_harness, MarkovCltReport, MarkovSetup};
pub use stats::{EmpiricalDistribution, KsResult, Reference, Summary};
pub use typical::{typical_orbit_experiment, DigitSource, TypicalReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error(transparent)]
    Substitution(#[from] SubstitutionError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Coboundary(#[from] CoboundaryError),
    /// Inputs outside the theorem's hypotheses.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The experiment is meaningless for this input (e.g. CLT for a coboundary).
    #[error("refused: {0}")]
    Refused(String),
}

pub(crate) fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// `n` draws, draw `i` using its own generator seeded with `seed + i`.
pub(crate) fn par_draws<F>(n: usize, seed: u64, draw: F) -> Vec<Complex64>
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    (0..n as u64).into_par_iter().map(|i| draw(&mut rng_for(seed, i))).collect()
}

/// `S_f(u_{<=n})` for `n = 1..=n_max` along the canonical fixed point.
pub fn fixed_point_sums(s: &Substitution, f: &[Scalar], n_max: usize) -> Result<Vec<Complex64>, LabError> {
    let seed = find_seed(s)?;
    Ok(BirkhoffStream::new(FixedPoint::new(s, seed), f).take(n_max).collect())
}

/// `log_lambda n`.
pub(crate) fn log_base(lambda: f64, n: f64) -> f64 {
    n.ln() / lambda.ln()
}

/// Independent drift estimate: least-squares slope of the prefix means
/// `mean_{n <= N_j} S_f(u_{<=n})` against `log_lambda N_j` for
/// `N_j = N / lambda^j`, `j = 0..levels`. Self-similarity makes the bounded
/// part of the sums average out between levels.
pub fn empirical_drift_slope(sums: &[Complex64], lambda: f64, levels: usize) -> Complex64 {
    let pts: Vec<(f64, Complex64)> = (0..levels)
        .map(|j| (sums.len() as f64 / lambda.powi(j as i32)).round() as usize)
        .filter(|&n| n >= 1)
        .map(|n| (log_base(lambda, n as f64), sums[..n].iter().sum::<Complex64>() / n as f64))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<Complex64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    pts.iter().map(|p| (p.1 - my) * (p.0 - mx)).sum::<Complex64>() / sxx
}
