use num_bigint::BigUint;
use serde::Serialize;

use super::LabError;
use crate::coboundary::CoboundaryError;
use crate::measures::{depth_for, limit_kernels, markov_paths, nu_n, scalar_to_f64, tv_distance};
use crate::path_space::build_state_space;
use crate::scalar::Scalar;
use crate::spectral::analyze;
use crate::substitution::{theta_matrix, Letter, Substitution};

#[derive(Clone, Debug, Serialize)]
pub struct CouplingRow {
    pub r: usize,
    /// `d_TV(nu_N o S^r, champm o S^r)` on the lowest `p - r` digits.
    pub tv_nu_champm: Scalar,
    pub tv_nu_champm_f64: f64,
    /// `d_TV(champm o L^r, mpm o L^r)` on the top `p - r` digits.
    pub tv_champm_mpm: Scalar,
    pub tv_champm_mpm_f64: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub substitution: String,
    pub letter: char,
    pub n: u64,
    pub depth: usize,
    pub budget: usize,
    pub rows: Vec<CouplingRow>,
}

/// Exact total-variation distances between the uniform position measure
/// `nu_N` and the stationary chain measures, by full enumeration.
///
/// `champm` starts at `w` and moves up with `P`; `mpm` starts at `m` and
/// moves up with `P`. Rows with `r >= p` are skipped.
pub fn coupling_decay_experiment(
    s: &Substitution,
    a: Letter,
    n: u64,
    rs: &[usize],
    budget: usize,
    tol: f64,
) -> Result<CouplingReport, LabError> {
    let spectral = analyze(&theta_matrix(s), tol).map_err(CoboundaryError::from)?;
    let space = build_state_space(s);
    let kernels = limit_kernels(&space, &spectral.pf);
    let nu = nu_n(s, &space, a, n, budget)?;
    let p = depth_for(s, a, &BigUint::from(n));
    let champm_full = markov_paths(&space, &kernels.w, &kernels.p, p, budget)?;
    let mpm_full = markov_paths(&space, &kernels.m, &kernels.p, p, budget)?;
    let mut rows = Vec::new();
    for &r in rs {
        if r >= p {
            continue;
        }
        let keep = p - r;
        let tv1 = tv_distance(&nu.keep_low(keep), &champm_full.keep_low(keep));
        let tv2 = tv_distance(&champm_full.drop_low(r), &mpm_full.drop_low(r));
        rows.push(CouplingRow {
            r,
            tv_nu_champm_f64: scalar_to_f64(&tv1),
            tv_nu_champm: tv1,
            tv_champm_mpm_f64: scalar_to_f64(&tv2),
            tv_champm_mpm: tv2,
        });
    }
    Ok(CouplingReport { substitution: s.to_string(), letter: s.symbol(a), n, depth: p, budget, rows })
}
