//! Markov kernels and path measures on the prefix automaton.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::path_space::{enumerate_paths, Coder, Path, ReversedPath, State, StateSpace};
use crate::scalar::{Exactness, Scalar};
use crate::spectral::PfData;
use crate::substitution::{Letter, Substitution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("kernel row {row} sums to {sum} (expected 1)")]
    NotStochastic { row: usize, sum: String },
    #[error("path measure would have {atoms} atoms, above the budget of {budget}")]
    Budget { atoms: String, budget: usize },
    #[error("entrance law vanishes: every digit of the limiting coding is minimal")]
    DegenerateEntrance,
    #[error(transparent)]
    Path(#[from] crate::path_space::PathError),
}

/// PF data lifted to the automaton states:
/// `sigma_hat(b,k) = sigma(theta(b)_k) / lambda` and `rho_hat(b,k) = rho(b)`.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedPf {
    pub lambda: Scalar,
    pub sigma_hat: Vec<Scalar>,
    pub rho_hat: Vec<Scalar>,
}

pub fn lift_pf(space: &StateSpace, pf: &PfData) -> LiftedPf {
    let sigma_hat = (0..space.len()).map(|i| &pf.sigma[space.emitted(i).index()] / &pf.lambda).collect();
    let rho_hat = space.states().iter().map(|x| pf.rho[x.letter.index()].clone()).collect();
    LiftedPf { lambda: pf.lambda.clone(), sigma_hat, rho_hat }
}

impl LiftedPf {
    /// Rescaled so that `sum rho_hat = 1` while keeping `sum sigma_hat rho_hat = 1`.
    pub fn rho_normalised(&self) -> LiftedPf {
        let total: Scalar = self.rho_hat.iter().cloned().sum();
        LiftedPf {
            lambda: self.lambda.clone(),
            sigma_hat: self.sigma_hat.iter().map(|x| x * &total).collect(),
            rho_hat: self.rho_hat.iter().map(|x| x / &total).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Kernel {
    pub rows: Vec<Vec<Scalar>>,
}

impl Kernel {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> &Scalar {
        &self.rows[x][y]
    }

    pub fn exactness(&self) -> Exactness {
        crate::linalg::exactness(&self.rows)
    }

    /// Largest `|sum_z K(x,z) - 1|` over rows not listed in `skip`.
    pub fn row_sum_defect(&self, skip: &[usize]) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, r)| (r.iter().cloned().sum::<Scalar>() - Scalar::one()).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_stochastic(&self, tol: f64) -> Result<(), MeasureError> {
        for (i, r) in self.rows.iter().enumerate() {
            let s: Scalar = r.iter().cloned().sum();
            if !s.approx_eq(&Scalar::one(), tol) {
                return Err(MeasureError::NotStochastic { row: i, sum: s.to_string() });
            }
        }
        Ok(())
    }

    /// `(K v)(x) = sum_y K(x,y) v(y)`.
    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        crate::linalg::mat_vec(&self.rows, v)
    }

    /// `(mu K)(y) = sum_x mu(x) K(x,y)`.
    pub fn push(&self, mu: &[Scalar]) -> Vec<Scalar> {
        crate::linalg::vec_mat(mu, &self.rows)
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(Scalar::re).collect()).collect()
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::from_rows(&self.to_f64())
    }
}

/// Cumulative sparse rows for inverse-CDF sampling. Columns are scanned in
/// increasing order, so a seed determines the whole trajectory.
#[derive(Clone, Debug)]
pub struct Sampler {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sampler {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let rows = rows
            .iter()
            .map(|r| {
                let mut acc = 0.0;
                r.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, &p)| {
                        acc += p;
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        Sampler { rows }
    }

    pub fn from_distribution(mu: &[f64]) -> Self {
        Sampler::from_rows(&[mu.to_vec()])
    }

    pub fn step<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let row = &self.rows[from];
        let total = row.last().map_or(1.0, |x| x.1);
        let u: f64 = rng.gen::<f64>() * total;
        row.iter().find(|(_, c)| u < *c).unwrap_or(row.last().expect("empty row")).0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitKernels {
    pub lifted: LiftedPf,
    /// Upward kernel `p(y,z) = m1[y][z] rho_hat(z) / (lambda rho_hat(y))`.
    pub p: Kernel,
    /// Downward kernel `p*(y,z) = sigma_hat(z) m1[z][y] / (lambda sigma_hat(y))`.
    pub p_star: Kernel,
    /// Stationary law `sigma_hat rho_hat`.
    pub m: Vec<Scalar>,
    /// Law of the lowest digit of a uniform position: `rho_hat / sum rho_hat`.
    pub w: Vec<Scalar>,
}

pub fn limit_kernels(space: &StateSpace, pf: &PfData) -> LimitKernels {
    let lifted = lift_pf(space, pf);
    let n = space.len();
    let lam = &lifted.lambda;
    let p = Kernel {
        rows: (0..n)
            .map(|y| {
                (0..n)
                    .map(|z| {
                        if space.edge(y, z) {
                            &lifted.rho_hat[z] / &(lam * &lifted.rho_hat[y])
                        } else {
                            Scalar::zero()
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    let p_star = Kernel {
        rows: (0..n)
            .map(|y| {
                (0..n)
                    .map(|z| {
                        if space.edge(z, y) {
                            &lifted.sigma_hat[z] / &(lam * &lifted.sigma_hat[y])
                        } else {
                            Scalar::zero()
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    let m = lifted.sigma_hat.iter().zip(&lifted.rho_hat).map(|(a, b)| a * b).collect();
    let total: Scalar = lifted.rho_hat.iter().cloned().sum();
    let w = lifted.rho_hat.iter().map(|x| x / &total).collect();
    LimitKernels { lifted, p, p_star, m, w }
}

/// A finite-depth kernel with the rows whose normaliser vanished.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteKernel {
    pub depth: usize,
    pub kernel: Kernel,
    pub dead_rows: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteKernels {
    /// `h^y_k` for `k = p, p-1, ..., 3`.
    pub h: Vec<FiniteKernel>,
    /// `q_k` for `k = p, p-1, ..., 2`.
    pub q: Vec<FiniteKernel>,
}

fn ratio(num: &BigUint, den: &BigUint) -> Scalar {
    Scalar::Exact(BigRational::new(num.clone().into(), den.clone().into()))
}

/// Exact finite-depth transition kernels.
///
/// `h^y_k(x,z) = m1[x][z] m^(k-2)[z][y] / m^(k-1)[x][y]` conditions an upward
/// walk on reaching `y` after `k-1` steps; `q_k(y,z) = m^(k-2)[*][z] m1[z][y] /
/// m^(k-1)[*][y]` is the downward kernel of the uniform measure under `y`.
pub fn finite_kernels(space: &StateSpace, y: usize, p: usize) -> FiniteKernels {
    let n = space.len();
    let powers: Vec<_> = (0..p).map(|k| crate::path_space::ssim_power(space, k)).collect();
    let mut h = Vec::new();
    for k in (3..=p).rev() {
        let (lo, hi) = (&powers[k - 2], &powers[k - 1]);
        let mut dead = Vec::new();
        let rows = (0..n)
            .map(|x| {
                let den = hi.get(x, y);
                if den.is_zero() {
                    dead.push(x);
                    return vec![Scalar::zero(); n];
                }
                (0..n)
                    .map(|z| if space.edge(x, z) { ratio(lo.get(z, y), den) } else { Scalar::zero() })
                    .collect()
            })
            .collect();
        h.push(FiniteKernel { depth: k, kernel: Kernel { rows }, dead_rows: dead });
    }
    let mut q = Vec::new();
    for k in (2..=p).rev() {
        let (lo, hi) = (&powers[k - 2], &powers[k - 1]);
        let mut dead = Vec::new();
        let rows = (0..n)
            .map(|yy| {
                let den = &hi.column_sums[yy];
                if den.is_zero() {
                    dead.push(yy);
                    return vec![Scalar::zero(); n];
                }
                (0..n)
                    .map(|z| if space.edge(z, yy) { ratio(&lo.column_sums[z], den) } else { Scalar::zero() })
                    .collect()
            })
            .collect();
        q.push(FiniteKernel { depth: k, kernel: Kernel { rows }, dead_rows: dead });
    }
    FiniteKernels { h, q }
}

/// Finitely supported measure on depth-`p` paths; keys are state indices,
/// least significant first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathMeasure {
    pub atoms: BTreeMap<Vec<usize>, Scalar>,
}

impl PathMeasure {
    pub fn total(&self) -> Scalar {
        self.atoms.values().cloned().sum()
    }

    pub fn add(&mut self, key: Vec<usize>, w: Scalar) {
        match self.atoms.get_mut(&key) {
            Some(v) => *v = &*v + &w,
            None => {
                self.atoms.insert(key, w);
            }
        }
    }

    /// Marginal on the lowest `keep` digits.
    pub fn keep_low(&self, keep: usize) -> PathMeasure {
        let mut out = PathMeasure::default();
        for (k, w) in &self.atoms {
            out.add(k[..keep.min(k.len())].to_vec(), w.clone());
        }
        out
    }

    /// Marginal after discarding the lowest `drop` digits.
    pub fn drop_low(&self, drop: usize) -> PathMeasure {
        let mut out = PathMeasure::default();
        for (k, w) in &self.atoms {
            out.add(k[drop.min(k.len())..].to_vec(), w.clone());
        }
        out
    }

    pub fn exactness(&self) -> Exactness {
        if self.atoms.values().all(Scalar::is_exact) {
            Exactness::Exact
        } else {
            Exactness::Float
        }
    }
}

fn path_key(space: &StateSpace, p: &Path) -> Vec<usize> {
    p.digits.iter().map(|x| space.index(*x)).collect()
}

/// Depth `p` minimal with `N <= |theta^p(a)|`.
pub fn depth_for(s: &Substitution, a: Letter, n: &BigUint) -> usize {
    let mut coder = Coder::new(s, 8);
    let mut p = 0;
    while coder.len(p, a) < n {
        p += 1;
    }
    p
}

/// Uniform measure on the codings of positions `1..=N` in `theta^p(a)`.
pub fn nu_n(s: &Substitution, space: &StateSpace, a: Letter, n: u64, budget: usize) -> Result<PathMeasure, MeasureError> {
    if n as u128 > budget as u128 {
        return Err(MeasureError::Budget { atoms: n.to_string(), budget });
    }
    let big = BigUint::from(n);
    let p = depth_for(s, a, &big);
    let mut coder = Coder::new(s, p);
    let mut cur = coder.encode(a, p, &BigUint::from(1u32))?;
    let w = Scalar::ratio(1, n as i64);
    let mut out = PathMeasure::default();
    for i in 1..=n {
        out.add(path_key(space, &cur), w.clone());
        if i < n {
            cur = crate::path_space::adic_successor(s, &cur)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct NuComponent {
    /// Level (1-based from the bottom) of the first digit below `Psi(N)`.
    pub level: usize,
    /// State `(v_level, j)` with `j < k_level`.
    pub state: State,
    /// `m^(level-1)[*][state] / N`.
    pub weight: Scalar,
}

/// Decomposition of `nu_N` into conditioned uniform pieces plus one atom.
#[derive(Clone, Debug, Serialize)]
pub struct NuDecomposition {
    pub n: u64,
    pub top: Path,
    pub components: Vec<NuComponent>,
    pub atom_weight: Scalar,
}

pub fn nu_n_decomposition(s: &Substitution, space: &StateSpace, a: Letter, n: u64) -> Result<NuDecomposition, MeasureError> {
    let big = BigUint::from(n);
    let p = depth_for(s, a, &big);
    let top = Coder::new(s, p).encode(a, p, &big)?;
    let mut components = Vec::new();
    for (i, x) in top.digits.iter().enumerate() {
        let level = i + 1;
        let pw = crate::path_space::ssim_power(space, level - 1);
        for j in 1..x.pos {
            let st = State { letter: x.letter, pos: j };
            let mass = &pw.column_sums[space.index(st)];
            components.push(NuComponent {
                level,
                state: st,
                weight: Scalar::Exact(BigRational::new(mass.clone().into(), big.clone().into())),
            });
        }
    }
    Ok(NuDecomposition { n, top, components, atom_weight: Scalar::ratio(1, n as i64) })
}

impl NuDecomposition {
    /// Rebuilds the path measure: each component spreads its weight uniformly
    /// (`1 / m^(level-1)[*][state]` per path) over the completions below its
    /// state, with the digits above copied from `Psi(N)`.
    pub fn reconstruct(&self, s: &Substitution, space: &StateSpace) -> PathMeasure {
        let mut out = PathMeasure::default();
        let top_key = path_key(space, &self.top);
        out.add(top_key.clone(), self.atom_weight.clone());
        for c in &self.components {
            let y = space.index(c.state);
            let mass = &crate::path_space::ssim_power(space, c.level - 1).column_sums[y];
            let upm = Scalar::Exact(BigRational::new(1.into(), mass.clone().into()));
            let w = &c.weight * &upm;
            let below = s.rule(c.state.letter)[c.state.pos - 1];
            for lower in enumerate_paths(s, below, c.level - 1) {
                let mut key = path_key(space, &lower);
                key.push(y);
                key.extend_from_slice(&top_key[c.level..]);
                out.add(key, w.clone());
            }
        }
        out
    }
}

/// Markov path measure of a given depth: `start(x_1) prod K(x_i, x_{i+1})`,
/// enumerated over consistent walks.
pub fn markov_paths(space: &StateSpace, start: &[Scalar], k: &Kernel, depth: usize, budget: usize) -> Result<PathMeasure, MeasureError> {
    let mut layer: Vec<(Vec<usize>, Scalar)> = (0..space.len())
        .filter(|&x| !start[x].is_exact_zero())
        .map(|x| (vec![x], start[x].clone()))
        .collect();
    for _ in 1..depth {
        let mut next = Vec::new();
        for (path, w) in &layer {
            let last = *path.last().unwrap();
            for z in 0..space.len() {
                if space.edge(last, z) && !k.get(last, z).is_exact_zero() {
                    let mut p = path.clone();
                    p.push(z);
                    next.push((p, w * k.get(last, z)));
                }
            }
            if next.len() > budget {
                return Err(MeasureError::Budget { atoms: format!(">{}", next.len()), budget });
            }
        }
        layer = next;
    }
    let mut out = PathMeasure::default();
    for (p, w) in layer {
        out.add(p, w);
    }
    Ok(out)
}

/// Total variation distance `1/2 sum |mu - nu|` over the union of supports.
pub fn tv_distance(mu: &PathMeasure, nu: &PathMeasure) -> Scalar {
    let mut keys: Vec<&Vec<usize>> = mu.atoms.keys().chain(nu.atoms.keys()).collect();
    keys.sort();
    keys.dedup();
    let zero = Scalar::zero();
    let mut total = Scalar::zero();
    for k in keys {
        let d = mu.atoms.get(k).unwrap_or(&zero) - nu.atoms.get(k).unwrap_or(&zero);
        total = total
            + match d {
                Scalar::Exact(q) => Scalar::Exact(q.abs()),
                Scalar::Float(z) => Scalar::float(z.norm()),
            };
    }
    total / Scalar::int(2)
}

/// `int f dn = sum_x m(x) f_check(x)`, the drift of the Birkhoff sums.
pub fn drift(kernels: &LimitKernels, fcheck: &[Scalar]) -> Scalar {
    kernels.m.iter().zip(fcheck).map(|(a, b)| a * b).sum()
}

/// Samples a walk of `length` states starting at `start`.
pub fn sample_path<R: Rng>(sampler: &Sampler, start: usize, length: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut x = start;
    out.push(x);
    for _ in 1..length {
        x = sampler.step(x, rng);
        out.push(x);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EntranceLaw {
    /// The entrance law on states.
    pub a: Vec<Scalar>,
    /// `sum_q sum_{j < kappa_q} sigma_hat(rho_q, j) lambda^{-q}`, with
    /// `rho_hat` normalised to total mass one.
    pub r: Scalar,
    /// Mixture weights `(q, state, weight)` with `sum weight = 1`.
    pub mixture: Vec<(usize, usize, Scalar)>,
    pub truncation_depth: usize,
}

/// Entrance law and blow-up normaliser for a limiting reversed coding `z`.
/// The series is cut at the first `q` with `lambda^{1-q} < 1e-15`.
pub fn entrance_law_a(space: &StateSpace, lifted: &LiftedPf, z: &ReversedPath) -> Result<EntranceLaw, MeasureError> {
    let norm = lifted.rho_normalised();
    let lam = &norm.lambda;
    let lam_f = lam.re();
    let mut qmax = 1;
    while lam_f.powi(1 - qmax as i32) >= 1e-15 {
        qmax += 1;
    }
    let qmax = qmax.min(z.digits.len().max(1));
    let mut a = vec![Scalar::zero(); space.len()];
    let mut r = Scalar::zero();
    let mut mixture = Vec::new();
    let mut pow = lam.recip();
    for q in 1..=qmax {
        let d = z.digit(q);
        for j in 1..d.pos {
            let y = space.index(State { letter: d.letter, pos: j });
            let w = &norm.sigma_hat[y] * &pow;
            a[y] = &a[y] + &w;
            r = &r + &w;
            mixture.push((q, y, w));
        }
        pow = &pow / lam;
    }
    if mixture.is_empty() {
        return Err(MeasureError::DegenerateEntrance);
    }
    let a = a.iter().map(|x| x / &r).collect();
    let mixture = mixture.into_iter().map(|(q, y, w)| (q, y, &w / &r)).collect();
    Ok(EntranceLaw { a, r, mixture, truncation_depth: qmax })
}

/// Converts an exact scalar measure to `f64` weights.
pub fn to_f64(mu: &[Scalar]) -> Vec<f64> {
    mu.iter().map(Scalar::re).collect()
}

pub fn scalar_to_f64(x: &Scalar) -> f64 {
    match x {
        Scalar::Exact(q) => q.to_f64().unwrap_or_else(|| crate::scalar::rat_to_f64(q)),
        Scalar::Float(z) => z.re,
    }
}
