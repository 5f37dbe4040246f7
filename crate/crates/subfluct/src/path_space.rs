//! Path space of the prefix automaton.
//!
//! A state `(b, k)` is position `k` (1-based) of the image `theta(b)`. A
//! finite path `x_1 .. x_p` (least significant first) is consistent when
//! `x_i.letter = theta(x_{i+1}.letter)_{x_{i+1}.pos}`; the top letter
//! `x_p.letter` plays the role of the seed. Positions `1..=|theta^p(a)|` in
//! `theta^p(a)` correspond one-to-one to consistent paths with top letter `a`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linalg;
use crate::scalar::Scalar;
use crate::substitution::{theta_matrix, Letter, Substitution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("position {n} outside 1..={max}")]
    OutOfRange { n: String, max: String },
    #[error("path is inconsistent at level {level}")]
    Inconsistent { level: usize },
    #[error("path is maximal and has no successor")]
    Maximal,
    #[error("f is not a left eigenvector for the given eigenvalue (residual {0:e})")]
    NotEigenvector(f64),
    #[error("f has {got} values for an alphabet of size {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State {
    pub letter: Letter,
    /// 1-based position inside `theta(letter)`.
    pub pos: usize,
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<State>,
    offsets: Vec<usize>,
    emitted: Vec<Letter>,
    symbols: Vec<char>,
}

pub fn build_state_space(s: &Substitution) -> StateSpace {
    let mut states = Vec::with_capacity(s.state_count());
    let mut offsets = Vec::with_capacity(s.size());
    let mut emitted = Vec::with_capacity(s.state_count());
    for a in s.letters() {
        offsets.push(states.len());
        for (j, &c) in s.rule(a).iter().enumerate() {
            states.push(State { letter: a, pos: j + 1 });
            emitted.push(c);
        }
    }
    StateSpace { states, offsets, emitted, symbols: s.symbols().to_vec() }
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> State {
        self.states[i]
    }

    pub fn index(&self, x: State) -> usize {
        self.offsets[x.letter.index()] + x.pos - 1
    }

    /// The letter written at this state: `theta(b)_k`.
    pub fn emitted(&self, i: usize) -> Letter {
        self.emitted[i]
    }

    /// `hat m^1[x][y] = [x.letter = theta(y.letter)_{y.pos}]`.
    pub fn edge(&self, x: usize, y: usize) -> bool {
        self.states[x].letter == self.emitted[y]
    }

    /// States whose letter is `a`.
    pub fn states_of(&self, a: Letter) -> std::ops::Range<usize> {
        let start = self.offsets[a.index()];
        let end = self.offsets.get(a.index() + 1).copied().unwrap_or(self.states.len());
        start..end
    }

    pub fn render(&self, i: usize) -> String {
        let x = self.states[i];
        format!("({},{})", self.symbols[x.letter.index()], x.pos)
    }
}

/// `hat m^(p)` as exact integers, with its column sums.
#[derive(Clone, Debug)]
pub struct SsimPower {
    pub depth: usize,
    pub entries: Vec<Vec<BigUint>>,
    pub column_sums: Vec<BigUint>,
}

impl SsimPower {
    pub fn get(&self, x: usize, y: usize) -> &BigUint {
        &self.entries[x][y]
    }
}

pub fn ssim_power(space: &StateSpace, p: usize) -> SsimPower {
    let n = space.len();
    let mut cur: Vec<Vec<BigUint>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }).collect())
        .collect();
    for _ in 0..p {
        // right-multiply by hat m^1: (cur m1)[x][y] = sum_z cur[x][z] [z.letter = emitted(y)]
        cur = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| space.states_of(space.emitted(y)).map(|z| &cur[x][z]).sum())
                    .collect()
            })
            .collect();
    }
    let column_sums = (0..n).map(|y| (0..n).map(|x| &cur[x][y]).sum()).collect();
    SsimPower { depth: p, entries: cur, column_sums }
}

/// A finite path, least significant digit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Path {
    pub digits: Vec<State>,
}

impl Path {
    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn top(&self) -> Option<State> {
        self.digits.last().copied()
    }

    pub fn render(&self, s: &Substitution) -> String {
        self.digits.iter().map(|x| format!("({},{})", s.symbol(x.letter), x.pos)).collect()
    }
}

/// Exact word-length tables used by the coding maps.
#[derive(Clone, Debug)]
pub struct Coder<'s> {
    sub: &'s Substitution,
    lens: Vec<Vec<BigUint>>,
}

impl<'s> Coder<'s> {
    pub fn new(sub: &'s Substitution, depth: usize) -> Self {
        Coder { sub, lens: sub.length_table(depth) }
    }

    fn ensure(&mut self, depth: usize) {
        if self.lens.len() <= depth {
            self.lens = self.sub.length_table(depth.max(2 * self.lens.len()));
        }
    }

    /// `|theta^i(b)|`.
    pub fn len(&mut self, i: usize, b: Letter) -> &BigUint {
        self.ensure(i);
        &self.lens[i][b.index()]
    }

    pub fn encode(&mut self, a: Letter, p: usize, n: &BigUint) -> Result<Path, PathError> {
        self.ensure(p);
        let max = &self.lens[p][a.index()];
        if n.is_zero() || n > max {
            return Err(PathError::OutOfRange { n: n.to_string(), max: max.to_string() });
        }
        let mut r = n - 1u32;
        let mut digits = vec![State { letter: a, pos: 1 }; p];
        let mut v = a;
        for i in (1..=p).rev() {
            let mut k = 0;
            for (j, &c) in self.sub.rule(v).iter().enumerate() {
                let size = &self.lens[i - 1][c.index()];
                if &r < size {
                    k = j + 1;
                    break;
                }
                r -= size;
            }
            debug_assert!(k > 0);
            digits[i - 1] = State { letter: v, pos: k };
            v = self.sub.rule(v)[k - 1];
        }
        Ok(Path { digits })
    }

    pub fn decode(&mut self, a: Letter, path: &Path) -> Result<BigUint, PathError> {
        let p = path.depth();
        self.ensure(p);
        check_consistent(self.sub, a, path)?;
        let mut n = BigUint::one();
        for (i, x) in path.digits.iter().enumerate() {
            for &c in &self.sub.rule(x.letter)[..x.pos - 1] {
                n += &self.lens[i][c.index()];
            }
        }
        Ok(n)
    }

    /// Depth `p` is minimal with `|theta^{p-1}(a)| < N <= |theta^p(a)|`
    /// (so `N = 1` gives depth 0). Digits are stored most significant first,
    /// followed implicitly by `(a,1)` forever.
    pub fn encode_reversed(&mut self, a: Letter, n: &BigUint) -> Result<ReversedPath, PathError> {
        if n.is_zero() {
            return Err(PathError::OutOfRange { n: "0".into(), max: "inf".into() });
        }
        let mut p = 0;
        loop {
            self.ensure(p);
            if n <= &self.lens[p][a.index()] {
                break;
            }
            if p > 64 + 8 * n.bits() as usize {
                return Err(PathError::OutOfRange { n: n.to_string(), max: "non-growing".into() });
            }
            p += 1;
        }
        let path = self.encode(a, p, n)?;
        Ok(ReversedPath { digits: path.digits.into_iter().rev().collect(), pad: State { letter: a, pos: 1 } })
    }
}

pub fn check_consistent(s: &Substitution, a: Letter, path: &Path) -> Result<(), PathError> {
    let p = path.depth();
    for (i, x) in path.digits.iter().enumerate() {
        if x.pos == 0 || x.pos > s.rule(x.letter).len() {
            return Err(PathError::Inconsistent { level: i + 1 });
        }
        let expected = if i + 1 == p {
            a
        } else {
            let up = path.digits[i + 1];
            s.rule(up.letter)[up.pos - 1]
        };
        if x.letter != expected {
            return Err(PathError::Inconsistent { level: i + 1 });
        }
    }
    Ok(())
}

pub fn encode(s: &Substitution, a: Letter, p: usize, n: &BigUint) -> Result<Path, PathError> {
    Coder::new(s, p).encode(a, p, n)
}

pub fn decode(s: &Substitution, a: Letter, path: &Path) -> Result<BigUint, PathError> {
    Coder::new(s, path.depth()).decode(a, path)
}

pub fn encode_reversed(s: &Substitution, a: Letter, n: &BigUint) -> Result<ReversedPath, PathError> {
    Coder::new(s, 8).encode_reversed(a, n)
}

/// A reversed coding: finitely many digits (most significant first) and an
/// infinite tail of padding states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReversedPath {
    pub digits: Vec<State>,
    pub pad: State,
}

impl ReversedPath {
    /// The `q`-th digit, 1-based.
    pub fn digit(&self, q: usize) -> State {
        self.digits.get(q - 1).copied().unwrap_or(self.pad)
    }

    pub fn prefix(&self, len: usize) -> Vec<State> {
        (1..=len).map(|q| self.digit(q)).collect()
    }
}

impl fmt::Display for ReversedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.digits {
            write!(f, "({},{})", x.letter.0, x.pos)?;
        }
        write!(f, "({},{})...", self.pad.letter.0, self.pad.pos)
    }
}

/// Next path in the adic order: the lowest digit that can be incremented is
/// incremented (`k_l < |theta(v_l)|`) and all lower digits restart at
/// position 1 with letters forced by consistency.
pub fn adic_successor(s: &Substitution, path: &Path) -> Result<Path, PathError> {
    let Some(l) = path.digits.iter().position(|x| x.pos < s.rule(x.letter).len()) else {
        return Err(PathError::Maximal);
    };
    let mut digits = path.digits.clone();
    digits[l].pos += 1;
    for i in (0..l).rev() {
        let up = digits[i + 1];
        digits[i] = State { letter: s.rule(up.letter)[up.pos - 1], pos: 1 };
    }
    Ok(Path { digits })
}

/// Successor under the literal rule that tests `k_l < |theta(v_{l+1})|`
/// instead of `|theta(v_l)|`. Returns `None` when that rule finds no digit or
/// produces an inconsistent path. Used only to count disagreements.
pub fn adic_successor_literal(s: &Substitution, a: Letter, path: &Path) -> Option<Path> {
    let p = path.depth();
    let bound = |i: usize| {
        let parent = if i + 1 < p { path.digits[i + 1].letter } else { a };
        s.rule(parent).len()
    };
    let l = (0..p).find(|&i| path.digits[i].pos < bound(i))?;
    let mut digits = path.digits.clone();
    digits[l].pos += 1;
    if digits[l].pos > s.rule(digits[l].letter).len() {
        return None;
    }
    for i in (0..l).rev() {
        let up = digits[i + 1];
        digits[i] = State { letter: s.rule(up.letter)[up.pos - 1], pos: 1 };
    }
    let out = Path { digits };
    check_consistent(s, a, &out).ok().map(|_| out)
}

/// Number of non-maximal positions `n` in `theta^p(a)` where the literal
/// rule disagrees with decode/+1/encode.
pub fn literal_rule_disagreements(s: &Substitution, a: Letter, p: usize) -> usize {
    let mut coder = Coder::new(s, p);
    let total = coder.len(p, a).clone();
    let mut n = BigUint::one();
    let mut count = 0;
    while n < total {
        let x = coder.encode(a, p, &n).unwrap();
        let want = coder.encode(a, p, &(&n + 1u32)).unwrap();
        if adic_successor_literal(s, a, &x).as_ref() != Some(&want) {
            count += 1;
        }
        n += 1u32;
    }
    count
}

/// All depth-`p` paths with top letter `a`, in order of position.
pub fn enumerate_paths(s: &Substitution, a: Letter, p: usize) -> Vec<Path> {
    let mut out = Vec::new();
    let mut cur = Path { digits: Vec::with_capacity(p) };
    // lowest path: all positions 1
    let mut v = a;
    let mut top_down = Vec::with_capacity(p);
    for _ in 0..p {
        top_down.push(State { letter: v, pos: 1 });
        v = s.rule(v)[0];
    }
    cur.digits = top_down.into_iter().rev().collect();
    loop {
        out.push(cur.clone());
        match adic_successor(s, &cur) {
            Ok(next) => cur = next,
            Err(_) => break,
        }
    }
    out
}

/// Per-state values `f_check(b,k) = S_f(theta(b)_{<k})` together with the
/// eigenvalue, so that `S_f(u_{<n})` is a geometric series along the path.
#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffLift {
    pub lambda_f: Scalar,
    pub fcheck: Vec<Scalar>,
}

/// Checks `f M = lambda_f f` (exactly, or to `1e-9` relative for floats).
pub fn check_eigenfunction(s: &Substitution, f: &[Scalar], lambda_f: &Scalar) -> Result<(), PathError> {
    if f.len() != s.size() {
        return Err(PathError::Dimension { expected: s.size(), got: f.len() });
    }
    let m = theta_matrix(s).to_scalar();
    let fm = linalg::vec_mat(f, &m);
    let scale = f.iter().map(Scalar::abs).fold(0.0, f64::max).max(1.0) * lambda_f.abs().max(1.0);
    let exact = f.iter().all(Scalar::is_exact) && lambda_f.is_exact();
    let res = fm.iter().zip(f).map(|(l, r)| (l - &(lambda_f * r)).abs()).fold(0.0, f64::max);
    let ok = if exact {
        fm.iter().zip(f).all(|(l, r)| (l - &(lambda_f * r)).is_exact_zero())
    } else {
        res <= 1e-9 * scale
    };
    if ok {
        Ok(())
    } else {
        Err(PathError::NotEigenvector(res))
    }
}

impl BirkhoffLift {
    pub fn new(s: &Substitution, space: &StateSpace, f: &[Scalar], lambda_f: &Scalar) -> Result<Self, PathError> {
        check_eigenfunction(s, f, lambda_f)?;
        let fcheck = space
            .states()
            .iter()
            .map(|x| s.rule(x.letter)[..x.pos - 1].iter().map(|c| f[c.index()].clone()).sum())
            .collect();
        Ok(BirkhoffLift { lambda_f: lambda_f.clone(), fcheck })
    }

    /// `sum_i lambda_f^{i-1} f_check(x_i)`, which equals `S_f` of the prefix
    /// of `theta^p(a)` strictly before the coded position.
    pub fn eval(&self, space: &StateSpace, path: &Path) -> Scalar {
        let mut acc = Scalar::zero();
        let mut pow = Scalar::one();
        for x in &path.digits {
            acc = acc + &pow * &self.fcheck[space.index(*x)];
            pow = &pow * &self.lambda_f;
        }
        acc
    }
}

/// `S_f(u_{<n})` for the position coded by `path`, from the path alone.
pub fn renormalized_birkhoff(s: &Substitution, f: &[Scalar], lambda_f: &Scalar, path: &Path) -> Result<Scalar, PathError> {
    let space = build_state_space(s);
    Ok(BirkhoffLift::new(s, &space, f, lambda_f)?.eval(&space, path))
}
