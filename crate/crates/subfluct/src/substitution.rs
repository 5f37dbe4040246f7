//! Substitutions on small alphabets: parsing, incidence matrices,
//! primitivity, fixed points and Birkhoff sums.

use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

/// Index of a letter in the alphabet (first-appearance order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Letter(pub u8);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type Word = Vec<Letter>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty substitution text")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("letter '{letter}' has two rules (second at offset {offset})")]
    DuplicateRule { letter: char, offset: usize },
    #[error("letter '{letter}' at offset {offset} has no rule")]
    UnknownLetter { letter: char, offset: usize },
    #[error("rule for '{letter}' at offset {offset} has an empty image")]
    EmptyImage { letter: char, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstitutionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("substitution is not primitive")]
    NotPrimitive,
    #[error("substitution is not growing (all images have length one)")]
    NotGrowing,
    #[error("no letter a and k with theta^k(a) starting with a and |theta^k(a)| > 1")]
    NoSeed,
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(char),
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    symbols: Vec<char>,
    rules: Vec<Word>,
}

fn is_letter_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

struct RawRule {
    lhs: char,
    lhs_offset: usize,
    rhs: Vec<(char, usize)>,
}

fn parse_rule(seg: &str, base: usize) -> Result<RawRule, ParseError> {
    let syntax = |offset: usize, message: &str| ParseError::Syntax { offset, message: message.to_string() };
    if seg.trim().is_empty() {
        return Err(syntax(base, "empty rule"));
    }
    let Some(eq) = seg.find('=') else {
        return Err(syntax(base, "expected '='"));
    };
    let (lhs_raw, rhs_raw) = (&seg[..eq], &seg[eq + 1..]);
    let lhs_start = lhs_raw.len() - lhs_raw.trim_start().len();
    let lhs = lhs_raw.trim();
    let mut lhs_chars = lhs.chars();
    let letter = match (lhs_chars.next(), lhs_chars.next()) {
        (Some(c), None) if is_letter_char(c) => c,
        (None, _) => return Err(syntax(base + eq, "missing letter before '='")),
        (Some(c), None) => return Err(syntax(base + lhs_start, &format!("'{c}' is not a letter"))),
        _ => return Err(syntax(base + lhs_start, "a letter must be a single character")),
    };
    let rhs_start = eq + 1 + (rhs_raw.len() - rhs_raw.trim_start().len());
    let rhs = rhs_raw.trim();
    if rhs.is_empty() {
        return Err(ParseError::EmptyImage { letter, offset: base + lhs_start });
    }
    let mut body = Vec::with_capacity(rhs.len());
    for (i, c) in rhs.char_indices() {
        if !is_letter_char(c) {
            return Err(syntax(base + rhs_start + i, &format!("unexpected '{c}' in image")));
        }
        body.push((c, base + rhs_start + i));
    }
    Ok(RawRule { lhs: letter, lhs_offset: base + lhs_start, rhs: body })
}

fn split_with_offsets<'a>(text: &'a str, sep: &[char]) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if sep.contains(&c) {
            out.push((start, &text[start..i]));
            start = i + c.len_utf8();
        }
    }
    out.push((start, &text[start..]));
    out
}

impl Substitution {
    /// Parses `rule (";" rule)*` with `rule := letter "=" word`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let segments = split_with_offsets(text, &[';']);
        Self::from_segments(segments)
    }

    /// File form: one rule per line (blank lines are skipped; `;` also
    /// separates rules).
    pub fn parse_file(text: &str) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let segments = split_with_offsets(text, &[';', '\n'])
            .into_iter()
            .filter(|(_, s)| !s.trim().is_empty())
            .collect();
        Self::from_segments(segments)
    }

    fn from_segments(segments: Vec<(usize, &str)>) -> Result<Self, ParseError> {
        let raw = segments
            .into_iter()
            .map(|(off, seg)| parse_rule(seg, off))
            .collect::<Result<Vec<_>, _>>()?;
        let mut symbols: Vec<char> = Vec::new();
        let mut note = |c: char| {
            if !symbols.contains(&c) {
                symbols.push(c);
            }
        };
        for r in &raw {
            note(r.lhs);
            for &(c, _) in &r.rhs {
                note(c);
            }
        }
        let mut rules: Vec<Option<Word>> = vec![None; symbols.len()];
        let index = |c: char| symbols.iter().position(|&s| s == c).unwrap();
        for r in &raw {
            let slot = &mut rules[index(r.lhs)];
            if slot.is_some() {
                return Err(ParseError::DuplicateRule { letter: r.lhs, offset: r.lhs_offset });
            }
            *slot = Some(r.rhs.iter().map(|&(c, _)| Letter(index(c) as u8)).collect());
        }
        for r in &raw {
            for &(c, off) in &r.rhs {
                if rules[index(c)].is_none() {
                    return Err(ParseError::UnknownLetter { letter: c, offset: off });
                }
            }
        }
        Ok(Substitution { symbols, rules: rules.into_iter().map(Option::unwrap).collect() })
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.size()).map(|i| Letter(i as u8))
    }

    pub fn symbol(&self, a: Letter) -> char {
        self.symbols[a.index()]
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn letter(&self, c: char) -> Option<Letter> {
        self.symbols.iter().position(|&s| s == c).map(|i| Letter(i as u8))
    }

    pub fn rule(&self, a: Letter) -> &[Letter] {
        &self.rules[a.index()]
    }

    pub fn word(&self, text: &str) -> Result<Word, SubstitutionError> {
        text.chars()
            .map(|c| self.letter(c).ok_or(SubstitutionError::UnknownSymbol(c)))
            .collect()
    }

    pub fn render(&self, w: &[Letter]) -> String {
        w.iter().map(|&a| self.symbol(a)).collect()
    }

    pub fn image(&self, w: &[Letter]) -> Word {
        w.iter().flat_map(|&a| self.rule(a).iter().copied()).collect()
    }

    pub fn power_image(&self, w: &[Letter], k: usize) -> Word {
        (0..k).fold(w.to_vec(), |acc, _| self.image(&acc))
    }

    pub fn max_rule_len(&self) -> usize {
        self.rules.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total number of (letter, position) pairs.
    pub fn state_count(&self) -> usize {
        self.rules.iter().map(Vec::len).sum()
    }

    pub fn is_growing(&self) -> bool {
        self.state_count() > self.size()
    }

    /// Fails unless the substitution is primitive and growing.
    pub fn validate(&self) -> Result<(), SubstitutionError> {
        if !is_primitive(self).primitive {
            return Err(SubstitutionError::NotPrimitive);
        }
        if !self.is_growing() {
            return Err(SubstitutionError::NotGrowing);
        }
        Ok(())
    }

    /// `|theta^i(a)|` for `i = 0..=depth` as exact integers.
    pub fn length_table(&self, depth: usize) -> Vec<Vec<BigUint>> {
        let mut table = vec![vec![BigUint::one(); self.size()]];
        for i in 1..=depth {
            let prev = &table[i - 1];
            let row = self
                .letters()
                .map(|a| self.rule(a).iter().map(|b| prev[b.index()].clone()).sum())
                .collect();
            table.push(row);
        }
        table
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .letters()
            .map(|a| format!("{}={}", self.symbol(a), self.render(self.rule(a))))
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl Serialize for Substitution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

pub fn abelianization(w: &[Letter], alphabet_size: usize) -> Vec<u64> {
    let mut v = vec![0u64; alphabet_size];
    for a in w {
        v[a.index()] += 1;
    }
    v
}

/// Incidence matrix: entry `[a][b]` counts occurrences of `a` in `theta(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThetaMatrix(pub Vec<Vec<u64>>);

impl ThetaMatrix {
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.0[a][b]
    }

    pub fn to_scalar(&self) -> crate::linalg::Matrix {
        self.0.iter().map(|r| r.iter().map(|&x| Scalar::int(x as i64)).collect()).collect()
    }

    pub fn to_bigint(&self) -> Vec<Vec<num_bigint::BigInt>> {
        self.0.iter().map(|r| r.iter().map(|&x| num_bigint::BigInt::from(x)).collect()).collect()
    }
}

pub fn theta_matrix(s: &Substitution) -> ThetaMatrix {
    let n = s.size();
    let mut m = vec![vec![0u64; n]; n];
    for b in s.letters() {
        for a in s.rule(b) {
            m[a.index()][b.index()] += 1;
        }
    }
    ThetaMatrix(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Primitivity {
    pub primitive: bool,
    /// Smallest `k` with `M^k > 0`, when primitive.
    pub exponent: Option<usize>,
}

/// Boolean power iteration up to the Wielandt-type bound `(n-1)n + 1`.
pub fn is_primitive(s: &Substitution) -> Primitivity {
    let m = theta_matrix(s);
    let n = m.size();
    let base: Vec<Vec<bool>> = m.0.iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect();
    let mut pow = base.clone();
    for k in 1..=((n - 1) * n + 1) {
        if pow.iter().all(|r| r.iter().all(|&x| x)) {
            return Primitivity { primitive: true, exponent: Some(k) };
        }
        pow = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|l| pow[i][l] && base[l][j])).collect())
            .collect();
    }
    Primitivity { primitive: false, exponent: None }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Seed {
    pub letter: Letter,
    pub k: usize,
    /// `theta^k(letter) = letter . tail`
    #[serde(skip)]
    pub tail: Word,
}

/// Smallest `k`, then first letter `a` in alphabet order, with
/// `theta^k(a)` starting with `a` and longer than one letter.
pub fn find_seed(s: &Substitution) -> Result<Seed, SubstitutionError> {
    let n = s.size();
    let limit = n * (n + 1) + 1;
    let lens = s.length_table(limit);
    for k in 1..=limit {
        for a in s.letters() {
            let mut first = a;
            for _ in 0..k {
                first = s.rule(first)[0];
            }
            if first == a && lens[k][a.index()] > BigUint::one() {
                let img = s.power_image(&[a], k);
                return Ok(Seed { letter: a, k, tail: img[1..].to_vec() });
            }
        }
    }
    Err(SubstitutionError::NoSeed)
}

/// Lazy one-sided fixed point `a . t . theta^k(t) . theta^2k(t) ...` where
/// `theta^k(a) = a . t`. Memory grows with the log of the position.
pub struct FixedPoint<'s> {
    sub: &'s Substitution,
    seed: Seed,
    head_done: bool,
    level: usize,
    tail_idx: usize,
    stack: Vec<(Letter, usize)>,
}

impl<'s> FixedPoint<'s> {
    pub fn new(sub: &'s Substitution, seed: Seed) -> Self {
        FixedPoint { sub, seed, head_done: false, level: 0, tail_idx: 0, stack: Vec::new() }
    }
}

impl Iterator for FixedPoint<'_> {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        if !self.head_done {
            self.head_done = true;
            return Some(self.seed.letter);
        }
        loop {
            if let Some((c, depth)) = self.stack.pop() {
                if depth == 0 {
                    return Some(c);
                }
                for &d in self.sub.rule(c).iter().rev() {
                    self.stack.push((d, depth - 1));
                }
                continue;
            }
            if self.tail_idx < self.seed.tail.len() {
                let c = self.seed.tail[self.tail_idx];
                self.tail_idx += 1;
                self.stack.push((c, self.seed.k * self.level));
            } else {
                self.level += 1;
                self.tail_idx = 0;
            }
        }
    }
}

pub fn fixed_point_prefix(s: &Substitution, seed: &Seed, n: usize) -> Word {
    FixedPoint::new(s, seed.clone()).take(n).collect()
}

/// `S_f(w)` for the whole word.
pub fn birkhoff_sum(f: &[Scalar], w: &[Letter]) -> Scalar {
    w.iter().map(|a| f[a.index()].clone()).sum()
}

/// Running sums `S_f(w_{<=n})` for `n = 1..=|w|`.
pub fn birkhoff_partial_sums(f: &[Scalar], w: &[Letter]) -> Vec<Scalar> {
    let mut acc = Scalar::zero();
    w.iter()
        .map(|a| {
            acc = &acc + &f[a.index()];
            acc.clone()
        })
        .collect()
}

/// Streaming float Birkhoff sums over any letter source.
pub struct BirkhoffStream<I> {
    letters: I,
    f: Vec<Complex64>,
    acc: Complex64,
}

impl<I: Iterator<Item = Letter>> BirkhoffStream<I> {
    pub fn new(letters: I, f: &[Scalar]) -> Self {
        BirkhoffStream { letters, f: f.iter().map(Scalar::to_c64).collect(), acc: Complex64::zero() }
    }
}

impl<I: Iterator<Item = Letter>> Iterator for BirkhoffStream<I> {
    type Item = Complex64;

    fn next(&mut self) -> Option<Complex64> {
        let a = self.letters.next()?;
        self.acc += self.f[a.index()];
        Some(self.acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_orders_by_first_appearance() {
        let s = Substitution::parse("b = ab ; a=ba").unwrap();
        assert_eq!(s.symbols(), &['b', 'a']);
        assert_eq!(s.to_string(), "b=ab;a=ba");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(Substitution::parse("a=ab;"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Substitution::parse("ab=a"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Substitution::parse("a=ac;b=a"), Err(ParseError::UnknownLetter { letter: 'c', offset: 3 })));
        assert!(matches!(Substitution::parse("a=b;a=a;b=a"), Err(ParseError::DuplicateRule { letter: 'a', .. })));
        assert!(matches!(Substitution::parse("a=;b=a"), Err(ParseError::EmptyImage { letter: 'a', .. })));
        assert!(matches!(Substitution::parse("a=a b"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Substitution::parse("   "), Err(ParseError::Empty)));
    }

    #[test]
    fn file_form_accepts_lines() {
        let s = Substitution::parse_file("a=ab\n\nb=a\n").unwrap();
        assert_eq!(s.to_string(), "a=ab;b=a");
    }

    #[test]
    fn fixed_point_stream_matches_iterated_images() {
        let s = Substitution::parse("a=ab;b=a").unwrap();
        let seed = find_seed(&s).unwrap();
        let w = fixed_point_prefix(&s, &seed, 200);
        let img = s.power_image(&[Letter(0)], 12);
        assert_eq!(w[..], img[..200]);
    }

    #[test]
    fn seed_with_period_two() {
        let s = Substitution::parse("a=ba;b=ab").unwrap();
        let seed = find_seed(&s).unwrap();
        assert_eq!((s.symbol(seed.letter), seed.k), ('a', 2));
        let w = fixed_point_prefix(&s, &seed, 64);
        assert_eq!(w[..], s.power_image(&[Letter(0)], 6)[..64]);
    }

    #[test]
    fn non_growing_is_rejected() {
        let s = Substitution::parse("a=a").unwrap();
        assert_eq!(s.validate(), Err(SubstitutionError::NotGrowing));
        let t = Substitution::parse("a=ab;b=b").unwrap();
        assert_eq!(t.validate(), Err(SubstitutionError::NotPrimitive));
    }
}
