//! Reduced and cyclically reduced words in a free group of rank `l`.
//!
//! Letters are encoded as `2 * generator + inverse_bit`, so the derived
//! ordering is `a < A < b < B < ...`. Canonical rotations of cyclic words are
//! taken with respect to that order, which makes conjugacy-class equality a
//! plain equality test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported rank: one ASCII letter per generator.
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("word is trivial")]
    EmptyWord,
    #[error("invalid character {0:?} in word")]
    InvalidChar(char),
    #[error("letter {letter:?} is outside the alphabet of rank {rank}")]
    OutOfAlphabet { letter: char, rank: usize },
    #[error("rank must lie in 1..={MAX_RANK}, got {0}")]
    InvalidRank(usize),
    #[error("word {0} is not cyclically reduced")]
    NotCyclicallyReduced(String),
}

/// The generating set of a free group `F_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    pub fn new(rank: usize) -> Result<Self, WordError> {
        if rank == 0 || rank > MAX_RANK {
            return Err(WordError::InvalidRank(rank));
        }
        Ok(Alphabet { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of letters, generators and inverses together.
    pub fn size(&self) -> usize {
        2 * self.rank
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.size() as u8).map(Letter)
    }

    pub fn contains(&self, x: Letter) -> bool {
        x.generator() < self.rank
    }

    /// Number of reduced words of length `t >= 1`: `2l (2l-1)^(t-1)`.
    pub fn reduced_word_count(&self, t: usize) -> u64 {
        if t == 0 {
            return 1;
        }
        let l = self.rank as u64;
        2 * l * (2 * l - 1).pow(t as u32 - 1)
    }

    /// Every reduced word of length `t`, in lexicographic order.
    pub fn reduced_words(&self, t: usize) -> Vec<Word> {
        let mut out = vec![Vec::new()];
        for _ in 0..t {
            let mut grown = Vec::with_capacity(out.len() * self.size());
            for w in &out {
                for x in self.letters() {
                    if w.last().map_or(true, |&y: &Letter| y != x.inverse()) {
                        let mut v = w.clone();
                        v.push(x);
                        grown.push(v);
                    }
                }
            }
            out = grown;
        }
        out.into_iter().map(Word).collect()
    }

    pub fn parse_word(&self, s: &str) -> Result<Word, WordError> {
        let w: Word = s.parse()?;
        self.check(&w)?;
        Ok(w)
    }

    pub fn check(&self, w: &Word) -> Result<(), WordError> {
        match w.letters().iter().find(|x| !self.contains(**x)) {
            Some(x) => Err(WordError::OutOfAlphabet {
                letter: x.to_char(),
                rank: self.rank,
            }),
            None => Ok(()),
        }
    }
}

/// A generator or the inverse of one.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        assert!(generator < MAX_RANK, "generator index out of range");
        Letter((generator as u8) << 1 | inverse as u8)
    }

    pub fn from_code(code: u8) -> Self {
        assert!((code as usize) < 2 * MAX_RANK);
        Letter(code)
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    /// The generator itself, with positive sign.
    #[inline]
    pub fn positive(self) -> Letter {
        Letter(self.0 & !1)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.generator() as u8) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Result<Letter, WordError> {
        if !c.is_ascii_alphabetic() {
            return Err(WordError::InvalidChar(c));
        }
        let g = (c.to_ascii_lowercase() as u8 - b'a') as usize;
        Ok(Letter::new(g, c.is_ascii_uppercase()))
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Free reduction of an arbitrary letter sequence.
pub fn reduce(raw: impl IntoIterator<Item = Letter>) -> Word {
    let mut out: Vec<Letter> = Vec::new();
    for x in raw {
        if out.last() == Some(&x.inverse()) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    Word(out)
}

/// A freely reduced word.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|x| x.inverse()).collect())
    }

    /// Product in the free group.
    pub fn mul(&self, other: &Word) -> Word {
        reduce(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn pow(&self, k: usize) -> Word {
        reduce(std::iter::repeat(self.0.iter().copied()).take(k).flatten())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(&x), Some(&y)) => self.0.len() == 1 || x != y.inverse(),
            _ => false,
        }
    }
}

impl From<Letter> for Word {
    fn from(x: Letter) -> Self {
        Word(vec![x])
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Parses letters and reduces. The empty string and `"1"` denote the identity.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "1" {
            return Ok(Word::empty());
        }
        let letters = s.chars().map(Letter::from_char).collect::<Result<Vec<_>, _>>()?;
        Ok(reduce(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for x in &self.0 {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index of the lexicographically least rotation (two-pointer minimum expression).
fn least_rotation(s: &[Letter]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = s[(i + k) % n];
        let b = s[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A conjugacy class: a cyclically reduced word stored in canonical rotation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CyclicWord(Vec<Letter>);

impl CyclicWord {
    /// Builds the canonical representative from any rotation of a cyclically
    /// reduced letter sequence.
    pub fn new(letters: Vec<Letter>) -> Result<Self, WordError> {
        Ok(Self::with_offset(letters)?.0)
    }

    /// Like [`CyclicWord::new`], also returning the rotation `r` such that
    /// canonical position `i` is input position `(i + r) % len`.
    pub fn with_offset(letters: Vec<Letter>) -> Result<(Self, usize), WordError> {
        let w = Word(letters);
        if w.is_empty() {
            return Err(WordError::EmptyWord);
        }
        if w.0.windows(2).any(|p| p[0] == p[1].inverse()) || !w.is_cyclically_reduced() {
            return Err(WordError::NotCyclicallyReduced(w.to_string()));
        }
        let r = least_rotation(&w.0);
        let mut v = w.0;
        v.rotate_left(r);
        Ok((CyclicWord(v), r))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter at cyclic position `i`.
    #[inline]
    pub fn at(&self, i: usize) -> Letter {
        self.0[i % self.0.len()]
    }

    pub fn inverse(&self) -> CyclicWord {
        CyclicWord::new(self.0.iter().rev().map(|x| x.inverse()).collect())
            .expect("inverse of a cyclically reduced word is cyclically reduced")
    }

    pub fn to_word(&self) -> Word {
        Word(self.0.clone())
    }

    /// Shortest `u` with `self = u^k`, returned with `k`.
    pub fn root(&self) -> (CyclicWord, usize) {
        let n = self.0.len();
        for d in 1..=n {
            if n % d == 0 && (0..n).all(|i| self.0[i] == self.0[i % d]) {
                let root = CyclicWord::new(self.0[..d].to_vec()).expect("root is cyclically reduced");
                return (root, n / d);
            }
        }
        unreachable!()
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.0 {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CyclicWord({self})")
    }
}

impl FromStr for CyclicWord {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters = s.trim().chars().map(Letter::from_char).collect::<Result<Vec<_>, _>>()?;
        CyclicWord::new(letters)
    }
}

impl Serialize for CyclicWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CyclicWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Splits `w = u c u^-1` with `c` cyclically reduced, returning `c` in
/// canonical rotation together with the matching conjugator.
pub fn cyclic_reduce(w: &Word) -> Result<(CyclicWord, Word), WordError> {
    let x = w.letters();
    if x.is_empty() {
        return Err(WordError::EmptyWord);
    }
    let mut i = 0;
    let mut j = x.len();
    while j - i >= 2 && x[i] == x[j - 1].inverse() {
        i += 1;
        j -= 1;
    }
    let (core, r) = CyclicWord::with_offset(x[i..j].to_vec())?;
    // w = u c u^-1 with c = p q, canonical q p; so w = (u p) (q p) (u p)^-1.
    let conj = reduce(x[..i].iter().chain(x[i..i + r].iter()).copied());
    Ok((core, conj))
}

/// Counts of length-`T` subwords read cyclically around a collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordCensus {
    pub t: usize,
    pub counts: BTreeMap<Word, u64>,
    pub total_length: u64,
}

impl SubwordCensus {
    pub fn count(&self, sigma: &Word) -> u64 {
        self.counts.get(sigma).copied().unwrap_or(0)
    }
}

/// Pooled cyclic subword census. Components shorter than `t` wrap around
/// themselves as often as needed.
pub fn census(chain: &[CyclicWord], t: usize) -> SubwordCensus {
    assert!(t >= 1, "subword length must be positive");
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for w in chain {
        let n = w.len();
        total += n as u64;
        for start in 0..n {
            let sigma = Word((0..t).map(|k| w.at(start + k)).collect());
            *counts.entry(sigma).or_insert(0) += 1;
        }
    }
    SubwordCensus {
        t,
        counts,
        total_length: total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudorandomParams {
    pub t: usize,
    pub epsilon: f64,
}

impl PseudorandomParams {
    pub fn new(t: usize, epsilon: f64) -> Self {
        assert!(t >= 1 && epsilon > 0.0, "need T >= 1 and epsilon > 0");
        PseudorandomParams { t, epsilon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudorandomReport {
    pub pass: bool,
    /// The subword whose normalized frequency is farthest from 1.
    pub worst: Word,
    pub worst_ratio: f64,
}

/// Tests `1 - eps <= C_sigma / length * (2l)(2l-1)^(T-1) <= 1 + eps` for every
/// reduced `sigma` of length `T`, scoring the collection by pooled counts.
pub fn is_pseudorandom(
    chain: &[CyclicWord],
    alphabet: Alphabet,
    params: PseudorandomParams,
) -> PseudorandomReport {
    let c = census(chain, params.t);
    let scale = alphabet.reduced_word_count(params.t) as f64;
    let total = c.total_length.max(1) as f64;
    let mut worst = Word::empty();
    let mut worst_ratio = f64::NAN;
    let mut pass = true;
    for sigma in alphabet.reduced_words(params.t) {
        let ratio = c.count(&sigma) as f64 / total * scale;
        if ratio < 1.0 - params.epsilon || ratio > 1.0 + params.epsilon {
            pass = false;
        }
        if worst_ratio.is_nan() || (ratio - 1.0).abs() > (worst_ratio - 1.0).abs() {
            worst = sigma;
            worst_ratio = ratio;
        }
    }
    PseudorandomReport {
        pass,
        worst,
        worst_ratio,
    }
}

/// Signed letter counts per generator.
pub fn abelianize(w: &[Letter], alphabet: Alphabet) -> Vec<i64> {
    let mut v = vec![0i64; alphabet.rank()];
    for x in w {
        if x.generator() < v.len() {
            v[x.generator()] += if x.is_inverse() { -1 } else { 1 };
        }
    }
    v
}

pub fn is_homologically_trivial<'a, I>(chain: I, alphabet: Alphabet) -> bool
where
    I: IntoIterator<Item = &'a [Letter]>,
{
    let mut sum = vec![0i64; alphabet.rank()];
    for w in chain {
        for (s, d) in sum.iter_mut().zip(abelianize(w, alphabet)) {
            *s += d;
        }
    }
    sum.iter().all(|&s| s == 0)
}

/// Uniform reduced word of length `n`.
pub fn sample_reduced_word<R: Rng + ?Sized>(n: usize, alphabet: Alphabet, rng: &mut R) -> Word {
    let size = alphabet.size() as u8;
    let mut out: Vec<Letter> = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == 0 {
            Letter(rng.gen_range(0..size))
        } else {
            // Uniform over the 2l-1 letters that do not cancel the previous one.
            let forbidden = out[i - 1].inverse().0;
            let mut c = rng.gen_range(0..size - 1);
            if c >= forbidden {
                c += 1;
            }
            Letter(c)
        };
        out.push(x);
    }
    Word(out)
}
